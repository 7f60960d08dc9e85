"""Command-line interface: solve, quadric, gauss-lucas, morse, density.

Output is a single self-describing structured-text document (or a flat
tabular export); identical configuration and seed produce byte-identical
output.  Exit codes: 0 ok, 1 input error, 2 solver incomplete, 3 certificate
violation.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .critical import SolveOptions, find_critical_points
from .gauss_lucas import (
    HemisphereViolation,
    SolverIncomplete,
    gauss_lucas_certify,
    sample_hemisphere_section,
)
from .morse import (
    MorseSeries,
    counting_series,
    morse_inequality_check,
    poincare_cpn,
    quadric_middle_betti,
    quadric_zero_poincare,
)
from .quadric import (
    NotGeneric,
    matrix_from_section,
    quadric_critical_set,
    section_from_matrix,
    takagi,
)
from .sections import Section, load_section, random_section
from .geometry import fs_distance

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCOMPLETE = 2
EXIT_VIOLATION = 3


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_point(p) -> str:
    return " ".join(f"{c.real:.17g} {c.imag:.17g}" for c in p.coords)


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def line(self, text: str = ""):
        self.lines.append(text)

    def emit(self, out_path: str | None):
        text = "\n".join(self.lines) + "\n"
        if out_path:
            with open(out_path, "w", encoding="ascii") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _header(w: _Writer, command: str, args, keys: list[str]):
    w.line("# cpcrit report")
    w.line(f"version: {__version__}")
    w.line(f"command: {command}")
    for k in keys:
        w.line(f"{k}: {getattr(args, k.replace('-', '_'))}")


def _solve_opts(args) -> SolveOptions:
    return SolveOptions(residual_tol=args.residual_tol, dedup_tol=args.dedup_tol,
                        degen_tol=args.degen_tol)


def _load_or_random(args) -> Section:
    if args.section:
        return load_section(args.section)
    if args.n is None or args.m is None:
        raise ValueError("need --section FILE or both --n and --m (with --seed)")
    return random_section(args.n, args.m, args.seed)


def _report_lines(w: _Writer, report, fmt: str):
    if fmt == "tabular":
        w.line("kind\tindex\tresidual\tmargin\tmultiplicity\tcoords")
        for c in report.criticals:
            idx = "unknown" if c.index is None else str(c.index)
            w.line(f"critical\t{idx}\t{_fmt(c.residual)}\t{_fmt(c.nondeg_margin)}"
                   f"\t{c.multiplicity_hint}\t{_fmt_point(c.point)}")
        for p, mult in report.zeros:
            w.line(f"zero\t-\t-\t-\t{mult}\t{_fmt_point(p)}")
        return
    w.line("--- body ---")
    for c in report.criticals:
        idx = "unknown" if c.index is None else str(c.index)
        w.line(f"critical index={idx} residual={_fmt(c.residual)} "
               f"margin={_fmt(c.nondeg_margin)} multiplicity={c.multiplicity_hint} "
               f"point=[{_fmt_point(c.point)}]")
    for p, mult in report.zeros:
        w.line(f"zero multiplicity={mult} point=[{_fmt_point(p)}]")
    w.line("--- summary ---")
    w.line(f"criticals: {len(report.criticals)}")
    w.line(f"zeros: {len(report.zeros)}")
    w.line(f"starts_used: {report.starts_used}")
    w.line(f"certified_complete: {str(report.certified_complete).lower()} ({report.certified_reason})")
    for warning in report.warnings:
        w.line(f"warning: {warning}")


def cmd_solve(args) -> int:
    w = _Writer()
    try:
        s = _load_or_random(args)
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _header(w, "solve", args, ["n", "m", "seed", "residual-tol", "dedup-tol", "degen-tol"])
    report = find_critical_points(s, _solve_opts(args))
    _report_lines(w, report, args.format)
    code = EXIT_OK
    if s.n == 1 and not report.certified_complete and "FAILS" in report.certified_reason:
        code = EXIT_INCOMPLETE
    w.line(f"exit: {code}")
    w.emit(args.out)
    return code


def _load_matrix(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [float(x) for x in line.split()]
            if len(vals) % 2:
                raise ValueError("matrix rows must hold re/im pairs")
            rows.append([complex(vals[2 * i], vals[2 * i + 1])
                         for i in range(len(vals) // 2)])
    C = np.array(rows, dtype=np.complex128)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("matrix file is not square")
    return C


def cmd_quadric(args) -> int:
    w = _Writer()
    try:
        if args.matrix:
            C = _load_matrix(args.matrix)
        elif args.n is not None:
            rng = np.random.default_rng(args.seed)
            G = rng.standard_normal((args.n + 1, args.n + 1)) \
                + 1j * rng.standard_normal((args.n + 1, args.n + 1))
            C = G + G.T
        else:
            raise ValueError("need --matrix FILE or --n (with --seed)")
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _header(w, "quadric", args, ["n", "seed", "verify"])
    q = takagi(C)
    w.line("--- body ---")
    w.line("takagi: " + " ".join(_fmt(a) for a in q.a))
    w.line(f"strict: {str(q.strict).lower()}")
    code = EXIT_OK
    try:
        analytic = quadric_critical_set(q)
        for p, idx in analytic:
            w.line(f"critical index={idx} point=[{_fmt_point(p)}]")
        if args.verify:
            s = section_from_matrix(C)
            report = find_critical_points(s, _solve_opts(args))
            matched = 0
            for p, idx in analytic:
                hits = [c for c in report.criticals
                        if fs_distance(c.point, p) <= args.dedup_tol and c.index == idx]
                matched += bool(hits)
            extras = len(report.criticals) - len(analytic)
            ok = matched == len(analytic) and extras == 0
            w.line("--- summary ---")
            w.line(f"verify: matched {matched}/{len(analytic)}, extras {extras}, "
                   f"agreement {str(ok).lower()}")
            if not ok:
                code = EXIT_INCOMPLETE
    except NotGeneric as exc:
        w.line(f"critical-set: not generic ({exc})")
    w.line(f"exit: {code}")
    w.emit(args.out)
    return code


def _gauss_lucas_trial(params):
    m, seed, trial, residual_tol = params
    s, attempts = sample_hemisphere_section(m, seed, trial)
    opts = SolveOptions(residual_tol=residual_tol)
    try:
        cert = gauss_lucas_certify(s, opts)
    except SolverIncomplete as exc:
        return (trial, attempts, "incomplete", str(exc), 0, 0)
    verdicts = ";".join(f"{lc.critical.index}:{lc.verdict}" for lc in cert.criticals)
    status = "ok" if cert.theorem_holds else "violation"
    return (trial, attempts, status, verdicts,
            int(cert.has_index2_in_Pinf), int(cert.has_critical_in_P))


def cmd_gauss_lucas(args) -> int:
    w = _Writer()
    _header(w, "gauss-lucas", args, ["n", "m", "seed", "trials", "jobs"])
    if args.n not in (None, 1):
        print("input error: certificates need n = 1", file=sys.stderr)
        return EXIT_INPUT
    if args.section:
        try:
            s = load_section(args.section)
        except (OSError, ValueError) as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        try:
            cert = gauss_lucas_certify(s, _solve_opts(args))
        except HemisphereViolation as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        except SolverIncomplete:
            w.line("--- summary ---")
            w.line("status: solver incomplete")
            w.line(f"exit: {EXIT_INCOMPLETE}")
            w.emit(args.out)
            return EXIT_INCOMPLETE
        w.line("--- body ---")
        for lc in cert.criticals:
            idx = "unknown" if lc.critical.index is None else lc.critical.index
            w.line(f"critical index={idx} verdict={lc.verdict} "
                   f"point=[{_fmt_point(lc.critical.point)}]")
        w.line("--- summary ---")
        w.line(f"P: {cert.P.kind} with {len(cert.P.vertices)} vertices")
        w.line(f"theorem_holds: {str(cert.theorem_holds).lower()}")
        w.line(f"index2_in_Pinf: {str(cert.has_index2_in_Pinf).lower()}")
        w.line(f"critical_in_P: {str(cert.has_critical_in_P).lower()}")
        code = EXIT_OK if cert.theorem_holds else EXIT_VIOLATION
        w.line(f"exit: {code}")
        w.emit(args.out)
        return code
    if args.m is None:
        print("input error: need --section or --m for a campaign", file=sys.stderr)
        return EXIT_INPUT
    params = [(args.m, args.seed, t, args.residual_tol) for t in range(args.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_gauss_lucas_trial, params, chunksize=8))
    else:
        results = [_gauss_lucas_trial(p) for p in params]
    results.sort(key=lambda r: r[0])
    w.line("--- body ---")
    violations = incomplete = idx2 = 0
    attempts_total = 0
    for trial, attempts, status, detail, i2, inp in results:
        attempts_total += attempts
        if status == "violation":
            violations += 1
        if status == "incomplete":
            incomplete += 1
        idx2 += i2
        w.line(f"trial {trial}: attempts={attempts} status={status} criticals={detail}")
    w.line("--- summary ---")
    w.line(f"trials: {args.trials}")
    w.line(f"violations: {violations}")
    w.line(f"incomplete: {incomplete}")
    w.line(f"index2_in_Pinf: {idx2}")
    w.line(f"acceptance_rate: {_fmt(args.trials / max(attempts_total, 1))}")
    code = EXIT_VIOLATION if violations else (EXIT_INCOMPLETE if incomplete else EXIT_OK)
    w.line(f"exit: {code}")
    w.emit(args.out)
    return code


def cmd_morse(args) -> int:
    w = _Writer()
    if args.n is None:
        print("input error: need --n", file=sys.stderr)
        return EXIT_INPUT
    _header(w, "morse", args, ["n"])
    n = args.n
    w.line("--- body ---")
    try:
        zero_part = quadric_zero_poincare(n)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    M = counting_series(range(n, 2 * n + 1), [(0, zero_part)])
    P = poincare_cpn(n)
    holds, R = morse_inequality_check(M, P)
    w.line(f"M: {M!r}")
    w.line(f"P: {P!r}")
    w.line(f"R: {R!r}")
    w.line(f"holds: {str(holds).lower()}")
    if n % 2 == 1:
        w.line(f"middle_betti: {quadric_middle_betti(n)}")
    w.line("--- summary ---")
    code = EXIT_OK if holds else EXIT_VIOLATION
    w.line(f"exit: {code}")
    w.emit(args.out)
    return code


def _density_trial(params):
    n, m, seed, trial, residual_tol, degen_tol = params
    s = random_section(n, m, np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))
    report = find_critical_points(s, SolveOptions(residual_tol=residual_tol,
                                                  degen_tol=degen_tol))
    counts: dict[int | str, int] = {}
    degenerate = 0
    for c in report.criticals:
        key = "unknown" if c.index is None else c.index
        counts[key] = counts.get(key, 0) + 1
        if c.nondeg_margin < degen_tol * m:
            degenerate += 1
    return (trial, counts, degenerate, len(report.criticals))


def cmd_density(args) -> int:
    w = _Writer()
    if args.n is None or args.m is None:
        print("input error: need --n and --m", file=sys.stderr)
        return EXIT_INPUT
    _header(w, "density", args, ["n", "m", "seed", "trials", "jobs"])
    params = [(args.n, args.m, args.seed, t, args.residual_tol, args.degen_tol)
              for t in range(args.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_density_trial, params, chunksize=8))
    else:
        results = [_density_trial(p) for p in params]
    results.sort(key=lambda r: r[0])
    hist: dict[str, int] = {}
    degenerate_runs = 0
    totals = []
    for trial, counts, degenerate, total in results:
        totals.append(total)
        if degenerate:
            degenerate_runs += 1
        for key, v in counts.items():
            hist[str(key)] = hist.get(str(key), 0) + v
    w.line("--- body ---")
    for key in sorted(hist, key=lambda k: (k == "unknown", k)):
        w.line(f"index {key}: {hist[key]}")
    mean = float(np.mean(totals)) if totals else 0.0
    se = float(np.std(totals, ddof=1) / np.sqrt(len(totals))) if len(totals) > 1 else 0.0
    w.line("--- summary ---")
    w.line(f"trials: {args.trials}")
    w.line(f"mean_criticals: {_fmt(mean)}")
    w.line(f"stderr_criticals: {_fmt(se)}")
    w.line(f"degenerate_runs: {degenerate_runs}")
    w.line(f"exit: {EXIT_OK}")
    w.emit(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpcrit",
                                 description="critical points of projective sections")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_trials=False):
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--residual-tol", type=float, default=1e-10)
        p.add_argument("--dedup-tol", type=float, default=1e-7)
        p.add_argument("--degen-tol", type=float, default=1e-6)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=["structured-text", "tabular"],
                       default="structured-text")
        if with_trials:
            p.add_argument("--trials", type=int, default=1)
            p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("solve", help="locate and classify critical points")
    common(p)
    p.add_argument("--section", type=str, default=None, help="section file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("quadric", help="canonical form and closed-form critical set")
    common(p)
    p.add_argument("--matrix", type=str, default=None, help="symmetric matrix file")
    p.add_argument("--verify", action="store_true",
                   help="cross-check against the numeric solver")
    p.set_defaults(func=cmd_quadric)

    p = sub.add_parser("gauss-lucas", help="hull containment certificates on CP^1")
    common(p, with_trials=True)
    p.add_argument("--section", type=str, default=None, help="section file")
    p.set_defaults(func=cmd_gauss_lucas)

    p = sub.add_parser("morse", help="counting series and inequality for quadrics")
    common(p)
    p.set_defaults(func=cmd_morse)

    p = sub.add_parser("density", help="Monte Carlo critical point census")
    common(p, with_trials=True)
    p.set_defaults(func=cmd_density)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except BrokenPipeError:
        code = EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
