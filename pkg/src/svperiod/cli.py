"""Command-line front end.

Exit codes: 0 success, 1 failed check, 2 domain error, 3 input error;
``selftest`` exits with the number of failed checks (at most 125).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import elliptic, heights
from .errors import DomainError, InputError, SvPeriodError
from .forms import LogForm1, c0_dual_hypercube, iterated_residue
from .geom import dual_pairing_matrix, hypercube_corner_boundary, intersection_matrix
from .quad import McConfig, QuadConfig, RadialTest, cauchy_stokes_pairing
from .report import (
    Report,
    data_file,
    encode,
    parse_chain,
    parse_complex,
    parse_form,
    parse_point,
    parse_rational,
)
from .svcore import (
    double_copy_check,
    fubini_check,
    log_family_bases,
    log_family_double_copy,
    log_family_period_matrix,
    mzv_series,
    period_matrix,
    sv_log,
    sv_matrix,
    sv_mzv,
)

EXIT_OK, EXIT_CHECK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2, 3
MAX_EXIT = 125
TWO_PI_I = 2j * math.pi


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _samples(s: str) -> int:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid sample count {s!r}") from None
    if not v >= 1 or v != int(v):
        raise argparse.ArgumentTypeError("sample count must be a positive integer")
    return int(v)


def _qcfg(args) -> QuadConfig:
    kw = {}
    if args.max_subdiv is not None:
        kw["max_subdivisions"] = args.max_subdiv
    return QuadConfig(**kw)


def _mcfg(args, default_samples: int = 1_000_000) -> McConfig:
    return McConfig(samples=args.samples or default_samples, seed=args.seed, chunks=args.chunks)


def _load_json(arg: str):
    """A JSON document given inline or as a file path."""
    p = Path(arg)
    try:
        text = p.read_text() if p.is_file() else arg
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse JSON from {arg!r}: {exc}") from None
    except OSError as exc:
        raise InputError(str(exc)) from None


def _fixtures_dir(args):
    return Path(args.fixtures) if args.fixtures else data_file("fixtures")


# ---------------------------------------------------------------- commands


def cmd_sv_log(args) -> Report:
    a = parse_complex(args.a)
    r = Report("sv-log", {"a": a})
    est = sv_log(a, _qcfg(args))
    r.values = {"value": est.value.real, "imag": est.value.imag, "closed_form": est.diagnostics["direct"]}
    r.abs_error, r.evals = est.abs_error, est.evals
    r.add("closed_form", est.diagnostics["residual"], args.tol or 1e-6)
    return r


def _double_copy_inputs(doc: dict) -> dict:
    """Config documents carry the fields at the top level or under ``inputs``."""
    inputs = doc.get("inputs", doc) if isinstance(doc, dict) else None
    if not isinstance(inputs, dict):
        raise InputError("double-copy config must be an object")
    return inputs


def cmd_double_copy(args) -> Report:
    qc = _qcfg(args)
    tol = args.tol or 1e-5
    if args.config is None and not args.a:
        raise InputError("give a config file or at least one --a")
    r = Report("double-copy")
    items = []
    if args.config is not None:
        inputs = _double_copy_inputs(_load_json(args.config))
        if "a" in inputs and "nu" not in inputs:
            items.append(("a", parse_complex(inputs["a"])))
        else:
            try:
                nu, omega = parse_form(inputs["nu"]), parse_form(inputs["omega"])
                gammas = [parse_chain(c) for c in inputs["gammas"]]
                deltas = [parse_chain(c) for c in inputs["deltas"]]
            except (KeyError, TypeError) as exc:
                raise InputError(f"malformed double-copy config: {exc}") from None
            items.append(("config", (nu, omega, gammas, deltas)))
        r.inputs["config"] = inputs
    for a in args.a or []:
        items.append(("a", parse_complex(a)))
    r.inputs["a"] = [v for k, v in items if k == "a"]
    results = []
    for kind, v in items:
        rep = log_family_double_copy(v, qc) if kind == "a" else double_copy_check(*v, qc)
        label = f"a={v.real:g}{v.imag:+g}i" if kind == "a" else "config"
        results.append({"label": label, "lhs": rep.lhs.value, "rhs": rep.rhs, "residual": rep.residual,
                        "combined_error": rep.combined_error, "intersection": rep.intersection})
        scale = max(1.0, abs(rep.rhs))
        r.add(f"double_copy[{label}]", rep.residual, max(3 * rep.combined_error, tol * scale))
        r.abs_error = max(r.abs_error, rep.combined_error)
        r.evals += rep.lhs.evals
    r.values = {"results": results}
    return r


def _zeta_sv_oracle(indices):
    """Closed forms for depth one: 0 for even n, 2 zeta(n) for odd n."""
    if len(indices) != 1:
        return None
    n = indices[0]
    return 0.0 if n % 2 == 0 else 2 * mzv_series([n])


def cmd_sv_mzv(args) -> Report:
    idx = [int(k) for k in args.indices]
    r = Report("sv-mzv", {"indices": idx}, seed=args.seed)
    mc = _mcfg(args)
    r.inputs["samples"] = mc.samples
    est = sv_mzv(idx, mc)
    r.values = {"value": est.value.real, "imag": est.diagnostics["imag"],
                "stderr_imag": est.diagnostics["stderr_imag"]}
    r.abs_error, r.evals = est.abs_error, est.evals
    oracle = _zeta_sv_oracle(idx)
    if oracle is not None:
        r.values["oracle"] = oracle
        r.add("oracle", abs(est.value.real - oracle), max(3 * est.abs_error, args.tol or 0.0))
    return r


def cmd_elliptic(args) -> Report:
    p = elliptic.TauPoint(parse_complex(args.tau), parse_complex(args.lam))
    tol = args.tol or 1e-9
    eps = args.eps
    r = Report("elliptic", {"tau": p.tau, "lambda": p.lam, "eps": eps})
    S = elliptic.sv_matrix_elliptic(p, eps)
    d = elliptic.curve_data(p, eps)
    real = elliptic.has_real_structure(p)
    r.values = {"matrix": S.entries, "m_tau": d.m_tau, "omega1": d.omega1, "omega2": d.omega2,
                "eta1": d.eta1, "eta2": d.eta2, "real_structure": real}
    r.add("S_Sbar_minus_I", S.checks["S_Sbar_minus_I"], tol)
    r.add("det_plus_1", S.checks["det_plus_1"], tol)
    if real:
        r.add("S2_minus_I", S.checks["S2_minus_I"], tol)
        r.add("trace", S.checks["trace"], tol)
    r.add("closed_form_vs_periods", S.checks["closed_form_vs_periods"], tol)
    r.add("legendre", d.legendre_residual, tol)
    r.add("fricke_vs_agm", elliptic.fricke_residual(p, eps), max(tol, 1e-8))
    r.add("g2star_modularity", elliptic.g2star_modularity_residual(p.tau, eps=eps), tol)
    return r


def _parse_divisor(arg) -> heights.DivisorDeg0:
    doc = _load_json(arg) if isinstance(arg, str) else arg
    if not isinstance(doc, list) or any(not isinstance(t, list) or len(t) != 2 for t in doc):
        raise InputError("a divisor is a JSON list of [coefficient, point] pairs")
    return heights.DivisorDeg0(tuple((parse_rational(m), parse_point(p)) for m, p in doc))


def cmd_height(args) -> Report:
    D, E = _parse_divisor(args.D), _parse_divisor(args.E)
    r = Report("height", {"D": list(D.terms), "E": list(E.terms)})
    est = heights.height_pairing(D, E, _qcfg(args))
    green = heights.green_closed_form(D, E)
    r.values = {"value": est.value.real, "imag": est.diagnostics["imag"], "green": green}
    r.abs_error, r.evals = est.abs_error, est.evals
    r.add("green_closed_form", abs(est.value.real - green), max(3 * est.abs_error, args.tol or 0.0))
    r.add("realness", abs(est.diagnostics["imag"]), max(est.abs_error, args.tol or 0.0))
    return r


def cmd_period_matrix(args) -> Report:
    doc = _load_json(args.spec)
    if not isinstance(doc, dict):
        raise InputError("period-matrix spec must be an object")
    try:
        forms = [parse_form(f) for f in doc.get("forms", [])]
        chains = [parse_chain(c) for c in doc.get("chains", [])]
    except (TypeError, AttributeError) as exc:
        raise InputError(f"malformed period-matrix spec: {exc}") from None
    r = Report("period-matrix", {"spec": doc})
    P = period_matrix(None, forms, chains, _qcfg(args))
    r.values = {"matrix": P.entries, "errors": P.errors, "col_labels": list(P.col_labels)}
    r.abs_error = float(np.max(P.errors, initial=0.0)) if P.errors is not None else 0.0
    if P.entries.shape[0] == P.entries.shape[1] and P.entries.size and doc.get("single_valued", True):
        S = sv_matrix(P)
        r.values["sv_matrix"] = S.entries
        r.values["condition_number"] = S.condition_number
        tol = args.tol or 1e-6
        for k, v in S.checks.items():
            r.add(k, v, tol)
    return r


# ---------------------------------------------------------------- selftest


def _st_lefschetz(r: Report, args):
    est = cauchy_stokes_pairing(LogForm1(((1, 0),)), RadialTest((0.0, 1.0), (1.0, 1.0)), _qcfg(args))
    r.add("lefschetz", abs(est.value - (-1)), 1e-8)


def _st_sv_log(r: Report, args):
    for a in (2, 3, 1 + 1j, -5, 0.3, 1j):
        est = sv_log(a, _qcfg(args))
        r.add(f"sv_log[{a}]", abs(est.value - 2 * math.log(abs(a))), 1e-6)


def _st_double_copy(r: Report, args):
    rep = log_family_double_copy(2, _qcfg(args))
    r.add("double_copy[a=2]", rep.residual, 3 * rep.combined_error)
    r.add("double_copy_error_budget", rep.combined_error, 1e-4 * abs(TWO_PI_I * math.log(4)))


def _random_moduli(rng, k: int):
    out = []
    while len(out) < k:
        a = complex(*rng.uniform(-4, 4, 2))
        if abs(a) > 0.2 and abs(a - 1) > 0.2:
            out.append(a)
    return out


def _st_sv_matrix(r: Report, args):
    rng = np.random.default_rng(args.seed)
    P = log_family_period_matrix(2, _qcfg(args))
    expected_P = np.array([[1, math.log(2)], [0, TWO_PI_I]])
    r.add("period_matrix[a=2]", float(np.abs(P.entries - expected_P).max()), 1e-8)
    for a in [2] + _random_moduli(rng, 10):
        S = sv_matrix(log_family_period_matrix(a, _qcfg(args)))
        expected = np.array([[1, math.log(abs(a) ** 2)], [0, -1]])
        r.add(f"sv_matrix[a={a:.4g}]", float(np.abs(S.entries - expected).max()), 1e-6)
        r.add(f"sv_matrix_involution[a={a:.4g}]", S.checks["S2_minus_I"], 1e-8)


def _exact_dual_residual(M) -> float:
    C = dual_pairing_matrix(M)
    k = len(M)
    bad = sum(sum(C[l][i] * M[l][j] for l in range(k)) != (i == j) for i in range(k) for j in range(k))
    return float(bad)


def _st_duality(r: Report, args):
    g, d = log_family_bases(2)
    r.add("dual_pairing[log basis]", _exact_dual_residual(intersection_matrix(g, d)), 0.0)
    rng = np.random.default_rng(args.seed)
    done = 0
    while done < 20:
        k = int(rng.integers(1, 6))
        M = [[Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))) for _ in range(k)] for _ in range(k)]
        if abs(np.linalg.det(np.array(M, dtype=float))) < 1e-9:
            continue
        r.add(f"dual_pairing[random {done}]", _exact_dual_residual(M), 0.0)
        done += 1


def _st_hypercube(r: Report, args):
    for n in (1, 2, 3):
        form = c0_dual_hypercube(n)
        sign = (-1) ** (n * (n - 1) // 2)
        bad = sum(iterated_residue(form, k) != sign * c for k, c in hypercube_corner_boundary(n).items())
        r.add(f"c0_hypercube[n={n}]", float(bad), 0.0)


ELLIPTIC_POINTS = ((1j, 1), (0.5 + 0.7j, 0.5j), (1.5 + 1.3j, 2j), (-0.5 + 2.1j, -1.5), (0.5 + 0.8660254037844386j, 1))


def _st_elliptic(r: Report, args):
    S = elliptic.sv_matrix_elliptic(elliptic.TauPoint(1j, 1))
    expected = np.array([[0, -1 / (4 * math.pi)], [-4 * math.pi, 0]])
    r.add("elliptic_matrix[tau=i]", float(np.abs(S.entries - expected).max()), 1e-9)
    for tau, lam in ELLIPTIC_POINTS:
        p = elliptic.TauPoint(tau, lam)
        S = elliptic.sv_matrix_elliptic(p)
        tag = f"tau={tau:.4g}"
        r.add(f"fricke[{tag}]", elliptic.fricke_residual(p), 1e-8)
        r.add(f"g2star_modularity[{tag}]", elliptic.g2star_modularity_residual(tau), 1e-9)
        for name in ("S2_minus_I", "trace", "det_plus_1", "S_Sbar_minus_I"):
            r.add(f"{name}[{tag}]", S.checks[name], 1e-9)
        r.add(f"area[{tag}]", abs(elliptic.area_pairing(p) - elliptic.area_pairing_quadrature(p)), 1e-9)


def _random_divisor(rng, size: int, exclude=()) -> heights.DivisorDeg0:
    pts: list = []
    while len(pts) < size:
        p = heights.INF if rng.random() < 0.15 else complex(*rng.uniform(-2.8, 2.8, 2))
        if any((p is q) or (not heights.is_inf(p) and not heights.is_inf(q) and abs(p - q) < 0.3)
               for q in list(exclude) + pts):
            continue
        pts.append(p)
    while True:
        coeffs = [int(c) for c in rng.choice([-2, -1, 1, 2], size - 1)]
        if -sum(coeffs) in (-2, -1, 1, 2):
            break
    coeffs.append(-sum(coeffs))
    return heights.DivisorDeg0(tuple(zip(coeffs, pts)))


def random_divisor_pair(rng):
    D = _random_divisor(rng, int(rng.integers(2, 4)))
    E = _random_divisor(rng, int(rng.integers(2, 4)), exclude=D.support())
    return D, E


def _st_heights(r: Report, args):
    qc = _qcfg(args)
    rng = np.random.default_rng(args.seed)
    for k in range(25):
        D, E = random_divisor_pair(rng)
        h = heights.height_pairing(D, E, qc)
        r.add(f"height_vs_green[{k}]", abs(h.value.real - heights.green_closed_form(D, E)), 3 * h.abs_error)
        r.add(f"height_error_budget[{k}]", h.abs_error, 1e-4)
        if k < 5:
            h2 = heights.height_pairing(E, D, qc)
            r.add(f"height_symmetry[{k}]", abs(h.value - h2.value), 3 * (h.abs_error + h2.abs_error))
    D = heights.DivisorDeg0.of([(1, 2), (-1, 3)])
    pc = heights.principal_check(D, heights.RationalFunction(zeros=((0, 1),)), qc)
    r.add("principal[f=z]", pc.residual, 3 * pc.pairing.abs_error)
    r.add("principal[f=z] predicted", abs(pc.predicted - math.log(4 / 9)), 1e-12)
    D = heights.DivisorDeg0.of([(1, 0), (-1, "inf")])
    pc = heights.principal_check(D, heights.RationalFunction(zeros=((5, 1),), poles=((-5, 1),)), qc)
    r.add("principal[f=(z-5)/(z+5)]", pc.residual, 3 * pc.pairing.abs_error)


def _st_fixtures(r: Report, args):
    root = _fixtures_dir(args)
    files = sorted(root.iterdir(), key=lambda p: p.name) if root.is_dir() else []
    for f in files:
        if not f.name.endswith(".json"):
            continue
        fx = json.loads(f.read_text())
        if fx.get("command") != "double-copy":
            continue
        inputs = fx["inputs"]
        nu, omega = parse_form(inputs["nu"]), parse_form(inputs["omega"])
        gammas = [parse_chain(c) for c in inputs["gammas"]]
        deltas = [parse_chain(c) for c in inputs["deltas"]]
        rep = double_copy_check(nu, omega, gammas, deltas, _qcfg(args))
        expected = parse_complex(fx["expected"]["value"])
        tol = float(fx["expected"]["tolerance"])
        r.add(f"fixture[{fx['name']}] residual", rep.residual, tol * max(1.0, abs(expected)))
        r.add(f"fixture[{fx['name']}] expected", abs(rep.lhs.value - expected), tol * max(1.0, abs(expected)))


def _st_monte_carlo(r: Report, args):
    mc = _mcfg(args, default_samples=10_000_000)
    z2 = sv_mzv([2], mc)
    r.add("sv_mzv[2]", abs(z2.value), max(3 * z2.abs_error, 0.02))
    r.add("sv_mzv[2] stderr", z2.abs_error, 0.02)
    z3 = sv_mzv([3], mc)
    target = 2 * mzv_series([3])
    r.add("sv_mzv[3]", abs(z3.value - target), max(3 * z3.abs_error, 0.12))
    r.add("sv_mzv[3] stderr", z3.abs_error, 0.08)
    fb = fubini_check(2, 3, _qcfg(args), mc)
    r.add("fubini[2,3]", fb.residual, 3 * fb.combined_error)


FAST_CHECKS = (_st_lefschetz, _st_sv_log, _st_double_copy, _st_sv_matrix, _st_duality, _st_hypercube,
               _st_elliptic, _st_heights, _st_fixtures)


def cmd_selftest(args) -> Report:
    r = Report("selftest", {"level": args.level}, seed=args.seed)
    steps = FAST_CHECKS + ((_st_monte_carlo,) if args.level == "full" else ())
    for step in steps:
        try:
            step(r, args)
        except SvPeriodError as exc:
            r.add(f"{step.__name__[4:]} raised {type(exc).__name__}", math.inf, 0.0)
    r.values = {"checks_run": len(r.checks), "failures": r.failures}
    return r


# ---------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="check tolerance")
    common.add_argument("--max-subdiv", type=int, default=None, help="adaptive quadrature subdivision cap")
    common.add_argument("--samples", type=_samples, default=None, help="Monte Carlo samples (e.g. 2e6)")
    common.add_argument("--chunks", type=int, default=64, help="Monte Carlo chunks")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    common.add_argument("--fixtures", default=None, help="directory of golden fixtures")

    parser = _Parser(prog="svperiod", description="Single-valued periods: numerical tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sv-log", parents=[common], help="single-valued logarithm log|a|^2")
    p.add_argument("--a", required=True)
    p.set_defaults(func=cmd_sv_log)

    p = sub.add_parser("double-copy", parents=[common], help="double copy identity")
    p.add_argument("config", nargs="?", default=None, help="JSON config or fixture file")
    p.add_argument("--a", action="append", help="logarithm family parameter (repeatable)")
    p.set_defaults(func=cmd_double_copy)

    p = sub.add_parser("sv-mzv", parents=[common], help="single-valued multiple zeta value")
    p.add_argument("indices", nargs="+", type=int)
    p.set_defaults(func=cmd_sv_mzv)

    p = sub.add_parser("elliptic", parents=[common], help="single-valued period matrix of an elliptic curve")
    p.add_argument("--tau", required=True)
    p.add_argument("--lambda", dest="lam", default="1")
    p.add_argument("--eps", type=float, default=1e-15, help="q-series truncation tolerance")
    p.set_defaults(func=cmd_elliptic)

    p = sub.add_parser("height", parents=[common], help="archimedean height pairing on P^1")
    p.add_argument("--D", required=True, help="divisor as JSON list of [coefficient, point] or a file")
    p.add_argument("--E", required=True, help="divisor as JSON list of [coefficient, point] or a file")
    p.set_defaults(func=cmd_height)

    p = sub.add_parser("period-matrix", parents=[common], help="period matrix from forms and chains")
    p.add_argument("spec", help="JSON spec with 'forms' and 'chains'")
    p.set_defaults(func=cmd_period_matrix)

    p = sub.add_parser("selftest", parents=[common], help="run the built-in checks")
    p.add_argument("level", choices=["fast", "full"], nargs="?", default="fast")
    p.set_defaults(func=cmd_selftest)
    return parser


def _summary(rep: Report) -> str:
    lines = [f"{rep.command}: " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(rep.values.items())
                                           if k not in ("results",))]
    for c in rep.checks:
        lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.residual:.3e} <= {c.tolerance:.3e}")
    if rep.error:
        lines.append(f"  error {rep.error['type']}: {rep.error['message']}")
    return "\n".join(lines)


def _fmt(v) -> str:
    e = encode(v)
    return json.dumps(e) if not isinstance(e, float) else f"{e:.10g}"


def run(argv=None) -> tuple[Report, int]:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        rep = args.func(args)
        code = EXIT_OK if not rep.failures else EXIT_CHECK
        if args.command == "selftest":
            code = min(rep.failures, MAX_EXIT)
    except (DomainError, InputError) as exc:
        rep = Report(args.command, {"argv": list(argv) if argv is not None else sys.argv[1:]}, seed=args.seed)
        rep.error = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_DOMAIN if isinstance(exc, DomainError) else EXIT_INPUT
    rep.seed = args.seed
    rep.wall_time_ms = int(round(1000 * (time.perf_counter() - t0)))
    return rep, code


def main(argv=None) -> int:
    rep, code = run(argv)
    parser_args = argv if argv is not None else sys.argv[1:]
    if "--json" in parser_args:
        print(rep.dumps())
    else:
        print(_summary(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
