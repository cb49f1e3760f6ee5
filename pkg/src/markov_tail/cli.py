"""Command-line front end. Every subcommand writes CSV to stdout.

Exit status: 0 success, 2 bad input, 3 a ``verify`` check failed.
Diagnostics go to stderr as ``error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import bounds
from .chain import InitialDistribution, chain_from_spec, chi_distance, spectrum, spread
from .errors import MarkovTailError, PreconditionError
from .observable import load_observable, random_observable
from .perturbation import (
    derivative_checks,
    eigvec_residuals,
    path_sum,
    growth_sweep,
    quadratic_form_power,
    resolvent_norms,
    resolvent_circle,
    second_derivative_formula,
    verify_mgf_domination,
)
from .simulator import simulate_tails

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".12g")
    return str(x)


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _emit(out, header, rows):
    w = _writer(out)
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` inclusive of b (to rounding), or a comma list."""
    if ":" not in text:
        return [float(t) for t in text.split(",") if t.strip()]
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise _UsageError(f"bad grid {text!r}; expected a:b:step") from None
    if step <= 0 or b < a:
        raise _UsageError(f"bad grid {text!r}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [float(format(a + i * step, ".12g")) for i in range(count)]


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="markov-tail", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, chain_required=True):
        sp.add_argument("--chain", required=chain_required,
                        help="complete:N, hypercube:D, cycle:N or a chain file")
        sp.add_argument("--observable", help="observable file (n m header, then n rows)")
        sp.add_argument("--gap-override", type=float, dest="gap_override",
                        help="use this gap instead of 1 - lambda_1")

    def bound_flags(sp):
        sp.add_argument("--method", default="kargin", choices=bounds.METHODS)
        sp.add_argument("--m", type=int)
        sp.add_argument("--eps", type=float, required=True)
        sp.add_argument("--sigma2", type=float)
        sp.add_argument("--L", type=float)
        sp.add_argument("--chi", type=float)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--variant", choices=("prop9", "literal"), default="prop9")

    sp = sub.add_parser("spectral", help="eigenvalues and gaps of a chain")
    common(sp)

    sp = sub.add_parser("bound", help="tail bound at a given N")
    common(sp)
    bound_flags(sp)
    sp.add_argument("--N", type=int, required=True)

    sp = sub.add_parser("sample-size", help="smallest N reaching a target probability")
    common(sp)
    bound_flags(sp)
    sp.add_argument("--target", type=float, default=0.05)

    sub.add_parser("table1", help="sample sizes for the three example chains")

    sp = sub.add_parser("verify", help="numerical checks of the eigenvalue estimates")
    common(sp)
    sp.add_argument("--m", type=int, default=3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10)

    sp = sub.add_parser("simulate", help="Monte Carlo tail estimates vs the bound")
    common(sp)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--replicas", type=int, default=10000)
    sp.add_argument("--eps-grid", dest="eps_grid", default="0.02:0.2:0.02")
    sp.add_argument("--workers", type=int, default=1)
    return p


def _gap(args, chain) -> float:
    return args.gap_override if args.gap_override is not None else spectrum(chain).gap


def _query(args, N=None) -> bounds.BoundQuery:
    chain = chain_from_spec(args.chain)
    m, sigma2, L = 1, 1.0, 1.0
    if args.observable:
        f = load_observable(args.observable, chain)
        if not f.is_centered():
            raise PreconditionError("observable is not centered under the chain's mu")
        m, sigma2, L = f.m, f.principal_variance, f.linf
    m = args.m if args.m is not None else m
    L = args.L if args.L is not None else L
    sigma2 = args.sigma2 if args.sigma2 is not None else sigma2
    method = args.method
    if method == "kargin" and args.variant == "literal":
        method = "kargin-literal"
    return bounds.BoundQuery(
        method=method,
        epsilon=args.eps,
        N=N,
        m=m,
        sigma2=sigma2,
        L=L,
        g=_gap(args, chain),
        nu=args.nu if args.nu is not None else spread(chain),
        chi=args.chi if args.chi is not None else 1.0,
        n_states=chain.n,
    )


def cmd_spectral(args, out) -> int:
    chain = chain_from_spec(args.chain)
    spec = spectrum(chain)
    lam = spec.eigenvalues
    row = [
        chain.label, chain.n, lam[0], lam[1] if chain.n > 1 else None, lam[-1],
        spec.gap, spec.absolute_gap, spread(chain),
    ]
    header = ["chain", "n", "lambda0", "lambda1", "lambda_min", "gap", "absolute_gap", "spread"]
    if args.gap_override is not None:
        header.append("gap_override")
        row.append(args.gap_override)
    _emit(out, header, [row])
    return EXIT_OK


def cmd_bound(args, out) -> int:
    q = _query(args, N=args.N)
    res = bounds.evaluate(q)
    _emit(
        out,
        ["method", "chain", "m", "epsilon", "N", "g", "prefactor", "rate", "probability"],
        [[q.method, args.chain, q.m, q.epsilon, q.N, q.g, res.prefactor, res.rate, res.probability]],
    )
    return EXIT_OK


def cmd_sample_size(args, out) -> int:
    q = _query(args)
    N = bounds.sample_size(q, args.target)
    _emit(
        out,
        ["method", "chain", "m", "epsilon", "target", "g", "N_required"],
        [[q.method, args.chain, q.m, q.epsilon, args.target, q.g, N]],
    )
    return EXIT_OK


TABLE1_HEADER = [
    "method", "chain", "m", "N_required", "N_required_millions_rounded",
    "printed_mln", "discrepancy", "N_required_m10", "N_required_m10_millions_rounded",
]


def cmd_table1(args, out) -> int:
    rows = []
    for r in bounds.table1():
        rounded = "-" if r.N_required is None else r.N_required_millions_rounded
        printed = "-" if r.N_required is None else r.printed_mln
        rows.append([
            r.method, r.chain, r.m, r.N_required, rounded, printed,
            r.discrepancy, r.N_required_m10, r.N_required_m10_millions_rounded,
        ])
    _emit(out, TABLE1_HEADER, rows)
    return EXIT_OK


def _unit(rng, m):
    d = rng.normal(size=m)
    return d / np.linalg.norm(d)


def run_checks(chain, m: int, seed: int, trials: int, g_override=None):
    """Yield (check_name, value, bound, margin, passed) rows for the numerical checks."""
    spec = spectrum(chain)
    g = spec.gap
    radii = np.arange(1, 31) / 10
    rng = np.random.default_rng(seed)
    mu = InitialDistribution(chain.mu)

    for trial in range(trials):
        f = random_observable(chain, m, 1.0, seed * 1000 + trial)
        d = _unit(rng, m)
        worst = min(
            (r for r in growth_sweep(chain, f, d, radii, g=g)),
            key=lambda r: r.margin,
        )
        yield "perron_growth", worst.lambda0, worst.lambda0 + worst.margin, worst.margin, worst.margin >= 0

        dc = derivative_checks(chain, f, d)
        yield "first_derivative", dc.derivative1, 1e-6, 1e-6 - abs(dc.derivative1), abs(dc.derivative1) <= 1e-6
        margin = dc.d2_bound + 1e-6 - dc.derivative2
        yield "second_derivative", dc.derivative2, dc.d2_bound, margin, margin >= 0

        exact = second_derivative_formula(chain, f, d)
        e1 = abs(derivative_checks(chain, f, d, h=2e-3).derivative2 - exact)
        e2 = abs(derivative_checks(chain, f, d, h=1e-3).derivative2 - exact)
        ratio = e1 / e2 if e2 > 0 else math.inf
        yield "richardson_ratio", ratio, 4.0, 0.5 - abs(ratio - 4.0), 3.5 <= ratio <= 4.5

        resid, orth = eigvec_residuals(chain, f, d)
        yield "eigvec_residual", resid, 1e-11, 1e-11 - resid, resid <= 1e-11
        yield "eigvec_orthogonality", orth, 1e-12, 1e-12 - orth, orth <= 1e-12

        N = int(rng.integers(1, 101))
        u = d * rng.uniform(0, 1)
        dom = verify_mgf_domination(chain, f, u, mu, N)
        yield "mgf_domination", quadratic_form_power(chain, f, u, mu, N), None, dom, dom >= 0

        if chain.n <= 4:
            for steps in range(0, 7):
                exact_sum = path_sum(chain, f, u, mu, steps)
                fast = quadratic_form_power(chain, f, u, mu, steps)
                err = abs(fast - exact_sum)
                yield "path_enumeration", fast, exact_sum, 1e-10 - err, err <= 1e-10

    if g > 0:
        norms = resolvent_norms(chain, resolvent_circle(g, 256))
        best = float(norms.max())
        rel = abs(best - 2 / g) / (2 / g)
        ok = rel <= 1e-6 and abs(norms[0] - best) <= 1e-6 * best
        yield "resolvent_max", best, 2 / g, 1e-6 - rel, ok


def cmd_verify(args, out) -> int:
    chain = chain_from_spec(args.chain)
    if args.m < 1 or args.trials < 1:
        raise _UsageError("--m and --trials must be positive")
    rows, failed = [], False
    for name, value, bound, margin, passed in run_checks(chain, args.m, args.seed, args.trials):
        failed |= not passed
        rows.append([name, chain.label, args.seed, value, bound, margin, bool(passed)])
    _emit(out, ["check_name", "chain", "seed", "value", "bound", "margin", "pass"], rows)
    return EXIT_CHECK if failed else EXIT_OK


def cmd_simulate(args, out) -> int:
    chain = chain_from_spec(args.chain)
    if args.observable:
        f = load_observable(args.observable, chain)
        if not f.is_centered():
            raise PreconditionError("observable is not centered under the chain's mu")
    else:
        f = random_observable(chain, args.m, 1.0, args.seed)
    grid = parse_grid(args.eps_grid)
    mu0 = InitialDistribution(chain.mu)
    rep = simulate_tails(chain, f, mu0, args.N, args.replicas, grid, args.seed, workers=args.workers)
    g = _gap(args, chain)
    rows = []
    for eps, hits, est, up in zip(rep.epsilon_grid, rep.hits, rep.estimate, rep.upper99):
        q = bounds.BoundQuery(
            "kargin", eps, args.N, m=f.m, sigma2=min(f.principal_variance, f.linf**2),
            L=f.linf, g=g, nu=spread(chain), chi=chi_distance(mu0, chain),
        )
        b = bounds.evaluate(q).probability
        rows.append([eps, hits, rep.replicas, est, up, b, b >= up])
    _emit(out, ["epsilon", "hits", "replicas", "estimate", "upper99", "bound_kargin", "dominated"], rows)
    return EXIT_OK


COMMANDS = {
    "spectral": cmd_spectral,
    "bound": cmd_bound,
    "sample-size": cmd_sample_size,
    "table1": cmd_table1,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def run(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = _build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except _UsageError as exc:
        print(f"error[usage]: {exc}", file=err)
    except MarkovTailError as exc:
        print(f"error[{exc.code}]: {exc}", file=err)
    except OSError as exc:
        print(f"error[io-error]: {exc}", file=err)
    return EXIT_INPUT


def main() -> None:
    sys.exit(run())
