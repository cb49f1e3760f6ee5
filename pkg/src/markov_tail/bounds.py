"""Tail bounds of the form Pr{|S_N| >= eps N} <= C exp(-r N).

All methods reduce a general observable to ||f||_inf <= 1 by dividing
eps by L and sigma^2 by L^2 before evaluating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InvalidGapError, InvalidParameterError, UnattainableError, WrongMethodError

METHODS = (
    "kargin",
    "kargin-literal",
    "corollary2",
    "gillman",
    "gillman-md",
    "martingale",
    "hoeffding-iid",
)


@dataclass(frozen=True)
class BoundQuery:
    method: str
    epsilon: float
    N: int | None = None
    m: int = 1
    sigma2: float = 1.0
    L: float = 1.0
    g: float = 1.0
    nu: float = 1.0
    chi: float = 1.0
    n_states: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown method {self.method!r}")
        # eps = 0 is allowed: it yields the trivial bound 1
        if not self.epsilon >= 0:
            raise InvalidParameterError("epsilon must be nonnegative")
        if self.N is not None and self.N < 0:
            raise InvalidParameterError("N must be nonnegative")
        if self.m < 1:
            raise InvalidParameterError("m must be >= 1")
        if not self.L > 0:
            raise InvalidParameterError("L must be positive")
        if not 0 < self.g <= 2:
            raise InvalidGapError(f"gap must lie in (0, 2], got {self.g!r}")
        if not 0 <= self.sigma2 <= self.L**2 + 1e-12:
            raise InvalidParameterError("need 0 <= sigma2 <= L^2")
        if self.chi < 1 - 1e-12:
            raise InvalidParameterError("chi distance is at least 1")
        if self.nu < 1 - 1e-12:
            raise InvalidParameterError("spread is at least 1")


@dataclass(frozen=True)
class BoundResult:
    prefactor: float
    rate: float
    probability: float | None
    method: str

    def at(self, N: float) -> float:
        return probability(self.prefactor, self.rate, N)


def probability(prefactor: float, rate: float, N: float) -> float:
    if rate == 0.0 or N == 0:
        return min(1.0, prefactor)
    return min(1.0, prefactor * math.exp(-rate * N))


def k_constant(sigma2: float, L: float, g: float, variant: str = "prop9") -> float:
    """Variance proxy k of the main bound.

    ``prop9``: sigma2 (1/2 + 1/g) + L^2 (192/125) g / ln^2(1 + g/2).
    ``literal-thm1``: the same without the factor g in the last term.
    """
    if not g > 0:
        raise InvalidGapError(f"gap must be positive, got {g!r}")
    if g > 2:
        raise InvalidGapError(f"gap cannot exceed 2, got {g!r}")
    log2 = math.log1p(g / 2) ** 2
    if variant == "prop9":
        tail = 192.0 / 125.0 * g / log2
    elif variant in ("literal-thm1", "literal"):
        tail = 192.0 / 125.0 / log2
    else:
        raise InvalidParameterError(f"unknown k variant {variant!r}")
    return sigma2 * (0.5 + 1.0 / g) + L * L * tail


def alpha_corollary2(g: float) -> float:
    if not 0 < g <= 2:
        raise InvalidGapError(f"gap must lie in (0, 2], got {g!r}")
    return 1.0 / (4.0 + 8.0 / g + 1536.0 / 125.0 * g / math.log1p(g / 2) ** 2)


def _result(q: BoundQuery, prefactor: float, rate: float) -> BoundResult:
    p = None if q.N is None else probability(prefactor, rate, q.N)
    return BoundResult(prefactor, rate, p, q.method)


def bound_kargin(q: BoundQuery, variant: str | None = None) -> BoundResult:
    if variant is None:
        variant = "literal-thm1" if q.method == "kargin-literal" else "prop9"
    eps = q.epsilon / q.L
    k = k_constant(q.sigma2 / q.L**2, 1.0, q.g, variant)
    return _result(q, 3.0 * q.chi * 2.0 ** (q.m / 2), eps * eps / (8.0 * k))


def bound_corollary2(q: BoundQuery) -> BoundResult:
    eps = q.epsilon / q.L
    return _result(q, 3.0 * q.chi * 2.0 ** (q.m / 2), alpha_corollary2(q.g) * eps * eps)


def bound_gillman(q: BoundQuery) -> BoundResult:
    # one-sided in the original; Table 1 applies it unchanged to |S_N|
    if q.m != 1:
        raise WrongMethodError("gillman is scalar; use gillman-md for m > 1")
    eps = q.epsilon / q.L
    return _result(q, 2.0 * q.chi, q.g / (20.0 * q.nu) * eps * eps)


def bound_gillman_md(q: BoundQuery) -> BoundResult:
    """Union bound over m coordinates, each at threshold eps / sqrt(m)."""
    eps = q.epsilon / q.L
    return _result(q, 2.0 * q.m * q.chi, q.g / (20.0 * q.nu) * eps * eps / q.m)


def bound_martingale(q: BoundQuery) -> BoundResult:
    """Azuma-Bernstein with increments bounded by 2(n-1)L, exponent linear in N."""
    if q.m != 1:
        raise WrongMethodError("martingale bound is only stated for m = 1")
    if q.n_states is None:
        raise InvalidParameterError("martingale bound needs n_states")
    if q.n_states < 2:
        raise InvalidParameterError("martingale bound needs n_states >= 2")
    c = 2.0 * (q.n_states - 1) * q.L
    return _result(q, 2.0, 0.5 * q.epsilon**2 / c**2)


def bound_hoeffding_iid(q: BoundQuery) -> BoundResult:
    if q.m != 1:
        raise WrongMethodError("hoeffding-iid is scalar")
    return _result(q, 2.0, 0.5 * (q.epsilon / q.L) ** 2)


_DISPATCH = {
    "kargin": bound_kargin,
    "kargin-literal": bound_kargin,
    "corollary2": bound_corollary2,
    "gillman": bound_gillman,
    "gillman-md": bound_gillman_md,
    "martingale": bound_martingale,
    "hoeffding-iid": bound_hoeffding_iid,
}


def evaluate(q: BoundQuery) -> BoundResult:
    return _DISPATCH[q.method](q)


def sample_size(q: BoundQuery, target: float) -> int:
    """Smallest N with prefactor * exp(-rate N) <= target."""
    if not 0 < target < 1:
        raise InvalidParameterError("target must lie in (0, 1)")
    res = evaluate(replace(q, N=None))
    if target >= res.prefactor:
        return 0
    if res.rate <= 0:
        raise UnattainableError("zero rate: no sample size reaches the target")
    N = math.ceil(math.log(res.prefactor / target) / res.rate)
    # guard the ceil against rounding on either side
    while N > 0 and res.prefactor * math.exp(-res.rate * (N - 1)) <= target:
        N -= 1
    while res.prefactor * math.exp(-res.rate * N) > target:
        N += 1
    return N


# --- Table 1 -------------------------------------------------------------------

TABLE1_EPS = 0.01
TABLE1_TARGET = 0.05
TABLE1_DIMS = (1, 20)
TABLE1_CHAINS = (
    ("complete", 32 / 31, 32),
    ("hypercube", 1 / 3, 32),
    ("circle", 1 - math.cos(math.pi / 33), 33),
)
TABLE1_METHODS = ("kargin", "martingale", "gillman")

# printed cells in millions; None where the table shows a dash
PRINTED_TABLE = {
    ("kargin", "complete", 1): 4, ("kargin", "complete", 20): 9,
    ("kargin", "hypercube", 1): 9, ("kargin", "hypercube", 20): 22,
    ("kargin", "circle", 1): 560, ("kargin", "circle", 20): 960,
    ("martingale", "complete", 1): 280, ("martingale", "complete", 20): None,
    ("martingale", "hypercube", 1): 280, ("martingale", "hypercube", 20): None,
    ("martingale", "circle", 1): 300, ("martingale", "circle", 20): None,
    ("gillman", "complete", 1): 0.7, ("gillman", "complete", 20): 26,
    ("gillman", "hypercube", 1): 2, ("gillman", "hypercube", 20): 80,
    ("gillman", "circle", 1): 160, ("gillman", "circle", 20): 2640,
}

# cells that only match with m = 10 substituted for m = 20
TABLE1_FLAGGED = {("kargin", "circle", 20), ("gillman", "circle", 20)}


@dataclass(frozen=True)
class Table1Row:
    method: str
    chain: str
    m: int
    N_required: int | None
    N_required_millions_rounded: float | None
    printed_mln: float | None
    discrepancy: bool = False
    N_required_m10: int | None = None
    N_required_m10_millions_rounded: float | None = None


def round_millions(N: int) -> float:
    """Millions at the table's printed resolution: one significant figure
    below 10, whole millions below 100, tens of millions above."""
    x = N / 1e6
    if x == 0:
        return 0.0
    if x < 10:
        return round(x, -math.floor(math.log10(x)))
    if x < 100:
        return float(round(x))
    return float(round(x, -1))


def table1_query(method: str, g: float, m: int, n_states: int) -> BoundQuery:
    qmethod = "gillman-md" if method == "gillman" else method
    return BoundQuery(
        qmethod, TABLE1_EPS, None, m=m, sigma2=1.0, L=1.0, g=g, nu=1.0, chi=1.0,
        n_states=n_states,
    )


def table1() -> list[Table1Row]:
    rows = []
    for method in TABLE1_METHODS:
        for chain, g, n_states in TABLE1_CHAINS:
            for m in TABLE1_DIMS:
                key = (method, chain, m)
                if method == "martingale" and m != 1:
                    rows.append(Table1Row(method, chain, m, None, None, None))
                    continue
                N = sample_size(table1_query(method, g, m, n_states), TABLE1_TARGET)
                row = Table1Row(method, chain, m, N, round_millions(N), PRINTED_TABLE[key])
                if key in TABLE1_FLAGGED:
                    N10 = sample_size(table1_query(method, g, 10, n_states), TABLE1_TARGET)
                    row = replace(
                        row,
                        discrepancy=True,
                        N_required_m10=N10,
                        N_required_m10_millions_rounded=round_millions(N10),
                    )
                rows.append(row)
    return rows
