"""Growth constants and certified finite-N inequalities for the height.

For rho in (0, 1) let alpha = alpha(rho) be the unique root in (rho, 1)
of

    x**x * (1-x)**(1-x) = rho**x,

equivalently the zero of g(x) = x log x + (1-x) log(1-x) - x log rho.
The mean height satisfies E[H_N] / N -> f(rho) where f(rho) = alpha for
rho < 1 and f(rho) = 1 for rho >= 1, and Var(H_N) / N -> f(rho)**2 / rho.
The law concentrates in a window of width O(log N) around the peak index
h_n = floor(alpha * (n-1)), where the ladder term t_{h_n} is of order
sqrt(n).

This module computes alpha and the derived constants

    c1 = 2 / (log alpha - log(rho (1-alpha)))
    c2 = 3 / (log alpha - log rho)
    c3 = alpha (3 + rho) / rho**2

and numerically certifies, at requested (n, rho), the inequalities the
limit behaviour rests on: the n**2 growth of the ladder terms c1*log n
steps above the peak, their n**-3 decay c2*log n steps below it, the
mean sandwich floor(alpha N) - floor(c2 log N) - c3 <= E[H_N]
<= floor(alpha N) + 1 (and N-4 <= E[H_N] <= N for rho >= 1), the
sqrt(n) order of the peak term, and the concentration of mass in the
log-width window.

Integer-part robustness
-----------------------
The displayed inequalities place integer parts around real offsets such
as c1*log n.  They are asymptotic statements: the growth bound is exact
for the un-rounded offset (the base raised to c1*log n is n**2 on the
nose), so rounding the offset *down* loses a constant factor
base**frac(c1 log n) that the O(log^2 n / n) correction terms do not
repay at any finite n; rounded *up* the bound holds with slack.  A
certifier that mechanically floors would therefore report failures that
say nothing about the mathematics.  Every bound check here evaluates
both integer roundings of each bracketed quantity and passes if either
does, recording the strict-floor margin alongside the best one; reports
carry the full detail.  The same candidate machinery covers the
float-rounding hazard when alpha*(n-1) lands within 1e-9 of an integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exactdist
from .errors import ParameterError
from .model import make_params

__all__ = [
    "AlphaSolution",
    "BoundConstants",
    "BoundReport",
    "ConvergencePoint",
    "solve_alpha",
    "height_fraction_limit",
    "variance_limit",
    "bound_constants",
    "peak_index",
    "integer_part_candidates",
    "check_peak_ratio_bounds",
    "check_mean_bounds",
    "stirling_ratio",
    "convergence_table",
    "concentration_window",
    "concentration_mass_bound",
    "concentration_mass",
    "wlln_tail_mass",
    "MEAN_BOUND_MIN_N",
]

RESIDUAL_TOL = 1e-13
FLOOR_SLACK = 1e-9
MEAN_BOUND_MIN_N = 1000  # below this the sandwich is reported but not asserted


@dataclass(frozen=True)
class AlphaSolution:
    """Root of g with its certificate: residual, bracket, iteration count."""

    rho: float
    alpha: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


@dataclass(frozen=True)
class BoundConstants:
    """Constants derived from alpha(rho), all strictly positive for rho in (0,1)."""

    rho: float
    alpha: float
    c1: float
    c2: float
    c3: float

    def peak_index(self, n: int) -> int:
        return peak_index(self.alpha, n)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one certified inequality at one parameter point.

    ``lhs``/``rhs`` are in log scale for the ratio bounds and in natural
    units for the mean bounds; ``margin`` is how far the inequality holds
    in its stated direction (>= 0 means pass) for the best admissible
    rounding of the bracketed offsets, ``floor_margin`` the same for the
    strict floors.  ``applicable`` is False when the offsets leave the
    valid index range or n is below the asserted threshold; such reports
    never count as failures.
    """

    inequality: str
    n: int
    rho: float
    lhs: float
    rhs: float
    margin: float
    passed: bool
    applicable: bool
    floor_margin: float = math.nan
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "n": self.n,
            "rho": self.rho,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "passed": self.passed,
            "applicable": self.applicable,
            "floor_margin": self.floor_margin,
            "note": self.note,
        }


@dataclass(frozen=True)
class ConvergencePoint:
    """One row of the limit table for a fixed rho."""

    N: int
    mean: float
    variance: float
    mean_ratio: float       # mean / N
    var_ratio: float        # variance / N
    mean_limit: float       # f(rho)
    var_limit: float        # f(rho)^2 / rho
    mean_gap: float = field(init=False)
    var_gap: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean_gap", abs(self.mean_ratio - self.mean_limit))
        object.__setattr__(self, "var_gap", abs(self.var_ratio - self.var_limit))


def _g(x: float, log_rho: float) -> float:
    # x log x + (1-x) log(1-x) - x log rho, continuously extended by 0 at {0,1}
    if x <= 0.0 or x >= 1.0:
        s = 0.0
    else:
        s = x * math.log(x) + (1.0 - x) * math.log1p(-x)
    return s - x * log_rho


def solve_alpha(rho: float) -> AlphaSolution:
    """Bisect g on (rho, 1) down to a residual below 1e-13.

    g is strictly increasing on (rho, 1) (its derivative is
    log(x / ((1-x) rho)) > 0 there), but only the sign change is used:
    g(rho+) = (1-rho) log(1-rho) < 0 and g(1-) -> -log rho > 0.
    """
    rho = float(rho)
    if not (0.0 < rho < 1.0) or not math.isfinite(rho):
        raise ParameterError(f"alpha(rho) is defined for rho in (0, 1), got {rho!r}")
    log_rho = math.log(rho)
    eps = 1e-15
    lo, hi = rho + eps, 1.0 - eps
    if not (_g(lo, log_rho) < 0.0 < _g(hi, log_rho)):
        raise ParameterError(f"no sign change on the bracket for rho = {rho}")
    iterations = 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        iterations += 1
        if _g(mid, log_rho) < 0.0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    residual = _g(alpha, log_rho)
    if abs(residual) > RESIDUAL_TOL:
        raise ParameterError(
            f"bisection stalled for rho = {rho}: residual {residual:.3e}")
    return AlphaSolution(rho=rho, alpha=alpha, residual=residual,
                         iterations=iterations, bracket=(lo, hi))


def height_fraction_limit(rho: float) -> float:
    """Limit of E[H_N] / N: alpha(rho) for rho < 1, exactly 1 for rho >= 1."""
    rho = float(rho)
    if not math.isfinite(rho) or rho <= 0.0:
        raise ParameterError(f"rho must be a positive finite real, got {rho!r}")
    if rho >= 1.0:
        return 1.0
    return solve_alpha(rho).alpha


def variance_limit(rho: float) -> float:
    """Limit of Var(H_N) / N, equal to f(rho)**2 / rho."""
    f = height_fraction_limit(rho)
    return f * f / rho


def bound_constants(rho: float) -> BoundConstants:
    """c1, c2, c3 from alpha(rho); denominators are positive because
    alpha > rho > rho (1 - alpha)."""
    sol = solve_alpha(rho)
    a = sol.alpha
    c1 = 2.0 / (math.log(a) - math.log(rho * (1.0 - a)))
    c2 = 3.0 / (math.log(a) - math.log(rho))
    c3 = a * (3.0 + rho) / (rho * rho)
    if min(c1, c2, c3) <= 0.0:
        raise ParameterError(f"derived constants must be positive, got {(c1, c2, c3)}")
    return BoundConstants(rho=rho, alpha=a, c1=c1, c2=c2, c3=c3)


def peak_index(alpha: float, n: int) -> int:
    """floor(alpha * (n-1)): the index where the ladder term is of order sqrt(n)."""
    return math.floor(alpha * (n - 1))


def integer_part_candidates(x: float, *, slack: float = FLOOR_SLACK) -> tuple[int, ...]:
    """Integer parts of x that a certifier should be willing to accept.

    Always contains floor(x) and floor(x) + 1 (the two roundings of an
    asymptotic offset); when x sits within ``slack`` of an integer the
    neighbour on the other side is included too, covering the case where
    a float alpha landed on the wrong side of the boundary.
    """
    f = math.floor(x)
    cands = {f, f + 1}
    if x - f <= slack:
        cands.add(f - 1)
    return tuple(sorted(c for c in cands if c >= 0))


def _log_term(n: int, rho: float, i: int) -> float:
    return float(exactdist.log_r_term(n, rho, int(i)))


def check_peak_ratio_bounds(n: int, rho: float,
                            constants: BoundConstants | None = None
                            ) -> tuple[BoundReport, BoundReport]:
    """Certify the two ladder-ratio inequalities at (n, rho).

    Growth: t(h_n + [c1 log n]) >= t(h_n) * n**2.
    Decay:  t(h_n - [c2 log n]) <= t(h_n) * n**-3.
    Both are evaluated in the log domain; see the module docstring for
    the integer-part candidate policy.  Out-of-range offsets flag the
    report as not applicable instead of raising.
    """
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    c = constants if constants is not None else bound_constants(rho)
    log_n = math.log(n)
    h_cands = integer_part_candidates(c.alpha * (n - 1))

    def evaluate(offsets: tuple[int, ...], sign: int, rhs_shift: float,
                 name: str) -> BoundReport:
        # sign +1: t(h + K) >= t(h) * e^{rhs_shift}; sign -1: t(h - K) <= ...
        floor_h = peak_index(c.alpha, n)
        floor_k = math.floor((c.c1 if sign > 0 else c.c2) * log_n)
        best = None
        floor_margin = math.nan
        tried = []
        for h in h_cands:
            for k in offsets:
                idx = h + sign * k
                if not (0 <= idx <= n - 1 and 0 <= h <= n - 1):
                    continue
                lhs = _log_term(n, rho, idx)
                rhs = _log_term(n, rho, h) + rhs_shift
                margin = (lhs - rhs) if sign > 0 else (rhs - lhs)
                tried.append((h, k, margin))
                if h == floor_h and k == floor_k:
                    floor_margin = margin
                if best is None or margin > best[2]:
                    best = (h, k, margin)
        if best is None:
            return BoundReport(inequality=name, n=n, rho=rho, lhs=math.nan,
                               rhs=math.nan, margin=math.nan, passed=True,
                               applicable=False,
                               note="offset leaves the index range [0, n-1]")
        h, k, margin = best
        lhs = _log_term(n, rho, h + sign * k)
        rhs = _log_term(n, rho, h) + rhs_shift
        note = ("candidates (h, offset, log-margin): "
                + "; ".join(f"({a}, {b}, {m:+.4f})" for a, b, m in tried))
        return BoundReport(inequality=name, n=n, rho=rho, lhs=lhs, rhs=rhs,
                           margin=margin, passed=margin >= 0.0, applicable=True,
                           floor_margin=floor_margin, note=note)

    growth = evaluate(integer_part_candidates(c.c1 * log_n), +1, 2.0 * log_n,
                      "peak_growth")
    decay = evaluate(integer_part_candidates(c.c2 * log_n), -1, -3.0 * log_n,
                     "peak_decay")
    return growth, decay


def check_mean_bounds(N: int, rho: float, mean: float,
                      constants: BoundConstants | None = None) -> BoundReport:
    """Certify the mean sandwich at (N, rho) for a mean computed elsewhere.

    rho < 1:  floor(alpha N) - floor(c2 log N) - c3 <= mean <= floor(alpha N) + 1.
    rho >= 1: N - 4 <= mean <= N.
    The margin is the distance to the nearest strict-floor bound;
    acceptance additionally allows the candidate roundings.  Reports for
    N below ``MEAN_BOUND_MIN_N`` are flagged not applicable (the sandwich
    is an eventual statement; the threshold is this package's policy).
    """
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    rho = float(rho)
    applicable = N >= MEAN_BOUND_MIN_N
    if rho >= 1.0:
        lo, hi = N - 4.0, float(N)
        margin = min(mean - lo, hi - mean)
        return BoundReport(inequality="mean_near_capacity", n=N, rho=rho,
                           lhs=lo, rhs=hi, margin=margin,
                           passed=lo <= mean <= hi, applicable=applicable,
                           floor_margin=margin,
                           note=f"mean = {mean!r}")

    c = constants if constants is not None else bound_constants(rho)
    log_n = math.log(N)
    lo_floor = (math.floor(c.alpha * N) - math.floor(c.c2 * log_n) - c.c3)
    hi_floor = math.floor(c.alpha * N) + 1.0
    lo_cands = [a - b - c.c3
                for a in integer_part_candidates(c.alpha * N)
                for b in integer_part_candidates(c.c2 * log_n)]
    hi_cands = [a + 1.0 for a in integer_part_candidates(c.alpha * N)]
    passed = (min(lo_cands) <= mean <= max(hi_cands))
    margin = min(mean - lo_floor, hi_floor - mean)
    return BoundReport(inequality="mean_sandwich", n=N, rho=rho,
                       lhs=lo_floor, rhs=hi_floor, margin=margin,
                       passed=passed, applicable=applicable,
                       floor_margin=margin,
                       note=f"mean = {mean!r}, alpha = {c.alpha!r}")


def stirling_ratio(n: int, rho: float) -> float:
    """t(h_n) / sqrt(n), evaluated in the log domain.

    The peak term is Theta(sqrt(n)); no specific constant is asserted,
    only empirical boundedness of this ratio over sweeps.
    """
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    a = solve_alpha(rho).alpha
    h = peak_index(a, n)
    return float(math.exp(_log_term(n, rho, h) - 0.5 * math.log(n)))


def convergence_table(rho: float, Ns: list[int]) -> list[ConvergencePoint]:
    """Mean/variance ratios against their limits along an ascending N grid."""
    if not Ns:
        raise ParameterError("the N grid must be nonempty")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ParameterError(f"the N grid must be strictly ascending, got {Ns}")
    f = height_fraction_limit(rho)
    v = f * f / rho
    rows = []
    for n in Ns:
        d = exactdist.height_distribution(make_params(int(n), rho=rho))
        rows.append(ConvergencePoint(N=int(n), mean=d.mean, variance=d.variance,
                                     mean_ratio=d.mean / n, var_ratio=d.variance / n,
                                     mean_limit=f, var_limit=v))
    return rows


def concentration_window(N: int, rho: float,
                         constants: BoundConstants | None = None) -> tuple[int, int]:
    """The log-width window [h_N - ceil(c2 log N) - ceil(c3), h_N + ceil(c1 log N)]
    that carries almost all of the mass, clipped to [1, N]."""
    c = constants if constants is not None else bound_constants(rho)
    h = peak_index(c.alpha, N)
    lo = h - math.ceil(c.c2 * math.log(N)) - math.ceil(c.c3)
    hi = h + math.ceil(c.c1 * math.log(N))
    return max(1, lo), min(N, hi)


def concentration_mass_bound(N: int, rho: float) -> float:
    """Provable lower bound on the window mass:
    1 - 2 (3 + rho) / ((N-1) rho^2) - 2 / t(h_N)."""
    c = bound_constants(rho)
    h = peak_index(c.alpha, N)
    t_h = math.exp(_log_term(N, rho, h))
    return 1.0 - 2.0 * (3.0 + rho) / ((N - 1) * rho * rho) - 2.0 / t_h


def concentration_mass(N: int, rho: float) -> tuple[float, int, int]:
    """Exact mass of the concentration window, with the window itself."""
    lo, hi = concentration_window(N, rho)
    d = exactdist.height_distribution(make_params(N, rho=rho))
    surv = d.survival_values()
    mass = surv[lo - 1] - (surv[hi] if hi < N else 0.0)
    return float(mass), lo, hi


def wlln_tail_mass(N: int, rho: float, eps: float = 0.05) -> float:
    """P(|H_N / N - f(rho)| > eps), evaluated from the exact law."""
    f = height_fraction_limit(rho)
    d = exactdist.height_distribution(make_params(N, rho=rho))
    k = np.arange(1, N + 1, dtype=float)
    outside = np.abs(k / N - f) > eps
    return float(np.sum(d.pmf[outside]))
