"""Significance tests for judge tallies: chi-square goodness of fit against
uniform outcomes and an exact two-sided binomial test with draws excluded.

The chi-square survival function is computed from the regularized incomplete
gamma function (series for x < s+1, continued fraction otherwise), which at
df=2 collapses to exp(-x/2) and is validated against that closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

_EPS = 1e-15
_MAX_ITERS = 500


def _gamma_series(s: float, x: float) -> float:
    """P(s, x) by series expansion; valid for x < s + 1."""
    term = 1.0 / s
    total = term
    n = s
    for _ in range(_MAX_ITERS):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_cf(s: float, x: float) -> float:
    """Q(s, x) by continued fraction (modified Lentz); valid for x >= s + 1."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITERS + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + s * math.log(x) - math.lgamma(s))


def reg_upper_gamma(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x)."""
    if s <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _gamma_series(s, x)
    return _gamma_cf(s, x)


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function P(X >= x) with df degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x <= 0:
        return 1.0
    return reg_upper_gamma(df / 2.0, x / 2.0)


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    df: int
    p_value: float


def chi_square_uniform(counts: Sequence[int]) -> Chi2Result:
    """Goodness of fit of observed counts against equal expected frequencies."""
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    total = sum(counts)
    if total == 0:
        raise ValueError("chi-square test requires a non-empty tally")
    expected = total / len(counts)
    stat = sum((c - expected) ** 2 / expected for c in counts)
    df = len(counts) - 1
    return Chi2Result(stat, df, chi2_sf(stat, df))


def _log_binom_pmf(k: int, n: int) -> float:
    return (
        math.lgamma(n + 1)
        - math.lgamma(k + 1)
        - math.lgamma(n - k + 1)
        - n * math.log(2.0)
    )


@dataclass(frozen=True)
class BinomialResult:
    k: int
    n: int
    p_value: float
    alternative: str


def binomial_test(k: int, n: int, alternative: str = "two-sided") -> BinomialResult:
    """Exact binomial test against p = 1/2.

    Two-sided p sums the probabilities of all outcomes no more likely than the
    observed one; by symmetry this equals the doubled tail capped at 1.
    """
    if not (0 <= k <= n) or n == 0:
        raise ValueError(f"need 0 <= k <= n with n > 0, got k={k}, n={n}")
    log_obs = _log_binom_pmf(k, n)
    if alternative == "greater":
        tail = [_log_binom_pmf(i, n) for i in range(k, n + 1)]
    elif alternative == "less":
        tail = [_log_binom_pmf(i, n) for i in range(0, k + 1)]
    elif alternative == "two-sided":
        tail = [
            lp
            for i in range(0, n + 1)
            if (lp := _log_binom_pmf(i, n)) <= log_obs + 1e-9
        ]
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    m = max(tail)
    p = math.exp(m) * sum(math.exp(lp - m) for lp in tail)
    return BinomialResult(k, n, min(p, 1.0), alternative)


@dataclass(frozen=True)
class SignificanceReport:
    chi2: Chi2Result
    binomial: BinomialResult | None  # None when no A/B outcomes exist

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "chi_square": {
                "statistic": self.chi2.statistic,
                "df": self.chi2.df,
                "p_value": self.chi2.p_value,
            }
        }
        if self.binomial is None:
            out["binomial"] = None
        else:
            out["binomial"] = {
                "k": self.binomial.k,
                "n": self.binomial.n,
                "p_value": self.binomial.p_value,
                "alternative": self.binomial.alternative,
            }
        return out


def significance_tests(
    a: int, b: int, tie: int, alternative: str = "two-sided"
) -> SignificanceReport:
    """Chi-square over (A, B, TIE) against uniform thirds plus the A-vs-B
    binomial test with draws excluded."""
    chi2 = chi_square_uniform([a, b, tie])
    binom = binomial_test(a, a + b, alternative) if a + b > 0 else None
    return SignificanceReport(chi2, binom)
