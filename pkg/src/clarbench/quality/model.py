"""Censored-Beta model of clarification quality per backend.

Each backend's latent quality is Beta(alpha, beta); an attempt is accepted
when its quality clears a per-attempt threshold tau_k.  Accepted attempts
reveal a quality score, rejected ones only the fact of rejection.  Parameters
and thresholds are fitted jointly by monotone gradient ascent on sufficient
statistics, with central finite-difference gradients on an unconstrained
reparameterization (log shapes, logit thresholds).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Iterable, Sequence

from .special import (
    beta_inverse_cdf,
    log_beta,
    log_reg_inc_beta,
    log_survival_beta,
)

# Finite-difference gradients re-evaluate the likelihood with all but one
# parameter unchanged; caching the per-(tau, alpha, beta) terms makes those
# evaluations nearly free.
_cached_log_inc_beta = lru_cache(maxsize=16384)(log_reg_inc_beta)
_cached_log_survival = lru_cache(maxsize=16384)(log_survival_beta)
_cached_log_beta = lru_cache(maxsize=4096)(log_beta)

QUALITY_EPS = 1e-6


class LikelihoodForm(Enum):
    # As printed: accepted terms multiply the density by the survival at tau.
    PAPER_PRODUCT = "paper"
    # Standard censoring: accepted -> density only; rejected -> CDF at tau.
    STANDARD_CENSORED = "censored"


@dataclass(frozen=True)
class Observation:
    """One clarification attempt: attempt index k, backend index l (1-based),
    acceptance flag, and the observed quality iff accepted."""

    k: int
    backend: int
    accepted: bool
    quality: float | None = None

    def __post_init__(self) -> None:
        if self.k < 1 or self.backend < 1:
            raise ValueError("attempt and backend indices are 1-based")
        if self.accepted != (self.quality is not None):
            raise ValueError("quality must be present iff the attempt was accepted")


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Beta parameters must be strictly positive")


def beta_mean(params: BetaParams) -> float:
    return params.alpha / (params.alpha + params.beta)


@dataclass(frozen=True)
class ThresholdVector:
    tau: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.tau or any(not (0.0 < t < 1.0) for t in self.tau):
            raise ValueError("thresholds must lie in (0, 1)")

    def at(self, k: int) -> float:
        # Attempts beyond the fitted range share the last threshold.
        return self.tau[min(k, len(self.tau)) - 1]


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 2000
    learning_rate: float = 0.01
    tol: float = 1e-8
    fd_step: float = 1e-5
    cdf_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        for name in ("learning_rate", "tol", "fd_step", "cdf_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class _Stats:
    """Sufficient statistics: the likelihood depends on the data only through
    per-backend accepted-quality sums and per-(backend, attempt) counts."""

    def __init__(self, observations: Sequence[Observation]):
        self.n_backends = max((o.backend for o in observations), default=0)
        self.max_k = max((o.k for o in observations), default=1)
        L, K = self.n_backends, self.max_k
        self.n_acc = [0] * (L + 1)
        self.sum_log_e = [0.0] * (L + 1)
        self.sum_log_1me = [0.0] * (L + 1)
        self.acc_lk = [[0] * (K + 1) for _ in range(L + 1)]
        self.rej_lk = [[0] * (K + 1) for _ in range(L + 1)]
        self.min_acc_e: list[float | None] = [None] * (K + 1)
        self.clamp_count = 0
        self.n_obs = len(observations)
        for o in observations:
            if o.accepted:
                e = o.quality
                if e < QUALITY_EPS or e > 1.0 - QUALITY_EPS:
                    e = min(max(e, QUALITY_EPS), 1.0 - QUALITY_EPS)
                    self.clamp_count += 1
                self.n_acc[o.backend] += 1
                self.sum_log_e[o.backend] += math.log(e)
                self.sum_log_1me[o.backend] += math.log1p(-e)
                self.acc_lk[o.backend][o.k] += 1
                prev = self.min_acc_e[o.k]
                self.min_acc_e[o.k] = e if prev is None else min(prev, e)
            else:
                self.rej_lk[o.backend][o.k] += 1

    def identifiable(self) -> list[bool]:
        return [self.n_acc[l] > 0 for l in range(1, self.n_backends + 1)]


@dataclass
class QualityDataset:
    observations: tuple[Observation, ...]
    backend_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self._stats = _Stats(self.observations)
        if self.backend_names and len(self.backend_names) < self._stats.n_backends:
            raise ValueError("fewer backend names than backend indices")

    @property
    def stats(self) -> _Stats:
        return self._stats

    @property
    def clamp_count(self) -> int:
        return self._stats.clamp_count

    @classmethod
    def from_event_dicts(
        cls, rows: Iterable[dict[str, Any]], backend_order: Sequence[str] | None = None
    ) -> "QualityDataset":
        """Build from exported clarification-event JSON rows."""
        rows = list(rows)
        if backend_order is None:
            backend_order = sorted({r["backend"] for r in rows})
        index = {name: i + 1 for i, name in enumerate(backend_order)}
        obs = tuple(
            Observation(
                k=int(r["attempt_index"]),
                backend=index[r["backend"]],
                accepted=bool(r["accepted"]),
                quality=r.get("observed_quality") if r["accepted"] else None,
            )
            for r in rows
        )
        return cls(obs, tuple(backend_order))

    @classmethod
    def from_jsonl(cls, path: str, backend_order: Sequence[str] | None = None) -> "QualityDataset":
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        return cls.from_event_dicts(rows, backend_order)


def _ll_from_stats(
    st: _Stats,
    params: Sequence[BetaParams],
    thresholds: ThresholdVector,
    form: LikelihoodForm,
) -> float:
    """Log-likelihood from sufficient statistics.

    Accepted: log f(e; a_l, b_l), plus log(1 - I_tau(a_l, b_l)) in the
    product form.  Rejected: log I_tau(a_l, b_l).
    """
    total = 0.0
    for l in range(1, st.n_backends + 1):
        p = params[l - 1]
        a, b = p.alpha, p.beta
        if st.n_acc[l]:
            total += (
                (a - 1.0) * st.sum_log_e[l]
                + (b - 1.0) * st.sum_log_1me[l]
                - st.n_acc[l] * _cached_log_beta(a, b)
            )
        for k in range(1, st.max_k + 1):
            n_acc = st.acc_lk[l][k]
            n_rej = st.rej_lk[l][k]
            if n_acc == 0 and n_rej == 0:
                continue
            tau = thresholds.at(k)
            if n_rej:
                total += n_rej * _cached_log_inc_beta(tau, a, b)
            if n_acc and form is LikelihoodForm.PAPER_PRODUCT:
                total += n_acc * _cached_log_survival(tau, a, b)
    return total


def log_likelihood(
    data: QualityDataset,
    params: Sequence[BetaParams],
    thresholds: ThresholdVector,
    form: LikelihoodForm = LikelihoodForm.PAPER_PRODUCT,
) -> float:
    st = data.stats
    if len(params) < st.n_backends:
        raise ValueError(f"need params for {st.n_backends} backends, got {len(params)}")
    return _ll_from_stats(st, params, thresholds, form)


@dataclass
class FitResult:
    params: list[BetaParams]
    thresholds: ThresholdVector
    log_likelihood: float
    trace: list[float]
    means: list[float]
    backend_names: tuple[str, ...]
    non_identifiable: list[int] = field(default_factory=list)  # 1-based indices
    clamp_count: int = 0
    iterations: int = 0
    converged: bool = False
    form: str = LikelihoodForm.PAPER_PRODUCT.value

    def to_dict(self) -> dict[str, Any]:
        names = list(self.backend_names) or [
            f"backend_{i+1}" for i in range(len(self.params))
        ]
        return {
            "form": self.form,
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "clamp_count": self.clamp_count,
            "non_identifiable": [names[i - 1] for i in self.non_identifiable],
            "thresholds": list(self.thresholds.tau),
            "backends": {
                names[i]: {
                    "alpha": p.alpha,
                    "beta": p.beta,
                    "mean": self.means[i],
                }
                for i, p in enumerate(self.params)
            },
        }


def _unpack(theta: list[float], n_backends: int, n_taus: int) -> tuple[list[BetaParams], ThresholdVector]:
    params = [
        BetaParams(math.exp(theta[2 * i]), math.exp(theta[2 * i + 1]))
        for i in range(n_backends)
    ]
    taus = tuple(1.0 / (1.0 + math.exp(-t)) for t in theta[2 * n_backends :])
    return params, ThresholdVector(taus)


def _profile_thresholds(st: _Stats) -> ThresholdVector:
    """Closed-form threshold MLE under the standard censored likelihood.

    Acceptance at attempt k means the observed quality cleared tau_k, so the
    likelihood is increasing in tau_k up to the smallest accepted quality at
    that attempt; the maximizer sits exactly on that boundary.  Attempts with
    no accepted observation leave tau unconstrained from above.
    """
    taus = []
    for k in range(1, st.max_k + 1):
        e_min = st.min_acc_e[k]
        if e_min is None:
            taus.append(1.0 - QUALITY_EPS)
        else:
            taus.append(min(max(e_min, QUALITY_EPS), 1.0 - QUALITY_EPS))
    return ThresholdVector(tuple(taus))


def fit_mle(
    data: QualityDataset,
    cfg: FitConfig = FitConfig(),
    form: LikelihoodForm = LikelihoodForm.PAPER_PRODUCT,
) -> FitResult:
    """Joint MLE of per-backend Beta shapes and per-attempt thresholds.

    Shapes (and, in the product form, threshold logits) are optimized by
    monotone gradient ascent: a step that would lower the likelihood is halved
    until it improves, so the trace never decreases and longer budgets never
    hurt.  Under the standard censored form the thresholds have a closed-form
    profile maximizer (the smallest accepted quality per attempt), which is
    substituted directly; optimizing them by unconstrained ascent would push
    them to 1 and erase the censoring correction.  Backends without any
    accepted observation are flagged and left at the initial parameters.
    """
    st = data.stats
    L = st.n_backends
    if L == 0:
        return FitResult([], ThresholdVector((0.5,)), 0.0, [0.0], [], data.backend_names)
    K = st.max_k
    identifiable = st.identifiable()
    non_ident = [l for l in range(1, L + 1) if not identifiable[l - 1]]

    # alpha = beta = 1, tau = 0.5 everywhere.
    theta = [0.0] * (2 * L) + [0.0] * K
    free = [i for l in range(L) if identifiable[l] for i in (2 * l, 2 * l + 1)]
    fixed_taus: ThresholdVector | None = None
    if form is LikelihoodForm.PAPER_PRODUCT:
        free += list(range(2 * L, 2 * L + K))
    else:
        fixed_taus = _profile_thresholds(st)

    def unpack(vec: list[float]) -> tuple[list[BetaParams], ThresholdVector]:
        params, taus = _unpack(vec, L, K)
        return params, fixed_taus if fixed_taus is not None else taus

    def objective(vec: list[float]) -> float:
        params, taus = unpack(vec)
        return _ll_from_stats(st, params, taus, form)

    ll = objective(theta)
    trace = [ll]
    step = cfg.learning_rate
    iterations = 0
    converged = False
    for _ in range(cfg.max_iters):
        iterations += 1
        grad = [0.0] * len(theta)
        h = cfg.fd_step
        for i in free:
            orig = theta[i]
            theta[i] = orig + h
            up = objective(theta)
            theta[i] = orig - h
            down = objective(theta)
            theta[i] = orig
            grad[i] = (up - down) / (2.0 * h)
        gnorm = math.sqrt(sum(g * g for g in grad))
        if gnorm == 0.0:
            converged = True
            break
        direction = [g / gnorm for g in grad]
        improved = False
        trial = step * 2.0
        for _ in range(60):
            cand = [t + trial * d for t, d in zip(theta, direction)]
            cand_ll = objective(cand)
            if cand_ll >= ll:
                theta = cand
                delta = cand_ll - ll
                ll = cand_ll
                improved = True
                break
            trial *= 0.5
        trace.append(ll)
        if not improved:
            converged = True
            break
        step = trial
        if delta < cfg.tol:
            converged = True
            break

    params, taus = unpack(theta)
    means = [beta_mean(p) for p in params]
    return FitResult(
        params=params,
        thresholds=taus,
        log_likelihood=ll,
        trace=trace,
        means=means,
        backend_names=data.backend_names,
        non_identifiable=non_ident,
        clamp_count=st.clamp_count,
        iterations=iterations,
        converged=converged,
        form=form.value,
    )


def generate_events(
    params: Sequence[BetaParams],
    thresholds: ThresholdVector,
    n_events_per_backend: int,
    seed: int,
) -> QualityDataset:
    """Synthetic generator via inverse-CDF sampling of the quality draw.

    Simulates accept/reject sequences: attempt k is accepted iff its sampled
    quality reaches tau_k; rejected attempts are logged without quality.
    """
    rng = random.Random(seed)
    observations: list[Observation] = []
    for l, p in enumerate(params, start=1):
        count = 0
        while count < n_events_per_backend:
            k = 1
            while count < n_events_per_backend:
                e = beta_inverse_cdf(rng.random(), p.alpha, p.beta)
                if e >= thresholds.at(k):
                    observations.append(Observation(k, l, True, e))
                    count += 1
                    break
                observations.append(Observation(k, l, False, None))
                count += 1
                k += 1
    return QualityDataset(tuple(observations))
