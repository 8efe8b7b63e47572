"""Closed-form and estimated measure-theoretic entropy (nats).

The Katok estimator counts the fewest cylinders of length ``N + k + 1``
covering mass ``1 - delta``.  Those cylinders are exactly the
``(N, theta**k)`` dynamical balls and partition the space, so taking them
in order of decreasing mass gives the minimal cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InsufficientMassError
from .measures import Bernoulli, Markov, Mixture, PeriodicOrbit, ShiftMeasure, integrate
from .shift_space import TransitionStructure, cylinder_array

DEFAULT_DELTA = 0.3


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    estimator: str  # "exact_markov" | "plugin" | "katok"
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> dict:
        out = {"estimator": self.estimator, "value": self.value,
               "params": dict(self.params), "diagnostics": dict(self.diagnostics)}
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def markov_entropy(mu: ShiftMeasure) -> float:
    """``-sum_a pi_a sum_b P_ab log P_ab`` of the normalized measure.

    Bernoulli and periodic-orbit measures are handled as degenerate Markov
    chains; mixtures use affinity of entropy.
    """
    if isinstance(mu, Markov):
        return float(-(mu.pi * _xlogx(mu.P).sum(axis=1)).sum())
    if isinstance(mu, Bernoulli):
        if mu.ratio is not None:
            r = mu.ratio
            return -math.log1p(-r) - r / (1.0 - r) * math.log(r)
        return float(-_xlogx(np.array(list(mu.weights.values()))).sum())
    if isinstance(mu, PeriodicOrbit):
        return 0.0
    if isinstance(mu, Mixture):
        total = mu.mass
        return math.fsum(w * c.mass / total * markov_entropy(c)
                         for w, c in zip(mu.weights, mu.components) if w > 0)
    raise DomainError(f"no closed-form entropy for {type(mu).__name__}")


exact_entropy = markov_entropy


def plugin_entropy(mu: ShiftMeasure, n: int, trans: TransitionStructure,
                   truncation_index=None) -> EntropyEstimate:
    """``H_n / n`` over the admissible length-``n`` cylinders of the truncation."""
    if n < 1:
        raise DomainError("n must be >= 1")
    words = cylinder_array(trans, truncation_index, n)
    masses = np.exp(mu.log_masses(words))
    H = float(-_xlogx(masses).sum())
    covered = math.fsum(masses.tolist())
    return EntropyEstimate(
        H / n, "plugin",
        {"n": n, "truncation_index": truncation_index},
        {"H_n": H, "mass_deficit": max(mu.total() - covered, 0.0),
         "cylinders": int(words.shape[0])},
    )


def minimal_cover(mu: ShiftMeasure, length: int, delta: float, trans: TransitionStructure,
                  truncation_index=None, relative: bool = False):
    """Fewest length-``length`` cylinders of total mass ``>= 1 - delta``.

    Returns ``(count, covered_mass, available_mass)``.  With ``relative``
    the target is ``(1 - delta) * ||mu||``.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    words = cylinder_array(trans, truncation_index, length)
    logm = mu.log_masses(words)
    order = np.argsort(-logm, kind="stable")  # ties stay lexicographic
    masses = np.exp(logm[order])
    csum = np.cumsum(masses)
    available = float(csum[-1])
    target = (1.0 - delta) * (mu.total() if relative else 1.0)
    slack = 1e-12 * target
    if available < target - slack:
        raise InsufficientMassError(
            f"truncation carries mass {available:.6g} < target {target:.6g}"
        )
    count = int(np.searchsorted(csum, target - slack, side="left")) + 1
    return count, float(csum[count - 1]), available


def katok_estimate(mu: ShiftMeasure, N: int, k: int, delta: float,
                   trans: TransitionStructure, truncation_index=None,
                   relative: bool = False) -> EntropyEstimate:
    """Growth rate of the exact minimal cover by ``(N, theta**k)`` balls.

    The ``(N, theta**k)`` ball is the ``(N + k + 1)``-cylinder, i.e. the
    ``(N + k, 1)`` ball, so the count is normalized by ``N + k``; for
    ``k = 0`` this is ``(1/N) log N_mu(N, 1; delta)``.
    """
    if N < 1 or k < 0:
        raise DomainError("need N >= 1 and k >= 0")
    count, covered, available = minimal_cover(mu, N + k + 1, delta, trans,
                                              truncation_index, relative)
    return EntropyEstimate(
        math.log(count) / (N + k), "katok",
        {"n": N, "k": k, "delta": delta, "truncation_index": truncation_index},
        {"count": count, "covered_mass": covered,
         "mass_deficit": max(mu.total() - available, 0.0), "cylinder_length": N + k + 1},
    )


class SpreadReport(NamedTuple):
    estimates: tuple  # one EntropyEstimate per k
    spread: float
    trend: tuple  # (N - 1, N) estimates at the first k


def simplified_formula_report(mu: ShiftMeasure, N: int, delta: float, k_range: Sequence[int],
                              trans: TransitionStructure, truncation_index=None) -> SpreadReport:
    """Katok estimates across radii ``theta**k``; the spread should stay small."""
    ks = list(k_range)
    if not ks:
        raise DomainError("empty k range")
    ests = tuple(katok_estimate(mu, N, k, delta, trans, truncation_index) for k in ks)
    vals = [e.value for e in ests]
    trend = ()
    if N > 1:
        prev = katok_estimate(mu, N - 1, ks[0], delta, trans, truncation_index).value
        trend = (prev, vals[0])
    return SpreadReport(ests, max(vals) - min(vals), trend)


# --- sampling ---------------------------------------------------------------

def _as_chain(mu: ShiftMeasure) -> Markov:
    if isinstance(mu, Markov):
        return mu
    if isinstance(mu, Bernoulli):
        return mu.to_markov()
    raise DomainError("sampling needs a Markov or finite Bernoulli measure")


def sample_paths(mu: ShiftMeasure, length: int, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    """``count`` stationary sample paths of the chain, one per row."""
    chain = _as_chain(mu)
    L = chain.size
    cum_pi = np.cumsum(chain.pi)
    cum_P = np.cumsum(chain.P, axis=1)
    paths = np.empty((count, length), dtype=np.int64)
    u = rng.random((count, length))
    paths[:, 0] = np.minimum(np.searchsorted(cum_pi, u[:, 0], side="right"), L - 1)
    for i in range(1, length):
        rows = cum_P[paths[:, i - 1]]
        paths[:, i] = np.minimum((rows <= u[:, i, None]).sum(axis=1), L - 1)
    return paths


class SMBSummary(NamedTuple):
    mean: float
    std: float
    fraction_inside: float
    entropy: float
    epsilon: float
    n: int
    samples: int
    seed: int


def smb_deviation(mu: ShiftMeasure, n: int, sample_count: int, seed: int,
                  epsilon: float = 0.05) -> SMBSummary:
    """Distribution of ``-(1/n) log mu([x_0..x_{n-1}])`` along sampled orbits.

    ``fraction_inside`` estimates the mass of the points whose ``n``-cylinder
    has mass within ``exp(-n (h +- epsilon))``.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    paths = sample_paths(mu, n, sample_count, rng)
    vals = -_as_chain(mu).log_masses(paths) / n
    h = markov_entropy(mu)
    return SMBSummary(float(vals.mean()), float(vals.std(ddof=1)) if sample_count > 1 else 0.0,
                      float((np.abs(vals - h) <= epsilon).mean()), h, epsilon, n,
                      sample_count, seed)


class BirkhoffSummary(NamedTuple):
    fraction: float
    space_average: float
    epsilon: float
    n: int
    samples: int
    seed: int
    scale: str = "single N = n"


def birkhoff_concentration(mu: ShiftMeasure, phi, n: int, epsilon: float,
                           sample_count: int, seed: int) -> BirkhoffSummary:
    """Fraction of sampled orbits with ``|S_n phi / n - int phi dmu| < epsilon``."""
    chain = _as_chain(mu)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    paths = sample_paths(chain, n + phi.depth - 1, sample_count, rng)
    tab = phi.table(chain.size)
    S = np.zeros(sample_count)
    for i in range(n):
        S += tab[tuple(paths[:, i + j] for j in range(phi.depth))]
    avg = integrate(chain, phi)
    frac = float((np.abs(S / n - avg) < epsilon).mean())
    return BirkhoffSummary(frac, avg, epsilon, n, sample_count, seed)


# --- tail bounds ------------------------------------------------------------

def tail_entropy(masses: Sequence[float], M: int) -> float:
    """``-sum_{k >= M} m_k log m_k`` with ``masses[k-1] = m_k``."""
    tail = np.asarray(masses[max(M, 1) - 1:], dtype=float)
    return float(-_xlogx(tail).sum())


def tail_entropy_bound(masses: Sequence[float], M: int) -> float:
    """``sum_{k >= M} k m_k + (2/e) sum_{k >= M} exp(-k/2)``.

    Terms with ``m_k > e^-k`` satisfy ``-m log m < k m``; the rest satisfy
    ``-m log m <= (2/e) sqrt(m) <= (2/e) e^{-k/2}`` since
    ``sqrt(t) log(1/t) <= 2/e``.  The geometric part is summed in closed form.
    """
    M = max(int(M), 1)
    m = np.asarray(masses, dtype=float)
    if (m < 0).any() or (m > 1).any():
        raise DomainError("masses must lie in [0, 1]")
    ks = np.arange(1, m.size + 1)
    sel = ks >= M
    linear = math.fsum((ks[sel] * m[sel]).tolist())
    geometric = 2.0 / math.e * math.exp(-M / 2.0) / (1.0 - math.exp(-0.5))
    bound = linear + geometric
    if tail_entropy(m, M) > bound * (1 + 1e-12):
        raise ArithmeticError("tail entropy exceeds its bound")
    return bound
