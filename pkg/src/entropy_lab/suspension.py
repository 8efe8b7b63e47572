"""Suspension flows over a shift, handled at the level of invariant measures.

The flow space under the roof is never built.  A flow-invariant measure is
the pair (base measure, roof) together with ``int tau dmu``, and its entropy
comes from Abramov's formula ``h_flow = h_base / int tau dmu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import EntropyEstimate, markov_entropy
from .errors import DomainError, NotIntegrableError
from .measures import ShiftMeasure, integrate, vague_gap
from .shift_space import TransitionStructure, cylinder_array
from .thermodynamics import Potential


@dataclass(frozen=True)
class Roof:
    """Locally constant roof function with a declared positive lower bound."""

    tau: Potential
    lower_bound: float

    def __post_init__(self):
        if not self.lower_bound > 0:
            raise DomainError("roof lower bound must be positive")

    @property
    def depth(self) -> int:
        return self.tau.depth

    def __call__(self, word) -> float:
        v = self.tau(word)
        if v < self.lower_bound:
            raise DomainError(f"roof value {v} on {tuple(word)} is below {self.lower_bound}")
        return v

    @classmethod
    def constant(cls, c: float) -> "Roof":
        return cls(Potential.constant(c), c)

    def to_json(self) -> dict:
        out = self.tau.to_json()
        out["lower_bound"] = self.lower_bound
        return out

    @classmethod
    def from_json(cls, doc) -> "Roof":
        if "lower_bound" not in doc:
            raise DomainError("roof document needs lower_bound")
        return cls(Potential.from_json(doc), float(doc["lower_bound"]))


def roof_integral(mu: ShiftMeasure, tau: Roof, trans: TransitionStructure | None = None,
                  truncation_index=None) -> float:
    """``int tau dmu``.

    Finite-support measures are integrated exactly over their positive
    cylinders.  Otherwise depth-1 roofs use a certified series; deeper
    roofs are summed over the admissible cylinders of the truncation, which
    requires the measure to put no mass beyond it.
    """
    try:
        return integrate(mu, tau)
    except NotIntegrableError as exc:
        if "diverges" in str(exc):
            raise NotIntegrableError(f"roof is not integrable (int tau dmu = inf): {exc}") from None
        if trans is None:
            raise
    m = trans.size(truncation_index)
    if mu.tail_mass(m) > 0:
        raise NotIntegrableError("measure leaves the truncation; deep roof tail not certified")
    words = cylinder_array(trans, truncation_index, tau.depth)
    masses = np.exp(mu.log_masses(words))
    return math.fsum(float(p) * tau(tuple(int(a) for a in w))
                     for p, w in zip(masses, words) if p > 0)


def abramov(h_base: float, roof_int: float) -> float:
    """Flow entropy ``h_base / int tau dmu``."""
    if not roof_int > 0:
        raise DomainError("roof integral must be positive")
    if h_base < 0:
        raise DomainError("base entropy must be non-negative")
    return h_base / roof_int


@dataclass(frozen=True)
class FlowMeasure:
    base: ShiftMeasure
    roof: Roof
    normalizer: float
    flow_entropy: float
    base_entropy: float

    def to_json(self, base_id: str = "base", roof_id: str = "roof") -> dict:
        return {"base_id": base_id, "roof_id": roof_id,
                "normalizer": self.normalizer, "flow_entropy": self.flow_entropy}


def lift_measure(mu: ShiftMeasure, tau: Roof, h_base: float | None = None,
                 trans: TransitionStructure | None = None, truncation_index=None) -> FlowMeasure:
    """Normalized product of ``mu`` with Lebesgue measure under the roof."""
    if abs(mu.total() - 1.0) > 1e-12:
        raise DomainError("only probability measures lift to flow-invariant probabilities")
    norm = roof_integral(mu, tau, trans, truncation_index)
    if h_base is None:
        h_base = markov_entropy(mu)
    return FlowMeasure(mu, tau, norm, abramov(h_base, norm), h_base)


@dataclass(frozen=True)
class SemicontinuityReport:
    vague_gaps: tuple
    gaps_decreasing: bool
    roof_integrals: tuple
    liminf_roof: float
    limit_roof: float
    roof_inequality: bool
    roof_strict: bool
    flow_entropies: tuple
    limsup_flow_entropy: float
    limit_flow_entropy: float | None
    verdict: str  # "holds" | "violated" | "limit not a probability measure"
    tail_start: int

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _tail(n: int) -> int:
    """Start of the last third of ``range(n)``."""
    return n - max(1, math.ceil(n / 3))


def flow_semicontinuity_check(seq: Sequence[ShiftMeasure], limit: ShiftMeasure, tau: Roof,
                              entropies: Sequence | None, trans: TransitionStructure,
                              truncation_index=None, depth: int = 2,
                              tol: float = 1e-6) -> SemicontinuityReport:
    """Check ``int tau dlimit <= liminf int tau dmu_n`` and the flow-entropy limsup.

    liminf/limsup over the sequence are taken over its last third.
    """
    if not seq:
        raise DomainError("empty measure sequence")
    gaps = tuple(vague_gap(mu, limit, depth, trans, truncation_index) for mu in seq)
    start = _tail(len(seq))
    tail_gaps = gaps[start:]
    decreasing = all(b <= a + 1e-15 for a, b in zip(tail_gaps, tail_gaps[1:]))
    if entropies is None:
        entropies = [markov_entropy(mu) for mu in seq]
    hs = [e.value if isinstance(e, EntropyEstimate) else float(e) for e in entropies]
    ints, flows = [], []
    for mu, h in zip(seq, hs):
        r = roof_integral(mu, tau, trans, truncation_index)
        ints.append(r)
        flows.append(abramov(h, r))
    liminf = min(ints[start:])
    lim_int = roof_integral(limit, tau, trans, truncation_index)
    limsup_h = max(flows[start:])
    holds_roof = lim_int <= liminf + tol
    lim_flow = None
    if abs(limit.total() - 1.0) <= 1e-12:
        lim_flow = abramov(markov_entropy(limit), lim_int)
        verdict = "holds" if limsup_h <= lim_flow + tol else "violated"
    else:
        verdict = "limit not a probability measure"
    return SemicontinuityReport(gaps, decreasing, tuple(ints), liminf, lim_int, holds_roof,
                                lim_int < liminf - tol, tuple(flows), limsup_h, lim_flow,
                                verdict, start)
