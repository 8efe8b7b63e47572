"""Shift-invariant sub-probability measures with exact log-scale cylinder masses.

Every measure exposes ``log_masses(words)`` on a 2-d int array of words
(one per row) and combines masses in log space, so long cylinders never
underflow.  ``mass`` scales the underlying probability kernel, which lets
vague limits with total mass below one be represented directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, NotIntegrableError
from .shift_space import TransitionStructure, cylinder_array, is_admissible

_STOCH_TOL = 1e-9


def _check_mass(mass: float) -> float:
    mass = float(mass)
    if not 0.0 < mass <= 1.0 + 1e-12:
        raise DomainError(f"total mass must lie in (0, 1], got {mass}")
    return min(mass, 1.0)


def _as_words(words) -> np.ndarray:
    arr = np.asarray(words, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise DomainError("words must be a non-empty 2-d array")
    if (arr < 0).any():
        raise DomainError("symbols are non-negative integers")
    return arr


class ShiftMeasure:
    """Common interface; subclasses implement ``_log_kernel``."""

    mass: float = 1.0
    kind: str = ""

    def _log_kernel(self, words: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_masses(self, words) -> np.ndarray:
        words = _as_words(words)
        return self._log_kernel(words) + math.log(self.mass)

    def log_mass(self, word: Sequence[int]) -> float:
        return float(self.log_masses([list(word)])[0])

    def support(self) -> tuple | None:
        """Sorted symbols of positive mass, or None if the support is infinite."""
        raise NotImplementedError

    def symbol_mass(self, a: int) -> float:
        return math.exp(self.log_mass((a,)))

    def tail_mass(self, m: int) -> float:
        """Mass of the symbols ``>= m``."""
        sup = self.support()
        return float(sum(self.symbol_mass(a) for a in sup if a >= m))

    def total(self) -> float:
        return self.mass

    def to_json(self) -> dict:
        raise NotImplementedError


class Bernoulli(ShiftMeasure):
    """Product measure; either explicit ``weights`` or geometric ``ratio``.

    ``weights`` may be a sequence (symbol ``i`` gets ``weights[i]``) or a
    mapping ``symbol -> weight``.  With ``ratio=r`` the weights are
    ``(1 - r) * r**a`` on the whole of the naturals.
    """

    kind = "bernoulli"

    def __init__(self, weights=None, *, ratio: float | None = None, mass: float = 1.0):
        if (weights is None) == (ratio is None):
            raise DomainError("give exactly one of weights or ratio")
        self.mass = _check_mass(mass)
        self.ratio = None
        self.weights = None
        if ratio is not None:
            if not 0.0 < ratio < 1.0:
                raise DomainError("geometric ratio must lie in (0, 1)")
            self.ratio = float(ratio)
            return
        if isinstance(weights, Mapping):
            items = {int(a): float(w) for a, w in weights.items()}
        else:
            items = {a: float(w) for a, w in enumerate(weights)}
        if any(w < 0 or not math.isfinite(w) for w in items.values()):
            raise DomainError("weights must be finite and non-negative")
        total = math.fsum(items.values())
        if abs(total - 1.0) > _STOCH_TOL:
            raise DomainError(f"Bernoulli weights sum to {total}, not 1")
        self.weights = {a: w / total for a, w in sorted(items.items()) if w > 0}
        top = max(self.weights)
        self._logw = np.full(top + 1, -np.inf)
        for a, w in self.weights.items():
            self._logw[a] = math.log(w)

    def _log_kernel(self, words):
        if self.ratio is not None:
            return (words.shape[1] * math.log1p(-self.ratio)
                    + words.sum(axis=1) * math.log(self.ratio))
        table = self._logw
        inside = words < table.size
        vals = np.where(inside, table[np.minimum(words, table.size - 1)], -np.inf)
        return vals.sum(axis=1)

    def support(self):
        return None if self.ratio is not None else tuple(self.weights)

    def tail_mass(self, m):
        if self.ratio is not None:
            return self.mass * self.ratio ** max(m, 0)
        return super().tail_mass(m)

    def to_markov(self, size: int | None = None) -> "Markov":
        """The same measure as a Markov kernel with identical rows (finite support only)."""
        if self.ratio is not None:
            raise DomainError("geometric Bernoulli has infinite support")
        L = max(self.weights) + 1 if size is None else size
        p = np.zeros(L)
        for a, w in self.weights.items():
            p[a] = w
        return Markov(np.tile(p, (L, 1)), stationary=p, mass=self.mass)

    def to_json(self):
        out = {"kind": "bernoulli"}
        if self.ratio is not None:
            out["ratio"] = self.ratio
        else:
            out["weights"] = {str(a): w for a, w in self.weights.items()}
        out["mass"] = self.mass
        return out


def _stationary(P: np.ndarray) -> np.ndarray:
    L = P.shape[0]
    A = np.vstack([P.T - np.eye(L), np.ones((1, L))])
    b = np.zeros(L + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


class Markov(ShiftMeasure):
    """Stationary Markov chain on symbols ``0..L-1`` with row-stochastic ``matrix``."""

    kind = "markov"

    def __init__(self, matrix, stationary=None, *, mass: float = 1.0):
        P = np.array(matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise DomainError("Markov matrix must be square and non-empty")
        if (P < 0).any() or not np.isfinite(P).all():
            raise DomainError("Markov matrix entries must be finite and non-negative")
        pi = _stationary(P) if stationary is None else np.array(stationary, dtype=float)
        if pi.shape != (P.shape[0],) or (pi < 0).any() or abs(pi.sum() - 1) > _STOCH_TOL:
            raise DomainError("stationary vector must be a probability vector")
        live = pi > 0
        rows = P.sum(axis=1)
        if np.abs(rows[live] - 1).max(initial=0) > _STOCH_TOL:
            raise DomainError("Markov matrix rows must sum to 1")
        if np.abs(pi @ P - pi).max() > 1e-9:
            raise DomainError("stationary vector is not invariant (pi P != pi)")
        self.P = P
        self.pi = pi / pi.sum()
        self.mass = _check_mass(mass)
        with np.errstate(divide="ignore"):
            self._logP = np.log(P)
            self._logpi = np.log(self.pi)

    @property
    def size(self) -> int:
        return self.P.shape[0]

    def _log_kernel(self, words):
        L = self.size
        out = np.full(words.shape[0], -np.inf)
        ok = (words < L).all(axis=1)
        w = words[ok]
        if w.size:
            val = self._logpi[w[:, 0]]
            if w.shape[1] > 1:
                val = val + self._logP[w[:, :-1], w[:, 1:]].sum(axis=1)
            out[ok] = val
        return out

    def support(self):
        return tuple(int(a) for a in np.flatnonzero(self.pi > 0))

    def compatible_with(self, trans: TransitionStructure) -> bool:
        """True if every positive-probability transition is permitted by ``trans``."""
        for a, b in zip(*np.nonzero(self.P)):
            if self.pi[a] > 0 and not trans.allows(int(a), int(b)):
                return False
        return True

    def to_json(self):
        return {"kind": "markov", "matrix": self.P.tolist(),
                "stationary": self.pi.tolist(), "mass": self.mass}


class PeriodicOrbit(ShiftMeasure):
    """Uniform average over the phases of a periodic point ``(w w w ...)``."""

    kind = "orbit"

    def __init__(self, word: Sequence[int], *, mass: float = 1.0):
        word = tuple(int(a) for a in word)
        if not word or min(word) < 0:
            raise DomainError("orbit word must be a non-empty word of symbols")
        self.word = word
        self.mass = _check_mass(mass)

    @property
    def period(self) -> int:
        return len(self.word)

    def _log_kernel(self, words):
        p, n = self.period, words.shape[1]
        orbit = np.array(self.word, dtype=np.int64)
        phases = orbit[(np.arange(p)[:, None] + np.arange(n)[None, :]) % p]
        hits = (words[:, None, :] == phases[None, :, :]).all(axis=2).sum(axis=1)
        with np.errstate(divide="ignore"):
            return np.log(hits / p)

    def support(self):
        return tuple(sorted(set(self.word)))

    def check_admissible(self, trans: TransitionStructure) -> bool:
        return is_admissible(self.word + self.word[:1], trans)

    def to_json(self):
        return {"kind": "orbit", "word": list(self.word), "mass": self.mass}


class Mixture(ShiftMeasure):
    """Non-negative combination of component measures; mass is the weighted sum."""

    kind = "mixture"

    def __init__(self, components: Sequence[ShiftMeasure], weights: Sequence[float]):
        if len(components) != len(weights) or not components:
            raise DomainError("mixture needs matching non-empty components and weights")
        w = [float(x) for x in weights]
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise DomainError("mixture weights must be non-negative")
        self.components = tuple(components)
        self.weights = tuple(w)
        self.mass = _check_mass(math.fsum(x * c.mass for x, c in zip(w, components)))

    def log_masses(self, words):
        words = _as_words(words)
        parts = [math.log(w) + c.log_masses(words)
                 for w, c in zip(self.weights, self.components) if w > 0]
        return np.logaddexp.reduce(np.vstack(parts), axis=0)

    def support(self):
        syms = set()
        for w, c in zip(self.weights, self.components):
            if w == 0:
                continue
            s = c.support()
            if s is None:
                return None
            syms.update(s)
        return tuple(sorted(syms))

    def tail_mass(self, m):
        return math.fsum(w * c.tail_mass(m) for w, c in zip(self.weights, self.components))

    def normalized(self) -> "Mixture":
        """``mu / ||mu||`` as a probability mixture."""
        t = self.mass
        return Mixture(self.components, [w / t for w in self.weights])

    def to_json(self):
        return {"kind": "mixture", "components": [c.to_json() for c in self.components],
                "weights": list(self.weights), "mass": self.mass}


def measure_from_json(doc: Mapping | str) -> ShiftMeasure:
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("kind")
    mass = doc.get("mass", 1.0)
    if kind == "bernoulli":
        if "ratio" in doc:
            return Bernoulli(ratio=doc["ratio"], mass=mass)
        weights = doc["weights"]
        if isinstance(weights, Mapping):
            weights = {int(a): w for a, w in weights.items()}
        return Bernoulli(weights, mass=mass)
    if kind == "markov":
        return Markov(doc["matrix"], doc.get("stationary"), mass=mass)
    if kind == "orbit":
        return PeriodicOrbit(doc["word"], mass=mass)
    if kind == "mixture":
        comps = [measure_from_json(c) for c in doc["components"]]
        return Mixture(comps, doc["weights"])
    raise DomainError(f"unknown measure kind {kind!r}")


def cylinder_log_mass(mu: ShiftMeasure, w: Sequence[int],
                      trans: TransitionStructure | None = None) -> float:
    """``log mu([w])``; ``-inf`` for null cylinders.

    With ``trans`` given, an inadmissible word is a domain error rather
    than a null cylinder.
    """
    if trans is not None and not is_admissible(w, trans):
        raise DomainError(f"word {tuple(w)} is not admissible")
    return mu.log_mass(w)


def total_mass(mu: ShiftMeasure, truncation: int | None = None) -> float:
    """Sum of 1-cylinder masses, as head over ``{0..m-1}`` plus the exact tail."""
    sup = mu.support()
    if truncation is None:
        if sup is None:
            raise DomainError("infinite support: pass a truncation size")
        return math.fsum(mu.symbol_mass(a) for a in sup)
    head = np.exp(mu.log_masses(np.arange(truncation).reshape(-1, 1)))
    return math.fsum(head.tolist()) + mu.tail_mass(truncation)


def vague_gap(mu: ShiftMeasure, nu: ShiftMeasure, depth: int,
              trans: TransitionStructure, truncation_index=None) -> float:
    """Largest ``|mu([w]) - nu([w])|`` over admissible words of length ``<= depth``."""
    gap = 0.0
    for n in range(1, depth + 1):
        words = cylinder_array(trans, truncation_index, n)
        diff = np.abs(np.exp(mu.log_masses(words)) - np.exp(nu.log_masses(words)))
        gap = max(gap, float(diff.max()))
    return gap


# --- integrals of functions of the first symbols ---------------------------

def _series_sum(term: Callable[[np.ndarray], np.ndarray], rtol: float = 1e-13,
                max_terms: int = 1 << 24) -> float:
    """Sum ``term(a)`` over ``a >= 0`` with a ratio-test tail certificate.

    Raises NotIntegrableError when the terms stop decaying (divergence) or
    the certificate cannot be closed within ``max_terms``.
    """
    A = 64
    total = math.fsum(term(np.arange(A)).tolist())
    q = 0.0
    while A <= max_terms:
        window = term(np.arange(A, 2 * A + 1))
        total += math.fsum(window[:-1].tolist())
        A *= 2
        head, nxt = window[:-1], window[1:]
        live = head > 0
        if not live.any() and window[-1] == 0:
            return total
        q = float((nxt[live] / head[live]).max()) if live.any() else math.inf
        if q < 1.0:
            tail = float(window[-1]) / (1.0 - q)
            if tail <= rtol * max(abs(total), 1e-300):
                return total + tail
    err = NotIntegrableError(
        "series terms do not decay: integral diverges" if q >= 1.0
        else "could not certify the tail of the series")
    err.partial = total
    raise err


def integrate_symbol_function(mu: ShiftMeasure, g: Callable[[int], float]) -> float:
    """``sum_a g(a) * mu([a])`` with an exact or certified tail."""
    if isinstance(mu, Mixture):
        return math.fsum(w * integrate_symbol_function(c, g)
                         for w, c in zip(mu.weights, mu.components) if w > 0)
    sup = mu.support()
    if sup is not None:
        return math.fsum(g(a) * mu.symbol_mass(a) for a in sup)
    vec_g = np.vectorize(lambda a: float(g(int(a))), otypes=[float])

    def term(a):
        return vec_g(a) * np.exp(mu.log_masses(a.reshape(-1, 1)))

    try:
        return _series_sum(term)
    except OverflowError:
        raise NotIntegrableError("weight overflows: tail not certifiable") from None


def positive_words(mu: ShiftMeasure, n: int) -> np.ndarray:
    """All length-``n`` words of positive mass (finite support only), lexicographic."""
    sup = mu.support()
    if sup is None:
        raise NotIntegrableError("infinite support: cylinder sums need a truncation")
    syms = np.array(sup, dtype=np.int64)
    words = syms.reshape(-1, 1)
    words = words[np.isfinite(mu.log_masses(words))]
    for _ in range(n - 1):
        k = words.shape[0]
        words = np.hstack([np.repeat(words, syms.size, axis=0), np.tile(syms, k).reshape(-1, 1)])
        words = words[np.isfinite(mu.log_masses(words))]
    return words


def integrate(mu: ShiftMeasure, phi) -> float:
    """``int phi dmu`` for a locally constant ``phi`` with attributes ``depth`` and ``__call__``."""
    if phi.depth == 1:
        return integrate_symbol_function(mu, lambda a: phi((a,)))
    if isinstance(mu, Mixture):
        return math.fsum(w * integrate(c, phi)
                         for w, c in zip(mu.weights, mu.components) if w > 0)
    words = positive_words(mu, phi.depth)
    masses = np.exp(mu.log_masses(words))
    return math.fsum(float(m) * phi(tuple(int(a) for a in w)) for m, w in zip(masses, words))


# --- tightness --------------------------------------------------------------

@dataclass(frozen=True)
class ProperWeight:
    """A function of the first symbol whose sublevel sets are finite."""

    f: Callable[[int], float]
    name: str = "f"

    def __call__(self, a: int) -> float:
        return float(self.f(a))


class TightnessVerdict(NamedTuple):
    status: str  # "tight" | "bound_violated" | "inconclusive"
    index: int | None
    integrals: tuple


def tightness_verdict(seq: Sequence[ShiftMeasure], f: ProperWeight, C: float) -> TightnessVerdict:
    """Check ``int F dmu_k <= C`` for every measure, ``F(x) = f(x_0)``.

    A uniform bound on a proper weight keeps every vague limit a
    probability measure.
    """
    if not seq:
        raise DomainError("empty measure sequence")
    integrals = []
    for k, mu in enumerate(seq):
        try:
            val = integrate_symbol_function(mu, f)
        except NotIntegrableError as exc:
            # non-negative terms: a partial sum above C already violates the bound
            if getattr(exc, "partial", -math.inf) > C:
                return TightnessVerdict("bound_violated", k, tuple(integrals))
            return TightnessVerdict("inconclusive", k, tuple(integrals))
        integrals.append(val)
        if val > C:
            return TightnessVerdict("bound_violated", k, tuple(integrals))
    return TightnessVerdict("tight", None, tuple(integrals))


# --- Kac return masses ------------------------------------------------------

class KacResult(NamedTuple):
    masses: tuple  # mu(A_n) for n = 1..N_max
    weighted_sum: float  # sum_{n <= N_max} n mu(A_n)
    tail: float  # sum_{n > N_max} n mu(A_n), exact
    mass_of_K: float


def kac_return_masses(mu: ShiftMeasure, K: Sequence[int], N_max: int) -> KacResult:
    """First-return masses ``mu(A_n)`` of the set ``[K]`` via taboo matrices.

    ``A_n`` holds the points of ``K`` whose first return to ``K`` happens at
    time ``n``.  For ``n >= 2``,
    ``mu(A_n) = pi_K P_{K,K^c} Q^{n-2} P_{K^c,K} 1`` with ``Q`` the chain
    restricted to the complement of ``K``.
    """
    if isinstance(mu, Bernoulli):
        mu = mu.to_markov()
    if not isinstance(mu, Markov):
        raise DomainError("Kac masses need a Markov measure")
    if N_max < 1:
        raise DomainError("N_max must be >= 1")
    L = mu.size
    Kset = sorted({int(a) for a in K if 0 <= int(a) < L})
    piK = mu.pi[Kset] * mu.mass if Kset else np.zeros(0)
    mass_K = float(piK.sum())
    if mass_K <= 0:
        raise DomainError("the set K has zero measure")
    C = [a for a in range(L) if a not in set(Kset)]
    P = mu.P
    masses = [float(piK @ P[np.ix_(Kset, Kset)].sum(axis=1))]
    if C:
        x = piK @ P[np.ix_(Kset, C)]
        y = P[np.ix_(C, Kset)].sum(axis=1)
        Q = P[np.ix_(C, C)]
        v = x
        for _ in range(2, N_max + 1):
            masses.append(float(v @ y))
            v = v @ Q
        # v = x Q^{N_max-1}; tail = v [ (N_max+1) R + Q R^2 ], R = (I-Q)^{-1}
        I = np.eye(len(C))
        try:
            Ry = np.linalg.solve(I - Q, y)
            RRy = np.linalg.solve(I - Q, Ry)
            tail = float(v @ ((N_max + 1) * Ry + Q @ RRy))
        except np.linalg.LinAlgError:
            tail = math.inf
    else:
        masses.extend([0.0] * (N_max - 1))
        tail = 0.0
    weighted = math.fsum(n * m for n, m in enumerate(masses, start=1))
    return KacResult(tuple(masses), weighted, max(tail, 0.0), mass_K)
