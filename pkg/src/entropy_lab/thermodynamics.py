"""Locally constant potentials, transfer-operator pressure and Gibbs certificates.

Pressure on a finite truncation is ``log`` of the Perron eigenvalue of the
weighted matrix ``L[a, b] = M[a, b] * exp(phi(a, b))`` (``exp(phi(a))`` for
depth-1 potentials).  The Ruelle-Perron-Frobenius measure is the Markov
chain obtained by conjugating ``L`` with its right Perron vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .entropy import markov_entropy
from .errors import DomainError, NotPrimitiveError
from .measures import Markov, ShiftMeasure, integrate
from .shift_space import TransitionStructure, check_primitive, cylinder_array

POWER_TOL = 1e-12
FAST_ITER = 20_000
POWER_MAX_ITER = 1_000_000


class Potential:
    """Real function of the first ``depth`` symbols.

    Built from an explicit ``values`` table keyed by word tuples, or from a
    callable ``fn(word) -> float``.
    """

    def __init__(self, depth: int, values: Mapping | None = None, *,
                 fn: Callable[[tuple], float] | None = None, sup: float | None = None,
                 spec: dict | None = None):
        if depth < 1:
            raise DomainError("potential depth must be >= 1")
        if (values is None) == (fn is None):
            raise DomainError("give exactly one of values or fn")
        self.depth = int(depth)
        self.values = None
        if values is not None:
            table = {}
            for key, v in values.items():
                key = tuple(int(a) for a in key)
                if len(key) != depth:
                    raise DomainError(f"key {key} does not have length {depth}")
                v = float(v)
                if not math.isfinite(v):
                    raise DomainError("potential values must be finite")
                table[key] = v
            self.values = table
        self.fn = fn
        self.sup = None if sup is None else float(sup)
        self._spec = spec

    def __call__(self, word: Sequence[int]) -> float:
        word = tuple(int(a) for a in word[: self.depth])
        if len(word) != self.depth:
            raise DomainError(f"potential of depth {self.depth} needs {self.depth} symbols")
        if self.values is not None:
            try:
                return self.values[word]
            except KeyError:
                raise DomainError(f"potential undefined on {word}") from None
        return float(self.fn(word))

    @classmethod
    def constant(cls, c: float, depth: int = 1) -> "Potential":
        return cls(depth, fn=lambda w: c, sup=c, spec={"depth": depth, "constant": c})

    @classmethod
    def symbolwise(cls, values: Sequence[float]) -> "Potential":
        """Depth-1 potential with ``phi(a) = values[a]``."""
        return cls(1, {(a,): v for a, v in enumerate(values)})

    @classmethod
    def affine(cls, slope: float, intercept: float) -> "Potential":
        """Depth-1 potential ``a -> slope * a + intercept`` on the whole alphabet."""
        return cls(1, fn=lambda w: slope * w[0] + intercept,
                   spec={"depth": 1, "affine": {"slope": slope, "intercept": intercept}})

    @classmethod
    def markov_log(cls, P) -> "Potential":
        """Depth-2 potential ``log P[a, b]`` on the positive entries of ``P``."""
        P = np.asarray(P, dtype=float)
        return cls(2, {(a, b): math.log(P[a, b]) for a, b in zip(*np.nonzero(P))})

    def _binary(self, other, op) -> "Potential":
        if isinstance(other, Potential):
            depth = max(self.depth, other.depth)
            return Potential(depth, fn=lambda w: op(self(w), other(w)))
        c = float(other)
        return Potential(self.depth, fn=lambda w: op(self(w), c))

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y)

    def __mul__(self, c):
        c = float(c)
        return Potential(self.depth, fn=lambda w: c * self(w))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def table(self, m: int) -> np.ndarray:
        """Values on ``{0..m-1}**depth``; NaN where the potential is undefined."""
        out = np.full((m,) * self.depth, np.nan)
        for idx in np.ndindex(*out.shape):
            try:
                out[idx] = self(idx)
            except DomainError:
                pass
        return out

    def to_json(self) -> dict:
        if self.values is not None:
            out = {"depth": self.depth,
                   "values": {",".join(map(str, k)): v for k, v in sorted(self.values.items())}}
        elif self._spec is not None:
            out = dict(self._spec)
        else:
            raise DomainError("potential built from a bare callable has no JSON form")
        if self.sup is not None:
            out["sup"] = self.sup
        elif self.values is not None:
            out["sup"] = max(self.values.values())
        return out

    @classmethod
    def from_json(cls, doc: Mapping | str) -> "Potential":
        if isinstance(doc, str):
            doc = json.loads(doc)
        depth = int(doc.get("depth", 1))
        if "values" in doc:
            vals = {tuple(int(s) for s in str(k).split(",")): v for k, v in doc["values"].items()}
            return cls(depth, vals, sup=doc.get("sup"))
        if "constant" in doc:
            return cls.constant(float(doc["constant"]), depth)
        if "affine" in doc:
            a = doc["affine"]
            return cls.affine(float(a["slope"]), float(a["intercept"]))
        raise DomainError("potential document needs values, constant or affine")


def weighted_matrix(phi: Potential, trans: TransitionStructure, truncation_index=None):
    """``(L / exp(shift), shift)`` with entries scaled to keep ``exp`` in range."""
    if phi.depth > 2:
        raise DomainError("transfer matrices support depth <= 2 potentials")
    M = trans.matrix(truncation_index)
    m = M.shape[0]
    tab = phi.table(m)
    if phi.depth == 1:
        logL = np.where(M > 0, tab[:, None], -np.inf)
    else:
        logL = np.where(M > 0, tab, -np.inf)
    if np.isnan(logL[M > 0]).any():
        raise DomainError("potential undefined on a permitted transition")
    shift = float(logL[M > 0].max())
    return np.exp(logL - shift), shift


class PerronData(NamedTuple):
    eigenvalue: float
    right: np.ndarray
    left: np.ndarray
    iterations: int


def _power(A: np.ndarray, tol: float, max_iter: int):
    """Perron root and positive vector of a nonnegative primitive matrix.

    Plain power iteration stalls when the spectrum is nearly periodic, so
    after a short run the dense eigenvector is polished by inverse
    iteration just above the root instead.
    """
    n = A.shape[0]
    x = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(1, min(max_iter, FAST_ITER) + 1):
        y = A @ x
        lam = y.sum()
        y = y / lam
        res = np.abs(A @ y - lam * y).sum() / lam
        x = y
        if res < tol:
            return lam, x, it
    w, V = np.linalg.eig(A)
    j = int(np.argmax(w.real))
    lam = float(w[j].real)
    x = np.abs(V[:, j].real)
    x /= x.sum()
    eye = np.eye(n)
    for extra in range(1, 51):
        res = np.abs(A @ x - lam * x).sum() / lam
        if res < tol:
            return lam, x, it + extra
        try:
            y = np.linalg.solve((lam * (1 + 1e-9)) * eye - A, x)
        except np.linalg.LinAlgError:
            y = x
        y = np.abs(y)
        x = y / y.sum()
        lam = float((A @ x).sum())
    raise RuntimeError(f"power iteration did not reach residual {tol} in {max_iter} steps")


def perron(L: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> PerronData:
    """Perron eigenvalue with right/left vectors, each ``l1``-normalized and positive."""
    lam, r, it = _power(L, tol, max_iter)
    _, l, it2 = _power(L.T, tol, max_iter)
    return PerronData(float(lam), r, l, it + it2)


def _require_primitive(trans, truncation_index):
    ok = check_primitive(trans, truncation_index)
    if not ok.primitive:
        raise NotPrimitiveError(
            f"truncation {truncation_index} is not primitive; run check_primitive first"
        )


def transfer_pressure(phi: Potential, trans: TransitionStructure, truncation_index=None) -> float:
    _require_primitive(trans, truncation_index)
    L, shift = weighted_matrix(phi, trans, truncation_index)
    lam, _, _ = _power(L, POWER_TOL, POWER_MAX_ITER)
    return math.log(lam) + shift


class PressureReport(NamedTuple):
    value: float
    per_truncation: tuple
    increments: tuple


def gurevich_pressure(phi: Potential, trans: TransitionStructure) -> PressureReport:
    """Supremum of truncation pressures over the schedule, with the last two increments."""
    vals = tuple(transfer_pressure(phi, trans, i) for i in range(len(trans.truncations)))
    inc = tuple(b - a for a, b in zip(vals, vals[1:]))[-2:]
    return PressureReport(max(vals), vals, inc)


def rpf_equilibrium(phi: Potential, trans: TransitionStructure, truncation_index=None) -> Markov:
    """Markov measure ``P[a,b] = L[a,b] r_b / (lam r_a)``, ``pi ~ l * r``."""
    _require_primitive(trans, truncation_index)
    L, _ = weighted_matrix(phi, trans, truncation_index)
    lam, r, l, _ = perron(L)
    P = L * r[None, :] / (lam * r[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    pi = l * r
    return Markov(P, pi / pi.sum())


# --- Gibbs certificates -----------------------------------------------------

@dataclass(frozen=True)
class GibbsCertificate:
    P: float
    log_G: float
    depth_tested: int
    worst_word: tuple
    bounded: bool
    per_length: tuple = field(default=())

    @property
    def G(self) -> float:
        return math.exp(self.log_G) if self.log_G < 700 else math.inf

    def to_json(self) -> dict:
        return {"P": self.P, "G": self.G, "log_G": self.log_G,
                "depth_tested": self.depth_tested, "worst_word": list(self.worst_word),
                "bounded": self.bounded, "per_length": list(self.per_length)}


def birkhoff_sums(words: np.ndarray, phi: Potential, trans: TransitionStructure,
                  truncation_index=None, boundary: str = "interior") -> np.ndarray:
    """``S_N phi`` for each row of ``words``.

    ``"interior"`` sums the windows of length ``depth`` lying inside the
    word.  ``"least_successor"`` first extends the word by repeatedly
    appending the smallest successor and then sums ``N`` windows.
    """
    m = trans.size(truncation_index)
    N = words.shape[1]
    if boundary == "least_successor" and phi.depth > 1:
        least = np.array([trans.successors_of(a, m)[0] for a in range(m)], dtype=np.int64)
        cols = [words]
        last = words[:, -1]
        for _ in range(phi.depth - 1):
            last = least[last]
            cols.append(last[:, None])
        words = np.hstack(cols)
        windows = N
    elif boundary in ("interior", "least_successor"):
        windows = max(N - phi.depth + 1, 0)
    else:
        raise DomainError(f"unknown boundary convention {boundary!r}")
    if windows == 0:
        return np.zeros(words.shape[0])
    tab = phi.table(m)
    total = np.zeros(words.shape[0])
    for i in range(windows):
        total += tab[tuple(words[:, i + j] for j in range(phi.depth))]
    return total


def gibbs_certificate(mu: ShiftMeasure, phi: Potential, P: float, max_len: int,
                      trans: TransitionStructure, truncation_index=None,
                      boundary: str = "interior") -> GibbsCertificate:
    """Smallest ``G`` with ``G^-1 <= mu([w]) exp(N P - S_N phi(w)) <= G`` for ``|w| <= max_len``."""
    worst, worst_word, per_length = -1.0, (), []
    for N in range(1, max_len + 1):
        words = cylinder_array(trans, truncation_index, N)
        dev = mu.log_masses(words) + N * P - birkhoff_sums(words, phi, trans,
                                                           truncation_index, boundary)
        if np.isnan(dev).any():
            raise DomainError("potential undefined on an admissible word")
        null = np.isinf(dev)
        if null.any():
            i = int(np.flatnonzero(null)[0])
            per_length.append(math.inf)
            return GibbsCertificate(P, math.inf, N, tuple(int(a) for a in words[i]),
                                    False, tuple(per_length))
        absdev = np.abs(dev)
        i = int(absdev.argmax())
        per_length.append(float(absdev[i]))
        if absdev[i] > worst:
            worst, worst_word = float(absdev[i]), tuple(int(a) for a in words[i])
    return GibbsCertificate(P, worst, max_len, worst_word, True, tuple(per_length))


def equilibrium_gap(mu: ShiftMeasure, phi: Potential, trans: TransitionStructure,
                    truncation_index=None) -> float:
    """``pressure(phi) - (h(mu) + int phi dmu)``; zero exactly at the equilibrium state."""
    return transfer_pressure(phi, trans, truncation_index) - (
        markov_entropy(mu) + integrate(mu, phi))


# --- constrained pressure ---------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ConstrainedPressureResult:
    D: float
    value: float
    multiplier: float
    active: bool
    slack: float
    witness: Markov | None
    witness_F: float | None

    def to_json(self) -> dict:
        return {"D": self.D, "value": self.value, "multiplier": self.multiplier,
                "active": self.active, "slack": self.slack, "witness_F": self.witness_F}


def _min_cycle_mean(M: np.ndarray, Fvals: np.ndarray):
    """Minimum mean of ``F`` over cycles of the transition graph, and the edges on such cycles."""
    m = M.shape[0]
    W = np.where(M > 0, Fvals[:, None], np.inf)
    # Karp: D[k, v] = least weight of a k-step walk ending at v
    Dk = np.full((m + 1, m), np.inf)
    Dk[0] = 0.0
    for k in range(1, m + 1):
        Dk[k] = (Dk[k - 1][:, None] + W).min(axis=0)
    with np.errstate(invalid="ignore"):
        ratios = (Dk[m][None, :] - Dk[:m]) / (m - np.arange(m))[:, None]
    ratios = np.where(np.isfinite(Dk[m])[None, :], ratios, -np.inf)
    ratios = np.where(np.isnan(ratios), -np.inf, ratios)
    lam = float(ratios.max(axis=0)[np.isfinite(Dk[m])].min())
    # shortest paths under reduced weights; an edge is critical iff it closes a zero cycle
    R = W - lam
    dist = R.copy()
    for k in range(m):
        dist = np.minimum(dist, dist[:, k][:, None] + dist[k][None, :])
    scale = 1e-9 * max(1.0, float(np.abs(Fvals).max()))
    critical = (M > 0) & (np.abs(R + dist.T) <= scale)
    return lam, critical


def _restricted_pressure(f: Potential, trans, truncation_index, edges: np.ndarray) -> float:
    L, shift = weighted_matrix(f, trans, truncation_index)
    sub = np.where(edges, L, 0.0)
    rho = float(np.abs(np.linalg.eigvals(sub)).max())
    return math.log(rho) + shift if rho > 1e-300 else -math.inf


def constrained_pressure(f: Potential, F: Potential, D: float, trans: TransitionStructure,
                         truncation_index=None, tol: float = 1e-10) -> ConstrainedPressureResult:
    """``sup {h(mu) + int f dmu : int F dmu <= D}`` through the convex dual.

    The dual ``g(t) = pressure(f - t F) + t D`` is minimised over ``t >= 0``
    by golden-section search; ``F`` must be a non-negative depth-1 potential.
    """
    if F.depth != 1:
        raise DomainError("constraint function must have depth 1")
    m = trans.size(truncation_index)
    Fvals = np.array([F((a,)) for a in range(m)])
    if (Fvals < 0).any():
        raise DomainError("constraint function must be non-negative")
    minF, critical = _min_cycle_mean(trans.matrix(truncation_index), Fvals)
    if D < minF - 1e-12:
        raise DomainError(f"budget {D} is below the least invariant mean {minF} of F: "
                          "no admissible measure")

    def pressure_at(t):
        return transfer_pressure(f - t * F, trans, truncation_index)

    def slope(t):
        return D - integrate(rpf_equilibrium(f - t * F, trans, truncation_index), F)

    def result(t, value, active):
        witness = rpf_equilibrium(f - t * F, trans, truncation_index)
        wF = integrate(witness, F)
        primal = markov_entropy(witness) + integrate(witness, f)
        return ConstrainedPressureResult(D, value, t, active, value - primal, witness, wF)

    _require_primitive(trans, truncation_index)
    if slope(0.0) >= 0.0:
        return result(0.0, pressure_at(0.0), False)
    if D <= minF + 1e-12:
        # infimum approached as t -> inf: only cycles of least F-mean survive
        value = _restricted_pressure(f, trans, truncation_index, critical)
        return ConstrainedPressureResult(D, value, math.inf, True, math.nan, None, None)

    hi = 1.0
    while slope(hi) < 0.0:
        hi *= 2.0
        if hi > 2.0**60:
            raise DomainError("dual is unbounded below")
    lo = 0.0

    def g(t):
        return pressure_at(t) + t * D

    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    g1, g2 = g(x1), g(x2)
    while hi - lo > tol:
        if g1 <= g2:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - _INV_PHI * (hi - lo)
            g1 = g(x1)
        else:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + _INV_PHI * (hi - lo)
            g2 = g(x2)
    t = 0.5 * (lo + hi)
    return result(t, g(t), t > 0.0)
