"""One-sided topological Markov shifts over finite or countable alphabets.

A countable shift is handled through a schedule of finite truncations
``{0, ..., m-1}``; every exponential enumeration runs on one truncation.
Words are plain tuples of non-negative ints and stand in for the
cylinder sets they determine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import BudgetError, DomainError, InsufficientDataError

DEFAULT_BUDGET = 10**8

Word = tuple


@dataclass(frozen=True)
class Alphabet:
    kind: str = "finite"
    size: int | None = None

    def __post_init__(self):
        if self.kind == "finite":
            if self.size is None or self.size < 1:
                raise DomainError("finite alphabet needs size >= 1")
        elif self.kind == "countable":
            if self.size is not None:
                raise DomainError("countable alphabet takes no size")
        else:
            raise DomainError(f"unknown alphabet kind {self.kind!r}")

    def __contains__(self, symbol) -> bool:
        if isinstance(symbol, (bool, np.bool_)) or not isinstance(symbol, (int, np.integer)):
            return False
        if symbol < 0:
            return False
        return self.kind == "countable" or symbol < self.size

    def to_json(self) -> dict:
        if self.kind == "finite":
            return {"kind": "finite", "size": self.size}
        return {"kind": "countable"}


@dataclass(frozen=True)
class TransitionStructure:
    """0/1 transition matrix given by successor lists or a named rule.

    ``successors`` is either a mapping ``symbol -> sorted tuple`` or ``None``
    when ``rule`` is one of ``"full"`` (every transition allowed) or
    ``"band"`` (``a -> b`` iff ``|a - b| <= width``).
    """

    alphabet: Alphabet
    successors: Mapping[int, tuple] | None = None
    rule: str | None = None
    params: Mapping = field(default_factory=dict)
    truncations: tuple = ()
    bip: bool = False

    def __post_init__(self):
        if (self.successors is None) == (self.rule is None):
            raise DomainError("give exactly one of successors or rule")
        if self.rule is not None and self.rule not in ("full", "band"):
            raise DomainError(f"unknown successor rule {self.rule!r}")
        if self.rule == "band" and int(self.params.get("width", -1)) < 0:
            raise DomainError("band rule needs a non-negative width")
        if self.successors is not None:
            clean = {}
            for a, succ in self.successors.items():
                a = int(a)
                if a not in self.alphabet:
                    raise DomainError(f"symbol {a} is not in the alphabet")
                succ = tuple(sorted({int(b) for b in succ}))
                for b in succ:
                    if b not in self.alphabet:
                        raise DomainError(f"successor {b} of {a} is not in the alphabet")
                clean[a] = succ
            object.__setattr__(self, "successors", clean)
        truncs = tuple(int(m) for m in self.truncations)
        if not truncs:
            if self.alphabet.kind == "countable":
                raise DomainError("countable alphabets need a truncation schedule")
            truncs = (self.alphabet.size,)
        if any(b <= a for a, b in zip(truncs, truncs[1:])):
            raise DomainError("truncation schedule must be strictly increasing")
        if truncs[0] < 1:
            raise DomainError("truncation sizes must be positive")
        if self.alphabet.kind == "finite" and truncs[-1] > self.alphabet.size:
            raise DomainError("truncation exceeds the alphabet size")
        object.__setattr__(self, "truncations", truncs)
        object.__setattr__(self, "params", dict(self.params))
        for i, m in enumerate(truncs):
            for a in range(m):
                if not self.successors_of(a, m):
                    raise DomainError(
                        f"symbol {a} has no successor inside truncation {i} (size {m})"
                    )

    def successors_of(self, a: int, m: int | None = None) -> tuple:
        """Sorted successors of ``a``, restricted to ``{0..m-1}`` when ``m`` is given."""
        if a not in self.alphabet:
            raise DomainError(f"symbol {a} is not in the alphabet")
        if self.successors is not None:
            succ = self.successors.get(a, ())
            return succ if m is None else tuple(b for b in succ if b < m)
        if m is None:
            if self.alphabet.kind == "countable":
                if self.rule == "full":
                    raise DomainError("full countable successor set is infinite; pass a truncation")
                m = a + int(self.params["width"]) + 1
            else:
                m = self.alphabet.size
        if self.rule == "full":
            return tuple(range(m))
        width = int(self.params["width"])
        return tuple(range(max(0, a - width), min(m, a + width + 1)))

    def allows(self, a: int, b: int) -> bool:
        if a not in self.alphabet or b not in self.alphabet:
            raise DomainError(f"transition ({a}, {b}) leaves the alphabet")
        if self.successors is not None:
            return b in self.successors.get(a, ())
        if self.rule == "full":
            return True
        return abs(a - b) <= int(self.params["width"])

    def size(self, truncation_index: int | None = None) -> int:
        if truncation_index is None:
            truncation_index = -1
        try:
            return self.truncations[truncation_index]
        except IndexError:
            raise DomainError(f"no truncation with index {truncation_index}") from None

    def matrix(self, truncation_index: int | None = None) -> np.ndarray:
        """The restricted 0/1 matrix on the given truncation."""
        m = self.size(truncation_index)
        M = np.zeros((m, m), dtype=np.int64)
        for a in range(m):
            M[a, list(self.successors_of(a, m))] = 1
        return M

    def to_json(self) -> dict:
        if self.successors is not None:
            succ = {str(a): list(s) for a, s in sorted(self.successors.items())}
        else:
            succ = {"rule": self.rule}
            if self.params:
                succ["params"] = dict(self.params)
        out = {
            "alphabet": self.alphabet.to_json(),
            "successors": succ,
            "truncations": list(self.truncations),
        }
        if self.bip:
            out["bip"] = True
        return out

    @classmethod
    def from_json(cls, doc: Mapping | str) -> "TransitionStructure":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            alph = doc["alphabet"]
            alphabet = Alphabet(alph["kind"], alph.get("size"))
            succ = doc["successors"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed transition structure document: {exc}") from None
        truncs = tuple(doc.get("truncations", ()))
        bip = bool(doc.get("bip", False))
        if "rule" in succ:
            return cls(alphabet, rule=succ["rule"], params=succ.get("params") or {},
                       truncations=truncs, bip=bip)
        return cls(alphabet, successors={int(k): v for k, v in succ.items()},
                   truncations=truncs, bip=bip)


def full_shift(m: int) -> TransitionStructure:
    return TransitionStructure(Alphabet("finite", m), rule="full")


def golden_mean() -> TransitionStructure:
    """The shift forbidding the word ``11``."""
    return TransitionStructure(Alphabet("finite", 2), successors={0: (0, 1), 1: (0,)})


def countable_full_shift(truncations: Sequence[int]) -> TransitionStructure:
    return TransitionStructure(Alphabet("countable"), rule="full", truncations=tuple(truncations))


def is_admissible(word: Sequence[int], trans: TransitionStructure) -> bool:
    for a in word:
        if a not in trans.alphabet:
            raise DomainError(f"symbol {a} is not in the alphabet")
    return all(trans.allows(a, b) for a, b in zip(word, word[1:]))


def ball_as_cylinder(center_prefix: Sequence[int], N: int, k: int) -> Word:
    """The word whose cylinder equals the ``(N, theta**k)`` dynamical ball.

    Under ``d_theta`` two points are within ``theta**k`` for the first ``N``
    iterates exactly when they share their first ``N + k + 1`` symbols.
    """
    if N < 0 or k < 0:
        raise DomainError("N and k must be non-negative")
    need = N + k + 1
    if len(center_prefix) < need:
        raise InsufficientDataError(
            f"ball needs {need} symbols, prefix has {len(center_prefix)}"
        )
    return tuple(int(a) for a in center_prefix[:need])


class MetricValue(NamedTuple):
    value: float
    exact: bool
    upper: float


def d_theta(x: Sequence[int], y: Sequence[int], theta: float) -> MetricValue:
    """``d(x, y) = theta**k`` with ``k`` the length of the longest common prefix.

    When the words agree on the whole compared range the true distance is
    only known to lie in ``[0, theta**len]``; ``value`` is then 0 and
    ``exact`` is False.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError("theta must lie in (0, 1)")
    n = min(len(x), len(y))
    if n == 0:
        raise InsufficientDataError("cannot compare empty words")
    for k in range(n):
        if x[k] != y[k]:
            d = theta**k
            return MetricValue(d, True, d)
    return MetricValue(0.0, False, theta**n)


def _resolve_m(trans: TransitionStructure, truncation_index) -> int:
    return trans.size(truncation_index)


def cylinder_count(trans: TransitionStructure, truncation_index, n: int) -> int:
    """Exact number of admissible length-``n`` words: entry sum of ``M**(n-1)``."""
    if n < 1:
        raise DomainError("cylinder length must be >= 1")
    m = _resolve_m(trans, truncation_index)
    succ = [trans.successors_of(a, m) for a in range(m)]
    v = [1] * m
    for _ in range(n - 1):
        v = [sum(v[b] for b in succ[a]) for a in range(m)]
    return sum(v)


def cylinder_array(trans: TransitionStructure, truncation_index, n: int,
                   budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All admissible length-``n`` words as rows of an int array, lexicographic."""
    count = cylinder_count(trans, truncation_index, n)
    if count > budget:
        raise BudgetError(count, budget)
    m = _resolve_m(trans, truncation_index)
    succ = [trans.successors_of(a, m) for a in range(m)]
    deg = np.array([len(s) for s in succ], dtype=np.int64)
    table = np.zeros((m, int(deg.max())), dtype=np.int64)
    for a, s in enumerate(succ):
        table[a, : len(s)] = s
    words = np.arange(m, dtype=np.int64).reshape(m, 1)
    for _ in range(n - 1):
        d = deg[words[:, -1]]
        rep = np.repeat(words, d, axis=0)
        starts = np.cumsum(d) - d
        local = np.arange(int(d.sum())) - np.repeat(starts, d)
        nxt = table[rep[:, -1], local]
        words = np.hstack([rep, nxt[:, None]])
    return words


def enumerate_cylinders(trans: TransitionStructure, truncation_index, n: int,
                        budget: int = DEFAULT_BUDGET) -> Iterator[Word]:
    """Yield every admissible length-``n`` word of the truncation once, lexicographically."""
    count = cylinder_count(trans, truncation_index, n)
    if count > budget:
        raise BudgetError(count, budget)
    m = _resolve_m(trans, truncation_index)
    succ = [trans.successors_of(a, m) for a in range(m)]

    def extend(prefix):
        if len(prefix) == n:
            yield prefix
            return
        for b in succ[prefix[-1]]:
            yield from extend(prefix + (b,))

    for a in range(m):
        yield from extend((a,))


class PrimitivityResult(NamedTuple):
    primitive: bool
    power: int | None


def check_primitive(trans: TransitionStructure, truncation_index=None) -> PrimitivityResult:
    """Smallest ``p <= (m-1)**2 + 1`` with ``M**p > 0`` entrywise, if any."""
    M = trans.matrix(truncation_index).astype(bool)
    m = M.shape[0]
    bound = (m - 1) ** 2 + 1
    P = M.copy()
    for p in range(1, bound + 1):
        if P.all():
            return PrimitivityResult(True, p)
        P = (P.astype(np.int64) @ M.astype(np.int64)) > 0
    return PrimitivityResult(False, None)

