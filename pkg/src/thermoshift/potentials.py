"""Potentials on subshifts: locally constant tables and sequence protocols.

Two kinds of object live here.  A :class:`LocallyConstantPotential` is a
single function determined by the first ``depth`` symbols — the additive
theory's raw material.  A :class:`PotentialSequence` is the non-additive
generalization: one function per time n, with Birkhoff sums of a fixed
potential as the special case :class:`AdditiveSequence`.

Variation diagnostics (``variation``, ``eta``, ``gamma``,
``almost_additivity_defect``, ``asymptotic_defect``) quantify how far a
sequence is from depending on finitely many coordinates and from being
additive; everything downstream (pressure limits, Gibbs certification)
consumes them.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .sft import (
    SymbolicPoint,
    TransitionSystem,
    Word,
    enumerate_words,
    representative_point,
    word_array,
)


class InexactSequenceError(ValueError):
    """Raised when an exact computation is requested for a sequence that
    does not declare a finite dependence length."""


@dataclass(frozen=True)
class LocallyConstantPotential:
    """A real function on the shift depending on the first ``depth`` symbols.

    ``table`` maps every admissible word of length ``depth`` to its value;
    missing or extra words are rejected so that a table always matches its
    system.
    """

    system: TransitionSystem
    depth: int
    table: dict[Word, float]

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        expected = set(enumerate_words(self.system, self.depth))
        got = set(self.table)
        if got != expected:
            missing = sorted(expected - got)[:3]
            extra = sorted(got - expected)[:3]
            raise ValueError(
                f"table does not match admissible {self.depth}-words "
                f"(missing {missing}, extra {extra})"
            )
        for w, v in self.table.items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at {w}: {v!r}")

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, ts: TransitionSystem, c: float, depth: int = 1) -> "LocallyConstantPotential":
        return cls(ts, depth, {w: float(c) for w in enumerate_words(ts, depth)})

    @classmethod
    def from_symbol_values(cls, ts: TransitionSystem, values: Sequence[float]) -> "LocallyConstantPotential":
        """Depth-1 potential from one value per symbol."""
        if len(values) != ts.k:
            raise ValueError("need exactly one value per symbol")
        return cls(ts, 1, {(i + 1,): float(v) for i, v in enumerate(values)})

    def shifted(self, c: float) -> "LocallyConstantPotential":
        """The potential plus a constant (e.g. ``phi.shifted(pressure)``)."""
        return LocallyConstantPotential(
            self.system, self.depth, {w: v + c for w, v in self.table.items()}
        )

    # -- evaluation -------------------------------------------------------

    def value_at(self, point: SymbolicPoint) -> float:
        return self.table[point.word(self.depth)]

    def value_word(self, word: Word) -> float:
        """Value on the cylinder of ``word``; needs ``len(word) >= depth``."""
        if len(word) < self.depth:
            raise ValueError(
                f"word of length {len(word)} does not determine a depth-{self.depth} value"
            )
        return self.table[word[: self.depth]]

    @property
    def dense(self) -> np.ndarray:
        """k**depth array indexed by 0-based symbol digits; nan off-support."""
        cached = getattr(self, "_dense_cache", None)
        if cached is not None:
            return cached
        k = self.system.k
        a = np.full((k,) * self.depth, np.nan)
        for w, v in self.table.items():
            a[tuple(s - 1 for s in w)] = v
        a.setflags(write=False)
        object.__setattr__(self, "_dense_cache", a)
        return a

    def values_on_windows(self, words: np.ndarray, n: int, cyclic: bool = False) -> np.ndarray:
        """Vectorized Birkhoff sums S_n over rows of a word array.

        With ``cyclic=False`` rows must have at least ``n + depth - 1``
        columns; with ``cyclic=True`` rows are read modulo their length n.
        """
        d = self.depth
        dense = self.dense
        total = np.zeros(words.shape[0])
        for j in range(n):
            if cyclic:
                idx = tuple(words[:, (j + r) % words.shape[1]] - 1 for r in range(d))
            else:
                idx = tuple(words[:, j + r] - 1 for r in range(d))
            total += dense[idx]
        return total


def birkhoff_sum(phi: LocallyConstantPotential, point: SymbolicPoint, n: int) -> float:
    """S_n(phi) at the point: sum of phi along the first n shifts."""
    if n < 0:
        raise ValueError("n must be >= 0")
    w = point.word(n + phi.depth - 1)
    return float(sum(phi.table[w[j : j + phi.depth]] for j in range(n)))


def variation(phi: LocallyConstantPotential, n: int) -> float:
    """var_n(phi): largest gap of phi over any n-cylinder.

    Exactly 0.0 for n >= depth; below depth it maximizes the spread of
    table values over admissible completions of each n-word.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = phi.depth
    if n >= d:
        return 0.0
    worst = 0.0
    for w in enumerate_words(phi.system, d):
        prefix = w[:n]
        vals = [v for u, v in phi.table.items() if u[:n] == prefix]
        worst = max(worst, max(vals) - min(vals))
    return worst


def eta(phi: LocallyConstantPotential, n: int) -> float:
    """var_n(S_n phi): the oscillation of the n-step sum over n-cylinders.

    S_n phi reads n + depth - 1 coordinates, so for depth > 1 the n-cylinder
    leaves the last depth - 1 of them free and the oscillation is generally
    positive (it is identically zero only for depth 1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = phi.depth
    if d == 1:
        return 0.0
    ts = phi.system
    words = word_array(ts, n + d - 1)
    sums = phi.values_on_windows(words, n)
    return float(_prefix_group_spread(ts, words, n, sums))


def _prefix_group_spread(
    ts: TransitionSystem, words: np.ndarray, n: int, values: np.ndarray
) -> float:
    """Max over n-word prefixes of (max - min) of values within the group.

    Rows of ``words`` are lexicographic, so rows sharing an n-prefix are
    contiguous; group boundaries fall where the prefix changes.
    """
    if len(values) == 0:
        return 0.0
    prefixes = words[:, :n]
    change = np.any(prefixes[1:] != prefixes[:-1], axis=1)
    starts = np.concatenate(([0], np.flatnonzero(change) + 1))
    maxima = np.maximum.reduceat(values, starts)
    minima = np.minimum.reduceat(values, starts)
    return float(np.max(maxima - minima))


# ---------------------------------------------------------------------------
# potential sequences


class PotentialSequence(abc.ABC):
    """A sequence of functions phi_n on the shift, one per n >= 1.

    Subclasses declare ``kind`` ("additive", "explicit_table",
    "measure_derived") and, when the n-th function is determined by an
    initial word, its dependence length ``dep(n)``.  Sequences without a
    finite dependence length cannot be fed to the exact (enumeration-based)
    diagnostics and raise :class:`InexactSequenceError` there.
    """

    kind: str = "abstract"

    @property
    @abc.abstractmethod
    def system(self) -> TransitionSystem: ...

    @abc.abstractmethod
    def value(self, n: int, point: SymbolicPoint) -> float:
        """phi_n evaluated at the point."""

    def dep(self, n: int) -> Optional[int]:
        """Number of leading symbols that determine phi_n, or None."""
        return None

    def family_member(self, k: int) -> Optional[LocallyConstantPotential]:
        """k-th member of an approximating additive family, if declared."""
        return None

    def value_word(self, n: int, word: Word) -> float:
        """phi_n on the cylinder of ``word``; len(word) must cover dep(n)."""
        L = self.dep(n)
        if L is None:
            raise InexactSequenceError(
                f"{type(self).__name__} declares no dependence length"
            )
        if len(word) < L:
            raise ValueError(f"need {L} symbols to evaluate phi_{n}, got {len(word)}")
        return self.value(n, representative_point(self.system, word))

    def values_on_words(self, n: int, words: np.ndarray, cyclic: bool = False) -> np.ndarray:
        """Vectorized phi_n over rows of a word array (fallback: row loop)."""
        if cyclic:
            pts = [SymbolicPoint(self.system, (), tuple(int(s) for s in row)) for row in words]
            return np.array([self.value(n, p) for p in pts])
        return np.array([self.value_word(n, tuple(int(s) for s in row)) for row in words])


class AdditiveSequence(PotentialSequence):
    """Birkhoff sums of a fixed locally constant potential: phi_n = S_n phi."""

    kind = "additive"

    def __init__(self, phi: LocallyConstantPotential):
        self.potential = phi

    @property
    def system(self) -> TransitionSystem:
        return self.potential.system

    def value(self, n: int, point: SymbolicPoint) -> float:
        return birkhoff_sum(self.potential, point, n)

    def dep(self, n: int) -> int:
        return n + self.potential.depth - 1

    def family_member(self, k: int) -> LocallyConstantPotential:
        # an additive sequence approximates itself exactly at every accuracy
        return self.potential

    def value_word(self, n: int, word: Word) -> float:
        L = self.dep(n)
        if len(word) < L:
            raise ValueError(f"need {L} symbols to evaluate S_{n}, got {len(word)}")
        d = self.potential.depth
        return float(sum(self.potential.table[word[j : j + d]] for j in range(n)))

    def values_on_words(self, n: int, words: np.ndarray, cyclic: bool = False) -> np.ndarray:
        return self.potential.values_on_windows(words, n, cyclic=cyclic)


class ExplicitSequence(PotentialSequence):
    """A sequence given by an arbitrary rule (n, word) -> value.

    ``dep_fn(n)`` declares how many leading symbols the rule reads; the
    word handed to ``fn`` has exactly that length.  Used for synthetic
    sequences in tests and for tables loaded from documents.
    """

    kind = "explicit_table"

    def __init__(
        self,
        ts: TransitionSystem,
        fn: Callable[[int, Word], float],
        dep_fn: Callable[[int], int],
        family: Optional[Callable[[int], LocallyConstantPotential]] = None,
    ):
        self._system = ts
        self._fn = fn
        self._dep = dep_fn
        self._family = family

    @property
    def system(self) -> TransitionSystem:
        return self._system

    def dep(self, n: int) -> int:
        return self._dep(n)

    def family_member(self, k: int) -> Optional[LocallyConstantPotential]:
        return self._family(k) if self._family is not None else None

    def value(self, n: int, point: SymbolicPoint) -> float:
        return float(self._fn(n, point.word(self.dep(n))))

    def value_word(self, n: int, word: Word) -> float:
        L = self.dep(n)
        if len(word) < L:
            raise ValueError(f"need {L} symbols to evaluate phi_{n}, got {len(word)}")
        return float(self._fn(n, word[:L]))


# ---------------------------------------------------------------------------
# sequence diagnostics


def gamma(seq: PotentialSequence, n: int) -> float:
    """var_n(phi_n): oscillation of the n-th function over n-cylinders.

    Exact enumeration; requires a declared dependence length.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    L = seq.dep(n)
    if L is None:
        raise InexactSequenceError("gamma needs a declared dependence length")
    if L <= n:
        return 0.0
    ts = seq.system
    words = word_array(ts, L)
    vals = seq.values_on_words(n, words)
    return _prefix_group_spread(ts, words, n, vals)


def almost_additivity_defect(
    seq: PotentialSequence,
    n: int,
    m: int,
    sample: Optional[Iterable[SymbolicPoint]] = None,
) -> tuple[float, Word]:
    """Largest |phi_{n+m} - phi_n - phi_m(shifted)| and where it occurs.

    Exhaustive over all admissible words long enough to settle all three
    terms, unless ``sample`` supplies points to restrict to.  Returns
    ``(defect, witness_word)``.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if sample is not None:
        worst, where = -1.0, ()
        for p in sample:
            d = abs(seq.value(n + m, p) - seq.value(n, p) - seq.value(m, p.shift(n)))
            if d > worst:
                worst, where = d, p.word(n + m)
        return worst, where
    deps = [seq.dep(j) for j in (n + m, n, m)]
    if any(x is None for x in deps):
        raise InexactSequenceError("exhaustive defect needs dependence lengths")
    L = max(deps[0], deps[1], n + deps[2])
    words = word_array(seq.system, L)
    v_nm = seq.values_on_words(n + m, words)
    v_n = seq.values_on_words(n, words)
    v_m = seq.values_on_words(m, words[:, n:])
    d = np.abs(v_nm - v_n - v_m)
    i = int(np.argmax(d))
    return float(d[i]), tuple(int(s) for s in words[i])


def asymptotic_defect(
    seq: PotentialSequence, rho: LocallyConstantPotential, n: int
) -> float:
    """(1/n) sup |phi_n - S_n rho| over the shift, by exact enumeration."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = seq.dep(n)
    if L is None:
        raise InexactSequenceError("asymptotic defect needs a dependence length")
    L = max(L, n + rho.depth - 1)
    words = word_array(seq.system, L)
    v = seq.values_on_words(n, words)
    s = rho.values_on_windows(words, n)
    return float(np.max(np.abs(v - s))) / n


@dataclass(frozen=True)
class TemperedVariationReport:
    """gamma_n / n for n up to a horizon, with a crude trend readout.

    ``consistent`` means the tail ratios are nonincreasing (within 1e-12)
    and the last one sits below ``threshold`` — evidence, not proof, that
    the sequence has tempered variation.
    """

    ratios: tuple[tuple[int, float], ...]
    threshold: float
    slope: Optional[float]
    consistent: bool


def tempered_variation_report(
    seq: PotentialSequence, n_max: int, threshold: float = 1e-3
) -> TemperedVariationReport:
    """Tabulate gamma_n / n and judge whether it plausibly tends to zero."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ratios = tuple((n, gamma(seq, n) / n) for n in range(1, n_max + 1))
    tail = ratios[len(ratios) // 2 :]
    vals = [r for _, r in tail]
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    consistent = nonincreasing and vals[-1] < threshold
    pos = [(math.log(n), math.log(r)) for n, r in ratios if r > 0]
    slope = None
    if len(pos) >= 2:
        xs = np.array([x for x, _ in pos])
        ys = np.array([y for _, y in pos])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return TemperedVariationReport(ratios, threshold, slope, consistent)
