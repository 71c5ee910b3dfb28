"""Subshifts of finite type over a finite alphabet {1, ..., k}.

A subshift is specified by a 0/1 transition matrix ``t``: the sequence
``w`` is admissible iff ``t[w[i], w[i+1]] == 1`` for every i.  Everything
downstream (potentials, pressure, measures) works with finite admissible
words, eventually periodic points, and the cylinder sets they label.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

Word = tuple[int, ...]

#: Largest exponent that needs checking when deciding mixing: for a k x k
#: primitive 0/1 matrix the Wielandt bound (k-1)^2 + 1 is sharp.
def _wielandt_bound(k: int) -> int:
    return (k - 1) ** 2 + 1


class NotMixingError(ValueError):
    """The transition matrix is not topologically mixing (no power is positive)."""


@dataclass(frozen=True)
class TransitionSystem:
    """A subshift of finite type: alphabet size plus 0/1 transition matrix.

    Parameters
    ----------
    matrix
        Square 0/1 matrix as a tuple of tuples; ``matrix[i][j] == 1`` allows
        the symbol ``j+1`` to follow ``i+1``.  Symbols are 1-based everywhere
        in the public API.

    Raises
    ------
    ValueError
        If the matrix is not square 0/1, or has a dead row or column (a
        symbol that nothing can follow, or that can follow nothing, labels
        no two-sided point and silently corrupts cylinder counts).
    """

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        k = len(self.matrix)
        if k == 0:
            raise ValueError("empty alphabet")
        for row in self.matrix:
            if len(row) != k:
                raise ValueError("transition matrix must be square")
            for x in row:
                if x not in (0, 1):
                    raise ValueError(f"transition entries must be 0 or 1, got {x!r}")
        for i, row in enumerate(self.matrix):
            if not any(row):
                raise ValueError(f"dead row: no symbol may follow {i + 1}")
        for j in range(k):
            if not any(self.matrix[i][j] for i in range(k)):
                raise ValueError(f"dead column: symbol {j + 1} may follow nothing")

    # -- constructors -------------------------------------------------

    @classmethod
    def full_shift(cls, k: int) -> "TransitionSystem":
        """Full shift on k symbols: every transition allowed."""
        return cls(tuple(tuple(1 for _ in range(k)) for _ in range(k)))

    @classmethod
    def golden_mean(cls) -> "TransitionSystem":
        """Two symbols, word ``22`` forbidden."""
        return cls(((1, 1), (1, 0)))

    # -- basic views ---------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.matrix)

    @cached_property
    def as_array(self) -> np.ndarray:
        a = np.asarray(self.matrix, dtype=np.int64)
        a.setflags(write=False)
        return a

    def allows(self, i: int, j: int) -> bool:
        """May symbol ``j`` follow symbol ``i``?"""
        return self.matrix[i - 1][j - 1] == 1

    def successors(self, i: int) -> Word:
        return tuple(j + 1 for j, x in enumerate(self.matrix[i - 1]) if x)

    def is_admissible(self, word: Sequence[int]) -> bool:
        """True iff every symbol is in range and every adjacent pair is allowed."""
        for s in word:
            if not (1 <= s <= self.k):
                return False
        return all(self.allows(a, b) for a, b in zip(word, word[1:]))

    def mixing_exponent(self, l_max: Optional[int] = None) -> Optional[int]:
        """Minimal l with ``matrix**l`` entrywise positive, or None.

        Searches up to ``l_max``; the default is the Wielandt bound
        (k-1)**2 + 1, beyond which no primitive matrix needs to go, so None
        under the default means the system is genuinely not mixing.
        Boolean matrix powers only — no integer overflow at any l.
        """
        bound = _wielandt_bound(self.k) if l_max is None else l_max
        b = self.as_array > 0
        p = b.copy()
        for l in range(1, bound + 1):
            if p.all():
                return l
            p = (p.astype(np.int64) @ b.astype(np.int64)) > 0
        return None

    def require_mixing(self) -> int:
        """Mixing exponent, or :class:`NotMixingError` for inputs where the
        periodic-point pressure formula (and the RPF construction) is not
        backed by theory."""
        l = self.mixing_exponent()
        if l is None:
            raise NotMixingError(
                "transition system is not topologically mixing: no power of "
                f"the matrix up to {_wielandt_bound(self.k)} is positive"
            )
        return l

    def count_words(self, n: int) -> int:
        """Number of admissible words of length n (exact integer arithmetic)."""
        if n < 1:
            raise ValueError("word length must be >= 1")
        t = [[int(x) for x in row] for row in self.matrix]
        p = _int_matrix_power(t, n - 1)
        return sum(sum(row) for row in p)

    def count_periodic(self, n: int) -> int:
        """Number of points fixed by the n-th shift power: trace of matrix**n."""
        if n < 1:
            raise ValueError("period must be >= 1")
        t = [[int(x) for x in row] for row in self.matrix]
        p = _int_matrix_power(t, n)
        return sum(p[i][i] for i in range(self.k))


def _int_matrix_power(t: list[list[int]], n: int) -> list[list[int]]:
    k = len(t)
    result = [[int(i == j) for j in range(k)] for i in range(k)]
    base = [row[:] for row in t]
    while n:
        if n & 1:
            result = _int_matmul(result, base)
        base = _int_matmul(base, base)
        n >>= 1
    return result


def _int_matmul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    k = len(a)
    return [
        [sum(a[i][m] * b[m][j] for m in range(k)) for j in range(k)]
        for i in range(k)
    ]


# ---------------------------------------------------------------------------
# word enumeration


def enumerate_words(ts: TransitionSystem, n: int) -> Iterator[Word]:
    """Yield all admissible words of length n in lexicographic order."""
    if n < 1:
        raise ValueError("word length must be >= 1")

    def extend(prefix: Word) -> Iterator[Word]:
        if len(prefix) == n:
            yield prefix
            return
        for s in ts.successors(prefix[-1]):
            yield from extend(prefix + (s,))

    for first in range(1, ts.k + 1):
        yield from extend((first,))


def enumerate_cyclic_words(ts: TransitionSystem, n: int) -> Iterator[Word]:
    """Admissible words of length n whose wrap-around pair is also allowed.

    These label the points of period n: repeating such a word gives an
    admissible two-sided sequence fixed by the n-th shift power.
    """
    for w in enumerate_words(ts, n):
        if ts.allows(w[-1], w[0]):
            yield w


@lru_cache(maxsize=32)
def word_array(ts: TransitionSystem, n: int) -> np.ndarray:
    """All admissible n-words as a (count, n) int8 array, lexicographic rows.

    The dense representation drives every vectorized sum in the package;
    rows match :func:`enumerate_words` exactly.
    """
    if n < 1:
        raise ValueError("word length must be >= 1")
    t = ts.as_array
    w = np.arange(1, ts.k + 1, dtype=np.int8).reshape(-1, 1)
    for _ in range(n - 1):
        # flatnonzero scans row-major, so successors of each row come out in
        # increasing symbol order and the overall row order stays lexicographic
        flat = np.flatnonzero(t[w[:, -1] - 1])
        rows = flat // ts.k
        sym = (flat % ts.k + 1).astype(np.int8)
        w = np.hstack([w[rows], sym.reshape(-1, 1)])
    w.setflags(write=False)
    return w


def cyclic_mask(ts: TransitionSystem, words: np.ndarray) -> np.ndarray:
    """Boolean mask of rows whose last->first transition is allowed."""
    t = ts.as_array
    return t[words[:, -1] - 1, words[:, 0] - 1] == 1


# ---------------------------------------------------------------------------
# points


def _canonical_cycle(cycle: Word) -> Word:
    """Lexicographically least rotation of the primitive root of ``cycle``."""
    m = len(cycle)
    for p in range(1, m + 1):
        if m % p == 0 and cycle == cycle[:p] * (m // p):
            root = cycle[:p]
            break
    rotations = [root[i:] + root[:i] for i in range(len(root))]
    return min(rotations)


@dataclass(frozen=True)
class SymbolicPoint:
    """An eventually periodic one-sided sequence: finite prefix, then a cycle.

    The sequence is ``prefix + cycle + cycle + ...``; the cycle must be
    nonempty.  Two points compare equal iff they are the same sequence,
    however the split into prefix and cycle was chosen — e.g. prefix (1,)
    with cycle (2, 1) and prefix () with cycle (1, 2) both denote
    1 2 1 2 1 ... and compare equal.  Equality and hashing go through
    :meth:`canonical`, never the raw fields.
    """

    system: TransitionSystem
    prefix: Word
    cycle: Word

    def __post_init__(self) -> None:
        if not self.cycle:
            raise ValueError("cycle must be nonempty")
        seq = self.prefix + self.cycle + (self.cycle[0],)
        if not self.system.is_admissible(seq):
            raise ValueError("point is not admissible for the system")

    def symbol_at(self, i: int) -> int:
        """Symbol in position i (1-based)."""
        if i < 1:
            raise ValueError("positions are 1-based")
        i -= 1
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def word(self, n: int) -> Word:
        """The initial n-word of the sequence."""
        reps = max(0, -(-(n - len(self.prefix)) // len(self.cycle)))
        return (self.prefix + self.cycle * reps)[:n]

    def shift(self, n: int = 1) -> "SymbolicPoint":
        """Drop the first n symbols."""
        if n < 0:
            raise ValueError("shift amount must be >= 0")
        if n <= len(self.prefix):
            return SymbolicPoint(self.system, self.prefix[n:], self.cycle)
        r = (n - len(self.prefix)) % len(self.cycle)
        return SymbolicPoint(self.system, (), self.cycle[r:] + self.cycle[:r])

    def canonical(self) -> tuple[Word, Word]:
        """Canonical (prefix, cycle) pair identifying the underlying sequence.

        The cycle is reduced to its primitive root and rotated to start right
        after the longest prefix that can be absorbed into it; the prefix is
        stripped of any trailing symbols that merely repeat the cycle.
        """
        cycle = _canonical_cycle(self.cycle)
        m = len(cycle)
        root = self.cycle[:m]  # primitive root of the raw cycle
        offset = next(i for i in range(m) if root[i:] + root[:i] == cycle)
        pre = self.prefix + root[:offset]
        # a trailing prefix symbol that equals the symbol one period later is
        # part of the periodic tail: rotate it into the cycle.  This stops at
        # the minimal prefix, which depends only on the sequence itself.
        while pre and pre[-1] == cycle[-1]:
            pre = pre[:-1]
            cycle = cycle[-1:] + cycle[:-1]
        return pre, cycle

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymbolicPoint):
            return NotImplemented
        return (
            self.system.matrix == other.system.matrix
            and self.canonical() == other.canonical()
        )

    def __hash__(self) -> int:
        return hash((self.system.matrix, self.canonical()))


def periodic_point(ts: TransitionSystem, cycle: Sequence[int]) -> SymbolicPoint:
    """The point obtained by repeating ``cycle`` forever."""
    return SymbolicPoint(ts, (), tuple(cycle))


def representative_point(ts: TransitionSystem, word: Sequence[int]) -> SymbolicPoint:
    """Some admissible point whose initial word is ``word``.

    Extends the word greedily by smallest allowed successors until a symbol
    repeats, then closes the loop there.  Used wherever an operation defined
    on points is applied to a cylinder label.
    """
    w = list(word)
    if not ts.is_admissible(w):
        raise ValueError(f"word {tuple(word)} is not admissible")
    seen = {w[-1]: len(w) - 1}
    while True:
        s = ts.successors(w[-1])[0]
        if s in seen:
            cut = seen[s]
            return SymbolicPoint(ts, tuple(w[:cut]), tuple(w[cut:]))
        seen[s] = len(w)
        w.append(s)


def enumerate_periodic_points(ts: TransitionSystem, n: int) -> Iterator[SymbolicPoint]:
    """All points fixed by the n-th shift power, one per cyclic n-word."""
    for w in enumerate_cyclic_words(ts, n):
        yield SymbolicPoint(ts, (), w)


def metric_distance(x: SymbolicPoint, y: SymbolicPoint, tol: float = 1e-12) -> float:
    """Distance sum |x_i - y_i| / 2^i, truncated once the tail bound < tol.

    Exact zero is returned iff the points are equal as sequences (decided
    symbolically, not by truncation).
    """
    if x == y:
        return 0.0
    k = max(x.system.k, y.system.k)
    total = 0.0
    i = 1
    while (k - 1) * 2.0 ** (-i) >= tol:
        total += abs(x.symbol_at(i) - y.symbol_at(i)) * 2.0 ** (-i)
        i += 1
    return total
