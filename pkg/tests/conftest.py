"""Shared fixtures, hypothesis strategies, and independent brute-force oracles.

Everything under "brute" recomputes quantities from first principles — raw
dict lookups, integer matrix powers, explicit recursion — sharing no code
with the library's vectorized paths, so agreement is evidence rather than
tautology.
"""

import math

import numpy as np
import pytest
from hypothesis import strategies as st

from thermoshift import LocallyConstantPotential, TransitionSystem

# The depth-2 table used in the format documentation; its Birkhoff-sum
# oscillation over 2-cylinders is exactly 3.
EXAMPLE_TABLE = {(1, 1): 0.0, (1, 2): 1.0, (2, 1): 0.0, (2, 2): 3.0}

# Depth-2 table whose atom-freeness witness is n = 2 but not n = 1:
# sup phi = 2 exceeds P(phi) ~ -0.188, while (1/2) sup S_2 phi = -0.25 < P.
ATOMFREE_TABLE = {(1, 1): -3.0, (1, 2): 2.0, (2, 1): -2.5, (2, 2): -3.0}


# ---------------------------------------------------------------------------
# brute-force oracles (no thermoshift internals)


def brute_words(matrix, n):
    """All admissible n-words of a 0/1 matrix, in lexicographic order."""
    k = len(matrix)
    if n == 0:
        return [()]
    words = [(i,) for i in range(1, k + 1)]
    for _ in range(n - 1):
        words = [
            w + (j,)
            for w in words
            for j in range(1, k + 1)
            if matrix[w[-1] - 1][j - 1]
        ]
    return words


def brute_cyclic_words(matrix, n):
    return [w for w in brute_words(matrix, n) if matrix[w[-1] - 1][w[0] - 1]]


def brute_periodic_count(matrix, n):
    """trace(M^n) in exact integer arithmetic."""
    k = len(matrix)
    power = [[int(i == j) for j in range(k)] for i in range(k)]
    for _ in range(n):
        power = [
            [sum(power[i][l] * matrix[l][j] for l in range(k)) for j in range(k)]
            for i in range(k)
        ]
    return sum(power[i][i] for i in range(k))


def table_birkhoff(table, depth, word, n):
    """S_n phi from the raw dict; word must supply n + depth - 1 symbols."""
    return sum(table[word[i : i + depth]] for i in range(n))


def brute_variation(matrix, table, depth, n):
    """var_n(phi): oscillation of the table value over n-cylinders."""
    if n >= depth:
        return 0.0
    groups = {}
    for w in brute_words(matrix, depth):
        groups.setdefault(w[:n], []).append(table[w])
    return max(max(g) - min(g) for g in groups.values())


def brute_eta(matrix, table, depth, n):
    """var_n(S_n phi) by grouping (n + depth - 1)-words on their n-prefix."""
    length = n + depth - 1
    groups = {}
    for w in brute_words(matrix, length):
        groups.setdefault(w[:n], []).append(table_birkhoff(table, depth, w, n))
    return max(max(g) - min(g) for g in groups.values())


def brute_cylinder_pressure(matrix, table, depth, n):
    """(1/n) log sum over n-words of the cylinder supremum of exp(S_n phi)."""
    length = n + depth - 1
    sups = {}
    for w in brute_words(matrix, length):
        s = table_birkhoff(table, depth, w, n)
        key = w[:n]
        sups[key] = max(sups.get(key, -math.inf), s)
    return math.log(math.fsum(math.exp(v) for v in sups.values())) / n


def brute_periodic_pressure(matrix, table, depth, n):
    """(1/n) log sum of exp(S_n phi) over points of period n (wraparound)."""
    reps = (n + depth - 1) // n + 1
    total = [
        math.exp(table_birkhoff(table, depth, w * reps, n))
        for w in brute_cyclic_words(matrix, n)
    ]
    return math.log(math.fsum(total)) / n


def brute_spectral_pressure(matrix, table, depth):
    """log of the Perron root of the dense transfer matrix, via eigvals."""
    states = brute_words(matrix, max(depth - 1, 1))
    index = {u: i for i, u in enumerate(states)}
    w = np.zeros((len(states), len(states)))
    # Transition u -> u[1:] + (s,) when the joined word is admissible;
    # weight exp(phi) read off the last `depth` symbols (first symbol for
    # depth 1, where states and symbols coincide).
    for u in states:
        for s in range(1, len(matrix) + 1):
            joined = u + (s,)
            ok = all(matrix[a - 1][b - 1] for a, b in zip(joined, joined[1:]))
            if not ok:
                continue
            v = joined[1:] if depth > 1 else (s,)
            key = joined[-depth:] if depth > 1 else (u[0],)
            w[index[u], index[v]] += math.exp(table[key])
    lam = max(np.linalg.eigvals(w).real)
    return math.log(lam)


# ---------------------------------------------------------------------------
# hypothesis strategies

# Curated mixing matrices; generating-and-filtering random 0/1 matrices
# drags hypothesis shrinking through the mixing check, so we pin a pool
# that covers full shifts, the golden-mean shift, and denser 3-symbol SFTs.
MIXING_MATRICES = (
    ((1, 1), (1, 1)),
    ((1, 1), (1, 0)),
    ((0, 1), (1, 1)),
    ((1, 1, 1), (1, 1, 1), (1, 1, 1)),
    ((1, 1, 0), (0, 1, 1), (1, 0, 1)),
    ((1, 1, 1), (1, 0, 1), (1, 1, 0)),
    ((0, 1, 1), (1, 1, 0), (1, 1, 1)),
)

mixing_systems = st.sampled_from(
    tuple(TransitionSystem(m) for m in MIXING_MATRICES)
)

# Multiples of 1/16 stay exact under the short additions these tests do,
# which is what makes "exact" cocycle assertions meaningful.
dyadic_values = st.integers(min_value=-48, max_value=48).map(lambda m: m / 16.0)

small_values = st.floats(
    min_value=-4.0, max_value=4.0, allow_nan=False, allow_infinity=False
)


@st.composite
def potentials(draw, values=small_values, max_depth=3):
    ts = draw(mixing_systems)
    depth = draw(st.integers(min_value=1, max_value=max_depth))
    table = {w: draw(values) for w in brute_words(ts.matrix, depth)}
    return LocallyConstantPotential(ts, depth, table)


@st.composite
def dyadic_potentials(draw, max_depth=2):
    return draw(potentials(values=dyadic_values, max_depth=max_depth))


@st.composite
def markov_rows(draw, ts):
    """Row-stochastic weights supported exactly on the allowed transitions."""
    rows = []
    for i in range(1, ts.k + 1):
        succ = ts.successors(i)
        raw = [
            draw(st.floats(min_value=0.1, max_value=1.0, allow_nan=False))
            for _ in succ
        ]
        total = sum(raw)
        row = [0.0] * ts.k
        for j, x in zip(succ, raw):
            row[j - 1] = x / total
        # push rounding dust into the largest entry so the row sums to 1.0
        jmax = row.index(max(row))
        row[jmax] += 1.0 - sum(row)
        rows.append(tuple(row))
    return tuple(rows)


# ---------------------------------------------------------------------------
# fixtures


@pytest.fixture
def full2():
    return TransitionSystem.full_shift(2)


@pytest.fixture
def full3():
    return TransitionSystem.full_shift(3)


@pytest.fixture
def golden():
    return TransitionSystem.golden_mean()


@pytest.fixture
def example_potential(full2):
    return LocallyConstantPotential(full2, 2, dict(EXAMPLE_TABLE))


@pytest.fixture
def atomfree_potential(full2):
    return LocallyConstantPotential(full2, 2, dict(ATOMFREE_TABLE))
