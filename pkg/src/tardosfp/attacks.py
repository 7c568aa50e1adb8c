"""Collusion strategies in the Restricted Digit Model.

A strategy is described by Ψ_b(x): the probability that the coalition outputs a
particular symbol it has seen ``b`` times, given the counts ``x`` of the other
q−1 symbols. The output distribution θ_{·|σ} follows from Ψ by symbol symmetry.

Three factorized families are supported, each a special case of the previous:

* :class:`Class1Strategy`: Ψ_b(x) = w(b, ℓ) Π_k W(b, ℓ, z_k)
* :class:`Class2Strategy`: Ψ_b(x) = w(b)/(ℓ+1) Π_k W(b, z_k)
* :class:`Class3Strategy`: Ψ_b(x) = 1/(ℓ+1) Π_k W(b, z_k) with boolean W

where ℓ counts the entries of x equal to b and z are the remaining entries.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from tardosfp.model import CodeParams


class StrategyError(ValueError):
    """Strategy is inconsistent (θ not normalized, broken comparator, ...)."""


class PathologicalKappaError(StrategyError):
    """T has a tie between two co-occurring counts; μ̃-minimizing ranking is undefined."""


BUILTINS = ("interleaving", "majority", "minority", "mu_min")


def count_symbols(column: Sequence[int], q: int) -> tuple[int, ...]:
    """σ_α = number of colluders holding symbol α in one segment."""
    column = np.asarray(column, dtype=np.int64)
    if column.size and (column.min() < 0 or column.max() >= q):
        raise ValueError("coalition column contains a symbol outside the alphabet")
    return tuple(int(v) for v in np.bincount(column, minlength=q))


def _split(b: int, x: Sequence[int]) -> tuple[int, list[int]]:
    ell = sum(1 for v in x if v == b)
    return ell, [v for v in x if v != b]


class Strategy:
    """Base class. Subclasses implement :meth:`psi`."""

    name = "custom"
    kind = "custom"

    def psi(self, b: int, x: Sequence[int]) -> float:
        raise NotImplementedError

    def _check_args(self, b: int, x: Sequence[int]) -> None:
        if b < 1:
            raise StrategyError("psi needs b ≥ 1")
        if any(v < 0 for v in x):
            raise StrategyError("negative count in x")
        c = getattr(self, "c", None)
        if c is not None and b + sum(x) != c:
            raise StrategyError(f"b + Σx = {b + sum(x)} but the strategy was built for c = {c}")

    def theta(self, sigma: Sequence[int]) -> np.ndarray:
        """Output distribution over the alphabet given symbol counts σ."""
        sigma = tuple(int(s) for s in sigma)
        out = np.zeros(len(sigma))
        for a, s in enumerate(sigma):
            if s > 0:
                out[a] = self.psi(s, sigma[:a] + sigma[a + 1:])
        total = math.fsum(out)
        if abs(total - 1.0) > 1e-12:
            raise StrategyError(f"θ(·|σ={sigma}) sums to {total!r}, strategy is not normalized")
        return out

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Class1Strategy(Strategy):
    kind = "class1"

    def __init__(self, w: Callable[[int, int], float], W: Callable[[int, int, int], float],
                 name: str = "class1", c: int | None = None):
        self.w = w
        self.W = W
        self.name = name
        self.c = c

    def psi(self, b, x):
        self._check_args(b, x)
        ell, z = _split(b, x)
        out = self.w(b, ell)
        for zk in z:
            out *= self.W(b, ell, zk)
        return float(out)


class Class2Strategy(Strategy):
    kind = "class2"

    def __init__(self, w: Callable[[int], float], W: Callable[[int, int], float],
                 name: str = "class2", c: int | None = None):
        self.w = w
        self.W = W
        self.name = name
        self.c = c

    def psi(self, b, x):
        self._check_args(b, x)
        ell, z = _split(b, x)
        out = self.w(b) / (ell + 1)
        for zk in z:
            out *= self.W(b, zk)
        return float(out)

    def as_class1(self) -> Class1Strategy:
        return Class1Strategy(lambda b, ell: self.w(b) / (ell + 1),
                              lambda b, ell, z: self.W(b, z),
                              name=self.name, c=self.c)


class Class3Strategy(Strategy):
    """Ranking strategy: output a symbol whose count is best under the comparator W.

    ``better(b, z)`` is consulted only for b, z ≥ 1 and b ≠ z; zero is always worse.
    """

    kind = "class3"

    def __init__(self, better: Callable[[int, int], bool], name: str = "class3", c: int | None = None):
        self._better = better
        self.name = name
        self.c = c

    def W(self, b: int, z: int) -> int:
        if z == 0:
            return 1
        return 1 if self._better(b, z) else 0

    def psi(self, b, x):
        self._check_args(b, x)
        ell, z = _split(b, x)
        if all(self.W(b, zk) for zk in z):
            return 1.0 / (ell + 1)
        return 0.0

    def as_class2(self) -> Class2Strategy:
        return Class2Strategy(lambda b: 1.0, lambda b, z: float(self.W(b, z)), name=self.name, c=self.c)

    def table(self, c: int) -> list[list[int]]:
        return [[b, z, self.W(b, z)] for b in range(1, c + 1) for z in range(1, c + 1) if b != z]

    def check(self, c: int) -> None:
        """Comparator must be antisymmetric and transitive on {1..c}."""
        for b, z in combinations(range(1, c + 1), 2):
            if self.W(b, z) + self.W(z, b) != 1:
                raise StrategyError(f"W({b},{z}) + W({z},{b}) ≠ 1")
        for a in range(1, c + 1):
            for b in range(1, c + 1):
                if a == b or not self.W(a, b):
                    continue
                for z in range(1, c + 1):
                    if z not in (a, b) and self.W(b, z) and not self.W(a, z):
                        raise StrategyError(f"comparator not transitive at ({a},{b},{z})")

    @classmethod
    def from_ranking(cls, order: Sequence[int], name: str = "ranking", c: int | None = None) -> Class3Strategy:
        """Build from counts listed best-first; unlisted counts rank after listed ones."""
        rank = {b: i for i, b in enumerate(order)}
        if len(rank) != len(order):
            raise StrategyError("ranking lists a count twice")
        fallback = len(order)

        def better(b, z):
            rb, rz = rank.get(b, fallback + b), rank.get(z, fallback + z)
            return rb < rz

        strat = cls(better, name=name, c=c)
        strat.order = list(order)
        return strat

    @classmethod
    def from_table(cls, table: Sequence[Sequence[int]], name: str = "class3", c: int | None = None) -> Class3Strategy:
        lookup = {(int(b), int(z)): bool(v) for b, z, v in table}

        def better(b, z):
            try:
                return lookup[(b, z)]
            except KeyError:
                raise StrategyError(f"comparator table has no entry for ({b},{z})") from None

        return cls(better, name=name, c=c)


def interleaving(c: int) -> Class1Strategy:
    """θ_{α|σ} = σ_α / c, i.e. Ψ_b = b/c independent of the other counts."""
    return Class1Strategy(lambda b, ell: b / c, lambda b, ell, z: 1.0, name="interleaving", c=c)


def majority() -> Class3Strategy:
    return Class3Strategy(lambda b, z: b > z, name="majority")


def minority() -> Class3Strategy:
    return Class3Strategy(lambda b, z: b < z, name="minority")


def _can_cooccur(b: int, z: int, q: int, c: int) -> bool:
    if q == 2:
        return b + z == c
    return b + z <= c


def mu_min_strategy(params: CodeParams, tie_break: str | None = None, rel_tol: float = 1e-12) -> Class3Strategy:
    """Attack choosing argmin_α T(σ_α), i.e. W(b, z) = [T(b) < T(z)].

    Raises PathologicalKappaError when two counts that can appear together in
    one segment have equal T. ``tie_break='majority'`` or ``'minority'``
    resolves such ties by count instead.
    """
    from tardosfp.analytic import t_values

    q, c = params.q, params.c
    t = t_values(params)
    for b in range(1, c + 1):
        for z in range(b + 1, c + 1):
            if not _can_cooccur(b, z, q, c):
                continue
            if abs(t[b] - t[z]) <= rel_tol * max(abs(t[b]), abs(t[z])):
                if tie_break is None:
                    raise PathologicalKappaError(
                        f"pathological κ={params.kappa}: T({b}) = T({z}) = {t[b]:.6g} for q={q}, c={c}")
    if tie_break not in (None, "majority", "minority"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    if tie_break == "minority":
        order = sorted(range(1, c + 1), key=lambda b: (t[b], b))
    else:
        order = sorted(range(1, c + 1), key=lambda b: (t[b], -b))
    strat = Class3Strategy.from_ranking(order, name="mu_min", c=c)
    strat.kappa = params.kappa
    return strat


def builtin(name: str, params: CodeParams, **kw) -> Strategy:
    if name == "interleaving":
        return interleaving(params.c)
    if name == "majority":
        return majority()
    if name == "minority":
        return minority()
    if name == "mu_min":
        return mu_min_strategy(params, **kw)
    raise StrategyError(f"unknown built-in strategy {name!r}; choose from {', '.join(BUILTINS)}")


def theta(strategy: Strategy, sigma: Sequence[int]) -> np.ndarray:
    return strategy.theta(sigma)


def psi(strategy: Strategy, b: int, x: Sequence[int]) -> float:
    return strategy.psi(b, x)


def pick_symbol(strategy: Strategy, sigma: Sequence[int], rng: np.random.Generator) -> int:
    p = strategy.theta(sigma)
    return int(rng.choice(len(p), p=p))


def all_count_vectors(q: int, c: int):
    """Every σ ∈ ℕ^q with Σσ = c, in lexicographic order."""
    if q == 1:
        yield (c,)
        return
    for first in range(c, -1, -1):
        for rest in all_count_vectors(q - 1, c - first):
            yield (first,) + rest


def theta_table(strategy: Strategy, q: int, c: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All σ with their θ rows; used by the vectorized simulator."""
    sigmas = list(all_count_vectors(q, c))
    return sigmas, np.array([strategy.theta(s) for s in sigmas])
