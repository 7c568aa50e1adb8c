"""Exact per-segment distributional quantities.

Covers the Dirichlet-multinomial law of the symbol counts σ, the strategy
parameters K_b (by brute force and by the root-of-unity sums for the three
factorized strategy classes), the weight T(b) and the mean coalition
accusation μ̃.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp
import numpy as np

from tardosfp.attacks import (
    Class1Strategy,
    Class2Strategy,
    Class3Strategy,
    Strategy,
    all_count_vectors,
)
from tardosfp.model import CodeParams
from tardosfp.special import log_beta_vec


class KbError(ArithmeticError):
    """Root-of-unity sum left an imaginary residue, or enumeration too large."""


BRUTEFORCE_MAX_TERMS = 10**8
IMAG_TOL = 1e-9


def _log_multinomial(n: int, parts: Sequence[int]) -> float:
    return math.lgamma(n + 1) - math.fsum(math.lgamma(x + 1) for x in parts)


def prob_sigma(sigma: Sequence[int], params: CodeParams) -> float:
    """P(σ) averaged over the bias: (c choose σ) B(κ1+σ)/B(κ1)."""
    if sum(sigma) != params.c or len(sigma) != params.q:
        raise ValueError("σ must have q entries summing to c")
    k = params.kappa
    return math.exp(_log_multinomial(params.c, sigma)
                    + log_beta_vec([k + s for s in sigma]) - log_beta_vec([k] * params.q))


def p1(b: int, params: CodeParams) -> float:
    """Marginal probability that one fixed symbol is held by exactly b colluders."""
    q, c, k = params.q, params.c, params.kappa
    if not 0 <= b <= c:
        raise ValueError("b outside 0..c")
    lb = log_beta_vec([k + b, k * (q - 1) + c - b]) - log_beta_vec([k, k * (q - 1)])
    return math.exp(math.lgamma(c + 1) - math.lgamma(b + 1) - math.lgamma(c - b + 1) + lb)


def p1_vector(params: CodeParams) -> np.ndarray:
    return np.array([p1(b, params) for b in range(params.c + 1)])


def p_qmin1(x: Sequence[int], b: int, params: CodeParams) -> float:
    """P(other q−1 counts = x | σ_α = b)."""
    if len(x) != params.q - 1 or sum(x) != params.c - b or any(v < 0 for v in x):
        raise ValueError("x must hold q−1 nonnegative counts summing to c−b")
    k = params.kappa
    return math.exp(_log_multinomial(params.c - b, x)
                    + log_beta_vec([k + v for v in x]) - log_beta_vec([k] * (params.q - 1)))


@dataclass
class KbVector:
    """K_0..K_c together with how they were obtained."""

    values: np.ndarray
    params: CodeParams
    strategy: str = ""
    method: str = ""
    max_imag: float = 0.0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, b):
        return self.values[b]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def sum_rule(self) -> float:
        """q Σ_b K_b P1(b); equals 1 for every valid strategy."""
        return self.params.q * math.fsum(self.values * p1_vector(self.params))

    def check(self, tol: float = 1e-9) -> KbVector:
        v = self.values
        if v[0] != 0 or v[-1] != 1:
            raise KbError("K_0 must be 0 and K_c must be 1")
        if np.any(v < -tol) or np.any(v > 1 + tol):
            raise KbError("K_b outside [0, 1]")
        if abs(self.sum_rule() - 1) > tol:
            raise KbError(f"sum rule violated: q Σ K_b P1(b) = {self.sum_rule()!r}")
        return self


def _multisets(total: int, parts: int, cap: int | None = None):
    """Nonincreasing tuples of ``parts`` nonnegative ints summing to ``total``."""
    cap = total if cap is None else cap
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, cap), -1, -1):
        if first * parts < total:
            break
        for rest in _multisets(total - first, parts - 1, first):
            yield (first,) + rest


def _perm_count(x: Sequence[int]) -> int:
    out = math.factorial(len(x))
    for v in set(x):
        out //= math.factorial(x.count(v))
    return out


def kb_bruteforce(strategy: Strategy, params: CodeParams, max_terms: int = BRUTEFORCE_MAX_TERMS) -> KbVector:
    """K_b = Σ_x P_{q−1}(x|b) Ψ_b(x), summing over multisets x with permutation weights."""
    q, c = params.q, params.c
    n_terms = sum(math.comb(c - b + q - 2, q - 2) for b in range(1, c))
    if n_terms > max_terms:
        raise KbError(f"brute-force K_b needs {n_terms} terms (> {max_terms})")
    K = np.zeros(c + 1)
    for b in range(1, c):
        acc = []
        for x in _multisets(c - b, q - 1):
            ps = strategy.psi(b, x)
            if ps:
                acc.append(_perm_count(list(x)) * p_qmin1(x, b, params) * ps)
        K[b] = math.fsum(acc)
    K[c] = 1.0
    return KbVector(K, params, strategy.name, "bruteforce")


def root_count(b: int, q: int, c: int) -> int:
    """Smallest modulus admissible for the Kronecker-delta representation."""
    return max(c - b, abs(c - b * q), (c - b) * (q - 2)) + 1


def _working_bits(params: CodeParams) -> int:
    return 64 if params.c * (params.q - 1) <= 40 else 128


class _RootSums:
    """Shared pieces of the root-of-unity K_b formulas for one count b."""

    def __init__(self, b: int, params: CodeParams):
        q, c, k = params.q, params.c, params.kappa
        self.b = b
        self.N = root_count(b, q, c)
        self.roots = [mp.expjpi(mp.mpf(2 * j) / self.N) for j in range(self.N)]
        self.gz = [mp.gamma(k + z) / mp.factorial(z) for z in range(c + 1)]
        self.zs = [z for z in range(c - b + 1) if z != b]
        self.log_norm = (mp.loggamma(c - b + k * (q - 1))
                         + (q - 1) * mp.loggamma(k) - mp.loggamma((q - 1) * k))

    def tau(self, e: int):
        return self.roots[e % self.N]

    def G(self, a: int, weight):
        return mp.fsum(self.gz[z] * weight[z] * self.tau(-a * z) for z in self.zs)

    def v(self, a: int):
        return self.gz[self.b] * self.tau(-a * self.b)


def _finish(K_complex: list, params: CodeParams, name: str, method: str, terms: int = 0,
            moduli: list | None = None) -> KbVector:
    c = params.c
    imag = max((abs(float(mp.im(v))) for v in K_complex), default=0.0)
    if imag > IMAG_TOL:
        raise KbError(f"root-of-unity sum left imaginary residue {imag:.3g}")
    K = np.zeros(c + 1)
    for b, v in enumerate(K_complex, start=1):
        K[b] = float(mp.re(v))
    K[c] = 1.0
    return KbVector(K, params, name, method, max_imag=imag, meta={"terms": terms, "moduli": moduli or []})


def kb_class1(strategy: Class1Strategy, params: CodeParams) -> KbVector:
    """K_b for Ψ_b(x) = w(b,ℓ) Π W(b,ℓ,z_k) via a sum over N_b-th roots of unity."""
    q, c = params.q, params.c
    out, moduli, terms = [], [], 0
    with mp.workprec(_working_bits(params)):
        for b in range(1, c):
            rs = _RootSums(b, params)
            moduli.append(rs.N)
            terms += rs.N * q * (len(rs.zs) + 1)
            wts = [[strategy.W(b, ell, z) if z != b else 0.0 for z in range(c + 1)] for ell in range(q)]
            wl = [strategy.w(b, ell) for ell in range(q)]
            binom = [math.comb(q - 1, ell) for ell in range(q)]
            acc = []
            for a in range(rs.N):
                v = rs.v(a)
                inner = mp.fsum(binom[ell] * rs.G(a, wts[ell]) ** (q - 1 - ell) * wl[ell] * v ** ell
                                for ell in range(q) if wl[ell])
                acc.append(rs.tau(a * (c - b)) * inner)
            lognum = mp.loggamma(c - b + 1)
            out.append(mp.fsum(acc) * mp.exp(lognum - rs.log_norm) / rs.N)
        return _finish(out, params, strategy.name, "class1", terms, moduli)


def _kb_collapsed(w, W, params: CodeParams, name: str, method: str) -> KbVector:
    q, c, k = params.q, params.c, params.kappa
    out, moduli, terms = [], [], 0
    with mp.workprec(_working_bits(params)):
        for b in range(1, c):
            wb = w(b)
            if wb == 0:
                out.append(mp.mpc(0))
                moduli.append(0)
                continue
            rs = _RootSums(b, params)
            moduli.append(rs.N)
            terms += rs.N * (len(rs.zs) + 2)
            weight = [W(b, z) if z != b else 0 for z in range(c + 1)]
            acc = []
            for a in range(rs.N):
                G = rs.G(a, weight)
                acc.append(rs.tau(a * c) * ((G + rs.v(a)) ** q - G ** q))
            lognum = mp.loggamma(b + 1) + mp.loggamma(c - b + 1) - mp.loggamma(k + b)
            out.append(wb * mp.fsum(acc) * mp.exp(lognum - rs.log_norm) / (q * rs.N))
        return _finish(out, params, name, method, terms, moduli)


def kb_class2(strategy: Class2Strategy, params: CodeParams) -> KbVector:
    """K_b for Ψ_b(x) = w(b)/(ℓ+1) Π W(b,z_k); the ℓ-sum collapses to a binomial difference."""
    return _kb_collapsed(strategy.w, strategy.W, params, strategy.name, "class2")


def kb_class3(strategy: Class3Strategy, params: CodeParams) -> KbVector:
    """Ranking strategies: w(b) = 1 and only the z with W(b,z) = 1 enter G."""
    return _kb_collapsed(lambda b: 1, strategy.W, params, strategy.name, "class3")


def kb(strategy: Strategy, params: CodeParams) -> KbVector:
    """K_b by the fastest exact path available for the strategy's class."""
    if isinstance(strategy, Class3Strategy):
        return kb_class3(strategy, params)
    if isinstance(strategy, Class2Strategy):
        return kb_class2(strategy, params)
    if isinstance(strategy, Class1Strategy):
        return kb_class1(strategy, params)
    return kb_bruteforce(strategy, params)


def t_exact(b: int, params: CodeParams) -> float:
    """T(b) = {½ − κ + (b/c)(κq − 1)} c Γ(b+κ−½)/Γ(b+κ) · Γ(c−b+κ(q−1)−½)/Γ(c−b+κ(q−1)).

    At b = c the brace equals the second Gamma argument and at b = 0 it is
    minus the first, so Γ(u)·u = Γ(u+1) removes the would-be 0·∞ there.
    """
    q, c, k = params.q, params.c, params.kappa
    if not 0 <= b <= c:
        raise ValueError("b outside 0..c")
    lg = math.lgamma
    rest = k * (q - 1)
    if b == c:
        return c * math.exp(lg(c + k - 0.5) - lg(c + k) + lg(rest + 0.5) - lg(rest))
    if b == 0:
        return -c * math.exp(lg(k + 0.5) - lg(k) + lg(c + rest - 0.5) - lg(c + rest))
    brace = 0.5 - k + (b / c) * (k * q - 1)
    return brace * c * math.exp(lg(b + k - 0.5) - lg(b + k) + lg(c - b + rest - 0.5) - lg(c - b + rest))


def t_values(params: CodeParams) -> np.ndarray:
    return np.array([t_exact(b, params) for b in range(params.c + 1)])


def t_approx(x: float, params: CodeParams) -> float:
    """Large-c form of T at b = cx."""
    if not 0 < x < 1:
        raise ValueError("t_approx needs 0 < x < 1")
    k, q = params.kappa, params.q
    return (0.5 - k + x * (k * q - 1)) / math.sqrt(x * (1 - x))


def mu_tilde(K: KbVector | Sequence[float], params: CodeParams) -> float:
    """μ̃ = q Σ_b K_b P1(b) T(b)."""
    K = np.asarray(getattr(K, "values", K), dtype=float)
    t = t_values(params)
    pv = p1_vector(params)
    return params.q * math.fsum(K * pv * t)


def mu_tilde_direct(strategy: Strategy, params: CodeParams) -> float:
    """μ̃ = Σ_σ P(σ) Σ_α θ_{α|σ} T(σ_α), by enumerating every σ."""
    t = t_values(params)
    terms = []
    for sigma in all_count_vectors(params.q, params.c):
        th = strategy.theta(sigma)
        ps = prob_sigma(sigma, params)
        terms.extend(ps * th[a] * t[s] for a, s in enumerate(sigma) if th[a])
    return math.fsum(terms)
