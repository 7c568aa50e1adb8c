"""Exact false-accusation tails for an innocent user.

The one-segment innocent score has Fourier transform φ̃(k) = E[exp(−ikS)],
assembled from the functions Λ(d, v; k) below. Around k = 0⁺ φ̃ is a
generalized power series whose exponents are integers plus the non-integer
families 2v_b + 2n and 2(d_b+1) + 2n. From it,

    [φ̃(k/√m)]^m = e^{−k²/2} [1 + Σ_t ω_t (i sgn k)^{α_t} |k|^{ν_t}],

and each term integrates to a Hermite-function correction of the Gaussian
tail Ω(Z̃) = ½ erfc(Z̃/√2).

The m-dependence is kept symbolic: with L(k) = log φ̃(k) + k²/2 we have
m log φ̃(k/√m) + k²/2 = Σ_ν L_ν m^{1−ν/2} k^ν, so the coefficient of k^ν in
exp(·) − 1 is Σ_n m^{n−ν/2} [L^n/n!]_ν. :class:`ExpansionTable` stores the
[L^n/n!] once and produces the expansion for any m cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np

from tardosfp.analytic import KbVector, kb, mu_tilde
from tardosfp.attacks import Strategy
from tardosfp.model import CodeParams
from tardosfp.series import MERGE_TOL, GeneralizedSeries
from tardosfp.special import (
    EXTENDED,
    ConvergenceError,
    PoleError,
    Precision,
    _gamma_mp,
    _log2abs,
    _pfq,
    erfc,
    hermite_h,
    hermite_h_neg_family,
)

NU_MAX = 37.0
_SMALL_RUN = 5


class NoCodeLengthError(ValueError):
    """μ̃ ≤ 0: the scheme fails and no code length suffices."""


def segment_params(params: CodeParams) -> list[tuple[int, float, float]]:
    """(b, d_b, v_b) with d_b = b+κ and v_b = c−b+κ(q−1)+1 for b = 1..c."""
    q, c, k = params.q, params.c, params.kappa
    return [(b, b + k, c - b + k * (q - 1) + 1) for b in range(1, c + 1)]


def _check_v(v) -> None:
    two_v = 2 * v
    if abs(two_v - mp.nint(two_v)) < 1e-12:
        raise PoleError(f"pathological κ: 2v = {float(two_v)} is an integer, Γ(−2v) has a pole")


def _lambda_regular(d, v, k, tol):
    """½ Σ_j (ik)^j/j! B(d + j/2, v − j/2) at the current working precision."""
    ik = mp.mpc(0, k)
    norm = 2 * mp.gamma(d + v)
    even = _gamma_mp(d, 0) * _gamma_mp(v, 0) / norm
    odd = ik * _gamma_mp(d + mp.mpf(1) / 2, 0) * _gamma_mp(v - mp.mpf(1) / 2, 0) / norm
    total = even + odd
    peak = max(abs(even), abs(odd))
    run = 0
    j = 0
    terms = [even, odd]
    while True:
        # t_{j+2} = t_j (ik)² / ((j+1)(j+2)) · (d + j/2) / (v − j/2 − 1)
        nxt = terms[j % 2] * ik * ik / ((j + 1) * (j + 2)) * (d + mp.mpf(j) / 2) / (v - mp.mpf(j) / 2 - 1)
        terms[j % 2] = nxt
        total += nxt
        j += 1
        mag = abs(nxt)
        peak = max(peak, mag)
        if mag <= tol * abs(total):
            run += 1
            if run >= _SMALL_RUN:
                return total, peak
        else:
            run = 0
        if j > 100_000:
            raise ConvergenceError("Λ regular series did not settle")


def _lambda_mp(d, v, k, bits, tol):
    d = mp.mpf(d)
    v = mp.mpf(v)
    k = mp.mpf(k)
    sgn = 1 if k > 0 else -1 if k < 0 else 0
    reg, peak = _lambda_regular(d, v, k, tol)
    if k == 0:
        return reg, peak
    sing = (abs(k) ** (2 * v)) * mp.expjpi(-v * sgn) * _gamma_mp(-2 * v, tol) \
        * _pfq([v + d], [v + mp.mpf(1) / 2, v + 1], k * k / 4, bits, tol)
    return sing + reg, max(peak, abs(sing))


def lambda_term(d, v, k, prec: Precision = EXTENDED):
    """Λ(d, v; k) = (−ik)^{2v} Γ(−2v) ₁F₂(v+d; v+½, v+1; k²/4) + ½ Σ_j (ik)^j/j! B(d+j/2, v−j/2).

    Principal branch: (−ik)^{2v} = |k|^{2v} exp(−iπv sgn k). Equivalently
    Λ(d, v; k) = ∫_0^∞ u^{2d−1} (1+u²)^{−d−v} e^{iku} du.
    """
    if not d > 0:
        raise ValueError("Λ needs d > 0")
    _check_v(mp.mpf(v))
    guard = 24
    for _ in range(8):
        bits = prec.bits + guard
        with mp.workprec(bits):
            val, peak = _lambda_mp(d, v, k, bits, prec.rtol)
            lost = _log2abs(peak) - _log2abs(val)
        if lost + 12 <= guard:
            if prec.extended:
                with mp.workprec(prec.bits):
                    return +val
            return complex(val)
        guard = int(lost) + 32
    raise ConvergenceError("Λ cancellation not controlled")


def _prefactor(params: CodeParams):
    q, k = params.q, params.kappa
    return 2 * q * mp.exp(mp.loggamma(q * k) - mp.loggamma(k) - mp.loggamma(k * (q - 1)))


def _weights(K, params: CodeParams):
    """(b, d_b, v_b, (2q/B)·(c choose b)·K_b) for the b with K_b ≠ 0."""
    K = getattr(K, "values", K)
    pref = _prefactor(params)
    out = []
    for b, d, v in segment_params(params):
        if K[b]:
            out.append((b, d, v, pref * math.comb(params.c, b) * mp.mpf(float(K[b]))))
    return out


def phi_tilde(k, K, params: CodeParams, prec: Precision = EXTENDED):
    """φ̃(k) = (2q/B(κ, κ(q−1))) Σ_b (c choose b) K_b [Λ(d_b, v_b; k) + Λ(v_b−1, d_b+1; −k)]."""
    with mp.workprec(prec.bits + 16):
        terms = []
        for _, d, v, w in _weights(K, params):
            inner = Precision.ext(prec.bits + 16, prec.tol)
            terms.append(w * (lambda_term(d, v, k, inner) + lambda_term(v - 1, d + 1, -k, inner)))
        val = mp.fsum(terms)
    if prec.extended:
        with mp.workprec(prec.bits):
            return +val
    return complex(val)


def phi_tilde_quad(k, K, params: CodeParams, bits: int = 80):
    """φ̃(k) by direct numerical integration over the bias of the pirated symbol.

    Independent of the series route: it integrates
    Λ(d, v; k) = ∫ u^{2d−1}(1+u²)^{−d−v} e^{iku} du by quadrature.
    """
    with mp.workprec(bits):
        k = mp.mpf(k)

        def lam(d, v, kk):
            f = lambda u: u ** (2 * d - 1) * (1 + u * u) ** (-d - v) * mp.expj(kk * u)
            pts = [0] + [mp.mpf(2) ** j for j in range(-4, 9)] + [mp.inf]
            return mp.quad(f, pts)

        return mp.fsum(w * (lam(d, v, k) + lam(v - 1, d + 1, -k)) for _, d, v, w in _weights(K, params))


def phi_series(K, params: CodeParams, nu_max: float = NU_MAX, prec: Precision = EXTENDED) -> GeneralizedSeries:
    """Generalized power series of φ̃(k) at k → 0⁺, truncated at |k|^nu_max."""
    out = GeneralizedSeries(nu_max)
    with mp.workprec(prec.bits + 32):
        half = mp.mpf(1) / 2
        for _, d, v, w in _weights(K, params):
            d = mp.mpf(d)
            v = mp.mpf(v)
            # Λ(d, v; k) contributes with (ik)^j, Λ(v−1, d+1; −k) with (−ik)^j
            for dd, vv, s in ((d, v, 1), (v - 1, d + 1, -1)):
                _check_v(vv)
                norm = mp.gamma(dd + vv)
                for j in range(int(nu_max + MERGE_TOL) + 1):
                    beta = _gamma_mp(dd + half * j, 0) * _gamma_mp(vv - half * j, 0) / norm
                    out.add_term(j, w * half * mp.mpc(0, s) ** j / mp.factorial(j) * beta)
                # singular part: (−isk)^{2vv} = k^{2vv} e^{−iπ s vv} for k > 0
                lead = w * mp.expjpi(-s * vv) * _gamma_mp(-2 * vv, 0)
                n = 0
                term = mp.mpf(1)
                while 2 * vv + 2 * n <= nu_max + MERGE_TOL:
                    out.add_term(float(2 * vv + 2 * n), lead * term)
                    term *= (vv + dd + n) / ((vv + half + n) * (vv + 1 + n) * (n + 1) * 4)
                    n += 1
    return out


@dataclass
class ExpansionCoeffs:
    """(ν_t, ω_t, α_t) with [φ̃(k/√m)]^m = e^{−k²/2}[1 + Σ ω_t (i sgn k)^{α_t} |k|^{ν_t}]."""

    nu: list
    omega: list
    alpha: list
    m: int
    nu_max: float
    coeffs: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.nu and not self.nu[0] > 2:
            raise ArithmeticError(f"lowest exponent ν_0 = {float(self.nu[0])} ≤ 2")
        if any(b <= a for a, b in zip(self.nu, self.nu[1:])):
            raise ArithmeticError("exponents not strictly increasing")

    def __len__(self):
        return len(self.nu)

    def bracket(self, k):
        """1 + Σ_t ω_t (i sgn k)^{α_t} |k|^{ν_t}."""
        k = mp.mpf(k)
        s = 1 if k >= 0 else -1
        return 1 + mp.fsum(w * mp.expjpi(s * a / 2) * abs(k) ** nu
                           for nu, w, a in zip(self.nu, self.omega, self.alpha))

    def transform(self, k):
        """Reconstructed [φ̃(k/√m)]^m."""
        return mp.exp(-mp.mpf(k) ** 2 / 2) * self.bracket(k)


class ExpansionTable:
    """Powers [L^n/n!] of L(k) = log φ̃(k) + k²/2, reusable for every m."""

    def __init__(self, K, params: CodeParams, nu_max: float = NU_MAX, prec: Precision = EXTENDED):
        self.params = params
        self.nu_max = float(nu_max)
        self.prec = prec
        with mp.workprec(prec.bits + 32):
            self.phi = phi_series(K, params, nu_max, prec)
            c0 = self.phi.coeff(0)
            c1 = self.phi.coeff(1)
            c2 = self.phi.coeff(2)
            if abs(c0 - 1) > 1e-9 or abs(c1) > 1e-9 or abs(c2 + mp.mpf(1) / 2) > 1e-9:
                raise ArithmeticError(
                    f"φ̃ series does not start 1 + 0k − k²/2: got {mp.nstr(c0, 8)}, {mp.nstr(c1, 8)}, {mp.nstr(c2, 8)}")
            # normalization, zero mean and unit variance are exact; drop the rounding residue
            u = self.phi.drop(0.0)
            u = GeneralizedSeries(nu_max, [(nu, a) for nu, a in u.items() if nu > 2 + MERGE_TOL])
            u.add_term(2.0, -mp.mpf(1) / 2)
            logphi = u.log1p()
            self.L = logphi.drop(2.0)
            self.nu0 = self.L.lowest()
            if not self.nu0 > 2:
                raise ArithmeticError(f"ν_0 = {self.nu0} ≤ 2")
            n_max = int(self.nu_max / self.nu0 + MERGE_TOL)
            self.powers = self.L.powers(n_max)

    def coeffs(self, m: int) -> ExpansionCoeffs:
        if m < 1:
            raise ValueError("m ≥ 1 required")
        with mp.workprec(self.prec.bits + 32):
            mm = mp.mpf(m)
            acc = GeneralizedSeries(self.nu_max)
            for n, pw in enumerate(self.powers, start=1):
                for nu, a in pw.items():
                    acc.add_term(nu, a * mm ** (n - mp.mpf(nu) / 2))
            nus, omegas, alphas, raw = [], [], [], []
            for nu, a in acc.items():
                nus.append(nu)
                omegas.append(abs(a))
                alphas.append(2 * mp.arg(a) / mp.pi)
                raw.append(a)
        return ExpansionCoeffs(nus, omegas, alphas, m, self.nu_max, raw)


@lru_cache(maxsize=64)
def _table_cached(Kt: tuple, params: CodeParams, nu_max: float, bits: int) -> ExpansionTable:
    return ExpansionTable(list(Kt), params, nu_max, Precision.ext(bits))


def expansion_table(K, params: CodeParams, nu_max: float = NU_MAX, prec: Precision = EXTENDED) -> ExpansionTable:
    Kt = tuple(float(x) for x in getattr(K, "values", K))
    # the table does not depend on m
    base = CodeParams(params.q, params.c, params.kappa)
    return _table_cached(Kt, base, float(nu_max), prec.bits)


def expansion(m: int, K, params: CodeParams, nu_max: float = NU_MAX, prec: Precision = EXTENDED) -> ExpansionCoeffs:
    """Coefficients (ν_t, ω_t, α_t) of the expansion of [φ̃(k/√m)]^m for this m."""
    return expansion_table(K, params, nu_max, prec).coeffs(m)


def gaussian_tail(Z_tilde, prec: Precision | None = None):
    """Ω(Z̃) = ½ erfc(Z̃/√2)."""
    if prec is None or not prec.extended:
        return 0.5 * math.erfc(float(Z_tilde) / math.sqrt(2))
    with mp.workprec(prec.bits):
        return erfc(mp.mpf(Z_tilde) / mp.sqrt(2), prec) / 2


def r_m(Z_tilde, coeffs: ExpansionCoeffs, prec: Precision = EXTENDED):
    """Pr[S_j > Z̃√m] = Ω(Z̃) + (1/π) Σ_t ω_t Γ(ν_t) 2^{ν_t/2} Im[i^{−α_t} H_{−ν_t}(iZ̃/√2)]."""
    with mp.workprec(prec.bits + 16):
        z = mp.mpc(0, mp.mpf(Z_tilde) / mp.sqrt(2))
        inner = Precision.ext(prec.bits + 16)
        corr = []
        hs = hermite_h_neg_family(coeffs.nu, z, inner)
        for nu, w, a, h in zip(coeffs.nu, coeffs.omega, coeffs.alpha, hs):
            nu = mp.mpf(nu)
            corr.append(w * mp.gamma(nu) * mp.mpf(2) ** (nu / 2) * mp.im(mp.expjpi(-a / 2) * h))
        total = gaussian_tail(Z_tilde, inner) + mp.fsum(corr) / mp.pi
    return float(total) if not prec.extended else total


def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gil_pelaez_tail(Z_values, m: int, K, params: CodeParams, bits: int = 64, panel: float = 0.5,
                    cutoff: float = 1e-16):
    """Pr[S_j > Z̃√m] for each Z̃ by numerically inverting [φ̃(t/√m)]^m.

    With φ̃(k) = E[e^{−ikS}] and t = k√m,
    Pr[S > Z̃√m] = ½ − (1/π) ∫_0^∞ Im[e^{itZ̃} φ̃(t/√m)^m] / t dt.
    The transform is sampled once on Gauss–Legendre panels (orders 10 and 16)
    and reused for every Z̃; the panel sums at the two orders give the error
    estimate. Returns a list of (value, error_estimate).
    """
    prec = Precision.ext(bits)
    rm = math.sqrt(m)
    cache: dict[float, complex] = {}

    def cf(t: float) -> complex:
        if t not in cache:
            with mp.workprec(bits + 16):
                cache[t] = complex(phi_tilde(mp.mpf(t) / rm, K, params, prec) ** m)
        return cache[t]

    t_max = 4.0
    while abs(cf(t_max)) > cutoff:
        t_max += 1.0
        if t_max > 10_000:
            raise ConvergenceError("|φ̃|^m does not decay; m too small for the inversion budget")
    n_panels = int(math.ceil(t_max / panel))
    rules = [_gl_nodes(10), _gl_nodes(16)]
    samples = []
    for x, w in rules:
        ts, ws = [], []
        for p in range(n_panels):
            a = p * panel
            ts.extend(a + panel * (x + 1) / 2)
            ws.extend(w * panel / 2)
        ts = np.array(ts)
        samples.append((ts, np.array(ws), np.array([cf(float(t)) for t in ts])))
    out = []
    for Z in Z_values:
        vals = []
        for ts, ws, cfs in samples:
            integrand = np.imag(np.exp(1j * ts * float(Z)) * cfs) / ts
            vals.append(math.fsum(ws * integrand))
        res = 0.5 - vals[1] / math.pi
        err = abs(vals[1] - vals[0]) / math.pi
        out.append((res, err))
    return out


def gil_pelaez_oracle(Z_tilde, m: int, K, params: CodeParams, bits: int = 64, error: bool = False,
                      max_error: float = 1e-9):
    """Single-threshold Gil-Pelaez tail; raises if the quadrature error estimate exceeds ``max_error``."""
    (res, err), = gil_pelaez_tail([Z_tilde], m, K, params, bits)
    if err > max_error:
        raise ConvergenceError(f"Gil-Pelaez quadrature error estimate {err:.3g}")
    return (res, err) if error else res


@dataclass
class LengthResult:
    m_star: int
    mu_tilde: float
    r_at_m_star: float
    ratio: float
    gaussian_ratio: float
    evaluations: int


def length_search(params: CodeParams, strategy: Strategy | None = None, eps1: float | None = None,
                  nu_max: float = NU_MAX, K: KbVector | None = None, prec: Precision = EXTENDED) -> LengthResult:
    """Smallest m with R_m(μ̃√m/c) ≤ ε1, threshold at the coalition's mean accusation."""
    eps1 = params.eps1 if eps1 is None else eps1
    if K is None:
        K = kb(strategy, params)
    mu = mu_tilde(K, params)
    c = params.c
    if not mu > 0:
        raise NoCodeLengthError(f"μ̃ = {mu:.6g} ≤ 0: no sufficient code length exists")
    table = expansion_table(K, params, nu_max, prec)
    cache: dict[int, float] = {}

    def r_at(m):
        if m not in cache:
            cache[m] = float(r_m(mu * math.sqrt(m) / c, table.coeffs(m), prec))
        return cache[m]

    def ok(m):
        return r_at(m) <= eps1

    m_gauss = 2 * c * c * math.log(1 / eps1) / mu ** 2
    start = max(1, int(m_gauss / 2))
    if ok(start):
        hi = start
        lo = hi // 2
        while lo >= 1 and ok(lo):
            hi, lo = lo, lo // 2
        if lo < 1:
            lo = 0
    else:
        lo = start
        hi = 2 * start
        while not ok(hi):
            lo, hi = hi, 2 * hi
            if hi > 10**12:
                raise ConvergenceError("no code length up to 1e12 meets the target")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    m_star = hi
    scale = c * c * math.log(1 / eps1)
    return LengthResult(m_star, mu, r_at(m_star), m_star / scale, 2 / mu ** 2, len(cache))


def find_min_length(params: CodeParams, strategy: Strategy | None = None, eps1: float | None = None,
                    nu_max: float = NU_MAX, K: KbVector | None = None) -> int:
    return length_search(params, strategy, eps1, nu_max, K).m_star


def fp_curve(Z_grid, m: int, K, params: CodeParams, nu_max: float = NU_MAX, prec: Precision = EXTENDED):
    """Rows (Z̃, R_m(Z̃), Ω(Z̃))."""
    coeffs = expansion(m, K, params, nu_max, prec)
    return [(float(z), float(r_m(z, coeffs, prec)), gaussian_tail(z)) for z in Z_grid]
