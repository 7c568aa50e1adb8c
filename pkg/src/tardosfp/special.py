"""Special functions needed by the analytic and Fourier modules.

Gamma-type primitives are delegated to mpmath; the hypergeometric series and
the Hermite function of real order are summed here, with automatic extra
working precision whenever a series loses digits to cancellation.

Every public function takes an optional :class:`Precision`. In double mode it
returns Python ``float``/``complex``; in extended mode it returns mpmath
``mpf``/``mpc`` carrying ``bits`` of precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp


class PoleError(ArithmeticError):
    """Argument sits on a pole of Gamma (or a hypergeometric parameter pole)."""


class ConvergenceError(ArithmeticError):
    """A series or retry loop exhausted its budget."""


@dataclass(frozen=True)
class Precision:
    extended: bool = False
    bits: int = 53
    tol: float | None = None

    def __post_init__(self):
        if self.extended and self.bits < 53:
            raise ValueError("extended precision needs bits ≥ 53")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")

    @classmethod
    def double(cls, tol: float | None = None) -> Precision:
        return cls(False, 53, tol)

    @classmethod
    def ext(cls, bits: int = 128, tol: float | None = None) -> Precision:
        return cls(True, bits, tol)

    @property
    def rtol(self) -> float:
        return self.tol if self.tol is not None else 2.0 ** (-self.bits)


DOUBLE = Precision.double()
EXTENDED = Precision.ext(128)

_MAX_TERMS = 200_000
_SMALL_RUN = 5


def _prec(prec: Precision | None) -> Precision:
    return DOUBLE if prec is None else prec


def _out(x, prec: Precision):
    if prec.extended:
        with mp.workprec(prec.bits):
            return +x
    if isinstance(x, mp.mpc):
        return complex(x)
    return float(x)


def _is_nonpos_int(x, tol: float = 0.0) -> bool:
    r = mp.nint(x)
    return r <= 0 and abs(x - r) <= tol * max(1, abs(x))


def _log2abs(x) -> float:
    return float(mp.log(abs(x), 2)) if x != 0 else -math.inf


def log_gamma(x, prec: Precision | None = None):
    """ln Γ(x) for x > 0."""
    prec = _prec(prec)
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    if not prec.extended:
        return math.lgamma(float(x))
    with mp.workprec(prec.bits + 10):
        return _out(mp.loggamma(mp.mpf(x)), prec)


def _gamma_mp(x, tol: float):
    # Caller holds the working precision.
    if _is_nonpos_int(x, tol):
        raise PoleError(f"Gamma pole at {x}")
    if x > 0:
        return mp.gamma(x)
    # Γ(x)Γ(1−x) = π / sin(πx)
    return mp.pi / (mp.sinpi(x) * mp.gamma(1 - x))


def gamma_signed(x, prec: Precision | None = None):
    """Γ(x) with its sign, for any real x off the poles 0, −1, −2, …"""
    prec = _prec(prec)
    with mp.workprec(prec.bits + 10):
        return _out(_gamma_mp(mp.mpf(x), prec.rtol), prec)


def rgamma(x, prec: Precision | None = None):
    """1/Γ(x), entire; exactly zero at the poles of Γ."""
    prec = _prec(prec)
    with mp.workprec(prec.bits + 10):
        x = mp.mpf(x)
        if _is_nonpos_int(x):
            return _out(mp.mpf(0), prec)
        return _out(1 / _gamma_mp(x, 0.0), prec)


def log_beta_vec(v, prec: Precision | None = None):
    """ln B(v) = Σ ln Γ(v_a) − ln Γ(Σ v_a), all v_a > 0."""
    prec = _prec(prec)
    v = list(v)
    if not v:
        raise ValueError("beta_vec of an empty vector")
    if any(not a > 0 for a in v):
        raise ValueError("beta_vec needs positive components")
    if not prec.extended:
        return math.fsum(math.lgamma(float(a)) for a in v) - math.lgamma(math.fsum(float(a) for a in v))
    with mp.workprec(prec.bits + 10):
        v = [mp.mpf(a) for a in v]
        return _out(mp.fsum(mp.loggamma(a) for a in v) - mp.loggamma(mp.fsum(v)), prec)


def beta_vec(v, prec: Precision | None = None):
    """Generalized Beta function Π Γ(v_a) / Γ(Σ v_a)."""
    prec = _prec(prec)
    lb = log_beta_vec(v, prec)
    if not prec.extended:
        return math.exp(lb)
    with mp.workprec(prec.bits + 10):
        return _out(mp.exp(lb), prec)


def _series_pfq(a, b, z, tol):
    """Sum pFq at the current working precision; return (sum, largest |term|)."""
    term = mp.mpf(1)
    total = mp.mpf(1)
    peak = mp.mpf(1)
    run = 0
    n = 0
    while True:
        num = mp.mpf(1)
        for ai in a:
            num *= ai + n
        if num == 0:
            return total, peak
        den = mp.mpf(n + 1)
        for bj in b:
            den *= bj + n
        term = term * num / den * z
        total += term
        n += 1
        mag = abs(term)
        if mag > peak:
            peak = mag
        if mag <= tol * abs(total):
            run += 1
            if run >= _SMALL_RUN:
                return total, peak
        else:
            run = 0
        if n > _MAX_TERMS:
            raise ConvergenceError(f"hypergeometric series did not settle after {n} terms")


def _pfq(a, b, z, bits: int, tol: float):
    """Hypergeometric series, re-run at higher precision while cancellation eats the digits."""
    for bj in b:
        if _is_nonpos_int(mp.mpf(bj), 1e-14):
            raise PoleError(f"hypergeometric lower parameter {bj} is a nonpositive integer")
    guard = 24
    for _ in range(8):
        with mp.workprec(bits + guard):
            aa = [mp.mpf(x) for x in a]
            bb = [mp.mpf(x) for x in b]
            zz = mp.mpmathify(z)
            total, peak = _series_pfq(aa, bb, zz, tol)
            lost = _log2abs(peak) - _log2abs(total)
        if lost + 12 <= guard:
            return total
        guard = int(min(lost, 4 * bits + 1000)) + 32
    raise ConvergenceError("hypergeometric series cancellation not controlled")


def hyp1f2(a, b1, b2, x, prec: Precision | None = None):
    """₁F₂(a; b1, b2; x) by direct summation (entire in x)."""
    prec = _prec(prec)
    return _out(_pfq([a], [b1, b2], x, prec.bits, prec.rtol), prec)


def hyp1f1(a, b, z, prec: Precision | None = None):
    """Confluent ₁F₁(a; b; z) for real parameters and complex z."""
    prec = _prec(prec)
    return _out(_pfq([a], [b], z, prec.bits, prec.rtol), prec)


def hermite_h(nu, z, prec: Precision | None = None):
    """Hermite function H_ν(z) of real order ν.

    Uses H_ν(z) = 2^ν √π [ ₁F₁(−ν/2; ½; z²)/Γ((1−ν)/2) − 2z ₁F₁((1−ν)/2; 3/2; z²)/Γ(−ν/2) ],
    which reduces to the Hermite polynomials for ν = 0, 1, 2, …
    """
    prec = _prec(prec)
    guard = 16
    for _ in range(8):
        bits = prec.bits + guard
        with mp.workprec(bits):
            nu_ = mp.mpf(nu)
            z_ = mp.mpmathify(z)
            z2 = z_ * z_
            if isinstance(z_, mp.mpc) and z_.real == 0:
                z2 = -z_.imag ** 2  # keep the series real for imaginary arguments
            r1 = rgamma((1 - nu_) / 2, Precision.ext(bits))
            r2 = rgamma(-nu_ / 2, Precision.ext(bits))
            p1 = _pfq([-nu_ / 2], [mp.mpf(1) / 2], z2, bits, prec.rtol) * r1 if r1 != 0 else mp.mpf(0)
            p2 = 2 * z_ * _pfq([(1 - nu_) / 2], [mp.mpf(3) / 2], z2, bits, prec.rtol) * r2 if r2 != 0 else mp.mpf(0)
            h = mp.mpf(2) ** nu_ * mp.sqrt(mp.pi) * (p1 - p2)
            lost = max(_log2abs(p1), _log2abs(p2)) - _log2abs(p1 - p2)
        if lost + 12 <= guard:
            return _out(h, prec)
        if not math.isfinite(lost):
            raise PoleError(f"Hermite function combination vanishes identically at nu={nu}, z={z}")
        guard = int(lost) + 32
    raise ConvergenceError("Hermite function cancellation not controlled")


def hermite_h_neg_family(orders, z, prec: Precision | None = None) -> list:
    """H_{−ν}(z) for every ν in ``orders`` (real, > 0).

    Orders sharing a fractional part are linked by
    H_{−ν+1}(z) = 2z H_{−ν}(z) + 2ν H_{−ν−1}(z). As ν grows H_{−ν} is the
    minimal solution of this recurrence, so each class is seeded by two direct
    evaluations at its largest order and recurred downward, which is stable.
    """
    prec = _prec(prec)
    orders = [float(v) for v in orders]
    out: list = [None] * len(orders)
    groups: dict[int, list[int]] = {}
    for i, v in enumerate(orders):
        groups.setdefault(int(round((v - math.floor(v + 1e-9)) * 1e8)), []).append(i)
    bits = prec.bits + 16
    inner = Precision.ext(bits, prec.tol)
    with mp.workprec(bits):
        z_ = mp.mpmathify(z)
        for idx in groups.values():
            top = max(orders[i] for i in idx)
            want = {}
            for i in idx:
                k = round(top - orders[i])
                if abs(top - k - orders[i]) <= 1e-12 * max(1.0, top):
                    want.setdefault(k, []).append(i)
                else:
                    out[i] = hermite_h(-orders[i], z_, inner)
            if not want:
                continue
            nu_top = mp.mpf(top)
            h_lo = hermite_h(-nu_top - 1, z_, inner)  # H_{−(top+1)}
            h = hermite_h(-nu_top, z_, inner)
            for k in range(max(want) + 1):
                for i in want.get(k, ()):
                    out[i] = h
                mu = nu_top - k
                h, h_lo = 2 * z_ * h + 2 * mu * h_lo, h
    return [_out(v, prec) for v in out]


def erfc(x, prec: Precision | None = None):
    """Complementary error function; erfc(−∞)=2, erfc(+∞)=0."""
    prec = _prec(prec)
    if not prec.extended:
        return math.erfc(float(x))
    with mp.workprec(prec.bits + 10):
        return _out(mp.erfc(mp.mpf(x)), prec)
