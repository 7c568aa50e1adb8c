"""Truncated series in real (generally non-integer) powers of |k|.

A :class:`GeneralizedSeries` represents Σ_ν a_ν |k|^ν for k > 0 with complex
coefficients. Exponents that agree within ``MERGE_TOL`` share one slot.
Arithmetic runs at the mpmath working precision of the caller.
"""

from __future__ import annotations

import bisect
from typing import Iterable

import mpmath as mp

MERGE_TOL = 1e-9
_GRID = 1e9


def _slot(nu: float) -> int:
    return int(round(nu * _GRID))


class GeneralizedSeries:
    __slots__ = ("nu_max", "_terms")

    def __init__(self, nu_max: float, terms: Iterable[tuple[float, object]] = ()):
        self.nu_max = float(nu_max)
        self._terms: dict[int, list] = {}
        for nu, a in terms:
            self.add_term(nu, a)

    def add_term(self, nu: float, a) -> None:
        if nu > self.nu_max + MERGE_TOL:
            return
        key = _slot(nu)
        slot = self._terms.get(key)
        if slot is None:
            # tolerate rounding straddling a grid boundary
            for k2 in (key - 1, key + 1):
                if k2 in self._terms and abs(self._terms[k2][0] - nu) <= MERGE_TOL:
                    slot = self._terms[k2]
                    break
        if slot is None:
            self._terms[key] = [float(nu), mp.mpmathify(a)]
        else:
            slot[1] += a

    def items(self) -> list[tuple[float, object]]:
        """(ν, a_ν) pairs with strictly increasing ν, zero coefficients dropped."""
        return sorted(((nu, a) for nu, a in self._terms.values() if a != 0), key=lambda t: t[0])

    def exponents(self) -> list[float]:
        return [nu for nu, _ in self.items()]

    def coeff(self, nu: float, default=0):
        key = _slot(nu)
        for k2 in (key, key - 1, key + 1):
            slot = self._terms.get(k2)
            if slot is not None and abs(slot[0] - nu) <= MERGE_TOL:
                return slot[1]
        return default

    def __len__(self):
        return len(self._terms)

    def copy(self) -> GeneralizedSeries:
        return GeneralizedSeries(self.nu_max, self.items())

    def drop(self, upto: float) -> GeneralizedSeries:
        """Series without the terms of exponent ≤ ``upto``."""
        return GeneralizedSeries(self.nu_max, [(nu, a) for nu, a in self.items() if nu > upto + MERGE_TOL])

    def __add__(self, other: GeneralizedSeries) -> GeneralizedSeries:
        out = GeneralizedSeries(min(self.nu_max, other.nu_max), self.items())
        for nu, a in other.items():
            out.add_term(nu, a)
        return out

    def scale(self, s) -> GeneralizedSeries:
        return GeneralizedSeries(self.nu_max, [(nu, a * s) for nu, a in self.items()])

    def __mul__(self, other: GeneralizedSeries) -> GeneralizedSeries:
        nu_max = min(self.nu_max, other.nu_max)
        out = GeneralizedSeries(nu_max)
        right = other.items()
        right_nu = [nu for nu, _ in right]
        for nu1, a1 in self.items():
            stop = bisect.bisect_right(right_nu, nu_max - nu1 + MERGE_TOL)
            for nu2, a2 in right[:stop]:
                out.add_term(nu1 + nu2, a1 * a2)
        return out

    def lowest(self) -> float:
        items = self.items()
        if not items:
            raise ValueError("empty series")
        return items[0][0]

    def __call__(self, k):
        """Evaluate at real k; negative k by conjugation (the series of a real density's transform)."""
        k = mp.mpf(k)
        if k == 0:
            return self.coeff(0.0)
        total = mp.fsum(a * abs(k) ** nu for nu, a in self.items())
        return total if k > 0 else mp.conj(total)

    def log1p(self) -> GeneralizedSeries:
        """log(1 + u) for a series u with positive lowest exponent."""
        e0 = self.lowest()
        if e0 <= MERGE_TOL:
            raise ValueError("log1p needs a series without constant term")
        n_max = int(self.nu_max / e0 + MERGE_TOL)
        out = GeneralizedSeries(self.nu_max)
        power = self
        for n in range(1, n_max + 1):
            sign = 1 if n % 2 else -1
            for nu, a in power.items():
                out.add_term(nu, sign * a / n)
            if n < n_max:
                power = power * self
        return out

    def powers(self, n_max: int) -> list[GeneralizedSeries]:
        """[self¹/1!, self²/2!, …] up to n_max (stopping early once truncation empties them)."""
        out = [self]
        power = self
        for n in range(2, n_max + 1):
            power = (power * self).scale(mp.mpf(1) / n)
            if not len(power.items()):
                break
            out.append(power)
        return out

    def __repr__(self):
        items = self.items()
        head = ", ".join(f"{nu:.6g}: {mp.nstr(a, 6)}" for nu, a in items[:4])
        return f"GeneralizedSeries({len(items)} terms ≤ {self.nu_max:g}; {head}{', …' if len(items) > 4 else ''})"
