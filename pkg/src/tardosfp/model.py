"""Parameter types shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass


class ParamError(ValueError):
    """A CodeParams invariant does not hold."""


@dataclass(frozen=True)
class CodeParams:
    """Scheme parameters.

    ``n`` only sizes simulations; the analytic code ignores it.
    """

    q: int
    c: int
    kappa: float
    m: int = 1
    n: int | None = None
    eps1: float = 1e-10

    def __post_init__(self):
        validate(self)

    def with_(self, **changes) -> CodeParams:
        fields = dict(q=self.q, c=self.c, kappa=self.kappa, m=self.m, n=self.n, eps1=self.eps1)
        fields.update(changes)
        return CodeParams(**fields)


def validate(params: CodeParams) -> CodeParams:
    """Return ``params`` unchanged, or raise ParamError naming the first broken bound."""
    checks = [
        (isinstance(params.q, int) and params.q >= 2, "q ≥ 2"),
        (isinstance(params.c, int) and params.c >= 1, "c ≥ 1"),
        (isinstance(params.m, int) and params.m >= 1, "m ≥ 1"),
        (params.n is None or params.n >= params.c, "n ≥ c"),
        (params.kappa > 0, "kappa > 0"),
        (0 < params.eps1 < 1, "0 < eps1 < 1"),
    ]
    for ok, name in checks:
        if not ok:
            raise ParamError(f"{name} violated")
    return params


@dataclass(frozen=True)
class KappaInterval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, kappa: float) -> bool:
        return self.lo < kappa < self.hi


def safe_kappa_interval(q: int) -> KappaInterval:
    """Interval of κ for which every T(b) stays nonnegative at large c.

    For q=2 the interval degenerates to the single point 1/2 and is reported
    as empty instead of raising.
    """
    if q < 2:
        raise ParamError("q ≥ 2 violated")
    return KappaInterval(1.0 / (2 * (q - 1)), 0.5)


def check_symbol(index: int, q: int) -> int:
    if not 0 <= index < q:
        raise ParamError(f"symbol {index} outside alphabet of size {q}")
    return index
