"""q-ary Tardos fingerprinting: codes, collusion attacks, exact false-accusation tails."""

from tardosfp.model import CodeParams, KappaInterval, ParamError, safe_kappa_interval, validate

__version__ = "0.1.0"

__all__ = [
    "CodeParams",
    "KappaInterval",
    "ParamError",
    "safe_kappa_interval",
    "validate",
    "__version__",
]
