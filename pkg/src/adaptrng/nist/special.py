"""Special functions used to turn test statistics into P-values.

Both wrap SciPy's Cephes-derived routines, which are accurate far below the
1e-10 absolute error the battery needs; the wrappers add domain checks so
that a malformed statistic fails loudly instead of yielding NaN.
"""

from __future__ import annotations

import math

from scipy import special as _sp

from ..errors import DomainError


def igamc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if not a > 0:
        raise DomainError(f"igamc requires a > 0, got {a}")
    if not x >= 0:
        raise DomainError(f"igamc requires x >= 0, got {x}")
    return float(_sp.gammaincc(a, x))


def erfc(x: float) -> float:
    """Complementary error function."""
    if math.isnan(x):
        raise DomainError("erfc of NaN")
    return math.erfc(x)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))
