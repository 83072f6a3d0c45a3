"""The Husler-Reiss dependence parameter and its tail-dependence equivalent.

The scalar parameter ``lam`` (written Lambda in the literature) governs the
strength of extremal dependence: ``lam -> 0`` gives independent components,
``lam -> inf`` comonotone ones.  Its one-to-one image under
``chi = 2 * (1 - Phi(1/lam))`` is the tail-dependence coefficient in (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .errors import DataError

# Domain used by all likelihood optimizations: chi(1e-3) ~ 0 and
# chi(50) > 0.999; outside this range the likelihood is flat to machine
# precision.
LAMBDA_MIN = 1e-3
LAMBDA_MAX = 50.0

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DependenceParam:
    """Dependence parameter of the bivariate Husler-Reiss distribution.

    Parameters
    ----------
    lam : float
        Strictly positive, finite dependence parameter.
    """

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not math.isfinite(lam) or lam <= 0.0:
            raise DataError(f"dependence parameter must be positive and finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def chi(self) -> float:
        """Tail-dependence coefficient implied by this parameter."""
        return chi_of_lambda(self)

    @property
    def at_upper_bound(self) -> bool:
        """True if the value sits at the top of the optimizer domain."""
        return self.lam >= LAMBDA_MAX * (1.0 - 1e-9)

    @property
    def at_lower_bound(self) -> bool:
        return self.lam <= LAMBDA_MIN * (1.0 + 1e-9)


def as_lambda(lam) -> float:
    """Coerce a DependenceParam or positive float to a validated float."""
    if isinstance(lam, DependenceParam):
        return lam.lam
    return DependenceParam(float(lam)).lam


def chi_of_lambda(lam) -> float:
    """Tail-dependence coefficient chi = 2 * (1 - Phi(1/lam)).

    Strictly increasing in ``lam``; equals ``erfc(1 / (lam * sqrt(2)))``.
    """
    lam_f = as_lambda(lam)
    return math.erfc(_SQRT1_2 / lam_f)


def lambda_of_chi(chi: float) -> DependenceParam:
    """Inverse of :func:`chi_of_lambda`.

    Parameters
    ----------
    chi : float
        Tail-dependence coefficient, strictly inside (0, 1).
    """
    chi = float(chi)
    if not (0.0 < chi < 1.0):
        raise DataError(f"chi must lie strictly inside (0, 1), got {chi!r}")
    z = float(special.erfcinv(chi))
    if z <= 0.0:  # chi so close to 1 that erfcinv underflows
        raise DataError(f"chi={chi!r} too close to 1 to invert in double precision")
    return DependenceParam(1.0 / (_SQRT2 * z))
