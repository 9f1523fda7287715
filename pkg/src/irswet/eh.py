"""Non-linear RF-to-DC energy harvesting model and its exact inverse.

The harvester follows the logistic model

    Phi(p) = X / (1 + exp(-a (p - b))) - Y,

with X = M (1 + e^{ab}) / e^{ab} and Y = M / e^{ab}, so that Phi(0) = 0 and
Phi saturates at M. All powers are in watts; dBm exists only at the config
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EhParams",
    "InfeasibleTargetError",
    "derive_constants",
    "dc_power",
    "required_rf_power",
    "per_er",
]


class InfeasibleTargetError(ValueError):
    """Raised when a DC target at or above the saturation power is requested."""


@dataclass(frozen=True)
class EhParams:
    """Harvester circuit constants (a, b, m) and derived sigmoid constants (x, y)."""

    a: float  # 1/W, sigmoid slope
    b: float  # W, sigmoid center
    m: float  # W, saturation DC power
    x: float  # W, derived: m (1 + e^{ab}) / e^{ab}
    y: float  # W, derived: m / e^{ab}


def derive_constants(a, b, m):
    """Build EhParams from the circuit constants, computing x and y.

    Parameters
    ----------
    a : float
        Sigmoid slope in 1/W, > 0.
    b : float
        Sigmoid center in W, > 0.
    m : float
        Saturation DC power in W, > 0.
    """
    if not (a > 0 and b > 0 and m > 0):
        raise ValueError(f"harvester constants must be positive, got a={a}, b={b}, m={m}")
    eab = math.exp(a * b)
    x = m * (1.0 + eab) / eab
    y = m / eab
    return EhParams(a=float(a), b=float(b), m=float(m), x=x, y=y)


def dc_power(p: EhParams, p_rf):
    """Harvested DC power in watts for received RF power `p_rf` (scalar or array).

    Strictly increasing in p_rf with range [0, m).
    """
    p_rf = np.asarray(p_rf, dtype=float)
    if np.any(p_rf < 0):
        raise ValueError("received RF power must be nonnegative")
    out = p.x / (1.0 + np.exp(-p.a * (p_rf - p.b))) - p.y
    # exp underflow far above saturation can leave out == m exactly; clamp into [0, m)
    out = np.clip(out, 0.0, np.nextafter(p.m, 0.0))
    return float(out) if out.ndim == 0 else out


def required_rf_power(p: EhParams, phi):
    """Exact inverse of dc_power: RF power needed to harvest `phi` watts DC.

    Returns b - (1/a) ln(x / (phi + y) - 1). The "- 1" inside the logarithm is
    required for the round trip dc_power(required_rf_power(phi)) == phi.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("DC target must be nonnegative")
    if np.any(phi >= p.m):
        raise InfeasibleTargetError(
            f"DC target {float(np.max(phi))} W is at or above saturation {p.m} W")
    out = p.b - np.log(p.x / (phi + p.y) - 1.0) / p.a
    return float(out) if out.ndim == 0 else out


def per_er(eh, k):
    """Normalize `eh` to a list of K EhParams (a single instance broadcasts)."""
    if isinstance(eh, EhParams):
        return [eh] * k
    eh = list(eh)
    if len(eh) != k:
        raise ValueError(f"expected {k} harvester parameter sets, got {len(eh)}")
    return eh
