"""Canonical convex energies and quadratic strain measures.

A canonical energy V is convex with a strictly monotone derivative, so its
Legendre conjugate V* exists in closed form and the pair satisfies
V(xi) + V*(zeta) = xi*zeta exactly when zeta = dV(xi).  Strain enters through
the quadratic measure family Lambda(gamma) = a*|gamma|^2 + b (Frobenius norm
for matrices), which covers both the double-well measure (a=1/2, b=-1) and
the shear-invariant measure (a=1, b=0) with a single parameterization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

KIND_QUADRATIC = 0
KIND_LOG_NEOHOOKEAN = 1


@dataclass(frozen=True)
class QuadraticEnergy:
    """V(xi) = alpha*xi^2/2, defined on all of R."""

    alpha: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a positive finite number, got {self.alpha}")


@dataclass(frozen=True)
class LogNeoHookeanEnergy:
    """V(xi) = c1*xi + c2*xi*log(xi), defined on xi > 0."""

    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        for name in ("c1", "c2"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise DomainError(f"{name} must be a positive finite material constant, got {v}")


CanonicalEnergy = Union[QuadraticEnergy, LogNeoHookeanEnergy]


@dataclass(frozen=True)
class QuadraticMeasure:
    """Lambda(gamma) = a*|gamma|^2 + b with a > 0."""

    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise DomainError(f"measure scale a must be positive and finite, got {self.a}")
        if not math.isfinite(self.b):
            raise DomainError(f"measure shift b must be finite, got {self.b}")


def kind_params(energy: CanonicalEnergy) -> tuple[int, float, float]:
    """Numeric (kind, p1, p2) encoding used by the jit kernels."""
    if isinstance(energy, QuadraticEnergy):
        return KIND_QUADRATIC, energy.alpha, 0.0
    if isinstance(energy, LogNeoHookeanEnergy):
        return KIND_LOG_NEOHOOKEAN, energy.c1, energy.c2
    raise TypeError(f"unsupported energy type: {type(energy)!r}")


def xi_domain(energy: CanonicalEnergy) -> tuple[float, float]:
    """Open interval of admissible xi."""
    if isinstance(energy, LogNeoHookeanEnergy):
        return (0.0, math.inf)
    return (-math.inf, math.inf)


def zeta_domain(energy: CanonicalEnergy) -> tuple[float, float]:
    """Open interval of admissible zeta.

    dV maps (0, inf) onto all of R for the log model, and R onto R for the
    quadratic one, so both conjugates live on the whole real line.
    """
    return (-math.inf, math.inf)


def _check_xi(energy: CanonicalEnergy, xi) -> None:
    if isinstance(energy, LogNeoHookeanEnergy) and np.any(np.asarray(xi) <= 0.0):
        raise DomainError(
            "xi must be strictly positive for the log neo-Hookean energy "
            f"(got min {np.min(xi)}); refusing to clamp a constitutive-constraint violation"
        )


def _ret(x):
    arr = np.asarray(x)
    return float(arr) if arr.ndim == 0 else arr


def V(energy: CanonicalEnergy, xi):
    """Canonical energy value; accepts scalars or arrays."""
    xi = np.asarray(xi, dtype=float)
    _check_xi(energy, xi)
    if isinstance(energy, QuadraticEnergy):
        return _ret(0.5 * energy.alpha * xi * xi)
    return _ret(energy.c1 * xi + energy.c2 * xi * np.log(xi))


def dV(energy: CanonicalEnergy, xi):
    """Derivative zeta = dV(xi); strictly increasing on the xi domain."""
    xi = np.asarray(xi, dtype=float)
    _check_xi(energy, xi)
    if isinstance(energy, QuadraticEnergy):
        return _ret(energy.alpha * xi)
    return _ret(energy.c1 + energy.c2 * (np.log(xi) + 1.0))


def d2V(energy: CanonicalEnergy, xi):
    """Second derivative; positive everywhere on the xi domain."""
    xi = np.asarray(xi, dtype=float)
    _check_xi(energy, xi)
    if isinstance(energy, QuadraticEnergy):
        return _ret(np.full_like(xi, energy.alpha))
    return _ret(energy.c2 / xi)


def Vstar(energy: CanonicalEnergy, zeta):
    """Legendre conjugate V*(zeta)."""
    zeta = np.asarray(zeta, dtype=float)
    if isinstance(energy, QuadraticEnergy):
        return _ret(zeta * zeta / (2.0 * energy.alpha))
    return _ret(energy.c2 * np.exp((zeta - energy.c1) / energy.c2 - 1.0))


def dVstar(energy: CanonicalEnergy, zeta):
    """Conjugate derivative xi = dV*(zeta); the inverse map of dV."""
    zeta = np.asarray(zeta, dtype=float)
    if isinstance(energy, QuadraticEnergy):
        return _ret(zeta / energy.alpha)
    return _ret(np.exp((zeta - energy.c1) / energy.c2 - 1.0))


def d2Vstar(energy: CanonicalEnergy, zeta):
    """Second derivative of the conjugate, 1 / d2V(dV*(zeta))."""
    zeta = np.asarray(zeta, dtype=float)
    if isinstance(energy, QuadraticEnergy):
        return _ret(np.full_like(zeta, 1.0 / energy.alpha))
    return _ret(np.exp((zeta - energy.c1) / energy.c2 - 1.0) / energy.c2)


def duality_identity_residual(energy: CanonicalEnergy, xi):
    """|V(xi) + V*(dV(xi)) - xi*dV(xi)|, zero for an exact Legendre pair."""
    z = dV(energy, xi)
    return _ret(np.abs(V(energy, xi) + Vstar(energy, z) - np.asarray(xi, dtype=float) * z))


def measure_eval(m: QuadraticMeasure, gamma):
    """Lambda(gamma) = a*|gamma|^2 + b for a vector or matrix gamma."""
    g = np.asarray(gamma, dtype=float)
    return m.a * float(np.sum(g * g)) + m.b
