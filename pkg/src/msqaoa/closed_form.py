"""Infinite-size closed forms for the depth-1 QAOA energy per spin.

Two algebraically identical forms are provided: the explicit double sum over
degrees q and odd powers a (``energy_sigma_form``), and the compact complex
form 2*gamma*Im[xi(cos(2b) + i sin(2b) exp(-2 g^2 xi'(1)))]
(``energy_mixture_form``).  Their agreement to ~1e-12 relative is one of the
package's standing cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DegreeTooLargeError, DegreeZeroError, NonPositiveMError
from .model import MixtureFunction, MixtureSpec

__all__ = [
    "Angles",
    "MAX_DEGREE",
    "energy_sigma_form",
    "energy_mixture_form",
    "energy_pure_d",
    "energy_higher_moment_limit",
    "StationarityResiduals",
    "d3_stationarity_residuals",
]

# Factorials are taken exactly up to this degree; beyond it the per-degree
# weights sigma_q^2/(q-1)! are no longer desk-scale meaningful.
MAX_DEGREE = 20


@dataclass(frozen=True)
class Angles:
    """A (beta, gamma) parameter pair, in radians.

    The energy is pi-periodic in beta (all dependence is through sin(2b),
    cos(2b)); the canonical representative has beta in (-pi/2, pi/2].
    gamma is unrestricted.
    """

    beta: float
    gamma: float

    def canonical(self) -> "Angles":
        beta = self.beta - math.pi * math.floor(self.beta / math.pi + 0.5)
        if beta == -math.pi / 2:
            beta = math.pi / 2
        return Angles(beta, self.gamma)


def _check_degree(d: int) -> None:
    if d < 1:
        raise DegreeZeroError(f"degree must be >= 1, got {d}")
    if d > MAX_DEGREE:
        raise DegreeTooLargeError(f"degree {d} exceeds the supported cap {MAX_DEGREE}")


def damping_rate(spec: MixtureSpec) -> float:
    """sum_q sigma_q^2/(q-1)!, the decay rate in exp(-2 g^2 a * rate).

    Equals xi'(1) of the equivalent mixture function.
    """
    return sum(
        s * s / math.factorial(q) for q, s in enumerate(spec.sigmas)
    )  # (q-1)! with q starting at 1 <=> factorial(index)


def energy_sigma_form(spec: MixtureSpec, angles: Angles) -> float:
    """Infinite-n disorder-averaged energy per spin, explicit degree sum."""
    _check_degree(spec.d)
    s2b = math.sin(2 * angles.beta)
    c2b = math.cos(2 * angles.beta)
    g = angles.gamma
    rate = damping_rate(spec)
    total = 0.0
    for q in range(1, spec.d + 1):
        sig2 = spec.sigmas[q - 1] ** 2
        if sig2 == 0:
            continue
        inner = 0.0
        for a in range(1, q + 1, 2):
            sign = -1.0 if (a - 1) // 2 % 2 else 1.0
            coef = sign / (math.factorial(a) * math.factorial(q - a))
            inner += coef * math.exp(-2 * g * g * a * rate) * s2b**a * c2b ** (q - a)
        total += sig2 * inner
    return 2 * g * total


def energy_mixture_form(xi: MixtureFunction, angles: Angles) -> float:
    """Infinite-n energy per spin via the complex mixture-function form."""
    _check_degree(xi.d)
    damp = math.exp(-2 * angles.gamma**2 * xi.xi_prime_at_one())
    w = complex(math.cos(2 * angles.beta), math.sin(2 * angles.beta) * damp)
    return 2 * angles.gamma * xi.xi(w).imag


def energy_pure_d(d: int, angles: Angles) -> float:
    """Infinite-n energy per spin for the pure d-spin model sigma_d = sqrt(d!/2).

    This is the specialization of the general formula with c_d^2 = 1/2, i.e.
    gamma * Im[(cos(2b) + i sin(2b) exp(-d g^2))^d].
    """
    _check_degree(d)
    damp = math.exp(-d * angles.gamma**2)
    w = complex(math.cos(2 * angles.beta), math.sin(2 * angles.beta) * damp)
    return angles.gamma * (w**d).imag


def energy_higher_moment_limit(spec: MixtureSpec, angles: Angles, m: int) -> float:
    """Infinite-n limit of the m-th disorder-averaged moment of H/n.

    All higher moments factorize into powers of the first moment, so this is
    simply energy_sigma_form(...) ** m.
    """
    if m < 1:
        raise NonPositiveMError(f"moment order must be >= 1, got m={m}")
    return energy_sigma_form(spec, angles) ** m


_D3_SPEC = MixtureSpec(3, (0.0, 0.0, math.sqrt(3.0)))


@dataclass(frozen=True)
class StationarityResiduals:
    """Residuals of the three optimality relations for the sigma_3 = sqrt(3) model.

    A residual is None when its defining expression leaves the real domain
    (reported per-residual rather than raised).
    """

    r1: Optional[float]
    r2: Optional[float]
    r3: Optional[float]


def d3_stationarity_residuals(angles: Angles) -> StationarityResiduals:
    """Residuals of the coupled optimality conditions at (beta, gamma).

    r1 relates beta to gamma through an arccos; the optima come in the sign
    pair (+b*, -g*) / (-b*, +g*), so the arccos branch is selected by
    sign(gamma) to make r1 vanish on both.  r2 is the scalar fixed-point
    relation in gamma alone.  r3 compares |energy| against the radical
    sqrt(4 g^2 - 2/3) (magnitude convention: the radical is positive while
    the optimal energy is negative).
    """
    b, g = angles.beta, angles.gamma
    g2 = g * g

    r1: Optional[float] = None
    if g2 > 0:
        arg = 1 - 1 / (9 * g2)
        if -1 <= arg <= 1:
            r1 = b + math.copysign(0.25 * math.acos(arg), g)

    r2 = math.exp(-6 * g2) - 18 * g2 + 3

    r3: Optional[float] = None
    rad = 4 * g2 - 2 / 3
    if rad >= 0:
        r3 = abs(energy_sigma_form(_D3_SPEC, angles)) - math.sqrt(rad)

    return StationarityResiduals(r1, r2, r3)
