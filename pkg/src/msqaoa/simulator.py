"""Exact depth-1 QAOA statevector simulation for a concrete problem instance.

Basis convention: amplitude index bit b (little-endian) carries spin
z_{b+1} = 1 - 2*bit, so bit value 0 means spin +1.  The cost operator is
diagonal, tabulated once per instance; the mixer exp(-i beta sum_k X_k) is
applied as n passes of stride-paired 2x2 rotations.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .closed_form import Angles
from .errors import TooLargeError, ValidationError
from .model import ProblemInstance

__all__ = [
    "SIM_MAX_N",
    "build_phase_table",
    "qaoa_state",
    "expectation",
    "landscape_instance",
]

SIM_MAX_N = 24  # 2^24 complex doubles ~ 256 MB


def _check_size(n: int) -> None:
    if n > SIM_MAX_N:
        raise TooLargeError(f"statevector needs 2^{n} amplitudes; cap is n={SIM_MAX_N}")


def build_phase_table(instance: ProblemInstance) -> np.ndarray:
    """values[idx] = H(z) for the basis string encoded by idx (2^n entries)."""
    n = instance.n
    _check_size(n)
    size = 1 << n
    idx = np.arange(size, dtype=np.int64)
    values = np.zeros(size)
    scale = [n ** ((1 - q) / 2) for q in range(instance.spec.d + 1)]
    for mask in sorted(instance.terms):
        j = instance.terms[mask]
        if j == 0.0:
            continue
        bits = [b for b in range(n) if mask >> b & 1]
        parity = idx >> bits[0]
        for b in bits[1:]:
            parity = parity ^ (idx >> b)
        signs = 1.0 - 2.0 * (parity & 1)
        values += (scale[len(bits)] * j) * signs
    return values


def _apply_mixer(amp: np.ndarray, n: int, beta: float) -> np.ndarray:
    c = math.cos(beta)
    s = -1j * math.sin(beta)
    for b in range(n):
        view = amp.reshape(-1, 2, 1 << b)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return amp


def _state_from_table(table: np.ndarray, n: int, angles: Angles) -> np.ndarray:
    amp = np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)
    amp *= np.exp(-1j * angles.gamma * table)
    return _apply_mixer(amp, n, angles.beta)


def qaoa_state(instance: ProblemInstance, angles: Angles) -> np.ndarray:
    """Amplitudes of exp(-i beta B) exp(-i gamma H) applied to the uniform state."""
    return _state_from_table(build_phase_table(instance), instance.n, angles)


def expectation(
    instance: ProblemInstance,
    angles: Angles,
    table: Optional[np.ndarray] = None,
) -> tuple[float, float]:
    """(<H>, <H^2>) in the depth-1 QAOA state of this instance.

    Both expectations come from the same diagonal table: <H^2> weights the
    squared table entries, no operator squaring.
    """
    if table is None:
        table = build_phase_table(instance)
    amp = _state_from_table(table, instance.n, angles)
    prob = np.abs(amp) ** 2
    h = float(prob @ table)
    h2 = float(prob @ (table * table))
    return h, h2


def landscape_instance(
    instance: ProblemInstance,
    beta_grid: Sequence[float],
    gamma_grid: Sequence[float],
) -> np.ndarray:
    """Per-instance <H>/n over the grid; rows follow beta, columns gamma."""
    if len(beta_grid) < 1 or len(gamma_grid) < 1:
        raise ValidationError("landscape grids need at least one point per axis")
    n = instance.n
    table = build_phase_table(instance)
    base = np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)
    out = np.empty((len(beta_grid), len(gamma_grid)))
    for gi, gamma in enumerate(gamma_grid):
        phased = base * np.exp(-1j * gamma * table)
        for bi, beta in enumerate(beta_grid):
            amp = _apply_mixer(phased.copy(), n, beta)
            prob = np.abs(amp) ** 2
            out[bi, gi] = float(prob @ table) / n
    return out
