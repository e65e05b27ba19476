"""Single elimination steps on the auxiliary matrix.

Each step applies one sMZI (or one phase) to the working matrix in place and
reports how well the targeted element was zeroed. Indices are 1-based.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DecompositionError
from .linalg import arg0, wrap_phase
from .mesh import SmziSetting

#: Elements below this magnitude count as exactly zero.
ZERO_TOL = 1e-12
#: A step whose target stays above this magnitude is a numerical failure.
FAIL_TOL = 1e-8


class EliminationStep(NamedTuple):
    """Diagnostics for one zeroing step.

    ``phase_gap`` is the argument mismatch of the element pair right before
    ``delta`` was chosen, or ``None`` when the target was already negligible.
    """

    j: int
    k: int
    x: int
    y: int
    side: str
    phase_gap: float | None
    residual: float


def _gap(a: complex, b: complex) -> float | None:
    if abs(a) < ZERO_TOL:
        return None
    return abs(wrap_phase(arg0(a) - arg0(b)))


def zero_right(v: np.ndarray, j: int, k: int, x: int, y: int, sigma_next: bool) -> tuple[SmziSetting, EliminationStep]:
    """Right-multiply columns ``(y, y+1)`` by an sMZI that zeroes ``v[x, y]``.

    With matched phases ``|a| sin(delta) + |b| cos(delta) = 0`` for
    ``a = v[x, y]``, ``b = v[x, y+1]``. When ``sigma_next`` is set, sigma
    then aligns ``arg v[x-1, y]`` with ``arg v[x-1, y-1]`` for the next step.
    """
    a, b = v[x - 1, y - 1], v[x - 1, y]
    gap = _gap(a, b)
    delta = _branch(math.atan2(-abs(b), abs(a)), abs(a), abs(b))
    sd, cd = math.sin(delta), math.cos(delta)
    ca, cb = v[:, y - 1].copy(), v[:, y].copy()
    v[:, y - 1] = ca * sd + cb * cd
    v[:, y] = ca * cd - cb * sd
    sigma = 0.0
    if sigma_next:
        sigma = wrap_phase(arg0(v[x - 2, y - 2]) - arg0(v[x - 2, y - 1]))
        v[:, y - 1:y + 1] *= np.exp(1j * sigma)
    residual = float(abs(v[x - 1, y - 1]))
    if residual > FAIL_TOL:
        raise DecompositionError("right elimination failed", j, k, x, y, residual)
    return SmziSetting.from_sigma_delta(sigma, delta), EliminationStep(j, k, x, y, "right", gap, residual)


def zero_left(v: np.ndarray, j: int, k: int, x: int, y: int, sigma_next: bool) -> tuple[SmziSetting, EliminationStep]:
    """Left-multiply rows ``(x-1, x)`` by an sMZI that zeroes ``v[x, y]``.

    With matched phases ``|a| cos(delta) - |b| sin(delta) = 0`` for
    ``a = v[x-1, y]``, ``b = v[x, y]``. When ``sigma_next`` is set, sigma
    aligns ``arg v[x, y+1]`` with ``arg v[x+1, y+1]`` for the next step.
    """
    a, b = v[x - 2, y - 1], v[x - 1, y - 1]
    gap = _gap(b, a)
    delta = _branch(math.atan2(abs(a), abs(b)), abs(b), abs(a))
    sd, cd = math.sin(delta), math.cos(delta)
    ra, rb = v[x - 2, :].copy(), v[x - 1, :].copy()
    v[x - 2, :] = ra * sd + rb * cd
    v[x - 1, :] = ra * cd - rb * sd
    sigma = 0.0
    if sigma_next:
        sigma = wrap_phase(arg0(v[x, y]) - arg0(v[x - 1, y]))
        v[x - 2:x, :] *= np.exp(1j * sigma)
    residual = float(abs(v[x - 1, y - 1]))
    if residual > FAIL_TOL:
        raise DecompositionError("left elimination failed", j, k, x, y, residual)
    return SmziSetting.from_sigma_delta(sigma, delta), EliminationStep(j, k, x, y, "left", gap, residual)


def _branch(delta: float, target: float, other: float) -> float:
    """Canonical delta in (-pi/2, pi/2]; zero when both elements vanish."""
    if target == 0.0 and other == 0.0:
        return 0.0
    if delta <= -math.pi / 2:
        return math.pi / 2
    return delta + 0.0


def match_columns(v: np.ndarray, x: int, y: int) -> float:
    """Phase on column ``y+1`` giving ``v[x, y+1]`` the argument of ``v[x, y]``."""
    phi = wrap_phase(arg0(v[x - 1, y - 1]) - arg0(v[x - 1, y]))
    v[:, y] *= np.exp(1j * phi)
    return phi


def match_rows(v: np.ndarray, x: int, y: int) -> float:
    """Phase on row ``x-1`` giving ``v[x-1, y]`` the argument of ``v[x, y]``."""
    phi = wrap_phase(arg0(v[x - 1, y - 1]) - arg0(v[x - 2, y - 1]))
    v[x - 2, :] *= np.exp(1j * phi)
    return phi


def residual_phases(v: np.ndarray) -> tuple[dict[int, float], float]:
    """Final diagonal phases ``zeta_j`` (j = 2..m) and the global phase.

    Applies ``zeta_j = arg v[1,1] - arg v[j,j]`` to column ``j`` in place.
    """
    m = v.shape[0]
    zeta = {}
    for j in range(2, m + 1):
        z = wrap_phase(arg0(v[0, 0]) - arg0(v[j - 1, j - 1]))
        v[:, j - 1] *= np.exp(1j * z)
        zeta[j] = z
    return zeta, arg0(v[0, 0])
