"""Dense complex linear algebra shared by the decomposition and mesh modules.

Mode and row/column indices in the public helpers are 1-based, matching the
labelling used on mesh diagrams (top mode = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NotUnitaryError, ShapeError

#: Unitarity tolerance applied when a ``UnitaryMatrix`` is constructed.
DEFAULT_UNITARY_TOL = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite, 2-D complex128 array (copy-free when possible)."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("matrix contains NaN or Inf entries")
    return arr


def unitarity_deviation(a: np.ndarray) -> float:
    """Max-entry norm of ``a^dagger a - I``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


@dataclass(frozen=True)
class UnitaryMatrix:
    """Square complex matrix with a certified bound on ``U^dagger U - I``.

    Attributes:
        mat: The read-only matrix entries.
        certified_tol: Upper bound (max-entry norm) on ``U^dagger U - I``
            checked at construction.
    """

    mat: np.ndarray = field(repr=False)
    certified_tol: float = DEFAULT_UNITARY_TOL

    def __post_init__(self):
        arr = as_complex_matrix(self.mat)
        if arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"unitary matrices are square, got shape {arr.shape}")
        dev = unitarity_deviation(arr)
        if not dev <= self.certified_tol:
            raise NotUnitaryError(
                f"matrix deviates from unitarity by {dev:.3e} > {self.certified_tol:.1e}", dev
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    @property
    def m(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def as_unitary(u, tol: float = DEFAULT_UNITARY_TOL) -> UnitaryMatrix:
    """Coerce ``u`` to a :class:`UnitaryMatrix`, certifying it at ``tol``."""
    if isinstance(u, UnitaryMatrix) and u.certified_tol <= tol:
        return u
    return UnitaryMatrix(np.asarray(u), tol)


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with explicit shape validation."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _check_block(block) -> np.ndarray:
    block = np.asarray(block, dtype=np.complex128)
    if block.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 block, got shape {block.shape}")
    if not np.all(np.isfinite(block)):
        raise ShapeError("block contains NaN or Inf entries")
    return block


def apply_pair_right(v, block, y: int) -> np.ndarray:
    """Return ``v @ E`` where ``E`` embeds ``block`` at columns ``(y, y+1)``.

    Only columns ``y`` and ``y+1`` (1-based) change; the rest are copied as-is.
    """
    v = as_complex_matrix(v)
    block = _check_block(block)
    if not 1 <= y <= v.shape[1] - 1:
        raise IndexError(f"column pair ({y}, {y + 1}) outside 1..{v.shape[1]}")
    out = v.copy()
    out[:, y - 1:y + 1] = v[:, y - 1:y + 1] @ block
    return out


def apply_pair_left(v, block, x: int) -> np.ndarray:
    """Return ``E @ v`` where ``E`` embeds ``block`` at rows ``(x, x+1)``."""
    v = as_complex_matrix(v)
    block = _check_block(block)
    if not 1 <= x <= v.shape[0] - 1:
        raise IndexError(f"row pair ({x}, {x + 1}) outside 1..{v.shape[0]}")
    out = v.copy()
    out[x - 1:x + 1, :] = block @ v[x - 1:x + 1, :]
    return out


def embed_pair(block, top: int, m: int) -> np.ndarray:
    """Embed a 2x2 block at modes ``(top, top+1)`` of an ``m``-mode identity."""
    block = _check_block(block)
    if not 1 <= top <= m - 1:
        raise IndexError(f"mode pair ({top}, {top + 1}) outside 1..{m}")
    out = np.eye(m, dtype=np.complex128)
    out[top - 1:top + 1, top - 1:top + 1] = block
    return out


def haar_random_unitary(m: int, seed: int) -> UnitaryMatrix:
    """Sample an ``m x m`` Haar-random unitary, deterministically from ``seed``.

    QR of a complex Ginibre matrix, with the phases of R's diagonal folded
    back into Q so the distribution is exactly Haar.
    """
    if m < 1:
        raise ShapeError(f"dimension must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return UnitaryMatrix(q, 1e-12)


def arg0(z: complex) -> float:
    """Principal argument in (-pi, pi], with ``arg0(0) == 0``."""
    if z == 0:
        return 0.0
    a = math.atan2(z.imag, z.real)
    return math.pi if a == -math.pi else a


def wrap_phase(phi: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    if w == -math.pi:
        w = math.pi
    # remainder() can return -0.0; keep tables free of signed zeros.
    return w + 0.0


def _max_entry_gap(a: np.ndarray, b: np.ndarray, gamma) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    diff = a[None, :, :] - np.exp(1j * g)[:, None, None] * b[None, :, :]
    return np.max(np.abs(diff), axis=(1, 2))


def global_phase_distance(a, b) -> float:
    """Max-entry distance between ``a`` and ``b`` modulo a global phase.

    Computes ``min_gamma max_ij |a_ij - exp(i gamma) b_ij|``. The trace
    phase ``arg tr(b^dagger a)`` seeds the search and bounds the bracket that
    can hold a better angle; that bracket is grid-scanned, then refined.
    """
    a = np.asarray(a.mat if isinstance(a, UnitaryMatrix) else a, dtype=np.complex128)
    b = np.asarray(b.mat if isinstance(b, UnitaryMatrix) else b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    gamma0 = arg0(complex(np.vdot(b, a)))
    best_gamma = gamma0
    best = float(_max_entry_gap(a, b, gamma0)[0])
    if best == 0.0:
        return 0.0
    bmax = float(np.max(np.abs(b)))
    if bmax == 0.0:
        return best
    # Any gamma beating gamma0 has chord |e^{ig} - e^{ig0}| < 2 best / bmax.
    half_width = 2.0 * math.asin(min(1.0, best / bmax))
    grid = best_gamma + np.linspace(-half_width, half_width, 257)
    vals = _max_entry_gap(a, b, grid)
    i = int(np.argmin(vals))
    if vals[i] < best:
        best, best_gamma = float(vals[i]), float(grid[i])
    step = 2 * half_width / 256
    res = minimize_scalar(
        lambda g: float(_max_entry_gap(a, b, g)[0]),
        bounds=(best_gamma - step, best_gamma + step),
        method="bounded",
        options={"xatol": 1e-15, "maxiter": 200},
    )
    if res.fun < best:
        best, best_gamma = float(res.fun), float(res.x)
    return min(best, _refine_kink(a, b, best_gamma))


def _refine_kink(a: np.ndarray, b: np.ndarray, gamma: float, n_active: int = 24) -> float:
    """Polish an approximate minimizer of the max-entry gap exactly.

    Each squared gap ``|a - e^{ig} b|^2 = c - 2 Re(w e^{ig})`` is a sinusoid
    in ``g``, so the minimum of their maximum sits either at the minimum of
    one sinusoid or where two of them cross. Only entries near the maximum
    at ``gamma`` can be involved; their candidates are solved in closed form.
    """
    w = (np.conj(a) * b).ravel()
    c = (np.abs(a) ** 2 + np.abs(b) ** 2).ravel()
    sq = c - 2 * np.real(w * np.exp(1j * gamma))
    active = np.argsort(sq)[::-1][:n_active]
    wa, ca = w[active], c[active]
    cands = [gamma, *(-np.angle(wa))]
    i, j = np.triu_indices(len(active), 1)
    dw = wa[i] - wa[j]
    rhs = (ca[i] - ca[j]) / 2
    ok = np.abs(dw) > 0
    ratio = rhs[ok] / np.abs(dw[ok])
    feasible = np.abs(ratio) <= 1
    omega = np.angle(dw[ok])[feasible]
    root = np.arccos(ratio[feasible])
    cands += [*(-omega + root), *(-omega - root)]
    return float(np.min(_max_entry_gap(a, b, np.array(cands))))


def phase_distance_argmin(a, b) -> float:
    """Trace phase ``arg tr(b^dagger a)``: the Frobenius-optimal alignment angle."""
    a = np.asarray(a.mat if isinstance(a, UnitaryMatrix) else a)
    b = np.asarray(b.mat if isinstance(b, UnitaryMatrix) else b)
    return arg0(complex(np.vdot(b, a)))
