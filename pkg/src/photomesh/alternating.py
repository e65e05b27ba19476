"""Alternating layers of fixed beam-splitters and tunable phase screens.

A circuit of depth ``L`` has splitter layers ``B_1..B_L`` and phase-screen
positions ``0..L``: screen ``i`` sits after ``B_i`` and before ``B_{i+1}``
(screen 0 at the input, screen ``L`` at the output). The transfer matrix is
``Phi_L B_L ... Phi_1 B_1 Phi_0`` with absent screens taken as identity.

Splitter layer offsets: offset 0 couples modes (1,2), (3,4), ...; offset 1
couples (2,3), (4,5), .... The default layout alternates 0, 1, 0, 1, ....

FULL circuits populate every screen. COMPACT circuits drop the odd screens
strictly inside the circuit: a common phase on both ports of a splitter
passes through it whatever its splitting ratio, so any phase wanted in a
dropped screen can be rewritten as ``+phi`` / ``-phi`` on a zig-zag subset
of the two neighbouring screens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import LayoutError, ShapeError
from .linalg import UnitaryMatrix, as_unitary, wrap_phase

BALANCED = math.pi / 4


class Form(str, Enum):
    FULL = "full"
    COMPACT = "compact"
    CUSTOM = "custom"


def splitter_pairs(m: int, offset: int) -> list[int]:
    """Top modes (1-based) coupled by a splitter layer with the given offset."""
    return list(range(1 + offset, m, 2))


def full_slots(depth: int) -> tuple[int, ...]:
    return tuple(range(depth + 1))


def compact_slots(depth: int) -> tuple[int, ...]:
    slots = list(range(0, depth + 1, 2))
    if depth % 2:
        slots.append(depth)
    return tuple(slots)


def splitter_block(angle: float) -> np.ndarray:
    """Lossless coupler ``[[cos a, i sin a], [i sin a, cos a]]``; balanced at pi/4."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class AlternatingCircuit:
    """Layered circuit of splitters and phase screens.

    Attributes:
        m: Number of modes.
        splitter_angles: One array per splitter layer, one angle per coupled
            pair (``pi/4`` is balanced).
        phase_layers: One length-``m`` array per populated screen.
        form: FULL, COMPACT, or CUSTOM (screens listed in ``slots``).
        offsets: Pair offset of each splitter layer.
        slots: Screen positions of ``phase_layers``; derived unless CUSTOM.
    """

    m: int
    splitter_angles: tuple[np.ndarray, ...]
    phase_layers: tuple[np.ndarray, ...]
    form: Form = Form.FULL
    offsets: tuple[int, ...] = ()
    slots: tuple[int, ...] = field(default=())

    def __post_init__(self):
        form = Form(self.form)
        angles = tuple(np.asarray(a, dtype=float).copy() for a in self.splitter_angles)
        phases = tuple(np.asarray(p, dtype=float).copy() for p in self.phase_layers)
        depth = len(angles)
        offsets = tuple(self.offsets) if self.offsets else tuple(i % 2 for i in range(depth))
        if form is Form.FULL:
            slots = full_slots(depth)
        elif form is Form.COMPACT:
            slots = compact_slots(depth)
        else:
            slots = tuple(self.slots)
        if self.m < 1:
            raise LayoutError(f"mode count must be >= 1, got {self.m}")
        if len(offsets) != depth or any(o not in (0, 1) for o in offsets):
            raise LayoutError(f"need one offset (0 or 1) per splitter layer, got {offsets}")
        for i, (a, o) in enumerate(zip(angles, offsets)):
            n_pairs = len(splitter_pairs(self.m, o))
            if a.shape != (n_pairs,):
                raise LayoutError(f"splitter layer {i + 1}: expected {n_pairs} angles, got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise LayoutError(f"splitter layer {i + 1}: non-finite angle")
        if list(slots) != sorted(set(slots)) or any(not 0 <= s <= depth for s in slots):
            raise LayoutError(f"invalid screen positions {slots} for depth {depth}")
        if len(phases) != len(slots):
            raise LayoutError(f"{form.value} form of depth {depth} needs {len(slots)} phase layers, got {len(phases)}")
        for p in phases:
            if p.shape != (self.m,) or not np.all(np.isfinite(p)):
                raise LayoutError(f"phase layers must be finite length-{self.m} vectors")
        for arr in (*angles, *phases):
            arr.setflags(write=False)
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "splitter_angles", angles)
        object.__setattr__(self, "phase_layers", phases)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "slots", slots)

    @property
    def depth(self) -> int:
        return len(self.splitter_angles)

    @property
    def n_phases(self) -> int:
        return self.m * len(self.slots)

    def flat_phases(self) -> np.ndarray:
        if not self.phase_layers:
            return np.zeros(0)
        return np.concatenate(self.phase_layers)

    def with_phases(self, flat: np.ndarray) -> AlternatingCircuit:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_phases,):
            raise ShapeError(f"expected {self.n_phases} phases, got shape {flat.shape}")
        layers = tuple(flat[i * self.m:(i + 1) * self.m] for i in range(len(self.slots)))
        return replace(self, phase_layers=layers)

    def with_splitters(self, angles: Sequence[np.ndarray]) -> AlternatingCircuit:
        return replace(self, splitter_angles=tuple(angles))


def alternating_layout(m: int, depth: int, form: Form | str = Form.FULL,
                       splitter_angles: Sequence[np.ndarray] | None = None) -> AlternatingCircuit:
    """Zero-phase circuit with alternating offsets and (by default) balanced splitters."""
    if depth < 0:
        raise LayoutError(f"depth must be >= 0, got {depth}")
    form = Form(form)
    if form is Form.CUSTOM:
        raise LayoutError("custom circuits need explicit screen positions")
    offsets = tuple(i % 2 for i in range(depth))
    if splitter_angles is None:
        splitter_angles = [np.full(len(splitter_pairs(m, o)), BALANCED) for o in offsets]
    n_layers = len(full_slots(depth) if form is Form.FULL else compact_slots(depth))
    return AlternatingCircuit(m, tuple(splitter_angles), tuple(np.zeros(m) for _ in range(n_layers)), form, offsets)


def splitter_layer_matrix(m: int, offset: int, angles: np.ndarray) -> np.ndarray:
    out = np.eye(m, dtype=np.complex128)
    for top, a in zip(splitter_pairs(m, offset), angles):
        out[top - 1:top + 1, top - 1:top + 1] = splitter_block(a)
    return out


def _segments(c: AlternatingCircuit) -> list[np.ndarray]:
    """Fixed splitter products between consecutive screens (``len(slots) + 1`` of them)."""
    mats = [splitter_layer_matrix(c.m, o, a) for o, a in zip(c.offsets, c.splitter_angles)]
    bounds = [0, *c.slots, c.depth]
    segs = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        g = np.eye(c.m, dtype=np.complex128)
        for layer in range(lo, hi):
            g = mats[layer] @ g
        segs.append(g)
    # Screen at position s precedes B_{s+1}, so segment r covers B_{s_{r-1}+1} .. B_{s_r}.
    return segs


def evaluate_alternating(c: AlternatingCircuit) -> UnitaryMatrix:
    segs = _segments(c)
    u = segs[0]
    for phases, g in zip(c.phase_layers, segs[1:]):
        u = g @ (np.exp(1j * phases)[:, None] * u)
    return UnitaryMatrix(u, 1e-11)


def expand_compact(c: AlternatingCircuit) -> AlternatingCircuit:
    """FULL circuit with the compact screens in place and zeros in the dropped ones."""
    if c.form is not Form.COMPACT:
        raise LayoutError(f"expected a compact circuit, got {c.form.value}")
    layers = [np.zeros(c.m) for _ in full_slots(c.depth)]
    for s, p in zip(c.slots, c.phase_layers):
        layers[s] = np.array(p)
    return AlternatingCircuit(c.m, c.splitter_angles, tuple(layers), Form.FULL, c.offsets)


def _check_alternating(c: AlternatingCircuit) -> None:
    if any(a == b for a, b in zip(c.offsets, c.offsets[1:])):
        raise LayoutError("compactification needs alternating splitter offsets")


def push_out_phase(layers: list[np.ndarray], i: int, mode: int, phi: float,
                   m: int, offsets: Sequence[int]) -> None:
    """Rewrite ``phi`` on ``mode`` at screen ``i`` into screens ``i-1`` and ``i+1``.

    Zig-zags between splitter layers ``B_i`` (left) and ``B_{i+1}`` (right),
    adding ``+phi`` on the left and ``-phi`` on the right (alternating sign
    along the walk) until it reaches a mode one of them leaves uncoupled.
    Works in place on ``layers`` (one array per screen position).
    """
    partner = []
    for o in (offsets[i - 1], offsets[i]):
        p = {}
        for top in splitter_pairs(m, o):
            p[top], p[top + 1] = top + 1, top
        partner.append(p)
    q, allowed = mode, (0, 1)
    for _ in range(m + 1):
        free = [side for side in allowed if q not in partner[side]]
        if free:
            layers[i - 1 if free[0] == 0 else i + 1][q - 1] += phi
            return
        side = allowed[0]
        p = partner[side][q]
        target = layers[i - 1 if side == 0 else i + 1]
        target[q - 1] += phi
        target[p - 1] += phi
        q, phi, allowed = p, -phi, (1 - side,)
    raise RuntimeError("phase push-out did not terminate")


def compactify(c: AlternatingCircuit) -> AlternatingCircuit:
    """COMPACT circuit with the same transfer matrix as the FULL circuit ``c``."""
    if c.form is not Form.FULL:
        raise LayoutError(f"expected a full circuit, got {c.form.value}")
    _check_alternating(c)
    layers = [np.array(p) for p in c.phase_layers]
    keep = set(compact_slots(c.depth))
    for i in range(c.depth + 1):
        if i in keep:
            continue
        for q in range(1, c.m + 1):
            phi = layers[i][q - 1]
            if phi != 0.0:
                push_out_phase(layers, i, q, phi, c.m, c.offsets)
        layers[i][:] = 0.0
    kept = tuple(layers[s] for s in compact_slots(c.depth))
    return AlternatingCircuit(c.m, c.splitter_angles, kept, Form.COMPACT, c.offsets)


def infidelity(c: AlternatingCircuit | np.ndarray | UnitaryMatrix, target) -> float:
    """``1 - |tr(target^dagger C)|^2 / m^2``, clipped to [0, 1]."""
    u = evaluate_alternating(c).mat if isinstance(c, AlternatingCircuit) else np.asarray(c)
    t = np.asarray(target.mat if isinstance(target, UnitaryMatrix) else target)
    if u.shape != t.shape:
        raise ShapeError(f"dimension mismatch {u.shape} vs {t.shape}")
    m = t.shape[0]
    f = np.vdot(t, u)
    return float(min(1.0, max(0.0, 1.0 - abs(f) ** 2 / m ** 2)))


class _Objective:
    """Infidelity of a fixed-splitter circuit as a function of its flat phases."""

    def __init__(self, c: AlternatingCircuit, target: np.ndarray):
        self.m = c.m
        self.k = len(c.slots)
        self.segs = _segments(c)
        self.tdag = np.asarray(target).conj().T

    def __call__(self, flat: np.ndarray) -> tuple[float, np.ndarray]:
        m, k, segs = self.m, self.k, self.segs
        ph = np.exp(1j * flat.reshape(k, m))
        before = [segs[0]]
        for r in range(k):
            before.append(segs[r + 1] @ (ph[r][:, None] * before[r]))
        u = before[k]
        f = np.trace(self.tdag @ u)
        grad = np.empty((k, m))
        after = np.eye(m, dtype=np.complex128)
        for r in range(k - 1, -1, -1):
            after = after @ segs[r + 1]
            w = self.tdag @ after
            diag = np.einsum("qj,jq->q", before[r], w)
            df = 1j * ph[r] * diag
            grad[r] = -2.0 * np.real(np.conj(f) * df) / m ** 2
            after = after * ph[r][None, :]
        val = 1.0 - abs(f) ** 2 / m ** 2
        return float(val), grad.ravel()


def infidelity_gradient(c: AlternatingCircuit, target) -> np.ndarray:
    """Analytic gradient of :func:`infidelity` with respect to the flat phases."""
    t = np.asarray(target.mat if isinstance(target, UnitaryMatrix) else target)
    return _Objective(c, t)(c.flat_phases())[1]


@dataclass
class OptimizeReport:
    """Outcome of :func:`optimize_phases`.

    ``history`` holds, per restart, the best infidelity seen after each
    objective evaluation (non-increasing by construction).
    """

    circuit: AlternatingCircuit
    achieved_infidelity: float
    iterations: int
    per_restart: list[float]
    history: list[list[float]] = field(default_factory=list, repr=False)


def optimize_phases(target, layout: AlternatingCircuit, *, max_iters: int = 2000, tol: float = 1e-10,
                    restarts: int = 10, seed: int = 0, init: np.ndarray | None = None,
                    unitary_tol: float = 1e-10) -> OptimizeReport:
    """Fit the phases of ``layout`` to ``target`` (splitters stay fixed).

    Runs L-BFGS on the infidelity from up to ``restarts`` starting points:
    ``init`` (if given) first, then uniform draws in (-pi, pi] from a seed
    sequence spawned off ``seed``, so restart ``r`` always sees the same
    start. Every restart runs, so the report always has ``restarts``
    entries; a start already within ``tol`` skips the solver.
    """
    t = as_unitary(target, unitary_tol).mat
    if t.shape[0] != layout.m:
        raise ShapeError(f"target has dimension {t.shape[0]}, layout has {layout.m} modes")
    if layout.depth < 1:
        raise LayoutError("optimization needs at least one splitter layer")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    obj = _Objective(layout, t)
    children = np.random.SeedSequence(seed).spawn(restarts)
    best_x, best_val, best_iters = None, math.inf, 0
    per_restart, history = [], []
    for r in range(restarts):
        if r == 0 and init is not None:
            x0 = np.asarray(init, dtype=float).copy()
            if x0.shape != (layout.n_phases,):
                raise ShapeError(f"init needs {layout.n_phases} phases, got shape {x0.shape}")
        else:
            x0 = np.random.default_rng(children[r]).uniform(-math.pi, math.pi, layout.n_phases)
        trace: list[float] = []

        def fun(x):
            val, g = obj(x)
            trace.append(val if not trace else min(val, trace[-1]))
            return val, g

        val0, _ = fun(x0)
        if val0 <= tol:
            x, val, nit = x0, val0, 0
        else:
            res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                           options={"maxiter": max_iters, "ftol": 1e-16, "gtol": 1e-13})
            x, val, nit = res.x, float(res.fun), int(res.nit)
            if val0 < val:
                x, val, nit = x0, val0, 0
        val = max(0.0, val)
        per_restart.append(val)
        history.append(trace)
        if val < best_val:
            best_x, best_val, best_iters = x, val, nit
    circuit = layout.with_phases(np.array([wrap_phase(p) for p in best_x]))
    return OptimizeReport(circuit, best_val, best_iters, per_restart, history)


class Distribution(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class ImbalanceModel:
    """Random deviation of every splitter angle from ``pi/4``.

    ``sigma`` is the standard deviation for both distributions; the uniform
    option draws from ``[-sqrt(3) sigma, sqrt(3) sigma]``.
    """

    sigma: float
    seed: int = 0
    distribution: Distribution = Distribution.GAUSSIAN

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "distribution", Distribution(self.distribution))


def sample_imbalance(model: ImbalanceModel, layout: AlternatingCircuit) -> tuple[np.ndarray, ...]:
    """Splitter angles ``pi/4 + eps`` shaped like ``layout.splitter_angles``."""
    rng = np.random.default_rng(model.seed)
    sizes = [len(a) for a in layout.splitter_angles]
    n = sum(sizes)
    if model.distribution is Distribution.GAUSSIAN:
        eps = rng.standard_normal(n) * model.sigma
    else:
        half = math.sqrt(3) * model.sigma
        eps = rng.uniform(-half, half, n)
    flat = BALANCED + eps
    out, start = [], 0
    for s in sizes:
        out.append(flat[start:start + s])
        start += s
    return tuple(out)
