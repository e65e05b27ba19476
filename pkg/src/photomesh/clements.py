"""Rectangular (Clements) decompositions.

:func:`decompose_clements_smzi` compiles onto symmetric MZIs. Odd diagonals
act on the working matrix from the right (mixing columns) and even
diagonals from the left (mixing rows), so once the working matrix is
diagonal its residual phases end up between the two halves of the mesh.

:func:`decompose_clements_amzi` is the classic scheme with one internal and
one external phase per MZI. It serves as an independent reference route.

Mesh columns are numbered 1..m. Odd diagonal ``j`` places sMZI ``k`` in
column ``k`` at top mode ``j - k + 1``; even diagonal ``j`` places it in
column ``m - k + 1`` at top mode ``m - j + k - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elimination import (
    EliminationStep,
    match_columns,
    match_rows,
    residual_phases,
    zero_left,
    zero_right,
)
from .errors import DecompositionError, LayoutError, SchemaError, ShapeError
from .linalg import UnitaryMatrix, arg0, as_unitary, wrap_phase
from .mesh import (
    Layout,
    MeshCircuit,
    MeshElement,
    PhaseSetting,
    SmziElement,
    SmziSetting,
    evaluate,
    smzi_block,
)
from .reck import _expect_keys


@dataclass(frozen=True)
class ClementsDecomposition:
    """Phase tables for a rectangular sMZI mesh with mid-circuit residues.

    Attributes:
        m: Number of modes.
        smzi: Setting of sMZI ``(j, k)`` for ``j = 1..m-1``, ``k = 1..j``.
        phi_side: Phase of diagonal ``j``; on input mode ``j + 1`` for odd
            ``j``, on output mode ``m - j`` for even ``j``.
        zeta_mid: Residual phase on mode ``j`` (``j = 2..m``), located between
            the odd and even halves of the mesh.
        global_phase: ``alpha`` with the final working matrix ``exp(i alpha) I``.
    """

    m: int
    smzi: dict[tuple[int, int], SmziSetting]
    phi_side: dict[int, float]
    zeta_mid: dict[int, float]
    global_phase: float = 0.0
    trace: tuple[EliminationStep, ...] = field(default=(), compare=False, repr=False)
    max_offdiag: float = field(default=0.0, compare=False)

    def validate(self) -> None:
        m = self.m
        if m < 2:
            raise SchemaError(f"Clements tables need m >= 2, got {m}")
        _expect_keys("smzi", self.smzi, {(j, k) for j in range(1, m) for k in range(1, j + 1)})
        _expect_keys("phi_side", self.phi_side, set(range(1, m)))
        _expect_keys("zeta_mid", self.zeta_mid, set(range(2, m + 1)))


def clements_position(j: int, k: int, m: int) -> tuple[int, int]:
    """Mesh column (1..m) and top mode of element ``(j, k)``."""
    if j % 2:
        return k, j - k + 1
    return m - k + 1, m - j + k - 1


def side_phase_mode(j: int, m: int) -> int:
    return j + 1 if j % 2 else m - j


def decompose_clements_smzi(u, *, unitary_tol: float = 1e-10) -> ClementsDecomposition:
    """Compile ``u`` onto a rectangular mesh of symmetric MZIs.

    Raises:
        NotUnitaryError: ``u`` is not unitary to 1e-10.
        DecompositionError: An element could not be zeroed.
    """
    u = as_unitary(u, unitary_tol)
    m = u.m
    if m < 2:
        raise ShapeError(f"decomposition needs m >= 2, got {m}")
    v = np.conj(u.mat).copy()
    smzi, phi_side, trace = {}, {}, []
    for j in range(1, m):
        if j % 2:
            x, y = m, j
            phi_side[j] = match_columns(v, x, y)
            for k in range(1, j + 1):
                smzi[j, k], step = zero_right(v, j, k, x, y, sigma_next=k < j)
                trace.append(step)
                x, y = x - 1, y - 1
        else:
            x, y = m - j + 1, 1
            phi_side[j] = match_rows(v, x, y)
            for k in range(1, j + 1):
                smzi[j, k], step = zero_left(v, j, k, x, y, sigma_next=k < j)
                trace.append(step)
                x, y = x + 1, y + 1
    zeta_mid, alpha = residual_phases(v)
    off = v - np.diag(np.diagonal(v))
    return ClementsDecomposition(m, smzi, phi_side, zeta_mid, alpha, tuple(trace), float(np.max(np.abs(off))))


def residual_boundaries(m: int) -> dict[int, int]:
    """Column boundary (0..m) hosting the residual phase of each mode 2..m.

    A residue on mode ``q`` must follow every odd-diagonal sMZI touching
    ``q`` and precede every even-diagonal one. Modes no even diagonal
    touches go straight to the output boundary ``m``; modes no odd diagonal
    touches sit at the input boundary ``0``.
    """
    last_odd = {q: 0 for q in range(1, m + 1)}
    first_even = {q: m + 1 for q in range(1, m + 1)}
    for j in range(1, m):
        for k in range(1, j + 1):
            col, top = clements_position(j, k, m)
            for q in (top, top + 1):
                if j % 2:
                    last_odd[q] = max(last_odd[q], col)
                else:
                    first_even[q] = min(first_even[q], col)
    out = {}
    for q in range(2, m + 1):
        if first_even[q] == m + 1:
            out[q] = m
        elif last_odd[q] < first_even[q]:
            out[q] = last_odd[q]
        else:
            raise LayoutError(f"no valid boundary for the residue on mode {q}")
    return out


def _sorted(col):
    return sorted(col, key=lambda e: e.modes[0])


def clements_mesh_columns(m: int, smzi: dict[tuple[int, int], SmziSetting]) -> list[list[MeshElement]]:
    cols: list[list[MeshElement]] = [[] for _ in range(m)]
    for (j, k), s in smzi.items():
        col, top = clements_position(j, k, m)
        cols[col - 1].append(SmziElement(top, s))
    return [_sorted(c) for c in cols]


def clements_circuit(d: ClementsDecomposition) -> MeshCircuit:
    """Mesh realizing ``exp(i alpha) U`` with the residues left mid-circuit.

    Layout: an input phase column, then the ``m`` sMZI columns, each followed
    by a phase column when residues sit at that boundary, then an output
    phase column.
    """
    d.validate()
    m = d.m
    mesh = clements_mesh_columns(m, d.smzi)
    at_boundary: dict[int, dict[int, float]] = {}
    for q, b in residual_boundaries(m).items():
        at_boundary.setdefault(b, {})[q] = d.zeta_mid[q]
    inputs = {side_phase_mode(j, m): d.phi_side[j] for j in range(1, m, 2)}
    outputs = {side_phase_mode(j, m): d.phi_side[j] for j in range(2, m, 2)}
    for q, z in at_boundary.pop(m, {}).items():
        outputs[q] = outputs.get(q, 0.0) + z
    for q, z in at_boundary.pop(0, {}).items():
        inputs[q] = inputs.get(q, 0.0) + z
    cols = [[PhaseSetting(phi, q) for q, phi in sorted(inputs.items())]]
    for b in range(1, m + 1):
        cols.append(mesh[b - 1])
        if b < m and b in at_boundary:
            cols.append([PhaseSetting(z, q) for q, z in sorted(at_boundary[b].items())])
    cols.append([PhaseSetting(phi, q) for q, phi in sorted(outputs.items())])
    return MeshCircuit(m, cols, Layout.CLEMENTS)


def reconstruct_clements(d: ClementsDecomposition) -> UnitaryMatrix:
    """Unitary realized by the Clements tables, global phase removed."""
    u = evaluate(clements_circuit(d)).mat * np.exp(-1j * d.global_phase)
    return UnitaryMatrix(u, 1e-11)


# ---------------------------------------------------------------------------
# Reference scheme: asymmetric MZIs (one internal, one external phase).


@dataclass(frozen=True)
class AmziDecomposition:
    """Phase tables of a rectangular aMZI mesh.

    Attributes:
        m: Number of modes.
        amzi: ``(theta, phi)`` of the aMZI at ``(j, k)``: internal phase
            ``theta`` in the top arm, external phase ``phi`` on the top input.
        output_phases: Output phase on each mode 1..m.
    """

    m: int
    amzi: dict[tuple[int, int], tuple[float, float]]
    output_phases: dict[int, float]

    def validate(self) -> None:
        m = self.m
        if m < 2:
            raise SchemaError(f"aMZI tables need m >= 2, got {m}")
        _expect_keys("amzi", self.amzi, {(j, k) for j in range(1, m) for k in range(1, j + 1)})
        _expect_keys("output_phases", self.output_phases, set(range(1, m + 1)))


def amzi_block(theta: float, phi: float) -> np.ndarray:
    """aMZI transfer matrix: external ``phi`` on the top input, then ``theta``."""
    return smzi_block(SmziSetting(theta, 0.0)) @ np.diag([np.exp(1j * phi), 1.0])


def decompose_clements_amzi(u, *, unitary_tol: float = 1e-10) -> AmziDecomposition:
    """Classic rectangular decomposition into aMZIs and output phases."""
    u = as_unitary(u, unitary_tol)
    m = u.m
    if m < 2:
        raise ShapeError(f"decomposition needs m >= 2, got {m}")
    w = np.array(u.mat, dtype=np.complex128)
    right, left = {}, []
    for j in range(1, m):
        for k in range(1, j + 1):
            if j % 2:
                x, y = m - k + 1, j - k + 1
                a, b = w[x - 1, y - 1], w[x - 1, y]
                theta = 2 * math.atan2(abs(b), abs(a))
                phi = wrap_phase(arg0(a) - arg0(b) - math.pi)
                blk = amzi_block(theta, phi)
                w[:, y - 1:y + 1] = w[:, y - 1:y + 1] @ blk.conj().T
                right[j, k] = (wrap_phase(theta), phi)
            else:
                x, y = m - j + k, k
                a, b = w[x - 2, y - 1], w[x - 1, y - 1]
                theta = 2 * math.atan2(abs(a), abs(b))
                phi = wrap_phase(arg0(b) - arg0(a))
                w[x - 2:x, :] = amzi_block(theta, phi) @ w[x - 2:x, :]
                left.append(((j, k), theta, phi))
            if abs(w[x - 1, y - 1]) > 1e-8:
                raise DecompositionError("aMZI elimination failed", j, k, x, y, float(abs(w[x - 1, y - 1])))
    diag = np.diagonal(w).copy()
    amzi = dict(right)
    # U = L1^+ ... Ln^+ D R...; sweep D leftwards through each inverse aMZI.
    for (j, k), theta, phi in reversed(left):
        _, top = clements_position(j, k, m)
        d1, d2 = diag[top - 1], diag[top]
        amzi[j, k] = (wrap_phase(theta), wrap_phase(arg0(d1 / d2)))
        diag[top - 1] = d2 * np.exp(-1j * (theta + phi))
        diag[top] = d2 * np.exp(-1j * theta)
    out = {q: wrap_phase(arg0(diag[q - 1])) for q in range(1, m + 1)}
    return AmziDecomposition(m, amzi, out)


def amzi_circuit(d: AmziDecomposition) -> MeshCircuit:
    """Mesh of ``sMZI(theta, 0)`` cells, each preceded by its external phase."""
    d.validate()
    m = d.m
    ext: list[list[MeshElement]] = [[] for _ in range(m)]
    cells: list[list[MeshElement]] = [[] for _ in range(m)]
    for (j, k), (theta, phi) in d.amzi.items():
        col, top = clements_position(j, k, m)
        ext[col - 1].append(PhaseSetting(phi, top))
        cells[col - 1].append(SmziElement(top, SmziSetting(theta, 0.0)))
    cols = []
    for c in range(m):
        cols += [_sorted(ext[c]), _sorted(cells[c])]
    cols.append([PhaseSetting(d.output_phases[q], q) for q in range(1, m + 1)])
    return MeshCircuit(m, cols, Layout.CLEMENTS)


def reconstruct_amzi(d: AmziDecomposition) -> UnitaryMatrix:
    return evaluate(amzi_circuit(d))
