"""Moving single-mode phases out of a rectangular sMZI mesh.

A common phase on both ports of an sMZI commutes with it and is the same as
advancing both internal phases. A phase ``phi`` on mode ``q`` between two
mesh columns can therefore be absorbed by a neighbouring sMZI, at the price
of ``-phi`` on that sMZI's partner mode at the same boundary. Alternating
between the left and right neighbours walks the residue monotonically
towards the top or bottom of the mesh, where the column with an uncovered
mode offers an edge phase slot.

Column boundaries are counted over the sMZI-bearing columns of a circuit:
boundary ``b`` lies after mesh column ``b``; ``0`` is the circuit input and
``n`` (the number of mesh columns) the output. Residues reaching 0 or ``n``
land in input or output phase columns.
"""

from __future__ import annotations

from dataclasses import dataclass

from .clements import (
    AmziDecomposition,
    ClementsDecomposition,
    clements_position,
    residual_boundaries,
    side_phase_mode,
)
from .errors import LayoutError, RelocationError
from .linalg import global_phase_distance, wrap_phase
from .mesh import (
    Layout,
    MeshCircuit,
    PhaseSetting,
    SmziElement,
    SmziSetting,
    clements_edge_layout,
    evaluate,
)


@dataclass(frozen=True)
class PendingPhase:
    """A phase ``phi`` required on ``mode`` at ``column_boundary``."""

    column_boundary: int
    mode: int
    phi: float


def _add_boundary_phase(c: MeshCircuit, at_input: bool, mode: int, phi: float) -> MeshCircuit:
    mesh = c.mesh_columns()
    cols = [list(col) for col in c.columns]
    if at_input:
        idx = mesh[0] - 1 if mesh and mesh[0] > 0 else None
        if idx is None:
            cols.insert(0, [])
            idx = 0
    else:
        idx = mesh[-1] + 1 if mesh and mesh[-1] < len(cols) - 1 else None
        if idx is None:
            cols.append([])
            idx = len(cols) - 1
    col = cols[idx]
    for i, el in enumerate(col):
        if mode in el.modes:
            if not isinstance(el, PhaseSetting):
                raise RelocationError(f"boundary slot on mode {mode} is not a phase shifter")
            col[i] = PhaseSetting(wrap_phase(el.phi + phi), mode)
            break
    else:
        col.append(PhaseSetting(wrap_phase(phi), mode))
        col.sort(key=lambda e: e.modes[0])
    return c.with_columns(cols)


def relocate_one(c: MeshCircuit, p: PendingPhase) -> MeshCircuit:
    """Fold the pending phase ``p`` into ``c`` without leaving an interior phase.

    The result evaluates exactly (no global phase) to ``c`` with ``p``
    inserted at its boundary.

    Raises:
        LayoutError: ``c`` is not an edge-slot rectangular mesh, or ``p`` is
            out of range.
        RelocationError: The walk meets neither an edge slot nor a fresh sMZI.
    """
    if c.layout is not Layout.CLEMENTS_EDGE:
        raise LayoutError(f"relocation needs a {Layout.CLEMENTS_EDGE.value} layout, got {c.layout.value}")
    mesh = c.mesh_columns()
    n = len(mesh)
    b, q, phi = p.column_boundary, p.mode, p.phi
    if not 0 <= b <= n or not 1 <= q <= c.m:
        raise LayoutError(f"pending phase at boundary {b}, mode {q} lies outside the mesh")
    if phi == 0:
        return c
    if b in (0, n):
        return _add_boundary_phase(c, b == 0, q, phi)

    sides = [mesh[b - 1], mesh[b]]
    allowed = sides
    for _ in range(2 * c.m + 1):
        slots = [(ci, c.element_at(ci, q)) for ci in allowed]
        for ci, el in slots:
            if isinstance(el, PhaseSetting):
                return c.with_element(ci, el, PhaseSetting(wrap_phase(el.phi + phi), q))
        for ci, el in slots:
            if isinstance(el, SmziElement):
                c = c.with_element(ci, el, SmziElement(el.top_mode, el.setting.shifted(phi)))
                q = el.top_mode + 1 if q == el.top_mode else el.top_mode
                phi = -phi
                allowed = [sides[1] if ci == sides[0] else sides[0]]
                break
        else:
            raise RelocationError(f"boundary {b}: mode {q} has no edge slot and no unused sMZI")
    raise RuntimeError(f"relocation from boundary {b} did not terminate")


def _edge_circuit(m: int, smzi_at: dict[tuple[int, int], SmziSetting]) -> MeshCircuit:
    """Edge-slot mesh with the given sMZIs, framed by all-zero I/O phase columns."""
    mesh = []
    for col_no, col in enumerate(clements_edge_layout(m).columns, start=1):
        mesh.append([SmziElement(el.top_mode, smzi_at[col_no, el.top_mode])
                     if isinstance(el, SmziElement) else el for el in col])
    io = [PhaseSetting(0.0, q) for q in range(1, m + 1)]
    return MeshCircuit(m, [io, *mesh, io], Layout.CLEMENTS_EDGE)


def _mesh_boundary(m: int, layout_boundary: int) -> int:
    """Translate a boundary of :func:`clements_edge_layout` into sMZI-column terms.

    Only differs for ``m = 2``, whose second layout column holds no sMZI.
    """
    cols = clements_edge_layout(m).mesh_columns()
    return sum(1 for ci in cols if ci < layout_boundary)


def relocate_all(d: ClementsDecomposition) -> MeshCircuit:
    """Edge-slot mesh equivalent to ``d`` with every residue moved outwards.

    The result evaluates to ``exp(i d.global_phase) U``.
    """
    d.validate()
    m = d.m
    smzi_at = {clements_position(j, k, m): s for (j, k), s in d.smzi.items()}
    c = _edge_circuit(m, smzi_at)
    for j, phi in sorted(d.phi_side.items()):
        c = _add_boundary_phase(c, j % 2 == 1, side_phase_mode(j, m), phi)
    for q, b in sorted(residual_boundaries(m).items()):
        c = relocate_one(c, PendingPhase(_mesh_boundary(m, b), q, d.zeta_mid[q]))
    return c


def absorb_amzi_externals(d: AmziDecomposition) -> MeshCircuit:
    """Turn an aMZI mesh into sMZIs plus edge phases.

    Each aMZI becomes ``sMZI(theta, 0)`` and its external phase, which sits
    on the top input, is relocated from the preceding boundary.
    """
    d.validate()
    m = d.m
    smzi_at, pending = {}, []
    for (j, k), (theta, phi) in d.amzi.items():
        col, top = clements_position(j, k, m)
        smzi_at[col, top] = SmziSetting(theta, 0.0)
        pending.append(PendingPhase(_mesh_boundary(m, col - 1), top, phi))
    c = _edge_circuit(m, smzi_at)
    for q, phi in d.output_phases.items():
        c = _add_boundary_phase(c, False, q, phi)
    for p in sorted(pending, key=lambda p: (p.column_boundary, p.mode)):
        c = relocate_one(c, p)
    return c


def interior_phases(c: MeshCircuit) -> list[tuple[int, PhaseSetting]]:
    """Phase shifters that are neither I/O phases nor edge slots.

    I/O phases live in phase-only columns before the first or after the last
    sMZI column; edge slots sit on modes their sMZI column leaves uncovered.
    Anything else (a phase column between sMZI columns) is interior.
    """
    mesh = c.mesh_columns()
    if not mesh:
        return []
    return [(ci, el) for ci, el in c.phase_elements() if mesh[0] < ci < mesh[-1] and ci not in mesh]


def layer_redundancy_check(c: MeshCircuit, column: int) -> float:
    """Global-phase distance after zeroing one shifter of a mesh column.

    Every phase in mesh column ``column`` (1-based over sMZI columns) is
    shifted by ``-phi0``, where ``phi0`` is the column's first edge phase or,
    if it has none, the ``theta1`` of its first sMZI. The whole column then
    changes by the scalar ``exp(-i phi0)``, so the result should vanish.
    """
    mesh = c.mesh_columns()
    if not 1 <= column <= len(mesh):
        raise LayoutError(f"mesh column {column} outside 1..{len(mesh)}")
    col = c.columns[mesh[column - 1]]
    phases = [el for el in col if isinstance(el, PhaseSetting)]
    mzis = [el for el in col if isinstance(el, SmziElement)]
    phi0 = phases[0].phi if phases else mzis[0].setting.theta1
    shifted = [
        PhaseSetting(wrap_phase(el.phi - phi0), el.mode) if isinstance(el, PhaseSetting)
        else SmziElement(el.top_mode, el.setting.shifted(-phi0)) if isinstance(el, SmziElement)
        else el
        for el in col
    ]
    cols = list(c.columns)
    cols[mesh[column - 1]] = tuple(shifted)
    return global_phase_distance(evaluate(c), evaluate(c.with_columns(cols)))
