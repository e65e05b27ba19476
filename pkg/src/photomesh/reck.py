"""Triangular (Reck) decomposition onto symmetric MZIs.

The target ``U`` is compiled by eliminating the sub-diagonal of the working
matrix ``V = conj(U)`` one diagonal of sMZIs at a time. An input phase fixes
the argument mismatch for the first sMZI of each diagonal, and each sMZI's
common phase sigma prepares the next. Once ``V`` is diagonal, output phases
reduce it to ``exp(i alpha) I``. Because every element is a symmetric
unitary, ``conj`` of each element is its inverse, so the same element
sequence read in physical order realizes ``exp(-i alpha) U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elimination import EliminationStep, match_columns, residual_phases, zero_right
from .errors import SchemaError, ShapeError
from .linalg import UnitaryMatrix, as_unitary
from .mesh import MeshCircuit, PhaseSetting, SmziElement, SmziSetting, evaluate, reck_layout, reck_position


@dataclass(frozen=True)
class ReckDecomposition:
    """Phase tables for a Reck mesh.

    Attributes:
        m: Number of modes.
        smzi: Setting of sMZI ``(j, k)`` for ``j = 1..m-1``, ``k = 1..j``.
        phi_in: Input phase of diagonal ``j`` (on mode ``j + 1``).
        zeta_out: Output phase on mode ``j`` for ``j = 2..m``.
        global_phase: ``alpha`` with the final working matrix ``exp(i alpha) I``.
        trace: Per-step elimination diagnostics.
        max_offdiag: Largest off-diagonal magnitude of the final working matrix.
    """

    m: int
    smzi: dict[tuple[int, int], SmziSetting]
    phi_in: dict[int, float]
    zeta_out: dict[int, float]
    global_phase: float = 0.0
    trace: tuple[EliminationStep, ...] = field(default=(), compare=False, repr=False)
    max_offdiag: float = field(default=0.0, compare=False)

    def validate(self) -> None:
        m = self.m
        if m < 2:
            raise SchemaError(f"Reck tables need m >= 2, got {m}")
        _expect_keys("smzi", self.smzi, {(j, k) for j in range(1, m) for k in range(1, j + 1)})
        _expect_keys("phi_in", self.phi_in, set(range(1, m)))
        _expect_keys("zeta_out", self.zeta_out, set(range(2, m + 1)))


def _expect_keys(name: str, table: dict, expected: set) -> None:
    got = set(table)
    if got != expected:
        missing, extra = sorted(expected - got), sorted(got - expected)
        raise SchemaError(f"{name}: missing {missing}, unexpected {extra}")


def decompose_reck(u, *, unitary_tol: float = 1e-10) -> ReckDecomposition:
    """Compile ``u`` onto a Reck mesh of symmetric MZIs.

    Raises:
        NotUnitaryError: ``u`` is not unitary to 1e-10.
        DecompositionError: An element could not be zeroed.
    """
    u = as_unitary(u, unitary_tol)
    m = u.m
    if m < 2:
        raise ShapeError(f"decomposition needs m >= 2, got {m}")
    v = np.conj(u.mat).copy()
    smzi, phi_in, trace = {}, {}, []
    for j in range(1, m):
        x, y = m, j
        phi_in[j] = match_columns(v, x, y)
        for k in range(1, j + 1):
            smzi[j, k], step = zero_right(v, j, k, x, y, sigma_next=k < j)
            trace.append(step)
            x, y = x - 1, y - 1
    zeta_out, alpha = residual_phases(v)
    off = v - np.diag(np.diagonal(v))
    return ReckDecomposition(m, smzi, phi_in, zeta_out, alpha, tuple(trace), float(np.max(np.abs(off))))


def reck_circuit(d: ReckDecomposition) -> MeshCircuit:
    """Populate :func:`reck_layout` with the phases of ``d``."""
    d.validate()
    base = reck_layout(d.m)
    cols = [list(c) for c in base.columns]
    cols[0] = [PhaseSetting(d.phi_in[q - 1], q) for q in range(2, d.m + 1)]
    cols[-1] = [PhaseSetting(d.zeta_out[q], q) for q in range(2, d.m + 1)]
    for col in cols[1:-1]:
        col.clear()
    for (j, k), s in d.smzi.items():
        col, top = reck_position(j, k)
        cols[col].append(SmziElement(top, s))
    return base.with_columns(sorted(c, key=lambda e: e.modes[0]) for c in cols)


def reconstruct_reck(d: ReckDecomposition) -> UnitaryMatrix:
    """Unitary realized by the Reck tables, global phase removed."""
    u = evaluate(reck_circuit(d)).mat * np.exp(-1j * d.global_phase)
    return UnitaryMatrix(u, 1e-11)


def free_parameter_count(m: int) -> int:
    """Independent phases of a Reck mesh with the redundant sigma dropped.

    ``(m-1)^2`` internal plus ``2(m-1)`` external shifters, which equals the
    real dimension of U(m) modulo global phase.
    """
    if m < 2:
        raise ShapeError(f"need m >= 2, got {m}")
    return (m - 1) ** 2 + 2 * (m - 1)
