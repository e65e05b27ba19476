"""Circuit elements and mesh layouts built from symmetric MZIs.

A :class:`MeshCircuit` is an ordered list of columns. The leftmost column
acts first on the input light, so it is the rightmost factor of the operator
product. Modes are numbered from 1 (top) to ``m`` (bottom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Union

import numpy as np

from .errors import LayoutError, ShapeError
from .linalg import UnitaryMatrix, wrap_phase


class Layout(str, Enum):
    RECK = "reck"
    CLEMENTS = "clements"
    CLEMENTS_EDGE = "clements_edge"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SmziSetting:
    """Phase pair of a symmetric MZI.

    ``theta1`` sits in the arm feeding the top output, ``theta2`` in the
    other. The common half-sum ``sigma`` sets the output phase and the
    half-difference ``delta`` the splitting ratio.
    """

    theta1: float = 0.0
    theta2: float = 0.0

    @property
    def sigma(self) -> float:
        return (self.theta1 + self.theta2) / 2

    @property
    def delta(self) -> float:
        return (self.theta1 - self.theta2) / 2

    @classmethod
    def from_sigma_delta(cls, sigma: float, delta: float) -> SmziSetting:
        return cls(wrap_phase(sigma + delta), wrap_phase(sigma - delta))

    def canonical(self) -> SmziSetting:
        return SmziSetting(wrap_phase(self.theta1), wrap_phase(self.theta2))

    def shifted(self, phi: float) -> SmziSetting:
        """Both internal phases advanced by ``phi``: a common phase on the two ports."""
        return SmziSetting(wrap_phase(self.theta1 + phi), wrap_phase(self.theta2 + phi))


@dataclass(frozen=True)
class PhaseSetting:
    """Single-mode phase shifter ``exp(i phi)`` on ``mode``."""

    phi: float
    mode: int

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class SmziElement:
    top_mode: int
    setting: SmziSetting = SmziSetting()

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.top_mode, self.top_mode + 1)


@dataclass(frozen=True)
class BareWaveguide:
    mode: int

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)


MeshElement = Union[SmziElement, PhaseSetting, BareWaveguide]


def smzi_block(s: SmziSetting) -> np.ndarray:
    """2x2 transfer matrix of a symmetric MZI.

    ``exp(i sigma) [[sin delta, cos delta], [cos delta, -sin delta]]``, which
    is unitary and equal to its own transpose.
    """
    e = np.exp(1j * s.sigma)
    sd, cd = math.sin(s.delta), math.cos(s.delta)
    return np.array([[e * sd, e * cd], [e * cd, -e * sd]], dtype=np.complex128)


def phase_matrix(p: PhaseSetting, m: int) -> UnitaryMatrix:
    if not 1 <= p.mode <= m:
        raise ShapeError(f"phase mode {p.mode} outside 1..{m}")
    out = np.eye(m, dtype=np.complex128)
    out[p.mode - 1, p.mode - 1] = np.exp(1j * p.phi)
    return UnitaryMatrix(out, 1e-14)


def element_matrix(el: MeshElement, m: int) -> np.ndarray:
    """Full ``m x m`` matrix of one element (used by oracles and tests)."""
    out = np.eye(m, dtype=np.complex128)
    if isinstance(el, SmziElement):
        t = el.top_mode - 1
        out[t:t + 2, t:t + 2] = smzi_block(el.setting)
    elif isinstance(el, PhaseSetting):
        out[el.mode - 1, el.mode - 1] = np.exp(1j * el.phi)
    return out


@dataclass(frozen=True)
class MeshCircuit:
    """Immutable physical mesh: ``m`` modes and an ordered tuple of columns."""

    m: int
    columns: tuple[tuple[MeshElement, ...], ...]
    layout: Layout = Layout.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(tuple(col) for col in self.columns))
        object.__setattr__(self, "layout", Layout(self.layout))
        if self.m < 1:
            raise LayoutError(f"mode count must be >= 1, got {self.m}")
        for ci, col in enumerate(self.columns):
            used: set[int] = set()
            for el in col:
                for q in el.modes:
                    if not 1 <= q <= self.m:
                        raise LayoutError(f"column {ci}: mode {q} outside 1..{self.m}")
                    if q in used:
                        raise LayoutError(f"column {ci}: mode {q} occupied twice")
                    used.add(q)
            if self.layout is Layout.CLEMENTS_EDGE and _has_smzi(col) and len(used) != self.m:
                missing = sorted(set(range(1, self.m + 1)) - used)
                raise LayoutError(f"column {ci}: edge modes {missing} lack a phase or bare slot")

    def mesh_columns(self) -> list[int]:
        """Indices of the columns that hold at least one sMZI."""
        return [i for i, col in enumerate(self.columns) if _has_smzi(col)]

    def element_at(self, column: int, mode: int) -> MeshElement | None:
        for el in self.columns[column]:
            if mode in el.modes:
                return el
        return None

    def smzi_count(self) -> int:
        return sum(isinstance(el, SmziElement) for col in self.columns for el in col)

    def phase_elements(self) -> list[tuple[int, PhaseSetting]]:
        return [(i, el) for i, col in enumerate(self.columns) for el in col
                if isinstance(el, PhaseSetting)]

    def with_element(self, column: int, old: MeshElement | None, new: MeshElement) -> MeshCircuit:
        """Copy with ``old`` replaced by ``new`` in ``column`` (``old=None`` appends)."""
        cols = list(self.columns)
        col = list(cols[column])
        if old is None:
            col.append(new)
        else:
            col[col.index(old)] = new
        cols[column] = tuple(sorted(col, key=lambda e: e.modes[0]))
        return replace(self, columns=tuple(cols))

    def with_columns(self, columns: Iterable[Iterable[MeshElement]]) -> MeshCircuit:
        return replace(self, columns=tuple(tuple(c) for c in columns))


def _has_smzi(col) -> bool:
    return any(isinstance(el, SmziElement) for el in col)


def evaluate(c: MeshCircuit) -> UnitaryMatrix:
    """Transfer matrix of the whole mesh, first column acting first."""
    u = np.eye(c.m, dtype=np.complex128)
    for col in c.columns:
        for el in col:
            if isinstance(el, SmziElement):
                t = el.top_mode - 1
                u[t:t + 2, :] = smzi_block(el.setting) @ u[t:t + 2, :]
            elif isinstance(el, PhaseSetting):
                u[el.mode - 1, :] *= np.exp(1j * el.phi)
    return UnitaryMatrix(u, 1e-11)


def clements_edge_layout(m: int) -> MeshCircuit:
    """Rectangular sMZI mesh with a zero phase slot on every uncovered mode.

    Column ``c`` (1-based) holds sMZIs with top modes 1, 3, 5, ... when ``c``
    is odd and 2, 4, ... when ``c`` is even.
    """
    if m < 2:
        raise ShapeError(f"a mesh needs at least 2 modes, got {m}")
    cols = []
    for c in range(1, m + 1):
        tops = range(1 if c % 2 else 2, m, 2)
        covered = {q for t in tops for q in (t, t + 1)}
        col: list[MeshElement] = [SmziElement(t) for t in tops]
        col += [PhaseSetting(0.0, q) for q in range(1, m + 1) if q not in covered]
        cols.append(sorted(col, key=lambda e: e.modes[0]))
    return MeshCircuit(m, cols, Layout.CLEMENTS_EDGE)


def reck_position(j: int, k: int) -> tuple[int, int]:
    """Column index (within :func:`reck_layout`) and top mode of sMZI ``(j, k)``."""
    return j + k - 1, j - k + 1


def reck_layout(m: int) -> MeshCircuit:
    """Triangular sMZI mesh framed by input and output phase columns.

    Column 0 carries input phases on modes 2..m, columns 1..2m-3 the
    diagonals of sMZIs, and the final column output phases on modes 2..m.
    """
    if m < 2:
        raise ShapeError(f"a mesh needs at least 2 modes, got {m}")
    n_mzi_cols = 2 * m - 3
    cols: list[list[MeshElement]] = [[] for _ in range(n_mzi_cols + 2)]
    cols[0] = [PhaseSetting(0.0, q) for q in range(2, m + 1)]
    for j in range(1, m):
        for k in range(1, j + 1):
            col, top = reck_position(j, k)
            cols[col].append(SmziElement(top))
    cols[-1] = [PhaseSetting(0.0, q) for q in range(2, m + 1)]
    return MeshCircuit(m, [sorted(c, key=lambda e: e.modes[0]) for c in cols], Layout.RECK)
