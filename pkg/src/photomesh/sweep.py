"""Robustness of programmable meshes to beam-splitter imbalance.

Both schemes are modelled as :class:`AlternatingCircuit` objects so they can
share one optimizer:

* ``fldzhyan``: alternating splitter layers of depth ``2m`` with compact
  phase screens.
* ``clements-smzi``: the rectangular sMZI mesh. Each mesh column is two
  splitter layers with the same offset, the internal phases sit between
  them, and input/output screens frame the mesh. Under imbalance there is no
  closed-form programming, so the phases are reoptimized, warm-started from
  the ideal decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alternating import (
    AlternatingCircuit,
    Form,
    ImbalanceModel,
    alternating_layout,
    optimize_phases,
    sample_imbalance,
    splitter_pairs,
)
from .clements import decompose_clements_smzi
from .errors import LayoutError
from .linalg import haar_random_unitary
from .mesh import MeshCircuit, PhaseSetting, SmziElement
from .relocate import relocate_all

SCHEMES = ("clements-smzi", "fldzhyan")
CSV_HEADER = ("scheme", "m", "sigma", "trial_seed", "infidelity")


def clements_layered(m: int) -> AlternatingCircuit:
    """Rectangular sMZI mesh as a balanced alternating circuit with zero phases.

    Column ``c`` (1..m) is splitter layers ``2c-1`` and ``2c`` with offset
    ``(c+1) % 2``; screen ``2c-1`` holds its internal and edge phases.
    Screens 0 and ``2m`` are the input and output phases.
    """
    if m < 2:
        raise LayoutError(f"mesh needs m >= 2, got {m}")
    offsets = tuple((c + 1) % 2 for c in range(1, m + 1) for _ in range(2))
    angles = tuple(np.full(len(splitter_pairs(m, o)), math.pi / 4) for o in offsets)
    slots = (0, *range(1, 2 * m, 2), 2 * m)
    return AlternatingCircuit(m, angles, tuple(np.zeros(m) for _ in slots), Form.CUSTOM, offsets, slots)


def layered_phases(c: MeshCircuit) -> np.ndarray:
    """Flat phases of :func:`clements_layered` reproducing an edge-slot mesh.

    ``c`` must be shaped like the output of :func:`relocate_all`: an input
    phase column, the ``m`` layout columns, an output phase column. The
    layered circuit then evaluates to ``i^m`` times ``c``: a balanced
    splitter pair around internal phases is ``i`` times the sMZI, and edge
    phases get ``pi/2`` so that uncovered modes pick up the same factor.
    """
    m = c.m
    if len(c.columns) != m + 2:
        raise LayoutError(f"expected {m + 2} columns, got {len(c.columns)}")
    screens = np.zeros((m + 2, m))
    for idx, col in enumerate(c.columns):
        interior = 0 < idx <= m
        for el in col:
            if isinstance(el, SmziElement):
                if not interior:
                    raise LayoutError("sMZI outside the mesh columns")
                screens[idx, el.top_mode - 1] = el.setting.theta1
                screens[idx, el.top_mode] = el.setting.theta2
            elif isinstance(el, PhaseSetting):
                screens[idx, el.mode - 1] += el.phi
    for idx in range(1, m + 1):
        covered = {q for el in c.columns[idx] if isinstance(el, SmziElement) for q in el.modes}
        for q in range(1, m + 1):
            if q not in covered:
                screens[idx, q - 1] += math.pi / 2
    return screens.ravel()


def warm_start(target, m: int) -> np.ndarray:
    """Ideal-splitter programming of ``target`` on :func:`clements_layered`."""
    return layered_phases(relocate_all(decompose_clements_smzi(target)))


def scheme_layout(scheme: str, m: int) -> AlternatingCircuit:
    if scheme == "clements-smzi":
        return clements_layered(m)
    if scheme == "fldzhyan":
        return alternating_layout(m, 2 * m, Form.COMPACT)
    raise LayoutError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    m: int
    sigma: float
    trial_seed: int
    infidelity: float


def run_trial(scheme: str, m: int, sigma: float, trial_seed: int, *, restarts: int = 3,
              max_iters: int = 2000) -> SweepRow:
    """Draw a Haar target and an imbalance sample, then reoptimize the phases.

    The target and the splitter angles both derive from ``trial_seed``.
    """
    target = haar_random_unitary(m, trial_seed)
    layout = scheme_layout(scheme, m)
    angles = sample_imbalance(ImbalanceModel(sigma, trial_seed), layout)
    layout = layout.with_splitters(angles)
    init = warm_start(target, m) if scheme == "clements-smzi" else None
    report = optimize_phases(target, layout, restarts=restarts, seed=trial_seed,
                             init=init, max_iters=max_iters)
    return SweepRow(scheme, m, sigma, trial_seed, report.achieved_infidelity)


def run_sweep(m: int, sigmas: Sequence[float], trials: int, schemes: Sequence[str] = SCHEMES,
              seed: int = 0, restarts: int = 3) -> list[SweepRow]:
    """All ``(scheme, sigma, trial)`` combinations, sorted in that order.

    Trial ``t`` uses seed ``seed ^ t`` for both target and imbalance, so every
    scheme sees the same targets and the same imbalance seed per sigma.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not sigmas:
        raise ValueError("sigma grid is empty")
    for s in sigmas:
        if not (math.isfinite(s) and s >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {s}")
    for sch in schemes:
        scheme_layout(sch, m)
    rows = []
    for sch in sorted(set(schemes)):
        for s in sorted(set(sigmas)):
            for t in range(trials):
                rows.append(run_trial(sch, m, s, seed ^ t, restarts=restarts))
    return rows


def summarize(rows: Sequence[SweepRow]) -> dict[tuple[str, int, float], dict[str, float]]:
    """Median and 90th percentile of the infidelity per ``(scheme, m, sigma)``."""
    groups: dict[tuple[str, int, float], list[float]] = {}
    for r in rows:
        groups.setdefault((r.scheme, r.m, r.sigma), []).append(r.infidelity)
    return {k: {"median": float(np.median(v)), "p90": float(np.percentile(v, 90)), "count": len(v)}
            for k, v in sorted(groups.items())}
