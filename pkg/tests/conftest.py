"""Shared oracles for the test suite.

These helpers deliberately avoid the package's own embedding and block
code so that they can serve as independent references.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

BS = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)


def physical_smzi(theta1: float, theta2: float) -> np.ndarray:
    """Two balanced couplers around internal phases, with the extra factor ``i`` removed."""
    inner = np.diag([cmath.exp(1j * theta1), cmath.exp(1j * theta2)])
    return BS @ inner @ BS / 1j


def embed(block: np.ndarray, top: int, m: int) -> np.ndarray:
    out = np.zeros((m, m), dtype=complex)
    for i in range(m):
        out[i, i] = 1.0
    for r in range(2):
        for c in range(2):
            out[top - 1 + r, top - 1 + c] = block[r, c]
    return out


def phase_on(mode: int, phi: float, m: int) -> np.ndarray:
    out = np.eye(m, dtype=complex)
    out[mode - 1, mode - 1] = cmath.exp(1j * phi)
    return out


def loop_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, k = a.shape
    k2, p = b.shape
    assert k == k2
    out = np.zeros((n, p), dtype=complex)
    for i in range(n):
        for j in range(p):
            s = 0j
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def reck_product(d) -> np.ndarray:
    """Target rebuilt from a Reck table as an operator product in elimination order.

    Elimination applies ``P_1 M_11 P_2 M_21 M_22 ... Q`` to ``conj(U)`` from
    the right; inverting with ``conj(A) = A^-1`` gives ``U`` as the same
    factors multiplied in reverse.
    """
    m = d.m
    factors = []
    for j in range(1, m):
        factors.append(phase_on(j + 1, d.phi_in[j], m))
        for k in range(1, j + 1):
            s = d.smzi[j, k]
            factors.append(embed(physical_smzi(s.theta1, s.theta2), j - k + 1, m))
    for q in range(2, m + 1):
        factors.append(phase_on(q, d.zeta_out[q], m))
    u = np.eye(m, dtype=complex)
    for f in factors:
        u = f @ u
    return u * cmath.exp(-1j * d.global_phase)


def clements_product(d) -> np.ndarray:
    """Target rebuilt from a Clements table: ``L_1 ... L_n  Q  R_p ... R_1``.

    ``R`` are the column operations of odd diagonals and ``L`` the row
    operations of even diagonals, each listed in the order they were applied.
    """
    m = d.m
    left, right = [], []
    for j in range(1, m):
        if j % 2:
            right.append(phase_on(j + 1, d.phi_side[j], m))
            for k in range(1, j + 1):
                s = d.smzi[j, k]
                right.append(embed(physical_smzi(s.theta1, s.theta2), j - k + 1, m))
        else:
            left.append(phase_on(m - j, d.phi_side[j], m))
            for k in range(1, j + 1):
                s = d.smzi[j, k]
                left.append(embed(physical_smzi(s.theta1, s.theta2), m - j + k - 1, m))
    q = np.eye(m, dtype=complex)
    for mode in range(2, m + 1):
        q = q @ phase_on(mode, d.zeta_mid[mode], m)
    u = np.eye(m, dtype=complex)
    for f in left:
        u = u @ f
    u = u @ q
    for f in reversed(right):
        u = u @ f
    return u * cmath.exp(-1j * d.global_phase)


def mesh_product(c) -> np.ndarray:
    """Explicit ordered product of every element of a mesh circuit."""
    from photomesh.mesh import PhaseSetting, SmziElement

    u = np.eye(c.m, dtype=complex)
    for col in c.columns:
        for el in col:
            if isinstance(el, SmziElement):
                f = embed(physical_smzi(el.setting.theta1, el.setting.theta2), el.top_mode, c.m)
            elif isinstance(el, PhaseSetting):
                f = phase_on(el.mode, el.phi, c.m)
            else:
                continue
            u = f @ u
    return u


def gamma_scan(a: np.ndarray, b: np.ndarray, n: int = 1_000_000) -> float:
    g = np.linspace(-math.pi, math.pi, n, endpoint=False)
    best = math.inf
    for chunk in np.array_split(g, 100):
        diff = a[None] - np.exp(1j * chunk)[:, None, None] * b[None]
        best = min(best, float(np.min(np.max(np.abs(diff), axis=(1, 2)))))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, one line per criterion, after the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
