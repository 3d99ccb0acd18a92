"""Gate matrices used by the election protocols.

Basis order is |0>,|1> for one qubit and |00>,|01>,|10>,|11> for two qubits,
the first qubit being the high bit.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from exceptions import ParameterError
from settings import get_settings

logger = logging.getLogger(__name__)

GATE_KINDS = ("hadamard", "x", "cnot", "U_k", "U_k_general", "V_k", "W_k")


@dataclass(frozen=True)
class GateMatrix:
    name: str
    matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def rows(self) -> list[list[complex]]:
        """Plain Python rows for the branch-by-branch simulator loops."""
        return [[complex(x) for x in row] for row in self.matrix]


def _u_general(k: int, psi: float, t: int) -> np.ndarray:
    theta = psi - (2 * t + 1) * np.pi / k
    return np.array(
        [
            [np.exp(1j * psi), np.exp(1j * theta)],
            [-np.exp(-1j * theta), np.exp(-1j * psi)],
        ]
    ) / np.sqrt(2)


def _v_matrix(k: int) -> np.ndarray:
    r_k = np.cos(np.pi / k)
    i_k = np.sin(np.pi / k)
    r_2k = np.cos(np.pi / (2 * k))
    e = np.exp(1j * np.pi / k)
    sq = np.sqrt(r_k)
    h = 1 / np.sqrt(2)
    corner = np.exp(-1j * np.pi / (2 * k)) * i_k / (1j * np.sqrt(2) * r_2k)
    m = np.array(
        [
            [h, 0, sq, e * h],
            [h, 0, -sq / e, h / e],
            [sq, 0, corner, -sq],
            [0, np.sqrt(r_k + 1), 0, 0],
        ],
        dtype=complex,
    )
    return m / np.sqrt(r_k + 1)


def build_gate(kind: str, k: Optional[int] = None, psi: Optional[float] = None, t: Optional[int] = None) -> GateMatrix:
    """
    Build one of the protocol gates.

    Args:
        kind: one of GATE_KINDS
        k: family index (U_k and U_k_general need even k >= 2, V_k odd k >= 3, W_k k >= 1)
        psi: phase of U_k_general (default 0)
        t: integer shift of U_k_general (default 0)

    Returns:
        A GateMatrix that passed the unitarity check

    Raises:
        ParameterError: unknown kind or a k of the wrong parity
    """
    if kind == "hadamard":
        m = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        name = "H"
    elif kind == "x":
        m = np.array([[0, 1], [1, 0]], dtype=complex)
        name = "X"
    elif kind == "cnot":
        m = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
        name = "CNOT"
    elif kind in ("U_k", "U_k_general"):
        if k is None or k < 2 or k % 2:
            raise ParameterError(f"{kind} needs an even k >= 2, got {k}")
        if kind == "U_k":
            m = _u_general(k, 0.0, 0)
            name = f"U_{k}"
        else:
            psi = 0.0 if psi is None else float(psi)
            t = 0 if t is None else int(t)
            m = _u_general(k, psi, t)
            name = f"U_{k}({psi:g},{t})"
    elif kind == "V_k":
        if k is None or k < 3 or k % 2 == 0:
            raise ParameterError(f"V_k needs an odd k >= 3, got {k}")
        m = _v_matrix(k)
        name = f"V_{k}"
    elif kind == "W_k":
        if k is None or k < 1:
            raise ParameterError(f"W_k needs k >= 1, got {k}")
        m = np.diag([1, np.exp(1j * np.pi / k)]).astype(complex)
        name = f"W_{k}"
    else:
        raise ParameterError(f"Unknown gate kind: {kind}")

    gate = GateMatrix(name, m)
    error = gate.unitarity_error()
    if error >= get_settings().unitarity_tolerance:
        raise ParameterError(f"{name} failed the unitarity check (max |M^dag M - I| = {error:.3e})")
    return gate
