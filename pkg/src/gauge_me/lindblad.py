"""Dissipator matrix, positivity condition and diagonal Lindblad form.

The general master equation is in first standard form with jump basis
``(sigma_plus, sigma_minus)`` and coefficient matrix

    M = [[A_plus, B], [conj(B), A_minus]].

Diagonalizing ``M = sum_i lambda_i v_i v_i^dagger`` gives channels
``L_i = v_i[0] sigma_plus + v_i[1] sigma_minus``; the equation is of
Lindblad form iff both ``lambda_i >= 0``, i.e. ``A_plus A_minus >= |B|^2``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._parallel import worker_count
from .errors import UnsupportedGaugeError
from .gauge import Gauge, GaugeKind
from .rates import (
    PhysicalParams,
    RateSet,
    cross_coefficient_B_bound,
    transition_rate,
)

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_3 = np.diag([-0.5, 0.5]).astype(complex)
JUMP_BASIS = (SIGMA_PLUS, SIGMA_MINUS)

DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class DissipatorMatrix:
    A_plus: float
    A_minus: float
    B: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.A_plus, self.B], [np.conj(self.B), self.A_minus]], dtype=complex
        )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class PositivityReport:
    holds: bool
    det: float
    ratio: float


@dataclass(frozen=True)
class LindbladDecomposition:
    """Eigenvalues ``lambdas`` (descending) and channel operators ``operators``.

    ``eigenvectors[:, i]`` holds the coefficients of ``operators[i]`` in the
    ``(sigma_plus, sigma_minus)`` basis.
    """

    lambdas: tuple[float, float]
    operators: tuple[np.ndarray, np.ndarray]
    eigenvectors: np.ndarray

    @property
    def is_valid(self) -> bool:
        return all(lam >= 0 for lam in self.lambdas)


def build_dissipator(rates: RateSet) -> DissipatorMatrix:
    return DissipatorMatrix(float(rates.A_plus), float(rates.A_minus), complex(rates.B))


def positivity_check(M: DissipatorMatrix) -> PositivityReport:
    """Lindblad condition ``A_plus A_minus >= |B|^2``.

    ``ratio`` is ``A_plus A_minus / |B|^2`` and ``inf`` when ``B = 0``.
    """
    product = M.A_plus * M.A_minus
    b2 = abs(M.B) ** 2
    det = product - b2
    ratio = math.inf if b2 == 0 else product / b2
    holds = det >= 0 and M.A_plus >= 0 and M.A_minus >= 0
    return PositivityReport(holds=bool(holds), det=float(det), ratio=float(ratio))


def _fix_phase(v):
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def diagonalize(M: DissipatorMatrix) -> LindbladDecomposition:
    """Closed-form eigen-decomposition of the 2x2 Hermitian dissipator.

    Degenerate eigenvalues return the canonical channels
    ``(sigma_plus, sigma_minus)``.
    """
    a, d, b = float(M.A_plus), float(M.A_minus), complex(M.B)
    mean = 0.5 * (a + d)
    diff = 0.5 * (a - d)
    r = math.hypot(diff, abs(b))
    lam1 = mean + r
    det = a * d - abs(b) ** 2
    # the smaller root from the determinant avoids cancellation
    lam2 = det / lam1 if lam1 > 0 else mean - r
    if 2 * r <= DEGENERACY_RTOL * abs(a + d) or r == 0:
        vecs = np.eye(2, dtype=complex)
        lambdas = (a, d)
    else:
        if diff >= 0:
            v1 = np.array([lam1 - d, np.conj(b)], dtype=complex)
        else:
            v1 = np.array([b, lam1 - a], dtype=complex)
        v1 = _fix_phase(v1 / np.linalg.norm(v1))
        v2 = _fix_phase(np.array([-np.conj(v1[1]), np.conj(v1[0])]))
        vecs = np.column_stack([v1, v2])
        lambdas = (lam1, lam2)
    ops = tuple(vecs[0, i] * SIGMA_PLUS + vecs[1, i] * SIGMA_MINUS for i in range(2))
    return LindbladDecomposition(
        lambdas=(float(lambdas[0]), float(lambdas[1])), operators=ops, eigenvectors=vecs
    )


def _anticommutator(x, rho):
    return x @ rho + rho @ x


def first_standard_form(M: DissipatorMatrix, rho: np.ndarray) -> np.ndarray:
    """Dissipative part ``sum_nm M_nm (s_n rho s_m^+ - {s_m^+ s_n, rho}/2)``."""
    m = M.matrix
    out = np.zeros((2, 2), dtype=complex)
    for n, sn in enumerate(JUMP_BASIS):
        for k, sm in enumerate(JUMP_BASIS):
            smd = sm.conj().T
            out += m[n, k] * (sn @ rho @ smd - 0.5 * _anticommutator(smd @ sn, rho))
    return out


def lindblad_form(decomposition: LindbladDecomposition, rho: np.ndarray) -> np.ndarray:
    """Dissipative part ``sum_i lambda_i (L_i rho L_i^+ - {L_i^+ L_i, rho}/2)``."""
    out = np.zeros((2, 2), dtype=complex)
    for lam, op in zip(decomposition.lambdas, decomposition.operators):
        opd = op.conj().T
        out += lam * (op @ rho @ opd - 0.5 * _anticommutator(opd @ op, rho))
    return out


@dataclass(frozen=True)
class ScanRow:
    omega_max: float
    A_plus: float
    A_minus: float
    B_bound_abs: float
    ratio: float


SCAN_COLUMNS = ("omega_max_rad_s", "A_plus", "A_minus", "B_bound_abs", "ratio")


def _scan_point(params, gauge, omega_max):
    p = params.with_(omega_max=float(omega_max))
    a_plus = transition_rate(p, gauge, +1)
    a_minus = transition_rate(p, gauge, -1)
    bound = cross_coefficient_B_bound(p, gauge)
    ratio = math.inf if bound == 0 else a_plus * a_minus / bound**2
    return ScanRow(float(omega_max), a_plus, a_minus, bound, ratio)


def positivity_bound_scan(
    params: PhysicalParams, gauge: Gauge, omega_max_grid: Iterable[float]
) -> list[ScanRow]:
    """Conservative ``A_plus A_minus / |B|^2`` over a grid of upper cut-offs.

    ``|B|`` is replaced by its upper bound from the principal-value form
    with ``|cos(omega0 delta_t)|`` and ``|d1^2 + d2^2 + d3^2|`` set to one,
    so each ratio is a lower bound on the true one within that
    approximation.
    """
    if gauge.kind is GaugeKind.ROTATING_WAVE:
        raise UnsupportedGaugeError("rotating wave gauge has B = 0; nothing to scan")
    grid = [float(w) for w in omega_max_grid]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(lambda w: _scan_point(params, gauge, w), grid))


def _fmt(value: float) -> str:
    return repr(float(value))


def scan_to_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow(
            [_fmt(row.omega_max), _fmt(row.A_plus), _fmt(row.A_minus),
             _fmt(row.B_bound_abs), _fmt(row.ratio)]
        )
    return buf.getvalue()
