"""Time evolution of the atomic density matrix and photon emission.

Basis ordering is ``(|1>, |2>)`` = (ground, excited). The matrix elements
obey

    d rho11/dt = -A_plus rho11 + A_minus rho22
    d rho12/dt = i w rho12 - (A_minus + A_plus)/2 rho12 + conj(B) rho21

with ``w`` the renormalized transition frequency. Only ``rho11`` and
``rho12`` are integrated; ``rho22 = 1 - rho11`` and ``rho21 = conj(rho12)``
hold by construction.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ._parallel import worker_count
from .errors import DomainError, LindbladViolationError, NoSteadyStateError, NumericalError
from .lindblad import SIGMA_3, LindbladDecomposition
from .rates import RateSet

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
ROTATING_FRAME_THRESHOLD = 1e6
JUMP_STEP_BOUND = 1e-2


@dataclass(frozen=True)
class DensityMatrix:
    """Two-level density matrix stored as ``rho11``, ``rho22`` and ``rho12``."""

    rho11: float
    rho22: float
    rho12: complex = 0j

    def __post_init__(self):
        values = (self.rho11, self.rho22, complex(self.rho12).real, complex(self.rho12).imag)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("density matrix entries must be finite")
        if abs(self.rho11 + self.rho22 - 1.0) > TRACE_TOL:
            raise DomainError(f"trace is {self.rho11 + self.rho22!r}, expected 1")
        if self.rho11 * self.rho22 - abs(self.rho12) ** 2 < -PSD_TOL or min(self.rho11, self.rho22) < -PSD_TOL:
            raise DomainError("density matrix is not positive semidefinite")

    @classmethod
    def _unchecked(cls, rho11: float, rho22: float, rho12: complex) -> DensityMatrix:
        # integrator output: trace is exact by construction, positivity is
        # only guaranteed when the Lindblad condition holds
        obj = object.__new__(cls)
        object.__setattr__(obj, "rho11", rho11)
        object.__setattr__(obj, "rho22", rho22)
        object.__setattr__(obj, "rho12", rho12)
        return obj

    @classmethod
    def ground(cls) -> DensityMatrix:
        return cls(1.0, 0.0)

    @classmethod
    def excited(cls) -> DensityMatrix:
        return cls(0.0, 1.0)

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> DensityMatrix:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2) or not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise DomainError("expected a Hermitian 2x2 matrix")
        return cls(float(rho[0, 0].real), float(rho[1, 1].real), complex(rho[0, 1]))

    @property
    def rho21(self) -> complex:
        return complex(self.rho12).conjugate()

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex)

    @property
    def trace(self) -> float:
        return self.rho11 + self.rho22

    @property
    def min_eigenvalue(self) -> float:
        mean = 0.5 * (self.rho11 + self.rho22)
        return mean - math.hypot(0.5 * (self.rho11 - self.rho22), abs(self.rho12))


class DensityTangent(NamedTuple):
    d11: float
    d22: float
    d12: complex


def me_rhs(rho: DensityMatrix, rates: RateSet) -> DensityTangent:
    """Time derivative of ``rho`` under the general master equation."""
    d11 = -rates.A_plus * rho.rho11 + rates.A_minus * rho.rho22
    gamma = 0.5 * (rates.A_minus + rates.A_plus)
    d12 = (1j * rates.omega0_tilde - gamma) * rho.rho12 + np.conj(rates.B) * rho.rho21
    return DensityTangent(d11, -d11, complex(d12))


@dataclass(frozen=True)
class Evolution:
    """States on the output grid.

    When ``rotating_frame`` is true the stored coherences are
    ``rho12 * exp(-i w t)``; populations are frame independent.
    """

    times: np.ndarray
    states: list[DensityMatrix]
    rotating_frame: bool
    method: str

    @property
    def rho22(self) -> np.ndarray:
        return np.array([s.rho22 for s in self.states])

    @property
    def rho12(self) -> np.ndarray:
        return np.array([s.rho12 for s in self.states])


def _populations_exact(rho11_0, rates, t):
    total = rates.A_plus + rates.A_minus
    if total == 0:
        return np.full_like(t, rho11_0)
    ss = rates.A_minus / total
    return ss + (rho11_0 - ss) * np.exp(-total * t)


def _coherence_exact(c0, rates, t, rotating):
    # d/dt (c, c*) = (-g + K)(c, c*), K = [[i w, B*], [B, -i w]], K^2 = s^2
    w = rates.omega0_tilde
    g = 0.5 * (rates.A_plus + rates.A_minus)
    b = complex(rates.B)
    s = cmath.sqrt(abs(b) ** 2 - w * w)
    out = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t):
        st = s * ti
        cosh = cmath.cosh(st)
        sinh_over_s = ti if s == 0 else cmath.sinh(st) / s
        c = math.exp(-g * ti) * (cosh * c0 + sinh_over_s * (1j * w * c0 + b.conjugate() * c0.conjugate()))
        out[i] = c * cmath.exp(-1j * w * ti) if rotating else c
    return out


def _rk(rho0, rates, grid, t_final, rotating, rtol, atol):
    w = rates.omega0_tilde
    g = 0.5 * (rates.A_plus + rates.A_minus)
    a_plus, a_minus = rates.A_plus, rates.A_minus
    bc = np.conj(complex(rates.B))

    def rhs(t, y):
        c = y[1] + 1j * y[2]
        d11 = -a_plus * y[0] + a_minus * (1.0 - y[0])
        if rotating:
            dc = -g * c + bc * np.exp(-2j * w * t) * np.conj(c)
        else:
            dc = (1j * w - g) * c + bc * np.conj(c)
        return [d11, dc.real, dc.imag]

    c0 = complex(rho0.rho12)
    y0 = [rho0.rho11, c0.real, c0.imag]
    sol = solve_ivp(rhs, (0.0, t_final), y0, method="DOP853", t_eval=grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(f"integration failed: {sol.message}")
    return sol.y[0], sol.y[1] + 1j * sol.y[2]


def evolve(
    rho0: DensityMatrix,
    rates: RateSet,
    t_final: float,
    output_grid: Sequence[float] | None = None,
    *,
    rotating_frame: bool | None = None,
    method: str = "auto",
    rtol: float = 1e-10,
    atol: float = 1e-13,
) -> Evolution:
    """Evolve ``rho0`` up to ``t_final`` and sample it on ``output_grid``.

    Args:
        output_grid: Sorted times in ``[0, t_final]``; defaults to
            ``[0, t_final]``.
        rotating_frame: Remove the ``i w rho12`` term; defaults to on when
            ``w * t_final > 1e6``.
        method: ``"rk"`` (adaptive explicit Runge-Kutta, DOP853),
            ``"exact"`` (closed-form propagator) or ``"auto"``, which picks
            ``"exact"`` only when the integrator would have to resolve more
            than 1e6 radians of coherent phase. ``"rk"`` refuses that case.
    """
    if not t_final >= 0:
        raise DomainError("t_final must be >= 0")
    grid = np.asarray([0.0, t_final] if output_grid is None else output_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise DomainError("output_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > t_final:
        raise DomainError("output_grid must be sorted within [0, t_final]")
    phase_span = abs(rates.omega0_tilde) * t_final
    if rotating_frame is None:
        rotating_frame = phase_span > ROTATING_FRAME_THRESHOLD
    # RK must resolve the 2w phase of the B term, or w itself in the lab frame
    oscillatory = phase_span > ROTATING_FRAME_THRESHOLD and (rates.B != 0 or not rotating_frame)
    if method == "auto":
        method = "exact" if oscillatory else "rk"
    if method not in ("rk", "exact"):
        raise DomainError(f"unknown method {method!r}")
    if method == "rk" and oscillatory:
        raise DomainError(
            f"rk would have to resolve {phase_span:.3g} rad of coherent phase; use method='exact'"
        )

    if t_final == 0:
        states = [rho0 for _ in grid]
        return Evolution(grid, states, bool(rotating_frame), method)

    if method == "exact":
        rho11 = _populations_exact(rho0.rho11, rates, grid)
        rho12 = _coherence_exact(complex(rho0.rho12), rates, grid, rotating_frame)
    else:
        rho11, rho12 = _rk(rho0, rates, grid, t_final, rotating_frame, rtol, atol)
    states = [
        DensityMatrix._unchecked(float(p), 1.0 - float(p), complex(c)) for p, c in zip(rho11, rho12)
    ]
    return Evolution(grid, states, bool(rotating_frame), method)


def steady_state(rates: RateSet) -> DensityMatrix:
    """Diagonal stationary state with ``rho22 = A_plus / (A_minus + A_plus)``."""
    total = rates.A_minus + rates.A_plus
    if not total > 0:
        raise NoSteadyStateError("A_minus + A_plus = 0: every state is stationary")
    rho22 = rates.A_plus / total
    return DensityMatrix(rates.A_minus / total, rho22, 0j)


def emission_rate(rho: DensityMatrix, rates: RateSet) -> float:
    """Photon emission probability density ``A_minus rho22 + A_plus rho11``."""
    return rates.A_minus * rho.rho22 + rates.A_plus * rho.rho11


class SteadyEmission(NamedTuple):
    total: float
    narrowband: float


def steady_emission_rate(rates: RateSet) -> SteadyEmission:
    """Stationary emission rate ``2 A_minus A_plus / (A_minus + A_plus)``.

    ``narrowband`` counts the photons emitted by de-excitation
    (``A_minus rho22``), which is half of the total.
    """
    rho = steady_state(rates)
    total = 2.0 * rates.A_minus * rates.A_plus / (rates.A_minus + rates.A_plus)
    return SteadyEmission(total, rates.A_minus * rho.rho22)


# --- quantum-jump trajectories ---------------------------------------------

@dataclass(frozen=True)
class EmissionRecord:
    time: float
    channel: int


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Ensemble averages on ``times`` plus per-trajectory emission records."""

    times: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rho12: np.ndarray
    rho22_stderr: np.ndarray
    emissions: list[list[EmissionRecord]]
    dt: float

    @property
    def states(self) -> list[DensityMatrix]:
        return [
            DensityMatrix._unchecked(float(p11), 1.0 - float(p11), complex(c))
            for p11, c in zip(self.rho11, self.rho12)
        ]

    def first_emission_times(self) -> np.ndarray:
        """First emission time of each trajectory, ``nan`` if none occurred."""
        return np.array([rec[0].time if rec else math.nan for rec in self.emissions])


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _sample_initial(rho0, rng):
    vals, vecs = np.linalg.eigh(rho0.matrix())
    vals = np.clip(vals, 0.0, None)
    k = 1 if rng.random() < vals[1] / vals.sum() else 0
    return vecs[:, k]


def _run_chunk(indices, seed, rho0, jumps, propagator, dt, n_steps, record_steps):
    n = len(indices)
    psi = np.empty((n, 2), dtype=complex)
    draws = np.empty((n, n_steps, 2))
    for row, idx in enumerate(indices):
        rng = trajectory_rng(seed, idx)
        psi[row] = _sample_initial(rho0, rng)
        draws[row] = rng.random((n_steps, 2))
    emissions = [[] for _ in range(n)]
    n_rec = len(record_steps)
    sums = np.zeros((n_rec, 3), dtype=complex)
    sq22 = np.zeros(n_rec)
    rec_pos = {step: i for i, step in enumerate(record_steps)}

    def record(i):
        p = np.abs(psi) ** 2
        sums[i, 0] += p[:, 0].sum()
        sums[i, 1] += p[:, 1].sum()
        sums[i, 2] += np.sum(psi[:, 0] * np.conj(psi[:, 1]))
        sq22[i] += np.sum(p[:, 1] ** 2)

    if 0 in rec_pos:
        record(rec_pos[0])
    for step in range(1, n_steps + 1):
        if jumps:
            amps = [psi @ J.T for J in jumps]
            probs = np.stack([np.sum(np.abs(a) ** 2, axis=1) for a in amps], axis=1) * dt
            dp = probs.sum(axis=1)
            jumped = draws[:, step - 1, 0] < dp
        else:
            jumped = np.zeros(n, dtype=bool)
        stay = ~jumped
        if stay.any():
            nxt = psi[stay] @ propagator.T
            psi[stay] = nxt / np.linalg.norm(nxt, axis=1, keepdims=True)
        if jumped.any():
            t = step * dt
            for row in np.flatnonzero(jumped):
                cum = np.cumsum(probs[row])
                channel = int(np.searchsorted(cum, draws[row, step - 1, 1] * cum[-1], side="right"))
                channel = min(channel, len(jumps) - 1)
                new = amps[channel][row]
                psi[row] = new / np.linalg.norm(new)
                emissions[row].append(EmissionRecord(t, channel))
        if step in rec_pos:
            record(rec_pos[step])
    return sums, sq22, emissions


def simulate_trajectories(
    rho0: DensityMatrix,
    decomposition: LindbladDecomposition,
    t_final: float,
    n_traj: int,
    seed: int,
    *,
    omega0_tilde: float = 0.0,
    n_points: int = 101,
    step_bound: float = JUMP_STEP_BOUND,
    chunk_size: int = 256,
) -> TrajectoryEnsemble:
    """Quantum-jump unraveling with channels ``sqrt(lambda_i) L_i``.

    Uses first-order jump decisions with ``sum(lambda) * dt <= step_bound``
    and exact no-jump propagation under the effective Hamiltonian, followed
    by renormalization. Emissions are stamped at the end of the step in
    which they occur. Trajectory ``i`` draws from :func:`trajectory_rng`, so
    results do not depend on the number of workers.

    Raises:
        LindbladViolationError: a channel weight is negative.
    """
    if n_traj < 1:
        raise DomainError("n_traj must be >= 1")
    if not t_final > 0:
        raise DomainError("t_final must be > 0")
    if n_points < 2:
        raise DomainError("n_points must be >= 2")
    lambdas = decomposition.lambdas
    scale = max(abs(lam) for lam in lambdas)
    if any(lam < -1e-12 * scale for lam in lambdas):
        raise LindbladViolationError(f"negative dissipator eigenvalue in {lambdas}")
    jumps = [
        math.sqrt(max(lam, 0.0)) * op
        for lam, op in zip(lambdas, decomposition.operators)
        if lam > 0
    ]
    total_rate = sum(max(lam, 0.0) for lam in lambdas)
    intervals = n_points - 1
    per_interval = 1
    if total_rate > 0:
        per_interval = max(1, math.ceil(total_rate * t_final / (intervals * step_bound)))
    n_steps = intervals * per_interval
    dt = t_final / n_steps
    h_eff = omega0_tilde * SIGMA_3
    for J in jumps:
        h_eff = h_eff - 0.5j * (J.conj().T @ J)
    propagator = expm(-1j * h_eff * dt)
    record_steps = [k * per_interval for k in range(n_points)]

    chunks = [list(range(s, min(s + chunk_size, n_traj))) for s in range(0, n_traj, chunk_size)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(
            lambda idx: _run_chunk(idx, seed, rho0, jumps, propagator, dt, n_steps, record_steps),
            chunks,
        ))
    sums = sum(r[0] for r in results)
    sq22 = sum(r[1] for r in results)
    emissions = [rec for r in results for rec in r[2]]
    mean = sums / n_traj
    rho22 = mean[:, 1].real
    var = np.clip(sq22 / n_traj - rho22**2, 0.0, None)
    stderr = np.sqrt(var / max(n_traj - 1, 1))
    times = np.array(record_steps) * dt
    return TrajectoryEnsemble(
        times=times,
        rho11=mean[:, 0].real,
        rho22=rho22,
        rho12=mean[:, 2],
        rho22_stderr=stderr,
        emissions=emissions,
        dt=dt,
    )


EMISSION_COLUMNS = ("trajectory_id", "time_s", "channel")


def emissions_to_csv(emissions: Sequence[Sequence[EmissionRecord]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EMISSION_COLUMNS)
    for traj_id, records in enumerate(emissions):
        for rec in records:
            writer.writerow([traj_id, repr(float(rec.time)), rec.channel])
    return buf.getvalue()
