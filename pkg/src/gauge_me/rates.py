"""Transition rates ``A_pm`` and cross coefficient ``B`` of the master equation.

Integrals are evaluated in the dimensionless mode frequency
``x = omega_k / omega0`` with ``tau = omega0 * delta_t``:

    A_pm = 2 Gamma / (pi tau) * int_a^b f_pm(x) sin^2((1 pm x) tau / 2) dx
    B    = -2 Gamma / (pi tau) * exp(-i tau) * D
           * int_a^b x^2 u_plus u_minus / (1 - x^2)
                     * sin((1 + x) tau / 2) sin((1 - x) tau / 2) dx

where ``D = d1^2 + d2^2 + d3^2`` for the normalized dipole. For optical
transitions ``tau`` is of order 1e7 and the integration range spans 1e4 in
``x``, so the oscillating factors are resolved only inside a window around
the resonance ``x = 1``; outside it they are replaced by their mean.
"""

from __future__ import annotations

import math
import numbers
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import constants, integrate

from .errors import DomainError, QuadratureError, UnsupportedGaugeError
from .gauge import DimensionlessGauge, Gauge, GaugeKind, _check_sign

#: Upper cut-off used whenever none is given (Bohr-radius scale), rad/s.
DEFAULT_OMEGA_MAX = 3.7e19

#: Gamma * delta_t above this value is flagged as non-perturbative.
PERTURBATIVE_LIMIT = 0.1

#: Minimum omega0 * delta_t for which the rate integrals are evaluated.
MIN_OMEGA0_DT = 100.0

DEFAULT_HALF_PERIODS = 1000
DEFAULT_RTOL = 1e-6


class PerturbativeValidityWarning(UserWarning):
    """Gamma * delta_t is not small; second order perturbation theory is doubtful."""


@dataclass(frozen=True)
class PhysicalParams:
    """Atom, environment and cut-off parameters.

    Attributes:
        omega0: Bare transition frequency (rad/s).
        gamma: Spontaneous decay rate (1/s).
        delta_t: Environmental response time (s).
        omega_min: Lower mode cut-off (rad/s).
        omega_max: Upper mode cut-off (rad/s).
        omega0_tilde: Renormalized frequency used by the dynamics (rad/s);
            ``None`` means ``omega0``.
        dipole_factor: ``d1^2 + d2^2 + d3^2`` of the normalized dipole.
    """

    omega0: float
    gamma: float
    delta_t: float
    omega_min: float = 0.0
    omega_max: float = DEFAULT_OMEGA_MAX
    omega0_tilde: float | None = None
    dipole_factor: complex = 1.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise DomainError("invalid physical parameters: " + "; ".join(problems))
        if not self.perturbative:
            warnings.warn(
                f"gamma * delta_t = {self.gamma * self.delta_t:.3g} is not << 1",
                PerturbativeValidityWarning,
                stacklevel=3,
            )

    def violations(self) -> list[str]:
        out = []
        for name in ("omega0", "gamma", "delta_t", "omega_min", "omega_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
                out.append(f"{name} must be a finite real number")
        if out:
            return out
        if self.omega0 <= 0:
            out.append("omega0 must be > 0")
        if self.gamma <= 0:
            out.append("gamma must be > 0")
        if self.delta_t <= 0:
            out.append("delta_t must be > 0")
        if self.omega_min < 0:
            out.append("omega_min must be >= 0")
        if self.omega_max < self.omega_min:
            out.append("omega_max must be >= omega_min")
        if self.omega0_tilde is not None and not (
            math.isfinite(self.omega0_tilde) and self.omega0_tilde > 0
        ):
            out.append("omega0_tilde must be finite and > 0")
        d = complex(self.dipole_factor)
        if not (math.isfinite(d.real) and math.isfinite(d.imag)):
            out.append("dipole_factor must be finite")
        elif abs(d) > 1 + 1e-12:
            out.append("|dipole_factor| must be <= 1")
        return out

    @property
    def omega_dynamics(self) -> float:
        return self.omega0 if self.omega0_tilde is None else self.omega0_tilde

    @property
    def tau(self) -> float:
        """Dimensionless ``omega0 * delta_t``."""
        return self.omega0 * self.delta_t

    @property
    def perturbative(self) -> bool:
        return self.gamma * self.delta_t <= PERTURBATIVE_LIMIT

    def with_(self, **changes) -> PhysicalParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PerturbativeValidityWarning)
            return replace(self, **changes)


@dataclass(frozen=True)
class RateSet:
    A_minus: float
    A_plus: float
    B: complex
    omega0_tilde: float


@dataclass(frozen=True)
class RateIntegral:
    """A rate together with its accuracy diagnostics.

    ``abserr`` is the quadrature error estimate. ``oscillation_bound``
    bounds the oscillatory remainder dropped by the mean-value substitution
    outside the resonant window.
    """

    value: float | complex
    abserr: float
    oscillation_bound: float


# --- dipole conversions ---------------------------------------------------

_GAMMA_PER_D2 = constants.e**2 / (3 * math.pi * constants.epsilon_0 * constants.hbar * constants.c**3)


def gamma_from_dipole(omega0: float, dipole: float) -> float:
    """Spontaneous decay rate for transition frequency ``omega0`` and ``|d|`` in metres."""
    if not (omega0 > 0 and dipole > 0):
        raise DomainError("omega0 and dipole must be positive")
    return _GAMMA_PER_D2 * omega0**3 * dipole**2


def dipole_from_gamma(omega0: float, gamma: float) -> float:
    """Inverse of :func:`gamma_from_dipole`; returns ``|d|`` in metres."""
    if not (omega0 > 0 and gamma > 0):
        raise DomainError("omega0 and gamma must be positive")
    return math.sqrt(gamma / (_GAMMA_PER_D2 * omega0**3))


# --- quadrature machinery -------------------------------------------------

@lru_cache(maxsize=None)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def _gauss_segments(func, edges, orders=(24, 16)):
    """Composite Gauss-Legendre over consecutive ``edges``.

    Returns the high-order value and the difference to the low-order one
    as an error estimate.
    """
    lo, hi = edges[:-1, None], edges[1:, None]
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    results = []
    for order in orders:
        nodes, weights = _legendre(order)
        x = mid + half * nodes
        results.append(np.sum(func(x) * weights * half))
    return results[0], abs(results[0] - results[1])


def _resonant_edges(a, b, tau, n_half_periods):
    """Segment edges at the zeros of ``sin((1 - x) tau / 2)`` inside the window."""
    period = 2 * math.pi / tau
    w = n_half_periods * math.pi / tau
    lo, hi = max(a, 1 - w), min(b, 1 + w)
    if not lo < hi:
        return None
    m_lo = math.ceil((lo - 1) / period)
    m_hi = math.floor((hi - 1) / period)
    inner = 1 + period * np.arange(m_lo, m_hi + 1)
    edges = np.concatenate(([lo], inner[(inner > lo) & (inner < hi)], [hi]))
    return edges


_GEOM = np.geomspace(1e-12, 1e9, 90)


def _breakpoints(a, b, centre=None):
    pts = [_GEOM]
    if centre is not None:
        pts += [centre - _GEOM, centre + _GEOM]
    pts = np.concatenate(pts)
    pts = np.unique(pts[(pts > a) & (pts < b)])
    return np.concatenate(([a], pts, [b]))


def _integrate_smooth(func, a, b, centre=None, epsrel=1e-10):
    """Adaptive quadrature of a smooth, non-oscillating envelope on ``[a, b]``.

    Breakpoints are placed geometrically in ``x`` and in the distance to
    ``centre`` so that power-law growth and near-pole behaviour are both
    resolved.
    """
    if not a < b:
        return 0.0, 0.0, np.array([a, b])
    edges = _breakpoints(a, b, centre)
    total = 0.0
    abserr = 0.0
    failures = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, err, info = integrate.quad(
            lambda t: float(func(t)), lo, hi, epsabs=0.0, epsrel=epsrel, limit=200,
            full_output=1,
        )[:3]
        total += value
        abserr += err
        if not math.isfinite(value):
            failures.append((lo, hi))
    if failures or not math.isfinite(total):
        raise QuadratureError(
            f"non-finite envelope integral on {failures or [(a, b)]}", error_estimate=math.inf
        )
    return total, abserr, edges


def _oscillation_remainder(func, edges, tau):
    """Bound ``|int e(x) cos(tau x + c) dx|`` by ``(|e(p)| + |e(q)| + TV(e)) / tau``."""
    if len(edges) < 2 or edges[0] >= edges[-1]:
        return 0.0
    samples = [edges]
    for lo, hi in zip(edges[:-1], edges[1:]):
        samples.append(np.linspace(lo, hi, 9)[1:-1])
    x = np.sort(np.concatenate(samples))
    e = np.asarray(func(x), dtype=float)
    tv = float(np.sum(np.abs(np.diff(e))))
    return (abs(e[0]) + abs(e[-1]) + tv) / tau


# rates below this fraction of gamma are resolved in absolute terms only
ABSOLUTE_FLOOR = 1e-12


def _check_converged(value, abserr, rtol, what, gamma):
    if not math.isfinite(abserr) or abserr > max(rtol * abs(value), ABSOLUTE_FLOOR * gamma):
        raise QuadratureError(
            f"{what}: estimated error {abserr:.3g} exceeds rtol {rtol:g} of {abs(value):.3g}",
            error_estimate=abserr,
        )


def _require_tau(params):
    if params.tau < MIN_OMEGA0_DT:
        raise DomainError(
            f"omega0 * delta_t = {params.tau:.3g} < {MIN_OMEGA0_DT:g}; "
            "the resonant window is not narrow"
        )


# --- transition rates -----------------------------------------------------

def transition_rate_detailed(
    params: PhysicalParams,
    gauge: Gauge,
    sign: int,
    *,
    n_half_periods: int = DEFAULT_HALF_PERIODS,
    rtol: float = DEFAULT_RTOL,
) -> RateIntegral:
    """Transition rate ``A_plus`` (``sign=+1``) or ``A_minus`` (``sign=-1``).

    ``A_minus`` integrates the sinc-squared resonance within
    ``|x - 1| <= n_half_periods * pi / tau`` period by period and replaces
    ``sin^2`` by ``1/2`` outside. ``A_plus`` has no in-band resonance and
    uses the mean-value form throughout.

    Raises:
        DomainError: ``omega0 * delta_t < 100``.
        QuadratureError: the achieved error estimate exceeds ``rtol``.
    """
    sign = _check_sign(sign)
    if sign > 0 and gauge.kind is GaugeKind.ROTATING_WAVE:
        return RateIntegral(0.0, 0.0, 0.0)
    _require_tau(params)
    a = params.omega_min / params.omega0
    b = params.omega_max / params.omega0
    if a == b:
        return RateIntegral(0.0, 0.0, 0.0)
    tau = params.tau
    dg = DimensionlessGauge(gauge, params.omega0)
    prefactor = 2.0 * params.gamma / (math.pi * tau)

    if sign > 0:
        def envelope(x):
            return dg.weight_numerator(1, x) / (1.0 + x) ** 2

        value, err, edges = _integrate_smooth(lambda x: 0.5 * envelope(x), a, b)
        osc = 0.5 * _oscillation_remainder(envelope, edges, tau)
        result = RateIntegral(prefactor * value, prefactor * err, prefactor * osc)
        _check_converged(result.value, result.abserr, rtol, "A_plus", params.gamma)
        return result

    def envelope(x):
        return dg.weight_numerator(-1, x) / (1.0 - x) ** 2

    def resonant(x):
        theta = 0.5 * (1.0 - x) * tau
        return dg.weight_numerator(-1, x) * (0.5 * tau) ** 2 * np.sinc(theta / math.pi) ** 2

    value = err = osc = 0.0
    edges = _resonant_edges(a, b, tau, n_half_periods)
    w = n_half_periods * math.pi / tau
    if edges is not None:
        v, e = _gauss_segments(resonant, edges)
        value += v
        err += e
    for lo, hi in ((a, min(b, 1 - w)), (max(a, 1 + w), b)):
        if lo < hi:
            v, e, tail_edges = _integrate_smooth(lambda x: 0.5 * envelope(x), lo, hi, centre=1.0)
            value += v
            err += e
            osc += 0.5 * _oscillation_remainder(envelope, tail_edges, tau)
    result = RateIntegral(prefactor * value, prefactor * err, prefactor * osc)
    _check_converged(result.value, result.abserr, rtol, "A_minus", params.gamma)
    return result


def transition_rate(params: PhysicalParams, gauge: Gauge, sign: int, **kwargs) -> float:
    """Transition rate in 1/s; see :func:`transition_rate_detailed`."""
    return float(transition_rate_detailed(params, gauge, sign, **kwargs).value)


def a_plus_closed_form(params: PhysicalParams, gauge: Gauge) -> float:
    """Closed-form ``A_plus`` with ``sin^2`` replaced by ``1/2``.

    Only available for minimal coupling and multipolar gauges.
    """
    if gauge.kind is GaugeKind.MINIMAL_COUPLING:
        def antiderivative(x):
            return 1.0 / x + math.log(x)
    elif gauge.kind is GaugeKind.MULTIPOLAR:
        def antiderivative(x):
            return 1.0 / x - 3.0 * x + 0.5 * x * x + 3.0 * math.log(x)
    else:
        raise UnsupportedGaugeError(
            f"no closed form for A_plus in the {gauge.name} gauge"
        )
    _require_tau(params)
    x1 = params.omega_min / params.omega0 + 1.0
    x2 = params.omega_max / params.omega0 + 1.0
    bracket = antiderivative(x2) - antiderivative(x1)
    return params.gamma / (math.pi * params.omega0) * bracket / params.delta_t


# --- cross coefficient ----------------------------------------------------

def cross_coefficient_B_detailed(
    params: PhysicalParams,
    gauge: Gauge,
    *,
    n_half_periods: int = DEFAULT_HALF_PERIODS,
    rtol: float = DEFAULT_RTOL,
) -> RateIntegral:
    """Cross coefficient ``B`` with its accuracy diagnostics.

    The product of sines is integrated exactly (sinc-factorized) inside the
    resonant window; outside it ``sin(..) sin(..) = (cos(x tau) - cos tau)/2``
    is replaced by ``-cos(tau)/2``.
    """
    if gauge.kind is GaugeKind.ROTATING_WAVE:
        return RateIntegral(0j, 0.0, 0.0)
    _require_tau(params)
    a = params.omega_min / params.omega0
    b = params.omega_max / params.omega0
    if a == b:
        return RateIntegral(0j, 0.0, 0.0)
    tau = params.tau
    dg = DimensionlessGauge(gauge, params.omega0)

    def resonant(x):
        theta = 0.5 * (1.0 - x) * tau
        return (
            dg.cross_numerator(x) / (1.0 + x)
            * (0.5 * tau) * np.sinc(theta / math.pi)
            * np.sin(0.5 * (1.0 + x) * tau)
        )

    def envelope(x):
        return dg.cross_numerator(x) / (1.0 - x * x)

    value = err = osc = 0.0
    edges = _resonant_edges(a, b, tau, n_half_periods)
    w = n_half_periods * math.pi / tau
    if edges is not None:
        v, e = _gauss_segments(resonant, edges)
        value += v
        err += e
    half_cos = -0.5 * math.cos(tau)
    for lo, hi in ((a, min(b, 1 - w)), (max(a, 1 + w), b)):
        if lo < hi:
            v, e, tail_edges = _integrate_smooth(envelope, lo, hi, centre=1.0)
            value += half_cos * v
            err += abs(half_cos) * e
            osc += 0.5 * _oscillation_remainder(envelope, tail_edges, tau)
    scale = 2.0 * params.gamma / (math.pi * tau)
    prefactor = -scale * np.exp(-1j * tau) * complex(params.dipole_factor)
    result = RateIntegral(complex(prefactor * value), scale * err, scale * osc)
    _check_converged(abs(result.value), result.abserr, rtol, "B", params.gamma)
    return result


def cross_coefficient_B(params: PhysicalParams, gauge: Gauge, **kwargs) -> complex:
    """Cross coefficient ``B`` in 1/s (complex)."""
    return complex(cross_coefficient_B_detailed(params, gauge, **kwargs).value)


def principal_value_cross_integral(params: PhysicalParams, gauge: Gauge) -> float:
    """``PV int_a^b x^2 u_plus u_minus / (1 - x^2) dx`` (dimensionless)."""
    if gauge.kind is GaugeKind.ROTATING_WAVE:
        return 0.0
    a = params.omega_min / params.omega0
    b = params.omega_max / params.omega0
    if a == b:
        return 0.0
    if a == 1.0 or b == 1.0:
        raise DomainError("principal value diverges with a cut-off at omega0")
    dg = DimensionlessGauge(gauge, params.omega0)

    def envelope(x):
        return dg.cross_numerator(x) / (1.0 - x * x)

    if not a < 1.0 < b:
        value, _, _ = _integrate_smooth(envelope, a, b, centre=1.0)
        return value
    delta = min(0.5, 1.0 - a, b - 1.0)
    pv, _ = integrate.quad(
        lambda x: -float(dg.cross_numerator(x)) / (1.0 + x),
        1.0 - delta, 1.0 + delta, weight="cauchy", wvar=1.0, epsabs=0.0, epsrel=1e-11,
    )
    left, _, _ = _integrate_smooth(envelope, a, 1.0 - delta, centre=1.0)
    right, _, _ = _integrate_smooth(envelope, 1.0 + delta, b, centre=1.0)
    return left + pv + right


def cross_coefficient_B_approx(params: PhysicalParams, gauge: Gauge) -> complex:
    """Approximate ``B`` dropping the ``cos(x tau)`` oscillation everywhere.

    The remaining integral has a pole at ``x = 1`` and is taken as a
    principal value. This is an approximation; prefer
    :func:`cross_coefficient_B`.
    """
    _require_tau(params)
    tau = params.tau
    pv = principal_value_cross_integral(params, gauge)
    return complex(
        params.gamma / (math.pi * tau) * np.exp(-1j * tau) * math.cos(tau)
        * complex(params.dipole_factor) * pv
    )


def cross_coefficient_B_bound(params: PhysicalParams, gauge: Gauge) -> float:
    """Upper bound on ``|B|`` from the approximate form with ``|cos tau| = |D| = 1``."""
    _require_tau(params)
    return params.gamma / (math.pi * params.tau) * abs(principal_value_cross_integral(params, gauge))


def rate_set(params: PhysicalParams, gauge: Gauge, **kwargs) -> RateSet:
    """All master-equation coefficients for ``params`` in ``gauge``."""
    return RateSet(
        A_minus=transition_rate(params, gauge, -1, **kwargs),
        A_plus=transition_rate(params, gauge, +1, **kwargs),
        B=cross_coefficient_B(params, gauge, **kwargs),
        omega0_tilde=params.omega_dynamics,
    )
