"""Gauge representations of the two-level atom-field coupling.

A gauge is fixed by a real function ``alpha(omega_k)``. The coupling of the
atomic raising operator to the creation/annihilation operator of a field mode
of frequency ``omega_k`` is scaled by

    u_minus = (1 - alpha) sqrt(omega0/omega_k) + alpha sqrt(omega_k/omega0)
    u_plus  = (1 - alpha) sqrt(omega0/omega_k) - alpha sqrt(omega_k/omega0)

and the rates integrate the spectral weights
``f_pm = (u_pm omega_k)**2 / (omega0 pm omega_k)**2``.

All functions accept scalars or numpy arrays for ``omega_k``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, SingularPointError

AlphaFunction = Callable[[np.ndarray], np.ndarray]


class GaugeKind(str, enum.Enum):
    MINIMAL_COUPLING = "minimal"
    MULTIPOLAR = "multipolar"
    ROTATING_WAVE = "rotating"
    CUSTOM = "custom"


_ALIASES = {
    "minimal": GaugeKind.MINIMAL_COUPLING,
    "minimal_coupling": GaugeKind.MINIMAL_COUPLING,
    "minimalcoupling": GaugeKind.MINIMAL_COUPLING,
    "min": GaugeKind.MINIMAL_COUPLING,
    "multipolar": GaugeKind.MULTIPOLAR,
    "mult": GaugeKind.MULTIPOLAR,
    "pzw": GaugeKind.MULTIPOLAR,
    "rotating": GaugeKind.ROTATING_WAVE,
    "rotating_wave": GaugeKind.ROTATING_WAVE,
    "rotatingwave": GaugeKind.ROTATING_WAVE,
    "rot": GaugeKind.ROTATING_WAVE,
    "rwa": GaugeKind.ROTATING_WAVE,
    "custom": GaugeKind.CUSTOM,
}


@dataclass(frozen=True)
class Gauge:
    """A gauge representation.

    ``alpha`` is only set for custom gauges. ``complement`` optionally
    gives ``1 - alpha`` without cancellation. ``family`` is the textual
    family string a custom gauge was built from (see
    :func:`custom_gauge`); it is what equality and serialization use.
    """

    kind: GaugeKind
    alpha: AlphaFunction | None = field(default=None, compare=False, repr=False)
    family: str | None = None
    complement: AlphaFunction | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind is GaugeKind.CUSTOM and self.alpha is None:
            raise DomainError("custom gauge requires an alpha function")

    @property
    def name(self) -> str:
        if self.kind is GaugeKind.CUSTOM:
            return f"custom({self.family})" if self.family else "custom"
        return self.kind.value


MINIMAL_COUPLING = Gauge(GaugeKind.MINIMAL_COUPLING)
MULTIPOLAR = Gauge(GaugeKind.MULTIPOLAR)
ROTATING_WAVE = Gauge(GaugeKind.ROTATING_WAVE)
NAMED_GAUGES = (MINIMAL_COUPLING, MULTIPOLAR, ROTATING_WAVE)


def parse_gauge(name: str) -> Gauge:
    """Look up a named gauge (``minimal``, ``multipolar``, ``rotating``)."""
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    kind = _ALIASES.get(key)
    if kind is None:
        raise DomainError(
            f"unknown gauge {name!r}; expected one of minimal, multipolar, rotating"
        )
    if kind is GaugeKind.CUSTOM:
        raise DomainError("custom gauges need an alpha family, see custom_gauge()")
    return Gauge(kind)


def custom_gauge(family: str, omega0: float) -> Gauge:
    """Build a custom gauge from a parametric family string.

    Supported families:

    ``constant:<a>``
        alpha(omega) = a (``constant:0`` is minimal coupling,
        ``constant:1`` multipolar).
    ``rotating[:<s>]``
        alpha(omega) = omega0 / (omega0 + s * omega), default ``s = 1``
        which reproduces the rotating wave gauge.
    ``blend:<w>``
        alpha(omega) = w * omega0 / (omega0 + omega), interpolating between
        minimal coupling (w = 0) and rotating wave (w = 1).
    """
    _check_frequency(omega0, "omega0")
    head, _, arg = family.strip().partition(":")
    head = head.strip().lower()
    try:
        value = float(arg) if arg.strip() else None
    except ValueError:
        raise DomainError(f"bad parameter in alpha family {family!r}") from None
    if value is not None and not math.isfinite(value):
        raise DomainError(f"non-finite parameter in alpha family {family!r}")

    if head == "constant":
        if value is None:
            raise DomainError("constant alpha family needs a value, e.g. constant:0.5")
        a = value

        def alpha(omega_k):
            return np.full_like(np.asarray(omega_k, dtype=float), a)

        def complement(omega_k):
            return np.full_like(np.asarray(omega_k, dtype=float), 1.0 - a)

    elif head == "rotating":
        s = 1.0 if value is None else value
        if s <= 0:
            raise DomainError("rotating alpha family needs a positive scale")

        def alpha(omega_k):
            return omega0 / (omega0 + s * np.asarray(omega_k, dtype=float))

        def complement(omega_k):
            sw = s * np.asarray(omega_k, dtype=float)
            return sw / (omega0 + sw)

    elif head == "blend":
        if value is None:
            raise DomainError("blend alpha family needs a weight, e.g. blend:0.5")
        w = value

        def alpha(omega_k):
            return w * omega0 / (omega0 + np.asarray(omega_k, dtype=float))

        def complement(omega_k):
            omega_k = np.asarray(omega_k, dtype=float)
            return ((1.0 - w) * omega0 + omega_k) / (omega0 + omega_k)

    else:
        raise DomainError(
            f"unknown alpha family {head!r}; expected constant, rotating or blend"
        )
    canonical = head if value is None else f"{head}:{value!r}"
    return Gauge(GaugeKind.CUSTOM, alpha=alpha, family=canonical, complement=complement)


def _check_frequency(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and positive")


def alpha_of(gauge: Gauge, omega0: float, omega_k):
    """Gauge function alpha at mode frequency ``omega_k`` (rad/s)."""
    _check_frequency(omega0, "omega0")
    _check_frequency(omega_k, "omega_k")
    return _alpha_unchecked(gauge, omega0, omega_k)


def _alpha_unchecked(gauge, omega0, omega_k):
    omega_k = np.asarray(omega_k, dtype=float)
    kind = gauge.kind
    if kind is GaugeKind.MINIMAL_COUPLING:
        out = np.zeros_like(omega_k)
    elif kind is GaugeKind.MULTIPOLAR:
        out = np.ones_like(omega_k)
    elif kind is GaugeKind.ROTATING_WAVE:
        out = omega0 / (omega0 + omega_k)
    else:
        out = np.asarray(gauge.alpha(omega_k), dtype=float)
        if out.shape != omega_k.shape:
            out = np.broadcast_to(out, omega_k.shape).copy()
        if not np.all(np.isfinite(out)):
            raise DomainError(f"alpha of {gauge.name} is not finite")
    return out[()] if out.ndim == 0 else out


def _complement_unchecked(gauge, omega0, omega_k, a):
    """``1 - alpha``, exact for the rotating wave gauge where it would cancel."""
    if gauge.kind is GaugeKind.ROTATING_WAVE:
        omega_k = np.asarray(omega_k, dtype=float)
        return omega_k / (omega0 + omega_k)
    if gauge.kind is GaugeKind.CUSTOM and gauge.complement is not None:
        out = np.asarray(gauge.complement(np.asarray(omega_k, dtype=float)), dtype=float)
        return np.broadcast_to(out, np.shape(a))
    return 1.0 - a


class CouplingCoefficients(NamedTuple):
    u_minus: float | np.ndarray
    u_plus: float | np.ndarray


def coupling_coefficients(gauge: Gauge, omega0: float, omega_k) -> CouplingCoefficients:
    """Coefficients ``(u_minus, u_plus)`` at mode frequency ``omega_k``.

    For the rotating wave gauge ``u_plus`` is returned as exact zeros.
    """
    a = alpha_of(gauge, omega0, omega_k)
    r = np.sqrt(np.asarray(omega_k, dtype=float) / omega0)
    direct = _complement_unchecked(gauge, omega0, omega_k, a) / r
    cross = a * r
    u_minus = direct + cross
    if gauge.kind is GaugeKind.ROTATING_WAVE:
        u_plus = np.zeros_like(u_minus)
    else:
        u_plus = direct - cross
    return CouplingCoefficients(u_minus, u_plus)


def spectral_weight(gauge: Gauge, sign: int, omega0: float, omega_k):
    """Spectral weight ``f_pm(omega_k) = (u_pm omega_k)^2 / (omega0 pm omega_k)^2``.

    Args:
        sign: ``+1`` for the counter-rotating weight ``f_plus``, ``-1`` for
            ``f_minus``.

    Raises:
        SingularPointError: ``sign == -1`` and some ``omega_k == omega0``.
    """
    sign = _check_sign(sign)
    omega_k_arr = np.asarray(omega_k, dtype=float)
    if sign < 0 and np.any(omega_k_arr == omega0):
        raise SingularPointError(
            "f_minus has a removable singularity at omega_k = omega0; "
            "integrate the sinc form instead"
        )
    u_minus, u_plus = coupling_coefficients(gauge, omega0, omega_k_arr)
    u = u_plus if sign > 0 else u_minus
    out = (u * omega_k_arr) ** 2 / (omega0 + sign * omega_k_arr) ** 2
    return out[()] if np.ndim(out) == 0 else out


def _alpha_dimensionless(gauge, x):
    kind = gauge.kind
    if kind is GaugeKind.MINIMAL_COUPLING:
        return np.zeros_like(x)
    if kind is GaugeKind.MULTIPOLAR:
        return np.ones_like(x)
    if kind is GaugeKind.ROTATING_WAVE:
        return 1.0 / (1.0 + x)
    raise DomainError("custom gauges need omega0; use DimensionlessGauge")


def _check_sign(sign):
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise DomainError(f"sign must be +1 or -1, got {sign!r}")


@dataclass(frozen=True)
class DimensionlessGauge:
    """A gauge with its alpha expressed in ``x = omega_k/omega0``.

    Rate integrals work in ``x``; custom alpha functions take physical
    frequencies, so they are bound to a particular ``omega0`` here.
    """

    gauge: Gauge
    omega0: float

    def alpha(self, x):
        x = np.asarray(x, dtype=float)
        if self.gauge.kind is GaugeKind.CUSTOM:
            out = np.asarray(self.gauge.alpha(x * self.omega0), dtype=float)
            return np.broadcast_to(out, x.shape)
        return _alpha_dimensionless(self.gauge, x)

    def complement(self, x):
        """``1 - alpha(x)``."""
        x = np.asarray(x, dtype=float)
        return _complement_unchecked(self.gauge, self.omega0, x * self.omega0, self.alpha(x))

    def weight_numerator(self, sign, x):
        x = np.asarray(x, dtype=float)
        if sign > 0 and self.gauge.kind is GaugeKind.ROTATING_WAVE:
            return np.zeros_like(x)
        a = self.alpha(x)
        return x * (self.complement(x) - sign * a * x) ** 2

    def cross_numerator(self, x):
        x = np.asarray(x, dtype=float)
        if self.gauge.kind is GaugeKind.ROTATING_WAVE:
            return np.zeros_like(x)
        a = self.alpha(x)
        return x * (self.complement(x) ** 2 - (a * x) ** 2)
