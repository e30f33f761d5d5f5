"""Experimental parameter presets and scenario files.

A scenario file is UTF-8 text with one ``key = value`` pair per line;
``#`` starts a comment. Recognised keys::

    name            free text
    provenance      free text
    gauge           minimal | multipolar | rotating | custom
    alpha_family    family string for custom gauges, e.g. constant:0.5
    omega0          transition frequency, rad/s      (or wavelength_nm)
    wavelength_nm   transition wavelength, nm        (or omega0)
    omega0_tilde    renormalized frequency, rad/s    (optional)
    gamma           decay rate, 1/s                  (or lifetime_s)
    lifetime_s      excited-state lifetime, s        (or gamma)
    delta_t_s       environmental response time, s
    omega_min       lower cut-off, rad/s             (default 0)
    omega_max       upper cut-off, rad/s             (default 3.7e19)
    dipole_factor_re, dipole_factor_im               (default 1, 0)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from scipy import constants

from .errors import DomainError, ScenarioError
from .gauge import Gauge, GaugeKind, MINIMAL_COUPLING, custom_gauge, parse_gauge
from .rates import DEFAULT_OMEGA_MAX, PerturbativeValidityWarning, PhysicalParams

KEYS = (
    "name", "provenance", "gauge", "alpha_family", "omega0", "wavelength_nm",
    "omega0_tilde", "gamma", "lifetime_s", "delta_t_s", "omega_min", "omega_max",
    "dipole_factor_re", "dipole_factor_im",
)
_NUMERIC = {
    "omega0", "wavelength_nm", "omega0_tilde", "gamma", "lifetime_s", "delta_t_s",
    "omega_min", "omega_max", "dipole_factor_re", "dipole_factor_im",
}


@dataclass(frozen=True)
class Scenario:
    name: str
    params: PhysicalParams
    gauge: Gauge
    provenance: str = ""

    def with_gauge(self, gauge: Gauge) -> Scenario:
        return Scenario(self.name, self.params, gauge, self.provenance)


def omega_from_wavelength(wavelength_nm: float) -> float:
    """Angular frequency ``2 pi c / lambda`` for a wavelength in nm."""
    if not wavelength_nm > 0:
        raise DomainError("wavelength must be positive")
    return 2.0 * math.pi * constants.c / (wavelength_nm * 1e-9)


def gamma_from_lifetime(lifetime_s: float) -> float:
    if not lifetime_s > 0:
        raise DomainError("lifetime must be positive")
    return 1.0 / lifetime_s


_PRESETS = {
    "lab_ion": dict(
        omega0=3.7e15, gamma=1e7, delta_t=1e-8,
        provenance="optical transition (500 nm), detector walls 3 m away, Bohr-radius cut-off",
    ),
    "lab_ion_close": dict(
        omega0=3.7e15, gamma=1e7, delta_t=3e-10,
        provenance="lab_ion with the photon-absorbing environment 10 cm away",
    ),
    "quantum_dot": dict(
        omega0=2e15, gamma=1e9, delta_t=3e-10,
        provenance="InAs/GaAs quantum dot, T1 = 760 ps at about 950 nm, rounded values",
    ),
    "colour_centre": dict(
        omega0=2.6e15, gamma=1e9, delta_t=3e-10,
        provenance="chromium colour centre in diamond, 1 ns lifetime at 710 nm, rounded values",
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> Scenario:
    """One of the curated experimental scenarios, in the minimal coupling gauge.

    ``quantum_dot`` and ``colour_centre`` have ``gamma * delta_t = 0.3`` and
    emit a :class:`PerturbativeValidityWarning`.
    """
    try:
        entry = _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
    params = PhysicalParams(
        omega0=entry["omega0"], gamma=entry["gamma"], delta_t=entry["delta_t"],
        omega_min=0.0, omega_max=DEFAULT_OMEGA_MAX,
    )
    return Scenario(name, params, MINIMAL_COUPLING, entry["provenance"])


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; see the module docstring for the format."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ScenarioError(f"{source}: expected 'key = value'", line=lineno)
        if key not in KEYS:
            raise ScenarioError(f"{source}: unknown key", line=lineno, field=key)
        if key in entries:
            raise ScenarioError(f"{source}: duplicate key", line=lineno, field=key)
        entries[key] = (value, lineno)

    numbers: dict[str, float] = {}
    for key in _NUMERIC & entries.keys():
        value, lineno = entries[key]
        try:
            numbers[key] = float(value)
        except ValueError:
            raise ScenarioError(
                f"{source}: not a number: {value!r}", line=lineno, field=key
            ) from None
        if not math.isfinite(numbers[key]):
            raise ScenarioError(f"{source}: value must be finite", line=lineno, field=key)

    def line_of(key):
        return entries[key][1] if key in entries else None

    def exactly_one(a, b):
        if a in numbers and b in numbers:
            raise ScenarioError(f"{source}: give only one of {a}, {b}", line=line_of(b), field=b)
        if a not in numbers and b not in numbers:
            raise ScenarioError(f"{source}: missing required field (or {b})", field=a)

    exactly_one("omega0", "wavelength_nm")
    exactly_one("gamma", "lifetime_s")
    if "delta_t_s" not in numbers:
        raise ScenarioError(f"{source}: missing required field", field="delta_t_s")

    try:
        if "omega0" in numbers:
            omega0 = numbers["omega0"]
        else:
            omega0 = omega_from_wavelength(numbers["wavelength_nm"])
        if "gamma" in numbers:
            gamma = numbers["gamma"]
        else:
            gamma = gamma_from_lifetime(numbers["lifetime_s"])
    except DomainError as exc:
        field = "wavelength_nm" if "wavelength_nm" in numbers else "lifetime_s"
        raise ScenarioError(f"{source}: {exc}", line=line_of(field), field=field) from None

    try:
        params = PhysicalParams(
            omega0=omega0,
            gamma=gamma,
            delta_t=numbers["delta_t_s"],
            omega_min=numbers.get("omega_min", 0.0),
            omega_max=numbers.get("omega_max", DEFAULT_OMEGA_MAX),
            omega0_tilde=numbers.get("omega0_tilde"),
            dipole_factor=complex(
                numbers.get("dipole_factor_re", 1.0), numbers.get("dipole_factor_im", 0.0)
            ),
        )
    except DomainError as exc:
        raise ScenarioError(f"{source}: {exc}") from None

    gauge_name = entries.get("gauge", ("minimal", None))[0]
    try:
        if gauge_name.strip().lower() == "custom":
            if "alpha_family" not in entries:
                raise ScenarioError(
                    f"{source}: custom gauge needs alpha_family", line=line_of("gauge"),
                    field="alpha_family",
                )
            gauge = custom_gauge(entries["alpha_family"][0], omega0)
        else:
            gauge = parse_gauge(gauge_name)
    except DomainError as exc:
        field = "alpha_family" if gauge_name.strip().lower() == "custom" else "gauge"
        raise ScenarioError(f"{source}: {exc}", line=line_of(field), field=field) from None

    name = entries.get("name", (Path(source).stem, None))[0]
    provenance = entries.get("provenance", ("", None))[0]
    return Scenario(name, params, gauge, provenance)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, source=str(path))


def serialize_scenario(scenario: Scenario) -> str:
    """Scenario file text that :func:`parse_scenario` reads back unchanged."""
    p = scenario.params
    d = complex(p.dipole_factor)
    lines = [f"name = {scenario.name}"]
    if scenario.provenance:
        lines.append(f"provenance = {scenario.provenance}")
    lines.append(f"gauge = {scenario.gauge.kind.value}")
    if scenario.gauge.kind is GaugeKind.CUSTOM:
        lines.append(f"alpha_family = {scenario.gauge.family}")
    lines += [
        f"omega0 = {p.omega0!r}",
        f"gamma = {p.gamma!r}",
        f"delta_t_s = {p.delta_t!r}",
        f"omega_min = {float(p.omega_min)!r}",
        f"omega_max = {float(p.omega_max)!r}",
    ]
    if p.omega0_tilde is not None:
        lines.append(f"omega0_tilde = {p.omega0_tilde!r}")
    lines += [f"dipole_factor_re = {d.real!r}", f"dipole_factor_im = {d.imag!r}"]
    return "\n".join(lines) + "\n"


def resolve_scenario(ref: str) -> Scenario:
    """A preset name or a path to a scenario file."""
    if ref in _PRESETS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PerturbativeValidityWarning)
            return preset(ref)
    return load_scenario(ref)
