"""Sectioned run configuration.

Recognised sections and keys (all frequencies angular, rad/s)::

    [medium]     eta, omega_t, omega_p_over_omega_t, gamma_over_omega_t
    [atom]       omega_a | wavelength, dipole_magnitude, dipole_orientation,
                 temperature, levels, upper, lower
    [dipoles]    "n-k = dx, dy, dz" rows of a multi-level dipole table
    [motion]     z_a, speed, theta
    [sweep]      axis, start, stop, points
    [profile]    z_min, z_max, grid_points, detuning_span, n_z, gamma_free
    [quadrature] n_kappa, n_phi, xi_rel_tol, rel_tol, kappa_method

``theta`` is measured from +z (away from the surface), so theta = 0 recedes,
theta = pi approaches and theta = pi/2 moves along +x. Missing keys take the
defaults below and are listed in ``RunConfig.defaults_applied``.
"""
import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .atom import (
    CS_DIPOLE_MAGNITUDE,
    CS_WAVELENGTH,
    LevelScheme,
    dipole_vector,
    omega_from_wavelength,
)
from .errors import ConfigError
from .kernel import MotionState, QuadratureSpec
from .medium import (
    SAPPHIRE_ETA,
    SAPPHIRE_GAMMA_RATIO,
    SAPPHIRE_OMEGA_P_RATIO,
    SAPPHIRE_OMEGA_T,
    DielectricModel,
)
from scipy.constants import hbar

SWEEP_AXES = ("velocity", "angle", "frequency", "distance")

DEFAULTS = {
    "medium": {
        "eta": SAPPHIRE_ETA,
        "omega_t": SAPPHIRE_OMEGA_T,
        "omega_p_over_omega_t": SAPPHIRE_OMEGA_P_RATIO,
        "gamma_over_omega_t": SAPPHIRE_GAMMA_RATIO,
    },
    "atom": {
        "omega_a": omega_from_wavelength(CS_WAVELENGTH),
        "dipole_magnitude": CS_DIPOLE_MAGNITUDE,
        "dipole_orientation": "isotropic",
        "temperature": 0.0,
    },
    "motion": {"z_a": 10e-9, "speed": 0.0, "theta": 0.0},
    "sweep": {"axis": "velocity", "start": 0.0, "stop": 1000.0, "points": 11},
    "profile": {
        "z_min": 5e-9,
        "z_max": 1e-6,
        "grid_points": 4001,
        "detuning_span": 200.0,
        "n_z": 800,
        "gamma_free": 0.0,
    },
    "quadrature": {"n_kappa": 64, "n_phi": 128, "xi_rel_tol": 1e-8, "rel_tol": 1e-6,
                   "kappa_method": "auto"},
}

_ATOM_EXTRA = ("wavelength", "levels", "upper", "lower")
_INT_KEYS = {("sweep", "points"), ("profile", "grid_points"), ("profile", "n_z"),
             ("quadrature", "n_kappa"), ("quadrature", "n_phi"),
             ("atom", "upper"), ("atom", "lower")}
_DIPOLE_KEY = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    start: float
    stop: float
    points: int

    def values(self):
        return np.linspace(self.start, self.stop, self.points) if self.points else np.array([])


@dataclass(frozen=True)
class ProfileConfig:
    z_min: float
    z_max: float
    grid_points: int
    detuning_span: float
    n_z: int
    gamma_free: float


@dataclass
class RunConfig:
    medium: DielectricModel
    scheme: LevelScheme
    upper: int
    lower: int
    temperature: float
    motion: MotionState
    sweep: SweepConfig
    profile: ProfileConfig
    quadrature: QuadratureSpec
    effective: dict = field(default_factory=dict)
    defaults_applied: list = field(default_factory=list)

    @property
    def transition(self):
        return self.scheme.transition(self.upper, self.lower)

    @property
    def omega_a(self):
        return self.scheme.omega(self.upper, self.lower)


def _key_lines(text):
    """Map (section, key) -> 1-based line number by a light pre-scan."""
    lines, section = {}, None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            continue
        m = re.match(r"([^=:]+)[=:]", s)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def _read(text):
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any section", line=exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}",
                          line=exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"line {lineno}: cannot parse {exc.errors[0][1] if exc.errors else ''}",
                          line=lineno) from None
    return cp


def _number(section, key, raw, line, integer=False):
    try:
        value = int(raw) if integer else float(raw)
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"line {line}: {section}.{key} must be {kind}, got {raw!r}",
                          field=key, line=line) from None
    if not integer and not math.isfinite(value):
        raise ConfigError(f"line {line}: {section}.{key} must be finite", field=key, line=line)
    return value


def _orientation(raw, line):
    s = raw.strip()
    if "," in s:
        parts = [p.strip() for p in s.split(",")]
        try:
            vec = [float(p) for p in parts]
        except ValueError:
            vec = []
        if len(vec) != 3:
            raise ConfigError(f"line {line}: atom.dipole_orientation must be isotropic, x, y, z "
                              "or three comma-separated numbers", field="dipole_orientation",
                              line=line)
        return vec
    if s.lower() not in ("isotropic", "x", "y", "z"):
        raise ConfigError(f"line {line}: atom.dipole_orientation must be isotropic, x, y, z or a "
                          f"3-vector, got {raw!r}", field="dipole_orientation", line=line)
    return s.lower()


def _vector(raw, line, key):
    try:
        vec = [float(p) for p in raw.split(",")]
    except ValueError:
        vec = []
    if len(vec) != 3:
        raise ConfigError(f"line {line}: dipoles.{key} must be three comma-separated numbers",
                          field=key, line=line)
    return vec


def _fail(section, key, constraint, lines):
    line = lines.get((section, key))
    where = f"line {line}: " if line else ""
    raise ConfigError(f"{where}{section}.{key} {constraint}", field=key, line=line)


def parse_config(text):
    """Parse and validate configuration text into a RunConfig.

    Raises ConfigError for syntax errors (with line number), unknown sections
    or keys, and values violating a constraint (naming the field).
    """
    lines = _key_lines(text)
    cp = _read(text)
    known = set(DEFAULTS) | {"dipoles"}
    values, applied = {}, []
    for section in cp.sections():
        if section.lower() not in known:
            line = next((no for no, raw in enumerate(text.splitlines(), 1)
                         if raw.strip().lower() == f"[{section.lower()}]"), None)
            raise ConfigError(f"line {line}: unknown section [{section}]", field=section, line=line)
    for section, defaults in DEFAULTS.items():
        got = cp[section] if cp.has_section(section) else {}
        allowed = set(defaults) | (set(_ATOM_EXTRA) if section == "atom" else set())
        sec = {}
        for key, raw in got.items():
            line = lines.get((section, key))
            if key not in allowed:
                raise ConfigError(f"line {line}: unknown key {section}.{key}", field=key, line=line)
            if section == "atom" and key == "dipole_orientation":
                sec[key] = _orientation(raw, line)
            elif section == "atom" and key == "levels":
                try:
                    sec[key] = [float(p) for p in raw.split(",")]
                except ValueError:
                    raise ConfigError(f"line {line}: atom.levels must be comma-separated numbers",
                                      field=key, line=line) from None
            elif section == "sweep" and key == "axis":
                axis = raw.strip().lower()
                if axis not in SWEEP_AXES:
                    raise ConfigError(f"line {line}: sweep.axis must be one of {', '.join(SWEEP_AXES)}",
                                      field=key, line=line)
                sec[key] = axis
            elif section == "quadrature" and key == "kappa_method":
                sec[key] = raw.strip().lower()
            else:
                sec[key] = _number(section, key, raw, line, (section, key) in _INT_KEYS)
        for key, default in defaults.items():
            if key not in sec:
                if section == "atom" and key == "omega_a" and ("wavelength" in sec or "levels" in sec):
                    continue
                sec[key] = default
                applied.append(f"{section}.{key}")
        values[section] = sec

    dip_rows = {}
    if cp.has_section("dipoles"):
        for key, raw in cp["dipoles"].items():
            line = lines.get(("dipoles", key))
            m = _DIPOLE_KEY.match(key)
            if not m:
                raise ConfigError(f"line {line}: dipoles keys must look like 'n-k', got {key!r}",
                                  field=key, line=line)
            dip_rows[(int(m.group(1)), int(m.group(2)))] = _vector(raw, line, key)

    med = values["medium"]
    for key in ("omega_t", "gamma_over_omega_t"):
        if not med[key] > 0:
            _fail("medium", key, "must be > 0", lines)
    if not med["omega_p_over_omega_t"] >= 0:
        _fail("medium", "omega_p_over_omega_t", "must be >= 0", lines)
    if not med["eta"] >= 1:
        _fail("medium", "eta", "must be >= 1", lines)
    model = DielectricModel.from_ratios(med["eta"], med["omega_t"], med["omega_p_over_omega_t"],
                                        med["gamma_over_omega_t"])

    atom = values["atom"]
    if "omega_a" in atom and "wavelength" in atom and "atom.omega_a" not in applied:
        _fail("atom", "wavelength", "conflicts with atom.omega_a; give only one", lines)
    if "wavelength" in atom:
        if not atom["wavelength"] > 0:
            _fail("atom", "wavelength", "must be > 0", lines)
        atom["omega_a"] = omega_from_wavelength(atom["wavelength"])
    if not atom["dipole_magnitude"] >= 0:
        _fail("atom", "dipole_magnitude", "must be >= 0", lines)
    if not atom["temperature"] >= 0:
        _fail("atom", "temperature", "must be >= 0", lines)
    if "levels" in atom:
        levels = atom["levels"]
        if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
            _fail("atom", "levels", "must list >= 2 strictly increasing level frequencies", lines)
        n = len(levels)
        table = np.zeros((n, n, 3))
        for (i, j), vec in dip_rows.items():
            if not (i < n and j < n):
                _fail("dipoles", f"{i}-{j}", f"refers to a level outside 0..{n - 1}", lines)
            table[i, j] = table[j, i] = vec
        scheme = LevelScheme([hbar * w for w in levels], table)
        upper = int(atom.get("upper", n - 1))
        lower = int(atom.get("lower", 0))
        if not (0 <= lower < upper < n):
            _fail("atom", "upper", f"need 0 <= lower < upper < {n}", lines)
        atom.pop("omega_a", None)
    else:
        if dip_rows:
            _fail("dipoles", next(iter(f"{i}-{j}" for i, j in dip_rows)),
                  "requires atom.levels", lines)
        if not atom["omega_a"] > 0:
            _fail("atom", "omega_a", "must be > 0", lines)
        try:
            d = dipole_vector(atom["dipole_magnitude"], atom["dipole_orientation"])
        except ValueError as exc:
            _fail("atom", "dipole_orientation", str(exc), lines)
        scheme = LevelScheme.two_level(atom["omega_a"], d)
        upper, lower = 1, 0

    mot = values["motion"]
    if not mot["z_a"] > 0:
        _fail("motion", "z_a", "must be > 0", lines)
    if not mot["speed"] >= 0:
        _fail("motion", "speed", "must be >= 0", lines)
    if not -math.pi <= mot["theta"] <= math.pi:
        _fail("motion", "theta", "must lie in [-pi, pi]", lines)
    motion = MotionState(mot["z_a"], mot["speed"], mot["theta"])

    sw = values["sweep"]
    if sw["points"] < 0:
        _fail("sweep", "points", "must be >= 0", lines)
    if sw["axis"] == "distance" and sw["points"] and min(sw["start"], sw["stop"]) <= 0:
        _fail("sweep", "start", "distance sweep needs positive z values", lines)
    if sw["axis"] == "frequency" and sw["points"] and min(sw["start"], sw["stop"]) <= 0:
        _fail("sweep", "start", "frequency sweep needs positive omega values", lines)
    if sw["axis"] == "angle" and sw["points"] and (
            min(sw["start"], sw["stop"]) < -math.pi or max(sw["start"], sw["stop"]) > math.pi):
        _fail("sweep", "start", "angle sweep must stay inside [-pi, pi]", lines)
    sweep = SweepConfig(sw["axis"], sw["start"], sw["stop"], sw["points"])

    pr = values["profile"]
    if not 0 < pr["z_min"] < pr["z_max"]:
        _fail("profile", "z_min", "must satisfy 0 < z_min < z_max", lines)
    if pr["grid_points"] < 3:
        _fail("profile", "grid_points", "must be >= 3", lines)
    if not pr["detuning_span"] > 0:
        _fail("profile", "detuning_span", "must be > 0", lines)
    if pr["n_z"] < 1:
        _fail("profile", "n_z", "must be >= 1", lines)
    if not pr["gamma_free"] >= 0:
        _fail("profile", "gamma_free", "must be >= 0", lines)
    profile = ProfileConfig(pr["z_min"], pr["z_max"], pr["grid_points"], pr["detuning_span"],
                            pr["n_z"], pr["gamma_free"])

    q = values["quadrature"]
    try:
        quad = QuadratureSpec(q["n_kappa"], q["n_phi"], q["xi_rel_tol"], q["rel_tol"],
                              kappa_method=q["kappa_method"])
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}", field="quadrature") from None

    effective = {s: dict(v) for s, v in values.items()}
    for sec in effective.values():
        for k, v in sec.items():
            if isinstance(v, np.ndarray):
                sec[k] = v.tolist()
    if dip_rows:
        effective["dipoles"] = {f"{i}-{j}": v for (i, j), v in sorted(dip_rows.items())}
    return RunConfig(model, scheme, upper, lower, atom["temperature"], motion, sweep, profile,
                     quad, effective, applied)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
