"""Command-line front end: coefficient, sweep, profile, table1, validate.

Every command produces a ResultTable whose ``meta`` block carries the full
effective configuration, so an output file is enough to reproduce itself.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._accel import backend
from .atom import Transition
from .config import ConfigError, load_config
from .errors import DomainError, QFShiftError
from .kernel import (
    MotionState,
    ValidityWarning,
    coefficient,
    oracle_time_domain,
    static_coefficient,
)
from .medium import spectral_markers
from .observables import (
    RetardationWarning,
    detuning_grid,
    line_profile,
    shift_and_rate,
    thermal_factor,
)
from .series import series_coefficient, static_rate_model_consistent, static_values, table1_ratios

SERIES_AGREEMENT = 1e-5


@dataclass
class ResultTable:
    """Columns as (name, unit) pairs, rows of plain values, and provenance."""

    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = [(str(n), str(u)) for n, u in self.columns]
        for name, unit in self.columns:
            if not unit:
                raise ValueError(f"column {name!r} has no unit")
        self.rows = [[_plain(v) for v in row] for row in self.rows]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row length does not match the columns")

    def header(self):
        return [f"{n}[{u}]" for n, u in self.columns]

    def column(self, name):
        i = [n for n, _ in self.columns].index(name)
        return [row[i] for row in self.rows]

    def to_json(self):
        doc = {"meta": self.meta,
               "columns": [{"name": n, "unit": u} for n, u in self.columns],
               "rows": self.rows}
        return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls([(c["name"], c["unit"]) for c in doc["columns"]], doc["rows"], doc["meta"])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def emit(table, fmt="csv", destination=None):
    """Write ``table`` as csv or json to a path, or stdout when ``destination`` is None."""
    if fmt == "csv":
        text = table.to_csv()
    elif fmt == "json":
        text = table.to_json()
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    if destination in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {destination}: {exc.strerror}") from None


def _threads():
    try:
        return max(1, int(os.environ.get("QFSHIFT_THREADS", "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _meta(config, command, **extra):
    meta = {
        "tool": "qfshift",
        "version": __version__,
        "command": command,
        "backend": backend(),
        "config": config.effective,
        "defaults_applied": list(config.defaults_applied),
        "quadrature": asdict(config.quadrature),
    }
    meta.update(extra)
    return meta


def _rel(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _reverse(theta):
    return theta - math.pi if theta > 0 else theta + math.pi


def run_coefficient(config):
    tr, motion = config.transition, config.motion
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        res = coefficient(tr, config.medium, motion, config.quadrature)
    f = thermal_factor(tr.omega_nk, config.temperature)
    c = f * res.total
    cols = [("omega_nk", "rad/s"), ("z_a", "m"), ("speed", "m/s"), ("theta", "rad"),
            ("resonant_re", "1/s"), ("resonant_im", "1/s"),
            ("nonresonant_re", "1/s"), ("nonresonant_im", "1/s"),
            ("rate", "1/s"), ("shift", "rad/s"), ("thermal_factor", "1"), ("validity_ok", "bool")]
    row = [tr.omega_nk, motion.z_a, motion.speed, motion.theta,
           f * res.resonant.real, f * res.resonant.imag,
           f * res.nonresonant.real, f * res.nonresonant.imag,
           2.0 * c.real, c.imag, f, res.diagnostics["validity_ok"]]
    meta = _meta(config, "coefficient", resonant_error=res.diagnostics["resonant_error"],
                 nonresonant_error=res.diagnostics["nonresonant_error"])
    return ResultTable(cols, [row], meta)


_AXIS_UNITS = {"velocity": "m/s", "angle": "rad", "frequency": "rad/s", "distance": "m"}


def _sweep_point(config, value):
    tr, m = config.transition, config.motion
    if config.sweep.axis == "velocity":
        theta = m.theta if value >= 0 else _reverse(m.theta)
        m = MotionState(m.z_a, abs(value), theta)
    elif config.sweep.axis == "angle":
        m = MotionState(m.z_a, m.speed, value)
    elif config.sweep.axis == "frequency":
        tr = Transition(value, tr.dipole)
    else:
        m = MotionState(value, m.speed, m.theta)
    return tr, m


def run_sweep(config):
    """One row per sweep point; evaluation errors land in the ``error`` column."""
    axis = config.sweep.axis
    cols = [(axis, _AXIS_UNITS[axis]), ("shift", "rad/s"), ("rate", "1/s"),
            ("resonant_re", "1/s"), ("resonant_im", "1/s"),
            ("nonresonant_re", "1/s"), ("nonresonant_im", "1/s"),
            ("series_rate", "1/s"), ("series_divergent", "bool"), ("series_agrees", "bool"),
            ("validity_ok", "bool"), ("error", "text")]

    def evaluate(value):
        value = float(value)
        try:
            tr, m = _sweep_point(config, value)
            res = coefficient(tr, config.medium, m, config.quadrature)
            ser = series_coefficient(tr, config.medium, m)
            f = thermal_factor(abs(tr.omega_nk), config.temperature) if tr.omega_nk else 1.0
            c, cs = f * res.total, f * ser.total
            agrees = (not ser.diagnostics["divergent"]) and _rel(cs, c) < SERIES_AGREEMENT
            return [value, c.imag, 2.0 * c.real,
                    f * res.resonant.real, f * res.resonant.imag,
                    f * res.nonresonant.real, f * res.nonresonant.imag,
                    2.0 * cs.real, ser.diagnostics["divergent"], agrees,
                    res.diagnostics["validity_ok"], ""]
        except (QFShiftError, ValueError) as exc:
            return [value] + [None] * 7 + [None, False, None, f"{type(exc).__name__}: {exc}"]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        rows = _ordered_map(evaluate, config.sweep.values())
    return ResultTable(cols, rows, _meta(config, "sweep"))


def run_profile(config):
    """Static and moving z-averaged line profiles on a shared detuning grid."""
    p = config.profile
    scheme, pair = config.scheme, (config.upper, config.lower)
    static = MotionState(p.z_min, 0.0, 0.0)
    ref_up = shift_and_rate(scheme, config.upper, config.medium, static, config.quadrature)
    ref_lo = shift_and_rate(scheme, config.lower, config.medium, static, config.quadrature)
    width = ref_up.rate + ref_lo.rate + p.gamma_free
    grid = detuning_grid(p.detuning_span, p.grid_points, width)
    window = (p.z_min, p.z_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        warnings.simplefilter("ignore", RetardationWarning)
        kw = dict(spec=config.quadrature, n_z=p.n_z, gamma_free=p.gamma_free)
        prof0 = line_profile(scheme, pair, config.medium, MotionState(p.z_min, 0.0, 0.0),
                             window, grid, **kw)
        prof1 = line_profile(scheme, pair, config.medium, config.motion, window, grid, **kw)
    cols = [("detuning", "rad/s"), ("static", "s"), ("moving", "s")]
    rows = [[d, a, b] for d, a, b in zip(grid, prof0.intensity, prof1.intensity)]
    meta = _meta(config, "profile", reference_width=width,
                 static_profile=prof0.metadata, moving_profile=prof1.metadata,
                 peak_relative_change=(prof1.peak_height - prof0.peak_height) / prof0.peak_height)
    return ResultTable(cols, rows, meta)


def run_table1(config):
    """Leading-order ratio formulas next to kernel-derived ratios.

    The kernel values use the configured dipole and distance, the rate at
    omega_L and the shift at Omega_+, with ``speed`` as v_perp (receding)
    and as v_par.
    """
    model, z, v = config.medium, config.motion.z_a, config.motion.speed
    mk = spectral_markers(model)
    d = config.transition.dipole
    formula = table1_ratios(model, z, v_par=v, v_perp=v)
    spec = config.quadrature

    def value(omega, motion, what):
        c = coefficient(Transition(omega, d), model, motion, spec).total
        return 2.0 * c.real if what == "rate" else c.imag

    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for key, omega, what, motion in (
            ("shift_perp", mk.omega_plus, "shift", MotionState.perpendicular(z, v, toward=False)),
            ("rate_perp", mk.omega_l, "rate", MotionState.perpendicular(z, v, toward=False)),
            ("shift_par", mk.omega_plus, "shift", MotionState.parallel(z, v)),
            ("rate_par", mk.omega_l, "rate", MotionState.parallel(z, v)),
        ):
            base = value(omega, MotionState(z), what)
            measured = (value(omega, motion, what) - base) / base if base else 0.0
            rows.append([key, formula[key], measured, _rel(measured, formula[key])])
    cols = [("quantity", "text"), ("formula", "1"), ("kernel", "1"), ("relative_difference", "1")]
    return ResultTable(cols, rows, _meta(config, "table1"))


def _check(rows, name, measured, tolerance, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    rows.append([name, measured, tolerance, status, detail])


def run_validate(config):
    """Cross-oracle checks at the configured medium, transition and motion.

    Status is PASS, FAIL, SKIPPED (precondition not met) or INFO (reported
    but not gating).
    """
    model, tr, motion, spec = config.medium, config.transition, config.motion, config.quadrature
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        static = MotionState(motion.z_a)
        c0 = coefficient(tr, model, static, spec)
        ref = static_coefficient(tr, model, motion.z_a)
        e = _rel(c0.resonant, ref.resonant)
        _check(rows, "static_resonant_reduction", e, 1e-6, e <= 1e-6)
        e = _rel(c0.nonresonant, ref.nonresonant)
        _check(rows, "static_nonresonant_reduction", e, 1e-6, e <= 1e-6)

        cm = coefficient(tr, model, motion, spec)
        ser = series_coefficient(tr, model, motion)
        if ser.diagnostics["divergent"] or motion.speed > model.gamma * motion.z_a:
            rows.append(["series_vs_kernel", None, SERIES_AGREEMENT, "SKIPPED",
                         f"series divergent={ser.diagnostics['divergent']} at v={motion.speed:g} m/s"])
        else:
            e = _rel(ser.total, cm.total)
            _check(rows, "series_vs_kernel", e, SERIES_AGREEMENT, e <= SERIES_AGREEMENT)

        try:
            td = oracle_time_domain(tr, model, motion)
            e = _rel(td, cm.total)
            _check(rows, "time_domain_oracle", e, 1e-2, e <= 1e-2)
        except DomainError as exc:
            rows.append(["time_domain_oracle", None, 1e-2, "SKIPPED", str(exc)])

        mk = spectral_markers(model)
        zdip = Transition(mk.omega_l, np.array([0.0, 0.0, float(np.linalg.norm(tr.dipole))]))
        cl = coefficient(zdip, model, static, spec)
        ratio = abs(cl.nonresonant) / abs(cl.resonant) if abs(cl.resonant) else 0.0
        _check(rows, "nonresonant_suppression", ratio, 1.0 / 50.0, ratio < 1.0 / 50.0)

        rate = 2.0 * cl.resonant.real
        dz = zdip.dipole[2]
        consistent = static_rate_model_consistent(model, dz, motion.z_a)
        tol = max(model.gamma / model.omega_t, 0.03) if model.is_dispersive else 0.0
        e = _rel(rate, consistent)
        _check(rows, "static_rate_closed_form", e, max(tol, 0.05), e <= max(tol, 0.05),
               "leading order in gamma with Im r_p(omega_L)")
        printed = static_values(model, dz, motion.z_a)[1]
        rows.append(["static_rate_printed_form", _rel(rate, printed), 0.05, "INFO",
                     f"kernel/printed = {rate / printed if printed else 0.0:.6g}"])

        if motion.v_par:
            mirror = MotionState(motion.z_a, motion.speed, -motion.theta)
            e = _rel(coefficient(tr, model, mirror, spec).total, cm.total)
            _check(rows, "in_plane_reversal_symmetry", e, 1e-10, e <= 1e-10)

    cols = [("check", "text"), ("measured", "1"), ("tolerance", "1"), ("status", "text"),
            ("detail", "text")]
    return ResultTable(cols, rows, _meta(config, "validate"))


COMMANDS = {
    "coefficient": run_coefficient,
    "sweep": run_sweep,
    "profile": run_profile,
    "table1": run_table1,
    "validate": run_validate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qfshift",
                                description="Velocity-dependent atom-surface shifts and rates.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="sectioned key-value config file (defaults if omitted)")
    p.add_argument("--output", default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = load_config(args.config)
        else:
            from .config import parse_config

            config = parse_config("")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        table = COMMANDS[args.command](config)
    except (QFShiftError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        emit(table, args.format, args.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate" and "FAIL" in table.column("status"):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
