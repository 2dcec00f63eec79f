"""Command line front end for building and certifying the library's metrics.

Five commands cover the workflow:

    build         construct an object from a --spec descriptor (a torpedo
                  plane curve, a boot assembly, or a step metric) and
                  certify whatever it certifies on the way;
    certify       grid positivity certificate for a metric descriptor
                  (or a bare profile descriptor plus --n);
    deform        concordance (from an --iso descriptor), standardize
                  (profile to the torpedo of its end radius), or retract
                  (unbend a step metric back to its cylinder);
    bend          minimal bend radius search, a bend-family certificate,
                  or a boot isotopy slice, from a --spec descriptor;
    oracle-check  closed-form scalar curvature against the finite
                  difference engine on seeded random chart points.

Inputs are JSON descriptors, given as a file path or an inline literal
(anything starting with "{" or "["); reports are JSON and sampled series
are CSV (selected by a ``.csv`` suffix on --out).  Every artifact is
written atomically: the bytes go to a temporary file in the target
directory which is then renamed over the destination, so readers never
observe a partial file.  Reports embed the parsed input descriptor under
``input``, and identical invocations produce byte-identical artifacts;
--seed pins the only sampled randomness (oracle-check points and the
standardization slice grid).

Exit status: 0 when every requested certificate passes; 1 when a
certificate fails or a scale search exhausts (the report is still
written and its path printed); 2 when the input cannot be parsed or
violates a descriptor schema (malformed JSON cites the byte offset); 3
on internal errors.  The PSC_FORGE_LOG environment variable (error,
info, debug) sets the stderr log level.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .bend import (
    BootSpec,
    StepBase,
    StepSpec,
    bend_isotopy,
    bent_cylinder_metric,
    boot_isotopy,
    boot_metric,
    min_bend_radius,
    step_metric,
    step_retract,
)
from .curvature import (
    DEFAULT_GRID_POINTS,
    POSITIVITY_FLOOR,
    RotSymMetric,
    certify_positive,
)
from .deform import (
    concordance_from_isotopy,
    standardize_to_torpedo,
    torpedo_radius_isotopy,
)
from .errors import (
    ConstructionError,
    DegeneratePlaneError,
    InvalidMetricError,
    NoCertificateError,
    RangeError,
    UnsupportedOrderError,
)
from .oracle import chart_from_rotsym, cross_check
from .torpedo import double_torpedo, perfect_torpedo, torpedo_curve
from .warp import Affine, SinCap, WarpFunction

_LOG = logging.getLogger("pscforge.cli")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

_COMMANDS = ("build", "certify", "deform", "bend", "oracle-check")
_DEFORM_MODES = ("concordance", "standardize", "retract")
_PROFILE_KINDS = ("torpedo", "round", "double_torpedo", "linear")

# Sup-norm tolerance for the retract endpoint; matches the step module's
# exact-target construction, where only float rounding remains.
_RETRACT_SUP_TOL = 1e-8


class InputError(Exception):
    """Unparseable or schema-violating CLI input (exit status 2)."""


@dataclass(frozen=True)
class RunConfig:
    """One resolved CLI invocation.

    ``mode`` is the deform sub-mode and None elsewhere.  ``metric``,
    ``iso`` and ``spec`` hold raw descriptor sources (path or inline
    JSON); which one a command reads is the command's business.  A fixed
    seed makes the report bytes reproducible.
    """

    command: str
    mode: Optional[str] = None
    metric: Optional[str] = None
    iso: Optional[str] = None
    spec: Optional[str] = None
    n: Optional[int] = None
    grid: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    seed: int = 0
    threads: Optional[int] = None

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise InputError(
                f"unknown command {self.command!r} (choose from {', '.join(_COMMANDS)})"
            )
        if self.command == "deform" and self.mode not in _DEFORM_MODES:
            raise InputError(
                f"deform mode {self.mode!r} not recognised "
                f"(choose from {', '.join(_DEFORM_MODES)})"
            )
        if self.grid is not None and self.grid < 2:
            raise InputError("--grid must be at least 2")
        if self.threads is not None and self.threads < 1:
            raise InputError("--threads must be at least 1")


# ---------------------------------------------------------------------------
# Descriptor parsing.
# ---------------------------------------------------------------------------

def _read_descriptor(source, label):
    """Parse a JSON descriptor from a file path or an inline literal."""
    if source is None:
        raise InputError(f"--{label} is required for this command")
    if source.lstrip().startswith(("{", "[")):
        text, where = source, f"--{label}"
    else:
        try:
            with open(source, "rb") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"--{label}: cannot read {source}: {exc.strerror}") from exc
        where = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}: malformed JSON at byte {exc.pos}: {exc.msg}") from exc


def _object(obj, where):
    if not isinstance(obj, Mapping):
        raise InputError(f"{where}: expected a JSON object")
    return obj


def _number(obj, key, where, required=True, default=None):
    if key not in obj:
        if required:
            raise InputError(f"{where}: missing field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputError(f"{where}: field {key!r} must be a number")
    return float(value)


def _integer(obj, key, where, required=True, default=None):
    if key not in obj:
        if required:
            raise InputError(f"{where}: missing field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: field {key!r} must be an integer")
    return int(value)


def profile_from_obj(obj, where):
    """Warping profile from a descriptor.

    Kinds: torpedo (delta, domain_end), round (delta, optional
    domain_end, default the quarter-cap delta*pi/2), double_torpedo
    (delta, half_domain), linear (intercept, slope, domain_end).
    """
    _object(obj, where)
    kind = obj.get("kind")
    if kind == "torpedo":
        return perfect_torpedo(_number(obj, "delta", where), _number(obj, "domain_end", where))
    if kind == "round":
        delta = _number(obj, "delta", where)
        end = _number(obj, "domain_end", where, required=False,
                      default=0.5 * math.pi * delta)
        return WarpFunction(end, SinCap(delta))
    if kind == "double_torpedo":
        delta = _number(obj, "delta", where)
        half = _number(obj, "half_domain", where)
        return double_torpedo(perfect_torpedo(delta, half))
    if kind == "linear":
        return WarpFunction(
            _number(obj, "domain_end", where),
            Affine(_number(obj, "intercept", where), _number(obj, "slope", where)),
        )
    raise InputError(
        f"{where}: unknown profile kind {kind!r} "
        f"(choose from {', '.join(_PROFILE_KINDS)})"
    )


def metric_from_obj(obj, n_flag, where="metric"):
    """Rotationally symmetric metric from a descriptor.

    A bare profile descriptor is promoted to the single warped product
    dr^2 + beta^2 ds_{n-1}^2 using the --n flag for the total dimension.
    Full metric kinds: single_warped (profile, sphere_dim),
    doubly_warped (phi, psi, sphere_dim), product_with_line (inner),
    bent_cylinder (profile, c, n).
    """
    _object(obj, where)
    kind = obj.get("kind")
    if kind in _PROFILE_KINDS:
        if n_flag is None:
            raise InputError(
                f"{where}: a bare profile descriptor needs --n (total dimension)"
            )
        if n_flag < 2:
            raise InputError(f"{where}: --n must be at least 2")
        return RotSymMetric.single_warped(profile_from_obj(obj, where), n_flag - 1)
    if kind == "single_warped":
        return RotSymMetric.single_warped(
            profile_from_obj(_object(obj.get("profile"), f"{where}.profile"),
                             f"{where}.profile"),
            _integer(obj, "sphere_dim", where),
        )
    if kind == "doubly_warped":
        return RotSymMetric.doubly_warped(
            profile_from_obj(_object(obj.get("phi"), f"{where}.phi"), f"{where}.phi"),
            profile_from_obj(_object(obj.get("psi"), f"{where}.psi"), f"{where}.psi"),
            _integer(obj, "sphere_dim", where),
        )
    if kind == "product_with_line":
        return RotSymMetric.product_with_line(
            metric_from_obj(_object(obj.get("inner"), f"{where}.inner"),
                            n_flag, f"{where}.inner")
        )
    if kind == "bent_cylinder":
        return bent_cylinder_metric(
            profile_from_obj(_object(obj.get("profile"), f"{where}.profile"),
                             f"{where}.profile"),
            _number(obj, "c", where),
            _integer(obj, "n", where),
        )
    raise InputError(
        f"{where}: unknown metric kind {kind!r} (choose from "
        f"{', '.join(_PROFILE_KINDS)}, single_warped, doubly_warped, "
        "product_with_line, bent_cylinder)"
    )


def iso_from_obj(obj, where="iso"):
    """Profile isotopy from a descriptor.

    Kind torpedo_radius: torpedoes of linearly interpolated radius,
    fields delta_start, delta_end, domain_end, optional fibre_dim
    (default 3).
    """
    _object(obj, where)
    kind = obj.get("kind")
    if kind == "torpedo_radius":
        return torpedo_radius_isotopy(
            _number(obj, "delta_start", where),
            _number(obj, "delta_end", where),
            _number(obj, "domain_end", where),
            fibre_dim=_integer(obj, "fibre_dim", where, required=False, default=3),
        )
    raise InputError(f"{where}: unknown isotopy kind {kind!r} (choose torpedo_radius)")


def _boot_spec_from_obj(obj, where):
    delta = _number(obj, "delta", where)
    return BootSpec(
        delta=delta,
        l1=_number(obj, "l1", where),
        l2=_number(obj, "l2", where),
        c=_number(obj, "c", where, required=False, default=2.1 * delta),
        n=_integer(obj, "n", where),
    )


def _step_spec_from_obj(obj, where):
    base_obj = _object(obj.get("base"), f"{where}.base")
    base = StepBase(
        delta=_number(base_obj, "delta", f"{where}.base"),
        neck=_number(base_obj, "neck", f"{where}.base"),
        length=_number(base_obj, "length", f"{where}.base"),
        n=_integer(base_obj, "n", f"{where}.base"),
    )
    stages_obj = obj.get("stages")
    if not isinstance(stages_obj, Sequence) or isinstance(stages_obj, (str, bytes)):
        raise InputError(f"{where}: field 'stages' must be a list of [t, s] pairs")
    stages = []
    for i, row in enumerate(stages_obj):
        if (not isinstance(row, Sequence) or isinstance(row, (str, bytes))
                or len(row) != 2):
            raise InputError(f"{where}.stages[{i}]: expected a [t, s] pair")
        t, s = row
        for v in (t, s):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InputError(f"{where}.stages[{i}]: entries must be numbers")
        stages.append((float(t), float(s)))
    return StepSpec(
        base=base,
        stages=tuple(stages),
        c=_number(obj, "c", where, required=False),
    )


# ---------------------------------------------------------------------------
# Artifact emission.
# ---------------------------------------------------------------------------

def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serialisable: {type(value).__name__}")


def _json_bytes(obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    return (text + "\n").encode("utf-8")


def _csv_bytes(header, rows):
    # repr of a Python float is the shortest round-tripping decimal, so
    # the emitted series is byte-stable and lossless.
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [cell if isinstance(cell, str) else repr(float(cell)) for cell in row]
        )
    return buf.getvalue().encode("utf-8")


def write_atomic(path, data):
    """Write ``data`` to ``path`` via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(
        dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _report(config, descriptor, body):
    head = {
        "tool": "pscforge",
        "version": __version__,
        "command": config.command,
        "seed": config.seed,
        "input": descriptor,
    }
    if config.mode is not None:
        head["mode"] = config.mode
    head.update(body)
    return head


def _floor(config):
    return POSITIVITY_FLOOR if config.tol is None else config.tol


def _search_failed(config, descriptor, exc):
    return False, _report(config, descriptor, {"passed": False, "error": str(exc)}), None


# ---------------------------------------------------------------------------
# Command handlers.  Each returns (passed, report, series) where series is
# an optional (header, rows) pair for the CSV form of the artifact.
# ---------------------------------------------------------------------------

def _cmd_build(config):
    obj = _read_descriptor(config.spec, "spec")
    _object(obj, "spec")
    kind = obj.get("kind")

    if kind in _PROFILE_KINDS:
        beta = profile_from_obj(obj, "spec")
        curve = torpedo_curve(beta, npoints=config.grid or 512)
        tol = 1e-8 if config.tol is None else config.tol
        passed = (curve.unit_speed_residual <= tol
                  and curve.axis_angle_residual <= tol)
        body = {
            "passed": bool(passed),
            "columns": ["r", "alpha", "beta"],
            "rows": int(curve.r.size),
            "domain_end": float(beta.domain_end),
            "unit_speed_residual": float(curve.unit_speed_residual),
            "axis_angle_residual": float(curve.axis_angle_residual),
            "residual_tol": tol,
        }
        return passed, _report(config, obj, body), (["r", "alpha", "beta"], curve.rows())

    if kind == "boot":
        spec = _boot_spec_from_obj(obj, "spec")
        assembly = boot_metric(
            spec,
            floor=_floor(config),
            npoints=config.grid or 512,
            grid_counts=(config.grid or 96, 33, 17),
        )
        body = {"passed": bool(assembly.passed), "assembly": assembly.to_obj()}
        series = (["region", "r", "t", "R"], assembly.trace_rows())
        return assembly.passed, _report(config, obj, body), series

    if kind == "step":
        spec = _step_spec_from_obj(obj, "spec")
        try:
            built = step_metric(spec, floor=_floor(config))
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {"passed": bool(built.passed), "step": built.to_obj()}
        series = (["t", "height"], built.height_rows(count=config.grid or 256))
        return built.passed, _report(config, obj, body), series

    raise InputError(
        f"spec: unknown build kind {kind!r} "
        f"(choose from {', '.join(_PROFILE_KINDS)}, boot, step)"
    )


def _certify_one(obj, config):
    metric = metric_from_obj(obj, config.n)
    return certify_positive(
        metric, floor=_floor(config), npoints=config.grid or DEFAULT_GRID_POINTS
    )


def _cmd_certify(config):
    obj = _read_descriptor(config.metric, "metric")
    if isinstance(obj, list):
        # Independent targets certify in a worker pool; results are
        # collected by index, so the report does not depend on timing.
        for i, entry in enumerate(obj):
            _object(entry, f"metric[{i}]")
        workers = config.threads or os.cpu_count() or 1
        with ThreadPoolExecutor(max_workers=workers) as pool:
            certs = list(pool.map(lambda o: _certify_one(o, config), obj))
        passed = all(c.passed for c in certs)
        body = {
            "passed": bool(passed),
            "certificates": [c.to_obj() for c in certs],
        }
        return passed, _report(config, obj, body), None
    cert = _certify_one(obj, config)
    body = {"passed": bool(cert.passed), "certificate": cert.to_obj()}
    return cert.passed, _report(config, obj, body), None


def _cmd_deform(config):
    floor = _floor(config)

    if config.mode == "concordance":
        obj = _read_descriptor(config.iso, "iso")
        iso = iso_from_obj(obj)
        n = config.n if config.n is not None else iso.fibre_dim + 1
        counts = (config.grid, config.grid) if config.grid else (24, 24)
        try:
            result = concordance_from_isotopy(iso, n, floor=floor, grid_counts=counts)
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {"passed": bool(result.certificate.passed), "concordance": result.to_obj()}
        return result.certificate.passed, _report(config, obj, body), None

    if config.mode == "standardize":
        obj = _read_descriptor(config.metric, "metric")
        omega = profile_from_obj(obj, "metric")
        if config.n is None:
            raise InputError(
                "--n (total dimension of the warped factor) is required for standardize"
            )
        if config.n < 3:
            raise InputError("--n must be at least 3 for standardize")
        try:
            lam, _path, cert = standardize_to_torpedo(
                omega, config.n - 1, seed=config.seed, floor=floor,
                npoints=config.grid or 512,
            )
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {
            "passed": bool(cert.passed),
            "lambda_star": float(lam),
            "final_radius": float(omega.eval(omega.domain_end, 0)),
            "certificate": cert.to_obj(),
        }
        return cert.passed, _report(config, obj, body), None

    # retract
    obj = _read_descriptor(config.spec, "spec")
    spec = _step_spec_from_obj(_object(obj, "spec"), "spec")
    try:
        result = step_retract(spec, floor=floor)
    except NoCertificateError as exc:
        return _search_failed(config, obj, exc)
    passed = (all(ok for _, ok in result.checkpoints)
              and result.final_sup_difference <= _RETRACT_SUP_TOL)
    body = {
        "passed": bool(passed),
        "sup_tolerance": _RETRACT_SUP_TOL,
        "retract": result.to_obj(),
    }
    return passed, _report(config, obj, body), None


def _cmd_bend(config):
    if config.spec is not None:
        obj = _read_descriptor(config.spec, "spec")
    elif config.metric is not None:
        # Shorthand: --metric PROFILE --n N asks for the minimal bend radius.
        if config.n is None:
            raise InputError("--n (total dimension) is required with --metric")
        obj = {
            "kind": "radius",
            "profile": _read_descriptor(config.metric, "metric"),
            "n": config.n,
        }
    else:
        raise InputError("--spec is required for this command")
    _object(obj, "spec")
    kind = obj.get("kind")
    floor = _floor(config)

    if kind == "radius":
        profile = profile_from_obj(_object(obj.get("profile"), "spec.profile"),
                                   "spec.profile")
        n = _integer(obj, "n", "spec")
        try:
            result = min_bend_radius(
                profile, n, floor=floor, npoints=config.grid or 512
            )
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {"passed": bool(result.certificate.passed), "radius": result.to_obj()}
        return result.certificate.passed, _report(config, obj, body), None

    if kind == "family":
        profile = profile_from_obj(_object(obj.get("profile"), "spec.profile"),
                                   "spec.profile")
        kwargs = {}
        flank = _number(obj, "flank", "spec", required=False)
        if flank is not None:
            kwargs["L"] = flank
        require = obj.get("require_torpedo", True)
        if not isinstance(require, bool):
            raise InputError("spec: field 'require_torpedo' must be a boolean")
        try:
            result = bend_isotopy(
                profile,
                _integer(obj, "n", "spec"),
                _number(obj, "c", "spec"),
                _number(obj, "theta", "spec"),
                grid_counts=(config.grid or 96, 33, 17),
                floor=floor,
                require_torpedo=require,
                **kwargs,
            )
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {"passed": bool(result.certificate.passed), "family": result.to_obj()}
        return result.certificate.passed, _report(config, obj, body), None

    if kind == "boot":
        try:
            result = boot_isotopy(
                _number(obj, "delta", "spec"),
                _number(obj, "l1", "spec"),
                _integer(obj, "n", "spec"),
                _number(obj, "u", "spec"),
                c=_number(obj, "c", "spec", required=False),
                floor=floor,
                l2_initial=_number(obj, "l2_initial", "spec", required=False,
                                   default=1.0),
            )
        except NoCertificateError as exc:
            return _search_failed(config, obj, exc)
        body = {"passed": bool(result.certificate.passed), "slice": result.to_obj()}
        return result.certificate.passed, _report(config, obj, body), None

    raise InputError(
        f"spec: unknown bend kind {kind!r} (choose radius, family, boot)"
    )


def _cmd_oracle_check(config):
    obj = _read_descriptor(config.metric, "metric")
    metric = metric_from_obj(_object(obj, "metric"), config.n)
    chart = chart_from_rotsym(metric)
    npts = config.grid or 50
    # Keep a 10% margin to every box face so the FD stencils stay inside.
    rng = np.random.default_rng(config.seed)
    lows = np.array([lo + 0.1 * (hi - lo) for lo, hi in chart.box])
    highs = np.array([hi - 0.1 * (hi - lo) for lo, hi in chart.box])
    pts = rng.uniform(lows, highs, size=(npts, chart.dim))

    def closed_form(points):
        return metric.scalar_curvature(points[:, 0])

    # Richardson throughout: near the axis the spherical chart amplifies
    # the h^2 truncation term well past 1e-4 even for smooth profiles.
    report = cross_check(closed_form, chart, pts,
                         tol=1e-4 if config.tol is None else config.tol,
                         richardson=True)
    body = {
        "passed": bool(report.passed),
        "points": int(npts),
        "richardson": True,
        "cross_check": report.to_obj(),
    }
    return report.passed, _report(config, obj, body), None


_HANDLERS = {
    "build": _cmd_build,
    "certify": _cmd_certify,
    "deform": _cmd_deform,
    "bend": _cmd_bend,
    "oracle-check": _cmd_oracle_check,
}


# ---------------------------------------------------------------------------
# Driver.
# ---------------------------------------------------------------------------

def _default_out(config):
    tail = config.command if config.mode is None else f"{config.command}-{config.mode}"
    return f"pscforge-{tail}.json"


def run(config):
    """Execute one invocation; returns the process exit status."""
    try:
        passed, report, series = _HANDLERS[config.command](config)
        out = config.out or _default_out(config)
        if out.endswith(".csv"):
            if series is None:
                raise InputError(
                    f"{config.command} emits no sampled series; use a .json output"
                )
            data = _csv_bytes(*series)
        else:
            data = _json_bytes(report)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidMetricError, ConstructionError, RangeError,
            UnsupportedOrderError, DegeneratePlaneError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception:
        _LOG.exception("internal error")
        print("error: internal error (set PSC_FORGE_LOG=debug for the traceback)",
              file=sys.stderr)
        return 3
    try:
        write_atomic(out, data)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc.strerror}", file=sys.stderr)
        return 3
    _LOG.info("wrote %s (%d bytes)", out, len(data))
    print(f"{'PASS' if passed else 'FAIL'} {config.command}: {out}")
    return 0 if passed else 1


def parse_args(argv=None):
    """Resolve argv into a RunConfig; argparse errors exit with status 2."""
    parser = argparse.ArgumentParser(
        prog="pscforge",
        description="Construct, deform, and certify rotationally symmetric "
                    "positive-scalar-curvature metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{" + ",".join(_COMMANDS) + "}")

    def add(name, summary, modes=None):
        p = sub.add_parser(name, help=summary, description=summary)
        if modes:
            p.add_argument("mode", choices=modes, help="deformation to run")
        p.add_argument("--metric", metavar="PATH",
                       help="metric or profile descriptor (JSON path or inline literal)")
        p.add_argument("--iso", metavar="PATH",
                       help="isotopy descriptor (JSON path or inline literal)")
        p.add_argument("--spec", metavar="PATH",
                       help="build/bend descriptor (JSON path or inline literal)")
        p.add_argument("--n", type=int,
                       help="total dimension for bare profile descriptors")
        p.add_argument("--grid", type=int,
                       help="grid-size override (points per axis or sample count)")
        p.add_argument("--tol", type=float,
                       help="tolerance override (positivity floor; comparison "
                            "tolerance for oracle-check)")
        p.add_argument("--out", metavar="PATH",
                       help="artifact path; a .csv suffix selects the sampled "
                            "series where one exists")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for sampled randomness; fixed seed means "
                            "byte-identical reports")
        p.add_argument("--threads", type=int,
                       help="worker threads for multi-target certification "
                            "(default: cpu count)")
        return p

    add("build", "construct a torpedo curve, boot assembly, or step metric")
    add("certify", "grid positivity certificate for a metric descriptor")
    add("deform", "run a concordance, standardization, or step retract",
        modes=_DEFORM_MODES)
    add("bend", "bend radius search, family certificate, or boot isotopy")
    add("oracle-check", "closed-form curvature against the FD engine")

    ns = parser.parse_args(argv)
    return RunConfig(
        command=ns.command,
        mode=getattr(ns, "mode", None),
        metric=ns.metric,
        iso=ns.iso,
        spec=ns.spec,
        n=ns.n,
        grid=ns.grid,
        tol=ns.tol,
        out=ns.out,
        seed=ns.seed,
        threads=ns.threads,
    )


def _configure_logging():
    name = os.environ.get("PSC_FORGE_LOG", "error").strip().lower()
    if name not in _LOG_LEVELS:
        raise InputError(
            f"PSC_FORGE_LOG: unknown level {name!r} (choose error, info, debug)"
        )
    logging.basicConfig(
        stream=sys.stderr,
        level=_LOG_LEVELS[name],
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None):
    try:
        _configure_logging()
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    raise SystemExit(main())
