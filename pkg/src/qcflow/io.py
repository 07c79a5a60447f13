"""Serialization: field descriptors as JSON, trajectories and arcs as CSV.

Numbers are written with 17 significant digits so that floats round-trip
exactly.  All file writes go through a temp-file-and-rename so partial
output never lands under the target name.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .fields import (
    FieldDescriptor,
    convex_combo,
    degenerate,
    example1,
    example2,
    linear,
    radial_power,
    rescaled,
)
from .flow import Event, Trajectory


def fmt(x: float) -> str:
    """Decimal text with enough digits to round-trip a double."""
    return format(float(x), ".17g")


def field_to_json(fd: FieldDescriptor) -> dict:
    if fd.kind == "degenerate":
        params = {"omega": fd.params[0]}
    elif fd.kind == "linear":
        params = {"lambda": fd.params[0], "omega": fd.params[1]}
    elif fd.kind == "radial_power":
        params = {"c": fd.params[0], "p": fd.params[1]}
    elif fd.kind in ("example1", "example2"):
        params = {}
    elif fd.kind == "rescaled":
        params = {"inner": field_to_json(fd.children[0]), "time_scale": fd.params[0]}
    elif fd.kind == "convex_combo":
        params = {
            "f": field_to_json(fd.children[0]),
            "g": field_to_json(fd.children[1]),
            "t": fd.params[0],
        }
    else:
        raise ValueError(f"unknown kind {fd.kind!r}")
    return {"kind": fd.kind, "params": params}


def field_from_json(obj: dict) -> FieldDescriptor:
    kind = obj["kind"]
    params = obj.get("params", {})
    if kind == "degenerate":
        return degenerate(params["omega"])
    if kind == "linear":
        return linear(params["lambda"], params.get("omega", 0.0))
    if kind == "radial_power":
        return radial_power(params["c"], params["p"])
    if kind == "example1":
        return example1()
    if kind == "example2":
        return example2()
    if kind == "rescaled":
        return rescaled(field_from_json(params["inner"]), params["time_scale"])
    if kind == "convex_combo":
        return convex_combo(field_from_json(params["f"]), field_from_json(params["g"]), params["t"])
    raise ValueError(f"unknown field kind {kind!r}")


def parse_field_spec(text: str) -> FieldDescriptor:
    """Parse a field given as JSON or as shorthand.

    Shorthands: "example1", "example2", "degenerate:<omega>",
    "linear:<lambda>,<omega>".  Shorthand is sugar only; it is normalized to
    the JSON descriptor before execution.
    """
    text = text.strip()
    if text.startswith("{"):
        return field_from_json(json.loads(text))
    if text == "example1":
        return example1()
    if text == "example2":
        return example2()
    if text.startswith("degenerate:"):
        return degenerate(float(text.split(":", 1)[1]))
    if text.startswith("linear:"):
        parts = text.split(":", 1)[1].split(",")
        lam = float(parts[0])
        omega = float(parts[1]) if len(parts) > 1 else 0.0
        return linear(lam, omega)
    raise ValueError(f"cannot parse field spec {text!r}")


def write_text_atomic(path: str, text: str) -> None:
    """Write text via a temp file in the same directory plus rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".qcflow-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_csv_text(traj: Trajectory) -> str:
    lines = ["t,re,im"]
    for t, z in zip(traj.times, traj.points):
        lines.append(f"{fmt(t)},{fmt(z.real)},{fmt(z.imag)}")
    for ev in traj.events:
        lines.append(f"# event,{ev.name},{fmt(ev.t)}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    write_text_atomic(path, trajectory_csv_text(traj))


def read_curve_csv(path: str):
    """Read a t,re,im CSV (as written by the trajectory export).

    Returns (times, points, events); event comment lines become Event tuples
    with z = nan (positions are not stored in the comments).
    """
    ts = []
    zs = []
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == "t,re,im":
                continue
            if line.startswith("#"):
                parts = line.lstrip("# ").split(",")
                if len(parts) >= 3 and parts[0] == "event":
                    events.append(Event(parts[1], float(parts[2]), complex("nan")))
                continue
            a, b, c = line.split(",")
            ts.append(float(a))
            zs.append(complex(float(b), float(c)))
    return np.asarray(ts), np.asarray(zs, dtype=complex), events


def quasipolar_grid_csv_text(rows) -> str:
    """rows: iterables of (z, rho, theta, lambda_factor)."""
    lines = ["re,im,rho,theta,lambda_factor"]
    for z, rho, th, lam in rows:
        lines.append(f"{fmt(z.real)},{fmt(z.imag)},{fmt(rho)},{fmt(th)},{fmt(lam)}")
    return "\n".join(lines) + "\n"


def json_report_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"
