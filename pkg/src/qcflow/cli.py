"""Command-line front end.

Subcommands: trace (trajectory CSV/SVG), quasipolar (grid CSV / rectification
SVG), variation (arc report JSON), verify (invariant suite JSON), eval.

Exit codes: 0 success, 1 failed invariants in verify, 2 configuration parse
failure, 3 solver error.  QCFLOW_TOL overrides the default solver tolerance.
Identical configurations (including seed) produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import io as qio
from . import svg as qsvg
from .errors import QCFlowError
from .fields import eval_field
from .flow import DEFAULT_TOLERANCE, AnnulusWindow, extend_to_annulus, integrate
from .quasipolar import integrating_factor, theta
from .variation import arc_from_points, p_variation, quadratic_bound_report


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation; round-trips losslessly through JSON."""

    field: dict
    command: str
    params: dict = dc_field(default_factory=dict)
    seed: int = 0
    output_path: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "field": self.field,
                "command": self.command,
                "params": self.params,
                "seed": self.seed,
                "output_path": self.output_path,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        obj = json.loads(text)
        return RunConfig(
            field=obj["field"],
            command=obj["command"],
            params=obj["params"],
            seed=obj["seed"],
            output_path=obj["output_path"],
        )


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _make_config(args, command: str, fd, params: dict) -> RunConfig:
    # Shorthand field specs are normalized to their JSON descriptor here.
    return RunConfig(
        field=qio.field_to_json(fd),
        command=command,
        params=params,
        seed=getattr(args, "seed", 0),
        output_path=args.out,
    )


def _tolerance() -> float:
    env = os.environ.get("QCFLOW_TOL")
    return float(env) if env else DEFAULT_TOLERANCE


def _emit(path: str, text: str) -> None:
    if path:
        qio.write_text_atomic(path, text)
    else:
        sys.stdout.write(text)


def _cmd_eval(args) -> int:
    fd = qio.parse_field_spec(args.field)
    x0 = complex(*_parse_pair(args.x0))
    w = eval_field(fd, x0)
    _emit(args.out, qio.json_report_text({"re": w.real, "im": w.imag}))
    return 0


def _cmd_trace(args) -> int:
    fd = qio.parse_field_spec(args.field)
    x0 = complex(*_parse_pair(args.x0))
    tol = _tolerance()
    if args.window:
        r, R = _parse_pair(args.window)
        traj = extend_to_annulus(fd, x0, AnnulusWindow(r, R), tol)
    else:
        if not args.t:
            raise ValueError("trace needs --t a,b or --window r,R")
        t0, t1 = _parse_pair(args.t)
        traj = integrate(fd, x0, (t0, t1), tol)
    if args.format == "svg":
        window = AnnulusWindow(*_parse_pair(args.window)) if args.window else None
        text = qsvg.render_phase_portrait([traj.points], window)
    else:
        text = qio.trajectory_csv_text(traj)
    _emit(args.out, text)
    return 0


def _cmd_quasipolar(args) -> int:
    fd = qio.parse_field_spec(args.field)
    r, R = _parse_pair(args.window)
    window = AnnulusWindow(r, R)
    tol = _tolerance()
    n = args.grid
    if args.format == "svg":
        thetas = np.linspace(0.0, 2.0 * math.pi, max(n, 4), endpoint=False)
        curves = []
        for th in thetas:
            start = cmath.exp(1j * th)
            traj = extend_to_annulus(fd, start, window, tol)
            curves.append((traj.points, th))
        _emit(args.out, qsvg.render_rectification(curves, window))
        return 0
    rows = []
    for rho in np.linspace(window.r, window.R, n):
        for ang in np.linspace(0.0, 2.0 * math.pi, n, endpoint=False):
            z = rho * cmath.exp(1j * ang)
            q = theta(fd, z, tol)
            lam = integrating_factor(fd, z, step=1e-3, tolerance=tol).lambda_factor
            rows.append((z, q.rho, q.theta, lam))
    _emit(args.out, qio.quasipolar_grid_csv_text(rows))
    return 0


def _cmd_variation(args) -> int:
    fd = qio.parse_field_spec(args.field)
    _ts, zs, _events = qio.read_curve_csv(args.arc)
    arc = arc_from_points(zs)
    est = p_variation(fd, arc, args.p)
    cfg = _make_config(args, "variation", fd, {"arc": args.arc, "p": args.p})
    report = {"config": json.loads(cfg.to_json()), "p_variation": est.to_dict()}
    if args.window:
        r, R = _parse_pair(args.window)
        report["quadratic_bound"] = quadratic_bound_report(fd, arc, AnnulusWindow(r, R)).to_dict()
    _emit(args.out, qio.json_report_text(report))
    return 0


def _cmd_verify(args) -> int:
    from .verify import builtin_suite_fields, verify_field_spec

    if args.field == "all-builtin":
        triples = builtin_suite_fields()
        cfg_field = {"kind": "all-builtin", "params": {}}
    else:
        fd = qio.parse_field_spec(args.field)
        triples = [(args.field, fd, None)]
        cfg_field = qio.field_to_json(fd)
    cfg = RunConfig(
        field=cfg_field, command="verify", params={}, seed=args.seed, output_path=args.out
    )
    entries, failed = verify_field_spec(triples, seed=args.seed, tolerance=_tolerance())
    report = {
        "config": json.loads(cfg.to_json()),
        "entries": [e.to_dict() for e in entries],
        "failed": failed,
        "passed": failed == 0,
    }
    _emit(args.out, qio.json_report_text(report))
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_field=True):
        if need_field:
            p.add_argument("--field", required=True, help="field JSON or shorthand")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="", help="output path (stdout when omitted)")

    p = sub.add_parser("trace", help="integrate a trajectory and export it")
    common(p)
    p.add_argument("--x0", required=True, help="initial point re,im")
    p.add_argument("--t", default="", help="time span a,b")
    p.add_argument("--window", default="", help="annulus r,R (extend mode)")
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.set_defaults(fn=_cmd_trace)

    p = sub.add_parser("quasipolar", help="quasipolar grid CSV or rectification SVG")
    common(p)
    p.add_argument("--window", required=True, help="annulus r,R")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.set_defaults(fn=_cmd_quasipolar)

    p = sub.add_parser("variation", help="p-variation report for an arc CSV")
    common(p)
    p.add_argument("--arc", required=True, help="arc CSV path (t,re,im)")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--window", default="", help="annulus r,R for the quadratic bound")
    p.set_defaults(fn=_cmd_variation)

    p = sub.add_parser("verify", help="run the invariant suite")
    common(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("eval", help="evaluate the field at a point")
    common(p)
    p.add_argument("--x0", required=True, help="point re,im")
    p.set_defaults(fn=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"qcflow: configuration error: {exc}", file=sys.stderr)
        return 2
    except QCFlowError as exc:
        print(f"qcflow: solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"qcflow: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
