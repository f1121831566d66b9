"""Batch driver: ``bubblescatter {check,solve,field,design-b}``.

Exit codes: 0 success, 1 parse or configuration error, 2 violated
smallness condition (always for ``check``, with ``--strict`` otherwise),
3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import __version__
from .dynamics import (closed_form_dimer, closed_form_tetramer, collective_factor, default_pairing,
                       solve_delay_system, solve_dense_system, solve_dimer_collection)
from .effective import (EffectiveDesign, dispersion_coefficient, dispersive_residual, load_grid,
                        recover_b, save_grid)
from .errors import (AllMasked, BubbleScatterError, NonPositiveEigenvalue, NonPositiveStiffness,
                     SingularMatrix, StrongCouplingRegime)
from .field import (ObservationSet, dimer_collection_field, dimer_dominant_field, scattered_field,
                    write_csv, write_time_series_csv)
from .incident import IncidentField
from .scene import check_apriori_condition, check_inversion_condition, load_scene, minnaert_frequency

METHODS = ("delay", "dense", "closed-dimer", "closed-tetramer", "dimer-collection")
CHANNELS = {"u_s": "u_s", "us": "u_s", "u1": "U1", "u2": "U2", "total": "total"}
DEGENERATE = (AllMasked, SingularMatrix, NonPositiveEigenvalue, NonPositiveStiffness, StrongCouplingRegime)


class ConditionViolated(Exception):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class RunConfig:
    command: str
    scene: Path | None = None
    T: float | None = None
    dt: float | None = None
    out: Path | None = None
    method: str = "delay"
    variant: str = "theorem"
    forcing: str = "monopole"
    strict: bool = False
    overwrite: bool = False
    channels: tuple = ("u_s",)
    points: list = field(default_factory=list)
    pairs: list | None = None
    # effective design
    p0: Path | None = None
    d: float | None = None
    c: float = 1.0
    sigma: float = 1.0
    eps_mask: float = 1e-3
    constant: bool = False

    def validate(self):
        if self.command in ("solve", "field"):
            if self.T is None or self.dt is None:
                raise ValueError("--T and --dt are required")
            if not (self.T > 0 and self.dt > 0 and self.dt < self.T):
                raise ValueError("need T > 0 and 0 < dt < T")
            if self.method not in METHODS:
                raise ValueError(f"unknown method {self.method!r}")
        if self.command in ("solve", "field", "check") and self.scene is None:
            raise ValueError("--scene is required")
        if self.command == "field" and not self.points:
            raise ValueError("give at least one --point x,y,z")
        if self.command == "design-b" and self.p0 is None:
            raise ValueError("--p0 is required")
        if self.command == "design-b" and self.d is None and self.scene is None:
            raise ValueError("give --d or a --scene to derive it from")
        if self.command != "check" and self.out is None:
            raise ValueError("--out is required")

    def to_metadata(self) -> dict:
        meta = {"command": self.command, "version": __version__}
        if self.command in ("solve", "field"):
            meta.update(T=self.T, dt=self.dt, method=self.method, forcing=self.forcing)
        if self.command == "field":
            meta["variant"] = self.variant
        if self.scene is not None:
            meta["scene"] = Path(self.scene).name
        return meta


# ---------------------------------------------------------------------------
# helpers

def _prepare_out(out: Path, names, overwrite: bool):
    out.mkdir(parents=True, exist_ok=True)
    clash = [n for n in names if (out / n).exists()]
    if clash and not overwrite:
        raise FileExistsError(f"{out / clash[0]} exists; pass --overwrite to replace it")


def _condition_report(c) -> dict:
    inv = check_inversion_condition(c)
    apr = check_apriori_condition(c)
    bb = c.bubbles[0]
    report = {
        "inversion": {"satisfied": inv.satisfied, "margin": inv.margin, "value": inv.value},
        "apriori": {"satisfied": apr.satisfied, "value": apr.value},
        "omega_M": minnaert_frequency(bb.k_c_bar, c.medium.rho_m, bb.radius_ref),
        "n_bubbles": c.size,
    }
    if c.size == 2:
        report["J_factors"] = {"dimer": [collective_factor(c, 1)]}
    elif c.size == 4:
        report["J_factors"] = {"tetramer": [collective_factor(c, 3)]}
    if c.size % 2 == 0 and c.size > 2:
        report["J_factors"] = dict(report.get("J_factors", {}),
                                   dimers=[collective_factor(c.subset(p), 1) for p in default_pairing(c.size)])
    return report


def _enforce(report: dict, strict: bool):
    ok = report["inversion"]["satisfied"] and report["apriori"]["satisfied"]
    if not ok:
        msg = "smallness condition violated: " + json.dumps(
            {k: report[k] for k in ("inversion", "apriori")}, sort_keys=True)
        if strict:
            raise ConditionViolated(msg, report)
        print(f"warning: {msg}", file=sys.stderr)


def _solve(cfg: RunConfig, scene, c, fin):
    pairs = cfg.pairs or (default_pairing(c.size) if cfg.method == "dimer-collection" else None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # condition already reported
        if cfg.method == "delay":
            return solve_delay_system(c, fin, cfg.T, cfg.dt, cfg.forcing)
        if cfg.method == "dense":
            return solve_dense_system(c.system_matrix(), fin, cfg.T, cfg.dt, c, cfg.forcing)
        if cfg.method == "closed-dimer":
            return closed_form_dimer(c, fin, cfg.T, cfg.dt, cfg.forcing)
        if cfg.method == "closed-tetramer":
            return closed_form_tetramer(c, fin, cfg.T, cfg.dt, cfg.forcing)
        return solve_dimer_collection(c, pairs, fin, cfg.T, cfg.dt, forcing_method=cfg.forcing)


# ---------------------------------------------------------------------------
# commands

def cmd_check(cfg: RunConfig) -> dict:
    scene = load_scene(cfg.scene)
    report = _condition_report(scene.cluster())
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if cfg.out is not None:
        _prepare_out(cfg.out, ["check.json"], cfg.overwrite)
        (cfg.out / "check.json").write_text(text)
    sys.stdout.write(text)
    if not (report["inversion"]["satisfied"] and report["apriori"]["satisfied"]):
        raise ConditionViolated("smallness condition violated", report)
    return report


def cmd_solve(cfg: RunConfig) -> Path:
    scene = load_scene(cfg.scene)
    c = scene.cluster()
    _enforce(_condition_report(c), cfg.strict)
    _prepare_out(cfg.out, ["amplitudes.csv"], cfg.overwrite)
    sol = _solve(cfg, scene, c, IncidentField(scene.source, scene.medium))
    names = ["t"] + [f"Y_{i + 1}" for i in range(c.size)]
    path = cfg.out / "amplitudes.csv"
    write_csv(path, cfg.to_metadata(), names, np.column_stack([sol.t, sol.y.T]))
    return path


def cmd_field(cfg: RunConfig) -> list:
    scene = load_scene(cfg.scene)
    c = scene.cluster()
    _enforce(_condition_report(c), cfg.strict)
    files = [f"field_point{k}.csv" for k in range(len(cfg.points))]
    _prepare_out(cfg.out, files, cfg.overwrite)
    fin = IncidentField(scene.source, scene.medium)
    wanted = [CHANNELS[ch] for ch in cfg.channels]
    if "U1" in wanted or "U2" in wanted:
        wanted.append("total")

    sol = _solve(cfg, scene, c, fin)
    obs = ObservationSet(np.array(cfg.points, dtype=float), sol.t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        series = scattered_field(c, sol, obs, cfg.variant)
    if {"U1", "U2", "total"} & set(wanted):
        if cfg.method == "dimer-collection" or (c.size > 2 and c.size != 4):
            pairs = cfg.pairs or default_pairing(c.size)
            dominant = dimer_collection_field(c, pairs, fin, obs, cfg.T, cfg.dt)
        else:
            dominant = dimer_dominant_field(c, fin, obs, cfg.T, cfg.dt)
        for ts, dom in zip(series, dominant):
            ts.channels.update(dom.channels)
            ts.metadata["dominant"] = dom.metadata

    out = []
    for ts, name in zip(series, files):
        columns = [ch for ch in ("u_s", "U1", "U2", "total") if ch in wanted]
        write_time_series_csv(ts, cfg.out / name, cfg.to_metadata(), columns)
        out.append(cfg.out / name)
    return out


def cmd_design_b(cfg: RunConfig) -> dict:
    p0, grid, region, _ = load_grid(cfg.p0)
    if cfg.d is not None:
        d = cfg.d
    else:
        scene = load_scene(cfg.scene)
        bb = scene.bubbles[0]
        d = dispersion_coefficient(bb.k_c_bar, scene.medium.rho_m, bb.radius_ref)
    suffix = Path(cfg.p0).suffix or ".npy"
    names = [f"b{suffix}", f"b{suffix}.json", f"y{suffix}", f"y{suffix}.json", "design_report.json"]
    _prepare_out(cfg.out, names, cfg.overwrite)

    design = recover_b(EffectiveDesign(grid, p0, d, cfg.c, region, cfg.sigma, cfg.eps_mask),
                       constant=cfg.constant)
    # U from the momentum equation with zero initial velocity
    u = np.stack([-cumulative_trapezoid(np.gradient(p0, h, axis=k + 1, edge_order=2), dx=grid.dt,
                                        axis=0, initial=0.0)
                  for k, h in enumerate(grid.spacing)])
    b_for_residual = design.b_hat if cfg.constant else design.b_field
    residual = dispersive_residual(p0, u, design.y_field, b_for_residual, cfg.c, d, grid, region)
    save_grid(cfg.out / f"b{suffix}", design.b_field, grid, region, {"quantity": "b"})
    save_grid(cfg.out / f"y{suffix}", design.y_field, grid, region, {"quantity": "Y"})
    finite = design.b_field[design.mask]
    report = {
        "d": d, "c": cfg.c, "sigma": cfg.sigma, "eps_mask": cfg.eps_mask,
        "b_hat": design.b_hat,
        "masked_fraction": float(1.0 - design.mask.mean()),
        "b_range": [float(finite.min()), float(finite.max())],
        "residual": residual,
        "version": __version__,
    }
    (cfg.out / "design_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "field": cmd_field, "design-b": cmd_design_b}


# ---------------------------------------------------------------------------
# argument parsing

def _point(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {text!r}; expected x,y,z")
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"bad point {text!r}; expected x,y,z")
    return vals


def _pair(text: str):
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad pair {text!r}; expected i,j")
    return (i, j)


def _channels(text: str):
    names = tuple(s.strip().lower() for s in text.split(",") if s.strip())
    bad = [n for n in names if n not in CHANNELS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown channel(s) {bad}; choose from u_s,u1,u2,total")
    return names


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bubblescatter", description="Time-domain scattering by bubble clusters.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, timed=True):
        p.add_argument("--scene", type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--overwrite", action="store_true")
        if timed:
            p.add_argument("--T", type=float)
            p.add_argument("--dt", type=float)
            p.add_argument("--method", choices=METHODS, default="delay")
            p.add_argument("--forcing", choices=("monopole", "quadrature"), default="monopole")
            p.add_argument("--strict", action="store_true", help="exit 2 when a smallness condition fails")
            p.add_argument("--pairs", type=_pair, action="append", help="dimer pairing i,j (repeatable)")

    common(sub.add_parser("check", help="report the smallness conditions as JSON"), timed=False)
    common(sub.add_parser("solve", help="write the amplitudes Y_i(t)"))
    p = sub.add_parser("field", help="write scattered pressure time series")
    common(p)
    p.add_argument("--point", type=_point, action="append", dest="points", default=[])
    p.add_argument("--variant", choices=("theorem", "corollary"), default="theorem")
    p.add_argument("--channels", type=_channels, default=("u_s",))
    p = sub.add_parser("design-b", help="recover the effective coefficient b from a desired pressure")
    common(p, timed=False)
    p.add_argument("--p0", type=Path)
    p.add_argument("--d", type=float)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--eps-mask", type=float, default=1e-3)
    p.add_argument("--constant", action="store_true")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    keys = set(RunConfig.__dataclass_fields__) & set(vars(ns))
    cfg = RunConfig(**{k: getattr(ns, k) for k in keys})
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        COMMANDS[cfg.command](cfg)
    except ConditionViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DEGENERATE as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (BubbleScatterError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
