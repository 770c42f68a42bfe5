"""``lerayflux`` command line.

Exit codes: 0 success, 1 other analysis failure, 2 configuration, 3 CFL, 4 I/O, 5 shape, 6 resolution.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from . import besov as bv
from . import burgers as bu
from . import diagnostics as dg
from . import plotting
from . import spectral as sp
from .config import RunConfig, load_config
from .errors import ConfigError, LerayFluxError, ShapeError, SnapshotError
from .grid import SpectralField
from .model import ModelState, initial_condition, simulate
from .snapshot import ensure_dir, from_state, read_snapshot, snapshot_name, write_snapshot


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Run:
    """Output directory bookkeeping for one command invocation."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, plots: bool):
        self.command = command
        self.cfg = cfg
        self.out = ensure_dir(out)
        self.plots = plots
        self.files = []

    def path(self, name: str) -> Path:
        p = self.out / name
        ensure_dir(p.parent)
        self.files.append(p)
        return p

    def csv(self, name: str, header, rows) -> Path:
        p = self.path(name)
        try:
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(x) for x in row])
        except OSError as exc:
            raise SnapshotError(f"cannot write {p}: {exc}") from exc
        return p

    def json(self, name: str, payload) -> Path:
        p = self.path(name)
        try:
            p.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_fmt) + "\n")
        except OSError as exc:
            raise SnapshotError(f"cannot write {p}: {exc}") from exc
        return p

    def figure(self, name: str, draw) -> None:
        if self.plots:
            draw(self.path(name))

    def manifest(self) -> dict:
        entries = []
        for p in sorted(set(self.files)):
            data = p.read_bytes()
            entries.append({"path": str(p.relative_to(self.out)), "bytes": len(data),
                            "sha256": hashlib.sha256(data).hexdigest()})
        payload = {
            "run_id": f"{self.command}-{self.cfg.digest[:12]}",
            "command": self.command,
            "config_hash": self.cfg.digest,
            "overrides": self.cfg.overrides,
            "version": __version__,
            "files": entries,
        }
        p = self.out / "manifest.json"
        try:
            p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise SnapshotError(f"cannot write {p}: {exc}") from exc
        return payload


@contextmanager
def _mapper(jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield pool.map
    else:
        yield map


def _echo(label, payload):
    print(f"{label}: " + ", ".join(f"{k}={_fmt(v)}" for k, v in payload.items()))


def _load_state(path, cfg: RunConfig, need_dim=None):
    snap = read_snapshot(path)
    if need_dim is not None and snap.grid.dim != need_dim:
        raise ShapeError(f"{path}: {snap.grid.dim}-D snapshot, this command needs {need_dim}-D data")
    for key in ("dim", "n"):
        want = cfg["grid"][key]
        if f"grid.{key}" in cfg.explicit and getattr(snap.grid, key) != want:
            raise ShapeError(f"{path}: snapshot has grid.{key}={getattr(snap.grid, key)}, "
                             f"configuration asks for {want}")
    return snap.to_state(None if "alpha" in snap.params else cfg["model"]["alpha"])


# commands ---------------------------------------------------------------------

def cmd_simulate(run: Run, args, mapper):
    cfg = run.cfg
    grid, params = cfg.grid, cfg.params
    state = initial_condition(cfg["ic"]["kind"], grid, params, cfg.ic)
    t = cfg["time"]
    out = cfg["output"]
    traj = simulate(state, params, t["t_end"], dt=t["dt"], variant=cfg["model"]["variant"],
                    cfl_safety=t["cfl_safety"], series_every=out["series_every"],
                    snapshot_every=out["snapshot_every"])
    run.csv("energy.csv", ("t", "E_u", "E_Z", "E_total", "max_div"), traj.series.rows())
    for i, snap in enumerate(traj.snapshots):
        write_snapshot(run.path(f"snapshots/{snapshot_name(i)}"), from_state(snap, params))
    run.figure("energy.png", lambda p: plotting.energy_plot(p, traj.series))
    e = traj.series.E_total
    summary = {"steps": int(round((t["t_end"]) / traj.dt)), "dt": traj.dt, "t_end": t["t_end"],
               "E0": e[0], "E_final": e[-1], "drift": traj.series.drift(),
               "max_div": max(traj.series.max_div)}
    run.json("summary.json", summary)
    _echo("simulate", summary)


def cmd_flux(run: Run, args, mapper):
    cfg = run.cfg
    state = _load_state(args.snapshot, cfg, need_dim=3)
    f = cfg["flux"]
    fit = tuple(f["fit_range"]) if f["fit_range"] else None
    rep = dg.flux_spectrum(state.u, f["kappas"], pad=f["pad"], fit_range=fit, mapper=mapper)
    run.csv("flux.csv", ("kappa", "Pi"), rep.rows())
    run.figure("flux.png", lambda p: plotting.line_plot(
        p, rep.kappas, {"Pi": rep.Pi}, "kappa", "Pi_kappa", title="spectral flux"))
    summary = {"n_kappa": len(rep.kappas), "max_abs_Pi": float(np.abs(rep.Pi).max())}
    if rep.slope is not None:
        summary["slope"] = rep.slope
    _echo("flux", summary)


def cmd_defect(run: Run, args, mapper):
    cfg = run.cfg
    state = _load_state(args.snapshot, cfg, need_dim=3)
    d = cfg["defect"]
    rep = dg.defect_report(state.v, state.u, state.Z, d["eps_list"], form=d["form"],
                           points=d["quadrature_points"], pad=d["pad"], mapper=mapper)
    rows = list(rep.rows())
    run.csv("defect.csv", dg.DefectReport.COLUMNS, rows)
    form = "algebraic" if d["form"] != "increment" else "increment"
    summary = {"D1_slope": rep.slope("D1", form), "D2_slope": rep.slope("D2", form)}
    if d["form"] == "both":
        disc = max(r[-1] for r in rows)
        summary["max_discrepancy"] = disc
        summary["within_tolerance"] = bool(disc <= d["tolerance"])
    sel = [r for r in rows if r[1] == form]
    run.figure("defect.png", lambda p: plotting.table_plot(
        p, sel, 0, {"int |D1|": 2, "int |D2|": 4}, "eps", "integrated |D|",
        logx=True, logy=True, reference=(2.0, "eps^2")))
    _echo("defect", summary)


def cmd_besov(run: Run, args, mapper):
    cfg = run.cfg
    state = _load_state(args.snapshot, cfg)
    b = cfg["besov"]
    field = state.Z if args.field == "Z" else state.u
    window = tuple(b["fit_window"]) if b["fit_window"] else None
    rep = bv.besov_report(field, b["s"], b["p"], b["q"], xi_list=b["xi_list"] or None,
                          fit_window=window, mode=b["mode"], mapper=mapper)
    run.csv("besov.csv", ("j", "block_norm"), rep.rows())
    summary = {"s": rep.s, "p": rep.p, "q": rep.q, "norm": rep.norm,
               "exponent": rep.fit.exponent if rep.fit else math.nan,
               "stderr": rep.fit.stderr if rep.fit else math.nan}
    run.csv("besov_summary.csv", tuple(summary), [tuple(summary.values())])
    if rep.curve is not None:
        run.csv("structure.csv", ("xi", "S_p"), rep.curve.rows())
    j = np.arange(-1, len(rep.blocks) - 1)
    run.figure("besov.png", lambda p: plotting.line_plot(
        p, j, {"||Delta_j||_p": rep.blocks}, "j", "block norm", logy=True, title="Littlewood-Paley blocks"))
    _echo("besov", summary)


def cmd_increments(run: Run, args, mapper):
    cfg = run.cfg
    state = _load_state(args.snapshot, cfg)
    inc = cfg["increments"]
    z = state.Z if state.grid.dim == 3 else None
    curve = dg.increment_curve(state.v, state.u, z, inc["xi_list"], mode=inc["mode"])
    run.csv("increments.csv", dg.IncrementCurve.COLUMNS, curve.rows())
    run.figure("increments.png", lambda p: plotting.line_plot(
        p, curve.xi, {"I1": curve.I1, "I2": curve.I2}, "|xi|", "increment integral",
        logx=True, logy=True))
    slope = dg.loglog_slope(curve.xi, curve.I1)[0] if np.all(curve.I1 > 0) else math.nan
    _echo("increments", {"n_xi": len(curve.xi), "I1_slope": slope})


def cmd_burgers(run: Run, args, mapper):
    cfg = run.cfg
    b = cfg["burgers"]
    rep = bu.burgers_study(b["sigma"], b["n"], b["eps_list"], b["points"], mapper=mapper)
    run.csv("burgers.csv", ("eps", "D_signed", "D_abs"), rep.rows())
    run.csv("burgers_structure.csv", ("xi", "S_3"), rep.structure.rows())
    summary = rep.summary()
    run.json("burgers_summary.json", summary)
    u = bu.sawtooth(b["n"], b["sigma"])
    shock = ModelState.from_u(u, SpectralField(u.grid, np.zeros_like(u.data)), 0.0)
    write_snapshot(run.path("sawtooth.bin"), from_state(shock))
    run.figure("burgers.png", lambda p: plotting.line_plot(
        p, rep.eps, {"|D_eps|": np.abs(rep.dissipation)}, "eps", "total dissipation",
        logx=True, title="shock dissipation"))
    _echo("burgers", summary)


def _sweep_one(cfg: RunConfig, alpha: float):
    cfg = cfg.with_values(model={"alpha": float(alpha)})
    grid, params = cfg.grid, cfg.params
    state = initial_condition(cfg["ic"]["kind"], grid, params, cfg.ic)
    t = cfg["time"]
    last = [state]
    traj = simulate(state, params, t["t_end"], dt=t["dt"], variant=cfg["model"]["variant"],
                    cfl_safety=t["cfl_safety"], series_every=cfg["output"]["series_every"],
                    on_step=lambda i, s: last.__setitem__(0, s))
    final = last[0]
    grad = sp.grad_array(final.v.data, grid)
    curl = np.stack([grad[2, 1] - grad[1, 2], grad[0, 2] - grad[2, 0], grad[1, 0] - grad[0, 1]])
    ens = sp.l2_norm(SpectralField(grid, curl)) ** 2
    flux = dg.flux_spectrum(final.u, cfg["flux"]["kappas"], pad=cfg["flux"]["pad"])
    d = cfg["defect"]
    defect = dg.defect_report(final.v, final.u, final.Z, d["eps_list"], form="algebraic",
                              points=d["quadrature_points"], pad=d["pad"])
    return alpha, traj.series.drift(), ens, flux, defect


def cmd_sweep_alpha(run: Run, args, mapper):
    cfg = run.cfg
    alphas = args.alphas if args.alphas else cfg["sweep"]["alpha_list"]
    if len(alphas) < 2:
        raise ConfigError("sweep-alpha needs at least two alpha values", key="sweep.alpha_list")
    alphas = sorted({float(a) for a in alphas}, reverse=True)
    results = list(mapper(lambda a: _sweep_one(cfg, a), alphas))
    run.csv("sweep_energy.csv", ("alpha", "drift", "enstrophy_v"),
            [(a, drift, ens) for a, drift, ens, _, _ in results])
    run.csv("sweep_flux.csv", ("alpha", "kappa", "Pi"),
            [(a, k, p) for a, _, _, fl, _ in results for k, p in fl.rows()])
    run.csv("sweep_defect.csv", ("alpha", "eps", "D1_abs", "D2_abs"),
            [(a, e, de.get(e, "D1").abs_integral("algebraic"), de.get(e, "D2").abs_integral("algebraic"))
             for a, _, _, _, de in results for e in de.eps_list])
    run.figure("sweep.png", lambda p: plotting.line_plot(
        p, [r[0] for r in results], {"drift": [max(r[1], 1e-300) for r in results]},
        "alpha", "relative energy drift", logy=True))
    summary = {"n_alpha": len(results), "max_drift": max(r[1] for r in results)}
    ens = [r[2] for r in results]
    summary["enstrophy_monotone"] = bool(all(b >= a for a, b in zip(ens, ens[1:])))
    _echo("sweep-alpha", summary)


def cmd_balance(run: Run, args, mapper):
    cfg = run.cfg
    if cfg.grid.dim != 3:
        raise ShapeError("the balance residual is defined for 3-D runs")
    grid, params = cfg.grid, cfg.params
    state = initial_condition(cfg["ic"]["kind"], grid, params, cfg.ic)
    b = cfg["balance"]
    if len(b["chi_center"]) != grid.dim:
        raise ShapeError(f"balance.chi_center has {len(b['chi_center'])} entries for a {grid.dim}-D grid")
    dts = [cfg["time"]["dt"] / 2**i for i in range(b["dt_levels"])]
    if dts[0] <= 0:
        raise ConfigError("balance needs an explicit time.dt > 0", key="time.dt")
    rows = dg.balance_table(state, params, b["t_center"], dts, b["eps_list"], b["chi_center"],
                            b["chi_radius"], cfg["model"]["variant"], b["form"], b["pad"],
                            cfg["defect"]["quadrature_points"])
    run.csv("balance.csv", ("eps", "dt", "residual"), rows)

    def draw(p):
        eps = sorted({r[0] for r in rows}, reverse=True)
        series = {f"eps={e:g}": [abs(r[2]) for r in rows if r[0] == e] for e in eps}
        plotting.line_plot(p, dts, series, "dt", "|<R_eps, chi>|", logx=True, logy=True,
                           reference=(2.0, "dt^2"))
    run.figure("balance.png", draw)
    _echo("balance", {"rows": len(rows), "max_abs_residual": max(abs(r[2]) for r in rows)})


COMMANDS = {
    "simulate": cmd_simulate,
    "flux": cmd_flux,
    "defect": cmd_defect,
    "besov": cmd_besov,
    "increments": cmd_increments,
    "burgers": cmd_burgers,
    "sweep-alpha": cmd_sweep_alpha,
    "balance": cmd_balance,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides output.out_dir)")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for independent diagnostics")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration entry, e.g. --set time.t_end=0.5")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    parser = argparse.ArgumentParser(prog="lerayflux", parents=[common],
                                     description="Leray-alpha reactive flow simulator and energy diagnostics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate the model and write energy series and snapshots")
    for name, text in (("flux", "spectral energy flux of a snapshot"),
                       ("defect", "mollified defect integrals of a snapshot"),
                       ("besov", "Littlewood-Paley blocks, Besov norm and structure-function fit"),
                       ("increments", "direction-averaged increment integrals")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("snapshot", help="snapshot file written by 'simulate' or 'burgers'")
        if name == "besov":
            p.add_argument("--field", choices=("u", "Z"), default="u")
    sub.add_parser("burgers", parents=[common], help="sawtooth shock study")
    p = sub.add_parser("sweep-alpha", parents=[common], help="repeat a run over several alpha values")
    p.add_argument("--alphas", type=float, nargs="+", help="alpha values (default: sweep.alpha_list)")
    sub.add_parser("balance", parents=[common], help="local energy balance refinement table")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        out = Path(args.out or cfg["output"]["out_dir"])
        plots = cfg["output"]["plots"] and not args.no_plots
        run = Run(args.command, cfg, out, plots)
        with _mapper(args.jobs) as mapper:
            COMMANDS[args.command](run, args, mapper)
        run.manifest()
    except LerayFluxError as exc:
        print(f"lerayflux: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"lerayflux: error: {exc}", file=sys.stderr)
        return SnapshotError.exit_code
    except ValueError as exc:
        print(f"lerayflux: error: {exc}", file=sys.stderr)
        return LerayFluxError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
