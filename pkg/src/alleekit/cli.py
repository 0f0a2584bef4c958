"""Command-line driver: one config file in, CSV files plus a manifest out.

The eight commands map onto the library layers: ``equilibria`` and
``temporal-diagram`` onto the kinetics, ``thresholds`` onto the spatial
linearization, ``simulate``/``lyapunov``/``pulse`` onto the time stepper,
``continue`` onto the steady-state solver, and ``wave-scan`` onto the
profile shooter. Identical (config, seed) pairs produce byte-identical
output files; ``manifest.txt`` records a sha256 per emitted file so reruns
diff cheaply.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 honest
non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import COMMANDS, ExperimentConfig, parse_config
from .continuation import SteadyProblem, continue_branch, interleave, split_fields
from .diagnostics import dominant_period, island_series, largest_lyapunov
from .errors import (
    ConfigError,
    ConvergenceError,
    HypothesisFailed,
    NumericalError,
    ToolkitError,
)
from .linear import (
    branch_point_sigmas,
    kpm_roots,
    mode_reports,
    spatial_spectrum,
    turing_bd_thresholds,
)
from .model import (
    EquilibriumKind,
    KineticParams,
    Stability,
    all_equilibria,
    axial_equilibria,
    coexisting_equilibria,
)
from .pde import (
    Grid,
    Recorder,
    classify_asymptotic,
    default_dt,
    default_grid_size,
    make_ic,
    run,
)
from .temporal import bifurcation_diagram
from .waves import scan_plane, shoot_heteroclinic

# Stable integer labels for CSV output; the enum itself stays string-valued
# so library-level reprs remain readable.
_STAB_CODE = {
    Stability.STABLE_NODE: 0,
    Stability.STABLE_FOCUS: 1,
    Stability.UNSTABLE_NODE: 2,
    Stability.UNSTABLE_FOCUS: 3,
    Stability.SADDLE: 4,
    Stability.NON_HYPERBOLIC: 5,
}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    # 12 significant digits: enough to round-trip float32-scale differences,
    # short enough to keep golden files stable across platforms
    return f"{float(v):.11e}"


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence],
               preamble: Sequence[str] = ()) -> None:
    lines = [f"# {p}" for p in preamble]
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_snapshot(path: Path, x: np.ndarray, u: np.ndarray, v: np.ndarray,
                    preamble: Sequence[str]) -> None:
    _write_csv(path, ("x", "u", "v"), zip(x, u, v), preamble)


def _manifest(out: Path) -> None:
    entries = []
    for f in sorted(out.rglob("*")):
        if not f.is_file() or f.name == "manifest.txt":
            continue
        digest = hashlib.sha256(f.read_bytes()).hexdigest()
        entries.append(f"{digest}  {f.relative_to(out).as_posix()}")
    (out / "manifest.txt").write_text("\n".join(entries) + "\n")


def _grid_and_dt(cfg: ExperimentConfig) -> tuple[Grid, float]:
    n = cfg.N if cfg.N is not None else default_grid_size(cfg.p, cfg.d, cfg.L)
    grid = Grid(L=cfg.L, N=n)
    dt = cfg.dt if cfg.dt is not None else default_dt(grid, cfg.d)
    return grid, dt


def _rng(cfg: ExperimentConfig) -> np.random.Generator | None:
    return None if cfg.seed is None else np.random.default_rng(cfg.seed)


def cmd_equilibria(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    rows = [
        (cfg.p.sigma, e.kind.value, e.u, e.v, e.trace, e.det,
         _STAB_CODE[e.stability])
        for e in all_equilibria(cfg.p)
    ]
    _write_csv(out / "equilibria.csv",
               ("sigma", "kind", "u", "v", "trace", "det", "stability_code"),
               rows)


def _branch_ids(eqs) -> list[int]:
    """0 = extinction state, 1/2 = prey-only by ascending u, 3+ = coexisting
    by ascending u; stable across the sigma sweep so a reader can join rows
    of one branch."""
    ids = [0] * len(eqs)
    axial = sorted((i for i, e in enumerate(eqs)
                    if e.kind in (EquilibriumKind.AXIAL1, EquilibriumKind.AXIAL2)),
                   key=lambda i: eqs[i].u)
    coex = sorted((i for i, e in enumerate(eqs)
                   if e.kind is EquilibriumKind.COEXISTING),
                  key=lambda i: eqs[i].u)
    for rank, i in enumerate(axial):
        ids[i] = 1 + rank
    for rank, i in enumerate(coex):
        ids[i] = 3 + rank
    return ids


def cmd_temporal_diagram(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    nan = float("nan")
    rows = []
    for pt in bifurcation_diagram(cfg.p, cfg.sigma_grid, t_sim=cfg.t_sim):
        ids = _branch_ids(pt.equilibria)
        top_coex = max((i for i, e in enumerate(pt.equilibria)
                        if e.kind is EquilibriumKind.COEXISTING),
                       key=lambda i: pt.equilibria[i].u, default=None)
        for i, e in enumerate(pt.equilibria):
            lo, hi = pt.cycle if (i == top_coex and pt.cycle) else (nan, nan)
            rows.append((pt.sigma, ids[i], e.u, _STAB_CODE[e.stability], lo, hi))
    _write_csv(out / "diagram.csv",
               ("sigma", "branch_id", "u", "stability_code",
                "cycle_umin", "cycle_umax"),
               rows)


def cmd_thresholds(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    nan = float("nan")
    rows = []
    for sigma, regime in turing_bd_thresholds(cfg.p, cfg.d, cfg.bracket):
        ps = cfg.p.with_sigma(sigma)
        e = coexisting_equilibria(ps)[-1]
        spec = spatial_spectrum(e, ps, cfg.d)
        try:
            km, kp = kpm_roots(e, ps, cfg.d)
        except HypothesisFailed:
            km = kp = nan
        rows.append((sigma, regime.value, spec.K, km, kp))
    _write_csv(out / "thresholds.csv",
               ("sigma", "threshold_kind", "K", "kminus", "kplus"), rows)

    if cfg.L is None:
        return
    e = coexisting_equilibria(cfg.p)[-1]
    _write_csv(out / "modes.csv",
               ("j", "k_j", "trace", "det", "unstable"),
               ((m.j, m.k_j, m.trace, m.det, m.unstable)
                for m in mode_reports(e, cfg.p, cfg.d, cfg.L)),
               preamble=(f"sigma = {_fmt(cfg.p.sigma)}",))
    bp_rows = []
    for n in range(1, 33):
        try:
            for sigma in branch_point_sigmas(cfg.p, cfg.d, cfg.L, n, cfg.bracket):
                bp_rows.append((n, sigma))
        except ConvergenceError:
            continue
    _write_csv(out / "bps.csv", ("n", "sigma"), bp_rows)


def _write_summary(out: Path, rec) -> None:
    _write_csv(out / "summary.csv",
               ("t", "U_av", "V_av", "spatial_variance_u"),
               zip(rec.times, rec.u_av, rec.v_av, rec.var_u))


def cmd_simulate(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    grid, dt = _grid_and_dt(cfg)
    f0 = make_ic(cfg.ic, grid, cfg.p, amplitude=cfg.amplitude, rng=_rng(cfg))
    rec = run(f0, cfg.p, cfg.d, cfg.T,
              Recorder(series_every=cfg.series_every,
                       snapshot_every=cfg.snapshot_every),
              dt=dt, scheme=cfg.scheme)
    _write_summary(out, rec)
    if cfg.snapshot_every > 0:
        for k, t in enumerate(rec.snap_times):
            _write_snapshot(out / f"snapshot_{k:04d}.csv", grid.x,
                            rec.snap_u[k], rec.snap_v[k],
                            (f"t = {_fmt(float(t))}",))
    final = rec.final
    _write_snapshot(out / "final.csv", grid.x, final.u, final.v,
                    (f"t = {_fmt(float(rec.snap_times[-1]))}",))
    kind = classify_asymptotic(rec, window=cfg.T / 4)
    (out / "classification.txt").write_text(kind.value + "\n")


def cmd_continue(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    n = cfg.N if cfg.N is not None else 1024
    prob = SteadyProblem(Grid(L=cfg.L, N=n), cfg.p, cfg.d)
    e = coexisting_equilibria(cfg.p)[-1]
    x0 = interleave(np.full(n, e.u), np.full(n, e.v))
    br = continue_branch(x0, cfg.p.sigma, prob, direction=cfg.direction,
                         steps=cfg.steps, ds0=cfg.ds0,
                         sigma_range=cfg.bracket)
    _write_csv(out / "branch.csv",
               ("point_index", "sigma", "l2norm_u", "n_unstable", "tag"),
               ((pt.index, pt.sigma, pt.l2norm_u,
                 -1 if pt.n_unstable is None else pt.n_unstable,
                 ";".join(sorted(pt.tags)))
                for pt in br.points))
    keep = {0, br.points[-1].index}
    keep.update(pt.index for pt in br.points if pt.tags)
    for pt in br.points:
        if pt.index not in keep:
            continue
        u, v = split_fields(pt.x)
        _write_snapshot(out / f"point_{pt.index:04d}.csv",
                        prob.grid.x, u, v,
                        (f"sigma = {_fmt(pt.sigma)}",))


def cmd_wave_scan(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    res = scan_plane(cfg.p, cfg.d, cfg.sigma_grid, cfg.c_grid, jobs=jobs)
    rows = [
        (res.sigmas[i], res.cs[j], int(res.codes[i, j]), res.c_min_at_sigma[i])
        for i in range(res.sigmas.size)
        for j in range(res.cs.size)
    ]
    _write_csv(out / "scan.csv",
               ("sigma", "c", "classification_code", "c_min_at_sigma"), rows)
    if res.sigmas.size == 1 and res.cs.size == 1:
        shot = shoot_heteroclinic(cfg.p.with_sigma(float(res.sigmas[0])),
                                  cfg.d, float(res.cs[0]))
        _write_csv(out / "orbit.csv", ("t", "X", "Y", "W", "Z"),
                   zip(shot.t, *shot.states))


def cmd_lyapunov(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    grid, dt = _grid_and_dt(cfg)
    rng = _rng(cfg)
    f0 = make_ic(cfg.ic, grid, cfg.p, amplitude=cfg.amplitude, rng=rng)
    if cfg.transient > 0:
        f0 = run(f0, cfg.p, cfg.d, cfg.transient, dt=dt,
                 scheme=cfg.scheme).final
    res = largest_lyapunov(f0, cfg.p, cfg.d, cfg.T,
                           renorm_interval=cfg.renorm_interval,
                           dt=dt, rng=rng)
    ts = (1 + np.arange(res.convergence_series.size)) * res.renorm_interval
    _write_csv(out / "lyapunov.csv", ("t", "lambda_running"),
               zip(ts, res.convergence_series))
    (out / "result.txt").write_text(
        f"lambda_max = {_fmt(res.lambda_max)}\n")


def cmd_pulse(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    grid, dt = _grid_and_dt(cfg)
    f0 = make_ic(cfg.ic, grid, cfg.p, amplitude=cfg.amplitude, rng=_rng(cfg))
    rec = run(f0, cfg.p, cfg.d, cfg.T,
              Recorder(series_every=cfg.series_every or 2.0,
                       snapshot_every=cfg.snapshot_every or 50.0),
              dt=dt, scheme=cfg.scheme)
    u1 = max(a.u for a in axial_equilibria(cfg.p))
    counts = island_series(rec, 0.05 * u1)
    _write_csv(out / "islands.csv", ("t", "island_count"),
               zip(rec.snap_times, counts))
    _write_summary(out, rec)
    period = dominant_period(rec.times, rec.u_av, window=cfg.T / 2)
    (out / "result.txt").write_text(
        f"max_islands = {max(counts)}\n"
        f"period = {'none' if period is None else _fmt(period)}\n")


_RUNNERS: dict[str, Callable[[ExperimentConfig, Path, int], None]] = {
    "equilibria": cmd_equilibria,
    "temporal-diagram": cmd_temporal_diagram,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "continue": cmd_continue,
    "wave-scan": cmd_wave_scan,
    "lyapunov": cmd_lyapunov,
    "pulse": cmd_pulse,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   jobs: int = 1) -> Path:
    """Run one configured experiment, returning the output directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _RUNNERS[cfg.command](cfg, out, jobs)
    _manifest(out)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="alleekit",
        description="Desk-scale experiments on the Allee/Beddington-DeAngelis "
                    "reaction-diffusion model; each command reads a config "
                    "file and writes CSVs plus a manifest.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="path to a key = value config file")
    parser.add_argument("--out", default=None,
                        help="output directory (default: [output] dir "
                             "from the config, else the working directory)")
    parser.add_argument("--seed", type=int, default=None,
                        help="overrides [run] seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for wave-scan cells")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = parse_config(text, command=args.command, seed=args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = args.out or cfg.out_dir or "."
        run_experiment(cfg, out, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return 4
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
