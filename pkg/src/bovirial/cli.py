"""Command-line experiments: run, scans, virial checks, inequality lab and reports."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import lab, svg
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import (
    BlowUpError,
    ResolutionError,
    Trajectory,
    read_snapshot,
    run,
    trajectory_from_states,
    write_snapshot,
)
from .spectral import Field, seminorm_hs
from .virial import (
    ConstantWeight,
    CompactStepWeight,
    DecayRecord,
    SmoothStepWeight,
    ball,
    front_mass,
    functional_I,
    functional_I_rho,
    functional_J,
    lemma34_partial,
    omega_mass,
    regional_half_energy,
    regional_mass,
    virial_breakdown,
)
from .weights import T_MIN, FrontSpec, ScheduleError, ScheduleParams

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_RESOLUTION = 4

LEDGER_COLUMNS = ("t", "I1", "I2", "I3", "linf")
DECAY_COLUMNS = ("t", "I1", "I2", "I3", "mass_ball", "half_energy_ball", "func_I", "func_I_rho",
                 "func_J", "lemma34_partial", "mass_right", "mass_left", "linf")
FRONT_COLUMNS = ("t", "I2", "mass_right", "mass_left", "mass_omega", "linf")
VIRIAL_COLUMNS = ("weight", "t", "A1", "A2", "A3", "A4", "A5", "lhs_fd", "residual", "relative_residual")

# sup-norm Sobolev constant on the line: ||u||_inf <= SOBOLEV_C ||u||_{H^1}
SOBOLEV_C = 1 / math.sqrt(2)


class NonFiniteError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# persistence


def write_csv(path: Path, header, rows) -> None:
    """UTF-8, LF, 17 significant digits; refuses NaN and Inf."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            out = []
            for v in row:
                if isinstance(v, str):
                    out.append(v)
                    continue
                v = float(v)
                if not math.isfinite(v):
                    raise NonFiniteError(f"non-finite value in {path.name}: {row}")
                out.append(format(v, ".17g"))
            w.writerow(out)


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@dataclass
class ExperimentManifest:
    experiment_id: str
    config_digest: str
    created: str
    inventory: list = field(default_factory=list)
    status: str = "running"
    notes: dict = field(default_factory=dict)

    FILENAME = "manifest.json"
    CONFIG_NAME = "config.ini"

    def save(self, out: Path) -> None:
        (out / self.FILENAME).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")

    @classmethod
    def load(cls, out: Path) -> "ExperimentManifest":
        return cls(**json.loads((out / cls.FILENAME).read_text(encoding="utf-8")))


def verify_manifest(out) -> bool:
    """Stored config matches the digest and, on success, every listed file exists."""
    out = Path(out)
    man = ExperimentManifest.load(out)
    cfg = out / ExperimentManifest.CONFIG_NAME
    if not cfg.exists() or hashlib.sha256(cfg.read_bytes()).hexdigest() != man.config_digest:
        return False
    if man.status == "complete":
        return all((out / p).exists() for p in man.inventory)
    return True


class Experiment:
    """Output directory bookkeeping for one subcommand invocation."""

    def __init__(self, out: Path, cfg: ExperimentConfig, command: str):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        (out / ExperimentManifest.CONFIG_NAME).write_bytes(cfg.text)
        self.manifest = ExperimentManifest(
            experiment_id=f"{command}-{cfg.digest[:12]}",
            config_digest=cfg.digest,
            created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        self.manifest.save(out)

    def record(self, rel: str) -> Path:
        self.manifest.inventory.append(rel)
        return self.out / rel

    def finish(self, status: str = "complete") -> None:
        self.manifest.inventory.sort()
        self.manifest.status = status
        self.manifest.save(self.out)


# ---------------------------------------------------------------------------
# shared pieces


def _trajectory(cfg: ExperimentConfig) -> Trajectory:
    rc = cfg.run_config()
    source = cfg["scan"]["source"]
    if not source:
        return run(rc)
    src = Path(source)
    if not src.is_absolute():
        src = cfg.base_dir / src
    files = sorted((src / "snapshots").glob("*.bovf"))
    if not files:
        raise ConfigError(f"no snapshots under {src / 'snapshots'}")
    states = [read_snapshot(f) for f in files]
    for u, _ in states:
        if u.grid != rc.grid:
            raise ConfigError(f"stored snapshots use {u.grid}, config asks for {rc.grid}")
    return trajectory_from_states(rc, [t for _, t in states], [u.values for u, _ in states])


def _scan_indices(cfg: ExperimentConfig, traj: Trajectory, exp: Experiment) -> list[int]:
    requested = cfg["scan"]["t_start"]
    t_start = max(requested, cfg["time"]["t0"], T_MIN)
    exp.manifest.notes["t_start"] = {"requested": requested, "used": t_start,
                                     "clamped": t_start != requested}
    stride = cfg["scan"]["stride"]
    if stride < 1:
        raise ConfigError(f"[scan] stride must be >= 1, got {stride}")
    idx = [i for i, t in enumerate(traj.times) if t >= t_start - 1e-12][::stride]
    if not idx:
        raise ConfigError(f"trajectory ends at t={traj.times[-1]:g}, before the scan start {t_start:g}")
    return idx


def _fronts(cfg: ExperimentConfig) -> tuple[FrontSpec, FrontSpec]:
    w = cfg["weights"]
    try:
        right = FrontSpec("right", c0=w["C0"], c1=w["right_c1"])
        left = FrontSpec("left", c1=w["left_c1"], c2=w["left_c2"], eta=w["eta"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return right, left


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def suggest_C0(u0: Field, k: int = 1) -> float:
    """Front speed above which the cubic term is absorbed: ``C0 = 3 c0`` with
    ``(2/(k+2)) (c ||u0||_{H^1})^k < c0``."""
    h1 = math.sqrt(seminorm_hs(u0, 0) ** 2 + seminorm_hs(u0, 1) ** 2)
    return 3 * 2 / (k + 2) * (SOBOLEV_C * h1) ** k


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: ExperimentConfig, exp: Experiment, args) -> None:
    traj = run(cfg.run_config())
    (exp.out / "snapshots").mkdir(exist_ok=True)
    for i, t in enumerate(traj.times):
        write_snapshot(exp.record(f"snapshots/snap_{i:05d}.bovf"), traj.field(i), t)
    led = traj.ledger
    rows = [(t, a, b, c, np.abs(s).max()) for t, a, b, c, s in zip(led.times, led.I1, led.I2, led.I3, traj.samples)]
    write_csv(exp.record("ledger.csv"), LEDGER_COLUMNS, rows)
    exp.manifest.notes["drift"] = led.drift()


def cmd_decay_scan(cfg: ExperimentConfig, exp: Experiment, args) -> None:
    w = cfg["weights"]
    try:
        params = ScheduleParams(w["b"], w["m"], w["q"], w["sign"], w["corollary"])
    except ScheduleError as exc:
        raise ConfigError(str(exc)) from None
    exp.manifest.notes["schedule_bound_mismatch"] = params.bound_mismatch
    right, left = _fronts(cfg)
    rc = cfg.run_config()
    a, b = ball(rc.t_end, params.b)
    if not rc.grid.contains(a, b):
        raise ConfigError(f"ball of radius t_end^b = {b:g} leaves the box of half-width {rc.grid.L / 2:g}")
    traj = _trajectory(cfg)
    idx = _scan_indices(cfg, traj, exp)
    led = traj.ledger

    def row(i):
        u, t = traj.field(i), float(traj.times[i])
        rec = DecayRecord(
            t, regional_mass(u, t, params.b), f"ball(b={params.b})",
            I=functional_I(u, t, params, w["sigma"], w["delta"]),
            I_rho=functional_I_rho(u, t, params, w["sigma"], w["delta"]),
            J=functional_J(u, t, params, w["sigma"]),
        )
        return [t, led.I1[i], led.I2[i], led.I3[i], rec.mass, regional_half_energy(u, t, params.b),
                rec.I, rec.I_rho, rec.J, 0.0, front_mass(u, t, right, cfg["scan"]["p"]),
                front_mass(u, t, left, cfg["scan"]["p"]), np.abs(u.values).max()]

    rows = _map(row, idx, args.threads)
    times = np.array([r[0] for r in rows])
    partial = lemma34_partial(times, [r[4] for r in rows]) if len(rows) > 1 else np.zeros(1)
    for r, p in zip(rows, partial):
        r[9] = p
    write_csv(exp.record("decay.csv"), DECAY_COLUMNS, rows)


def cmd_front_scan(cfg: ExperimentConfig, exp: Experiment, args) -> None:
    right, left = _fronts(cfg)
    w = cfg["weights"]
    traj = _trajectory(cfg)
    idx = _scan_indices(cfg, traj, exp)
    c0 = suggest_C0(traj.field(0), traj.model.k)
    exp.manifest.notes["suggested_C0"] = c0
    print(f"suggested C0 > {c0:.6g} (from ||u0||_H1); configured C0 = {w['C0']:g}")
    p = cfg["scan"]["p"]

    def row(i):
        u, t = traj.field(i), float(traj.times[i])
        return [t, traj.ledger.I2[i], front_mass(u, t, right, p), front_mass(u, t, left, p),
                omega_mass(u, t, w["omega_c"], w["gamma"], w["C0"], w["omega_exponent"]),
                np.abs(u.values).max()]

    write_csv(exp.record("front.csv"), FRONT_COLUMNS, _map(row, idx, args.threads))


def _virial_weight(cfg: ExperimentConfig):
    w = cfg["weights"]
    kind = w["virial_weight"]
    try:
        if kind == "smooth_step":
            return SmoothStepWeight(w["step_x0"], w["step_width"], w["step_speed"])
        if kind == "compact_step":
            return CompactStepWeight(w["step_x0"], w["step_width"])
        if kind == "constant":
            return ConstantWeight()
        right, left = _fronts(cfg)
        if kind == "front_right":
            return FrontSpec("right", c0=w["C0"] / 3, c1=w["right_c1"])
        if kind == "front_left":
            return left
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"[weights] virial_weight must be one of smooth_step, compact_step, constant, "
                      f"front_right, front_left; got {kind!r}")


def cmd_virial_check(cfg: ExperimentConfig, exp: Experiment, args) -> None:
    weight = _virial_weight(cfg)
    traj = _trajectory(cfg)
    n = len(traj.times)
    if n < 5:
        raise ConfigError(f"virial check needs at least 5 snapshots, run produces {n}")
    t_min = {"front_right": 0.0, "front_left": 1.0}.get(cfg["weights"]["virial_weight"], -np.inf)
    idx = [i for i in range(2, n - 2) if traj.times[i - 2] > t_min]
    if not idx:
        raise ConfigError("no snapshot has two neighbours inside the weight's time range")

    def row(item):
        name, wt, i = item
        b = virial_breakdown(traj, i, wt)
        return [name, b.t, *b.terms, b.lhs_fd, b.residual, b.relative_residual]

    items = [("unit", ConstantWeight(), idx[0])]
    items += [(cfg["weights"]["virial_weight"], weight, i) for i in idx]
    write_csv(exp.record("virial.csv"), VIRIAL_COLUMNS, _map(row, items, args.threads))


def cmd_ineq_lab(cfg: ExperimentConfig, exp: Experiment, args) -> None:
    s = cfg["scan"]
    seed = s["seed"] if args.seed is None else args.seed
    exp.manifest.notes["seed"] = seed
    rows = lab.constants_report(seed=seed, family_size=s["family_size"], N=s["lab_N"],
                                claim_resolution=s["claim_resolution"])
    write_csv(exp.record("constants.csv"), lab.REPORT_HEADER,
              [(r.lemma, str(r.family_size), str(r.seed), r.constant, r.refinement_change) for r in rows])


REPORT_SOURCES = {
    "ledger.csv": False,
    "decay.csv": True,
    "front.csv": True,
    "virial.csv": False,
}


def cmd_report(run_dir: Path) -> list[Path]:
    """One SVG per numeric series plus ``summary.txt``; returns the files written."""
    found = [name for name in REPORT_SOURCES if (run_dir / name).exists()]
    if not found:
        raise ConfigError(f"no result CSVs in {run_dir}")
    plots = run_dir / "plots"
    plots.mkdir(exist_ok=True)
    written = []
    lines = [f"report for {run_dir}"]
    for name in found:
        header, rows = read_csv(run_dir / name)
        if not rows:
            raise ConfigError(f"{name} has no data rows")
        if name == "virial.csv":
            wname = rows[-1][0]
            rows = [r for r in rows if r[0] == wname]
            header, rows = header[1:], [r[1:] for r in rows]
        data = np.array(rows, dtype=float)
        t = data[:, 0]
        logx = REPORT_SOURCES[name] and t.min() > 0
        stem = name[:-4]
        lines.append(f"[{stem}] t in [{t.min():.6g}, {t.max():.6g}], {len(t)} rows")
        for j, col in enumerate(header[1:], start=1):
            y = data[:, j]
            path = plots / f"{stem}_{col}.svg"
            path.write_text(svg.line_plot(t, y, title=f"{stem}: {col}", xlabel="t", ylabel=col, logx=logx),
                            encoding="utf-8")
            written.append(path)
            lines.append(f"  {col}: min {y.min():.9g} max {y.max():.9g}")
        for inv in ("I1", "I2", "I3"):
            if inv in header:
                y = data[:, header.index(inv)]
                scale = abs(y[0]) if y[0] != 0 else 1.0
                lines.append(f"  drift {inv}: {np.max(np.abs(y - y[0])) / scale:.3e}")
        if name == "decay.csv" and len(t) > 1:
            m = data[:, header.index("mass_ball")]
            T = t[-1]
            slope, ref = m[-1] / (T * np.log(T)), m[0] / (T * np.log(T))
            verdict = "below" if slope < ref else "not below"
            lines.append(f"  accumulator slope at T={T:.6g}: {slope:.6e}, stationary reference "
                         f"{ref:.6e} ({verdict})")
    summary = run_dir / "summary.txt"
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(summary)
    return written


COMMANDS = {
    "run": cmd_run,
    "decay-scan": cmd_decay_scan,
    "front-scan": cmd_front_scan,
    "virial-check": cmd_virial_check,
    "ineq-lab": cmd_ineq_lab,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bovirial", description=__doc__)
    p.add_argument("command", choices=[*COMMANDS, "report"])
    p.add_argument("run_dir", nargs="?", help="run directory (report only; defaults to --out)")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    return p


def _default_out(command: str, cfg: ExperimentConfig) -> Path:
    return Path(os.environ.get("BOVIRIAL_OUT", "bovirial-runs")) / f"{command}-{cfg.digest[:12]}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "report":
        run_dir = Path(args.run_dir) if args.run_dir else args.out
        if run_dir is None:
            print("error: report needs a run directory", file=sys.stderr)
            return EXIT_CONFIG
        try:
            for path in cmd_report(run_dir):
                print(path)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return 0

    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or _default_out(args.command, cfg)
    exp = Experiment(out, cfg, args.command)
    exp.manifest.notes["threads"] = args.threads
    code, status = 0, "complete"
    try:
        COMMANDS[args.command](cfg, exp, args)
    except ResolutionError as exc:
        code, status = EXIT_RESOLUTION, f"failed: {exc}"
    except (ConfigError, ScheduleError) as exc:
        code, status = EXIT_CONFIG, f"failed: {exc}"
    except BlowUpError as exc:
        code, status = EXIT_BLOWUP, f"failed: {exc}"
    except NonFiniteError as exc:
        code, status = EXIT_FAILURE, f"failed: {exc}"
    exp.finish(status)
    if code:
        print(f"error: {status[len('failed: '):]}", file=sys.stderr)
    else:
        print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
