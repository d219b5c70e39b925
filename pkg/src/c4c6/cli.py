"""Command line: ``python3 -m c4c6 {simulate,resources,fit,threshold,report,verify}``.

Exit status is 0 on success, 2 when a report is infeasible or lacks data,
and 1 on errors (including invalid configuration).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import harness, resources
from .noise import noise_params
from .protocols import PrepContext
from .store import ResultStore, canonical, verify_store

EXPERIMENTS = ("cnot", "had", "prep", "meas", "decode", "chain", "bell")
STAT_COLUMNS = ["gamma", "level", "mode", "trials", "accepted", "detected_k", "conditional_k", "pd", "pd_lo", "pd_hi", "pc", "pc_lo", "pc_hi", "cnots_mean", "seed"]
REPORTS = ("fig2", "fig3", "fig4", "fig5", "tables")
DEFAULT_KQ = [10.0**e for e in range(3, 13)]
DEFAULT_FIG5_GAMMA = [0.001, 0.003, 0.01, 0.02]


class ConfigError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    command: str = "simulate"
    experiment: str = "cnot"
    gamma: list = field(default_factory=lambda: [0.03])
    level: list = field(default_factory=lambda: [1])
    trials: int = 1000
    mode: str = "postselect"
    dl: int = 1
    seed: int | None = None
    out: str | None = None
    format: str = "csv"
    store: str = "results.jsonl"
    kq: list = field(default_factory=lambda: list(DEFAULT_KQ))
    steps: int = 30
    teleport: bool = True
    logical: str = "both"
    shard_size: int = 256
    workers: int = 1
    free: bool = False
    which: str | None = None
    rerun: int = 0

    def validate(self) -> None:
        def bad(path, msg):
            raise ConfigError(f"config.{path}: {msg}")

        if self.command not in ("simulate", "resources", "fit", "threshold", "report", "verify"):
            bad("command", f"unknown command {self.command!r}")
        if self.experiment not in EXPERIMENTS:
            bad("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        for name in ("gamma", "level", "kq"):
            v = getattr(self, name)
            if not isinstance(v, list) or not v:
                bad(name, "grid must be a non-empty list")
        for i, g in enumerate(self.gamma):
            if not isinstance(g, (int, float)) or not 0 <= g <= 1:
                bad(f"gamma[{i}]", f"{g!r} not in [0, 1]")
        for i, l in enumerate(self.level):
            if not isinstance(l, int) or l < 1:
                bad(f"level[{i}]", f"{l!r} is not a level >= 1")
        for i, k in enumerate(self.kq):
            if not isinstance(k, (int, float)) or k <= 0:
                bad(f"kq[{i}]", f"{k!r} must be positive")
        if not isinstance(self.trials, int) or self.trials < 1:
            bad("trials", "must be an integer >= 1")
        if self.mode not in ("postselect", "ec"):
            bad("mode", "must be postselect or ec")
        if self.dl not in (0, 1):
            bad("dl", "must be 0 or 1")
        if self.format not in ("json", "csv"):
            bad("format", "must be json or csv")
        if self.command == "simulate" and not isinstance(self.seed, int):
            bad("seed", "required for simulate")
        if self.command == "report" and self.which not in REPORTS:
            bad("which", f"must be one of {', '.join(REPORTS)}")
        if self.steps < 2:
            bad("steps", "must be at least 2")
        if self.shard_size < 1 or self.workers < 1:
            bad("shard_size", "shard size and workers must be positive")
        if self.logical not in ("both", "L"):
            bad("logical", "must be both or L")

    @property
    def ctx(self) -> PrepContext:
        return PrepContext(self.mode, self.dl)


# ---------------------------------------------------------------------------
# simulate


def cell_config(cfg: ExperimentConfig, gamma: float, level: int) -> dict:
    """Everything that determines a cell's record except the seed (and worker count)."""
    c = {"experiment": cfg.experiment, "gamma": gamma, "level": level, "mode": cfg.mode, "dl": cfg.dl, "trials": cfg.trials, "shard_size": cfg.shard_size}
    if cfg.experiment in ("cnot", "had", "chain"):
        c["logical"] = cfg.logical
    if cfg.experiment == "chain":
        c["steps"] = cfg.steps
        c["teleport"] = cfg.teleport
    return c


def _stat_record(st: harness.ExperimentStats, c: dict, seed: int) -> dict:
    return {
        "gamma": c["gamma"],
        "level": c["level"],
        "mode": c["mode"],
        "dl": c["dl"],
        "trials": st.trials,
        "eligible": st.eligible,
        "accepted": st.accepted,
        "detected_uncorrectable": st.detected_count,
        "conditional_errors": st.conditional_error_count,
        "resources": st.resources(),
        "seed": seed,
        "stats": st.to_dict(),
    }


def execute_cell(c: dict, seed: int, workers: int = 1) -> dict:
    """Run one grid cell; the record depends only on ``c`` and ``seed``."""
    exp, g, l = c["experiment"], c["gamma"], c["level"]
    ctx = PrepContext(c["mode"], c["dl"])
    kw = dict(ctx=ctx, seed=seed, shard_size=c["shard_size"], workers=workers)
    if exp in ("cnot", "had"):
        st = harness.run_gate_error_experiment(exp.upper(), l, g, c["trials"], logical=c["logical"], **kw)
    elif exp == "prep":
        st = harness.run_prep_experiment(l, g, c["trials"], **kw)
    elif exp == "meas":
        st = harness.run_measurement_experiment(l, g, c["trials"], **kw)
    elif exp == "decode":
        st = harness.run_decoding_experiment(l, g, c["trials"], **kw)
        rec = _stat_record(st, c, seed)
        rec["injection"] = harness.injection_summary(st)
        rec["noise"] = asdict(noise_params(g))
        return rec
    elif exp == "chain":
        steps = harness.run_chain_experiment(l, g, c["steps"], c["teleport"], c["trials"], logical=c["logical"], **kw)
        rec = _stat_record(harness.merge(steps[1:]), c, seed)
        rec["steps"] = [s.to_dict() for s in steps]
        rec["stationarity"] = harness.chain_stationarity(steps)
        rec["noise"] = asdict(noise_params(g))
        return rec
    elif exp == "bell":
        out = harness.cnots_per_pair(l, g, c["trials"], ctx, seed)
        return {"gamma": g, "level": l, "mode": c["mode"], "dl": c["dl"], "seed": seed, "bell": out, "noise": asdict(noise_params(g))}
    else:
        raise ConfigError(f"config.experiment: unknown {exp!r}")
    rec = _stat_record(st, c, seed)
    rec["noise"] = asdict(noise_params(g))
    return rec


def _stat_row(rec: dict) -> dict:
    s = rec.get("stats", {})
    row = {k: rec.get(k, s.get(k)) for k in STAT_COLUMNS}
    return row


def cmd_simulate(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    store = ResultStore(cfg.store)
    rows, status = [], 0
    for l in cfg.level:
        for g in cfg.gamma:
            c = cell_config(cfg, g, l)
            rec = store.get(c, cfg.seed)
            if rec is None:
                try:
                    rec = store.append(c, cfg.seed, execute_cell(c, cfg.seed, cfg.workers))
                except Exception as exc:  # recorded per cell, the sweep continues
                    rows.append({"gamma": g, "level": l, "mode": cfg.mode, "seed": cfg.seed, "error": f"{type(exc).__name__}: {exc}"})
                    status = 1
                    continue
            if cfg.experiment == "bell":
                rows.append({"gamma": g, "level": l, "mode": cfg.mode, "seed": cfg.seed, **rec["bell"]})
            elif cfg.experiment == "chain":
                for i, s in enumerate(rec["steps"], 1):
                    rows.append({"gamma": g, "level": l, "mode": cfg.mode, "step": i, "teleport": cfg.teleport, **s, "seed": cfg.seed})
            else:
                rows.append(_stat_row(rec))
    return rows, status


# ---------------------------------------------------------------------------
# analytic commands


def cmd_resources(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    rb = resources.default_rbell()
    rows = []
    for g in cfg.gamma:
        for kq in cfg.kq:
            r = resources.optimize_pcnot(kq, g, rb)
            rows.append({"gamma": g, "KQ": kq, "level": r.level if r.feasible else "", "pcnot": r.pcnot if r.feasible else ""})
    status = 2 if not any(r["level"] != "" for r in rows) else 0
    return rows, status


def cmd_threshold(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    r = resources.threshold_from_recursion()
    rows = [{"step": i + 1, "gamma": g, "vanishes": ok} for i, (g, ok) in enumerate(r.trace)]
    rows.append({"step": "result", "gamma": r.gamma, "vanishes": ""})
    return rows, 0


def _fit_points(entries, level, which):
    pts = []
    for e in entries:
        r = e["record"]
        if r["level"] != level:
            continue
        if which == "pd":
            pts.append((r["gamma"], r["detected_uncorrectable"], r["eligible"]))
        else:
            pts.append((r["gamma"], r["conditional_errors"], r["accepted"]))
    return sorted(pts)


def fit_series(entries, level: int, which: str, free: bool = False):
    pts = [p for p in _fit_points(entries, level, which) if p[2] > 0]
    if not pts or sum(k for _, k, _ in pts) == 0:
        return None
    exp = None if free else resources.fibonacci(level + 1 if which == "pd" else level + 2)
    try:
        f = harness.fit_power_law(pts, exp)
    except ValueError:
        return None
    return harness.resample_uncertainty(f, pts, 100, harness.shard_rng(0, level))


def cmd_fit(cfg: ExperimentConfig) -> tuple[list[dict], int]:
    entries = ResultStore(cfg.store).find(experiment=cfg.experiment, mode=cfg.mode, dl=cfg.dl)
    rows = []
    for l in cfg.level:
        for which in ("pd", "pc"):
            f = fit_series(entries, l, which, cfg.free)
            if f is None:
                rows.append({"level": l, "quantity": which, "constant": "", "sd": "", "exponent": "", "sd_exponent": ""})
            else:
                rows.append({"level": l, "quantity": which, "constant": f.constant, "sd": f.sd, "exponent": f.exponent, "sd_exponent": f.sd_exponent})
    return rows, 2 if all(r["constant"] == "" for r in rows) else 0


# ---------------------------------------------------------------------------
# reports


def _write_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(dict.fromkeys(k for r in rows for k in r))
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _curve_rows(entries, levels, cfg, gammas):
    rows, missing = [], []
    by_cell = {(e["record"]["gamma"], e["record"]["level"]): e["record"] for e in entries}
    for l in levels:
        fits = {q: fit_series([e for e in entries], l, q) for q in ("pd", "pc")}
        for g in gammas:
            rec = by_cell.get((g, l))
            if rec is None:
                missing.append({"experiment": cfg.experiment, "gamma": g, "level": l, "mode": cfg.mode})
                continue
            s = rec["stats"]
            for q in ("pd", "pc"):
                f = fits[q]
                rows.append({
                    "x": g,
                    "y": s[q],
                    "y_lo": s[f"{q}_lo"],
                    "y_hi": s[f"{q}_hi"],
                    "series": f"{q} l={l}",
                    "fit_y": f.constant * g**f.exponent if f else "",
                    "fit_constant": f.constant if f else "",
                    "fit_exponent": f.exponent if f else "",
                })
    return rows, missing


def emit_report(store_path, which: str, out_dir, cfg: ExperimentConfig | None = None) -> tuple[list[Path], list[dict]]:
    """Write plot-ready CSV files for one figure or the tables.

    Returns the written files and the list of missing cells (empty on success).
    """
    cfg = cfg or ExperimentConfig(command="report", which=which)
    out = Path(out_dir)
    store = ResultStore(store_path)
    written: list[Path] = []
    if which in ("fig2", "fig3"):
        mode = "postselect" if which == "fig2" else "ec"
        levels = [l for l in cfg.level if (l <= 2 if which == "fig2" else l <= 3)] or ([1, 2] if which == "fig2" else [1, 2, 3])
        cfg = ExperimentConfig(**{**asdict(cfg), "mode": mode, "experiment": "cnot"})
        entries = [e for e in store.find(experiment="cnot", mode=mode) if e["record"]["level"] in levels]
        gammas = sorted({e["record"]["gamma"] for e in entries}) if cfg.gamma == [0.03] and entries else cfg.gamma
        rows, missing = _curve_rows(entries, levels, cfg, gammas)
        if missing:
            return [], missing
        p = out / f"{which}.csv"
        _write_csv(p, rows)
        return [p], []
    if which == "fig4":
        entries = store.find(experiment="chain")
        rows, missing = [], []
        for tele in (True, False):
            sel = [e for e in entries if e["config"]["teleport"] == tele and e["record"]["level"] in cfg.level]
            if not sel:
                missing.append({"experiment": "chain", "teleport": tele, "level": cfg.level})
                continue
            for e in sel:
                r = e["record"]
                for i, s in enumerate(r["steps"], 1):
                    for q in ("pd", "pc"):
                        rows.append({
                            "x": i,
                            "y": s[q],
                            "y_lo": s[f"{q}_lo"],
                            "y_hi": s[f"{q}_hi"],
                            "series": f"{q} l={r['level']} gamma={r['gamma']} {'teleport' if tele else 'no-teleport'}",
                            "omitted": i == 1,
                        })
        if missing:
            return [], missing
        p = out / "fig4.csv"
        _write_csv(p, rows)
        return [p], []
    if which == "fig5":
        gammas = cfg.gamma if cfg.gamma != [0.03] else DEFAULT_FIG5_GAMMA
        rows, _ = cmd_resources(ExperimentConfig(**{**asdict(cfg), "gamma": gammas}))
        plot = [{"x": r["KQ"], "y": r["pcnot"], "y_lo": r["pcnot"], "y_hi": r["pcnot"], "series": f"gamma={r['gamma']}", "level": r["level"]} for r in rows]
        p = out / "fig5.csv"
        _write_csv(p, plot)
        return [p], []
    if which == "tables":
        zero = [{"level": l, "preps": p, "cnots": c} for l in range(0, 7) for p, c in [resources.zero_error_resources(l)]]
        gam = []
        for g, table in resources.SIMULATED_TABLES.items():
            params = resources.table_params(g)
            for l, (v, t, pf, ps, cf, cs, n) in table.items():
                p_calc, c_calc = resources.gamma_resources(l, params)
                gam.append({"gamma": g, "level": l, "v": v, "t": t if t is not None else "", "preps_formula": p_calc, "preps_simulated": ps, "cnots_formula": c_calc, "cnots_simulated": cs, "pairs": n})
        pc = resources.PUBLISHED_CONSTANTS
        trans = []
        for l in (1, 2, 3):
            D, C = resources.transfer_ratios(pc, l)
            trans.append({"level": l, "d": pc.d[l], "c": pc.c[l], "D": D, "C": C if C == C else ""})
        pi8 = [{"eps": e, "output_error": a, "success": b} for e in (0.01, 0.001, 0.0001) for a, b in [resources.pi8_purification(e)]]
        for name, rows in (("zero_error_resources", zero), ("gamma_resources", gam), ("error_constants", trans), ("pi8_purification", pi8)):
            p = out / f"{name}.csv"
            _write_csv(p, rows)
            written.append(p)
        return written, []
    raise ConfigError(f"config.which: unknown report {which!r}")


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="c4c6", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["simulate", "resources", "fit", "threshold", "report", "verify"])
    p.add_argument("which", nargs="?", help="report name: " + ", ".join(REPORTS))
    p.add_argument("--config", help="JSON file with the same fields; flags override it")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--gamma", type=_floats, help="comma-separated grid")
    p.add_argument("--level", type=_ints, help="comma-separated levels")
    p.add_argument("--kq", type=_floats, help="comma-separated K*Q values")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["postselect", "ec"])
    p.add_argument("--dl", type=int, choices=[0, 1])
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--store")
    p.add_argument("--steps", type=int)
    p.add_argument("--no-teleport", dest="teleport", action="store_false", default=None)
    p.add_argument("--logical", choices=["both", "L"])
    p.add_argument("--shard-size", dest="shard_size", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--free", action="store_true", default=None, help="fit the exponent too")
    p.add_argument("--rerun", type=int, help="verify: re-execute this many records")
    return p


def load_config(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config: top level must be an object")
        known = {f.name for f in fields(ExperimentConfig)}
        for k in base:
            if k not in known:
                raise ConfigError(f"config.{k}: unknown field")
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    cfg = ExperimentConfig(**{**base, **flags})
    cfg.validate()
    return cfg


def _emit(rows: list[dict], cfg: ExperimentConfig) -> None:
    if cfg.format == "json":
        text = json.dumps(rows, indent=1, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        cols = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(buf, cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text)
        print(f"wrote {len(rows)} rows to {cfg.out}")
    else:
        sys.stdout.write(text)


def run_config(cfg: ExperimentConfig) -> int:
    cfg.validate()
    if cfg.command == "report":
        files, missing = emit_report(cfg.store, cfg.which, cfg.out or "report", cfg)
        if missing:
            print("missing records:", file=sys.stderr)
            for m in missing:
                print("  " + canonical(m), file=sys.stderr)
            return 2
        for f in files:
            print(f"wrote {f}")
        return 0
    if cfg.command == "verify":
        def rerun(c, seed):
            return execute_cell(c, seed)

        rep = verify_store(cfg.store, cfg.rerun, rerun if cfg.rerun else None)
        print(json.dumps({"entries": rep.entries, "rerun": rep.rerun, "clean": rep.clean, "problems": rep.problems}, indent=1))
        return 0 if rep.clean else 1
    fn = {"simulate": cmd_simulate, "resources": cmd_resources, "fit": cmd_fit, "threshold": cmd_threshold}[cfg.command]
    rows, status = fn(cfg)
    _emit(rows, cfg)
    return status


def main(argv=None) -> int:
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv)
        return run_config(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
