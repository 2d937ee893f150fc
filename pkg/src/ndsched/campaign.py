"""Experiment campaigns: numeric metric sweeps and realistic success-rate sweeps.

Seeds come from a counter split of the master seed:

* BP set of sample ``i`` in family ``F``: ``derive_seed(master, F, i)``, with a
  trailing attempt counter when an instance has to be redrawn;
* simulation run ``r`` of that sample: ``derive_seed(master, F, i, r)``.

Every output row can be recomputed from its family, seed, strategy and
channel count together with the manifest that maps seeds to BP sets.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import families as fam
from .families import FamilyTag, SamplerPreset
from .mdtopt import BudgetExceededError, TooLargeError, build_ilp, solve_exact
from .model import BpSet, compute_metrics
from .rng import DrawStream, derive_seed
from .schedulers import UnsupportedInputError, build
from .sim import PhyParams, generate_neighbors, mean_ci, run_trial

log = logging.getLogger(__name__)

NUMERIC_STRATEGIES = ("greedy-rnd", "greedy-dtr", "greedy-rnd-swt", "greedy-dtr-swt", "chan-train", "opt-b2", "psv")
SIM_STRATEGIES = ("greedy-rnd", "greedy-dtr", "greedy-rnd-swt", "greedy-dtr-swt", "chan-train", "psv")
MDTOPT = "mdtopt"

NUMERIC_COLUMNS = [
    "family", "strategy", "num_channels", "sample", "seed", "bpset",
    "wdt_slots", "mdt", "listening_slots", "channel_switches",
    "normalized_wdt", "normalized_mdt", "normalized_listening", "normalized_switches",
    "norm_ref", "mdt_ref_low", "mdt_ref_high",
]
SUMMARY_COLUMNS = ["family", "strategy", "num_channels", "metric", "n", "mean", "ci_low", "ci_high"]
SIM_COLUMNS = ["family", "strategy", "seed", "num_channels", "num_neighbors", "discovered", "total", "success_rate"]
PLOT_COLUMNS = ["x", "strategy", "mean", "ci_low", "ci_high"]
NDOT_COLUMNS = ["norm_time", "strategy", "cdf"]
NDOT_MAX_POINTS = 1000

NUMERIC_METRICS = {
    "wdt": "normalized_wdt",
    "mdt": "normalized_mdt",
    "listening": "normalized_listening",
    "switches": "normalized_switches",
}
SIM_METRICS = ("success_channels", "success_neighbors")


class ConfigError(ValueError):
    """Invalid campaign configuration."""


def fmt(x) -> str:
    """Stable text for floats; exact fractions stay exact."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(round(x, 12))
    return str(x)


@dataclass
class CampaignConfig:
    kind: str = "numeric"
    families: list = field(default_factory=lambda: [FamilyTag.F1, FamilyTag.F2])
    channel_range: list = field(default_factory=lambda: [2, 4, 6, 8, 10, 12])
    neighbor_range: list = field(default_factory=lambda: [2, 5, 10, 15, 20, 25, 30, 35])
    fixed_channels: int = 8
    fixed_neighbors: int = 15
    samples: int = 150
    runs_per_point: int = 5
    strategies: Optional[list] = None
    preset: str = "numeric"
    master_seed: int = 1
    phy: PhyParams = field(default_factory=PhyParams)
    initial_deaf: bool = True
    mdtopt_enabled: bool = True
    mdtopt_horizon_cap: int = 4096
    mdtopt_node_limit: int = 5_000_000
    max_resample: int = 1000
    scale: float = 1.0
    jobs: int = 1
    backend: Optional[str] = None
    sampler_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("numeric", "simulation"):
            raise ConfigError(f"kind must be 'numeric' or 'simulation', got {self.kind!r}")
        self.families = [FamilyTag(f) if not isinstance(f, str) else fam.parse_family(f) for f in self.families]
        bad = [f for f in self.families if f not in fam.SAMPLERS]
        if bad:
            raise ConfigError(f"no sampler for families {bad}")
        if self.preset not in fam.PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {sorted(fam.PRESETS)}")
        if not self.channel_range or min(self.channel_range) < 1:
            raise ConfigError("channel_range must hold positive channel counts")
        if self.kind == "simulation" and (not self.neighbor_range or min(self.neighbor_range) < 1):
            raise ConfigError("neighbor_range must hold positive neighbor counts")
        if self.samples < 1 or self.runs_per_point < 1:
            raise ConfigError("samples and runs_per_point must be positive")
        if self.scale <= 0:
            raise ConfigError("scale must be positive")
        allowed = set(NUMERIC_STRATEGIES) | {MDTOPT}
        for s in self.strategy_list:
            if s not in allowed:
                raise ConfigError(f"unknown strategy {s!r}")
        try:
            self.sampler_preset
        except TypeError as exc:
            raise ConfigError(f"bad sampler override: {exc}") from None

    @property
    def strategy_list(self) -> list:
        if self.strategies:
            return list(self.strategies)
        return list(NUMERIC_STRATEGIES if self.kind == "numeric" else SIM_STRATEGIES)

    @property
    def sampler_preset(self) -> SamplerPreset:
        return replace(fam.PRESETS[self.preset], **self.sampler_overrides)

    @property
    def scaled_samples(self) -> int:
        return max(1, math.ceil(self.samples * self.scale))

    @property
    def scaled_runs(self) -> int:
        return max(1, math.ceil(self.runs_per_point * self.scale)) if self.kind == "simulation" else 1


def _ints(text: str) -> list:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


_SAMPLER_KEYS = {
    "f1_sizes": "pair", "f1_values": "pair", "f2_max": "int", "f2_sizes": "pair",
    "f3_sizes": "pair", "f3_multipliers": "pair", "f3_max": "int", "max_attempts": "int",
}


def parse_config(text: str) -> CampaignConfig:
    """Parse ``key = value`` lines; an optional ``[sampler]`` table overrides preset fields.

    Lists are comma separated and accept ``lo-hi`` ranges, e.g.
    ``channels = 2-8``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[campaign]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    sec = cp["campaign"]
    kw: dict = {}
    try:
        for key, raw in sec.items():
            v = raw.strip()
            if key == "kind":
                kw["kind"] = v
            elif key in ("family", "families"):
                kw["families"] = [s for s in v.replace(" ", "").split(",") if s]
            elif key in ("channels", "channel_range"):
                kw["channel_range"] = _ints(v)
            elif key in ("neighbors", "neighbor_range"):
                kw["neighbor_range"] = _ints(v)
            elif key in ("fixed_channels", "fixed_neighbors", "samples", "runs_per_point", "jobs",
                         "mdtopt_horizon_cap", "mdtopt_node_limit", "max_resample"):
                kw[key] = int(v)
            elif key in ("seed", "master_seed"):
                kw["master_seed"] = int(v)
            elif key == "strategies":
                kw["strategies"] = [s for s in v.replace(" ", "").split(",") if s]
            elif key == "preset":
                kw["preset"] = v
            elif key == "scale":
                kw["scale"] = float(v)
            elif key in ("mdtopt", "mdtopt_enabled"):
                kw["mdtopt_enabled"] = sec.getboolean(key)
            elif key == "initial_deaf":
                kw["initial_deaf"] = sec.getboolean(key)
            elif key == "backend":
                kw["backend"] = v
            elif key in ("slot_symbols", "beacon_symbols", "switch_symbols"):
                kw.setdefault("_phy", {})[key] = int(v)
            else:
                raise ConfigError(f"unknown key {key!r}")
        overrides = {}
        if cp.has_section("sampler"):
            for key, raw in cp["sampler"].items():
                if key not in _SAMPLER_KEYS:
                    raise ConfigError(f"unknown sampler key {key!r}")
                if _SAMPLER_KEYS[key] == "pair":
                    lo, hi = _ints(raw.replace("..", "-"))[0], _ints(raw.replace("..", "-"))[-1]
                    overrides[key] = (lo, hi)
                else:
                    overrides[key] = int(raw)
        if overrides:
            kw["sampler_overrides"] = overrides
        phy = kw.pop("_phy", None)
        if phy:
            kw["phy"] = PhyParams(**phy)
        return CampaignConfig(**kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- sampling


def _sample_instance(cfg: CampaignConfig, family: FamilyTag, index: int) -> tuple[int, BpSet]:
    """Seed and BP set of sample ``index``, redrawn while it breaks the solver cap."""
    preset = cfg.sampler_preset
    need_cap = cfg.kind == "numeric" and cfg.mdtopt_enabled and family != FamilyTag.F3
    cmax = max(cfg.channel_range)
    for attempt in range(cfg.max_resample):
        key = (int(family), index) if attempt == 0 else (int(family), index, 1_000_000 + attempt)
        seed = derive_seed(cfg.master_seed, *key)
        B = fam.sample(family, DrawStream(seed), preset)
        if not need_cap or B.lcm * cmax <= cfg.mdtopt_horizon_cap:
            return seed, B
        log.info("resampling %s sample %d: LCM(B)*|C| = %d over cap", family.name, index, B.lcm * cmax)
    raise TooLargeError("resampling attempts", cfg.max_resample, cfg.max_resample)


def manifest(cfg: CampaignConfig) -> list[str]:
    """``<family>,<seed>,<bpset>`` per seed used by the campaign, in output order."""
    lines = []
    for f in cfg.families:
        for i in range(cfg.scaled_samples):
            seed, B = _sample_instance(cfg, f, i)
            if cfg.kind == "numeric":
                lines.append(fam.manifest_line(f, seed, B))
            else:
                for r in range(cfg.scaled_runs):
                    lines.append(fam.manifest_line(f, derive_seed(cfg.master_seed, int(f), i, r), B))
    return lines


# ---------------------------------------------------------------- numeric


def _mdt_reference(cfg, family, B, C, results):
    """(label, low, high) reference MDT for normalization."""
    if family in (FamilyTag.F3, FamilyTag.F4) and "greedy-dtr" in results:
        ref = results["greedy-dtr"][1].mdt
        return "greedy", ref, ref
    if cfg.mdtopt_enabled:
        try:
            sol = solve_exact(build_ilp(B, C, horizon_cap=cfg.mdtopt_horizon_cap), cfg.mdtopt_node_limit, cfg.backend)
            return "mdtopt", sol.mdt, sol.mdt, sol
        except BudgetExceededError as exc:
            best = min([exc.upper] + [m.mdt for _, m in results.values()])
            log.info("mdtopt bracket for %s |C|=%d: [%s, %s]", B, C, exc.lower, best)
            return "mdtopt-bracket", exc.lower, best
    best = min(m.mdt for _, m in results.values())
    return "best-observed", best, best


def _numeric_task(args):
    cfg, family, index, seed, B, C = args
    results = {}
    for s in cfg.strategy_list:
        if s == MDTOPT:
            continue
        try:
            L = build(s, B, C, seed=seed, backend=cfg.backend)
        except UnsupportedInputError:
            continue
        results[s] = (L, compute_metrics(L, B, C))
    ref = _mdt_reference(cfg, family, B, C, results)
    label, low, high = ref[:3]
    if MDTOPT in cfg.strategy_list and label == "mdtopt":
        L = ref[3].schedule
        results[MDTOPT] = (L, compute_metrics(L, B, C))
    rows = []
    for s in cfg.strategy_list:
        if s not in results:
            continue
        _, m = results[s]
        nm = m.mdt / low if low else Fraction(1)
        rows.append({
            "family": family.name, "strategy": s, "num_channels": C, "sample": index, "seed": seed,
            "bpset": str(B), "wdt_slots": m.wdt_slots, "mdt": m.mdt, "listening_slots": m.listening_slots,
            "channel_switches": m.channel_switches, "normalized_wdt": float(m.normalized_wdt),
            "normalized_mdt": float(nm), "normalized_listening": float(m.normalized_listening),
            "normalized_switches": float(m.normalized_switches), "norm_ref": label,
            "mdt_ref_low": low, "mdt_ref_high": high,
        })
    return rows


def _map(cfg, fn, tasks):
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_numeric_campaign(cfg: CampaignConfig) -> list[dict]:
    """Observation rows in (family, strategy, channels, sample) order."""
    tasks = []
    for f in cfg.families:
        for i in range(cfg.scaled_samples):
            seed, B = _sample_instance(cfg, f, i)
            for C in cfg.channel_range:
                tasks.append((cfg, f, i, seed, B, C))
    rows = [r for chunk in _map(cfg, _numeric_task, tasks) for r in chunk]
    order = {s: k for k, s in enumerate(cfg.strategy_list)}
    fam_order = {f.name: k for k, f in enumerate(cfg.families)}
    rows.sort(key=lambda r: (fam_order[r["family"]], order[r["strategy"]], r["num_channels"], r["sample"]))
    return rows


def summarize_numeric(rows: Sequence[dict]) -> list[dict]:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["family"], r["strategy"], r["num_channels"]), []).append(r)
    out = []
    for (f, s, C), rs in groups.items():
        for metric, col in NUMERIC_METRICS.items():
            ci = mean_ci([float(r[col]) for r in rs])
            out.append({"family": f, "strategy": s, "num_channels": C, "metric": metric,
                        "n": ci.n, "mean": ci.mean, "ci_low": ci.ci_low, "ci_high": ci.ci_high})
    return out


# ---------------------------------------------------------------- simulation


def _sim_points(cfg: CampaignConfig) -> list[tuple[int, int]]:
    pts = {(C, cfg.fixed_neighbors) for C in cfg.channel_range}
    pts |= {(cfg.fixed_channels, n) for n in cfg.neighbor_range}
    return sorted(pts)


def _sim_task(args):
    cfg, family, index, B, C, n = args
    rows = []
    for r in range(cfg.scaled_runs):
        seed = derive_seed(cfg.master_seed, int(family), index, r)
        nbs = generate_neighbors(B, C, n, DrawStream(seed, (C, n)), cfg.phy)
        for s in cfg.strategy_list:
            try:
                L = build(s, B, C, seed=seed, backend=cfg.backend)
            except UnsupportedInputError:
                continue
            out = run_trial(L, nbs, cfg.phy, initial_deaf=cfg.initial_deaf, backend=cfg.backend)
            rows.append({"family": family.name, "strategy": s, "seed": seed, "num_channels": C,
                         "num_neighbors": n, "discovered": out.discovered, "total": out.total,
                         "success_rate": out.success_rate, "_sample": index, "_run": r})
    return rows


def run_simulation_campaign(cfg: CampaignConfig) -> list[dict]:
    """Success-rate rows in (family, strategy, point, sample, run) order."""
    tasks = []
    for f in cfg.families:
        for i in range(cfg.scaled_samples):
            _, B = _sample_instance(cfg, f, i)
            for C, n in _sim_points(cfg):
                tasks.append((cfg, f, i, B, C, n))
    rows = [r for chunk in _map(cfg, _sim_task, tasks) for r in chunk]
    order = {s: k for k, s in enumerate(cfg.strategy_list)}
    fam_order = {f.name: k for k, f in enumerate(cfg.families)}
    rows.sort(key=lambda r: (fam_order[r["family"]], order[r["strategy"]], r["num_channels"],
                             r["num_neighbors"], r["_sample"], r["_run"]))
    return rows


# ---------------------------------------------------------------- CSV


def write_csv(path_or_buf, columns: Sequence[str], rows: Iterable[dict]) -> None:
    own = isinstance(path_or_buf, (str, Path))
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r[c]) for c in columns])
    finally:
        if own:
            fh.close()


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows)
    return buf.getvalue()


def run_campaign(cfg: CampaignConfig, out_dir, plots: bool = True) -> dict:
    """Run ``cfg`` and write its CSV files into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    (out / "manifest.csv").write_text("".join(line + "\n" for line in manifest(cfg)), encoding="utf-8")
    paths["manifest"] = out / "manifest.csv"
    if cfg.kind == "numeric":
        rows = run_numeric_campaign(cfg)
        write_csv(out / "numeric.csv", NUMERIC_COLUMNS, rows)
        write_csv(out / "numeric_summary.csv", SUMMARY_COLUMNS, summarize_numeric(rows))
        paths["report"] = out / "numeric.csv"
        paths["summary"] = out / "numeric_summary.csv"
        metrics = list(NUMERIC_METRICS) + ["ndot"]
    else:
        rows = run_simulation_campaign(cfg)
        write_csv(out / "simulation.csv", SIM_COLUMNS, rows)
        paths["report"] = out / "simulation.csv"
        metrics = list(SIM_METRICS)
    if plots:
        report = read_csv(paths["report"])
        for f in cfg.families:
            for m in metrics:
                paths[f"{m}_{f.name}"] = emit_plot_data(report, m, f.name, out / "plots", cfg)
    return paths


def _ndot_curves(report: Sequence[dict], cfg: Optional[CampaignConfig], backend=None):
    """Mean NDoT step function per strategy, recomputed from the rows.

    The mean is evaluated at the union of the curves' steps, or on an even
    grid of ``NDOT_MAX_POINTS`` points when there are more steps than that.
    """
    per: dict = {}
    for r in report:
        B = BpSet.parse(r["bpset"])
        C = int(r["num_channels"])
        s = r["strategy"]
        seed = int(r["seed"])
        if s == MDTOPT:
            L = solve_exact(build_ilp(B, C), cfg.mdtopt_node_limit if cfg else 5_000_000, backend).schedule
        else:
            L = build(s, B, C, seed=seed, backend=backend)
        per.setdefault(s, []).append(compute_metrics(L, B, C).ndot_arrays())
    out = []
    for s, curves in per.items():
        grid = np.unique(np.concatenate([tx for tx, _ in curves]))
        if grid.size > NDOT_MAX_POINTS:
            grid = np.linspace(0.0, grid[-1], NDOT_MAX_POINTS)
        xs = grid.tolist()
        acc = np.zeros(len(xs))
        for tx, ty in curves:
            idx = np.searchsorted(tx, grid, side="right") - 1
            acc += np.where(idx >= 0, ty[np.clip(idx, 0, None)], 0.0)
        acc /= len(curves)
        out.extend({"norm_time": x, "strategy": s, "cdf": float(y)} for x, y in zip(xs, acc))
    return out


def emit_plot_data(report: Sequence[dict], metric: str, family: str, out_dir, cfg: Optional[CampaignConfig] = None):
    """Write ``<metric>_<family>.csv`` for plotting; returns its path.

    Numeric metrics (``wdt``, ``mdt``, ``listening``, ``switches``) average the
    normalized value per channel count. ``success_channels`` and
    ``success_neighbors`` average success rates along the two simulation
    axes. ``ndot`` writes the mean discovery CDF over normalized time.
    """
    known = set(NUMERIC_METRICS) | set(SIM_METRICS) | {"ndot"}
    if metric not in known:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(known)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{metric}_{family}.csv"
    rows = [r for r in report if r["family"] == family]
    backend = cfg.backend if cfg else None
    if metric == "ndot":
        write_csv(path, NDOT_COLUMNS, _ndot_curves(rows, cfg, backend) if rows else [])
        return path
    if metric in NUMERIC_METRICS:
        col, xcol = NUMERIC_METRICS[metric], "num_channels"
        sel = rows
    else:
        col = "success_rate"
        if metric == "success_channels":
            xcol = "num_channels"
            fixed = cfg.fixed_neighbors if cfg else 15
            sel = [r for r in rows if int(r["num_neighbors"]) == fixed]
        else:
            xcol = "num_neighbors"
            fixed = cfg.fixed_channels if cfg else 8
            sel = [r for r in rows if int(r["num_channels"]) == fixed]
    groups: dict = {}
    order: list = []
    for r in sel:
        key = (int(r[xcol]), r["strategy"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(float(r[col]))
    strat_order = {}
    for _, s in order:
        strat_order.setdefault(s, len(strat_order))
    out_rows = []
    for x, s in sorted(groups, key=lambda k: (k[0], strat_order[k[1]])):
        ci = mean_ci(groups[(x, s)])
        out_rows.append({"x": x, "strategy": s, "mean": ci.mean, "ci_low": ci.ci_low, "ci_high": ci.ci_high})
    write_csv(path, PLOT_COLUMNS, out_rows)
    return path
