"""Cross-type ratio sweeps, config files and result files.

Config files are INI with three sections; every key is optional and falls
back to the defaults below::

    [scenario]
    snr_budget_up_db = 20      ; P_up / sigma^2 in dB
    snr_budget_dn_db = 30      ; P_dn / sigma^2 in dB
    pathloss_exp = 3
    user_distance = 15         ; m
    backhaul_length = 500      ; m, also the Gamma shape of backhaul delays
    backhaul_coeff = 1e-8      ; s per bit per m
    clock_speed = 2e9          ; cycles/s
    msg_bits_up = 1000
    msg_bits_dn = 1000
    bandwidth_up = 1e9         ; Hz per BS
    bandwidth_dn = 1e9         ; Hz per BS
    target_success = 0.7
    total_users = 50

    [optimizer]
    saa_samples = 50           ; T
    iterations = 50            ; K
    step_size =                ; blank: scale * (W/N)^3 / (a N)
    step_scale = 2.0
    seed = 1

    [sweep]
    rho_grid = 0:1:0.08        ; start:stop:step or comma list
    variants = equal-both, optimal-up-only
    eval_samples = 100000
    eval_seed = 0

Result columns are listed in :data:`COLUMNS`.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .latency import DEFAULT_SAMPLES, end_to_end_report
from .model import (ModelError, ScenarioConfig, SpectrumAllocation, UserConfiguration,
                    validate_scenario)
from .optimize import (OptimizerSettings, equal_baseline, equal_downlink, optimize_downlink,
                       optimize_uplink)
from .sampling import draw_upload_scenarios

VARIANTS = ("equal-both", "optimal-dn-only", "optimal-up-only", "optimal-both", "swapped-servers")

COLUMNS = (
    "rho_c", "variant", "weighted_total_s", "stderr_s", "gain_vs_equal",
    "n_11", "n_12", "n_21", "n_22",
    "total_11_s", "total_12_s", "total_21_s", "total_22_s",
    "w_up_11", "w_up_12", "w_up_21", "w_up_22",
    "w_dn_11", "w_dn_12", "w_dn_21", "w_dn_22",
    "eval_samples", "eval_seed", "opt_seed", "saa_t", "iters_k", "step_size", "timestamp",
)
_INT_COLUMNS = {"n_11", "n_12", "n_21", "n_22", "eval_samples", "eval_seed", "opt_seed",
                "saa_t", "iters_k"}
_STR_COLUMNS = {"variant", "timestamp"}

_CELLS = ("11", "12", "21", "22")


class NonIntegerCounts(ModelError):
    def __init__(self, rho_c, n_total):
        self.admissible = admissible_ratios(n_total)
        step = 2 / n_total
        super().__init__(f"rho_c={rho_c!r} gives non-integer counts for N={n_total}; "
                         f"admissible values are multiples of {step:g}")


class HarnessIOError(OSError):
    pass


def admissible_ratios(n_total):
    half = n_total // 2
    return [2 * k / n_total for k in range(half + 1)]


def _cross_per_bs(n_total, rho_c, tol=1e-9):
    if n_total % 2:
        raise NonIntegerCounts(rho_c, n_total)
    if not 0.0 <= rho_c <= 1.0:
        raise ModelError(f"rho_c must lie in [0, 1], got {rho_c!r}")
    x = n_total * rho_c / 2
    k = round(x)
    if abs(x - k) > tol:
        raise NonIntegerCounts(rho_c, n_total)
    return int(k)


def symmetric_configuration(n_total, rho_c) -> UserConfiguration:
    """Equal BS loads with ``rho_c / 2`` of all users cross-type at each BS."""
    cross = _cross_per_bs(n_total, rho_c)
    same = n_total // 2 - cross
    return UserConfiguration.from_flat(same, cross, cross, same)


def canonical_rho(n_total, rho_c):
    return 2 * _cross_per_bs(n_total, rho_c) / n_total


def swap_communities(users: UserConfiguration) -> UserConfiguration:
    (a, b), (c, d) = users.counts
    return UserConfiguration(((c, d), (a, b)))


def parse_rho_grid(text):
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9))
        grid = [start + k * step for k in range(n + 1)]
        # the stop value is always part of the grid, even off the step lattice
        if stop - grid[-1] > 1e-9 * max(1.0, abs(stop)):
            grid.append(stop)
        return grid
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def parse_variants(text):
    names = [v.strip() for v in str(text).split(",") if v.strip()]
    bad = [v for v in names if v not in VARIANTS]
    if bad:
        raise ModelError(f"unknown variants {bad}; choose from {', '.join(VARIANTS)}")
    return names


@dataclass
class SweepSpec:
    rho_grid: list = field(default_factory=lambda: parse_rho_grid("0:1:0.08"))
    variants: list = field(default_factory=lambda: ["equal-both", "optimal-up-only"])
    eval_samples: int = DEFAULT_SAMPLES
    eval_seed: int = 0
    opt_seed: int = 1
    timestamp: str = ""


@dataclass
class SweepRecord:
    rho_c: float
    variant: str
    weighted_total_s: float
    stderr_s: float
    gain_vs_equal: float
    users: UserConfiguration
    total_s: np.ndarray
    allocation: SpectrumAllocation
    eval_samples: int
    eval_seed: int
    opt_seed: int | None = None
    saa_t: int | None = None
    iters_k: int | None = None
    step_size: float | None = None
    timestamp: str = ""

    def row(self):
        out = {"rho_c": self.rho_c, "variant": self.variant,
               "weighted_total_s": self.weighted_total_s, "stderr_s": self.stderr_s,
               "gain_vs_equal": self.gain_vs_equal}
        for cell, n in zip(_CELLS, self.users.flat()):
            out[f"n_{cell}"] = n
        for prefix, grid in (("total_", self.total_s), ("w_up_", self.allocation.up),
                             ("w_dn_", self.allocation.dn)):
            for cell, v in zip(_CELLS, np.asarray(grid).ravel()):
                out[f"{prefix}{cell}" + ("_s" if prefix == "total_" else "")] = float(v)
        out.update(eval_samples=self.eval_samples, eval_seed=self.eval_seed,
                   opt_seed=self.opt_seed, saa_t=self.saa_t, iters_k=self.iters_k,
                   step_size=self.step_size, timestamp=self.timestamp)
        return out


def _record(rho, variant, users, alloc, report, reference, spec, opt=None):
    gain = (reference - report.weighted_total_s) / reference
    rec = SweepRecord(rho, variant, report.weighted_total_s, report.weighted_stderr_s, gain,
                      users, np.array(report.total_s), alloc, report.samples_used,
                      spec.eval_seed, timestamp=spec.timestamp)
    if opt is not None:
        settings, trace = opt
        rec.opt_seed, rec.saa_t, rec.iters_k = settings.seed, settings.t_samples, settings.k_iters
        rec.step_size = trace.step_size
    return rec


def run_sweep(cfg: ScenarioConfig, spec: SweepSpec,
              settings: OptimizerSettings | None = None, threads=1, progress=None):
    """One record per (rho_c, variant), ordered by rho_c then variant.

    All variants at one rho_c share the same upload scenario draws. The gain
    column is relative to equal-both at the same rho_c.
    """
    validate_scenario(cfg).raise_if_invalid()
    variants = parse_variants(",".join(spec.variants))
    if settings is None:
        settings = OptimizerSettings(seed=spec.opt_seed)
    n = cfg.total_users
    grid = sorted({canonical_rho(n, r) for r in spec.rho_grid})
    needs_up = {"optimal-up-only", "optimal-both"} & set(variants)
    records = []
    for rho in grid:
        try:
            users = symmetric_configuration(n, rho)
            sc = draw_upload_scenarios(cfg, users, spec.eval_seed, spec.eval_samples, threads=threads)
            base = equal_baseline(users, cfg)
            ref = end_to_end_report(cfg, users, base, scenarios=sc, threads=threads)
            opt = None
            if needs_up:
                up, trace = optimize_uplink(cfg, users, settings)
                opt = (settings, trace)
            for variant in VARIANTS:
                if variant not in variants:
                    continue
                if variant == "equal-both":
                    records.append(_record(rho, variant, users, base, ref, ref.weighted_total_s, spec))
                    continue
                if variant == "swapped-servers":
                    swapped = swap_communities(users)
                    alloc = equal_baseline(swapped, cfg)
                    ssc = draw_upload_scenarios(cfg, swapped, spec.eval_seed, spec.eval_samples,
                                                threads=threads)
                    rep = end_to_end_report(cfg, swapped, alloc, scenarios=ssc, threads=threads)
                    records.append(_record(rho, variant, swapped, alloc, rep,
                                           ref.weighted_total_s, spec))
                    continue
                optimal_dn = variant in ("optimal-dn-only", "optimal-both")
                optimal_up = variant in ("optimal-up-only", "optimal-both")
                alloc = SpectrumAllocation(
                    up if optimal_up else base.up,
                    optimize_downlink(users, cfg.bandwidth_dn) if optimal_dn
                    else equal_downlink(users, cfg.bandwidth_dn))
                rep = end_to_end_report(cfg, users, alloc, scenarios=sc, threads=threads)
                records.append(_record(rho, variant, users, alloc, rep, ref.weighted_total_s,
                                       spec, opt if optimal_up else None))
        except ModelError as exc:
            raise ModelError(f"sweep failed at rho_c={rho:g}: {exc}") from exc
        if progress is not None:
            progress(rho)
    return records


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (str, np.str_)):
        return str(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return f"{value:.9g}"


def _json_value(value):
    if value is None or isinstance(value, (str, np.str_, bool)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.9g}")


def format_results(records, fmt):
    rows = [r.row() if isinstance(r, SweepRecord) else dict(r) for r in records]
    buf = io.StringIO()
    if fmt == "csv":
        columns = list(rows[0].keys())
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    elif fmt in ("json-lines", "jsonl"):
        for row in rows:
            buf.write(json.dumps({k: _json_value(v) for k, v in row.items()}) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json-lines")
    return buf.getvalue()


def emit_results(records, fmt, path):
    """Write records as csv or json-lines, numbers at 9 significant digits."""
    if not records:
        raise ValueError("no records to write")
    text = format_results(records, fmt)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise HarnessIOError(f"cannot write results to {os.fspath(path)!r}: {exc}") from exc


def _parse_cell(col, text):
    if col in _STR_COLUMNS:
        return text
    if text == "" or text is None:
        return None
    if col in _INT_COLUMNS:
        return int(text)
    return float(text)


def read_results(path):
    """Parse a csv or json-lines result file back into dicts."""
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise HarnessIOError(f"cannot read results from {os.fspath(path)!r}: {exc}") from exc
    if text.lstrip().startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(k, v) for k, v in row.items()} for row in reader]


def row_allocation(row):
    """Rebuild users and allocation from a result row, for re-validation."""
    users = UserConfiguration.from_flat(*(row[f"n_{c}"] for c in _CELLS))
    grid = {}
    for prefix in ("w_up_", "w_dn_"):
        vals = [row.get(prefix + c) for c in _CELLS]
        grid[prefix] = np.array([np.nan if v is None else v for v in vals]).reshape(2, 2)
    return users, SpectrumAllocation(grid["w_up_"], grid["w_dn_"])


# -- config files -----------------------------------------------------------

_SCENARIO_KEYS = {
    "pathloss_exp": float, "user_distance": float, "backhaul_length": float,
    "backhaul_coeff": float, "clock_speed": float, "msg_bits_up": float, "msg_bits_dn": float,
    "bandwidth_up": float, "bandwidth_dn": float, "target_success": float, "total_users": int,
}


def load_config(path=None):
    """Read a config file into ``(ScenarioConfig, OptimizerSettings, SweepSpec)``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise HarnessIOError(f"cannot read config {os.fspath(path)!r}: {exc}") from exc
    known = {"scenario", "optimizer", "sweep"}
    extra = set(parser.sections()) - known
    if extra:
        raise ModelError(f"unknown config sections: {sorted(extra)}")
    try:
        sc = parser["scenario"] if parser.has_section("scenario") else {}
        kwargs = {k: conv(sc[k]) for k, conv in _SCENARIO_KEYS.items() if k in sc}
        unknown = set(sc) - set(_SCENARIO_KEYS) - {"snr_budget_up_db", "snr_budget_dn_db"}
        if unknown:
            raise ModelError(f"unknown [scenario] keys: {sorted(unknown)}")
        cfg = ScenarioConfig.from_db(float(sc.get("snr_budget_up_db", 20.0)),
                                     float(sc.get("snr_budget_dn_db", 30.0)), **kwargs)

        op = parser["optimizer"] if parser.has_section("optimizer") else {}
        step = op.get("step_size", "").strip() if op else ""
        settings = OptimizerSettings(
            t_samples=int(op.get("saa_samples", 50)), k_iters=int(op.get("iterations", 50)),
            step_size=float(step) if step else None,
            step_scale=float(op.get("step_scale", 2.0)), seed=int(op.get("seed", 1)))

        sw = parser["sweep"] if parser.has_section("sweep") else {}
        spec = SweepSpec(
            rho_grid=parse_rho_grid(sw.get("rho_grid", "0:1:0.08")),
            variants=parse_variants(sw.get("variants", "equal-both, optimal-up-only")),
            eval_samples=int(sw.get("eval_samples", DEFAULT_SAMPLES)),
            eval_seed=int(sw.get("eval_seed", 0)), opt_seed=settings.seed)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"bad config value: {exc}") from exc
    return cfg, settings, spec


def default_config_path():
    return os.path.join(os.path.dirname(__file__), "configs", "reference.ini")
