"""Experiment runner: many network realizations, one system and power-control policy.

Each realization draws a new geometry, shadowing field and pilot book from
``SeedSequence([base_seed, r])``, applies the configured power control and
appends per-user throughputs (and, on the uplink, one energy-efficiency value)
to empirical CDF tables.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import CfiotError
from .instance import make_instance
from .netgen import PropagationParams
from .perf import (assign_serving_aps, downlink_sinr_all, energy_efficiency, full_power_downlink,
                   rate_bits, throughput)
from .power import (build_cone_problem, downlink_maxmin, linear_drop_and_retarget, linear_maxmin,
                    linear_target_iterate, smallcell_model, TargetSpec, uplink_model)
from .special import rayleigh_rate

log = logging.getLogger(__name__)

SYSTEMS = ("cellfree_lmmse", "cellfree_suboptimal", "smallcell")
POWER_CONTROLS = ("max_power", "maxmin", "target_sinr", "target_sinr_drop")
DIRECTIONS = ("uplink", "downlink")
SHADOWING = ("correlated", "uncorrelated")
FAILURE_FLAG_RATE = 0.01


class ConfigError(CfiotError, ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one run.

    Defaults follow the first uplink experiment: 128 APs, 40 users, 60-symbol
    pilots, a 100 m square and 20 mW for pilots and data.
    """

    system: str = "cellfree_lmmse"
    power_control: str = "maxmin"
    direction: str = "uplink"
    n_aps: int = 128
    n_users: int = 40
    tau: int = 60
    tau_c: int = 200
    area_side_m: float = 100.0
    pilot_w: float = 0.02
    uplink_w: float = 0.02
    downlink_w: float = 0.02
    shadowing: str = "uncorrelated"
    n_realizations: int = 500
    base_seed: int = 0
    drop_fraction: float = 0.05
    target_sinr: float = 1.0
    pilot_kind: str = "random"
    propagation: PropagationParams = field(default_factory=PropagationParams)

    def __post_init__(self):
        for name, allowed in (("system", SYSTEMS), ("power_control", POWER_CONTROLS),
                              ("direction", DIRECTIONS), ("shadowing", SHADOWING),
                              ("pilot_kind", ("random", "orthonormal"))):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        for name in ("n_aps", "n_users", "tau", "tau_c", "n_realizations"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        overhead = 2 * self.tau if self.system == "smallcell" else self.tau
        if overhead >= self.tau_c:
            raise ConfigError(f"training overhead {overhead} must be below tau_c={self.tau_c}")
        for name in ("area_side_m", "pilot_w", "uplink_w", "downlink_w", "target_sinr"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.drop_fraction < 1.0:
            raise ConfigError("drop_fraction must lie in [0, 1)")
        if self.power_control.startswith("target") and (
                self.direction != "uplink" or self.system == "smallcell"):
            raise ConfigError("target-SINR control is defined for the cell-free uplink only")
        if self.system == "smallcell" and self.n_users > self.n_aps:
            raise ConfigError("small-cell needs at least as many APs as users")

    @property
    def label(self):
        return f"{self.system}_{self.power_control}_{self.direction}"

    @property
    def tau_overhead(self):
        return 2 * self.tau if self.system == "smallcell" else self.tau

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


# --- config files ----------------------------------------------------------

_SECTIONS = {
    "experiment": ("system", "power_control", "direction", "n_realizations", "base_seed",
                   "drop_fraction", "target_sinr"),
    "network": ("n_aps", "n_users", "tau", "tau_c", "area_side_m", "shadowing", "pilot_kind"),
    "power": ("pilot_w", "uplink_w", "downlink_w"),
}
_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_PROP_FIELDS = {f.name for f in dataclasses.fields(PropagationParams)}


def _convert(name, raw, kind):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from exc
    return raw.strip()


def config_from_parser(parser):
    values = {}
    for section, names in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in names:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _convert(key, raw, _FIELD_TYPES[key])
    if parser.has_section("propagation"):
        prop = {}
        for key, raw in parser.items("propagation"):
            if key not in _PROP_FIELDS:
                raise ConfigError(f"unknown key {key!r} in [propagation]")
            prop[key] = _convert(key, raw, "float")
        values["propagation"] = PropagationParams(**prop)
    unknown = set(parser.sections()) - set(_SECTIONS) - {"propagation", "sweep"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    parser = configparser.ConfigParser()
    path = Path(path)
    if not parser.read(path, encoding="utf-8"):
        raise ConfigError(f"cannot read config file {path}")
    return config_from_parser(parser)


def config_to_parser(cfg):
    parser = configparser.ConfigParser()
    for section, names in _SECTIONS.items():
        parser[section] = {name: repr(getattr(cfg, name)) if isinstance(getattr(cfg, name), float)
                           else str(getattr(cfg, name)) for name in names}
    parser["propagation"] = {name: repr(float(value))
                             for name, value in dataclasses.asdict(cfg.propagation).items()}
    return parser


def write_config(cfg, path):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        config_to_parser(cfg).write(fh)
    return path


# --- results ---------------------------------------------------------------

@dataclass(frozen=True)
class CdfTable:
    """Sorted per-user values with the labels needed to tell runs apart."""

    values: np.ndarray
    system: str
    power_control: str
    direction: str
    seed: int
    quantity: str = "throughput_bps"

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float).ravel())
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    @property
    def cdf(self):
        n = self.values.size
        return np.arange(1, n + 1) / n

    def median(self):
        return float(np.median(self.values))

    def outage_95(self):
        """Lowest value among the best 95% of users (5th percentile, lower order statistic)."""
        n = self.values.size
        return float(self.values[n - math.ceil(0.95 * n)])

    def quantile(self, q):
        return float(np.quantile(self.values, q, method="inverted_cdf"))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    throughput: CdfTable
    energy_eff: CdfTable | None
    failures: list
    n_dropped: int
    n_not_converged: int
    elapsed_s: float

    @property
    def failure_rate(self):
        return len(self.failures) / self.config.n_realizations

    @property
    def flagged(self):
        return self.failure_rate > FAILURE_FLAG_RATE

    def summary(self):
        cfg = self.config
        lines = [
            f"run: {cfg.label}",
            f"realizations: {cfg.n_realizations} (base seed {cfg.base_seed})",
            f"failures: {len(self.failures)} ({100 * self.failure_rate:.2f}%)"
            + ("  FLAGGED: above 1%" if self.flagged else ""),
            f"users in CDF: {len(self.throughput)}",
            f"dropped users: {self.n_dropped}",
            f"realizations without convergence: {self.n_not_converged}",
        ]
        if len(self.throughput):
            lines.append(f"median throughput [bit/s]: {self.throughput.median():.6e}")
            lines.append(f"95%-outage throughput [bit/s]: {self.throughput.outage_95():.6e}")
        if self.energy_eff is not None and len(self.energy_eff):
            lines.append(f"median energy efficiency [bit/J]: {self.energy_eff.median():.6e}")
        for r, msg in self.failures:
            lines.append(f"failure in realization {r}: {msg}")
        lines.append(f"elapsed [s]: {self.elapsed_s:.1f}")
        return "\n".join(lines) + "\n"


# --- one realization -------------------------------------------------------

def _realization(cfg, r):
    """Throughputs of the served users, EE (uplink) and bookkeeping for realization r."""
    ss = np.random.SeedSequence([cfg.base_seed, r])
    estimator = "matched" if cfg.system == "cellfree_suboptimal" else "lmmse"
    inst = make_instance(cfg.n_aps, cfg.n_users, cfg.tau, cfg.area_side_m, ss, cfg.propagation,
                         (cfg.pilot_w, cfg.uplink_w, cfg.downlink_w), cfg.shadowing, estimator,
                         cfg.pilot_kind)
    budget = inst.budget
    K = cfg.n_users
    active = np.ones(K, dtype=bool)
    converged = True
    eta = None

    if cfg.system == "smallcell":
        up = cfg.direction == "uplink"
        rho = budget.rho_u if up else budget.rho_d
        serving = assign_serving_aps(inst.large_scale)
        # training uses the uplink power in both directions
        model = smallcell_model(inst.large_scale, inst.pilots, serving, rho, budget.rho_u,
                                cfg.tau, "up" if up else "down")
        power = np.ones(K) if cfg.power_control == "max_power" else linear_maxmin(model).eta
        rates = rayleigh_rate(model.sinr(power))
        eta = power if up else None
    elif cfg.direction == "uplink":
        model = uplink_model(inst.large_scale, inst.pilots, inst.bank, budget.rho_u)
        if cfg.power_control == "max_power":
            eta = np.ones(K)
        elif cfg.power_control == "maxmin":
            eta = linear_maxmin(model).eta
        elif cfg.power_control == "target_sinr":
            res = linear_target_iterate(model, budget.rho_u, TargetSpec(np.full(K, cfg.target_sinr)))
            eta, converged = res.eta, res.converged
        else:
            res = linear_drop_and_retarget(model, budget.rho_u, cfg.drop_fraction)
            eta, active = res.eta, res.active
        rates = rate_bits(model.sinr(eta))
    else:
        if cfg.power_control == "max_power":
            eta_d = full_power_downlink(inst.bank)
        else:
            eta_d = downlink_maxmin(build_cone_problem(inst.large_scale, inst.pilots, inst.bank,
                                                       budget.rho_d)).eta
        rates = rate_bits(downlink_sinr_all(inst.large_scale, inst.pilots, inst.bank,
                                            budget.rho_d, eta_d))

    tput = throughput(rates[active], cfg.propagation.bandwidth_hz, cfg.tau_overhead, cfg.tau_c)
    ee = None
    if cfg.direction == "uplink":
        ee = energy_efficiency(tput, eta[active], cfg.uplink_w)
    return tput, ee, int(K - active.sum()), converged


def _safe_realization(args):
    cfg, r = args
    try:
        return r, _realization(cfg, r), None
    except CfiotError as exc:
        return r, None, f"{type(exc).__name__}: {exc}"


def run_experiment(cfg, n_jobs=1):
    """Run every realization; failures are recorded and excluded from the CDFs."""
    start = time.perf_counter()
    jobs = [(cfg, r) for r in range(cfg.n_realizations)]
    if n_jobs and n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            outcomes = list(pool.map(_safe_realization, jobs))
    else:
        outcomes = [_safe_realization(job) for job in jobs]
    outcomes.sort(key=lambda item: item[0])  # deterministic assembly order
    tputs, ees, failures = [], [], []
    n_dropped = n_not_converged = 0
    for r, out, err in outcomes:
        if err is not None:
            log.warning("realization %d failed: %s", r, err)
            failures.append((r, err))
            continue
        tput, ee, dropped, converged = out
        tputs.append(tput)
        if ee is not None:
            ees.append(ee)
        n_dropped += dropped
        n_not_converged += not converged
    labels = dict(system=cfg.system, power_control=cfg.power_control, direction=cfg.direction,
                  seed=cfg.base_seed)
    table = CdfTable(np.concatenate(tputs) if tputs else np.empty(0), **labels)
    ee_table = (CdfTable(np.asarray(ees), quantity="energy_eff_bpj", **labels)
                if cfg.direction == "uplink" else None)
    return ExperimentResult(cfg, table, ee_table, failures, n_dropped, n_not_converged,
                            time.perf_counter() - start)


# --- output ----------------------------------------------------------------

CSV_COLUMNS = ("value", "empirical_cdf", "system", "power_control", "direction", "seed")


def emit_csv(table, path):
    """Write one row per table entry, numbers in full-precision scientific notation."""
    if len(table) == 0:
        raise ValueError("cannot emit an empty table")
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for value, cdf in zip(table.values, table.cdf):
                writer.writerow([f"{value:.17e}", f"{cdf:.17e}", table.system,
                                 table.power_control, table.direction, table.seed])
    except OSError as exc:
        raise OSError(f"could not write CSV to {path}: {exc}") from exc
    return path


def write_outputs(result, out_dir):
    """CSV tables, resolved config and text summary under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    label = result.config.label
    paths = {"config": write_config(result.config, out / f"{label}.ini")}
    if len(result.throughput):
        paths["throughput"] = emit_csv(result.throughput, out / f"{label}_throughput.csv")
    if result.energy_eff is not None and len(result.energy_eff):
        paths["energy_eff"] = emit_csv(result.energy_eff, out / f"{label}_energy_eff.csv")
    summary = out / f"{label}_summary.txt"
    summary.write_text(result.summary(), encoding="utf-8")
    paths["summary"] = summary
    return paths
