"""Monte-Carlo orchestration across schemes, grids, and seeds, plus the CSV
and JSON record formats the batch CLI emits.

Paired-comparison discipline: at one grid point, every requested scheme sees
the identical channel realization, and each record carries a hash of the
cascaded channels so downstream tooling can verify the pairing. Rows are
always raw per-realization results; averaging is left to whoever reads the
CSV. ER positions are redrawn for every realization (recorded in the JSON
metadata).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import time
from dataclasses import dataclass

import numpy as np
import yaml

from . import static_sdr
from .channel import SystemConfig, db_to_linear, dbm_to_watts, received_rf_power, sample_channels
from .conic import SolverFailureError
from .dynamic_sca import initialize_from_lift, solve_dynamic, warm_start_from
from .eh import EhParams, derive_constants, dc_power, per_er
from .tdma import solve_tdma

__all__ = [
    "Scenario",
    "RunRecord",
    "SCHEMES",
    "run_scenario",
    "run_single",
    "emit_csv",
    "read_csv",
    "emit_json",
    "load_config",
    "build_scenario",
    "default_eh",
    "CSV_HEADER",
]

SCHEMES = ("upper-bound", "static-gr", "static-sca", "dynamic", "tdma", "no-irs")
CSV_HEADER = "scheme,k,j,seed,e_joules,total_energy_joules,rank,iterations,wall_ms,status"


def default_eh():
    """Stock harvester circuit: a = 150 1/W, b = 14 mW, saturation 24 mW."""
    return derive_constants(150.0, 0.014, 0.024)


@dataclass(frozen=True)
class Scenario:
    config: SystemConfig
    eh: object = None                  # EhParams or tuple of EhParams; stock if None
    schemes: tuple = SCHEMES
    sweep: str = "none"                # none | k-grid | j-grid
    grid: tuple = ()
    n_realizations: int = 1
    master_seed: int = 0
    gr_samples: int = 1000

    def __post_init__(self):
        if self.eh is None:
            object.__setattr__(self, "eh", default_eh())
        schemes = tuple(self.schemes)
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes {unknown}; valid: {SCHEMES}")
        if not schemes:
            raise ValueError("at least one scheme is required")
        object.__setattr__(self, "schemes", schemes)
        if self.sweep not in ("none", "k-grid", "j-grid"):
            raise ValueError(f"unknown sweep kind {self.sweep!r}")
        grid = tuple(int(g) for g in self.grid)
        if self.sweep != "none" and not grid:
            raise ValueError("a sweep needs a nonempty grid")
        object.__setattr__(self, "grid", grid)
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")


@dataclass
class RunRecord:
    scheme: str
    k: int
    j: int          # None when a slot count is meaningless for the scheme
    realization_seed: int
    e_joules: float
    total_energy_joules: float
    rank_estimate: int
    iterations: int
    wall_ms: float
    status: str
    channel_hash: str = ""   # JSON mirror only; the CSV column set is fixed


def _realization_seed(master_seed, index):
    state = np.random.SeedSequence((int(master_seed), int(index))).generate_state(1, np.uint64)
    return int(state[0])


def _gr_seed(realization_seed):
    state = np.random.SeedSequence((int(realization_seed), 1)).generate_state(1, np.uint64)
    return int(state[0])


def _channel_hash(ch):
    return hashlib.sha256(np.ascontiguousarray(ch.q_bar).tobytes()).hexdigest()[:16]


def _sanitize(msg):
    return str(msg).replace(",", ";").replace("\n", " ")


def _direct_only_record(ch, eh_list, cfg):
    p_t = cfg.total_energy / cfg.horizon
    per = np.array([cfg.horizon * dc_power(eh_list[k], p_t * abs(ch.h_d[k]) ** 2)
                    for k in range(ch.n_ers)])
    e = min(per[k] / a for k, a in enumerate(cfg.fairness_weights) if a > 0)
    return e, float(np.sum(per))


def _witness_total(result, ch, eh_list, cfg):
    p_t = static_sdr.static_transmit_power(cfg)
    total = 0.0
    for k in range(ch.n_ers):
        p_recv = p_t * max(float(np.real(np.trace(ch.q_lift[k] @ result.theta_lift))), 0.0)
        total += cfg.horizon * dc_power(eh_list[k], p_recv)
    return total


def _pattern_energies(ch, eh_list, cfg, theta, p_t):
    return np.array([cfg.horizon * dc_power(eh_list[k], received_rf_power(ch, k, theta, p_t))
                     for k in range(ch.n_ers)])


def _evaluate_schemes(sc, cfg, ch, seed, j_grid_entry=None, dyn_warm=None,
                      dyn_extra=(), schemes=None):
    """All requested schemes on one realization. Returns (records, dyn_solution)
    where dyn_solution feeds the nested warm start of a j-sweep."""
    if schemes is None:
        schemes = sc.schemes
    eh_list = per_er(sc.eh, cfg.n_ers)
    chash = _channel_hash(ch)
    records = []
    sdr_result = None
    ssca_solution = None
    dyn_solution = None

    def emit(scheme, j, e, total, rank, iterations, wall, status="ok"):
        records.append(RunRecord(scheme, cfg.n_ers, j, seed, float(e), float(total),
                                 rank, int(iterations), float(wall), status, chash))

    # a pinned slot count frees the dynamic scheme from needing the rank
    needs_sdr = {"upper-bound", "static-gr"} & set(schemes)
    if "dynamic" in schemes and j_grid_entry is None:
        needs_sdr.add("dynamic")
    sdr_failed = False
    if needs_sdr:
        t0 = time.monotonic()
        try:
            sdr_result = static_sdr.solve_sdr_upper_bound(ch, eh_list, cfg)
            sdr_wall = 1e3 * (time.monotonic() - t0)
        except SolverFailureError as exc:
            sdr_wall = 1e3 * (time.monotonic() - t0)
            sdr_failed = True
            # every scheme that needed this solve gets its own failure row
            for scheme in ("upper-bound", "static-gr", "dynamic"):
                if scheme in needs_sdr:
                    emit(scheme, None, 0.0, 0.0, None, 0, sdr_wall,
                         f"solver-failure: {_sanitize(exc)}")

    if "upper-bound" in schemes and sdr_result is not None:
        emit("upper-bound", None, sdr_result.e_upper,
             _witness_total(sdr_result, ch, eh_list, cfg),
             sdr_result.rank_estimate, sdr_result.bisection_iterations, sdr_wall)

    if "static-gr" in schemes and sdr_result is not None:
        t0 = time.monotonic()
        theta, e = static_sdr.gaussian_randomization(
            sdr_result, ch, eh_list, cfg, n_samples=sc.gr_samples, seed=_gr_seed(seed))
        per = _pattern_energies(ch, eh_list, cfg, theta, static_sdr.static_transmit_power(cfg))
        emit("static-gr", 1, e, float(np.sum(per)), sdr_result.rank_estimate, 0,
             1e3 * (time.monotonic() - t0))

    if "static-sca" in schemes:
        t0 = time.monotonic()
        try:
            ssca_solution = solve_dynamic(ch, eh_list, cfg, 1, freeze_resources=True)
            emit("static-sca", 1, ssca_solution.e, float(np.sum(ssca_solution.per_er_energy)),
                 None, ssca_solution.iterations, 1e3 * (time.monotonic() - t0))
        except (SolverFailureError, ValueError) as exc:
            emit("static-sca", 1, 0.0, 0.0, None, 0, 1e3 * (time.monotonic() - t0),
                 f"solver-failure: {_sanitize(exc)}")

    if "tdma" in schemes:
        t0 = time.monotonic()
        try:
            tdma_solution = solve_tdma(ch, eh_list, cfg)
            emit("tdma", cfg.n_ers, tdma_solution.e,
                 float(np.sum(tdma_solution.per_er_energy)), None,
                 tdma_solution.iterations, 1e3 * (time.monotonic() - t0))
        except (SolverFailureError, ValueError) as exc:
            emit("tdma", cfg.n_ers, 0.0, 0.0, None, 0, 1e3 * (time.monotonic() - t0),
                 f"solver-failure: {_sanitize(exc)}")

    if "dynamic" in schemes and not (j_grid_entry is None and sdr_failed):
        if j_grid_entry is not None:
            j_slots = int(j_grid_entry)
        else:
            j_slots = max(sdr_result.rank_estimate, 1)
        extra = list(dyn_extra) + ([ssca_solution] if ssca_solution is not None else [])
        t0 = time.monotonic()
        try:
            dyn_solution = solve_dynamic(ch, eh_list, cfg, j_slots,
                                         warm_start=dyn_warm, extra_candidates=extra)
            iterations = dyn_solution.iterations
            if j_grid_entry is None:
                # second ascent seeded from the relaxed solution's eigen
                # basis; the first run sits in the candidate pool, so the
                # audited objective can only improve
                eigen_it = initialize_from_lift(ch, eh_list, cfg,
                                                sdr_result.theta_lift, j_slots)
                dyn_solution = solve_dynamic(ch, eh_list, cfg, j_slots,
                                             warm_start=eigen_it,
                                             extra_candidates=extra + [dyn_solution])
                iterations += dyn_solution.iterations
            emit("dynamic", j_slots, dyn_solution.e,
                 float(np.sum(dyn_solution.per_er_energy)), None,
                 iterations, 1e3 * (time.monotonic() - t0))
        except (SolverFailureError, ValueError) as exc:
            emit("dynamic", j_slots, 0.0, 0.0, None, 0, 1e3 * (time.monotonic() - t0),
                 f"solver-failure: {_sanitize(exc)}")

    if "no-irs" in schemes:
        t0 = time.monotonic()
        e, total = _direct_only_record(ch, eh_list, cfg)
        emit("no-irs", None, e, total, None, 0, 1e3 * (time.monotonic() - t0))

    return records, dyn_solution


def _grid_config(sc, k):
    # each k regenerates equal weights; per-ER harvester lists cannot follow a
    # k sweep, so only a shared EhParams is allowed there
    if not isinstance(sc.eh, EhParams):
        raise ValueError("k-grid sweeps require a single shared harvester configuration")
    return dataclasses.replace(sc.config, n_ers=int(k), fairness_weights=None)


def run_scenario(sc: Scenario):
    """Run every (grid point, realization, scheme) cell and return the flat,
    deterministically sorted record list."""
    records = []
    if sc.sweep == "j-grid":
        grid = sorted(sc.grid)
        for i in range(sc.n_realizations):
            seed = _realization_seed(sc.master_seed, i)
            ch = sample_channels(sc.config, seed)
            eh_list = per_er(sc.eh, sc.config.n_ers)
            prev = None
            for idx, j_slots in enumerate(grid):
                # slot-count-independent schemes run once per realization;
                # the previous solution warm-starts the next slot count and
                # stays in the candidate pool, so e never drops along the grid
                schemes = sc.schemes if idx == 0 else tuple(
                    s for s in sc.schemes if s == "dynamic")
                warm = None
                if prev is not None and prev.schedule.n_slots <= j_slots:
                    warm = warm_start_from(prev, j_slots, ch, eh_list, sc.config)
                recs, dyn = _evaluate_schemes(
                    sc, sc.config, ch, seed, j_grid_entry=j_slots, dyn_warm=warm,
                    dyn_extra=[prev] if prev is not None else [], schemes=schemes)
                records.extend(recs)
                if dyn is not None:
                    prev = dyn
    else:
        grid = sorted(sc.grid) if sc.sweep == "k-grid" else [sc.config.n_ers]
        for k in grid:
            cfg = _grid_config(sc, k) if sc.sweep == "k-grid" else sc.config
            for i in range(sc.n_realizations):
                seed = _realization_seed(sc.master_seed, i)
                ch = sample_channels(cfg, seed)
                recs, _ = _evaluate_schemes(sc, cfg, ch, seed)
                records.extend(recs)
    records.sort(key=lambda r: (r.scheme, r.k, -1 if r.j is None else r.j, r.realization_seed))
    return records


def run_single(sc: Scenario, seed, j_slots=None):
    """One realization with the channel seed given verbatim, so any row of a
    sweep CSV can be reproduced by passing its seed column back in."""
    ch = sample_channels(sc.config, int(seed))
    recs, _ = _evaluate_schemes(sc, sc.config, ch, int(seed), j_grid_entry=j_slots)
    recs.sort(key=lambda r: (r.scheme, r.k, -1 if r.j is None else r.j))
    return recs


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def emit_csv(records, path):
    """Fixed-header CSV, one row per record, floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(",".join([
                r.scheme, str(r.k), _fmt(r.j), str(r.realization_seed),
                _fmt(float(r.e_joules)), _fmt(float(r.total_energy_joules)),
                _fmt(r.rank_estimate), str(r.iterations),
                _fmt(float(r.wall_ms)), r.status,
            ]) + "\n")


def read_csv(path):
    """Parse an emitted CSV back into records (the hash lives only in JSON)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(RunRecord(
                scheme=row["scheme"], k=int(row["k"]),
                j=int(row["j"]) if row["j"] else None,
                realization_seed=int(row["seed"]),
                e_joules=float(row["e_joules"]),
                total_energy_joules=float(row["total_energy_joules"]),
                rank_estimate=int(row["rank"]) if row["rank"] else None,
                iterations=int(row["iterations"]),
                wall_ms=float(row["wall_ms"]), status=row["status"]))
    return out


def emit_json(records, path, scenario: Scenario = None):
    """JSON mirror of the records, including the per-group channel hashes and
    run metadata the CSV cannot carry."""
    import json

    doc = {
        "geometry": "er-positions-redrawn-per-realization",
        "records": [dataclasses.asdict(r) for r in records],
    }
    if scenario is not None:
        doc["master_seed"] = scenario.master_seed
        doc["sweep"] = scenario.sweep
        doc["grid"] = list(scenario.grid)
        doc["n_realizations"] = scenario.n_realizations
        doc["schemes"] = list(scenario.schemes)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


_DB_KEYS = {
    "pathloss_ref_db": ("pathloss_ref", db_to_linear),
    "rician_factor_db": ("rician_factor", db_to_linear),
    "et_gain_dbi": ("et_gain", db_to_linear),
    "er_gain_dbi": ("er_gain", db_to_linear),
    "max_power_dbm": ("max_power", dbm_to_watts),
}


def _system_config(raw):
    raw = dict(raw)
    for db_key, (lin_key, conv) in _DB_KEYS.items():
        if db_key in raw:
            if lin_key in raw:
                raise ValueError(f"give {db_key} or {lin_key}, not both")
            raw[lin_key] = float(conv(raw.pop(db_key)))
    for key in ("et_position", "irs_position", "er_circle_center"):
        if key in raw and raw[key] is not None:
            raw[key] = tuple(raw[key])
    if raw.get("fairness_weights") is not None:
        raw["fairness_weights"] = tuple(raw["fairness_weights"])
    return SystemConfig(**raw)


def _harvester(raw):
    if raw is None:
        return default_eh()
    a, b, m = raw.get("a", 150.0), raw.get("b", 0.014), raw.get("m", 0.024)
    if any(isinstance(v, (list, tuple)) for v in (a, b, m)):
        lists = [v if isinstance(v, (list, tuple)) else None for v in (a, b, m)]
        n = {len(v) for v in lists if v is not None}
        if len(n) != 1:
            raise ValueError("per-ER harvester lists must share one length")
        n = n.pop()
        a, b, m = [list(v) if isinstance(v, (list, tuple)) else [v] * n for v in (a, b, m)]
        return tuple(derive_constants(ai, bi, mi) for ai, bi, mi in zip(a, b, m))
    return derive_constants(float(a), float(b), float(m))


def load_config(path, overrides=None):
    """Build a Scenario from a YAML file with sections `system`, `harvester`,
    and `scenario`. dB-form keys (pathloss_ref_db, rician_factor_db,
    et_gain_dbi, er_gain_dbi, max_power_dbm) convert at this boundary;
    everything downstream is linear SI. `overrides` maps dotted or bare keys
    to replacement values and wins over the file."""
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    return build_scenario(doc, overrides)


def build_scenario(doc, overrides=None):
    system = dict(doc.get("system") or {})
    harvester = dict(doc.get("harvester") or {}) or None
    scen = dict(doc.get("scenario") or {})
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if not name:
            section, name = None, key
        if section == "system" or (section is None and name in SystemConfig.__dataclass_fields__) \
                or (section is None and name in _DB_KEYS):
            system[name] = value
        elif section == "harvester" or (section is None and name in ("a", "b", "m")):
            harvester = dict(harvester or {})
            harvester[name] = value
        elif section in (None, "scenario"):
            scen[name] = value
        else:
            raise ValueError(f"unknown override section {section!r}")
    config = _system_config(system)
    return Scenario(
        config=config,
        eh=_harvester(harvester),
        schemes=tuple(scen.get("schemes", SCHEMES)),
        sweep=scen.get("sweep", "none"),
        grid=tuple(scen.get("grid", ())),
        n_realizations=int(scen.get("n_realizations", 1)),
        master_seed=int(scen.get("master_seed", 0)),
        gr_samples=int(scen.get("gr_samples", 1000)),
    )
