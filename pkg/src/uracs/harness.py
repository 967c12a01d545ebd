"""Experiment orchestration: config parsing, seeded trials, CSV emission.

Seeding: every random object in trial ``t`` comes from a stream keyed by
(master_seed, t, purpose), so original/enhanced comparisons within a trial
are paired and results do not depend on execution order.

Timing: by default the per-decode cost columns come from a deterministic
work model (NNLS iterations x rows x cols for the scalar channel, visited
coordinates x n^2 for MIMO, reported as work/1e6 "ms"), which keeps CSV
output byte-reproducible. Set timing="wall" to report measured wall time.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bits import random_bits, rows_to_ints
from .ccs import (DEFAULT_MEMORY_BUDGET, build_complex_sensing_matrix,
                  build_sensing_matrix, decode_siso, user_signals)
from .channel import (MimoChannelConfig, SisoChannelConfig, ebn0_to_amplitude,
                      ebn0_to_power, gmac_transmit, mimo_block_transmit)
from .errors import ConfigError
from .mimo import decode_mimo
from .predictors import PredictorInput, predict_table
from .tree import (DEFAULT_MIMO_PROFILE, DEFAULT_PATH_CAP, DEFAULT_SISO_PROFILE,
                   FragmentLists, ParityProfile, PathTracker, TreeCodebook,
                   encode_messages)

# purpose tags for per-trial substreams
MESSAGES, CODEBOOK, MATRIX, NOISE, FADING = range(5)

NAMED_PROFILES = {
    "siso-default": DEFAULT_SISO_PROFILE,
    "mimo-96": DEFAULT_MIMO_PROFILE,
}


def derive_seed(master_seed: int, trial: int, purpose: int) -> int:
    """Stable 64-bit seed for one (trial, purpose) substream."""
    ss = np.random.SeedSequence([int(master_seed), int(trial), int(purpose)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def pupe(sent: list[int], decoded: list[int], K: int) -> float:
    """Per-user probability of error: fraction of sent messages missing from
    the decoded list, which is truncated to its first K entries."""
    if K <= 0:
        raise ValueError("K must be positive")
    if len(sent) != K:
        raise ValueError("sent must hold exactly K messages")
    got = set(decoded[:K])
    return sum(1 for w in sent if w not in got) / K


# ----------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    profile: ParityProfile
    K: tuple[int, ...]
    trials: int = 1
    mode: str = "both"
    master_seed: int = 0
    workers: int = 1
    out: str | None = None
    timing: str = "model"
    list_size: int | None = None
    # scalar-channel scenario
    ebn0_db: tuple[float, ...] = ()
    n: int = 0
    noise_std: float = 1.0
    nnls_tol: float = 1e-8
    path_cap: int = DEFAULT_PATH_CAP
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    ebn0_search: dict | None = None
    # mimo scenario
    M: tuple[int, ...] = ()
    N0: float = 1.0
    sweeps: int = 10
    cd_tol: float = 1e-6
    # predict scenario
    variant: str = "both"

    @property
    def modes(self) -> tuple[str, ...]:
        return ("original", "enhanced") if self.mode == "both" else (self.mode,)


_COMMON_KEYS = {"scenario", "profile", "trials", "mode", "master_seed",
                "workers", "out", "timing", "list_size"}
_SCENARIO_KEYS = {
    "siso": _COMMON_KEYS | {"K", "ebn0_db", "n", "noise_std", "nnls_tol",
                            "path_cap", "memory_budget", "ebn0_search"},
    "mimo": _COMMON_KEYS | {"K", "M", "n", "ebn0_db", "N0", "sweeps",
                            "cd_tol", "path_cap", "memory_budget"},
    "predict": _COMMON_KEYS | {"K", "variant"},
}
_SEARCH_KEYS = {"target_pupe", "lo_db", "hi_db", "resolution_db"}


def _as_tuple(value, kind, name):
    items = value if isinstance(value, (list, tuple)) else [value]
    try:
        return tuple(kind(x) for x in items)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected {kind.__name__} or list thereof")


def _parse_profile(value) -> ParityProfile:
    if isinstance(value, str):
        if value not in NAMED_PROFILES:
            raise ConfigError(f"profile: unknown name {value!r}; "
                              f"known: {sorted(NAMED_PROFILES)}")
        return NAMED_PROFILES[value]
    if not isinstance(value, dict) or set(value) != {"m", "l"}:
        raise ConfigError("profile: expected a name or an object with keys m, l")
    try:
        return ParityProfile(m=tuple(value["m"]), l=tuple(value["l"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"profile: {e}")


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a configuration mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    scenario = data.get("scenario")
    if scenario not in _SCENARIO_KEYS:
        raise ConfigError(f"scenario: must be one of {sorted(_SCENARIO_KEYS)}")
    unknown = set(data) - _SCENARIO_KEYS[scenario]
    if unknown:
        raise ConfigError(f"unknown keys for scenario {scenario}: {sorted(unknown)}")
    for req in ("profile", "K"):
        if req not in data:
            raise ConfigError(f"{req}: required")
    profile = _parse_profile(data["profile"])
    K = _as_tuple(data["K"], int, "K")
    if not K or any(k < 1 for k in K):
        raise ConfigError("K: need at least one positive value")

    cfg = ExperimentConfig(scenario=scenario, profile=profile, K=K)
    simple = {
        "trials": int, "mode": str, "master_seed": int, "workers": int,
        "out": str, "timing": str, "list_size": int, "n": int,
        "noise_std": float, "nnls_tol": float, "path_cap": int,
        "memory_budget": int, "N0": float, "sweeps": int, "cd_tol": float,
        "variant": str,
    }
    updates = {}
    for key, kind in simple.items():
        if key in data:
            try:
                updates[key] = kind(data[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected {kind.__name__}")
    if "ebn0_db" in data:
        updates["ebn0_db"] = _as_tuple(data["ebn0_db"], float, "ebn0_db")
    if "M" in data:
        updates["M"] = _as_tuple(data["M"], int, "M")
    if "ebn0_search" in data:
        search = data["ebn0_search"]
        if not isinstance(search, dict) or set(search) != _SEARCH_KEYS:
            raise ConfigError(f"ebn0_search: expected keys {sorted(_SEARCH_KEYS)}")
        search = {k: float(v) for k, v in search.items()}
        if not 0.0 < search["target_pupe"] < 1.0:
            raise ConfigError("ebn0_search.target_pupe: must be in (0, 1)")
        if search["lo_db"] >= search["hi_db"]:
            raise ConfigError("ebn0_search: need lo_db < hi_db")
        if search["resolution_db"] <= 0:
            raise ConfigError("ebn0_search.resolution_db: must be positive")
        updates["ebn0_search"] = search
    cfg = replace(cfg, **updates)

    if cfg.trials < 1:
        raise ConfigError("trials: must be at least 1")
    if cfg.mode not in ("original", "enhanced", "both"):
        raise ConfigError("mode: must be original, enhanced, or both")
    if cfg.timing not in ("model", "wall"):
        raise ConfigError("timing: must be model or wall")
    if cfg.workers < 1:
        raise ConfigError("workers: must be at least 1")
    if cfg.list_size is not None and cfg.list_size < 1:
        raise ConfigError("list_size: must be at least 1")
    if scenario in ("siso", "mimo"):
        if cfg.n < 1:
            raise ConfigError("n: required and must be at least 1")
        if not cfg.ebn0_db:
            raise ConfigError("ebn0_db: required")
    if scenario == "siso" and cfg.noise_std < 0:
        raise ConfigError("noise_std: must be nonnegative")
    if scenario == "mimo":
        if not cfg.M or any(m < 1 for m in cfg.M):
            raise ConfigError("M: need at least one positive value")
        if len(cfg.ebn0_db) != 1:
            raise ConfigError("ebn0_db: mimo scenario takes a single value")
        if cfg.N0 <= 0:
            raise ConfigError("N0: must be positive")
        if cfg.sweeps < 1:
            raise ConfigError("sweeps: must be at least 1")
    if scenario == "predict" and cfg.variant not in ("full", "one_step", "both"):
        raise ConfigError("variant: must be full, one_step, or both")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    return parse_config(data)


# ----------------------------------------------------------------------------
# trials


@dataclass
class ModeOutcome:
    decoded: list[int]
    pupe: float
    per_slot: list[int]     # active columns (siso) or |S_l| (mimo)
    work_units: int
    wall_ms: float


@dataclass
class TrialResult:
    trial: int
    sent: list[int]
    outcomes: dict[str, ModeOutcome] = field(default_factory=dict)


def run_siso_trial(cfg: ExperimentConfig, K: int, ebn0_db: float,
                   trial: int) -> TrialResult:
    """One scalar-channel trial; decodes every mode in cfg.modes on the same
    messages, matrices, and noise."""
    prof = cfg.profile
    codebook = TreeCodebook(prof, derive_seed(cfg.master_seed, trial, CODEBOOK))
    msg_rng = np.random.default_rng((cfg.master_seed, trial, MESSAGES))
    W = random_bits(msg_rng, (K, prof.B))
    sent = [int(x) for x in rows_to_ints(W)]
    frags = encode_messages(W, codebook)

    mat_seed = derive_seed(cfg.master_seed, trial, MATRIX)
    by_width = {v: build_sensing_matrix(cfg.n, v, mat_seed, cfg.memory_budget)
                for v in set(prof.v)}
    matrices = [by_width[v] for v in prof.v]

    ch = SisoChannelConfig(d=ebn0_to_amplitude(ebn0_db, prof.B, prof.L),
                           B=prof.B, L=prof.L,
                           noise_seed=derive_seed(cfg.master_seed, trial, NOISE),
                           noise_std=cfg.noise_std)
    y = [gmac_transmit(user_signals(frags[ell - 1], matrices[ell - 1]), ch,
                       stream=ell) for ell in range(1, prof.L + 1)]

    result = TrialResult(trial=trial, sent=sent)
    for mode in cfg.modes:
        dec = decode_siso(y, matrices, codebook, K, mode=mode,
                          list_size=cfg.list_size, path_cap=cfg.path_cap,
                          nnls_tol=cfg.nnls_tol)
        result.outcomes[mode] = ModeOutcome(
            decoded=dec.messages, pupe=pupe(sent, dec.messages, K),
            per_slot=dec.diagnostics.active_cols,
            work_units=dec.diagnostics.work_units,
            wall_ms=dec.diagnostics.wall_ms)
    return result


def run_mimo_trial(cfg: ExperimentConfig, K: int, M: int,
                   trial: int) -> TrialResult:
    """One MIMO trial; always decodes both modes so the runtime ratio is paired."""
    prof = cfg.profile
    codebook = TreeCodebook(prof, derive_seed(cfg.master_seed, trial, CODEBOOK))
    msg_rng = np.random.default_rng((cfg.master_seed, trial, MESSAGES))
    W = random_bits(msg_rng, (K, prof.B))
    sent = [int(x) for x in rows_to_ints(W)]
    frags = encode_messages(W, codebook)

    P = ebn0_to_power(cfg.ebn0_db[0], prof.B, prof.L, cfg.n, cfg.N0)
    radius = float(np.sqrt(cfg.n * P))
    mat_seed = derive_seed(cfg.master_seed, trial, MATRIX)
    matrices = [build_complex_sensing_matrix(cfg.n, prof.v[ell - 1], radius,
                                             (mat_seed, ell), cfg.memory_budget)
                for ell in range(1, prof.L + 1)]

    ch = MimoChannelConfig(M=M, n=cfg.n, N0=cfg.N0, P=P,
                           fading_seed=derive_seed(cfg.master_seed, trial, FADING),
                           noise_seed=derive_seed(cfg.master_seed, trial, NOISE))
    Y = [mimo_block_transmit(rows_to_ints(frags[ell - 1]),
                             matrices[ell - 1].columns, ch, block=ell)
         for ell in range(1, prof.L + 1)]

    result = TrialResult(trial=trial, sent=sent)
    for mode in ("original", "enhanced"):
        dec = decode_mimo(Y, matrices, codebook, K, cfg.N0, mode=mode,
                          list_size=cfg.list_size, sweeps=cfg.sweeps,
                          tol=cfg.cd_tol, path_cap=cfg.path_cap)
        result.outcomes[mode] = ModeOutcome(
            decoded=dec.messages, pupe=pupe(sent, dec.messages, K),
            per_slot=dec.diagnostics.S_sizes,
            work_units=dec.diagnostics.work_units,
            wall_ms=dec.diagnostics.wall_ms)
    return result


def _map_trials(fn, cfg: ExperimentConfig, *args) -> list[TrialResult]:
    """Run fn(cfg, *args, trial) for every trial; merge results by index."""
    if cfg.workers <= 1:
        return [fn(cfg, *args, t) for t in range(cfg.trials)]
    out: list = [None] * cfg.trials
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {pool.submit(fn, cfg, *args, t): t for t in range(cfg.trials)}
        for fut, t in futures.items():
            out[t] = fut.result()
    return out


# ----------------------------------------------------------------------------
# genie-aided outer-code statistics


def genie_tree_trial(profile: ParityProfile, K: int, master_seed: int,
                     trial: int, max_redraw: int = 100):
    """Tree search on perfect lists with distinct per-section fragments.

    Returns (live path count per stage, admissible pattern count per stage
    2..L). Messages are redrawn until all K fragments differ in every
    section, matching the analytical model's assumptions.
    """
    codebook = TreeCodebook(profile, derive_seed(master_seed, trial, CODEBOOK))
    rng = np.random.default_rng((master_seed, trial, MESSAGES))
    for _ in range(max_redraw):
        W = random_bits(rng, (K, profile.B))
        frags = encode_messages(W, codebook)
        if all(np.unique(rows_to_ints(f)).size == K for f in frags):
            break
    else:
        raise RuntimeError("could not draw distinct fragments; sections too small")
    FragmentLists(frags).validate(profile)
    tracker = PathTracker(codebook)
    tracker.start(frags[0])
    patterns = []
    for ell in range(2, profile.L + 1):
        patterns.append(int(tracker.admissible().size))
        tracker.advance(frags[ell - 1])
    return tracker.diagnostics.live_paths, patterns


def genie_path_stats(profile: ParityProfile, K: int, trials: int,
                     master_seed: int = 0) -> dict:
    """Monte Carlo means/standard errors of wrong-path and pattern counts."""
    wrong = np.zeros((trials, profile.L))
    pats = np.zeros((trials, profile.L - 1))
    for t in range(trials):
        live, patterns = genie_tree_trial(profile, K, master_seed, t)
        wrong[t] = (np.asarray(live, dtype=float) - K) / K
        pats[t] = patterns
    return {
        "wrong_mean": wrong.mean(axis=0),
        "wrong_se": wrong.std(axis=0, ddof=1) / np.sqrt(trials),
        "patterns_mean": pats.mean(axis=0),
        "patterns_se": pats.std(axis=0, ddof=1) / np.sqrt(trials),
    }


# ----------------------------------------------------------------------------
# scenario runners


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


def _mode_cost_ms(cfg: ExperimentConfig, results: list[TrialResult],
                  mode: str) -> float:
    if cfg.timing == "wall":
        return float(np.mean([r.outcomes[mode].wall_ms for r in results]))
    return float(np.mean([r.outcomes[mode].work_units for r in results])) / 1e6


def run_siso(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    if cfg.scenario != "siso":
        raise ConfigError("scenario: run_siso needs scenario=siso")
    if cfg.ebn0_search is not None:
        return _run_siso_search(cfg)
    L = cfg.profile.L
    header = (["K", "ebn0_db", "mode", "trials", "pupe"]
              + [f"mean_cols_slot_{ell}" for ell in range(1, L + 1)]
              + ["mean_decode_ms"])
    rows = []
    for K in cfg.K:
        for ebn0 in cfg.ebn0_db:
            results = _map_trials(run_siso_trial, cfg, K, ebn0)
            for mode in cfg.modes:
                cols = np.array([r.outcomes[mode].per_slot for r in results])
                rows.append([K, ebn0, mode, cfg.trials,
                             float(np.mean([r.outcomes[mode].pupe for r in results])),
                             *[float(c) for c in cols.mean(axis=0)],
                             _mode_cost_ms(cfg, results, mode)])
    return header, rows


def _run_siso_search(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    """Bisection for the lowest Eb/N0 reaching the target PUPE (mean over trials)."""
    search = cfg.ebn0_search
    target = search["target_pupe"]
    header = ["K", "mode", "target_pupe", "required_ebn0_db", "trials"]
    rows = []
    for K in cfg.K:
        cache: dict[float, list[TrialResult]] = {}

        def mean_pupe(ebn0: float, mode: str) -> float:
            if ebn0 not in cache:
                cache[ebn0] = _map_trials(run_siso_trial, cfg, K, ebn0)
            return float(np.mean([r.outcomes[mode].pupe for r in cache[ebn0]]))

        for mode in cfg.modes:
            lo, hi = search["lo_db"], search["hi_db"]
            if mean_pupe(lo, mode) <= target:
                required = lo
            elif mean_pupe(hi, mode) > target:
                required = float("nan")  # not attainable within [lo, hi]
            else:
                while hi - lo > search["resolution_db"]:
                    mid = 0.5 * (lo + hi)
                    if mean_pupe(mid, mode) <= target:
                        hi = mid
                    else:
                        lo = mid
                required = hi
            rows.append([K, mode, target, required, cfg.trials])
    return header, rows


def run_mimo(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    if cfg.scenario != "mimo":
        raise ConfigError("scenario: run_mimo needs scenario=mimo")
    L = cfg.profile.L
    header = (["K", "M", "mode", "trials", "pupe"]
              + [f"mean_S_{ell}" for ell in range(1, L + 1)]
              + ["runtime_ratio"])
    rows = []
    for K in cfg.K:
        for M in cfg.M:
            results = _map_trials(run_mimo_trial, cfg, K, M)
            if cfg.timing == "wall":
                tot_e = sum(r.outcomes["enhanced"].wall_ms for r in results)
                tot_o = sum(r.outcomes["original"].wall_ms for r in results)
            else:
                tot_e = sum(r.outcomes["enhanced"].work_units for r in results)
                tot_o = sum(r.outcomes["original"].work_units for r in results)
            ratio = tot_e / tot_o if tot_o else float("nan")
            for mode in cfg.modes:
                sizes = np.array([r.outcomes[mode].per_slot for r in results])
                rows.append([K, M, mode, cfg.trials,
                             float(np.mean([r.outcomes[mode].pupe for r in results])),
                             *[float(s) for s in sizes.mean(axis=0)],
                             ratio])
    return header, rows


def run_predict(cfg: ExperimentConfig) -> tuple[list[str], list[list]]:
    if cfg.scenario != "predict":
        raise ConfigError("scenario: run_predict needs scenario=predict")
    header = ["K", "slot", "variant", "E_L", "P", "P_patterns", "R"]
    variants = (cfg.variant,) if cfg.variant != "both" else ("full", "one_step")
    rows = []
    for K in cfg.K:
        for variant in variants:
            for rec in predict_table(PredictorInput(K, cfg.profile, variant)):
                rows.append([rec["K"], rec["slot"], rec["variant"], rec["E_L"],
                             rec["P"], rec["P_patterns"], rec["R"]])
    return header, rows


RUNNERS = {"siso": run_siso, "mimo": run_mimo, "predict": run_predict}


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run the configured scenario; returns (and optionally writes) CSV text."""
    header, rows = RUNNERS[cfg.scenario](cfg)
    text = csv_text(header, rows)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
