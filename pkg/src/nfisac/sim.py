"""Monte Carlo experiments: SE vs SNR, SE vs bandwidth, radar beampattern.

Every trial draws from its own generator spawned off the run seed, so
results do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .array import ArrayConfig, SteeringParams, build_dictionary
from .channel import Scenario, build_channels, optimal_beamformer, sample_paths, sample_targets, subcarrier_frequencies
from .design import HybridDesign, TradeoffConfig, design_hybrid, fd_isac_beamformer, radar_beamformer
from .metrics import beampattern, probe_matrix, spectral_efficiency, transmit_covariance

MODES = ("nearfield", "farfield")
COMPENSATIONS = ("bsa", "none")
BASELINES = ("hybrid", "fd_isac", "fd_comm")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Experiment parameters. Defaults reproduce the full-scale setup.

    Angles are in radians. ``range_interval`` is in meters, or in units of
    the transmit array's Fraunhofer distance when ``ranges_in_fraunhofer``.
    ``dict_range_interval`` defaults to ``range_interval``.
    """

    tx_antennas: int = 128
    rx_antennas: int = 16
    carrier_frequency: float = 300e9
    bandwidth: float = 20e9
    subcarriers: int = 64
    targets: int = 3
    paths: int = 8
    rf_chains: int = 8
    streams: int = 4
    epsilon: float = 0.5
    dict_directions: int = 100
    dict_ranges: int = 20
    direction_interval: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    range_interval: tuple[float, float] = (5.0, 30.0)
    ranges_in_fraunhofer: bool = False
    dict_range_interval: tuple[float, float] | None = None
    cp_length: int | None = None
    trials: int = 500
    snr_grid_db: tuple[float, ...] = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    bandwidth_grid: tuple[float, ...] = (0.0, 5e9, 10e9, 15e9, 20e9, 25e9, 30e9, 35e9, 40e9)
    snr_db: float = 10.0
    seed: int = 0
    mode: str = "nearfield"
    compensation: str = "bsa"
    baselines: tuple[str, ...] = BASELINES
    compare_farfield: bool = True
    extra_sweeps: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("direction_interval", "range_interval", "dict_range_interval", "snr_grid_db", "bandwidth_grid", "baselines"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        self.validate()

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.tx_antennas >= 2 and self.rx_antennas >= 2, "arrays need at least 2 elements")
        need(1 <= self.targets <= self.streams <= self.rf_chains <= self.tx_antennas, "need K <= N_S <= N_RF <= N_T")
        need(self.streams <= self.rx_antennas, "need N_S <= N_R")
        need(0.0 <= self.epsilon <= 1.0, "epsilon must lie in [0, 1]")
        need(self.subcarriers >= 1 and self.paths >= 1 and self.trials >= 1, "counts must be positive")
        need(self.dict_directions * self.dict_ranges >= self.rf_chains, "dictionary smaller than N_RF")
        need(self.carrier_frequency > 0 and self.bandwidth >= 0, "invalid carrier/bandwidth")
        need(self.bandwidth < 2 * self.carrier_frequency, "bandwidth must leave all subcarriers positive")
        need(len(self.direction_interval) == 2 and self.direction_interval[0] < self.direction_interval[1], "bad direction_interval")
        need(-np.pi / 2 <= self.direction_interval[0] and self.direction_interval[1] <= np.pi / 2, "directions must lie in [-pi/2, pi/2]")
        need(len(self.range_interval) == 2 and 0 < self.range_interval[0] < self.range_interval[1], "bad range_interval")
        if self.dict_range_interval is not None:
            need(len(self.dict_range_interval) == 2 and 0 < self.dict_range_interval[0] <= self.dict_range_interval[1], "bad dict_range_interval")
        need(len(self.snr_grid_db) > 0, "snr_grid_db is empty")
        need(len(self.bandwidth_grid) > 0, "bandwidth_grid is empty")
        need(all(0 <= b < 2 * self.carrier_frequency for b in self.bandwidth_grid), "bad bandwidth_grid entry")
        need(self.mode in MODES, f"mode must be one of {MODES}")
        need(self.compensation in COMPENSATIONS, f"compensation must be one of {COMPENSATIONS}")
        need(len(self.baselines) > 0 and set(self.baselines) <= set(BASELINES), f"baselines must be a subset of {BASELINES}")
        need(self.cp_length is None or 1 <= self.cp_length <= self.subcarriers, "cp_length must lie in [1, M]")
        need(0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer")
        need(self.workers >= 1 and self.extra_sweeps >= 0, "workers >= 1 and extra_sweeps >= 0")

    # geometry ------------------------------------------------------------

    @property
    def tx(self) -> ArrayConfig:
        return ArrayConfig.half_wavelength(self.tx_antennas, self.carrier_frequency)

    @property
    def rx(self) -> ArrayConfig:
        return ArrayConfig.half_wavelength(self.rx_antennas, self.carrier_frequency)

    @property
    def ranges_m(self) -> tuple[float, float]:
        lo, hi = self.range_interval
        if self.ranges_in_fraunhofer:
            d_f = self.tx.fraunhofer_distance
            return lo * d_f, hi * d_f
        return lo, hi

    @property
    def dict_ranges_m(self) -> tuple[float, float]:
        if self.dict_range_interval is None:
            return self.ranges_m
        lo, hi = self.dict_range_interval
        if self.ranges_in_fraunhofer:
            d_f = self.tx.fraunhofer_distance
            return lo * d_f, hi * d_f
        return lo, hi

    def tradeoff(self, epsilon: float | None = None) -> TradeoffConfig:
        eps = self.epsilon if epsilon is None else epsilon
        return TradeoffConfig(eps, self.rf_chains, self.streams, self.targets)

    def scenario(self) -> Scenario:
        cp = self.cp_length if self.cp_length is not None else max(1, self.subcarriers // 4)
        return Scenario(self.paths, self.direction_interval, self.ranges_m, self.bandwidth, cp)

    # serialization -------------------------------------------------------

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in dataclasses.fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict, base: "SimConfig | None" = None) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return dataclasses.replace(base or cls(), **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, base: "SimConfig | None" = None) -> "SimConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data, base)


PRESETS = {
    "paper": SimConfig(),
    "desk": SimConfig(
        tx_antennas=32,
        rx_antennas=8,
        subcarriers=16,
        targets=2,
        paths=4,
        rf_chains=4,
        streams=2,
        dict_directions=25,
        dict_ranges=16,
        trials=50,
    ),
}


@dataclass
class ResultTable:
    """One row per (sweep value, method)."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str, method: str | None = None) -> np.ndarray:
        i = self.columns.index(name)
        j = self.columns.index("method") if "method" in self.columns else None
        return np.array([r[i] for r in self.rows if method is None or r[j] == method])

    def methods(self) -> list[str]:
        j = self.columns.index("method")
        return list(dict.fromkeys(r[j] for r in self.rows))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return v


# per-trial machinery -----------------------------------------------------


@lru_cache(maxsize=8)
def _dictionaries(config_json: str):
    cfg = SimConfig.from_dict(json.loads(config_json))
    args = (cfg.tx, cfg.dict_directions, cfg.dict_ranges, cfg.dict_ranges_m)
    return build_dictionary(*args), build_dictionary(*args, far_field=True)


def trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def _draw(cfg: SimConfig, seed_seq):
    rng = np.random.default_rng(seed_seq)
    paths = sample_paths(rng, cfg.scenario())
    targets = sample_targets(rng, cfg.targets, cfg.direction_interval, cfg.ranges_m)
    return paths, targets


def _target_gain(cfg: SimConfig, precoders, etas, targets) -> float:
    "Mean beampattern gain at the targets, over subcarriers."
    total = 0.0
    for F, eta in zip(precoders, etas):
        R = F @ F.conj().T / cfg.streams
        A = np.stack([probe_matrix(cfg.tx, [t.direction], [t.range], eta)[:, 0] for t in targets], axis=1)
        total += np.mean(np.einsum("ip,ij,jp->p", A.conj(), R, A).real)
    return total / len(precoders)


def evaluate_trial(cfg: SimConfig, seed_seq, bandwidth: float, hybrids) -> dict:
    """SE at every SNR and mean target gain for each method in one trial.

    ``hybrids`` is a sequence of ``(label, far_field, bsa)`` hybrid variants.
    """
    paths, targets = _draw(cfg, seed_seq)
    near, far = _dictionaries(cfg.to_json())
    tx, rx = cfg.tx, cfg.rx
    freqs = subcarrier_frequencies(cfg.carrier_frequency, bandwidth, cfg.subcarriers)
    etas = cfg.carrier_frequency / freqs
    H = build_channels(paths, tx, rx, freqs, squint=True).per_subcarrier
    noise = [10.0 ** (-snr / 10.0) for snr in cfg.snr_grid_db]

    precoders = {}
    if "fd_comm" in cfg.baselines or "fd_isac" in cfg.baselines:
        F_opt = [optimal_beamformer(h, cfg.streams) for h in H]
        if "fd_comm" in cfg.baselines:
            precoders["fd_comm"] = F_opt
        if "fd_isac" in cfg.baselines:
            precoders["fd_isac"] = fd_isac_beamformer(F_opt, radar_beamformer(targets, tx), cfg.epsilon)
    if "hybrid" in cfg.baselines and hybrids:
        H_bar = build_channels(paths, tx, rx, freqs, squint=False).per_subcarrier
        F_opt_bar = [optimal_beamformer(h, cfg.streams) for h in H_bar]
        designs = {}
        for label, far_field, bsa in hybrids:
            if far_field not in designs:
                F_R = radar_beamformer(targets, tx, far_field=far_field)
                designs[far_field] = design_hybrid(
                    far if far_field else near, F_opt_bar, F_R, cfg.tradeoff(), etas, cfg.extra_sweeps
                )
            precoders[label] = designs[far_field].precoders(bsa=bsa)

    out = {}
    for label, F in precoders.items():
        se = [spectral_efficiency(H, None, F, s2, cfg.streams) for s2 in noise]
        out[label] = (se, _target_gain(cfg, F, etas, targets))
    return out


def hybrid_label(far_field: bool, bsa: bool) -> str:
    return f"hybrid_{'farfield' if far_field else 'nearfield'}_{'bsa' if bsa else 'nobsa'}"


def _trial_job(args):
    cfg_json, seed_seq, bandwidth, hybrids = args
    cfg = SimConfig.from_dict(json.loads(cfg_json))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return evaluate_trial(cfg, seed_seq, bandwidth, hybrids)


def _run_trials(cfg: SimConfig, bandwidth: float, hybrids) -> list[dict]:
    seeds = trial_seeds(cfg.seed, cfg.trials)
    jobs = [(cfg.to_json(), s, bandwidth, hybrids) for s in seeds]
    if cfg.workers == 1:
        return [_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_trial_job, jobs))


def _metadata(cfg: SimConfig, experiment: str) -> dict:
    # the worker count is an execution detail; leaving it out keeps output
    # byte-identical between serial and parallel runs
    echo = cfg.to_dict()
    del echo["workers"]
    return {
        "nfisac": __version__,
        "experiment": experiment,
        "seed": cfg.seed,
        "config": json.dumps(echo, sort_keys=True),
    }


def _aggregate(results: list[dict], sweep_value, index: int, rows: list):
    labels = list(results[0])
    for label in labels:
        se = np.array([r[label][0][index] for r in results])
        gain = np.array([r[label][1] for r in results])
        rows.append((sweep_value, label, float(se.mean()), float(se.std()), float(gain.mean()), len(results)))


COLUMNS = ("sweep_value", "method", "mean_se", "std_se", "mean_target_gain", "trials_used")


def _snr_hybrids(cfg: SimConfig):
    bsa = cfg.compensation == "bsa"
    variants = [(hybrid_label(cfg.mode == "farfield", bsa), cfg.mode == "farfield", bsa)]
    if cfg.compare_farfield and cfg.mode == "nearfield":
        variants.append((hybrid_label(True, bsa), True, bsa))
    return tuple(variants)


def run_se_vs_snr(config: SimConfig) -> ResultTable:
    "Mean/std SE over trials at every SNR in ``snr_grid_db`` for each method."
    results = _run_trials(config, config.bandwidth, _snr_hybrids(config))
    table = ResultTable(COLUMNS, metadata=_metadata(config, "se-vs-snr"))
    for i, snr in enumerate(config.snr_grid_db):
        _aggregate(results, float(snr), i, table.rows)
    return table


def run_se_vs_bandwidth(config: SimConfig) -> ResultTable:
    """SE at ``snr_db`` across ``bandwidth_grid``; the hybrid is reported with and without BSA.

    Paths (including delays) are drawn once per trial at ``config.bandwidth``
    and reused at every grid point.
    """
    near_ff = config.mode == "farfield"
    hybrids = [(hybrid_label(near_ff, True), near_ff, True), (hybrid_label(near_ff, False), near_ff, False)]
    if config.compare_farfield and not near_ff:
        hybrids.append((hybrid_label(True, True), True, True))
    cfg = config.replace(snr_grid_db=(config.snr_db,))
    table = ResultTable(COLUMNS, metadata=_metadata(config, "se-vs-bandwidth"))
    for b in config.bandwidth_grid:
        results = _run_trials(cfg, float(b), tuple(hybrids))
        _aggregate(results, float(b), 0, table.rows)
    return table


# beampattern -------------------------------------------------------------


@dataclass
class TrialDesign:
    """One trial's hybrid design together with the scene it was designed for."""

    config: SimConfig
    design: HybridDesign
    targets: list[SteeringParams]
    frequencies: np.ndarray
    dictionary_grid: list[SteeringParams]


def design_for_trial(config: SimConfig, trial: int = 0, targets=None, bandwidth: float | None = None) -> TrialDesign:
    """Design the configured hybrid beamformer for one trial of the run.

    ``targets`` overrides the sampled radar targets.
    """
    seed_seq = trial_seeds(config.seed, trial + 1)[trial]
    paths, sampled = _draw(config, seed_seq)
    targets = sampled if targets is None else [SteeringParams(*t) for t in targets]
    if len(targets) != config.targets:
        raise ConfigError(f"expected {config.targets} targets, got {len(targets)}")
    far_field = config.mode == "farfield"
    near, far = _dictionaries(config.to_json())
    dictionary = far if far_field else near
    b = config.bandwidth if bandwidth is None else bandwidth
    freqs = subcarrier_frequencies(config.carrier_frequency, b, config.subcarriers)
    H_bar = build_channels(paths, config.tx, config.rx, freqs, squint=False).per_subcarrier
    F_opt = [optimal_beamformer(h, config.streams) for h in H_bar]
    F_R = radar_beamformer(targets, config.tx, far_field=far_field)
    design = design_hybrid(dictionary, F_opt, F_R, config.tradeoff(), config.carrier_frequency / freqs, config.extra_sweeps)
    return TrialDesign(config, design, targets, freqs, dictionary.grid)


@dataclass
class BeampatternResult:
    directions: np.ndarray
    ranges: np.ndarray
    gains: np.ndarray  # subcarrier-averaged, (n_directions, n_ranges)
    targets: list[SteeringParams]
    target_gains: np.ndarray
    metadata: dict = field(default_factory=dict)

    def cell_of(self, point: SteeringParams) -> tuple[int, int]:
        "Nearest probe-grid cell to ``point``."
        i = int(np.argmin(np.abs(self.directions - point[0])))
        j = int(np.argmin(np.abs(self.ranges - point[1])))
        return i, j

    def argmax_cell(self, mask=None) -> tuple[int, int]:
        g = self.gains if mask is None else np.where(mask, self.gains, -np.inf)
        i, j = np.unravel_index(int(np.argmax(g)), g.shape)
        return int(i), int(j)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("kind", "direction", "range", "gain"))
        for t, g in zip(self.targets, self.target_gains):
            writer.writerow(("target", _fmt(float(t.direction)), _fmt(float(t.range)), _fmt(float(g))))
        for i, p in enumerate(self.directions):
            for j, r in enumerate(self.ranges):
                writer.writerow(("grid", _fmt(float(p)), _fmt(float(r)), _fmt(float(self.gains[i, j]))))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def default_probe_grid(config: SimConfig, n_directions: int = 101, n_ranges: int = 40):
    lo, hi = config.ranges_m
    return np.linspace(-1.0, 1.0, n_directions), np.linspace(lo, hi, n_ranges)


def run_beampattern(config: SimConfig, design: TrialDesign | None = None, probe_grid=None) -> BeampatternResult:
    """Subcarrier-averaged beampattern of a hybrid design plus gains at its targets.

    Each subcarrier's pattern uses that subcarrier's array response, and the
    BSA baseband when ``config.compensation == 'bsa'``.
    """
    if design is None:
        design = design_for_trial(config)
    directions, ranges = probe_grid if probe_grid is not None else default_probe_grid(config)
    directions = np.asarray(directions, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    bsa = config.compensation == "bsa"
    d = design.design
    gains = np.zeros((len(directions), len(ranges)))
    target_gains = np.zeros(len(design.targets))
    for F_BB, f in zip(d.bsa_baseband if bsa else d.baseband, design.frequencies):
        R = transmit_covariance(d.analog, F_BB, config.streams)
        gains += beampattern(R, directions, ranges, config.tx, f).gains
        for k, t in enumerate(design.targets):
            target_gains[k] += beampattern(R, [t.direction], [t.range], config.tx, f).gains[0, 0]
    M = len(design.frequencies)
    meta = _metadata(config, "beampattern")
    return BeampatternResult(directions, ranges, gains / M, design.targets, target_gains / M, meta)


def design_to_dict(td: TrialDesign) -> dict:
    "Plain-JSON view of a trial design; complex matrices become [real, imag] pairs."

    def cplx(a):
        a = np.asarray(a)
        return {"real": a.real.tolist(), "imag": a.imag.tolist()}

    d = td.design
    return {
        "nfisac": __version__,
        "config": td.config.to_dict(),
        "targets": [list(t) for t in td.targets],
        "subcarrier_frequencies": td.frequencies.tolist(),
        "selected_atoms": [
            {"index": p, "direction": td.dictionary_grid[p].direction, "range": td.dictionary_grid[p].range}
            for p in d.selected_atoms
        ],
        "analog_phase": np.angle(d.analog).tolist(),
        "baseband": [cplx(b) for b in d.baseband],
        "bsa_baseband": [cplx(b) for b in d.bsa_baseband],
        "auxiliary": cplx(d.auxiliary) if d.auxiliary is not None else None,
        "residual_history": d.residual_history,
    }
