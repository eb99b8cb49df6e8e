"""
Small LIF networks (2 or 3 neurons) coupled by correlated noise and/or jumps.

Two generative protocols are provided:

* :func:`simulate_fpt_trials` -- every trial starts all membranes at rest and
  records each neuron's first passage through threshold.
* :func:`simulate_spike_trains` -- a free-running network with reset after
  every spike, producing one spike train per neuron.

Jump convention: ``jumps[i, j]`` (mV) is added to neuron ``j`` when neuron
``i`` fires. Positive entries are excitatory, negative inhibitory.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .engine import RngStream, check_correlation_matrix, cholesky, correlated_increments

log = logging.getLogger(__name__)

FPT_BLOCK_STEPS = 2048
SPIKE_BLOCK_STEPS = 1 << 16
CASCADE_MODES = ("same-epoch", "stagger")


class TrialTimeout(UserWarning):
    """Emitted when FPT trials hit the time cap and are discarded."""


@dataclass(frozen=True)
class NeuronParams:
    """OU/LIF constants for one neuron (defaults are the standard values)."""

    mu: float = 1.2  # mV/ms
    tau: float = 10.0  # ms
    sigma2: float = 0.3  # mV^2/ms
    theta: float = 10.0  # mV
    reset: float = 0.0  # mV

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


STANDARD = NeuronParams()


@dataclass
class NetworkSpec:
    neurons: tuple[NeuronParams, ...]
    noise_corr: np.ndarray
    jumps: np.ndarray

    def __post_init__(self):
        self.neurons = tuple(self.neurons)
        self.noise_corr = np.array(self.noise_corr, dtype=float)
        self.jumps = np.array(self.jumps, dtype=float)

    @property
    def n(self) -> int:
        return len(self.neurons)

    @classmethod
    def standard(cls, n: int = 2, corr: float | np.ndarray = 0.0, jumps=None,
                 neuron: NeuronParams = STANDARD) -> "NetworkSpec":
        """Identical standard neurons; scalar ``corr`` fills every off-diagonal entry."""
        if np.ndim(corr) == 0:
            c = np.full((n, n), float(corr))
            np.fill_diagonal(c, 1.0)
        else:
            c = np.asarray(corr, dtype=float)
        h = np.zeros((n, n)) if jumps is None else np.asarray(jumps, dtype=float)
        return cls((neuron,) * n, c, h)

    @classmethod
    def with_jumps(cls, n: int, links: dict[tuple[int, int], float], **kwargs) -> "NetworkSpec":
        """Standard neurons with jumps given as ``{(source, target): mV}`` (0-based)."""
        h = np.zeros((n, n))
        for (i, j), v in links.items():
            h[i, j] = v
        return cls.standard(n, jumps=h, **kwargs)

    def permuted(self, perm) -> "NetworkSpec":
        """Relabel neurons: new neuron ``k`` is old neuron ``perm[k]``."""
        p = np.asarray(perm)
        return NetworkSpec(tuple(self.neurons[i] for i in p),
                           self.noise_corr[np.ix_(p, p)], self.jumps[np.ix_(p, p)])

    def arrays(self):
        mu = np.array([p.mu for p in self.neurons])
        tau = np.array([p.tau for p in self.neurons])
        sigma = np.array([p.sigma for p in self.neurons])
        theta = np.array([p.theta for p in self.neurons])
        reset = np.array([p.reset for p in self.neurons])
        return mu, tau, sigma, theta, reset


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01  # ms
    duration: float = 250_000.0  # ms, spike-train protocol
    n_trials: int = 10_000  # FPT protocol
    burn_in_spikes: int = 50
    master_seed: int = 0
    timeout: float = 1e4  # ms, FPT trial cap
    cascade: str = "same-epoch"

    def halved(self) -> "SimConfig":
        return replace(self, dt=self.dt / 2)


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self):
        if self.problems:
            raise ValueError("invalid network: " + "; ".join(self.problems))


def validate_network(spec: NetworkSpec) -> ValidationReport:
    """Collect every violated invariant of ``spec`` instead of stopping at the first."""
    problems = []
    n = spec.n
    if n < 1:
        problems.append("network has no neurons")
    for k, p in enumerate(spec.neurons):
        if not p.tau > 0:
            problems.append(f"neuron {k + 1}: tau must be > 0 (got {p.tau})")
        if not p.sigma2 >= 0:
            problems.append(f"neuron {k + 1}: sigma2 must be >= 0 (got {p.sigma2})")
        if not p.theta > p.reset:
            problems.append(f"neuron {k + 1}: theta ({p.theta}) must exceed reset ({p.reset})")
    if spec.noise_corr.shape != (n, n):
        problems.append(f"noise_corr must be {n}x{n}, got {spec.noise_corr.shape}")
    else:
        problems.extend(check_correlation_matrix(spec.noise_corr))
    if spec.jumps.shape != (n, n):
        problems.append(f"jumps must be {n}x{n}, got {spec.jumps.shape}")
    elif np.any(np.diag(spec.jumps) != 0):
        problems.append("jumps diagonal must be zero (no self-jump)")
    elif not np.all(np.isfinite(spec.jumps)):
        problems.append("jumps must be finite")
    return ValidationReport(problems)


def validate_config(config: SimConfig) -> list[str]:
    problems = []
    if not config.dt > 0:
        problems.append(f"dt must be > 0 (got {config.dt})")
    if not (config.duration > 0 or config.n_trials > 0):
        problems.append("either duration or n_trials must be positive")
    if config.burn_in_spikes < 0:
        problems.append("burn_in_spikes must be >= 0")
    if config.cascade not in CASCADE_MODES:
        problems.append(f"cascade must be one of {CASCADE_MODES}")
    return problems


# ---------------------------------------------------------------- containers


@dataclass
class SpikeTrains:
    """Per-neuron sorted firing epochs (ms)."""

    trains: list[np.ndarray]
    duration: float | None = None

    def __post_init__(self):
        self.trains = [np.asarray(t, dtype=float) for t in self.trains]

    def __len__(self) -> int:
        return len(self.trains)

    def __getitem__(self, i) -> np.ndarray:
        return self.trains[i]

    @property
    def counts(self) -> list[int]:
        return [len(t) for t in self.trains]

    def check(self) -> None:
        for k, t in enumerate(self.trains):
            if t.size > 1 and not np.all(np.diff(t) > 0):
                raise ValueError(f"spike train {k + 1} is not strictly increasing")

    def shifted(self, offset: float) -> "SpikeTrains":
        d = None if self.duration is None else self.duration + offset
        return SpikeTrains([t + offset for t in self.trains], d)

    def scaled(self, factor: float) -> "SpikeTrains":
        d = None if self.duration is None else self.duration * factor
        return SpikeTrains([t * factor for t in self.trains], d)

    def reversed(self, length: float | None = None) -> "SpikeTrains":
        """Mirror the time axis, ``t -> length - t``."""
        length = self.duration if length is None else length
        return SpikeTrains([(length - t)[::-1] for t in self.trains], length)

    def permuted(self, perm) -> "SpikeTrains":
        return SpikeTrains([self.trains[i] for i in perm], self.duration)


@dataclass
class FptSample:
    """Joint first-passage times; one row per completed trial."""

    times: np.ndarray  # (n_valid, N), ms
    trials: np.ndarray  # trial index of each row
    discarded: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def n_neurons(self) -> int:
        return self.times.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]


# ---------------------------------------------------------------- protocols


def _stagger(config: SimConfig) -> float:
    return 1.0 if config.cascade == "stagger" else 0.0


def _run_fpt_range(spec: NetworkSpec, config: SimConfig, start: int, stop: int):
    L = cholesky(spec.noise_corr)
    mu, tau, sigma, theta, reset = spec.arrays()
    h = spec.jumps
    n = spec.n
    max_steps = int(math.ceil(config.timeout / config.dt))
    stagger = _stagger(config)
    out = np.full((stop - start, n), np.nan)
    ok = np.zeros(stop - start, dtype=bool)
    for row, trial in enumerate(range(start, stop)):
        rng = RngStream(config.master_seed, trial)
        x = reset.copy()
        alive = np.ones(n, dtype=np.bool_)
        times = out[row]
        step0 = 0
        remaining = n
        while remaining and step0 < max_steps:
            m = min(FPT_BLOCK_STEPS, max_steps - step0)
            dW = correlated_increments(L, config.dt, rng, m)
            remaining = _kernels.fpt_block(x, alive, times, dW, mu, tau, sigma, theta, h,
                                           config.dt, step0, stagger)
            step0 += m
        ok[row] = remaining == 0
    return out, ok


def simulate_fpt_trials(spec: NetworkSpec, config: SimConfig, workers: int = 1) -> FptSample:
    """
    Run ``config.n_trials`` independent first-passage trials.

    Each trial starts every membrane at its reset value and integrates until
    all neurons have crossed threshold. A neuron that has fired is frozen for
    the rest of the trial and sends no further jumps; jumps from a firing
    neuron reach only neurons that have not fired yet. Crossings triggered by
    a jump happen within the same step (see ``SimConfig.cascade`` for how
    they are timestamped).

    Trial ``k`` draws its noise from ``RngStream(master_seed, k)``, so the
    result does not depend on ``workers``. Trials that exceed
    ``config.timeout`` ms are dropped and listed in ``FptSample.discarded``.
    """
    validate_network(spec).raise_if_invalid()
    n_trials = int(config.n_trials)
    if n_trials <= 0:
        return FptSample(np.empty((0, spec.n)), np.empty(0, dtype=np.int64))
    if workers > 1 and n_trials > 1:
        bounds = np.linspace(0, n_trials, min(workers, n_trials) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_fpt_range, spec, config, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])]
            parts = [f.result() for f in futs]
        times = np.concatenate([p[0] for p in parts])
        ok = np.concatenate([p[1] for p in parts])
    else:
        times, ok = _run_fpt_range(spec, config, 0, n_trials)
    idx = np.arange(n_trials)
    discarded = idx[~ok]
    if discarded.size:
        warnings.warn(f"{discarded.size} FPT trial(s) exceeded {config.timeout} ms and were discarded",
                      TrialTimeout, stacklevel=2)
    return FptSample(times[ok], idx[ok], discarded)


def simulate_spike_trains(spec: NetworkSpec, config: SimConfig, stream_index: int = 0) -> SpikeTrains:
    """
    Free-running simulation over ``[0, config.duration]`` ms.

    All membranes start at rest. A crossing appends an epoch, resets the
    firing neuron and adds ``jumps[i, j]`` to every other neuron ``j``.
    """
    validate_network(spec).raise_if_invalid()
    L = cholesky(spec.noise_corr)
    mu, tau, sigma, theta, reset = spec.arrays()
    h = spec.jumps
    n = spec.n
    rng = RngStream(config.master_seed, stream_index)
    stagger = _stagger(config)
    n_steps = int(round(config.duration / config.dt))
    x = reset.copy()
    out_idx = np.empty(SPIKE_BLOCK_STEPS * n, dtype=np.int64)
    out_t = np.empty(SPIKE_BLOCK_STEPS * n)
    idx_parts, t_parts = [], []
    step0 = 0
    while step0 < n_steps:
        m = min(SPIKE_BLOCK_STEPS, n_steps - step0)
        dW = correlated_increments(L, config.dt, rng, m)
        cnt = _kernels.spike_block(x, dW, mu, tau, sigma, theta, reset, h, config.dt, step0,
                                   stagger, out_idx, out_t)
        idx_parts.append(out_idx[:cnt].copy())
        t_parts.append(out_t[:cnt].copy())
        step0 += m
    idx = np.concatenate(idx_parts) if idx_parts else np.empty(0, dtype=np.int64)
    t = np.concatenate(t_parts) if t_parts else np.empty(0)
    keep = t <= config.duration
    idx, t = idx[keep], t[keep]
    trains = SpikeTrains([t[idx == k] for k in range(n)], config.duration)
    log.debug("simulated %s spikes over %.0f ms", trains.counts, config.duration)
    return trains


# ---------------------------------------------------------------- CSV I/O


class SpikeFileError(ValueError):
    pass


def write_spike_trains(trains: SpikeTrains, path) -> Path:
    """Write ``neuron,time_ms`` rows (1-based neuron ids) sorted by time, then neuron."""
    rows = [(t, k + 1) for k, tr in enumerate(trains.trains) for t in tr.tolist()]
    rows.sort()
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["neuron", "time_ms"])
        for t, k in rows:
            w.writerow([k, repr(t)])
    return path


def read_spike_trains(path, n_neurons: int | None = None, duration: float | None = None) -> SpikeTrains:
    """
    Parse a ``neuron,time_ms`` file and check per-neuron monotonicity.

    Errors name the offending line number (header is line 1).
    """
    per: dict[int, list[float]] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["neuron", "time_ms"]:
            raise SpikeFileError(f"{path}: line 1: expected header 'neuron,time_ms', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SpikeFileError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                k = int(row[0])
            except ValueError:
                raise SpikeFileError(f"{path}: line {lineno}: unknown neuron id {row[0]!r}") from None
            if k < 1 or (n_neurons is not None and k > n_neurons):
                raise SpikeFileError(f"{path}: line {lineno}: unknown neuron id {k}")
            try:
                t = float(row[1])
            except ValueError:
                raise SpikeFileError(f"{path}: line {lineno}: bad time {row[1]!r}") from None
            if not math.isfinite(t):
                raise SpikeFileError(f"{path}: line {lineno}: non-finite time")
            prev = per.setdefault(k, [])
            if prev and t <= prev[-1]:
                raise SpikeFileError(
                    f"{path}: line {lineno}: neuron {k} spike at {t} is not after {prev[-1]}")
            prev.append(t)
    n = n_neurons if n_neurons is not None else (max(per) if per else 0)
    return SpikeTrains([np.array(per.get(k + 1, []), dtype=float) for k in range(n)], duration)


def write_fpt_sample(sample: FptSample, path) -> Path:
    path = Path(path)
    n = sample.n_neurons
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial"] + [f"fpt_{k + 1}_ms" for k in range(n)])
        for trial, row in zip(sample.trials.tolist(), sample.times.tolist()):
            w.writerow([trial] + [repr(v) for v in row])
    return path


def read_fpt_sample(path) -> FptSample:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "trial":
            raise SpikeFileError(f"{path}: line 1: expected 'trial' first column")
        rows = [r for r in reader if r]
    trials = np.array([int(r[0]) for r in rows], dtype=np.int64)
    times = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(len(rows), len(header) - 1)
    return FptSample(times, trials)
