"""
Pairing inter-spike intervals of a target neuron with inter-times to a partner.

For target spike ``S[i]`` (0-based):

* forward:  ``T = S[i+1] - S[i]``, ``Delta = min{s in partner : s > S[i]} - S[i]``
* backward: ``T = S[i] - S[i-1]``, ``Delta = S[i] - max{s in partner : s < S[i]}``

Spikes whose successor/predecessor (in either train) is missing are skipped.
The first ``burn_in`` target spikes are discarded, so only indices
``i >= burn_in`` contribute.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .network import FptSample, SpikeTrains

FORWARD = "forward"
BACKWARD = "backward"
DIRECTIONS = (FORWARD, BACKWARD)
_TAGS = {FORWARD: "FWD", BACKWARD: "BWD"}


class EmptySample(ValueError):
    pass


def neuron_label(k: int) -> str:
    return "ABCDEFGHIJKLMNOPQRSTUVWXYZ"[k]


@dataclass
class PairedSample:
    target: int
    partner: int
    direction: str
    T: np.ndarray
    delta: np.ndarray
    index: np.ndarray  # target spike index of each pair
    burn_in: int = 0

    def __len__(self) -> int:
        return self.T.size

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.T, self.delta])

    @property
    def case(self) -> str:
        return f"{_TAGS[self.direction]}-{neuron_label(self.target)}"

    @property
    def label(self) -> str:
        return f"{self.case}/D_{neuron_label(self.partner)}"


def _check_ids(trains: SpikeTrains, target: int, partner: int):
    n = len(trains)
    if not (0 <= target < n and 0 <= partner < n):
        raise IndexError(f"neuron ids must be in [0, {n}), got {target}, {partner}")
    if target == partner:
        raise ValueError("target and partner must differ")


def forward_pairs(trains: SpikeTrains, target: int, partner: int, burn_in: int = 0,
                  strict: bool = True) -> PairedSample:
    """Forward ISI of ``target`` paired with the wait until ``partner``'s next spike.

    With ``strict=False`` an empty sample is returned instead of raising
    :class:`EmptySample`.
    """
    _check_ids(trains, target, partner)
    s, p = trains[target], trains[partner]
    i = np.arange(max(burn_in, 0), max(s.size - 1, 0))
    nxt = np.searchsorted(p, s[i], side="right")
    ok = nxt < p.size
    i, nxt = i[ok], nxt[ok]
    if i.size == 0 and strict:
        raise EmptySample(f"no forward pairs for target {target}, partner {partner}")
    return PairedSample(target, partner, FORWARD, s[i + 1] - s[i], p[nxt] - s[i], i, burn_in)


def backward_pairs(trains: SpikeTrains, target: int, partner: int, burn_in: int = 0,
                   strict: bool = True) -> PairedSample:
    """Backward ISI of ``target`` paired with the time since ``partner``'s last spike."""
    _check_ids(trains, target, partner)
    s, p = trains[target], trains[partner]
    i = np.arange(max(burn_in, 1), s.size)
    prv = np.searchsorted(p, s[i], side="left") - 1
    ok = prv >= 0
    i, prv = i[ok], prv[ok]
    if i.size == 0 and strict:
        raise EmptySample(f"no backward pairs for target {target}, partner {partner}")
    return PairedSample(target, partner, BACKWARD, s[i] - s[i - 1], s[i] - p[prv], i, burn_in)


@dataclass
class CaseSet:
    """All (target, direction, partner) samples of a network."""

    samples: list[PairedSample] = field(default_factory=list)
    n_neurons: int = 0

    def __iter__(self):
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    def cases(self) -> list[tuple[int, str]]:
        """Distinct (target, direction) cases, ordered A..C then FWD, BWD."""
        seen = []
        for s in self.samples:
            key = (s.target, s.direction)
            if key not in seen:
                seen.append(key)
        return seen

    def get(self, target: int, direction: str, partner: int | None = None) -> PairedSample:
        for s in self.samples:
            if s.target == target and s.direction == direction and (partner is None or s.partner == partner):
                return s
        raise KeyError((target, direction, partner))

    def partners(self, target: int, direction: str) -> list[PairedSample]:
        return [s for s in self.samples if s.target == target and s.direction == direction]


def enumerate_cases(trains: SpikeTrains, burn_in: int = 0, skip_empty: bool = False) -> CaseSet:
    """
    Build every target/direction case with one sample per partner.

    Two neurons give the four cases FWD-A, BWD-A, FWD-B, BWD-B; three give
    six cases, each with two partner samples.
    """
    n = len(trains)
    if n < 2:
        raise ValueError("at least two spike trains are needed")
    out = CaseSet(n_neurons=n)
    fn = {FORWARD: forward_pairs, BACKWARD: backward_pairs}
    for target in range(n):
        for direction in DIRECTIONS:
            for partner in range(n):
                if partner == target:
                    continue
                try:
                    out.samples.append(fn[direction](trains, target, partner, burn_in))
                except EmptySample:
                    if not skip_empty:
                        raise
    return out


def aligned(samples: list[PairedSample]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Restrict same-case samples to target spikes common to all; returns (T, [Delta...])."""
    common = samples[0].index
    for s in samples[1:]:
        common = np.intersect1d(common, s.index)
    T = None
    deltas = []
    for s in samples:
        pos = np.searchsorted(s.index, common)
        deltas.append(s.delta[pos])
        if T is None:
            T = s.T[pos]
    return T, deltas


def fpt_pairs(sample: FptSample, i: int, j: int) -> np.ndarray:
    """Per-trial ``(FPT_i, FPT_j)`` rows; discarded trials are already absent."""
    if i == j:
        raise ValueError("fpt_pairs needs two distinct neurons")
    return sample.times[:, [i, j]]


def all_fpt_pairs(sample: FptSample) -> dict[tuple[int, int], np.ndarray]:
    return {(i, j): fpt_pairs(sample, i, j) for i, j in combinations(range(sample.n_neurons), 2)}


def write_paired_sample(sample: PairedSample, path, source: str | None = None) -> Path:
    """CSV ``T_ms,Delta_ms`` plus a ``.json`` sidecar describing the sample."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T_ms", "Delta_ms"])
        for t, d in zip(sample.T.tolist(), sample.delta.tolist()):
            w.writerow([repr(t), repr(d)])
    meta = {
        "target": neuron_label(sample.target),
        "partner": neuron_label(sample.partner),
        "direction": sample.direction,
        "burn_in": sample.burn_in,
        "source": source,
        "n_pairs": len(sample),
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path
