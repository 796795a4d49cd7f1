"""Weak simulation of mirror circuits under stochastic Pauli error models.

:func:`simulate_shots` is the production path: every shot's sampled gate
errors are pushed through the rest of the ideal circuit as a Pauli frame, and
the frame's X component flips bits of the ideal target.  :func:`unravel_shots`
is the reference: it samples one Pauli after every layer and runs the
resulting Clifford sequence on a stabilizer tableau.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuits import MirrorCircuit
from .clifford import propagate_frames
from .errors import DimensionError, FormatError
from .noise import ErrorModel, StochasticPauliChannel
from .tableau import Tableau

__all__ = [
    "ShotResult",
    "HammingHistogram",
    "simulate_shots",
    "unravel_shots",
    "hamming_histogram",
    "shot_seed",
    "results_to_dict",
    "results_from_dict",
    "write_results",
    "read_results",
]

RESULTS_SCHEMA = "mrb-results/1"


@dataclass
class ShotResult:
    """Bit-string counts for one circuit; bit ``q`` of each key is qubit ``q``."""

    circuit_id: str
    n: int
    depth: int
    target: str
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for bits in self.counts:
            if len(bits) != self.n:
                raise DimensionError(f"{bits!r} is not an {self.n}-bit string")

    @property
    def shots(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class HammingHistogram:
    """``h[k]``: fraction of shots at Hamming distance ``k`` from the target."""

    n: int
    h: tuple[float, ...]

    def __post_init__(self):
        if len(self.h) != self.n + 1:
            raise DimensionError("histogram needs n + 1 entries")

    @classmethod
    def binomial(cls, n: int) -> "HammingHistogram":
        """The histogram of uniformly random outputs."""
        return cls(n, tuple(comb(n, k) / 2**n for k in range(n + 1)))


def shot_seed(circuit_seed: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=circuit_seed, spawn_key=(stream,))


def _tally(bits: np.ndarray) -> dict[str, int]:
    rows, counts = np.unique(bits, axis=0, return_counts=True)
    return {"".join(map(str, r)): int(c) for r, c in zip(rows, counts)}


def _apply_errors(
    x: np.ndarray, z: np.ndarray, channels: Sequence[StochasticPauliChannel], rng
) -> None:
    if not channels:
        return
    eps = np.array([ch.infidelity for ch in channels])
    u = rng.random((x.shape[0], len(channels)))
    hits = u < eps
    for col in np.flatnonzero(hits.any(axis=0)):
        rows = np.flatnonzero(hits[:, col])
        ch = channels[col]
        idx = np.searchsorted(ch.cumulative, u[rows, col] / eps[col], side="right")
        idx = np.minimum(idx, len(ch.cumulative) - 1)
        x[rows] ^= ch.x_table[idx]
        z[rows] ^= ch.z_table[idx]


def simulate_shots(
    circuit: MirrorCircuit,
    model: ErrorModel,
    shots: int,
    rng=None,
    circuit_id: str = "",
) -> ShotResult:
    """Sample ``shots`` noisy executions of ``circuit`` with the Pauli-frame method."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if model.n != circuit.n:
        raise DimensionError(f"model has {model.n} qubits, circuit has {circuit.n}")
    rng = np.random.default_rng(rng)
    x = np.zeros((shots, circuit.n), dtype=np.uint8)
    z = np.zeros_like(x)
    for layer in circuit.layers:
        propagate_frames(x, z, layer)
        _apply_errors(x, z, model.layer_channels(layer), rng)
    flips = (rng.random((shots, circuit.n)) < model.readout).astype(np.uint8)
    bits = circuit.target_bits[None, :] ^ x ^ flips
    return ShotResult(circuit_id, circuit.n, circuit.depth, circuit.target, _tally(bits))


def _sample_channel(ch: StochasticPauliChannel, shots: int, rng) -> np.ndarray:
    """Index of the sampled Pauli per shot; ``-1`` means no error."""
    p = np.concatenate(([max(0.0, 1.0 - ch.infidelity)], ch.probs))
    return rng.choice(len(p), size=shots, p=p / p.sum()) - 1


def unravel_shots(
    circuit: MirrorCircuit,
    model: ErrorModel,
    shots: int,
    rng=None,
    circuit_id: str = "",
) -> ShotResult:
    """Reference sampler: stochastic unravelling executed on a stabilizer tableau."""
    if model.n != circuit.n:
        raise DimensionError(f"model has {model.n} qubits, circuit has {circuit.n}")
    rng = np.random.default_rng(rng)
    n = circuit.n
    tab = Tableau(n, batch=shots)
    for layer in circuit.layers:
        tab.apply_layer(layer)
        px = np.zeros((shots, n), dtype=np.uint8)
        pz = np.zeros_like(px)
        for ch in model.layer_channels(layer):
            idx = _sample_channel(ch, shots, rng)
            hit = idx >= 0
            px[hit] ^= ch.x_table[idx[hit]]
            pz[hit] ^= ch.z_table[idx[hit]]
        tab.apply_paulis(px, pz)
    bits = tab.measure_all()
    bits ^= (rng.random((shots, n)) < model.readout).astype(np.uint8)
    return ShotResult(circuit_id, n, circuit.depth, circuit.target, _tally(bits))


def hamming_histogram(result: ShotResult, target: str | None = None) -> HammingHistogram:
    target = result.target if target is None else target
    if len(target) != result.n:
        raise DimensionError("target length differs from the result's qubit count")
    total = result.shots
    if total == 0:
        raise ValueError("result has no shots")
    h = np.zeros(result.n + 1)
    for bits, count in result.counts.items():
        if len(bits) != len(target):
            raise DimensionError(f"{bits!r} and target {target!r} differ in length")
        k = sum(a != b for a, b in zip(bits, target))
        h[k] += count
    return HammingHistogram(result.n, tuple(h / total))


# ---------------------------------------------------------------------------
# Results files (shared with hardware ingestion)


def results_to_dict(results: Iterable[ShotResult], **meta) -> dict:
    return {
        "schema": RESULTS_SCHEMA,
        **meta,
        "records": [
            {
                "id": r.circuit_id,
                "n": r.n,
                "d": r.depth,
                "target": r.target,
                "counts": dict(sorted(r.counts.items())),
            }
            for r in results
        ],
    }


def results_from_dict(data: dict) -> list[ShotResult]:
    if data.get("schema") != RESULTS_SCHEMA:
        raise FormatError(f"unsupported results schema {data.get('schema')!r}")
    out = []
    for rec in data["records"]:
        counts = {str(k): int(v) for k, v in rec["counts"].items()}
        out.append(ShotResult(str(rec["id"]), int(rec["n"]), int(rec["d"]), str(rec["target"]), counts))
    return out


def write_results(results: Iterable[ShotResult], path: str | Path, **meta) -> None:
    Path(path).write_text(json.dumps(results_to_dict(results, **meta), indent=1) + "\n")


def read_results(path: str | Path) -> list[ShotResult]:
    try:
        return results_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: {exc}") from exc
