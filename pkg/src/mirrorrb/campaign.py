"""End-to-end simulated campaigns and the lattice sweep presets."""
from __future__ import annotations

import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import AnalysisReport, analyze, group_by_depth, polarizations
from .circuits import (
    ConnectivityGraph,
    MirrorCircuit,
    MrbDesign,
    SamplerSpec,
    design_circuits,
    format_circuit,
    grid_graph,
    lattice_subset,
    write_design,
)
from .errors import MrbError
from .infidelity import EpsilonOmega, epsilon_omega
from .noise import (
    ErrorModel,
    build_model1,
    build_model2,
    read_model,
    sample_random_model,
    write_model,
)
from .weaksim import ShotResult, shot_seed, simulate_shots, write_results

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "SweepRow",
    "make_design",
    "make_model",
    "simulate_design",
    "run_campaign",
    "write_campaign",
    "sweep_configs",
    "run_sweep",
    "write_sweep",
    "PRESETS",
]

log = logging.getLogger(__name__)

SWEEP_SCHEMA = "mrb-sweep/1"
EPSILON_SCHEMA = "mrb-epsilon/1"
MODEL_SOURCES = ("model1", "model2", "random")
PRESETS = ("random-models", "crosstalk")
SWEEP_SIZES = (1, 2, 4, 8, 16)

# spawn-key streams hanging off the master seed
_STREAM_MODEL = 1
_STREAM_EPSILON = 2
_STREAM_BOOTSTRAP = 3


def _derived_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


@dataclass(frozen=True)
class CampaignConfig:
    """Everything needed to regenerate a campaign bit-for-bit."""

    seed: int
    rows: int = 4
    cols: int = 4
    n: int = 4
    qubits: tuple[int, ...] | None = None
    sampler: str = "edge_grab"
    xi: float = 0.125
    cnot_probability: float = 0.5
    depths: tuple[int, ...] = (0, 2, 4, 8, 16, 32, 64)
    circuits_per_depth: int = 30
    shots: int = 100
    model: str = "model1"
    model_seed: int | None = None
    layer_samples: int = 1000
    per_layer_samples: int = 200
    replicates: int = 200
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.seed is None or int(self.seed) < 0:
            raise ValueError("a non-negative master seed is required")
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if self.qubits is not None:
            object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
            object.__setattr__(self, "n", len(self.qubits))
        if self.model not in MODEL_SOURCES and not Path(self.model).is_file():
            raise ValueError(f"model source {self.model!r} is neither built in nor an existing file")

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("depths", "qubits"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["depths"] = list(self.depths)
        if self.qubits is not None:
            out["qubits"] = list(self.qubits)
        return out


def make_design(cfg: CampaignConfig) -> MrbDesign:
    """Design on a ``rows x cols`` grid; the subset defaults to a compact rectangle.

    Edge-grab densities above what the subset's graph can reach (for example
    any positive density on a single qubit) are lowered to the achievable
    maximum with a warning.
    """
    device = grid_graph(cfg.rows, cfg.cols)
    qubits = cfg.qubits if cfg.qubits is not None else lattice_subset(cfg.rows, cfg.cols, cfg.n)
    xi = cfg.xi
    if cfg.sampler == "edge_grab":
        reachable = device.induced(qubits).max_density
        if xi > reachable + 1e-12:
            warnings.warn(
                f"density {xi} unreachable on {len(qubits)} qubits; using {reachable:g}",
                stacklevel=2,
            )
            xi = reachable
    sampler = SamplerSpec(cfg.sampler, xi, cfg.cnot_probability)
    return MrbDesign(
        qubits, device, sampler, cfg.depths, cfg.circuits_per_depth, cfg.shots, cfg.seed
    )


def _device_model(source: str, device: ConnectivityGraph, seed: int) -> ErrorModel:
    if source == "model1":
        return build_model1(device)
    if source == "model2":
        return build_model2(device)
    if source == "random":
        return sample_random_model(device, rng=seed)
    return read_model(source)


def make_model(
    design: MrbDesign, source: str, seed: int | None = None
) -> ErrorModel:
    """Error model for the design's qubits.

    Built-in models are constructed on the whole device and then restricted,
    so errors a gate causes outside the benchmarked subset are traced out.  A
    model file may describe either the device or the subset.
    """
    if seed is None:
        seed = int(_derived_rng(design.seed, _STREAM_MODEL).integers(2**63))
    model = _device_model(source, design.connectivity, seed)
    if model.n == design.n and model.n != design.connectivity.n:
        return model
    if model.n != design.connectivity.n:
        raise MrbError(
            f"model covers {model.n} qubits; expected {design.n} or {design.connectivity.n}"
        )
    if design.qubits == tuple(range(model.n)):
        return model
    return model.restrict(design.qubits)


def _simulate_chunk(args) -> list[ShotResult]:
    circuits, model, shots = args
    return [
        simulate_shots(c, model, shots, np.random.default_rng(shot_seed(c.seed)), cid)
        for cid, c in circuits
    ]


def simulate_design(
    circuits: Sequence[tuple[str, MirrorCircuit]],
    model: ErrorModel,
    shots: int,
    jobs: int = 1,
) -> list[ShotResult]:
    """Simulate every circuit with its own shot stream; output order is the input order."""
    if jobs <= 1 or len(circuits) < 2:
        return _simulate_chunk((circuits, model, shots))
    size = -(-len(circuits) // jobs)
    chunks = [(circuits[i : i + size], model, shots) for i in range(0, len(circuits), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [r for part in pool.map(_simulate_chunk, chunks) for r in part]


@dataclass
class CampaignResult:
    config: CampaignConfig
    design: MrbDesign
    model: ErrorModel
    circuits: list[tuple[str, MirrorCircuit]]
    results: list[ShotResult]
    epsilon: EpsilonOmega | None
    report: AnalysisReport = field(repr=False)

    @property
    def n(self) -> int:
        return self.design.n


def run_campaign(cfg: CampaignConfig, with_epsilon: bool = True) -> CampaignResult:
    design = make_design(cfg)
    model = make_model(design, cfg.model, cfg.model_seed)
    circuits = design_circuits(design)
    results = simulate_design(circuits, model, design.shots, cfg.jobs)
    eps = None
    if with_epsilon:
        eps = epsilon_omega(
            design,
            model,
            cfg.layer_samples,
            cfg.per_layer_samples,
            _derived_rng(cfg.seed, _STREAM_EPSILON),
        )
    dataset = group_by_depth(polarizations(results))
    report = analyze(
        dataset,
        design.n,
        cfg.replicates,
        _derived_rng(cfg.seed, _STREAM_BOOTSTRAP),
        eps.value if eps else None,
    )
    log.info("campaign n=%d seed=%d r=%.5g", design.n, cfg.seed, report.fit.r)
    return CampaignResult(cfg, design, model, circuits, results, eps, report)


def epsilon_to_dict(eps: EpsilonOmega, **meta) -> dict:
    return {"schema": EPSILON_SCHEMA, **meta, **asdict(eps)}


def write_campaign(res: CampaignResult, out: str | Path) -> None:
    """Write design, circuits, model, results, ε_Ω and report under ``out``."""
    from .analysis import write_decay_table

    out = Path(out)
    (out / "circuits").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(res.config.to_dict(), indent=2) + "\n")
    write_design(res.design, out / "design.json")
    for cid, c in res.circuits:
        (out / "circuits" / f"{cid}.mrb").write_text(format_circuit(c))
    write_model(res.model, out / "model.json")
    write_results(res.results, out / "results.json", seed=res.config.seed)
    if res.epsilon is not None:
        (out / "epsilon.json").write_text(json.dumps(epsilon_to_dict(res.epsilon), indent=2) + "\n")
    (out / "report.json").write_text(json.dumps(res.report.to_dict(), indent=2) + "\n")
    write_decay_table(res.report, out / "decay.csv")


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepRow:
    preset: str
    model: str
    n: int
    run: int
    seed: int
    A: float
    p: float
    r: float
    sigma_r: float
    residual_rms: float
    mean_stderr: float
    epsilon: float
    epsilon_stderr: float
    delta_rel: float


def sweep_configs(
    preset: str,
    seed: int,
    sizes: Sequence[int] = SWEEP_SIZES,
    models_per_n: int = 10,
    **overrides,
) -> list[tuple[str, int, CampaignConfig]]:
    """``(model label, run index, config)`` for each campaign of a preset.

    ``random-models`` draws ``models_per_n`` random models per size; ``crosstalk`` runs
    the two crosstalk models on a shared design per size.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    out = []
    for n in sizes:
        if preset == "random-models":
            for m in range(models_per_n):
                s = int(np.random.SeedSequence(entropy=seed, spawn_key=(n, m)).generate_state(1)[0])
                out.append(("random", m, CampaignConfig(seed=s, n=n, model="random", **overrides)))
        else:
            s = int(np.random.SeedSequence(entropy=seed, spawn_key=(n,)).generate_state(1)[0])
            for label in ("model1", "model2"):
                out.append((label, 0, CampaignConfig(seed=s, n=n, model=label, **overrides)))
    return out


def _sweep_one(item) -> SweepRow:
    preset, label, run, cfg = item
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_campaign(replace(cfg, jobs=1))
    fit = res.report.fit
    return SweepRow(
        preset,
        label,
        res.n,
        run,
        cfg.seed,
        fit.A,
        fit.p,
        fit.r,
        fit.sigma_r,
        fit.residual_rms,
        float(np.mean([s.stderr for s in res.report.depths])),
        res.epsilon.value,
        res.epsilon.stderr,
        res.report.delta_rel,
    )


def run_sweep(
    preset: str, seed: int, jobs: int = 1, sizes: Sequence[int] = SWEEP_SIZES, **overrides
) -> list[SweepRow]:
    items = [(preset, label, run, cfg) for label, run, cfg in sweep_configs(preset, seed, sizes, **overrides)]
    jobs = max(1, min(jobs, os.cpu_count() or 1, len(items)))
    if jobs == 1:
        return [_sweep_one(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_one, items))


def write_sweep(rows: Sequence[SweepRow], out: str | Path, **meta) -> None:
    import csv

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    records = [asdict(r) for r in rows]
    (out / "sweep.json").write_text(
        json.dumps({"schema": SWEEP_SCHEMA, **meta, "rows": records}, indent=1) + "\n"
    )
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(records[0]) if records else ["n"])
        writer.writeheader()
        for rec in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
