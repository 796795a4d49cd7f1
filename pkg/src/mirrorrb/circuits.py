"""Layer samplers, randomized mirror circuits and MRB experiment designs."""
from __future__ import annotations

import json
import re
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np

from .clifford import NUM_CLIFFORDS, Layer, invert_layer
from .errors import FormatError, LayerError, SamplerError
from .tableau import tableau_run

__all__ = [
    "ConnectivityGraph",
    "grid_graph",
    "lattice_subset",
    "SamplerSpec",
    "SamplerWarning",
    "sample_layer",
    "sample_pauli_layer",
    "sample_local_clifford_layer",
    "MirrorCircuit",
    "MrbDesign",
    "sample_mirror_circuit",
    "compute_target",
    "circuit_seed",
    "design_circuits",
    "default_depths",
    "format_circuit",
    "parse_circuit",
    "design_to_dict",
    "design_from_dict",
    "write_design",
    "read_design",
]

DESIGN_SCHEMA = "mrb-design/1"


class SamplerWarning(UserWarning):
    """The requested two-qubit gate density could not be met on a layer."""


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected device connectivity on qubits ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        canon = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) outside [0, {self.n})")
            canon.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        adj = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(frozenset(s) for s in adj)

    def neighbors(self, q: int) -> frozenset[int]:
        return self.adjacency[q]

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs shortest-path lengths (``-1`` where disconnected)."""
        dist = np.full((self.n, self.n), -1, dtype=np.int64)
        for src in range(self.n):
            dist[src, src] = 0
            queue = deque([src])
            while queue:
                u = queue.popleft()
                for v in self.adjacency[u]:
                    if dist[src, v] < 0:
                        dist[src, v] = dist[src, u] + 1
                        queue.append(v)
        return dist

    @cached_property
    def max_density(self) -> float:
        """Largest two-qubit gate density any layer can reach (a maximum matching)."""
        if not self.edges:
            return 0.0
        g = nx.Graph(self.edges)
        return 2 * len(nx.max_weight_matching(g, maxcardinality=True)) / self.n

    def induced(self, qubits: Sequence[int]) -> "ConnectivityGraph":
        """Subgraph on ``qubits``, relabelled to ``0..len(qubits)-1`` in the given order."""
        local = {q: i for i, q in enumerate(qubits)}
        edges = [(local[a], local[b]) for a, b in self.edges if a in local and b in local]
        return ConnectivityGraph(len(qubits), tuple(edges))


def grid_graph(rows: int, cols: int) -> ConnectivityGraph:
    """Nearest-neighbour square lattice, qubits numbered row-major."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return ConnectivityGraph(rows * cols, tuple(edges))


def lattice_subset(rows: int, cols: int, n: int) -> tuple[int, ...]:
    """A compact ``n``-qubit region in the top-left corner of a lattice.

    Picks the most square ``a x b`` rectangle with ``a * b == n`` that fits;
    otherwise falls back to a row-major snake, which is always connected.
    """
    if not 1 <= n <= rows * cols:
        raise ValueError(f"cannot pick {n} qubits from a {rows}x{cols} lattice")
    best = None
    for a in range(1, n + 1):
        if n % a:
            continue
        b = n // a
        if a <= rows and b <= cols and (best is None or abs(a - b) < abs(best[0] - best[1])):
            best = (a, b)
    if best is not None:
        a, b = best
        return tuple(r * cols + c for r in range(a) for c in range(b))
    snake = []
    for r in range(rows):
        cs = range(cols) if r % 2 == 0 else range(cols - 1, -1, -1)
        snake.extend(r * cols + c for c in cs)
    return tuple(sorted(snake[:n]))


@dataclass(frozen=True)
class SamplerSpec:
    """Parameters of the layer distribution.

    ``edge_grab`` takes a target two-qubit gate density ``xi`` (fraction of
    qubits covered by CNOTs); ``single_cnot`` adds one CNOT on a uniformly
    chosen edge with probability ``cnot_probability``.
    """

    kind: str = "edge_grab"
    xi: float = 0.125
    cnot_probability: float = 0.5

    def __post_init__(self):
        if self.kind not in ("edge_grab", "single_cnot"):
            raise SamplerError(f"unknown sampler kind {self.kind!r}")
        if not 0 <= self.xi <= 1:
            raise SamplerError(f"xi={self.xi} outside [0, 1]")
        if not 0 <= self.cnot_probability <= 1:
            raise SamplerError("cnot_probability outside [0, 1]")

    def check(self, graph: ConnectivityGraph) -> None:
        if self.kind == "edge_grab" and self.xi > 0 and self.xi > graph.max_density + 1e-12:
            raise SamplerError(
                f"two-qubit gate density {self.xi} is unachievable; "
                f"this graph allows at most {graph.max_density:.4g}"
            )
        if self.kind == "single_cnot" and self.cnot_probability > 0 and not graph.edges:
            raise SamplerError("single_cnot sampler needs at least one edge")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "xi": self.xi, "cnot_probability": self.cnot_probability}

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerSpec":
        return cls(
            kind=data["kind"],
            xi=float(data.get("xi", 0.125)),
            cnot_probability=float(data.get("cnot_probability", 0.5)),
        )


def _random_maximal_matching(graph: ConnectivityGraph, rng) -> list[tuple[int, int]]:
    used = set()
    chosen = []
    for i in rng.permutation(len(graph.edges)):
        a, b = graph.edges[i]
        if a not in used and b not in used:
            used.update((a, b))
            chosen.append((a, b))
    return chosen


def _oriented(edge: tuple[int, int], rng) -> tuple[int, int]:
    a, b = edge
    return (a, b) if rng.random() < 0.5 else (b, a)


def sample_layer(graph: ConnectivityGraph, spec: SamplerSpec, rng) -> Layer:
    """Draw one layer from the sampling distribution ``spec`` on ``graph``.

    Edge grab: a random maximal matching is built by scanning the edges in a
    random order, each matched edge becomes a CNOT with probability
    ``xi * n / (2 * |matching|)`` (capped at 1), and every other qubit gets a
    uniformly random single-qubit Clifford.  CNOT orientation is uniform.
    """
    spec.check(graph)
    n = graph.n
    cnots: list[tuple[int, int]] = []
    if spec.kind == "edge_grab":
        if spec.xi > 0 and graph.edges:
            matching = _random_maximal_matching(graph, rng)
            prob = spec.xi * n / (2 * len(matching))
            if prob > 1:
                warnings.warn(
                    f"matching of size {len(matching)} cannot reach density {spec.xi}",
                    SamplerWarning,
                    stacklevel=2,
                )
                prob = 1.0
            for edge in matching:
                if rng.random() < prob:
                    cnots.append(_oriented(edge, rng))
    else:
        if graph.edges:
            edge = graph.edges[rng.integers(len(graph.edges))]
            if rng.random() < spec.cnot_probability:
                cnots.append(_oriented(edge, rng))
    gates = rng.integers(NUM_CLIFFORDS, size=n)
    return Layer.build(n, gates, cnots)


def sample_pauli_layer(n: int, rng) -> Layer:
    """Independent uniform I/X/Y/Z on every qubit (Clifford ids 0-3)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Layer(n, tuple(rng.integers(4, size=n)))


def sample_local_clifford_layer(n: int, rng) -> Layer:
    return Layer(n, tuple(rng.integers(NUM_CLIFFORDS, size=n)))


def compute_target(layers: Sequence[Layer], n: int | None = None) -> str:
    """Ideal output bit string of a mirror circuit (computed with the tableau)."""
    return tableau_run(layers, n=n)


@dataclass(frozen=True)
class MirrorCircuit:
    """A randomized mirror circuit.

    ``layers`` runs F0, P0, L1, P1, ..., L_{d/2}, P_{d/2}, L_{d/2}^-1, ...,
    L1^-1, P_d, F0^-1, i.e. ``2d + 3`` layers for benchmark depth ``d``.
    """

    n: int
    depth: int
    layers: tuple[Layer, ...]
    target: str
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.target) != self.n or set(self.target) - {"0", "1"}:
            raise FormatError(f"target {self.target!r} is not an {self.n}-bit string")
        if any(layer.n != self.n for layer in self.layers):
            raise LayerError("layer size differs from circuit size")

    @property
    def target_bits(self) -> np.ndarray:
        return np.array([int(c) for c in self.target], dtype=np.uint8)

    @property
    def pauli_layers(self) -> tuple[Layer, ...]:
        return self.layers[1:-1:2]

    @property
    def core_layers(self) -> tuple[Layer, ...]:
        return self.layers[2:-1:2]


def sample_mirror_circuit(
    design: "MrbDesign",
    d: int,
    rng,
    *,
    seed: int = 0,
    randomize_paulis: bool = True,
    randomize_local_cliffords: bool = True,
) -> MirrorCircuit:
    """Sample a benchmark-depth-``d`` randomized mirror circuit.

    The two keyword flags replace the Pauli layers or the F0 layer by
    identities; they exist for testing.
    """
    if d < 0 or d % 2:
        raise ValueError(f"benchmark depth must be even and non-negative, got {d}")
    n = design.n
    graph = design.local_graph
    if randomize_local_cliffords:
        f0 = sample_local_clifford_layer(n, rng)
    else:
        f0 = Layer.identity(n)
    half = [sample_layer(graph, design.sampler, rng) for _ in range(d // 2)]
    if randomize_paulis:
        paulis = [sample_pauli_layer(n, rng) for _ in range(d + 1)]
    else:
        paulis = [Layer.identity(n) for _ in range(d + 1)]
    core = half + [invert_layer(layer) for layer in reversed(half)]
    layers = [f0, paulis[0]]
    for i, layer in enumerate(core):
        layers.append(layer)
        layers.append(paulis[i + 1])
    layers.append(invert_layer(f0))
    return MirrorCircuit(n, d, tuple(layers), compute_target(layers), seed)


def default_depths(
    predicted_r: float | None = None,
    n: int = 1,
    amplitude: float = 1.0,
    floor: float = 0.05,
    max_depth: int = 4096,
) -> tuple[int, ...]:
    """Exponentially spaced depths 0, 2, 4, 8, ... until ``A p^d`` drops below ``floor``.

    Without a predicted error rate the list stops at 64.
    """
    if predicted_r is None:
        return (0, 2, 4, 8, 16, 32, 64)
    p = 1 - 4**n * predicted_r / (4**n - 1)
    depths = [0]
    d = 2
    while d <= max_depth:
        depths.append(d)
        if p <= 0 or amplitude * p**d < floor:
            break
        d *= 2
    return tuple(depths)


@dataclass(frozen=True)
class MrbDesign:
    """An MRB experiment design.

    ``qubits`` are device labels of the benchmarked subset; circuits act on
    local indices ``0..n-1`` in the order given.
    """

    qubits: tuple[int, ...]
    connectivity: ConnectivityGraph
    sampler: SamplerSpec
    depths: tuple[int, ...]
    circuits_per_depth: int = 30
    shots: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if not self.qubits or len(set(self.qubits)) != len(self.qubits):
            raise ValueError("qubit subset must be non-empty and duplicate-free")
        if any(not 0 <= q < self.connectivity.n for q in self.qubits):
            raise ValueError("qubit subset outside the device")
        if not self.depths:
            raise ValueError("at least one benchmark depth is required")
        for d in self.depths:
            if d < 0 or d % 2:
                raise ValueError(
                    f"benchmark depth {d} is invalid: mirror circuits need even depths d >= 0"
                )
        if self.circuits_per_depth < 1 or self.shots < 1:
            raise ValueError("circuits_per_depth and shots must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        self.sampler.check(self.local_graph)

    @property
    def n(self) -> int:
        return len(self.qubits)

    @cached_property
    def local_graph(self) -> ConnectivityGraph:
        return self.connectivity.induced(self.qubits)


def circuit_seed(master_seed: int, depth_index: int, circuit_index: int) -> int:
    """Per-circuit 64-bit seed, derived in counter mode from the master seed."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(depth_index, circuit_index))
    return int(seq.generate_state(1, np.uint64)[0])


def circuit_id(d: int, k: int) -> str:
    return f"d{d:04d}_k{k:03d}"


def design_circuits(design: MrbDesign) -> list[tuple[str, MirrorCircuit]]:
    """All ``len(depths) * K`` circuits of a design, in a fixed order."""
    out = []
    for di, d in enumerate(design.depths):
        for k in range(design.circuits_per_depth):
            seed = circuit_seed(design.seed, di, k)
            rng = np.random.default_rng(seed)
            out.append((circuit_id(d, k), sample_mirror_circuit(design, d, rng, seed=seed)))
    return out


# ---------------------------------------------------------------------------
# Text format

_HEADER = re.compile(r"^#MRB n=(\d+) d=(\d+) target=([01]*) seed=([0-9a-f]{16})$")
_LINE = re.compile(r"^L (\d+):(.*)$")
_ONEQ = re.compile(r"^q(\d+)=C(\d+)$")
_CX = re.compile(r"^q(\d+)q(\d+)=CX$")


def format_circuit(circuit: MirrorCircuit) -> str:
    lines = [
        f"#MRB n={circuit.n} d={circuit.depth} target={circuit.target} seed={circuit.seed:016x}"
    ]
    for i, layer in enumerate(circuit.layers):
        tokens = [(q, f"q{q}=C{g}") for q, g in enumerate(layer.gates) if g >= 0]
        tokens += [(min(c, t), f"q{c}q{t}=CX") for c, t in layer.cnots]
        tokens.sort()
        body = " ".join(tok for _, tok in tokens)
        lines.append(f"L {i}: {body}" if body else f"L {i}:")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> MirrorCircuit:
    lines = [ln.rstrip() for ln in text.strip().splitlines()]
    if not lines:
        raise FormatError("empty circuit file")
    m = _HEADER.match(lines[0])
    if not m:
        raise FormatError(f"bad circuit header: {lines[0]!r}")
    n, d, target, seed = int(m[1]), int(m[2]), m[3], int(m[4], 16)
    layers = []
    for expected, line in enumerate(lines[1:]):
        lm = _LINE.match(line)
        if not lm or int(lm[1]) != expected:
            raise FormatError(f"bad layer line: {line!r}")
        cliffords, cnots = {}, []
        for tok in lm[2].split():
            if om := _ONEQ.match(tok):
                cliffords[int(om[1])] = int(om[2])
            elif cm := _CX.match(tok):
                cnots.append((int(cm[1]), int(cm[2])))
            else:
                raise FormatError(f"bad gate token {tok!r}")
        try:
            layers.append(Layer.build(n, cliffords, cnots))
        except (LayerError, IndexError) as exc:
            raise FormatError(f"layer {expected}: {exc}") from exc
    return MirrorCircuit(n, d, tuple(layers), target, seed)


# ---------------------------------------------------------------------------
# Design files


def design_to_dict(design: MrbDesign) -> dict:
    return {
        "schema": DESIGN_SCHEMA,
        "qubits": list(design.qubits),
        "connectivity": {
            "n": design.connectivity.n,
            "edges": [list(e) for e in design.connectivity.edges],
        },
        "sampler": design.sampler.to_dict(),
        "depths": list(design.depths),
        "circuits_per_depth": design.circuits_per_depth,
        "shots": design.shots,
        "seed": design.seed,
    }


def design_from_dict(data: dict) -> MrbDesign:
    if data.get("schema") != DESIGN_SCHEMA:
        raise FormatError(f"unsupported design schema {data.get('schema')!r}")
    conn = data["connectivity"]
    return MrbDesign(
        qubits=tuple(data["qubits"]),
        connectivity=ConnectivityGraph(conn["n"], tuple(tuple(e) for e in conn["edges"])),
        sampler=SamplerSpec.from_dict(data["sampler"]),
        depths=tuple(data["depths"]),
        circuits_per_depth=data["circuits_per_depth"],
        shots=data["shots"],
        seed=data["seed"],
    )


def write_design(design: MrbDesign, path: str | Path) -> None:
    Path(path).write_text(json.dumps(design_to_dict(design), indent=2) + "\n")


def read_design(path: str | Path) -> MrbDesign:
    try:
        return design_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
