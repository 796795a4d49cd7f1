"""Stochastic Pauli error models.

A gate's error is a tuple of independent :class:`StochasticPauliChannel`
factors applied after the ideal gate.  Most gates carry a single factor; a
crosstalk CNOT carries its two-qubit channel plus one factor per disturbed
spectator, which keeps the representation sparse.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuits import ConnectivityGraph
from .clifford import NUM_CLIFFORDS, PAULI_IDS, Z_ROTATION_IDS, Layer, PauliString
from .errors import DimensionError, FormatError, ModelCoverageError

__all__ = [
    "StochasticPauliChannel",
    "GateError",
    "ErrorModel",
    "RandomModelSpec",
    "CrosstalkSpec",
    "depolarizing_channel",
    "channel_infidelity",
    "channel_polarization",
    "polarization_from_infidelity",
    "sample_random_model",
    "noiseless_model",
    "build_model1",
    "build_model2",
    "model_to_dict",
    "model_from_dict",
    "write_model",
    "read_model",
]

MODEL_SCHEMA = "mrb-error-model/1"
_PROB_TOL = 1e-12


class StochasticPauliChannel:
    """Sparse distribution over non-identity Pauli errors on ``n`` qubits.

    The identity carries the remaining mass ``1 - sum(entries)``.
    """

    def __init__(self, n: int, entries: Mapping[PauliString, float] | Iterable = ()):
        self.n = n
        merged: dict[PauliString, float] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for pauli, prob in items:
            if isinstance(pauli, str):
                pauli = PauliString.from_label(pauli)
            if pauli.n != n:
                raise DimensionError(f"{pauli.n}-qubit Pauli in an {n}-qubit channel")
            if pauli.is_identity:
                raise ValueError("identity mass is implicit and must not be stored")
            prob = float(prob)
            if not prob >= 0:
                raise ValueError(f"negative probability {prob} for {pauli}")
            if prob > 0:
                merged[pauli] = merged.get(pauli, 0.0) + prob
        if sum(merged.values()) > 1 + _PROB_TOL:
            raise ValueError("error probabilities sum to more than 1")
        self.entries = merged

    def __repr__(self) -> str:
        body = ", ".join(f"{p.label}: {v:.3g}" for p, v in self.entries.items())
        return f"StochasticPauliChannel(n={self.n}, {{{body}}})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StochasticPauliChannel)
            and self.n == other.n
            and self.entries == other.entries
        )

    __hash__ = None

    @cached_property
    def infidelity(self) -> float:
        return float(sum(self.entries.values()))

    @property
    def polarization(self) -> float:
        return polarization_from_infidelity(self.infidelity, self.n)

    def prob(self, pauli: PauliString) -> float:
        if pauli.is_identity:
            return 1.0 - self.infidelity
        return self.entries.get(pauli, 0.0)

    def compose(self, other: "StochasticPauliChannel") -> "StochasticPauliChannel":
        """Channel of ``self`` followed by ``other`` (Pauli-group convolution)."""
        if other.n != self.n:
            raise DimensionError("channel sizes differ")
        ident = PauliString.identity(self.n)
        a = {ident: 1.0 - self.infidelity, **self.entries}
        b = {ident: 1.0 - other.infidelity, **other.entries}
        out: dict[PauliString, float] = {}
        for p, pa in a.items():
            for q, pb in b.items():
                r = p * q
                out[r] = out.get(r, 0.0) + pa * pb
        out.pop(ident, None)
        return StochasticPauliChannel(self.n, out)

    def restrict(self, qubits: Sequence[int]) -> "StochasticPauliChannel":
        """Marginal channel on ``qubits`` (relabelled ``0..len-1`` in order)."""
        out: dict[PauliString, float] = {}
        m = len(qubits)
        for pauli, prob in self.entries.items():
            x = z = 0
            for i, q in enumerate(qubits):
                x |= ((pauli.x >> q) & 1) << i
                z |= ((pauli.z >> q) & 1) << i
            if x or z:
                key = PauliString(m, x, z)
                out[key] = out.get(key, 0.0) + prob
        return StochasticPauliChannel(m, out)

    @staticmethod
    def mixture(
        channels: Sequence["StochasticPauliChannel"], weights: Sequence[float] | None = None
    ) -> "StochasticPauliChannel":
        """Convex combination of channels (uniform weights by default)."""
        if weights is None:
            weights = [1.0 / len(channels)] * len(channels)
        out: dict[PauliString, float] = {}
        for ch, w in zip(channels, weights):
            for p, v in ch.entries.items():
                out[p] = out.get(p, 0.0) + w * v
        return StochasticPauliChannel(channels[0].n, out)

    # Sampling tables, built lazily and reused across shots.
    @cached_property
    def probs(self) -> np.ndarray:
        return np.array(list(self.entries.values()), dtype=float)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Cumulative error probabilities normalised to end at 1."""
        if not self.entries:
            return np.zeros(0)
        c = np.cumsum(self.probs)
        return c / c[-1]

    @cached_property
    def x_table(self) -> np.ndarray:
        return np.array([p.x_bits() for p in self.entries], dtype=np.uint8).reshape(-1, self.n)

    @cached_property
    def z_table(self) -> np.ndarray:
        return np.array([p.z_bits() for p in self.entries], dtype=np.uint8).reshape(-1, self.n)


GateError = tuple[StochasticPauliChannel, ...]


def polarization_from_infidelity(eps: float, n: int) -> float:
    dim = 4**n
    return 1.0 - dim * eps / (dim - 1)


def channel_infidelity(ch: StochasticPauliChannel) -> float:
    """Entanglement infidelity: the total probability of a non-identity error."""
    return ch.infidelity


def channel_polarization(ch: StochasticPauliChannel) -> float:
    return ch.polarization


def depolarizing_channel(
    n: int, epsilon: float, support: Sequence[int] | None = None
) -> StochasticPauliChannel:
    """Depolarizing channel with entanglement infidelity ``epsilon``.

    With ``support`` the channel acts on those qubits of an ``n``-qubit
    register; the mass is spread uniformly over the ``4^k - 1`` non-identity
    Paulis on the ``k`` supported qubits.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError(f"infidelity {epsilon} outside [0, 1]")
    support = tuple(range(n)) if support is None else tuple(support)
    k = len(support)
    if epsilon == 0 or k == 0:
        return StochasticPauliChannel(n)
    share = epsilon / (4**k - 1)
    entries = {}
    for codes in product(range(4), repeat=k):
        if not any(codes):
            continue
        x = z = 0
        for q, c in zip(support, codes):
            x |= (c >> 1) << q
            z |= (c & 1) << q
        entries[PauliString(n, x, z)] = share
    return StochasticPauliChannel(n, entries)


def _weight_one(n: int, qubits: Iterable[int]) -> list[PauliString]:
    return [PauliString.single(n, q, letter) for q in qubits for letter in "XYZ"]


def _two_qubit_paulis(n: int, a: int, b: int) -> list[PauliString]:
    out = []
    for ca, cb in product(range(4), repeat=2):
        if ca or cb:
            out.append(
                PauliString(n, ((ca >> 1) << a) | ((cb >> 1) << b), ((ca & 1) << a) | ((cb & 1) << b))
            )
    return out


class ErrorModel:
    """Per-placement gate errors and readout flips for an ``n``-qubit device.

    ``oneq[q][g]`` is the error following Clifford ``g`` on qubit ``q``;
    ``cnot[(c, t)]`` the error following a CNOT with control ``c`` and target
    ``t``; ``readout[q]`` the probability that qubit ``q``'s result is flipped.
    """

    def __init__(
        self,
        n: int,
        oneq: Sequence[Sequence[GateError]],
        cnot: Mapping[tuple[int, int], GateError],
        readout: Sequence[float],
    ):
        self.n = n
        if len(oneq) != n or any(len(row) != NUM_CLIFFORDS for row in oneq):
            raise ModelCoverageError("every qubit needs an error for each of the 24 Cliffords")
        self.oneq = tuple(tuple(tuple(e) for e in row) for row in oneq)
        self.cnot = {(int(c), int(t)): tuple(e) for (c, t), e in cnot.items()}
        self.readout = np.array(readout, dtype=float)
        if self.readout.shape != (n,) or np.any((self.readout < 0) | (self.readout > 1)):
            raise ValueError("readout flip probabilities must be n values in [0, 1]")
        for err in self.all_errors():
            for ch in err:
                if ch.n != n:
                    raise DimensionError("channel size differs from model size")
        self._mixtures: dict[int, StochasticPauliChannel] = {}

    def all_errors(self) -> Iterable[GateError]:
        for row in self.oneq:
            yield from row
        yield from self.cnot.values()

    def gate_error(self, qubits: tuple[int, ...], gate: int | str) -> GateError:
        if gate == "CX":
            try:
                return self.cnot[qubits]
            except KeyError:
                raise ModelCoverageError(f"no error for CNOT {qubits}") from None
        return self.oneq[qubits[0]][gate]

    def layer_channels(self, layer: Layer) -> list[StochasticPauliChannel]:
        """All independent error factors following ``layer``, in placement order."""
        if layer.n != self.n:
            raise DimensionError(f"layer has {layer.n} qubits, model has {self.n}")
        out = []
        for q, g in enumerate(layer.gates):
            if g >= 0:
                out.extend(self.oneq[q][g])
        for c, t in layer.cnots:
            try:
                out.extend(self.cnot[(c, t)])
            except KeyError:
                raise ModelCoverageError(f"no error for CNOT ({c}, {t})") from None
        return out

    def pauli_mixture(self, qubit: int) -> StochasticPauliChannel:
        """Error of a uniformly random Pauli gate on ``qubit``, averaged over I/X/Y/Z."""
        if qubit not in self._mixtures:
            merged = []
            for g in PAULI_IDS:
                ch = StochasticPauliChannel(self.n)
                for factor in self.oneq[qubit][g]:
                    ch = ch.compose(factor)
                merged.append(ch)
            self._mixtures[qubit] = StochasticPauliChannel.mixture(merged)
        return self._mixtures[qubit]

    def restrict(self, qubits: Sequence[int]) -> "ErrorModel":
        """The model seen by circuits acting only on ``qubits``.

        Errors landing outside the subset are traced out.  Qubit ``qubits[i]``
        becomes local qubit ``i``.
        """
        local = {q: i for i, q in enumerate(qubits)}

        def shrink(err: GateError) -> GateError:
            out = []
            for ch in err:
                r = ch.restrict(qubits)
                if r.entries:
                    out.append(r)
            return tuple(out)

        oneq = [[shrink(e) for e in self.oneq[q]] for q in qubits]
        cnot = {
            (local[c], local[t]): shrink(e)
            for (c, t), e in self.cnot.items()
            if c in local and t in local
        }
        return ErrorModel(len(qubits), oneq, cnot, self.readout[list(qubits)])


@dataclass(frozen=True)
class RandomModelSpec:
    """Intervals for the randomly sampled biased, correlated Pauli models."""

    gamma_1q: tuple[float, float] = (0.0, 0.002)
    gamma_2q: tuple[float, float] = (0.0, 0.02)
    kappa: tuple[float, float] = (0.5, 1.0)
    readout: tuple[float, float] = (0.0, 0.01)

    def __post_init__(self):
        for name in ("gamma_1q", "gamma_2q", "kappa", "readout"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi <= 1:
                raise ValueError(f"{name} interval ({lo}, {hi}) not inside [0, 1]")


@dataclass(frozen=True)
class CrosstalkSpec:
    """Parameters of the fixed depolarizing models (crosstalk used by model 2 only)."""

    base_infidelity_1q: float = 0.001
    base_infidelity_2q: float = 0.01
    readout: float = 0.005
    crosstalk_amplitude: float = 0.0035
    crosstalk_decay: float = 0.999

    def crosstalk(self, distance: int) -> float:
        return self.crosstalk_amplitude * self.crosstalk_decay**distance


def _biased_channel(
    n: int,
    local: list[PauliString],
    nearby: list[PauliString],
    gamma: float,
    kappa: float,
    rng,
    zero_nearby: bool,
) -> StochasticPauliChannel:
    lw = rng.random(len(local))
    entries = {p: gamma * kappa * w / lw.sum() for p, w in zip(local, lw)}
    if nearby and not zero_nearby:
        cw = rng.random(len(nearby))
        for p, w in zip(nearby, cw):
            entries[p] = entries.get(p, 0.0) + gamma * (1 - kappa) * w / cw.sum()
    return StochasticPauliChannel(n, entries)


def sample_random_model(
    graph: ConnectivityGraph,
    spec: RandomModelSpec = RandomModelSpec(),
    rng=None,
    kappa: float | None = None,
) -> ErrorModel:
    """Sample a biased, correlated Pauli error model for every gate on ``graph``.

    Each gate's error rate ``gamma`` is split into ``kappa * gamma`` on the
    gate's own qubit(s) and ``(1 - kappa) * gamma`` over weight-one errors on
    neighbouring qubits; both shares are divided by uniform random weights.
    Z-basis rotations (I, Z, S, S^dagger) put no error on neighbours.  One
    CNOT error is drawn per edge and shared by both orientations.  ``kappa``
    overrides the sampled value (for testing).
    """
    rng = np.random.default_rng(rng)
    n = graph.n
    readout = rng.uniform(*spec.readout, size=n)
    oneq = []
    for q in range(n):
        local = _weight_one(n, [q])
        nearby = _weight_one(n, sorted(graph.neighbors(q)))
        row = []
        for g in range(NUM_CLIFFORDS):
            gamma = rng.uniform(*spec.gamma_1q)
            k = rng.uniform(*spec.kappa) if kappa is None else kappa
            row.append((_biased_channel(n, local, nearby, gamma, k, rng, g in Z_ROTATION_IDS),))
        oneq.append(row)
    cnot = {}
    for a, b in graph.edges:
        local = _two_qubit_paulis(n, a, b)
        spectators = sorted((graph.neighbors(a) | graph.neighbors(b)) - {a, b})
        nearby = _weight_one(n, spectators)
        gamma = rng.uniform(*spec.gamma_2q)
        k = rng.uniform(*spec.kappa) if kappa is None else kappa
        err = (_biased_channel(n, local, nearby, gamma, k, rng, False),)
        cnot[(a, b)] = cnot[(b, a)] = err
    return ErrorModel(n, oneq, cnot, readout)


def noiseless_model(graph: ConnectivityGraph) -> ErrorModel:
    """Every gate perfect and no readout flips."""
    cnot = {}
    for a, b in graph.edges:
        cnot[(a, b)] = cnot[(b, a)] = ()
    return ErrorModel(graph.n, [[()] * NUM_CLIFFORDS for _ in range(graph.n)], cnot, [0.0] * graph.n)


def build_model1(graph: ConnectivityGraph, spec: CrosstalkSpec = CrosstalkSpec()) -> ErrorModel:
    """Depolarizing gate errors and uniform readout flips, no crosstalk."""
    n = graph.n
    oneq = []
    for q in range(n):
        err = (depolarizing_channel(n, spec.base_infidelity_1q, support=[q]),)
        oneq.append([err] * NUM_CLIFFORDS)
    cnot = {}
    for a, b in graph.edges:
        err = (depolarizing_channel(n, spec.base_infidelity_2q, support=[a, b]),)
        cnot[(a, b)] = cnot[(b, a)] = err
    return ErrorModel(n, oneq, cnot, [spec.readout] * n)


def build_model2(graph: ConnectivityGraph, spec: CrosstalkSpec = CrosstalkSpec()) -> ErrorModel:
    """Model 1 plus distance-decaying one-qubit depolarization from every CNOT.

    Every qubit other than the CNOT's endpoints is depolarized with
    infidelity ``amplitude * decay**d``, ``d`` being its graph distance to the
    nearer endpoint.
    """
    base = build_model1(graph, spec)
    dist = graph.distances
    cnot = {}
    for (a, b), err in base.cnot.items():
        extra = []
        for q in range(graph.n):
            if q in (a, b):
                continue
            d = [int(v) for v in (dist[q, a], dist[q, b]) if v >= 0]
            if d:
                extra.append(depolarizing_channel(graph.n, spec.crosstalk(min(d)), support=[q]))
        cnot[(a, b)] = err + tuple(extra)
    return ErrorModel(graph.n, base.oneq, cnot, base.readout)


# ---------------------------------------------------------------------------
# Model files


def _channel_to_list(ch: StochasticPauliChannel) -> list:
    return [[p.label, v] for p, v in ch.entries.items()]


def model_to_dict(model: ErrorModel) -> dict:
    placements = []
    for q, row in enumerate(model.oneq):
        for g, err in enumerate(row):
            placements.append(
                {"gate": f"C{g}", "qubits": [q], "channels": [_channel_to_list(c) for c in err]}
            )
    for (c, t), err in sorted(model.cnot.items()):
        placements.append(
            {"gate": "CX", "qubits": [c, t], "channels": [_channel_to_list(ch) for ch in err]}
        )
    return {
        "schema": MODEL_SCHEMA,
        "n": model.n,
        "readout": [float(v) for v in model.readout],
        "placements": placements,
    }


def model_from_dict(data: dict) -> ErrorModel:
    if data.get("schema") != MODEL_SCHEMA:
        raise FormatError(f"unsupported error-model schema {data.get('schema')!r}")
    n = data["n"]
    oneq: list[list] = [[None] * NUM_CLIFFORDS for _ in range(n)]
    cnot = {}
    for entry in data["placements"]:
        err = tuple(StochasticPauliChannel(n, [(lab, p) for lab, p in ch]) for ch in entry["channels"])
        gate, qubits = entry["gate"], entry["qubits"]
        if gate == "CX":
            cnot[(qubits[0], qubits[1])] = err
        elif gate.startswith("C"):
            oneq[qubits[0]][int(gate[1:])] = err
        else:
            raise FormatError(f"unknown gate {gate!r}")
    if any(e is None for row in oneq for e in row):
        raise ModelCoverageError("model file does not cover every single-qubit Clifford")
    return ErrorModel(n, oneq, cnot, data["readout"])


def write_model(model: ErrorModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n")


def read_model(path: str | Path) -> ErrorModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, IndexError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
