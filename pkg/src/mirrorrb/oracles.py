"""Exact small-instance oracles.

Everything here works on dense objects (4^n Pauli distributions, 2^n state
vectors, explicit unitaries) and is only meant for a handful of qubits.  The
dense routines never call the Pauli-frame or tableau code, so they can be
used to check it.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb
from typing import Sequence

import numpy as np

from .circuits import MirrorCircuit
from .clifford import CLIFFORD_UNITARIES, NUM_CLIFFORDS, Layer, PauliString
from .errors import NonDeterministicOutcome, OracleCapError
from .noise import ErrorModel, StochasticPauliChannel

__all__ = [
    "MAX_CHANNEL_QUBITS",
    "MAX_STATE_QUBITS",
    "DensePauliDistribution",
    "build_M",
    "recover_p0",
    "compose_dense",
    "eta",
    "eta_prefactor",
    "twirl_1q_clifford",
    "layer_unitary",
    "dense_statevector_run",
    "dense_output_distribution",
    "dense_layer_infidelity",
]

MAX_CHANNEL_QUBITS = 3
MAX_STATE_QUBITS = 4

_P1 = [
    np.eye(2, dtype=complex),  # I
    np.array([[1, 0], [0, -1]], dtype=complex),  # Z
    np.array([[0, 1], [1, 0]], dtype=complex),  # X
    np.array([[0, -1j], [1j, 0]], dtype=complex),  # Y
]


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise OracleCapError(f"dense oracle supports at most {cap} qubits, got {n}")


class DensePauliDistribution:
    """Probabilities of all ``4^n`` Paulis; index ``x_mask | (z_mask << n)``."""

    def __init__(self, n: int, probs):
        _check_cap(n, MAX_CHANNEL_QUBITS)
        self.n = n
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.shape != (4**n,):
            raise ValueError(f"expected {4**n} probabilities")

    @classmethod
    def identity(cls, n: int) -> "DensePauliDistribution":
        p = np.zeros(4**n)
        p[0] = 1.0
        return cls(n, p)

    @classmethod
    def from_channel(cls, ch: StochasticPauliChannel) -> "DensePauliDistribution":
        p = np.zeros(4**ch.n)
        p[0] = 1.0 - ch.infidelity
        for pauli, v in ch.entries.items():
            p[pauli.x | (pauli.z << ch.n)] += v
        return cls(ch.n, p)

    def index(self, pauli: PauliString) -> int:
        return pauli.x | (pauli.z << self.n)

    def prob(self, label: str) -> float:
        return float(self.probs[self.index(PauliString.from_label(label))])

    @property
    def fidelity(self) -> float:
        return float(self.probs[0])

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def polarization(self) -> float:
        dim = 4**self.n
        return (dim * self.fidelity - 1) / (dim - 1)

    @property
    def error_vector(self) -> np.ndarray:
        return self.probs[1:]

    def permuted(self, perm: np.ndarray) -> "DensePauliDistribution":
        out = np.zeros_like(self.probs)
        out[perm] = self.probs
        return DensePauliDistribution(self.n, out)


def build_M(n: int, exact: bool = False):
    """Weight-to-flips matrix ``M[j, k] = C(k, j) 2^j / 3^k`` for ``j <= k``.

    With ``exact=True`` a nested list of :class:`fractions.Fraction` is returned.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if exact:
        return [
            [Fraction(comb(k, j) * 2**j, 3**k) if j <= k else Fraction(0) for k in range(n + 1)]
            for j in range(n + 1)
        ]
    m = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for j in range(k + 1):
            m[j, k] = comb(k, j) * 2**j / 3**k
    return m


def recover_p0(h: Sequence[float]) -> float:
    """``sum_k (-1/2)^k h_k``: the no-error probability behind a flip histogram."""
    h = np.asarray(h, dtype=float)
    return float(np.dot((-0.5) ** np.arange(len(h)), h))


def compose_dense(
    a: DensePauliDistribution, b: DensePauliDistribution
) -> DensePauliDistribution:
    """Distribution of the product of independent draws from ``a`` and ``b``."""
    if a.n != b.n:
        raise ValueError("distributions act on different qubit counts")
    idx = np.arange(4**a.n)
    out = np.zeros(4**a.n)
    for q in np.flatnonzero(a.probs):
        out += a.probs[q] * b.probs[idx ^ q]
    return DensePauliDistribution(a.n, out)


def eta(a: DensePauliDistribution, b: DensePauliDistribution) -> float:
    """Error-cancellation excess relative to depolarizing channels.

    ``sum_j (a_j - eps_a/(4^n-1)) (b_j - eps_b/(4^n-1))`` over the non-identity
    Paulis.  The composition law reads
    ``gamma(ab) = gamma(a) gamma(b) + eta_prefactor(n) * eta(a, b)``.
    """
    if a.n != b.n:
        raise ValueError("distributions act on different qubit counts")
    dim = 4**a.n - 1
    return float(
        np.dot(a.error_vector - a.infidelity / dim, b.error_vector - b.infidelity / dim)
    )


def eta_prefactor(n: int) -> float:
    return 4**n / (4**n - 1)


# ---------------------------------------------------------------------------
# Dense unitaries


@lru_cache(maxsize=None)
def _pauli_matrices(n: int) -> np.ndarray:
    """All 4^n Pauli matrices in distribution-index order (qubit 0 is the leftmost factor)."""
    mats = np.empty((4**n, 2**n, 2**n), dtype=complex)
    for idx in range(4**n):
        m = np.ones((1, 1), dtype=complex)
        for q in range(n):
            code = (((idx >> q) & 1) << 1) | ((idx >> (n + q)) & 1)
            m = np.kron(m, _P1[code])
        mats[idx] = m
    return mats


def _cnot_matrix(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        j = i ^ (1 << (n - 1 - target)) if (i >> (n - 1 - control)) & 1 else i
        u[j, i] = 1
    return u


def layer_unitary(layer: Layer) -> np.ndarray:
    n = layer.n
    _check_cap(n, MAX_STATE_QUBITS)
    u = np.ones((1, 1), dtype=complex)
    for g in layer.gates:
        u = np.kron(u, CLIFFORD_UNITARIES[g] if g >= 0 else np.eye(2))
    for c, t in layer.cnots:
        u = _cnot_matrix(n, c, t) @ u
    return u


def _conjugation_perm(u: np.ndarray, n: int) -> np.ndarray:
    paulis = _pauli_matrices(n)
    images = u @ paulis @ u.conj().T
    overlaps = np.einsum("bij,aij->ab", paulis.conj(), images) / 2**n
    perm = np.argmax(np.abs(overlaps), axis=1)
    if not np.allclose(np.abs(overlaps[np.arange(4**n), perm]), 1.0):
        raise ValueError("unitary does not map Paulis to Paulis")
    return perm


def _layer_perm(layer: Layer) -> np.ndarray:
    return _conjugation_perm(layer_unitary(layer), layer.n)


def twirl_1q_clifford(dist: DensePauliDistribution) -> DensePauliDistribution:
    """Average of the 24 conjugations of a single-qubit Pauli distribution."""
    if dist.n != 1:
        raise ValueError("twirl is defined for single-qubit distributions")
    out = np.zeros(4)
    for g in range(NUM_CLIFFORDS):
        perm = _conjugation_perm(CLIFFORD_UNITARIES[g], 1)
        out[perm] += dist.probs
    return DensePauliDistribution(1, out / NUM_CLIFFORDS)


def _bits_of_index(i: int, n: int) -> str:
    return "".join(str((i >> (n - 1 - q)) & 1) for q in range(n))


def dense_statevector_run(layers: Sequence[Layer] | MirrorCircuit, n: int | None = None) -> str:
    """Ideal output of a Clifford sequence on ``|0...0>`` by state-vector simulation."""
    if isinstance(layers, MirrorCircuit):
        n, layers = layers.n, layers.layers
    if n is None:
        n = layers[0].n
    _check_cap(n, MAX_STATE_QUBITS)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for layer in layers:
        psi = layer_unitary(layer) @ psi
    probs = np.abs(psi) ** 2
    k = int(np.argmax(probs))
    if not np.isclose(probs[k], 1.0):
        raise NonDeterministicOutcome("state is not a computational basis state")
    return _bits_of_index(k, n)


def dense_output_distribution(circuit: MirrorCircuit, model: ErrorModel) -> dict[str, float]:
    """Exact noisy output distribution of a mirror circuit (``n <= 3``).

    Gate errors are tracked as a dense Pauli distribution conjugated forward
    through each ideal layer; readout flips are convolved in at the end.
    """
    n = circuit.n
    _check_cap(n, MAX_CHANNEL_QUBITS)
    frame = DensePauliDistribution.identity(n)
    for layer in circuit.layers:
        frame = frame.permuted(_layer_perm(layer))
        for ch in model.layer_channels(layer):
            frame = compose_dense(frame, DensePauliDistribution.from_channel(ch))
    target = dense_statevector_run(circuit.layers, n)
    out = np.zeros(2**n)
    t_mask = sum(int(b) << q for q, b in enumerate(target))
    for idx, p in enumerate(frame.probs):
        out[(idx & (2**n - 1)) ^ t_mask] += p
    for q in range(n):
        flipped = out[np.arange(2**n) ^ (1 << q)]
        out = (1 - model.readout[q]) * out + model.readout[q] * flipped
    return {
        "".join(str((m >> q) & 1) for q in range(n)): float(v) for m, v in enumerate(out)
    }


def dense_layer_infidelity(
    layer: Layer, model: ErrorModel, include_pauli_layer: bool = True
) -> float:
    """Exact dressed-layer infidelity, enumerating all ``4^n`` Pauli layers."""
    n = layer.n
    _check_cap(n, MAX_CHANNEL_QUBITS)
    perm = _layer_perm(layer)
    after = DensePauliDistribution.identity(n)
    for ch in model.layer_channels(layer):
        after = compose_dense(after, DensePauliDistribution.from_channel(ch))
    choices = list(product(range(4), repeat=n)) if include_pauli_layer else [None]
    fidelity = 0.0
    for ids in choices:
        before = DensePauliDistribution.identity(n)
        if ids is not None:
            for q, g in enumerate(ids):
                for ch in model.oneq[q][g]:
                    before = compose_dense(before, DensePauliDistribution.from_channel(ch))
        fidelity += compose_dense(before.permuted(perm), after).fidelity / len(choices)
    return 1.0 - fidelity
