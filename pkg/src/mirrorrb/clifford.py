"""Phase-free Pauli algebra, the single-qubit Clifford group, CNOT and layers.

Single-qubit Paulis are encoded as two-bit codes ``2*x + z``, so that
``0 = I``, ``1 = Z``, ``2 = X`` and ``3 = Y``.  Multi-qubit Paulis keep their
X and Z components as integer bit masks (bit ``q`` is qubit ``q``).

The 24 single-qubit Cliffords are indexed by a frozen table of signed images
``(X -> ±P, Z -> ±Q)``.  Ids 0-3 are the Paulis I, X, Y, Z; each following
block of four shares one unsigned action and runs through the sign patterns
``(+,+), (+,-), (-,-), (-,+)``.  The table is checked at import time against
the closure of {H, S} acting on 2x2 unitaries.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, LayerError

__all__ = [
    "PauliString",
    "compose_pauli",
    "Layer",
    "conjugate_by_layer",
    "invert_layer",
    "propagate_frames",
    "NUM_CLIFFORDS",
    "IDLE",
    "CX_SLOT",
    "PAULI_IDS",
    "Z_ROTATION_IDS",
    "CLIFFORD_UNITARIES",
    "CLIFFORD_INVERSE",
    "CLIFFORD_PRODUCT",
    "FRAME_MAP",
    "SIGNED_MAP",
    "SIGN_FLIP",
    "clifford_images",
]

_CODE = {"I": 0, "Z": 1, "X": 2, "Y": 3}
_LETTER = "IZXY"


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli operator with its phase discarded."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise DimensionError("qubit count must be non-negative")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionError(f"bit masks do not fit in {self.n} qubits")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a string such as ``"XIZY"``; character ``q`` acts on qubit ``q``."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                code = _CODE[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
            x |= (code >> 1) << q
            z |= (code & 1) << q
        return cls(len(label), x, z)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        code = _CODE[letter.upper()]
        return cls(n, (code >> 1) << qubit, (code & 1) << qubit)

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int]) -> "PauliString":
        if len(x_bits) != len(z_bits):
            raise DimensionError("x and z components differ in length")
        x = sum(int(b) << q for q, b in enumerate(x_bits))
        z = sum(int(b) << q for q, b in enumerate(z_bits))
        return cls(len(x_bits), x, z)

    @property
    def label(self) -> str:
        return "".join(_LETTER[self.code(q)] for q in range(self.n))

    def code(self, qubit: int) -> int:
        return (((self.x >> qubit) & 1) << 1) | ((self.z >> qubit) & 1)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x | self.z
        return tuple(q for q in range(self.n) if (mask >> q) & 1)

    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    def commutes_with(self, other: "PauliString") -> bool:
        _check_same_n(self, other)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return compose_pauli(self, other)

    def __str__(self) -> str:
        return self.label


def _check_same_n(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise DimensionError(f"Pauli dimensions differ: {p.n} != {q.n}")


def compose_pauli(p: PauliString, q: PauliString) -> PauliString:
    """Product of two Paulis up to phase (bitwise XOR of components)."""
    _check_same_n(p, q)
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z)


# ---------------------------------------------------------------------------
# Single-qubit Clifford group

NUM_CLIFFORDS = 24
IDLE = -1
CX_SLOT = -2

# Unsigned actions (image of X, image of Z); each expands to four sign patterns.
_ACTIONS = [("X", "Z"), ("Z", "X"), ("Y", "Z"), ("X", "Y"), ("Y", "X"), ("Z", "Y")]
_SIGN_PATTERNS = [(+1, +1), (+1, -1), (-1, -1), (-1, +1)]
_IMAGE_TABLE = [
    ((sx, px), (sz, pz)) for px, pz in _ACTIONS for sx, sz in _SIGN_PATTERNS
]

PAULI_IDS = (0, 1, 2, 3)
ID_I, ID_X, ID_Y, ID_Z = PAULI_IDS
ID_H = 4
ID_S = 8
ID_SDG = 11
Z_ROTATION_IDS = (ID_I, ID_Z, ID_S, ID_SDG)

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _phase_key(u: np.ndarray) -> tuple:
    flat = u.ravel()
    pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
    v = flat * (abs(pivot) / pivot)
    return tuple(np.round(v.real, 8)) + tuple(np.round(v.imag, 8))


def _conjugation_image(u: np.ndarray, pauli: np.ndarray) -> tuple[int, str]:
    image = u @ pauli @ u.conj().T
    for letter in "XYZ":
        overlap = np.trace(_PAULI_MATS[letter].conj().T @ image) / 2
        if abs(abs(overlap) - 1) < 1e-9:
            sign = int(round(overlap.real))
            if sign not in (1, -1) or abs(overlap.imag) > 1e-9:
                break
            return sign, letter
    raise AssertionError("matrix is not a Clifford")


def _enumerate_unitaries() -> list[np.ndarray]:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    found = {_phase_key(np.eye(2)): np.eye(2, dtype=complex)}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                w = g @ u
                key = _phase_key(w)
                if key not in found:
                    found[key] = w
                    nxt.append(w)
        frontier = nxt
    return list(found.values())


def _build_tables():
    unitaries = [None] * NUM_CLIFFORDS
    index = {entry: i for i, entry in enumerate(_IMAGE_TABLE)}
    for u in _enumerate_unitaries():
        key = (_conjugation_image(u, _PAULI_MATS["X"]), _conjugation_image(u, _PAULI_MATS["Z"]))
        unitaries[index[key]] = u
    if any(u is None for u in unitaries):
        raise AssertionError("Clifford image table does not match the {H, S} closure")
    unitaries = np.array(unitaries)

    keys = {_phase_key(u): i for i, u in enumerate(unitaries)}
    product = np.empty((NUM_CLIFFORDS, NUM_CLIFFORDS), dtype=np.int64)
    for a in range(NUM_CLIFFORDS):
        for b in range(NUM_CLIFFORDS):
            # gate a applied first, then gate b
            product[a, b] = keys[_phase_key(unitaries[b] @ unitaries[a])]
    inverse = np.array([keys[_phase_key(u.conj().T)] for u in unitaries])

    frame = np.zeros((NUM_CLIFFORDS, 4), dtype=np.uint8)
    signed = np.zeros((NUM_CLIFFORDS, 4), dtype=np.uint8)
    flip = np.zeros((NUM_CLIFFORDS, 4), dtype=np.uint8)
    for g, u in enumerate(unitaries):
        for letter in "XYZ":
            sign, image = _conjugation_image(u, _PAULI_MATS[letter])
            frame[g, _CODE[letter]] = _CODE[image]
            signed[g, _CODE[letter]] = _CODE[image]
            flip[g, _CODE[letter]] = 1 if sign < 0 else 0
    for table in (unitaries, product, inverse, frame, signed, flip):
        table.setflags(write=False)
    return unitaries, product, inverse, frame, signed, flip


(
    CLIFFORD_UNITARIES,
    CLIFFORD_PRODUCT,
    CLIFFORD_INVERSE,
    FRAME_MAP,
    SIGNED_MAP,
    SIGN_FLIP,
) = _build_tables()


def clifford_images(gate: int) -> tuple[str, str]:
    """Signed images of X and Z under conjugation by Clifford ``gate``."""
    (sx, px), (sz, pz) = _IMAGE_TABLE[gate]
    return ("+" if sx > 0 else "-") + px, ("+" if sz > 0 else "-") + pz


# ---------------------------------------------------------------------------
# Layers


@dataclass(frozen=True)
class Layer:
    """One clock cycle of gates on ``n`` qubits.

    ``gates[q]`` is a Clifford id in ``[0, 24)``, :data:`IDLE`, or
    :data:`CX_SLOT` for qubits covered by an entry of ``cnots``.  Each CNOT is
    a ``(control, target)`` pair.
    """

    n: int
    gates: tuple[int, ...]
    cnots: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(int(g) for g in self.gates))
        cnots = sorted(((int(c), int(t)) for c, t in self.cnots), key=min)
        object.__setattr__(self, "cnots", tuple(cnots))
        if len(self.gates) != self.n:
            raise LayerError(f"layer lists {len(self.gates)} placements for {self.n} qubits")
        covered = set()
        for c, t in self.cnots:
            if c == t:
                raise LayerError(f"CNOT on a single qubit {c}")
            for q in (c, t):
                if not 0 <= q < self.n:
                    raise LayerError(f"CNOT qubit {q} out of range")
                if q in covered:
                    raise LayerError(f"qubit {q} appears in two CNOTs")
                covered.add(q)
        for q, g in enumerate(self.gates):
            if q in covered:
                if g != CX_SLOT:
                    raise LayerError(f"qubit {q} is a CNOT endpoint but carries gate {g}")
            elif g == CX_SLOT:
                raise LayerError(f"qubit {q} is marked as a CNOT endpoint without a CNOT")
            elif not (g == IDLE or 0 <= g < NUM_CLIFFORDS):
                raise LayerError(f"invalid gate id {g} on qubit {q}")

    @classmethod
    def build(
        cls,
        n: int,
        cliffords: dict[int, int] | Sequence[int] | None = None,
        cnots: Iterable[tuple[int, int]] = (),
    ) -> "Layer":
        """Assemble a layer; qubits not mentioned are idle."""
        cnots = tuple(cnots)
        gates = [IDLE] * n
        if cliffords is not None:
            items = cliffords.items() if isinstance(cliffords, dict) else enumerate(cliffords)
            for q, g in items:
                gates[q] = g
        for c, t in cnots:
            gates[c] = gates[t] = CX_SLOT
        return cls(n, tuple(gates), cnots)

    @classmethod
    def identity(cls, n: int) -> "Layer":
        return cls(n, (ID_I,) * n)

    def validate(self, edges) -> None:
        """Raise :class:`LayerError` if a CNOT is not an edge of ``edges``."""
        edge_set = {frozenset(e) for e in edges}
        for c, t in self.cnots:
            if frozenset((c, t)) not in edge_set:
                raise LayerError(f"CNOT ({c}, {t}) is not a device edge")

    @cached_property
    def oneq_qubits(self) -> np.ndarray:
        return np.array([q for q, g in enumerate(self.gates) if g >= 0], dtype=np.intp)

    @cached_property
    def oneq_ids(self) -> np.ndarray:
        return np.array([g for g in self.gates if g >= 0], dtype=np.intp)

    @cached_property
    def cx_controls(self) -> np.ndarray:
        return np.array([c for c, _ in self.cnots], dtype=np.intp)

    @cached_property
    def cx_targets(self) -> np.ndarray:
        return np.array([t for _, t in self.cnots], dtype=np.intp)


def invert_layer(layer: Layer) -> Layer:
    """The layer implementing the inverse unitary; CNOTs are self-inverse."""
    gates = tuple(int(CLIFFORD_INVERSE[g]) if g >= 0 else g for g in layer.gates)
    return Layer(layer.n, gates, layer.cnots)


def propagate_frames(x: np.ndarray, z: np.ndarray, layer: Layer) -> None:
    """Conjugate a batch of Pauli frames through ``layer`` in place.

    ``x`` and ``z`` are ``(batch, n)`` uint8 arrays.  CNOTs in one layer are
    disjoint, so they can be applied simultaneously.
    """
    qs = layer.oneq_qubits
    if qs.size:
        codes = (x[:, qs] << 1) | z[:, qs]
        image = FRAME_MAP[layer.oneq_ids, codes]
        x[:, qs] = image >> 1
        z[:, qs] = image & 1
    if layer.cnots:
        c, t = layer.cx_controls, layer.cx_targets
        x[:, t] ^= x[:, c]
        z[:, c] ^= z[:, t]


def conjugate_by_layer(p: PauliString, layer: Layer) -> PauliString:
    """``U(L) P U(L)^dagger`` with the phase discarded."""
    if p.n != layer.n:
        raise DimensionError(f"Pauli has {p.n} qubits, layer has {layer.n}")
    x = p.x_bits()[None, :].copy()
    z = p.z_bits()[None, :].copy()
    propagate_frames(x, z, layer)
    return PauliString.from_bits(x[0], z[0])
