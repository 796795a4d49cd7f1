"""Stabilizer tableau executor used as the reference for mirror circuits.

The generator rows are shared by a batch of sign vectors.  Every member of
the batch sees the same Clifford gates and differs only by the Pauli
operators interleaved between them, and a Pauli only flips signs, so one
tableau can unravel many noisy shots at once.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .clifford import SIGN_FLIP, SIGNED_MAP, Layer, PauliString
from .errors import DimensionError, NonDeterministicOutcome

__all__ = ["Tableau", "tableau_run"]


def _g(x1, z1, x2, z2):
    """Exponent of i picked up when multiplying Pauli (x1, z1) into (x2, z2)."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    return np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )


class Tableau:
    """Destabilizer/stabilizer tableau on ``n`` qubits with ``batch`` sign vectors.

    Rows ``0..n-1`` are destabilizers and rows ``n..2n-1`` stabilizers.  The
    state starts as ``|0...0>`` for every batch member.
    """

    def __init__(self, n: int, batch: int = 1):
        self.n = n
        self.batch = batch
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1
        self.r = np.zeros((batch, 2 * n), dtype=np.uint8)

    def apply_layer(self, layer: Layer) -> None:
        if layer.n != self.n:
            raise DimensionError(f"layer has {layer.n} qubits, tableau has {self.n}")
        qs = layer.oneq_qubits
        if qs.size:
            codes = (self.x[:, qs] << 1) | self.z[:, qs]
            ids = layer.oneq_ids[None, :]
            flips = np.bitwise_xor.reduce(SIGN_FLIP[ids, codes], axis=1)
            image = SIGNED_MAP[ids, codes]
            self.x[:, qs] = image >> 1
            self.z[:, qs] = image & 1
            self.r ^= flips[None, :]
        if layer.cnots:
            c, t = layer.cx_controls, layer.cx_targets
            xc, xt, zc, zt = self.x[:, c], self.x[:, t], self.z[:, c], self.z[:, t]
            flips = np.bitwise_xor.reduce(xc & zt & (xt ^ zc ^ 1), axis=1)
            self.r ^= flips[None, :]
            self.x[:, t] ^= xc
            self.z[:, c] ^= zt

    def apply_paulis(self, px: np.ndarray, pz: np.ndarray) -> None:
        """Apply one Pauli per batch member; ``px``/``pz`` are ``(batch, n)`` bits."""
        px = np.asarray(px, dtype=np.int64)
        pz = np.asarray(pz, dtype=np.int64)
        anti = (px @ self.z.T.astype(np.int64) + pz @ self.x.T.astype(np.int64)) & 1
        self.r ^= anti.astype(np.uint8)

    def apply_pauli(self, p: PauliString) -> None:
        self.apply_paulis(
            np.broadcast_to(p.x_bits(), (self.batch, self.n)),
            np.broadcast_to(p.z_bits(), (self.batch, self.n)),
        )

    def measure_all(self) -> np.ndarray:
        """Deterministic computational-basis outcomes, shape ``(batch, n)``.

        Raises :class:`NonDeterministicOutcome` if some qubit's outcome is
        random, i.e. the state is not a computational basis state.
        """
        n = self.n
        out = np.zeros((self.batch, n), dtype=np.uint8)
        for a in range(n):
            if self.x[n:, a].any():
                raise NonDeterministicOutcome(f"qubit {a} has a random outcome")
            sx = np.zeros(n, dtype=np.uint8)
            sz = np.zeros(n, dtype=np.uint8)
            phase = 0
            sign = np.zeros(self.batch, dtype=np.uint8)
            for i in np.flatnonzero(self.x[:n, a]):
                row = i + n
                phase += int(_g(self.x[row], self.z[row], sx, sz).sum())
                sx ^= self.x[row]
                sz ^= self.z[row]
                sign ^= self.r[:, row]
            out[:, a] = sign ^ ((phase % 4) // 2)
        return out


def tableau_run(
    layers: Sequence[Layer],
    paulis: Sequence[PauliString | None] | None = None,
    n: int | None = None,
) -> str:
    """Run a Clifford sequence on ``|0...0>`` and return the measured bit string.

    ``paulis[i]``, when given, is applied right after ``layers[i]``.
    """
    if n is None:
        if not layers:
            raise DimensionError("qubit count is required for an empty sequence")
        n = layers[0].n
    if paulis is not None and len(paulis) != len(layers):
        raise DimensionError("one Pauli slot is required per layer")
    tab = Tableau(n)
    for i, layer in enumerate(layers):
        tab.apply_layer(layer)
        if paulis is not None and paulis[i] is not None:
            if paulis[i].n != n:
                raise DimensionError("Pauli and layer sizes differ")
            tab.apply_pauli(paulis[i])
    return "".join(str(b) for b in tab.measure_all()[0])
