"""Monte-Carlo estimates of Pauli-dressed layer infidelities.

The infidelity of a dressed layer is the probability that the errors of its
random Pauli gate layer, conjugated through the ideal layer ``L``, combined
with the errors of ``L`` do not multiply to the identity.  The estimator
splits this into the exact probability that any error fires and a sampled
correction for errors that cancel, drawing samples conditioned on at least
one error firing.  This keeps the relative standard error small even when
every error rate is tiny.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import MrbDesign, sample_layer
from .clifford import Layer, invert_layer, propagate_frames
from .noise import ErrorModel, StochasticPauliChannel

__all__ = ["LayerInfidelity", "EpsilonOmega", "epsilon_layer", "epsilon_omega", "dressed_channels"]

MIN_SAMPLES = 100


@dataclass(frozen=True)
class LayerInfidelity:
    value: float
    stderr: float


@dataclass(frozen=True)
class EpsilonOmega:
    """Average dressed-layer infidelity with its standard error.

    ``covariance`` is the spread diagnostic between a layer's infidelity and
    its inverse's; it is ``None`` unless requested.
    """

    value: float
    stderr: float
    layers: int
    covariance: float | None = None


def dressed_channels(
    layer: Layer, model: ErrorModel, include_pauli_layer: bool = True
) -> tuple[list[StochasticPauliChannel], list[StochasticPauliChannel]]:
    """Error factors before and after the ideal layer.

    The first list holds the Pauli layer's errors, averaged over the uniform
    choice of Pauli on each qubit; averaging commutes with the identity-check
    because every qubit's Pauli is chosen independently.
    """
    before = [model.pauli_mixture(q) for q in range(model.n)] if include_pauli_layer else []
    return before, model.layer_channels(layer)


def epsilon_layer(
    layer: Layer,
    model: ErrorModel,
    include_pauli_layer: bool = True,
    rng=None,
    samples: int = 1000,
) -> LayerInfidelity:
    """Estimate the entanglement infidelity of the (Pauli-dressed) layer."""
    if samples < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are required, got {samples}")
    rng = np.random.default_rng(rng)
    before, after = dressed_channels(layer, model, include_pauli_layer)
    channels = [ch for ch in before + after if ch.entries]
    split = sum(1 for ch in before if ch.entries)
    if not channels:
        return LayerInfidelity(0.0, 0.0)
    eps = np.array([ch.infidelity for ch in channels])
    survive = np.concatenate(([1.0], np.cumprod(1.0 - eps)))
    p_any = 1.0 - survive[-1]
    if p_any <= 0:
        return LayerInfidelity(0.0, 0.0)
    if len(channels) == 1:
        # a lone non-identity error cannot cancel
        return LayerInfidelity(float(p_any), 0.0)

    # first error index j drawn with prob eps_j * prod_{i<j}(1 - eps_i) / p_any
    first_w = eps * survive[:-1]
    first = np.searchsorted(np.cumsum(first_w) / first_w.sum(), rng.random(samples), side="right")
    first = np.minimum(first, len(channels) - 1)
    cols = np.arange(len(channels))
    u = rng.random((samples, len(channels)))
    hits = ((u < eps) & (cols > first[:, None])) | (cols == first[:, None])

    n = model.n
    x = np.zeros((samples, n), dtype=np.uint8)
    z = np.zeros_like(x)
    for col in range(len(channels)):
        if col == split:
            propagate_frames(x, z, layer)
        rows = np.flatnonzero(hits[:, col])
        if rows.size:
            ch = channels[col]
            idx = np.searchsorted(ch.cumulative, rng.random(rows.size), side="right")
            idx = np.minimum(idx, len(ch.cumulative) - 1)
            x[rows] ^= ch.x_table[idx]
            z[rows] ^= ch.z_table[idx]
    if split == len(channels):
        propagate_frames(x, z, layer)
    cancelled = np.mean(~(x.any(axis=1) | z.any(axis=1)))
    value = p_any * (1.0 - cancelled)
    # add-one proportion keeps the error bar honest when no cancellation was seen
    c_adj = (cancelled * samples + 1.0) / (samples + 2.0)
    stderr = p_any * np.sqrt(c_adj * (1.0 - c_adj) / samples)
    return LayerInfidelity(float(value), float(stderr))


def epsilon_omega(
    design: MrbDesign,
    model: ErrorModel,
    layer_samples: int = 1000,
    per_layer_samples: int = 200,
    rng=None,
    include_pauli_layer: bool = True,
    covariance: bool = False,
    layers: Sequence[Layer] | None = None,
) -> EpsilonOmega:
    """Average dressed-layer infidelity over layers drawn from the design's sampler.

    The standard error is taken from the spread of the per-layer estimates,
    which already contains their own Monte-Carlo noise.  With
    ``covariance=True`` each layer's inverse is also estimated and the
    covariance between the two infidelities is reported.
    """
    rng = np.random.default_rng(rng)
    if model.n != design.n:
        raise ValueError(f"model has {model.n} qubits, design has {design.n}")
    if layers is None:
        layers = [sample_layer(design.local_graph, design.sampler, rng) for _ in range(layer_samples)]
    vals = np.empty(len(layers))
    inv = np.empty(len(layers)) if covariance else None
    for i, layer in enumerate(layers):
        vals[i] = epsilon_layer(layer, model, include_pauli_layer, rng, per_layer_samples).value
        if covariance:
            inv[i] = epsilon_layer(
                invert_layer(layer), model, include_pauli_layer, rng, per_layer_samples
            ).value
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    cov = None
    if covariance:
        # both halves estimate the same mean; pool them for the product term
        pooled = 0.5 * (vals.mean() + inv.mean())
        cov = float(np.mean(vals * inv) - pooled**2)
    return EpsilonOmega(mean, se, len(vals), cov)
