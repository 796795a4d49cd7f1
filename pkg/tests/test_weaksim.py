from math import comb

import numpy as np
import pytest
from scipy.stats import chisquare

from mirrorrb.circuits import MirrorCircuit, MrbDesign, SamplerSpec, grid_graph, lattice_subset, sample_mirror_circuit
from mirrorrb.clifford import NUM_CLIFFORDS, Layer
from mirrorrb.errors import DimensionError, FormatError
from mirrorrb.noise import ErrorModel, StochasticPauliChannel, build_model1, noiseless_model
from mirrorrb.oracles import dense_output_distribution
from mirrorrb.weaksim import (
    HammingHistogram,
    ShotResult,
    hamming_histogram,
    read_results,
    results_from_dict,
    results_to_dict,
    shot_seed,
    simulate_shots,
    unravel_shots,
    write_results,
)

GRID = grid_graph(4, 4)


def _design(n):
    return MrbDesign(lattice_subset(4, 4, n), GRID, SamplerSpec("edge_grab", 0.0 if n == 1 else 0.5), (4,), 1)


def _chi2(counts, probs, shots):
    keys = sorted(probs)
    obs = np.array([counts.get(k, 0) for k in keys], float)
    exp = np.array([probs[k] for k in keys]) * shots
    keep = exp >= 5
    obs = np.append(obs[keep], obs[~keep].sum())
    exp = np.append(exp[keep], exp[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return chisquare(obs, exp * obs.sum() / exp.sum()).pvalue


def test_noiseless_returns_target(rng):
    d = _design(4)
    m = noiseless_model(GRID).restrict(d.qubits)
    for depth in (0, 2, 8):
        c = sample_mirror_circuit(d, depth, rng)
        assert simulate_shots(c, m, 50, rng).counts == {c.target: 50}
        assert unravel_shots(c, m, 50, rng).counts == {c.target: 50}


def test_forced_x_error_flips_first_bit():
    # the final layer's only gate always leaves an X on qubit 0
    n = 3
    oneq = [[()] * NUM_CLIFFORDS for _ in range(n)]
    oneq[0] = [()] * NUM_CLIFFORDS
    oneq[0][0] = (StochasticPauliChannel(n, {"XII": 1.0}),)
    m = ErrorModel(n, oneq, {}, [0.0] * n)
    c = MirrorCircuit(n, 0, (Layer.build(n, {0: 0}),), "000")
    assert simulate_shots(c, m, 100, rng=0).counts == {"100": 100}
    assert unravel_shots(c, m, 100, rng=0).counts == {"100": 100}


def test_determinism(rng):
    d = _design(4)
    m = build_model1(GRID).restrict(d.qubits)
    c = sample_mirror_circuit(d, 8, rng)
    a = simulate_shots(c, m, 500, np.random.default_rng(shot_seed(11)))
    b = simulate_shots(c, m, 500, np.random.default_rng(shot_seed(11)))
    assert a.counts == b.counts


def test_frame_matches_tableau_and_dense(rng):
    d = _design(2)
    m = build_model1(GRID).restrict(d.qubits)
    c = sample_mirror_circuit(d, 4, rng)
    exact = dense_output_distribution(c, m)
    shots = 100_000
    frame = simulate_shots(c, m, shots, rng).counts
    tab = unravel_shots(c, m, shots, rng).counts
    for counts in (frame, tab):
        for k, p in exact.items():
            sigma = np.sqrt(shots * p * (1 - p))
            assert abs(counts.get(k, 0) - shots * p) <= 5 * sigma + 1e-9
        assert _chi2(counts, exact, shots) > 1e-3


def test_readout_only_weight_one():
    n, q = 4, 0.05
    m = ErrorModel(n, [[()] * NUM_CLIFFORDS] * n, {}, [q] * n)
    c = MirrorCircuit(n, 0, (Layer.identity(n),), "0000")
    shots = 50_000
    h = hamming_histogram(simulate_shots(c, m, shots, rng=3))
    expect = n * q * (1 - q) ** (n - 1)
    assert abs(h.h[1] - expect) < 3 * np.sqrt(expect * (1 - expect) / shots)


def test_model_size_mismatch(rng):
    c = sample_mirror_circuit(_design(2), 2, rng)
    with pytest.raises(DimensionError):
        simulate_shots(c, build_model1(GRID), 10)


class TestHistogram:
    def test_perfect(self):
        r = ShotResult("a", 3, 0, "101", {"101": 7})
        assert hamming_histogram(r).h == (1.0, 0.0, 0.0, 0.0)

    def test_all_flipped(self):
        r = ShotResult("a", 2, 0, "00", {"11": 1})
        assert hamming_histogram(r).h == (0.0, 0.0, 1.0)

    def test_uniform_counts_binomial(self):
        n = 4
        counts = {format(i, "04b"): 10 for i in range(16)}
        h = hamming_histogram(ShotResult("a", n, 0, "0110", counts))
        assert np.allclose(h.h, HammingHistogram.binomial(n).h)
        assert HammingHistogram.binomial(n).h[2] == comb(4, 2) / 16

    def test_external_target(self):
        r = ShotResult("a", 2, 0, "00", {"01": 4})
        assert hamming_histogram(r, target="01").h == (1.0, 0.0, 0.0)

    def test_errors(self):
        with pytest.raises(DimensionError):
            ShotResult("a", 2, 0, "00", {"0": 1})
        with pytest.raises(DimensionError):
            hamming_histogram(ShotResult("a", 2, 0, "00", {"00": 1}), target="000")
        with pytest.raises(ValueError):
            hamming_histogram(ShotResult("a", 2, 0, "00", {}))


class TestResultsFile:
    def test_round_trip(self, tmp_path):
        results = [
            ShotResult("d0000_k000", 3, 0, "010", {"010": 90, "011": 10}),
            ShotResult("d0002_k000", 3, 2, "111", {"111": 100}),
        ]
        write_results(results, tmp_path / "r.json", seed=4)
        assert read_results(tmp_path / "r.json") == results
        assert results_from_dict(results_to_dict(results)) == results

    def test_bad_schema(self):
        with pytest.raises(FormatError):
            results_from_dict({"schema": "nope", "records": []})

    def test_malformed_file(self, tmp_path):
        (tmp_path / "r.json").write_text('{"schema": "mrb-results/1", "records": [{"id": 1}]}')
        with pytest.raises(FormatError):
            read_results(tmp_path / "r.json")
