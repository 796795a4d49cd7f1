import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorrb.circuits import ConnectivityGraph, grid_graph
from mirrorrb.clifford import NUM_CLIFFORDS, Z_ROTATION_IDS, Layer, PauliString
from mirrorrb.errors import DimensionError, FormatError, ModelCoverageError
from mirrorrb.noise import (
    ErrorModel,
    RandomModelSpec,
    StochasticPauliChannel,
    build_model1,
    build_model2,
    channel_infidelity,
    channel_polarization,
    depolarizing_channel,
    model_from_dict,
    model_to_dict,
    noiseless_model,
    read_model,
    sample_random_model,
    write_model,
)

GRID = grid_graph(4, 4)
P = PauliString.from_label


class TestChannel:
    def test_identity_channel(self):
        ch = StochasticPauliChannel(2)
        assert channel_infidelity(ch) == 0 and channel_polarization(ch) == 1

    def test_fully_depolarizing(self):
        ch = depolarizing_channel(1, 0.75)
        assert all(v == pytest.approx(0.25) for v in ch.entries.values())
        assert ch.polarization == pytest.approx(0.0, abs=1e-15)

    def test_two_qubit_depolarizing(self):
        ch = depolarizing_channel(2, 0.01)
        assert len(ch.entries) == 15
        assert all(v == pytest.approx(1 / 1500, rel=1e-12) for v in ch.entries.values())

    def test_gamma_from_epsilon(self):
        assert depolarizing_channel(1, 0.03).polarization == pytest.approx(0.96, abs=1e-12)

    def test_zero_epsilon(self):
        assert depolarizing_channel(3, 0.0).entries == {}

    @given(st.integers(1, 4), st.floats(0, 1))
    def test_polarization_formula(self, n, eps):
        gamma = channel_polarization(depolarizing_channel(n, eps))
        assert gamma == pytest.approx(1 - 4**n * eps / (4**n - 1), abs=1e-12)

    def test_support(self):
        ch = depolarizing_channel(3, 0.03, support=[1])
        assert {p.support for p in ch.entries} == {(1,)}

    def test_validation(self):
        with pytest.raises(ValueError):
            StochasticPauliChannel(1, {P("I"): 0.1})
        with pytest.raises(ValueError):
            StochasticPauliChannel(1, {P("X"): -0.1})
        with pytest.raises(ValueError):
            StochasticPauliChannel(1, {P("X"): 0.6, P("Z"): 0.6})
        with pytest.raises(DimensionError):
            StochasticPauliChannel(1, {P("XX"): 0.1})

    def test_duplicates_merge(self):
        ch = StochasticPauliChannel(1, [("X", 0.1), ("X", 0.2)])
        assert ch.entries == {P("X"): pytest.approx(0.3)}

    def test_compose_cancellation(self):
        a = StochasticPauliChannel(1, {"X": 0.1})
        c = a.compose(a)
        assert c.prob(P("I")) == pytest.approx(0.82)
        assert c.prob(P("X")) == pytest.approx(0.18)

    def test_restrict_traces_out(self):
        ch = StochasticPauliChannel(3, {"XIZ": 0.1, "IYI": 0.2, "ZII": 0.05})
        r = ch.restrict([0, 2])
        assert r.entries == {P("XZ"): pytest.approx(0.1), P("ZI"): pytest.approx(0.05)}

    def test_mixture(self):
        m = StochasticPauliChannel.mixture(
            [StochasticPauliChannel(1, {"X": 0.2}), StochasticPauliChannel(1, {"Z": 0.4})]
        )
        assert m.entries == {P("X"): pytest.approx(0.1), P("Z"): pytest.approx(0.2)}

    def test_sampling_tables(self):
        ch = StochasticPauliChannel(2, {"XI": 0.1, "IZ": 0.3})
        assert ch.cumulative[-1] == 1.0
        assert ch.x_table.tolist() == [[1, 0], [0, 0]]
        assert ch.z_table.tolist() == [[0, 0], [0, 1]]


class TestFixedModels:
    def test_model1_channels(self):
        m = build_model1(GRID)
        for q in range(16):
            for g in range(NUM_CLIFFORDS):
                (ch,) = m.oneq[q][g]
                assert len(ch.entries) == 3
                assert all(v == pytest.approx(0.001 / 3) for v in ch.entries.values())
        (cx,) = m.cnot[(0, 1)]
        assert len(cx.entries) == 15
        assert all(v == pytest.approx(0.01 / 15) for v in cx.entries.values())
        assert {p.support for p in cx.entries} <= {(0,), (1,), (0, 1)}
        assert np.allclose(m.readout, 0.005)
        assert set(m.cnot) == {e for a, b in GRID.edges for e in ((a, b), (b, a))}

    def test_model2_crosstalk(self):
        m = build_model2(GRID)
        err = m.cnot[(5, 6)]
        assert err[0] == build_model1(GRID).cnot[(5, 6)][0]
        spectators = {ch.entries and next(iter(ch.entries)).support[0]: ch for ch in err[1:]}
        assert 5 not in spectators and 6 not in spectators
        assert len(spectators) == 14
        assert spectators[1].infidelity == pytest.approx(0.0035 * 0.999)
        assert spectators[15].infidelity == pytest.approx(0.0035 * 0.999**3)

    def test_layer_channels(self):
        m = build_model2(GRID)
        layer = Layer.build(16, {q: 0 for q in range(2, 16)}, [(0, 1)])
        assert len(m.layer_channels(layer)) == 14 + 1 + 14

    def test_missing_cnot(self):
        m = build_model1(ConnectivityGraph(3, ((0, 1),)))
        with pytest.raises(ModelCoverageError):
            m.layer_channels(Layer.build(3, None, [(1, 2)]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            build_model1(GRID).layer_channels(Layer.identity(3))

    def test_restrict(self):
        m = build_model2(GRID).restrict((0, 1, 4, 5))
        assert m.n == 4
        assert set(m.cnot) == {(0, 1), (1, 0), (0, 2), (2, 0), (1, 3), (3, 1), (2, 3), (3, 2)}
        # crosstalk factors landing on the subset survive, the rest vanish
        assert len(m.cnot[(0, 1)]) == 1 + 2

    def test_noiseless(self):
        m = noiseless_model(GRID)
        assert all(err == () for err in m.all_errors())
        assert not m.readout.any()


class TestRandomModel:
    def test_kappa_one_keeps_mass_local(self):
        m = sample_random_model(GRID, rng=1, kappa=1.0)
        for q in range(16):
            for g in range(NUM_CLIFFORDS):
                for p in m.oneq[q][g][0].entries:
                    assert p.support == (q,)
        for (a, b), (ch,) in m.cnot.items():
            assert all(set(p.support) <= {a, b} for p in ch.entries)

    def test_mass_conservation(self):
        spec = RandomModelSpec()
        m = sample_random_model(GRID, spec, rng=2)
        for row in m.oneq:
            for g, (ch,) in enumerate(row):
                assert 0 <= ch.infidelity <= spec.gamma_1q[1]
                if g in Z_ROTATION_IDS:
                    assert all(len(p.support) == 1 for p in ch.entries)
        for (ch,) in m.cnot.values():
            assert ch.infidelity <= spec.gamma_2q[1] + 1e-12
            assert all(v >= 0 for v in ch.entries.values())
        assert np.all((m.readout >= 0) & (m.readout <= 0.01))

    def test_totals_equal_gamma(self):
        # with kappa pinned the neighbour share is (1 - kappa) gamma exactly
        m = sample_random_model(GRID, rng=3, kappa=0.7)
        for q in range(16):
            for g, (ch,) in enumerate(m.oneq[q]):
                local = sum(v for p, v in ch.entries.items() if p.support == (q,))
                other = ch.infidelity - local
                if g in Z_ROTATION_IDS:
                    assert other == pytest.approx(0.0, abs=1e-15)
                else:
                    assert other == pytest.approx(0.3 / 0.7 * local, rel=1e-9)

    def test_shared_orientation(self):
        m = sample_random_model(GRID, rng=4)
        assert m.cnot[(0, 1)] is m.cnot[(1, 0)] or m.cnot[(0, 1)] == m.cnot[(1, 0)]

    def test_expected_oneq_infidelity(self):
        vals = []
        for seed in range(30):
            m = sample_random_model(GRID, rng=seed, kappa=1.0)
            vals.extend(m.oneq[q][g][0].infidelity for q in range(16) for g in range(24))
        vals = np.array(vals)
        assert abs(vals.mean() - 0.001) < 3 * vals.std() / np.sqrt(vals.size)

    def test_deterministic(self):
        assert model_to_dict(sample_random_model(GRID, rng=9)) == model_to_dict(sample_random_model(GRID, rng=9))


class TestModelFiles:
    @pytest.mark.parametrize("builder", [build_model1, build_model2, lambda g: sample_random_model(g, rng=0)])
    def test_round_trip(self, builder, tmp_path):
        m = builder(grid_graph(2, 2))
        write_model(m, tmp_path / "m.json")
        back = read_model(tmp_path / "m.json")
        assert model_to_dict(back) == model_to_dict(m)

    def test_incomplete_model(self):
        data = model_to_dict(build_model1(grid_graph(1, 2)))
        data["placements"] = data["placements"][1:]
        with pytest.raises(ModelCoverageError):
            model_from_dict(data)

    def test_bad_schema(self):
        with pytest.raises(FormatError):
            model_from_dict({"schema": "x"})

    def test_coverage_requirement(self):
        with pytest.raises(ModelCoverageError):
            ErrorModel(1, [[()] * 23], {}, [0.0])
