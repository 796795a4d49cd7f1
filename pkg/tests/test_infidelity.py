import numpy as np
import pytest

from mirrorrb.circuits import MrbDesign, SamplerSpec, grid_graph, lattice_subset, sample_layer
from mirrorrb.clifford import NUM_CLIFFORDS, Layer
from mirrorrb.infidelity import epsilon_layer, epsilon_omega
from mirrorrb.noise import ErrorModel, StochasticPauliChannel, build_model1, build_model2, depolarizing_channel, noiseless_model
from mirrorrb.oracles import dense_layer_infidelity

GRID = grid_graph(4, 4)


def design(n, xi=0.125, kind="edge_grab"):
    if n == 1:
        xi = 0.0
    return MrbDesign(lattice_subset(4, 4, n), GRID, SamplerSpec(kind, xi), (0, 2), 1)


def test_noiseless_is_zero(rng):
    m = noiseless_model(GRID)
    layer = sample_layer(GRID, SamplerSpec("edge_grab", 0.5), rng)
    assert epsilon_layer(layer, m, rng=rng).value == 0.0


def test_single_error_source():
    oneq = [[()] * NUM_CLIFFORDS]
    oneq[0] = list(oneq[0])
    oneq[0][7] = (StochasticPauliChannel(1, {"X": 0.01}),)
    m = ErrorModel(1, oneq, {}, [0.0])
    est = epsilon_layer(Layer(1, (7,)), m, rng=0)
    assert est.value == pytest.approx(0.01, abs=1e-15)
    assert est.stderr == 0.0


@pytest.mark.parametrize("builder", [build_model1, build_model2])
@pytest.mark.parametrize("include", [True, False])
def test_matches_dense_oracle(builder, include, rng):
    q = lattice_subset(4, 4, 2)
    m = builder(GRID).restrict(q)
    g = GRID.induced(q)
    for _ in range(3):
        layer = sample_layer(g, SamplerSpec("edge_grab", 1.0), rng)
        exact = dense_layer_infidelity(layer, m, include)
        est = epsilon_layer(layer, m, include, rng, samples=5000)
        assert abs(est.value - exact) <= 3 * est.stderr + 1e-15


def test_three_qubits_with_crosstalk(rng):
    q = lattice_subset(4, 4, 3)
    m = build_model2(GRID).restrict(q)
    layer = Layer.build(3, {2: 9}, [(1, 0)])
    exact = dense_layer_infidelity(layer, m)
    est = epsilon_layer(layer, m, rng=rng, samples=20000)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_independent_gates_without_pauli_layer(rng):
    n = 3
    eps = [0.01, 0.02, 0.03]
    oneq = [[(depolarizing_channel(n, e, support=[q]),)] * NUM_CLIFFORDS for q, e in enumerate(eps)]
    m = ErrorModel(n, oneq, {}, [0.0] * n)
    layer = Layer(n, (4, 5, 6))
    expect = 1 - np.prod([1 - e for e in eps])
    assert dense_layer_infidelity(layer, m, False) == pytest.approx(expect, abs=1e-12)
    est = epsilon_layer(layer, m, False, rng, samples=2000)
    assert est.value == pytest.approx(expect, abs=1e-15)


def test_sample_floor():
    with pytest.raises(ValueError):
        epsilon_layer(Layer.identity(1), build_model1(grid_graph(1, 1)), samples=10)


def test_common_error_everywhere(rng):
    m = ErrorModel(1, [[(depolarizing_channel(1, 0.004),)] * NUM_CLIFFORDS], {}, [0.0])
    d = MrbDesign((0,), grid_graph(1, 1), SamplerSpec("edge_grab", 0.0), (0,), 1)
    est = epsilon_omega(d, m, layer_samples=200, rng=rng, include_pauli_layer=False)
    assert est.value == pytest.approx(0.004, abs=1e-15)


def test_single_qubit_model1_closed_form(rng):
    eps = 0.001
    # dressed layer = two independent 0.1% depolarizing errors
    expect = 1 - ((1 - eps) ** 2 + eps**2 / 3)
    m = build_model1(GRID).restrict((0,))
    est = epsilon_omega(design(1), m, layer_samples=300, per_layer_samples=2000, rng=rng)
    assert abs(est.value - expect) <= 3 * est.stderr + 1e-12
    assert dense_layer_infidelity(Layer(1, (13,)), m) == pytest.approx(expect, abs=1e-15)


def test_monotone_in_width(rng):
    m = build_model1(GRID)
    values = []
    for n in (1, 2, 4, 8):
        d = design(n)
        values.append(epsilon_omega(d, m.restrict(d.qubits), layer_samples=300, rng=rng).value)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_covariance_diagnostic(rng):
    d = design(4, xi=0.5)
    est = epsilon_omega(d, build_model2(GRID).restrict(d.qubits), layer_samples=200, rng=rng, covariance=True)
    assert est.covariance is not None and np.isfinite(est.covariance)
    assert est.layers == 200 and est.stderr > 0


def test_model_width_check(rng):
    with pytest.raises(ValueError):
        epsilon_omega(design(2), build_model1(GRID), layer_samples=10, rng=rng)
