import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorrb.clifford import (
    CLIFFORD_INVERSE,
    CLIFFORD_PRODUCT,
    CLIFFORD_UNITARIES,
    CX_SLOT,
    IDLE,
    NUM_CLIFFORDS,
    Z_ROTATION_IDS,
    Layer,
    PauliString,
    clifford_images,
    compose_pauli,
    conjugate_by_layer,
    invert_layer,
)
from mirrorrb.errors import DimensionError, LayerError

P = PauliString.from_label


def paulis(n):
    return st.builds(
        lambda x, z: PauliString(n, x, z),
        st.integers(0, 2**n - 1),
        st.integers(0, 2**n - 1),
    )


@st.composite
def layers(draw, n=4):
    cnots = []
    free = list(range(n))
    if draw(st.booleans()) and n >= 2:
        a, b = draw(st.permutations(free))[:2]
        cnots.append((a, b))
    gates = {q: draw(st.integers(-1, 23)) for q in range(n) if all(q not in c for c in cnots)}
    return Layer.build(n, gates, cnots)


class TestPauliString:
    def test_labels_round_trip(self):
        for label in ("I", "X", "Y", "Z", "XYZI", "IIZX"):
            assert P(label).label == label

    def test_identity_and_weight(self):
        assert P("III").is_identity
        assert not P("IXI").is_identity
        assert P("XIYZ").weight == 3
        assert P("XIYZ").support == (0, 2, 3)

    def test_compose_examples(self):
        assert compose_pauli(P("XI"), P("XI")) == P("II")
        assert compose_pauli(P("XI"), P("ZI")) == P("YI")
        assert compose_pauli(P("XYI"), P("IYZ")).weight == 2

    def test_size_mismatch(self):
        with pytest.raises(DimensionError):
            compose_pauli(P("X"), P("XX"))

    def test_bad_label(self):
        with pytest.raises(ValueError):
            P("XQ")

    def test_commutation(self):
        assert not P("X").commutes_with(P("Z"))
        assert P("XX").commutes_with(P("ZZ"))

    @given(paulis(5), paulis(5))
    def test_composition_is_xor(self, p, q):
        r = p * q
        assert (r.x, r.z) == (p.x ^ q.x, p.z ^ q.z)
        assert 0 <= r.weight <= 5


class TestCliffordGroup:
    def test_exactly_24_distinct_unitaries(self):
        mats = np.asarray(CLIFFORD_UNITARIES)
        assert mats.shape == (NUM_CLIFFORDS, 2, 2)
        for i in range(NUM_CLIFFORDS):
            for j in range(i):
                # equal up to global phase iff |tr(U^dag V)| = 2
                assert abs(np.trace(mats[i].conj().T @ mats[j])) < 2 - 1e-9

    def test_closure_and_inverse(self):
        table = np.asarray(CLIFFORD_PRODUCT)
        assert table.shape == (24, 24)
        for a in range(24):
            assert sorted(table[a]) == list(range(24))
            assert table[a, CLIFFORD_INVERSE[a]] == 0
            assert table[CLIFFORD_INVERSE[a], a] == 0

    def test_product_matches_matrices(self):
        u = np.asarray(CLIFFORD_UNITARIES)
        for a in range(24):
            for b in range(24):
                prod = u[b] @ u[a]  # a first, then b
                c = CLIFFORD_PRODUCT[a][b]
                assert np.isclose(abs(np.trace(u[c].conj().T @ prod)), 2)

    def test_named_elements(self):
        assert clifford_images(0) == ("+X", "+Z")
        assert clifford_images(4) == ("+Z", "+X")  # Hadamard
        assert clifford_images(8)[0] == "+Y"  # S: X -> Y
        assert set(Z_ROTATION_IDS) == {0, 3, 8, 11}
        for g in Z_ROTATION_IDS:
            assert clifford_images(g)[1] == "+Z"

    def test_symplectic_action_preserves_anticommutation(self):
        n = 1
        for g in range(24):
            layer = Layer(n, (g,))
            x, z = conjugate_by_layer(P("X"), layer), conjugate_by_layer(P("Z"), layer)
            assert not x.commutes_with(z)


class TestLayer:
    def test_build_marks_slots(self):
        layer = Layer.build(3, {0: 5}, [(1, 2)])
        assert layer.gates == (5, CX_SLOT, CX_SLOT)
        assert Layer.build(2).gates == (IDLE, IDLE)

    def test_rejects_overlapping_cnots(self):
        with pytest.raises(LayerError):
            Layer.build(3, None, [(0, 1), (1, 2)])

    def test_rejects_gate_on_cnot_endpoint(self):
        with pytest.raises(LayerError):
            Layer(2, (3, CX_SLOT), ((0, 1),))

    def test_rejects_bad_gate_id(self):
        with pytest.raises(LayerError):
            Layer(1, (24,))

    def test_validate_against_edges(self):
        layer = Layer.build(3, None, [(0, 2)])
        with pytest.raises(LayerError):
            layer.validate([(0, 1), (1, 2)])
        layer.validate([(0, 2)])


class TestConjugation:
    def test_cnot_spreads_x(self):
        assert conjugate_by_layer(P("XI"), Layer.build(2, None, [(0, 1)])) == P("XX")
        assert conjugate_by_layer(P("IZ"), Layer.build(2, None, [(0, 1)])) == P("ZZ")

    def test_hadamard_swaps(self):
        assert conjugate_by_layer(P("Z"), Layer(1, (4,))) == P("X")

    def test_identity_fixed(self):
        layer = Layer.build(3, {2: 7}, [(0, 1)])
        assert conjugate_by_layer(P("III"), layer).is_identity

    def test_matches_unitaries(self):
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Z": np.diag([1, -1])}
        mats["Y"] = 1j * mats["X"] @ mats["Z"]
        for g in range(24):
            u = CLIFFORD_UNITARIES[g]
            for letter in "XYZ":
                img = conjugate_by_layer(P(letter), Layer(1, (g,))).label
                assert np.isclose(abs(np.trace(mats[img].conj().T @ u @ mats[letter] @ u.conj().T)), 2)

    @given(paulis(4), paulis(4), layers())
    def test_homomorphism(self, p, q, layer):
        lhs = conjugate_by_layer(p * q, layer)
        assert lhs == conjugate_by_layer(p, layer) * conjugate_by_layer(q, layer)

    @given(paulis(4), layers())
    def test_inverse_undoes(self, p, layer):
        assert conjugate_by_layer(conjugate_by_layer(p, layer), invert_layer(layer)) == p


class TestInvertLayer:
    def test_identity_layer(self):
        assert invert_layer(Layer.identity(3)) == Layer.identity(3)

    def test_cnot_self_inverse(self):
        layer = Layer.build(2, None, [(1, 0)])
        assert invert_layer(layer) == layer

    def test_all_24(self):
        for g in range(24):
            inv = invert_layer(Layer(1, (g,)))
            assert CLIFFORD_PRODUCT[g][inv.gates[0]] == 0
