import math

import numpy as np
import pytest

from conftest import WORKED_A, WORKED_B, WORKED_PROB, equal_up_to_phase
from mlae_lab.loader import (
    AngleTree,
    LoaderError,
    UnitVector,
    ae_circuit,
    angles_for,
    good_probability,
    grover_iterate,
    grover_probability,
    inner_product_circuit,
    load,
    loader_circuit,
    unary_amplitudes,
)
from mlae_lab.qsim import Circuit, run, unitary_of


def unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def reconstruct_oracle(tree: AngleTree) -> np.ndarray:
    """Rebuild leaves by walking blocks explicitly (independent of AngleTree.reconstruct)."""
    d = tree.dim
    leaves = np.ones(d)
    for j, level in enumerate(tree.levels):
        width = d >> j
        for i, theta in enumerate(level):
            lo, mid, hi = i * width, i * width + width // 2, (i + 1) * width
            leaves[lo:mid] *= math.cos(theta)
            leaves[mid:hi] *= math.sin(theta)
    return leaves


def test_unit_vector_validation():
    with pytest.raises(LoaderError):
        UnitVector((0.6, 0.6))
    with pytest.raises(LoaderError):
        UnitVector((1.0, 0.0, 0.0))
    with pytest.raises(LoaderError):
        UnitVector.from_values([1.0, 0.1])


def test_from_values_renormalizes_rounded_input():
    v = UnitVector.from_values(WORKED_A)
    assert abs(sum(x * x for x in v.components) - 1) <= 1e-10


def test_basis_vector_angle():
    assert angles_for([1.0, 0.0]).levels == ((0.0,),)


def test_worked_vector_angle():
    (theta,), = angles_for(WORKED_A).levels
    norm = math.hypot(*WORKED_A)
    assert math.cos(theta) == pytest.approx(WORKED_A[0] / norm, abs=1e-15)
    assert math.sin(theta) == pytest.approx(WORKED_A[1] / norm, abs=1e-15)
    assert math.cos(theta) == pytest.approx(-0.96184207, abs=1e-8)
    assert math.sin(theta) == pytest.approx(0.27360523, abs=1e-8)


def test_zero_pairs_get_zero_angle():
    tree = angles_for([0.0, 0.0, 0.6, -0.8])
    assert tree.levels[1][0] == 0.0


@pytest.mark.parametrize("d", [2, 4, 8])
def test_tree_reconstruction(d):
    rng = np.random.default_rng(d)
    for _ in range(200):
        v = unit(rng, d)
        tree = angles_for(v)
        assert np.max(np.abs(reconstruct_oracle(tree) - v)) <= 1e-12
        assert np.max(np.abs(tree.reconstruct() - v)) <= 1e-12


def test_loader_of_first_basis_vector():
    psi = run(load([1.0, 0.0, 0.0, 0.0]))
    assert abs(psi[0b0001]) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_loader_layout_4d():
    # a|0001> + b|0010> + c|0100> + d|1000>
    v = np.array([0.1, -0.7, 0.5, 0.5])
    v /= np.linalg.norm(v)
    psi = run(load(v))
    for label, amp in zip(("0001", "0010", "0100", "1000"), v):
        assert psi[int(label, 2)] == pytest.approx(amp, abs=1e-12)


def test_worked_2d_loader():
    psi = run(load(WORKED_A))
    amps = unary_amplitudes(psi, 2)
    target = np.array(WORKED_A) / np.linalg.norm(WORKED_A)
    assert equal_up_to_phase(amps, target, 1e-12)
    assert amps[0].real == pytest.approx(-0.96184207, abs=1e-8)


def test_loader_correctness_random():
    rng = np.random.default_rng(101)
    for i in range(1000):
        d = (2, 4, 8)[i % 3]
        v = unit(rng, d)
        psi = run(load(v))
        expected = np.zeros(2**d, dtype=complex)
        expected[[1 << k for k in range(d)]] = v
        assert equal_up_to_phase(psi, expected, 1e-10)


def test_loader_gate_structure():
    c = load(unit(np.random.default_rng(0), 8))
    assert c.count_ops() == {"X": 1, "RBS": 7}


def test_loader_rejects_dimension():
    with pytest.raises(LoaderError):
        loader_circuit(AngleTree(16, ()))


def test_adjoint_property():
    rng = np.random.default_rng(5)
    for d in (2, 4, 8):
        for _ in range(5):
            c = load(unit(rng, d))
            u = unitary_of(c.compose(c.inverse()))
            assert equal_up_to_phase(u, np.eye(2**d), 1e-10)


def test_inner_product_self():
    v = unit(np.random.default_rng(1), 4)
    assert inner_product_circuit(v, v).amplitude() == pytest.approx(1.0, abs=1e-12)


def test_inner_product_worked_pair():
    spec = inner_product_circuit(WORKED_A, WORKED_B)
    assert spec.good_qubit == 0
    # input precision: 8 printed decimals per component
    assert spec.amplitude() == pytest.approx(WORKED_PROB, abs=1e-8)


def test_inner_product_orthogonal():
    assert inner_product_circuit([0.6, 0.8, 0, 0], [-0.8, 0.6, 0, 0]).amplitude() == pytest.approx(0.0, abs=1e-10)


def test_inner_product_dimension_mismatch():
    with pytest.raises(LoaderError):
        inner_product_circuit([1, 0], [1, 0, 0, 0])


def test_inner_product_law_random():
    rng = np.random.default_rng(202)
    for i in range(1000):
        d = (2, 4, 8)[i % 3]
        a, b = unit(rng, d), unit(rng, d)
        psi = run(inner_product_circuit(a, b).circuit_A)
        assert abs(psi[1]) ** 2 == pytest.approx(float(a @ b) ** 2, abs=1e-10)


def test_iterate_on_orthogonal_pair():
    spec = inner_product_circuit([1, 0, 0, 0], [0, 0, 1, 0])
    for m in range(4):
        assert good_probability(run(ae_circuit(spec, m))) == pytest.approx(0.0, abs=1e-12)


def test_one_iterate_worked_pair():
    spec = inner_product_circuit(WORKED_A, WORKED_B)
    a = spec.amplitude()
    theta = math.asin(math.sqrt(a))
    assert good_probability(run(ae_circuit(spec, 1))) == pytest.approx(math.sin(3 * theta) ** 2, abs=1e-12)


def test_iterate_matches_dense_reflections():
    rng = np.random.default_rng(303)
    for d in (2, 4, 8):
        for _ in range(3):
            spec = inner_product_circuit(unit(rng, d), unit(rng, d))
            unary = [1 << k for k in range(d)]
            q = unitary_of(grover_iterate(spec))[np.ix_(unary, unary)]
            psi = run(spec.circuit_A)[unary]
            good = np.zeros((d, d))
            good[0, 0] = 1.0
            dense = (np.eye(d) - 2 * np.outer(psi, psi.conj())) @ (np.eye(d) - 2 * good)
            assert equal_up_to_phase(q, dense, 1e-9)


def test_ae_circuit_m0_is_a():
    spec = inner_product_circuit([0.5, 0.5, 0.5, 0.5], [1, 0, 0, 0])
    assert ae_circuit(spec, 0).gates == spec.circuit_A.gates


def test_ae_circuit_quarter_amplitude():
    spec = inner_product_circuit([0.5, 0.5, 0.5, 0.5], [1, 0, 0, 0])
    assert spec.amplitude() == pytest.approx(0.25, abs=1e-12)
    assert good_probability(run(ae_circuit(spec, 1))) == pytest.approx(1.0, abs=1e-12)


def test_ae_circuit_gate_count():
    spec = inner_product_circuit([0.5, 0.5, 0.5, 0.5], [0.1, 0.7, 0.7, 0.1])
    assert len(ae_circuit(spec, 7)) == len(spec.circuit_A) + 7 * len(grover_iterate(spec))


def test_ae_circuit_negative_power():
    spec = inner_product_circuit([1, 0], [1, 0])
    with pytest.raises(LoaderError):
        ae_circuit(spec, -1)


def test_grover_probability_closed_form():
    assert grover_probability(0.25, 1) == pytest.approx(1.0, abs=1e-15)
    assert grover_probability(0.0, 5) == 0.0


def test_amplification_law_sample():
    rng = np.random.default_rng(404)
    for _ in range(20):
        a, b = unit(rng, 4), unit(rng, 4)
        spec = inner_product_circuit(a, b)
        amp = float(a @ b) ** 2
        for m in range(8):
            assert good_probability(run(ae_circuit(spec, m))) == pytest.approx(grover_probability(amp, m), abs=1e-9)


def test_circuit_json_interchange():
    c = load([0.6, 0.8])
    assert Circuit.from_json(c.to_json()) == c
