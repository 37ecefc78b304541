import math
import warnings

import numpy as np
import pytest

from spinframe.clifford import Multivector, blade, exp_even
from spinframe.generators import random_type_a, random_type_b
from spinframe.geometry import ConnectionAtPoint, connection_field, reconstruct_bivectors, split_connection
from spinframe.solutions import (
    CompositionMismatchWarning,
    GradePurityError,
    NormalizationError,
    SingularGaugeError,
    TypeAPoint,
    TypeBPoint,
    closed_connection,
    compose_connection_A,
    compose_connection_B,
    composition_oracle,
    conjugate_bivector,
    formula_discrepancies,
    printed_compose_A,
    printed_compose_B,
    typeA_closed_connection,
    typeB_closed_connection,
)
from spinframe.spin_field import PaperExample, Product, TypeA, TypeB


def random_conn(rng, scale=1.0):
    W = rng.normal(size=(4, 10, 10)) * scale
    return ConnectionAtPoint(W - np.swapaxes(W, 1, 2))


def random_params(rng, kind):
    x = rng.uniform(-1, 1, 4)
    if kind == "A":
        return TypeAPoint.from_spec(random_type_a(rng), x)
    return TypeBPoint.from_spec(random_type_b(rng), x)


def test_preset_example_closed_form():
    c = typeA_closed_connection(PaperExample(), (0, 0, 0, 0))
    for mu in (1, 2, 3):
        assert abs(c.H[mu, mu, 1] + 2.0) < 1e-15
    assert np.max(np.abs(c.omega)) == 0.0
    c = typeA_closed_connection(PaperExample(), (0, 1, 0, 0))
    assert abs(c.W[1, 1, 3]) < 1e-15 and abs(c.W[2, 1, 2] + 1.0) < 1e-15


def test_single_coefficient_type_a_is_flat():
    spec = TypeA(7, "1/sqrt(1 + (x1 + x2*x3)^2)", ("0", "(x1 + x2*x3)/sqrt(1 + (x1 + x2*x3)^2)", "0", "0"))
    c = typeA_closed_connection(spec, (0.2, 0.5, -0.3, 0.8))
    assert np.max(np.abs(c.omega)) == 0.0
    assert np.max(np.abs(c.H)) > 0.1


def test_type_b_closed_form_examples():
    spec = TypeB(1, "1/sqrt(1 + x1^2)", ("x1/sqrt(1 + x1^2)", "0", "0", "0", "0", "0"))
    for u in (-1.0, 0.3, 2.0):
        c = typeB_closed_connection(spec, (0, u, 0, 0))
        assert abs(c.H[1, 1, 0] - 2 / (1 + u * u)) < 1e-14
        assert np.max(np.abs(c.A)) == 0.0 and np.max(np.abs(c.omega)) == 0.0
    rng = np.random.default_rng(30)
    for _ in range(10):
        assert np.max(np.abs(typeB_closed_connection(random_type_b(rng), rng.uniform(-1, 1, 4)).omega)) == 0.0


@pytest.mark.parametrize("maker", [random_type_a, random_type_b])
def test_closed_form_matches_extraction(maker):
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(50):
        spec = maker(rng)
        x = rng.uniform(-1.5, 1.5, 4)
        worst = max(worst, closed_connection(spec, x).max_diff(connection_field(spec, x)))
    assert worst < 1e-8


def test_singular_gauge_and_normalization_errors():
    p = TypeAPoint(5, 0.0, [0, 1, 0, 0])
    with pytest.raises(SingularGaugeError):
        typeA_closed_connection(p)
    with pytest.raises(NormalizationError):
        typeA_closed_connection(TypeAPoint(5, 1.0, [0, 0.5, 0, 0]))
    with pytest.raises(NormalizationError):
        typeB_closed_connection(TypeBPoint(2, 1.0, [0.5, 0, 0, 0, 0, 0]))
    # timelike tangent index: f^2 - <g, g> = 1
    b = TypeBPoint(0, math.sqrt(1.25), [0.5, 0, 0, 0, 0, 0])
    assert np.max(np.abs(typeB_closed_connection(b).W)) == 0.0


def test_conjugate_bivector_examples():
    K = blade(1, 5)
    assert conjugate_bivector(Multivector.scalar(1.0), K) == K
    th = 0.3
    out = conjugate_bivector(exp_even((th / 2) * blade(1, 2)), K)
    assert out.max_diff(math.cos(th) * blade(1, 5) - math.sin(th) * blade(2, 5)) < 1e-15
    bad = exp_even(0.2 * blade(1, 2)) + 0.1 * blade(3, 4, 5, 6)
    with pytest.raises(GradePurityError):
        conjugate_bivector(bad, K)


def test_compose_identity_cases():
    rng = np.random.default_rng(32)
    for kind, compose in (("A", compose_connection_A), ("B", compose_connection_B)):
        p = random_params(rng, kind)
        out = compose(p, ConnectionAtPoint.zero(), verify=False)
        closed = typeA_closed_connection(p) if kind == "A" else typeB_closed_connection(p)
        assert out.conn.max_diff(closed) < 1e-14
        conn2 = random_conn(rng)
        if kind == "A":
            one = TypeAPoint(int(rng.integers(4, 10)), 1.0, np.zeros(4))
        else:
            one = TypeBPoint(int(rng.integers(0, 4)), 1.0, np.zeros(6))
        assert compose(one, conn2, verify=False).conn.max_diff(conn2) == 0.0


@pytest.mark.parametrize("kind", ["A", "B"])
def test_compose_matches_conjugation_oracle(kind):
    rng = np.random.default_rng(33)
    compose = compose_connection_A if kind == "A" else compose_connection_B
    worst = 0.0
    for _ in range(100):
        p = random_params(rng, kind)
        conn2 = random_conn(rng)
        got = compose(p, conn2, verify=False)
        worst = max(worst, got.conn.max_diff(composition_oracle(p, conn2)))
        assert got.conn.antisymmetry_residual() == 0.0
    assert worst < 1e-10


@pytest.mark.parametrize("kind", ["A", "B"])
def test_compose_matches_product_extraction(kind):
    rng = np.random.default_rng(34)
    maker = random_type_a if kind == "A" else random_type_b
    compose = compose_connection_A if kind == "A" else compose_connection_B
    cls = TypeAPoint if kind == "A" else TypeBPoint
    for _ in range(10):
        psi1, psi2 = maker(rng), (random_type_a if rng.random() < 0.5 else random_type_b)(rng)
        x = rng.uniform(-1, 1, 4)
        composed = compose(cls.from_spec(psi1, x), connection_field(psi2, x), verify=False)
        assert composed.conn.max_diff(connection_field(Product((psi1, psi2)), x)) < 1e-12


@pytest.mark.parametrize("kind", ["A", "B"])
def test_composition_is_affine_in_second_connection(kind):
    rng = np.random.default_rng(35)
    compose = compose_connection_A if kind == "A" else compose_connection_B
    for _ in range(20):
        p = random_params(rng, kind)
        a, b = random_conn(rng), random_conn(rng)
        ab = ConnectionAtPoint(a.W + b.W)
        W = lambda c: compose(p, c, verify=False).conn.W
        sup = W(ab) - W(a) - W(b) + W(ConnectionAtPoint.zero())
        assert np.max(np.abs(sup)) < 1e-12


def test_verify_falls_back_to_oracle_on_mismatch(monkeypatch):
    import spinframe.solutions as sol

    rng = np.random.default_rng(36)
    p = random_params(rng, "A")
    conn2 = random_conn(rng)
    monkeypatch.setattr(sol, "_conjugated_A", lambda p, W2: W2)
    with pytest.warns(CompositionMismatchWarning):
        out = sol._compose(p, conn2, sol._conjugated_A, typeA_closed_connection, True)
    assert out.conn.max_diff(composition_oracle(p, conn2)) == 0.0
    assert out.oracle_residual > 1e-3


def test_verify_is_silent_when_formulas_agree():
    rng = np.random.default_rng(37)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = compose_connection_B(random_params(rng, "B"), random_conn(rng))
    assert out.oracle_residual < 1e-10


def test_printed_formulas_reproduce_trivial_cases():
    # with psi1 = 1 both transcriptions pass conn2 straight through
    rng = np.random.default_rng(38)
    conn2 = random_conn(rng)
    assert printed_compose_A(TypeAPoint(5, 1.0, np.zeros(4)), conn2).max_diff(conn2) < 1e-15
    assert printed_compose_B(TypeBPoint(1, 1.0, np.zeros(6)), conn2).max_diff(conn2) < 1e-15
    # type B with conn2 = 0 reduces to the closed form
    p = random_params(rng, "B")
    assert printed_compose_B(p, ConnectionAtPoint.zero()).max_diff(typeB_closed_connection(p)) < 1e-14


def test_printed_formula_discrepancies_are_localized():
    rng = np.random.default_rng(39)
    pa = random_params(rng, "A")
    rep = formula_discrepancies(pa, ConnectionAtPoint.zero())
    assert set(rep) == {"omega", "H^{mu n}", "H^{mu i}", "A^{n i}", "A^{i j}"}
    # the extrinsic-curvature display leaves out the first factor's own term
    assert rep["H^{mu n}"] > 1e-3
    assert max(v for k, v in rep.items() if k != "H^{mu n}") < 1e-12
    pb = random_params(rng, "B")
    rep = formula_discrepancies(pb, ConnectionAtPoint.zero())
    assert max(rep.values()) < 1e-12


def test_serialization_echoes_inputs():
    rng = np.random.default_rng(40)
    out = compose_connection_A(random_params(rng, "A"), random_conn(rng)).to_dict()
    assert set(out["inputs"]) == {"psi1", "conn1", "conn2"}
    assert out["inputs"]["psi1"]["family"] == "typeA"
    assert "oracle_residual" in out


def test_oracle_reads_back_reconstructed_bivectors():
    rng = np.random.default_rng(41)
    conn2 = random_conn(rng)
    one = TypeAPoint(4, 1.0, np.zeros(4))
    assert composition_oracle(one, conn2).max_diff(split_connection(reconstruct_bivectors(conn2.W))) < 1e-15
