import json
import math

import numpy as np
import pytest

from spinframe.clifford import Multivector, blade, exp_even, reverse
from spinframe.generators import random_product, random_rotation, random_type_a, random_type_b
from spinframe.spin_field import (
    Constant,
    FDConfig,
    PaperExample,
    Product,
    Rotation,
    TypeA,
    TypeB,
    check_spin,
    evaluate,
    field_jet,
    killing_extract,
    partial,
    spec_from_dict,
    spec_to_dict,
)

ONE = Rotation((4, 5), "0")
S2 = 1 / math.sqrt(2)


def random_point(rng, radius=1.2):
    return rng.uniform(-radius, radius, size=4)


def test_evaluate_examples():
    pe = PaperExample()
    assert evaluate(pe, (0.7, 0, 0, 0)) == Multivector.scalar(1.0)
    assert evaluate(pe, (0, 1, 0, 0)).max_diff(S2 - S2 * blade(1, 5)) < 1e-15
    assert evaluate(ONE, (0.1, 0.2, 0.3, 0.4)) == Multivector.scalar(1.0)


def test_rotation_matches_series_exponential():
    spec = Rotation((2, 7), "x1 + 0.5*x3^2")
    x = (0.2, 0.4, -0.3, 0.9)
    theta = 0.4 + 0.5 * 0.81
    assert evaluate(spec, x).max_diff(exp_even((theta / 2) * blade(2, 7))) < 1e-14
    boost = Rotation((0, 3), "x2")
    assert evaluate(boost, x).max_diff(exp_even((-0.3 / 2) * blade(0, 3))) < 1e-14


def test_partial_examples():
    zero = Multivector.zero()
    assert partial(Rotation((1, 2), "0.3"), (0, 0, 0, 0), 2) == zero
    d1 = partial(PaperExample(), (0, 0, 0, 0), 1)
    assert d1.max_diff(-blade(1, 5)) < 1e-15
    d1_fd = partial(PaperExample(), (0, 0, 0, 0), 1, FDConfig(1e-6), "fd")
    assert d1_fd.max_diff(-blade(1, 5)) < 1e-9


def test_partial_ad_matches_fd_on_random_fields():
    rng = np.random.default_rng(10)
    for _ in range(10):
        spec = random_product(rng)
        x = random_point(rng)
        for a in range(4):
            ad = partial(spec, x, a)
            fd = partial(spec, x, a, FDConfig(1e-6), "fd")
            assert ad.max_diff(fd) < 1e-7


def test_second_derivatives_match_fd():
    rng = np.random.default_rng(11)
    spec = random_product(rng, 3)
    x = random_point(rng)
    jet = field_jet(spec, x, 2)
    h = 1e-5
    for a in range(4):
        xp, xm = x.copy(), x.copy()
        xp[a] += h
        xm[a] -= h
        dp, dm = field_jet(spec, xp, 1).d, field_jet(spec, xm, 1).d
        for b in range(4):
            fd = (dp[b] - dm[b]) * (1 / (2 * h))
            assert jet.dd[a][b].max_diff(fd) < 1e-8


def test_fd_config_validation():
    with pytest.raises(ValueError):
        FDConfig(step=-1e-5)
    with pytest.raises(ValueError):
        FDConfig(scheme="forward")


def test_family_validation():
    with pytest.raises(ValueError):
        TypeA(3, "1", ("0",) * 4)
    with pytest.raises(ValueError):
        TypeB(4, "1", ("0",) * 6)
    with pytest.raises(ValueError):
        Rotation((5, 5), "x0")
    with pytest.raises(ValueError):
        Product(())


def test_check_spin_examples():
    rng = np.random.default_rng(12)
    for _ in range(5):
        rep = check_spin(PaperExample(), random_point(rng))
        assert rep.ok and rep.normalization_residual < 1e-12
    rep = check_spin(Multivector.scalar(1.0))
    assert rep.ok and rep.normalization_residual == 0.0 and max(rep.sandwich_residuals) == 0.0


def test_check_spin_even_non_spinor():
    T = (blade(1, 2) + blade(3, 4, 5, 6)) * S2
    rep = check_spin(Constant(T))
    assert rep.normalized
    assert rep.sandwich_grade_ok[1] is False
    assert rep.failing_indices() == [1, 2, 3, 4, 5, 6]
    assert rep.frame[1] == blade(2, 3, 4, 5, 6) * (2 * S2 * S2)
    assert rep.frame[1].max_diff(blade(2, 3, 4, 5, 6)) < 1e-15
    # the other ordering, psi reverse(psi), also normalizes
    assert rep.right_normalization_residual < 1e-15


def test_killing_extract_identity():
    data = killing_extract(ONE, (0.3, 0.1, 0.2, 0.4))
    assert all(k == Multivector.zero() for k in data.K)
    assert max(data.grade2_residual) == 0 and max(data.reconstruction_residual) == 0


def test_killing_extract_rotation():
    data = killing_extract(Rotation((4, 5), "x0"), (0.3, -0.2, 0.5, 0.1))
    assert data.K[0].max_diff(0.5 * blade(4, 5)) < 1e-14
    for a in (1, 2, 3):
        assert data.K[a].max_abs() < 1e-14
    assert max(data.grade2_residual + data.reconstruction_residual) < 1e-14


def test_killing_extract_preset_example_origin():
    data = killing_extract(PaperExample(), (0, 0, 0, 0))
    assert data.K[0].max_abs() == 0
    for a in (1, 2, 3):
        assert data.K[a].max_diff(-blade(a, 5)) < 1e-15
    fd = killing_extract(PaperExample(), (0, 0, 0, 0), FDConfig(1e-5), "fd")
    for a in (1, 2, 3):
        assert fd.K[a].max_diff(-blade(a, 5)) < 1e-9


@pytest.mark.parametrize("maker", [random_type_a, random_type_b, random_rotation, random_product])
def test_random_fields_are_spin_fields(maker):
    rng = np.random.default_rng(13)
    for _ in range(50):
        spec = maker(rng)
        x = random_point(rng)
        data = killing_extract(spec, x)
        assert data.normalization_residual < 1e-8
        assert max(data.grade2_residual) < 1e-8
        assert max(data.reconstruction_residual) < 1e-8


def test_product_of_spin_fields_is_spin_field():
    rng = np.random.default_rng(14)
    for _ in range(20):
        spec = random_product(rng, 3)
        rep = check_spin(spec, random_point(rng), 1e-9)
        assert rep.ok, rep.failing_indices()


def test_unnormalized_field_is_flagged():
    spec = TypeA(5, "1", ("x1", "0", "0", "0"))
    data = killing_extract(spec, (0, 0.5, 0, 0))
    assert abs(data.normalization_residual - 0.25) < 1e-15
    assert not check_spin(spec, (0, 0.5, 0, 0)).normalized
    # normalization error propagates through a product
    prod = Product((PaperExample(), spec))
    assert check_spin(prod, (0, 0.5, 0, 0)).normalization_residual > 0.1


def test_reverse_normalization_of_preset_example():
    psi = evaluate(PaperExample(), (0.1, 0.4, -0.7, 0.2))
    assert (reverse(psi) * psi).max_diff(Multivector.scalar(1.0)) < 1e-15


def test_json_round_trip():
    rng = np.random.default_rng(15)
    specs = [PaperExample(), ONE, Constant(blade(1, 2) * 0.5), random_product(rng, 3)]
    for spec in specs:
        d = spec_to_dict(spec)
        back = spec_from_dict(json.loads(json.dumps(d)))
        assert spec_to_dict(back) == d
        x = random_point(rng)
        assert evaluate(back, x).max_diff(evaluate(spec, x)) == 0.0
    with pytest.raises(ValueError):
        spec_from_dict({"family": "nope"})
