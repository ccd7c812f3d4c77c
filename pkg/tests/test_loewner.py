import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from lddc.errors import (
    CoincidentPoints,
    ResolventSingular,
    SingularPencil,
    TruncationTooAggressive,
    ValidationError,
)
from lddc.loewner import (
    DescriptorSystem,
    LoewnerInterpolator,
    PointPartition,
    build_pencil,
    controller_poles,
    controller_zeros,
    eval_descriptor,
    minimal_order,
    partition_points,
    realize,
)
from lddc.plants import FreqResponseData, RationalLTI, make_log_grid, sample_response
from lddc.scenarios import loewner_order2_controller, loewner_order2_controller_alt

from conftest import random_stable_rational

K2 = loewner_order2_controller()
W_K2 = make_log_grid(1e-4, 1.0, 50)


def pencil_of(model, w):
    return build_pencil(partition_points(sample_response(model, w)))


def horner_k2(s):
    return 39.082 * (((s + 0.04164) * s) + 0.003132) / ((s + 0.002751) * s)


def max_rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def test_partition_alternates_pairs():
    d = FreqResponseData([1.0, 2.0, 3.0, 4.0], [1, 2j, 3, 4j])
    p = partition_points(d)
    np.testing.assert_array_equal(p.mu, [1j, -1j, 3j, -3j])
    np.testing.assert_array_equal(p.lam, [2j, -2j, 4j, -4j])
    np.testing.assert_array_equal(p.W, [2j, -2j, 4j, -4j])
    assert p.paired


@pytest.mark.parametrize("n", [4, 5, 6, 7, 31])
def test_partition_sizes_and_union(n):
    w = make_log_grid(0.1, 10, n)
    p = partition_points(FreqResponseData(w, 1 / (1j * w + 1)))
    assert abs(p.mu.size - p.lam.size) <= 2
    union = np.concatenate([p.mu, p.lam])
    assert union.size == np.unique(union).size == 2 * n
    expected = np.concatenate([1j * w, -1j * w])
    np.testing.assert_array_equal(np.sort_complex(union), np.sort_complex(expected))


def test_partition_needs_four_points():
    with pytest.raises(ValidationError):
        partition_points(FreqResponseData([1.0, 2.0, 3.0], [1, 1, 1]))


def test_pencil_hand_example():
    p = PointPartition(np.array([1j]), np.array([2.0 + 0j]), np.array([2j]), np.array([1.0 + 0j]))
    pen = build_pencil(p)
    assert pen.L[0, 0] == pytest.approx(1j)
    assert abs(pen.Ls[0, 0]) < 1e-15
    assert pen.real_form is None


def test_pencil_constant_data():
    w = make_log_grid(0.1, 10, 8)
    pen = build_pencil(partition_points(FreqResponseData(w, np.full(8, 3.0))))
    assert np.all(pen.L == 0)
    np.testing.assert_allclose(pen.Ls, 3.0)
    assert minimal_order(pen) == 0
    sys = realize(pen, 0)
    assert sys.order == 0 and sys.D == pytest.approx(3.0)
    assert eval_descriptor(sys, 5j) == pytest.approx(3.0)


def test_pencil_identities_hold():
    pen = pencil_of(K2, W_K2)
    assert pen.check() < 1e-10 * np.abs(pen.V).max()


def test_coincident_points():
    p = PointPartition(np.array([1j]), np.array([1.0 + 0j]), np.array([1j]), np.array([2.0 + 0j]))
    with pytest.raises(CoincidentPoints):
        build_pencil(p)


def test_k2_rank_on_twenty_points():
    pen = pencil_of(K2, make_log_grid(1e-4, 1.0, 20))
    assert minimal_order(pen) == 2
    s = pen.svals_L
    assert s[2] / s[0] < 1e-10


def test_first_order_rank_and_realization():
    w = make_log_grid(1e-2, 1e2, 40)
    pen = pencil_of(RationalLTI([1], [1, 1]), w)
    assert minimal_order(pen) == 1
    sys = realize(pen, 1)
    assert max_rel(eval_descriptor(sys, 1j * w), 1 / (1j * w + 1)) < 1e-8
    np.testing.assert_allclose(controller_poles(sys), [-1.0], atol=1e-8)


def test_k2_realization_interpolates():
    pen = pencil_of(K2, W_K2)
    sys = realize(pen, 2)
    assert max_rel(eval_descriptor(sys, 1j * W_K2), horner_k2(1j * W_K2)) < 1e-8
    assert abs(eval_descriptor(sys, 0.05j) / horner_k2(0.05j) - 1) < 1e-8


def test_k2_poles():
    sys = realize(pencil_of(K2, W_K2), 2)
    p = np.sort(controller_poles(sys).real)
    np.testing.assert_allclose(p, [-0.002751, 0.0], atol=1e-6)


def test_k2_alt_poles():
    sys = realize(pencil_of(loewner_order2_controller_alt(), W_K2), 2)
    p = np.sort(controller_poles(sys).real)
    np.testing.assert_allclose(p, [-0.002737, -1.026e-6], atol=1e-6)


def test_k2_zeros():
    sys = realize(pencil_of(K2, W_K2), 2)
    expected = np.roots([1.0, 0.04164, 0.003132])
    z = controller_zeros(sys)
    for e in expected:
        assert np.min(np.abs(z - e)) < 1e-6 * abs(e)


def test_truncation_beyond_rank():
    pen = pencil_of(K2, W_K2)
    with pytest.raises(TruncationTooAggressive):
        realize(pen, 3)
    with pytest.raises(ValidationError):
        realize(pen, 1000)
    with pytest.raises(ValidationError):
        realize(pen, -1)


def test_realize_needs_paired_partition():
    p = PointPartition(np.array([1j]), np.array([2.0 + 0j]), np.array([2j]), np.array([1.0 + 0j]))
    with pytest.raises(ValidationError):
        realize(build_pencil(p), 1)


def test_eval_descriptor_first_order():
    # E = A = -1 realizes 1/(1 - s), which is 1 at the origin
    sys = DescriptorSystem(-np.eye(1), -np.eye(1), np.ones((1, 1)), np.ones((1, 1)))
    assert eval_descriptor(sys, 0.0) == pytest.approx(1.0)
    assert eval_descriptor(sys, 2j) == pytest.approx(1 / (1 - 2j))


def test_eval_descriptor_resolvent_singular():
    sys = DescriptorSystem(np.eye(1), -np.eye(1), np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(ResolventSingular):
        eval_descriptor(sys, -1.0)


def test_singular_pencil_detected():
    z = np.zeros((2, 2))
    sys = DescriptorSystem(z, z, np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(SingularPencil):
        controller_poles(sys)


def test_descriptor_rejects_non_finite():
    with pytest.raises(ValidationError):
        DescriptorSystem(np.eye(1), np.array([[np.nan]]), np.ones((1, 1)), np.ones((1, 1)))


def test_descriptor_dict_round_trip():
    sys = realize(pencil_of(K2, W_K2), 2)
    d = json.loads(json.dumps(sys.to_dict()))
    assert set(d) == {"order", "E", "A", "B", "C", "D", "poles", "zeros"}
    back = DescriptorSystem.from_dict(d)
    for name in "EABC":
        np.testing.assert_array_equal(getattr(back, name), getattr(sys, name))
    assert back.D == sys.D
    assert "poles:" in sys.zpk_text() and "np.float64" not in sys.zpk_text()


def test_from_rational_matches_model():
    model = RationalLTI([2, 3], [1, 1])
    sys = DescriptorSystem.from_rational(model)
    s = 1j * make_log_grid(1e-2, 1e2, 20)
    np.testing.assert_allclose(eval_descriptor(sys, s), model(s), rtol=1e-12)
    with pytest.raises(ValidationError):
        DescriptorSystem.from_rational(RationalLTI([1, 0], [1]))


def test_interpolator_estimator():
    est = LoewnerInterpolator()
    assert clone(est).get_params() == {"order": None, "tol": 1e-10}
    est.fit(W_K2, horner_k2(1j * W_K2))
    assert est.order_ == 2
    assert est.score(W_K2, horner_k2(1j * W_K2)) > -1e-8


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), degree=st.integers(1, 10))
def test_order_recovery_and_exactness(seed, degree):
    rng = np.random.default_rng(seed)
    model = random_stable_rational(rng, degree)
    w = make_log_grid(1e-4, 10.0, max(4 * degree, 60))
    data = sample_response(model, w)
    pen = build_pencil(partition_points(data))
    assert minimal_order(pen) == degree
    sys = realize(pen, degree)
    assert max_rel(eval_descriptor(sys, 1j * w), data.samples) < 1e-8
    # realness: the realization is real, so conjugate points give conjugate values
    v = eval_descriptor(sys, 1j * w)
    np.testing.assert_allclose(eval_descriptor(sys, -1j * w), np.conj(v), rtol=1e-12)
