import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swlab.hilbert import DiscreteMeasure, basis_vector
from swlab.selftest import random_discrete_measure
from swlab.sliced import (
    check_sw_leq_w,
    check_theta_lipschitz,
    check_uniform_bound,
    per_direction_wpp,
    sw_estimate,
    sw_finite_uniform,
)
from swlab.surface import GaussianReference, sample_directions

DIRS = {d: sample_directions(GaussianReference.poly(0.5, d), 128, seed=d) for d in (2, 5)}


def measures(d):
    return st.integers(0, 2**32 - 1).map(lambda s: random_discrete_measure(np.random.default_rng(s), d))


@given(st.sampled_from([2, 5]).flatmap(lambda d: st.tuples(st.just(d), measures(d), measures(d), measures(d))),
       st.sampled_from([1.0, 2.0, 2.5]))
def test_metric_axioms_with_shared_directions(case, p):
    d, a, b, c = case
    dirs = DIRS[d]
    ab, ba = sw_estimate(a, b, p, dirs), sw_estimate(b, a, p, dirs)
    assert ab.value == ba.value
    assert sw_estimate(a, a, p, dirs).value == 0.0
    assert sw_estimate(a, c, p, dirs).value <= ab.value + sw_estimate(b, c, p, dirs).value + 1e-10


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0]))
def test_sw_leq_w_per_direction(seed, p):
    rng = np.random.default_rng(seed)
    a, b = random_discrete_measure(rng, 5), random_discrete_measure(rng, 5)
    rep = check_sw_leq_w(a, b, p, DIRS[5])
    assert rep.ok, rep


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.0]))
def test_lipschitz_and_uniform_bound(seed, p):
    rng = np.random.default_rng(seed)
    a, b = random_discrete_measure(rng, 5), random_discrete_measure(rng, 5)
    theta = DIRS[5].directions
    gamma = sample_directions(GaussianReference.isotropic(5), len(theta), seed=seed % 1000).directions
    for rep in check_theta_lipschitz(a, b, p, theta, gamma):
        assert rep.ok, rep
    assert check_uniform_bound(a, b, p, per_direction_wpp(a, b, p, theta)).ok


def test_lipschitz_slack_closed_form():
    # W_1(theta) = |theta_1| for delta_{e_1} vs delta_0; constant M = 1
    a = DiscreteMeasure.dirac(basis_vector(1, 2))
    b = DiscreteMeasure.dirac(np.zeros(2))
    wp, wpp = check_theta_lipschitz(a, b, 1.0, np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
    assert wp.ok and wp.worst_slack == pytest.approx(math.sqrt(2) - 1)
    assert wpp.worst_slack == pytest.approx(math.sqrt(2) - 1)


def test_dirac_pair_closed_form():
    # W_1 between projections of delta_x and delta_0 is |<theta, x>|
    x = np.array([3.0, 4.0])
    dirs = DIRS[2]
    est = sw_estimate(DiscreteMeasure.dirac(x), DiscreteMeasure.dirac(np.zeros(2)), 1.0, dirs)
    assert est.value == pytest.approx(np.mean(np.abs(dirs.directions @ x)), rel=1e-13)


def test_finite_baseline_isotropy():
    # E|theta_1| = 2/pi for uniform directions on the circle
    a = DiscreteMeasure.dirac(np.zeros(2))
    b = DiscreteMeasure.dirac(np.array([1.0, 0.0]))
    est = sw_finite_uniform(a, b, 1.0, 40_000, seed=9)
    assert abs(est.value - 2 / math.pi) < 4 * est.std_error


def test_threads_do_not_change_values(rng):
    a, b = random_discrete_measure(rng, 5), random_discrete_measure(rng, 5)
    dirs = sample_directions(GaussianReference.isotropic(5), 1000, seed=1)
    one = per_direction_wpp(a, b, 2.0, dirs.directions, threads=1)
    four = per_direction_wpp(a, b, 2.0, dirs.directions, threads=4)
    assert np.array_equal(one, four)


def test_dimension_mismatch(rng):
    from swlab.errors import InputError

    with pytest.raises(InputError):
        sw_estimate(random_discrete_measure(rng, 5), random_discrete_measure(rng, 2), 1.0, DIRS[5])
