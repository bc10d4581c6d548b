import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from swlab.errors import InputError
from swlab.hilbert import (
    DiscreteMeasure,
    MeasureSpec,
    as_vector,
    basis_vector,
    inner,
    moment_p,
    norm,
    sample_measure,
)


def test_basis_is_one_based():
    e = basis_vector(3, 5)
    assert e.tolist() == [0, 0, 1, 0, 0]
    with pytest.raises(InputError):
        basis_vector(0, 5)
    with pytest.raises(InputError):
        basis_vector(6, 5)
    assert inner(e, e) == 1.0 and norm([3.0, 4.0]) == 5.0


def test_as_vector_validates():
    with pytest.raises(InputError):
        as_vector([1.0, np.nan])
    with pytest.raises(InputError):
        as_vector([1.0, 2.0], dimension=3)


def test_discrete_measure_normalizes_and_freezes():
    mu = DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]))
    np.testing.assert_allclose(mu.weights, [0.25, 0.75])
    assert not mu.points.flags.writeable
    with pytest.raises(InputError):
        DiscreteMeasure(np.array([[0.0]]), np.array([-1.0]))
    assert DiscreteMeasure.uniform(np.eye(4)).is_uniform


def test_moment_p():
    mu = DiscreteMeasure(np.array([[3.0, 4.0], [0.0, 0.0]]), np.array([0.5, 0.5]))
    assert moment_p(mu, 2) == pytest.approx(12.5)
    assert moment_p(mu.scaled(2.0), 1) == pytest.approx(5.0)
    with pytest.raises(InputError):
        moment_p(mu, 0.5)


@pytest.mark.parametrize("d", [1, 3, 8])
@pytest.mark.parametrize("s", [1.0, 2.0, 3.5, 8.0])
def test_isotropic_moment_matches_chi(d, s):
    spec = MeasureSpec.isotropic_gaussian(d, total_variance=2.0)
    lam = math.sqrt(2.0 / d)
    assert spec.moment(s) == pytest.approx(lam**s * stats.chi(d).expect(lambda r: r**s), rel=1e-7)


def test_anisotropic_even_moments_closed_form():
    lam = np.array([1.0, 0.5, 0.2])
    spec = MeasureSpec("gaussian-kl", 3, eigenvalues=tuple(lam))
    l2 = lam**2
    assert spec.moment(2) == pytest.approx(l2.sum())
    assert spec.moment(4) == pytest.approx(l2.sum() ** 2 + 2 * (l2**2).sum())
    assert spec.moment(6) == pytest.approx(l2.sum() ** 3 + 6 * l2.sum() * (l2**2).sum() + 8 * (l2**3).sum())


def test_anisotropic_odd_moment_is_an_upper_bound():
    spec = MeasureSpec("gaussian-kl", 3, eigenvalues=(1.0, 0.5, 0.2))
    x = sample_measure(spec, 400_000, 0).points
    assert spec.moment(3) >= np.mean(np.linalg.norm(x, axis=1) ** 3)


@pytest.mark.parametrize("spec", [
    MeasureSpec("uniform-ball", 4, radius=2.0),
    MeasureSpec("gaussian-kl", 3, eigenvalues=(1.0, 0.3, 0.1)),
    MeasureSpec("point-mass", 2, location=(1.0, -2.0)),
    MeasureSpec.counterexample(4, 6),
])
def test_moments_match_samples(spec):
    x = sample_measure(spec, 200_000, 1).points
    r = np.linalg.norm(x, axis=1)
    for s in (2.0, 4.0):
        emp, se = np.mean(r**s), np.std(r**s) / math.sqrt(r.size)
        assert abs(spec.moment(s) - emp) <= 5 * se + 1e-12


@pytest.mark.parametrize("spec", [
    MeasureSpec("uniform-ball", 5, radius=1.5),
    MeasureSpec("gaussian-kl", 3, eigenvalues=(1.0, 0.3, 0.1)),
])
def test_projection_law(spec):
    theta = np.ones(spec.dimension) / math.sqrt(spec.dimension)
    proj = sample_measure(spec, 20_000, 2).points @ theta
    shift, scale = spec.projection_shift_scale(theta[None])
    assert stats.kstest(proj, lambda t: spec.projected_cdf(theta, t)).pvalue > 1e-3
    tmpl = shift[0] + scale[0] * spec.projection_template(20_000)
    assert stats.ks_2samp(proj, tmpl).pvalue > 1e-3


def test_point_templates_are_single_atoms():
    spec = MeasureSpec.counterexample(2, 3)
    shift, scale = spec.projection_shift_scale(np.eye(3))
    np.testing.assert_allclose(shift, [0.0, 2 ** (1 / 3), 0.0])
    assert np.all(scale == 0) and spec.projection_template(100).size == 1


def test_counterexample_moment():
    for n in (1, 8, 27):
        assert MeasureSpec.counterexample(n, 30).moment(2) == pytest.approx(n ** (2 / 3), rel=1e-14)


specs = st.one_of(
    st.builds(lambda d: MeasureSpec.isotropic_gaussian(d), st.integers(1, 6)),
    st.builds(lambda d, r: MeasureSpec("uniform-ball", d, radius=r), st.integers(1, 6), st.floats(0.1, 10)),
    st.builds(lambda d, i: MeasureSpec("shifted-basis", d, index=min(i, d), scale=2.0), st.integers(1, 6), st.integers(1, 6)),
)


@given(specs)
def test_spec_roundtrip(spec):
    assert MeasureSpec.from_dict(spec.to_dict()) == spec
    assert hash(MeasureSpec.from_dict(spec.to_dict())) == hash(spec)


def test_spec_validation():
    with pytest.raises(InputError):
        MeasureSpec("laplace", 2)
    with pytest.raises(InputError):
        MeasureSpec("uniform-ball", 2, radius=-1.0)
    with pytest.raises(InputError):
        MeasureSpec("shifted-basis", 2, index=3, scale=1.0)
    with pytest.raises(InputError):
        MeasureSpec.from_dict({"kind": "uniform-ball", "radius": 1.0})
    with pytest.raises(InputError):
        MeasureSpec.from_dict({"kind": "uniform-ball", "radius": 1.0, "colour": 1}, dimension=2)
    assert MeasureSpec.from_dict({"kind": "gaussian-kl", "family": "isotropic"}, dimension=4) == MeasureSpec.isotropic_gaussian(4)


def test_sampling_is_deterministic():
    spec = MeasureSpec("uniform-ball", 3, radius=1.0)
    a, b = sample_measure(spec, 50, 7), sample_measure(spec, 50, 7)
    assert np.array_equal(a.points, b.points)
    assert np.all(np.linalg.norm(a.points, axis=1) <= 1.0)
    with pytest.raises(InputError):
        sample_measure(spec, 0, 1)
