import math

import numpy as np
import pytest
import scipy.stats

import wedgehull.sampling as sampling
from wedgehull import (
    DomainError,
    ResourceLimit,
    SampleCloud,
    SamplerStalled,
    SeedSpec,
    WedgeModel,
    derive_stream,
    sample_beta_prime,
    sample_poisson_wedge,
    sample_uniform_sphere,
    sample_uniform_wedge,
)

from .conftest import make_seed


class TestSeedSpec:
    def test_generator_reproducible(self):
        a = SeedSpec(11, 22).generator().random(32)
        b = SeedSpec(11, 22).generator().random(32)
        assert np.array_equal(a, b)

    def test_substream_depends_on_parts(self):
        base = SeedSpec(11, 22)
        assert base.substream("x") == base.substream("x")
        assert base.substream("x") != base.substream("y")
        assert base.substream("x").master_seed == 11

    def test_bounds_enforced(self):
        with pytest.raises(DomainError):
            SeedSpec(-1, 0)
        with pytest.raises(DomainError):
            SeedSpec(0, 1 << 64)


class TestDeriveStream:
    def test_frozen_value(self):
        # Pinned so accidental changes to the token encoding are caught.
        assert derive_stream("unit", 2, 0.5) == 4525830519326416271

    def test_type_sensitive(self):
        assert derive_stream(1) != derive_stream(1.0)
        assert derive_stream(1) != derive_stream("1")
        assert derive_stream(1.0) != derive_stream("1.0")

    def test_rejects_bools_and_objects(self):
        with pytest.raises(DomainError):
            derive_stream(True)
        with pytest.raises(DomainError):
            derive_stream(None)
        with pytest.raises(DomainError):
            derive_stream((1, 2))

    def test_order_sensitive(self):
        assert derive_stream("a", "b") != derive_stream("b", "a")


class TestUniformSphere:
    def test_empty_draw(self):
        pts = sample_uniform_sphere(2, make_seed("empty"), 0)
        assert pts.shape == (0, 3)

    def test_unit_norms(self):
        pts = sample_uniform_sphere(3, make_seed("norms"), 10**4)
        assert np.abs(np.linalg.norm(pts, axis=1) - 1.0).max() < 1e-12

    def test_mean_vanishes(self):
        n = 10**6
        pts = sample_uniform_sphere(2, make_seed("mean"), n)
        assert np.linalg.norm(pts.mean(axis=0)) < 4.0 / math.sqrt(n)

    def test_coordinate_second_moment(self):
        # E[z_i^2] = 1/(d+1); Var(z_i^2) = 3/((d+1)(d+3)) - 1/(d+1)^2.
        n = 10**6
        for d in (2, 3):
            pts = sample_uniform_sphere(d, make_seed("m2", d), n)
            m2 = (pts**2).mean(axis=0)
            var = 3.0 / ((d + 1) * (d + 3)) - 1.0 / (d + 1) ** 2
            se = math.sqrt(var / n)
            assert np.abs(m2 - 1.0 / (d + 1)).max() <= 3 * se

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            sample_uniform_sphere(0, make_seed("bad"), 10)
        with pytest.raises(DomainError):
            sample_uniform_sphere(2, make_seed("bad"), -1)


class TestUniformWedge:
    def test_validation_is_hard(self, wedge2):
        cloud = sample_uniform_wedge(wedge2, make_seed("w", 0), 5000)
        assert len(cloud) == 5000
        assert np.all(cloud.points[:, 1] >= -1e-12)
        assert np.all(cloud.points[:, 2] >= -1e-12)
        assert np.abs(np.linalg.norm(cloud.points, axis=1) - 1.0).max() < 1e-12

    def test_zero_count(self, wedge2):
        cloud = sample_uniform_wedge(wedge2, make_seed("w", 1), 0)
        assert len(cloud) == 0 and cloud.points.shape == (0, 3)

    def test_last_coordinate_mean(self, wedge2):
        # Conditioned on the quarter sphere, z_3 is uniform on (0, 1).
        n = 10**6
        cloud = sample_uniform_wedge(wedge2, make_seed("w", 2), n)
        se = math.sqrt(1.0 / 12.0 / n)
        assert abs(cloud.points[:, 2].mean() - 0.5) <= 3 * se

    def test_fold_matches_rejection(self, wedge3):
        n = 10**5
        fold = sample_uniform_wedge(wedge3, make_seed("fold"), n).points
        reject = sampling._reject_to_wedge(
            wedge3, make_seed("reject").generator(), n
        )
        for label, f, r in (
            ("z_d", fold[:, 2], reject[:, 2]),
            ("z_last", fold[:, 3], reject[:, 3]),
            ("product", fold[:, 2] * fold[:, 3], reject[:, 2] * reject[:, 3]),
        ):
            diff = abs(f.mean() - r.mean())
            se = math.sqrt(f.var(ddof=1) / n + r.var(ddof=1) / n)
            assert diff <= 4 * se, label
            stat = scipy.stats.ks_2samp(f, r).statistic
            crit = 1.628 * math.sqrt(2.0 / n)
            assert stat <= crit, label

    def test_cloud_kind_guard(self, wedge2):
        with pytest.raises(DomainError):
            SampleCloud(
                model=wedge2,
                points=np.zeros((0, 3)),
                seed=make_seed("k"),
                kind="mystery",
                size_param=0,
            )

    def test_rejection_stall_detection(self, monkeypatch):
        # Three normals tilted a hair above a common plane cut a corner so
        # small that rejection cannot plausibly fill it.
        eps = 3e-4
        dirs = [
            np.array([math.cos(a), math.sin(a)]) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)
        ]
        normals = np.array([[math.cos(eps) * v[0], math.cos(eps) * v[1], math.sin(eps)] for v in dirs])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        model = WedgeModel.from_normals(2, normals, center=np.array([0.0, 0.0, 1.0]))
        monkeypatch.setattr(sampling, "_STALL_PROPOSALS", 2 * sampling._BATCH)
        with pytest.raises(SamplerStalled):
            sample_uniform_wedge(model, make_seed("stall"), 4)


class TestPoissonWedge:
    def test_gamma_zero(self, wedge2):
        cloud = sample_poisson_wedge(wedge2, 0.0, make_seed("p", 0))
        assert len(cloud) == 0

    def test_count_moments(self, wedge2):
        # Counts are Poisson(gamma * sigma) with sigma = pi for this wedge.
        draws = 30000
        counts = np.array(
            [
                len(sample_poisson_wedge(wedge2, 10.0, make_seed("p", 1, rep)))
                for rep in range(draws)
            ],
            dtype=float,
        )
        mean = counts.mean()
        target = 10.0 * math.pi
        se = math.sqrt(target / draws)
        assert abs(mean - target) <= 3 * se
        ratio = counts.var(ddof=1) / mean
        assert 0.97 <= ratio <= 1.03

    def test_points_land_in_wedge(self, wedge3):
        cloud = sample_poisson_wedge(wedge3, 50.0, make_seed("p", 2))
        assert len(cloud) > 0
        assert np.all(cloud.points @ wedge3.normals.T >= -1e-12)

    def test_resource_limit(self, wedge2):
        with pytest.raises(ResourceLimit):
            sample_poisson_wedge(wedge2, 1e9, make_seed("p", 3))

    def test_negative_gamma(self, wedge2):
        with pytest.raises(DomainError):
            sample_poisson_wedge(wedge2, -1.0, make_seed("p", 4))


class TestBetaPrime:
    def test_zero_dimensional(self):
        out = sample_beta_prime(0, 3.0, make_seed("b", 0), 7)
        assert out.shape == (7, 0)

    def test_parameter_guard(self):
        with pytest.raises(DomainError):
            sample_beta_prime(2, 1.0, make_seed("b", 1), 10)
        with pytest.raises(DomainError):
            sample_beta_prime(-1, 3.0, make_seed("b", 1), 10)

    def test_second_moment_scalar_case(self):
        # k=1, beta=2: E[Z^2] = (k/2) / (beta - k/2 - 1) = 1.  The fourth
        # moment diverges, so the tolerance is wide rather than a 3 SE band.
        z = sample_beta_prime(1, 2.0, make_seed("b", 2), 10**6)
        assert abs((z**2).mean() - 1.0) < 0.05

    def test_radial_law(self):
        # r^2/(1+r^2) is Beta(k/2, beta - k/2); one-sample KS at the 1% level.
        n = 10**5
        crit = 1.628 / math.sqrt(n)
        for case, (k, beta) in enumerate([(1, 2.0), (2, 2.5), (3, 3.0)]):
            x = sample_beta_prime(k, beta, make_seed("b", 3, case), n)
            b = (x**2).sum(axis=1)
            b = b / (1.0 + b)
            stat = scipy.stats.kstest(b, "beta", args=(k / 2.0, beta - k / 2.0)).statistic
            assert stat <= crit, (k, beta)

    def test_projection_closes_the_family(self):
        # Dropping one coordinate of a (k=3, beta=3) draw gives (k=2, beta=5/2).
        n = 10**5
        x = sample_beta_prime(3, 3.0, make_seed("b", 4), n)[:, :2]
        b = (x**2).sum(axis=1)
        b = b / (1.0 + b)
        stat = scipy.stats.kstest(b, "beta", args=(1.0, 1.5)).statistic
        assert stat <= 1.628 / math.sqrt(n)

    def test_reproducible(self):
        a = sample_beta_prime(2, 3.0, make_seed("b", 5), 100)
        b = sample_beta_prime(2, 3.0, make_seed("b", 5), 100)
        assert np.array_equal(a, b)
