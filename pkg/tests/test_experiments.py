import json
import math

import numpy as np
import pytest

import wedgehull.experiments as experiments
from wedgehull import (
    DegenerateInput,
    DomainError,
    ExperimentConfig,
    FitError,
    RunRecord,
    SeedSpec,
    WedgeModel,
    config_hash,
    facets_projected,
    fit_slope,
    run_experiment,
    sample_uniform_wedge,
    summarize,
)
from wedgehull.experiments import (
    CSV_HEADER,
    aggregate,
    default_fit_window,
    read_csv,
    run_binomial,
    run_conjecture_probe,
    run_halfsphere,
    run_poisson,
    run_polygon_baseline,
    write_csv,
    write_summary,
)

SEED = 20260815


def strip_wall(records):
    return [
        (r.config_hash, r.model, r.d, r.j, r.size_param, r.rep_index,
         r.facet_count, r.vertex_count, r.stream_id, r.flag)
        for r in records
    ]


def binomial_cfg(**overrides):
    base = dict(model="binomial", d=2, grid=(8, 16, 32), reps=4, master_seed=SEED)
    base.update(overrides)
    return ExperimentConfig(**base)


def synthetic_records(sizes, counts, reps=2):
    records = []
    for size, count in zip(sizes, counts):
        for rep in range(reps):
            records.append(
                RunRecord(
                    config_hash="x",
                    model="binomial",
                    d=2,
                    j=2,
                    size_param=size,
                    rep_index=rep,
                    facet_count=count,
                    vertex_count=count,
                    wall_time_ms=1.0,
                    stream_id=rep,
                )
            )
    return records


class TestConfig:
    def test_model_guard(self):
        with pytest.raises(DomainError):
            binomial_cfg(model="mystery")

    def test_grid_guards(self):
        with pytest.raises(DomainError):
            binomial_cfg(grid=())
        with pytest.raises(DomainError):
            binomial_cfg(grid=(16, 8))
        with pytest.raises(DomainError):
            binomial_cfg(grid=(8, 8))

    def test_scalar_guards(self):
        with pytest.raises(DomainError):
            binomial_cfg(d=1)
        with pytest.raises(DomainError):
            binomial_cfg(reps=0)
        with pytest.raises(DomainError):
            binomial_cfg(master_seed=-1)

    def test_fit_window_must_be_subset(self):
        with pytest.raises(DomainError):
            binomial_cfg(fit_window=(8, 64))
        cfg = binomial_cfg(fit_window=(8, 16))
        assert cfg.fit_window == (8, 16)

    def test_j_is_normalized_per_model(self):
        assert binomial_cfg(j=7).j == 2
        half = ExperimentConfig(
            model="halfsphere", d=2, grid=(8, 16), reps=2, master_seed=SEED, j=5
        )
        assert half.j == 1
        poly = ExperimentConfig(
            model="polygon_baseline", d=2, grid=(8, 16), reps=2, master_seed=SEED, ell=5
        )
        assert poly.j == 5

    def test_polygon_guards(self):
        with pytest.raises(DomainError):
            ExperimentConfig(
                model="polygon_baseline", d=3, grid=(8, 16), reps=2, master_seed=SEED
            )
        with pytest.raises(DomainError):
            ExperimentConfig(
                model="polygon_baseline", d=2, grid=(8, 16), reps=2, master_seed=SEED, ell=2
            )

    def test_probe_j_range(self):
        with pytest.raises(DomainError):
            ExperimentConfig(
                model="conjecture_probe", d=2, grid=(8, 16), reps=2, master_seed=SEED, j=3
            )

    def test_round_trip_through_dict(self):
        cfg = binomial_cfg(fit_window=(16, 32), output_path="out.csv")
        clone = ExperimentConfig.from_dict(cfg.to_dict())
        assert clone == cfg

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(DomainError):
            ExperimentConfig.from_dict({**binomial_cfg().to_dict(), "extra": 1})


class TestConfigHash:
    def test_ignores_output_path(self):
        a = config_hash(binomial_cfg(output_path=None))
        b = config_hash(binomial_cfg(output_path="elsewhere.csv"))
        assert a == b

    def test_sensitive_to_semantics(self):
        base = config_hash(binomial_cfg())
        assert config_hash(binomial_cfg(grid=(8, 16, 64))) != base
        assert config_hash(binomial_cfg(master_seed=SEED + 1)) != base
        assert config_hash(binomial_cfg(reps=5)) != base


class TestRunners:
    def test_triangle_cloud(self):
        cfg = ExperimentConfig(model="binomial", d=2, grid=(3,), reps=6, master_seed=SEED)
        records = run_binomial(cfg)
        assert len(records) == 6
        for r in records:
            assert r.facet_count == 3 and r.vertex_count == 3
            assert r.model == "binomial" and r.flag == 0

    def test_binomial_grid_floor(self):
        cfg = ExperimentConfig(model="binomial", d=2, grid=(2, 8), reps=1, master_seed=SEED)
        with pytest.raises(DomainError):
            run_binomial(cfg)

    def test_tiny_poisson_clouds_record_zero_facets(self):
        cfg = ExperimentConfig(
            model="poisson", d=2, grid=(1e-06, 2e-06), reps=5, master_seed=SEED
        )
        records = run_poisson(cfg)
        assert len(records) == 10
        for r in records:
            assert r.facet_count == 0
            assert r.vertex_count <= 2

    def test_deterministic_across_calls_and_workers(self):
        cfg = binomial_cfg()
        one = run_binomial(cfg)
        two = run_binomial(cfg)
        assert strip_wall(one) == strip_wall(two)
        parallel = run_binomial(cfg, workers=3)
        assert strip_wall(one) == strip_wall(parallel)

    def test_dispatch_matches_named_runner(self):
        cfg = binomial_cfg()
        assert strip_wall(run_experiment(cfg)) == strip_wall(run_binomial(cfg))

    def test_runner_rejects_wrong_model(self):
        with pytest.raises(DomainError):
            run_poisson(binomial_cfg())

    def test_records_recomputable_from_stream_id(self):
        cfg = binomial_cfg(grid=(24, 48))
        record = run_binomial(cfg)[5]
        assert record.flag == 0
        model = WedgeModel.right_angle(cfg.d)
        cloud = sample_uniform_wedge(
            model, SeedSpec(cfg.master_seed, record.stream_id), int(record.size_param)
        )
        redo = facets_projected(cloud)
        assert redo.facet_count == record.facet_count
        assert redo.vertex_count == record.vertex_count


class TestProbeDelegation:
    def test_j2_matches_binomial(self):
        grid, reps = (8, 16), 3
        probe = ExperimentConfig(
            model="conjecture_probe", d=2, grid=grid, reps=reps, master_seed=SEED, j=2
        )
        direct = ExperimentConfig(
            model="binomial", d=2, grid=grid, reps=reps, master_seed=SEED
        )
        assert strip_wall(run_conjecture_probe(probe)) == strip_wall(run_binomial(direct))

    def test_j1_matches_halfsphere(self):
        grid, reps = (8, 16), 3
        probe = ExperimentConfig(
            model="conjecture_probe", d=2, grid=grid, reps=reps, master_seed=SEED, j=1
        )
        direct = ExperimentConfig(
            model="halfsphere", d=2, grid=grid, reps=reps, master_seed=SEED
        )
        assert strip_wall(run_conjecture_probe(probe)) == strip_wall(run_halfsphere(direct))

    def test_j3_needs_normals(self):
        cfg = ExperimentConfig(
            model="conjecture_probe", d=3, grid=(8, 16), reps=2, master_seed=SEED, j=3
        )
        with pytest.raises(DomainError):
            run_conjecture_probe(cfg)

    def test_j3_with_explicit_normals(self):
        normals = (
            (0.0, 1.0, 0.0, 0.0),
            (0.0, 0.0, 1.0, 0.0),
            (0.0, 0.0, 0.0, 1.0),
        )
        cfg = ExperimentConfig(
            model="conjecture_probe",
            d=3,
            grid=(16, 32, 64),
            reps=8,
            master_seed=SEED,
            j=3,
            normals=normals,
        )
        records = run_conjecture_probe(cfg)
        assert all(r.model == "conjecture_probe" and r.j == 3 for r in records)
        summary = summarize(cfg, records, constants_samples=10**4)
        assert summary["fit_log_power"]["power"] == 2
        assert math.isfinite(summary["fit_log_power"]["slope"])


class TestRetries:
    def test_transient_degeneracy_sets_flag(self, monkeypatch):
        calls = {"n": 0}
        real = experiments.facets_projected

        def flaky(cloud):
            calls["n"] += 1
            if calls["n"] == 1:
                raise DegenerateInput("synthetic")
            return real(cloud)

        monkeypatch.setattr(experiments, "facets_projected", flaky)
        cfg = ExperimentConfig(model="binomial", d=2, grid=(12,), reps=1, master_seed=SEED)
        record = run_binomial(cfg)[0]
        assert record.flag == 1
        clean = ExperimentConfig(model="binomial", d=2, grid=(12,), reps=1, master_seed=SEED)
        monkeypatch.setattr(experiments, "facets_projected", real)
        baseline = run_binomial(clean)[0]
        assert record.stream_id != baseline.stream_id  # retry salts the stream

    def test_persistent_degeneracy_raises(self, monkeypatch):
        def always_bad(cloud):
            raise DegenerateInput("synthetic")

        monkeypatch.setattr(experiments, "facets_projected", always_bad)
        cfg = ExperimentConfig(model="binomial", d=2, grid=(12,), reps=1, master_seed=SEED)
        with pytest.raises(DegenerateInput):
            run_binomial(cfg)


class TestPolygonBaseline:
    def test_side_count_recorded_and_default(self):
        cfg = ExperimentConfig(
            model="polygon_baseline", d=2, grid=(32, 64), reps=3, master_seed=SEED
        )
        records = run_polygon_baseline(cfg)
        assert all(r.j == 3 for r in records)  # default is a triangle
        records5 = run_polygon_baseline(cfg, ell=5)
        assert all(r.j == 5 for r in records5)

    def test_means_grow_with_size(self):
        cfg = ExperimentConfig(
            model="polygon_baseline",
            d=2,
            grid=(32, 256, 2048),
            reps=20,
            master_seed=SEED,
            ell=4,
        )
        _, means, _, _, _ = aggregate(run_polygon_baseline(cfg))
        assert means[0] < means[1] < means[2]


class TestAggregateAndFit:
    def test_aggregate_matches_manual_moments(self):
        records = synthetic_records([4, 8], [10, 20], reps=1)
        records += synthetic_records([4, 8], [12, 26], reps=1)
        sizes, means, ses, variances, reps = aggregate(records)
        assert sizes == [4, 8]
        assert means == [11.0, 23.0]
        assert variances[0] == pytest.approx(2.0)
        assert variances[1] == pytest.approx(18.0)
        assert ses[1] == pytest.approx(math.sqrt(18.0 / 2))
        assert reps == [2, 2]

    def test_exact_line_recovered(self):
        sizes = [2, 4, 8, 16]
        counts = [8, 11, 14, 17]  # 3 per doubling
        fit = fit_slope(synthetic_records(sizes, counts))
        assert fit.slope == pytest.approx(3.0 / math.log(2.0), rel=1e-12)
        assert fit.intercept == pytest.approx(8.0 - 3.0, rel=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.grid_points_used == (2, 4, 8, 16)

    def test_constant_data_gives_zero_slope(self):
        fit = fit_slope(synthetic_records([4, 8, 16], [7, 7, 7]))
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_window_restricts_points(self):
        records = synthetic_records([2, 4, 8, 16, 32], [1, 11, 14, 17, 20])
        fit = fit_slope(records, window=(4, 8, 16, 32))
        assert fit.grid_points_used == (4, 8, 16, 32)
        assert fit.slope == pytest.approx(3.0 / math.log(2.0), rel=1e-10)

    def test_fit_guards(self):
        with pytest.raises(FitError):
            fit_slope(synthetic_records([4, 8], [1, 2]))
        with pytest.raises(FitError):
            fit_slope(synthetic_records([4, 8, 16], [1, 2, 3]), log_power=0.0)
        with pytest.raises(FitError):
            fit_slope(synthetic_records([1, 8, 16], [1, 2, 3]))

    def test_slope_error_matches_bootstrap(self):
        cfg = ExperimentConfig(
            model="binomial",
            d=2,
            grid=(64, 128, 256, 512, 1024),
            reps=40,
            master_seed=SEED,
        )
        records = run_binomial(cfg, workers=2)
        fit = fit_slope(records)
        rng = np.random.default_rng(7)
        by_size = {}
        for r in records:
            by_size.setdefault(r.size_param, []).append(r)
        slopes = []
        for _ in range(200):
            resampled = []
            for group in by_size.values():
                picks = rng.integers(0, len(group), len(group))
                resampled.extend(group[i] for i in picks)
            slopes.append(fit_slope(resampled).slope)
        boot = float(np.std(slopes, ddof=1))
        assert boot / 1.5 <= fit.slope_std_error <= boot * 1.5

    def test_dim3_slope_self_consistency(self):
        from wedgehull import estimate_A_d, omega

        cfg = ExperimentConfig(
            model="binomial",
            d=3,
            grid=tuple(2**k for k in range(7, 15)),
            reps=200,
            master_seed=SEED,
        )
        fit = fit_slope(run_experiment(cfg), default_fit_window(cfg))
        a3 = estimate_A_d(3, 10**6, SeedSpec(SEED, 0)).value
        target = 4.0 * omega(2) * a3 / 3.0
        assert abs(fit.slope - target) <= 0.25 * target

    def test_held_out_prediction(self):
        cfg = ExperimentConfig(
            model="binomial",
            d=2,
            grid=(512, 1024, 2048, 4096),
            reps=60,
            master_seed=SEED,
        )
        records = run_binomial(cfg, workers=2)
        fit = fit_slope(records, window=(512, 1024, 2048))
        sizes, means, ses, _, _ = aggregate(records)
        predicted = fit.intercept + fit.slope * math.log(4096)
        assert abs(predicted - means[-1]) <= 3 * ses[-1]


class TestDefaultWindow:
    def test_binomial_threshold(self):
        cfg = binomial_cfg(grid=(128, 256, 512, 1024, 2048))
        assert default_fit_window(cfg) == (512, 1024, 2048)

    def test_poisson_uses_expected_size(self):
        cfg = ExperimentConfig(
            model="poisson", d=2, grid=(200.0, 400.0, 800.0), reps=1, master_seed=SEED
        )
        assert default_fit_window(cfg) == (200.0, 400.0, 800.0)
        near = ExperimentConfig(
            model="poisson", d=2, grid=(100.0, 200.0, 400.0), reps=1, master_seed=SEED
        )
        # 100 pi < 512 would leave two points, so the full grid comes back
        assert default_fit_window(near) == (100.0, 200.0, 400.0)

    def test_small_grid_falls_back(self):
        cfg = binomial_cfg(grid=(4, 8, 16))
        assert default_fit_window(cfg) == (4, 8, 16)


class TestPersistence:
    def test_csv_round_trip(self, tmp_path):
        cfg = binomial_cfg()
        records = run_binomial(cfg)
        path = tmp_path / "records.csv"
        write_csv(path, records)
        text = path.read_text()
        assert text.splitlines()[0] == CSV_HEADER
        redo = read_csv(path, config_hash=config_hash(cfg))
        assert strip_wall(redo) == strip_wall(records)
        assert [r.wall_time_ms for r in redo] == [r.wall_time_ms for r in records]

    def test_csv_float_sizes_survive(self, tmp_path):
        cfg = ExperimentConfig(
            model="poisson", d=2, grid=(2.5, 5.0), reps=2, master_seed=SEED
        )
        records = run_poisson(cfg)
        path = tmp_path / "poisson.csv"
        write_csv(path, records)
        redo = read_csv(path)
        assert [r.size_param for r in redo] == [r.size_param for r in records]

    def test_read_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("model,d,extra\n")
        with pytest.raises(DomainError):
            read_csv(path)

    def test_summary_schema_and_stability(self, tmp_path):
        cfg = binomial_cfg(grid=(8, 16, 32), reps=6)
        records = run_binomial(cfg)
        summary = summarize(cfg, records, constants_samples=10**4)
        assert set(summary) == {"config", "grid", "means", "std_errors", "fit", "constants"}
        assert set(summary["fit"]) == {"slope", "slope_se", "intercept", "r2", "window"}
        assert set(summary["constants"]) == {"A_d", "A_d_se", "c_d2_theory"}
        assert summary["config"]["hash"] == config_hash(cfg)
        assert summary["constants"]["c_d2_theory"] > 0
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        write_summary(a, summary)
        write_summary(b, summarize(cfg, records, constants_samples=10**4))
        assert a.read_bytes() == b.read_bytes()
        parsed = json.loads(a.read_text())
        assert parsed["grid"] == [8, 16, 32]
