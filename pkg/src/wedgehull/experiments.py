"""Experiment harness: sweep cloud sizes, count facets, regress against log size.

Each (grid value, replicate) pair is an independent task keyed by a derived
RNG stream, so results are bit-identical for any worker count or execution
order.  Records persist to a fixed CSV schema; per-experiment summaries
(grid means, weighted log-linear fit, theoretical constants) persist to
JSON.  The expected facet count of the right-angle wedge model grows like
(4/3) log n for d=2 and 2^{d-1} omega_{d-1} A_d / d log n in general, which
the fitted slope is compared against.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DegenerateInput, DomainError, FitError
from .formulas import estimate_A_d, model_constants
from .geometry import WedgeModel
from .hull import _hull2d, facets_projected
from .sampling import SeedSpec, derive_stream, sample_poisson_wedge, sample_uniform_wedge

MODELS = ("binomial", "poisson", "halfsphere", "polygon_baseline", "conjecture_probe")
CSV_HEADER = "model,d,j,size_param,rep,facets,vertices,stream_id,wall_ms,flag"
MAX_RETRIES = 3
DEFAULT_MIN_FIT_SIZE = 512
_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one facet-count sweep."""

    model: str
    d: int
    grid: tuple
    reps: int
    master_seed: int
    j: int = 2
    fit_window: tuple = None
    output_path: str = None
    normals: tuple = None
    ell: int = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}")
        if self.d < 2:
            raise DomainError("dimension must be at least 2")
        # canonical j per model keeps config hashes stable across callers
        if self.model == "halfsphere":
            object.__setattr__(self, "j", 1)
        elif self.model in ("binomial", "poisson"):
            object.__setattr__(self, "j", 2)
        elif self.model == "polygon_baseline" and self.ell is not None:
            object.__setattr__(self, "j", int(self.ell))
        grid = tuple(self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("grid must be nonempty and strictly increasing")
        if self.reps < 1:
            raise DomainError("reps must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise DomainError("master_seed must fit in 64 bits")
        if self.fit_window is not None:
            window = tuple(self.fit_window)
            object.__setattr__(self, "fit_window", window)
            if not set(window) <= set(grid):
                raise DomainError("fit_window must be a subset of the grid")
        if self.normals is not None:
            normals = tuple(tuple(float(x) for x in row) for row in self.normals)
            object.__setattr__(self, "normals", normals)
        if self.model == "polygon_baseline":
            if self.d != 2:
                raise DomainError("polygon baseline is planar (d=2)")
            if self.ell is not None and self.ell < 3:
                raise DomainError("polygon needs at least 3 sides")
        if self.model == "conjecture_probe" and not 1 <= self.j <= self.d:
            raise DomainError("probe needs 1 <= j <= d")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("grid", "fit_window", "normals"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(
                    tuple(row) if isinstance(row, (list, tuple)) else row
                    for row in kwargs[key]
                )
        return cls(**kwargs)


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable digest of the semantic fields (output location excluded)."""
    payload = cfg.to_dict()
    payload.pop("output_path")
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class RunRecord:
    """One facet count: a single cloud at one grid value."""

    config_hash: str
    model: str
    d: int
    j: int
    size_param: float
    rep_index: int
    facet_count: int
    vertex_count: int
    wall_time_ms: float
    stream_id: int
    flag: int = 0


@dataclass(frozen=True)
class SlopeFit:
    """Weighted least-squares line of mean facet count vs log size."""

    slope: float
    slope_std_error: float
    intercept: float
    r_squared: float
    grid_points_used: tuple


def _normals_token(normals) -> str:
    if normals is None:
        return "default"
    return ";".join(f"{x:.17g}" for row in normals for x in row)


def _build_model(kind: str, d: int, j: int, normals) -> WedgeModel:
    if kind == "halfsphere" or j == 1:
        if normals is not None:
            return WedgeModel.from_normals(d, np.asarray(normals, float))
        return WedgeModel.half_sphere(d)
    if normals is not None:
        return WedgeModel.from_normals(d, np.asarray(normals, float))
    return WedgeModel.right_angle(d)


def _polygon_vertices(ell: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(ell) / ell
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _sample_polygon(ell: int, n: int, seed: SeedSpec) -> np.ndarray:
    # Fan triangulation from the centroid; triangles are congruent, so a
    # uniform triangle index plus the square-root warp is uniform overall.
    verts = _polygon_vertices(ell)
    rng = seed.generator()
    tri = rng.integers(0, ell, size=n)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    a = verts[tri]
    b = verts[(tri + 1) % ell]
    return (r1 * (1.0 - r2))[:, None] * a + (r1 * r2)[:, None] * b


def _count_facets_planar(coords: np.ndarray):
    edges, vertices, degenerate = _hull2d(coords)
    return len(edges), len(vertices), degenerate


def _execute_task(payload: dict) -> RunRecord:
    record_model = payload["record_model"]
    kind = payload["kind"]
    d = payload["d"]
    j = payload["j"]
    size = payload["size"]
    rep = payload["rep"]
    master_seed = payload["master_seed"]
    normals = payload["normals"]
    token = _normals_token(normals)
    last_error = None
    for attempt in range(MAX_RETRIES + 1):
        if kind == "polygon":
            stream_id = derive_stream("polygon", d, j, size, rep, attempt)
        else:
            stream_id = derive_stream(kind, d, j, token, size, rep, attempt)
        seed = SeedSpec(master_seed, stream_id)
        start = time.perf_counter()
        if kind == "polygon":
            coords = _sample_polygon(j, int(size), seed)
            facet_count, vertex_count, degenerate = _count_facets_planar(coords)
            if degenerate:
                last_error = DegenerateInput(f"degenerate planar hull at n={size}")
                continue
        else:
            model = _build_model(kind, d, j, normals)
            if kind == "poisson":
                cloud = sample_poisson_wedge(model, float(size), seed)
            else:
                cloud = sample_uniform_wedge(model, seed, int(size))
            n_points = cloud.points.shape[0]
            if n_points < d + 1:
                # too few points to span any facet; every point is extreme
                wall = (time.perf_counter() - start) * 1000.0
                return RunRecord(
                    config_hash=payload["config_hash"],
                    model=record_model,
                    d=d,
                    j=j,
                    size_param=size,
                    rep_index=rep,
                    facet_count=0,
                    vertex_count=n_points,
                    wall_time_ms=wall,
                    stream_id=stream_id,
                    flag=attempt,
                )
            try:
                facet_set = facets_projected(cloud)
            except DegenerateInput as exc:
                last_error = exc
                continue
            if facet_set.degenerate_flag:
                last_error = DegenerateInput(f"flagged hull at size={size} rep={rep}")
                continue
            facet_count = facet_set.facet_count
            vertex_count = facet_set.vertex_count
        wall = (time.perf_counter() - start) * 1000.0
        return RunRecord(
            config_hash=payload["config_hash"],
            model=record_model,
            d=d,
            j=j,
            size_param=size,
            rep_index=rep,
            facet_count=facet_count,
            vertex_count=vertex_count,
            wall_time_ms=wall,
            stream_id=stream_id,
            flag=attempt,
        )
    raise DegenerateInput(
        f"still degenerate after {MAX_RETRIES} retries at size={size} rep={rep}"
    ) from last_error


def _run_tasks(cfg: ExperimentConfig, kind: str, record_model: str, j: int, workers: int):
    digest = config_hash(cfg)
    payloads = [
        {
            "config_hash": digest,
            "record_model": record_model,
            "kind": kind,
            "d": cfg.d,
            "j": j,
            "size": size,
            "rep": rep,
            "master_seed": cfg.master_seed,
            "normals": cfg.normals,
        }
        for size in cfg.grid
        for rep in range(cfg.reps)
    ]
    if workers <= 1:
        return [_execute_task(p) for p in payloads]
    chunk = max(1, len(payloads) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_task, payloads, chunksize=chunk))


def _require(cfg: ExperimentConfig, model: str):
    if cfg.model != model:
        raise DomainError(f"config declares model {cfg.model!r}, expected {model!r}")


def run_binomial(cfg: ExperimentConfig, workers: int = 1):
    """Fixed-size uniform clouds on the right-angle wedge, one record per rep."""
    _require(cfg, "binomial")
    if any(int(n) < cfg.d + 1 for n in cfg.grid):
        raise DomainError("binomial grid values must be at least d+1")
    return _run_tasks(cfg, "uniform", "binomial", 2, workers)


def run_poisson(cfg: ExperimentConfig, workers: int = 1):
    """Poisson clouds of intensity gamma; undersized clouds count 0 facets."""
    _require(cfg, "poisson")
    return _run_tasks(cfg, "poisson", "poisson", 2, workers)


def run_halfsphere(cfg: ExperimentConfig, workers: int = 1):
    """Zero-slope control: same pipeline on the half-sphere (j=1)."""
    _require(cfg, "halfsphere")
    return _run_tasks(cfg, "uniform", "halfsphere", 1, workers)


def run_polygon_baseline(cfg: ExperimentConfig, ell: int = None, workers: int = 1):
    """Planar control: uniform points in a regular polygon, expected slope 2*ell/3."""
    _require(cfg, "polygon_baseline")
    sides = ell if ell is not None else (cfg.ell if cfg.ell is not None else 3)
    if sides < 3:
        raise DomainError("polygon needs at least 3 sides")
    if cfg.ell != sides:
        cfg = ExperimentConfig(**{**cfg.to_dict(), "ell": sides})
    if any(int(n) < 3 for n in cfg.grid):
        raise DomainError("polygon grid values must be at least 3")
    return _run_tasks(cfg, "polygon", "polygon_baseline", sides, workers)


def run_conjecture_probe(cfg: ExperimentConfig, workers: int = 1):
    """General-j sweep; canonical j=1 and j=2 delegate to their named runs.

    Delegation rebuilds the config under the canonical model name so the
    records (hashes and streams included) are bit-identical to a direct
    run, which is the consistency check the probe exists to preserve.
    """
    _require(cfg, "conjecture_probe")
    base = cfg.to_dict()
    if cfg.j == 1 and cfg.normals is None:
        return run_halfsphere(ExperimentConfig(**{**base, "model": "halfsphere"}), workers)
    if cfg.j == 2 and cfg.normals is None:
        return run_binomial(ExperimentConfig(**{**base, "model": "binomial"}), workers)
    if cfg.normals is None:
        raise DomainError("probe with j >= 3 needs explicit normals")
    return _run_tasks(cfg, "uniform", "conjecture_probe", cfg.j, workers)


def run_experiment(cfg: ExperimentConfig, workers: int = 1):
    dispatch = {
        "binomial": run_binomial,
        "poisson": run_poisson,
        "halfsphere": run_halfsphere,
        "polygon_baseline": run_polygon_baseline,
        "conjecture_probe": run_conjecture_probe,
    }
    return dispatch[cfg.model](cfg, workers=workers)


def aggregate(records):
    """Per-grid-value sample moments: sizes, means, SE of mean, variance, reps."""
    groups: dict = {}
    for record in records:
        groups.setdefault(record.size_param, []).append(record.facet_count)
    sizes = sorted(groups)
    means, std_errors, variances, reps = [], [], [], []
    for size in sizes:
        counts = np.asarray(groups[size], dtype=float)
        r = counts.size
        mean = float(counts.mean())
        var = float(counts.var(ddof=1)) if r > 1 else 0.0
        means.append(mean)
        variances.append(var)
        std_errors.append(math.sqrt(var / r) if r > 1 else 0.0)
        reps.append(r)
    return sizes, means, std_errors, variances, reps


def fit_slope(records, window=None, log_power: float = 1.0) -> SlopeFit:
    """Weighted least squares of mean facet count against log(size)^log_power.

    Weights are reps/variance per grid value, so the slope standard error
    propagates the replication noise of each mean.
    """
    if log_power <= 0.0:
        raise FitError("regressor power must be positive")
    sizes, means, _, variances, reps = aggregate(records)
    if window is not None:
        allowed = set(window)
        kept = [i for i, s in enumerate(sizes) if s in allowed]
        sizes = [sizes[i] for i in kept]
        means = [means[i] for i in kept]
        variances = [variances[i] for i in kept]
        reps = [reps[i] for i in kept]
    if len(sizes) < 3:
        raise FitError(f"need at least 3 grid points to fit, got {len(sizes)}")
    if any(s <= 1 for s in sizes):
        raise FitError("sizes must exceed 1 for a log regressor")
    x = np.log(np.asarray(sizes, dtype=float)) ** log_power
    y = np.asarray(means, dtype=float)
    w = np.asarray(reps, dtype=float) / np.maximum(np.asarray(variances), _VARIANCE_FLOOR)
    design = np.column_stack([np.ones_like(x), x])
    weighted = design * w[:, None]
    normal = design.T @ weighted
    try:
        cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular design; grid values too clustered") from exc
    params = cov @ (weighted.T @ y)
    intercept, slope = float(params[0]), float(params[1])
    residuals = y - design @ params
    rss = float(w @ residuals**2)
    y_bar = float(w @ y / w.sum())
    tss = float(w @ (y - y_bar) ** 2)
    r_squared = 1.0 - rss / tss if tss > 0 else 1.0
    return SlopeFit(
        slope=slope,
        slope_std_error=float(math.sqrt(max(cov[1, 1], 0.0))),
        intercept=intercept,
        r_squared=r_squared,
        grid_points_used=tuple(sizes),
    )


def default_fit_window(cfg: ExperimentConfig):
    """Grid values past the small-size transient (about 512 expected points)."""
    if cfg.model == "poisson":
        sigma = _build_model("poisson", cfg.d, cfg.j, cfg.normals).surface_measure
        window = tuple(g for g in cfg.grid if g * sigma >= DEFAULT_MIN_FIT_SIZE)
    else:
        window = tuple(g for g in cfg.grid if g >= DEFAULT_MIN_FIT_SIZE)
    return window if len(window) >= 3 else cfg.grid


def _format_size(value) -> str:
    if float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def write_csv(path, records) -> None:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.model,
                    str(r.d),
                    str(r.j),
                    _format_size(r.size_param),
                    str(r.rep_index),
                    str(r.facet_count),
                    str(r.vertex_count),
                    str(r.stream_id),
                    repr(float(r.wall_time_ms)),
                    str(r.flag),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path, config_hash: str = ""):
    """Rebuild records from the CSV columns; the config digest is not stored."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines or lines[0] != CSV_HEADER:
        raise DomainError("unrecognized records file header")
    records = []
    for line in lines[1:]:
        model, d, j, size, rep, facets, vertices, stream, wall, flag = line.split(",")
        records.append(
            RunRecord(
                config_hash=config_hash,
                model=model,
                d=int(d),
                j=int(j),
                size_param=float(size) if "." in size or "e" in size else int(size),
                rep_index=int(rep),
                facet_count=int(facets),
                vertex_count=int(vertices),
                wall_time_ms=float(wall),
                stream_id=int(stream),
                flag=int(flag),
            )
        )
    return records


def summarize(cfg: ExperimentConfig, records, constants_samples: int = 10**6) -> dict:
    """Aggregate records into the persistent JSON summary document.

    The constants block re-estimates the parallelotope mean on a stream
    derived from the master seed, so the whole document is reproducible.
    """
    sizes, means, std_errors, _, _ = aggregate(records)
    window = cfg.fit_window if cfg.fit_window is not None else default_fit_window(cfg)
    fit = fit_slope(records, window)
    seed = SeedSpec(cfg.master_seed, derive_stream("constants", cfg.d))
    report = estimate_A_d(cfg.d, constants_samples, seed)
    constants = model_constants(cfg.d, report)
    summary = {
        "config": {**cfg.to_dict(), "hash": config_hash(cfg)},
        "grid": sizes,
        "means": means,
        "std_errors": std_errors,
        "fit": {
            "slope": fit.slope,
            "slope_se": fit.slope_std_error,
            "intercept": fit.intercept,
            "r2": fit.r_squared,
            "window": list(fit.grid_points_used),
        },
        "constants": {
            "A_d": report.value,
            "A_d_se": report.std_error,
            "c_d2_theory": constants.c_d2,
        },
    }
    if cfg.model == "conjecture_probe" and cfg.j >= 2:
        alt = fit_slope(records, window, log_power=float(cfg.j - 1))
        summary["fit_log_power"] = {
            "power": cfg.j - 1,
            "slope": alt.slope,
            "slope_se": alt.slope_std_error,
            "intercept": alt.intercept,
            "r2": alt.r_squared,
        }
    return summary


def write_summary(path, summary: dict) -> None:
    Path(path).write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8", newline="\n"
    )
