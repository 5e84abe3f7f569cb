"""Reproducible random generation for all Monte Carlo components.

Every consumer addresses randomness through a SeedSpec: a (master_seed,
stream_id) pair keying a counter-based Philox generator.  Distinct stream
ids give independent streams, so replications can run on any number of
workers in any order and still produce bit-identical output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalError, ResourceLimit, SamplerStalled
from .geometry import MAX_POINTS, UNIT_NORM_TOL, WedgeModel, sphere_surface_measure, wedge_contains

_U64 = 1 << 64
_BATCH = 1 << 17
_STALL_PROPOSALS = 10 ** 7
_STALL_ACCEPTANCE = 1e-6


@dataclass(frozen=True)
class SeedSpec:
    """Addressable random stream: (master_seed, stream_id), both 64-bit."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < _U64):
                raise DomainError(f"{name} must be a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *parts) -> "SeedSpec":
        return SeedSpec(self.master_seed, derive_stream(self.stream_id, *parts))


def derive_stream(*parts) -> int:
    """Stable 64-bit stream id from a tuple of ints, floats, and strings.

    Uses a keyed hash of a canonical text encoding, so ids do not depend on
    interpreter hash randomization, platform, or worker scheduling.
    """
    tokens = []
    for p in parts:
        if isinstance(p, bool) or not isinstance(p, (int, float, str)):
            raise DomainError(f"unsupported stream part {p!r}")
        tag = "i" if isinstance(p, int) else ("f" if isinstance(p, float) else "s")
        tokens.append(f"{tag}{p!r}")
    digest = hashlib.blake2b("|".join(tokens).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass
class SampleCloud:
    """A finite point set on a wedge plus the seed metadata that produced it."""

    model: WedgeModel
    points: np.ndarray
    seed: SeedSpec
    kind: str
    size_param: float

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float).reshape(-1, self.model.d + 1)
        if self.kind not in ("binomial", "poisson"):
            raise DomainError(f"unknown cloud kind {self.kind!r}")
        self.validate()

    def __len__(self) -> int:
        return self.points.shape[0]

    def validate(self) -> None:
        # Hard assertions, not statistical: membership and unit norm for 100%.
        if len(self) == 0:
            return
        norms = np.linalg.norm(self.points, axis=1)
        if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise InternalError("sample cloud contains non-unit points")
        if not np.all(wedge_contains(self.model, self.points)):
            raise InternalError("sample cloud contains points outside the wedge")


def _unit_sphere(rng: np.random.Generator, d: int, count: int) -> np.ndarray:
    x = rng.standard_normal((count, d + 1))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms < 1e-300):  # never in practice; keeps the math airtight
        bad = norms < 1e-300
        x[bad] = rng.standard_normal((int(bad.sum()), d + 1))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


def sample_uniform_sphere(d: int, seed: SeedSpec, count: int) -> np.ndarray:
    """count i.i.d. uniform points on S^d as normalized Gaussian vectors."""
    if d < 1 or count < 0:
        raise DomainError("need d >= 1 and count >= 0")
    return _unit_sphere(seed.generator(), d, count)


def _fold_to_wedge(model: WedgeModel, points: np.ndarray) -> np.ndarray:
    # Reflect across each bounding hyperplane in turn; exact 2^j-to-1 and
    # measure preserving because the normals are mutually orthogonal.
    for normal in model.normals:
        dots = points @ normal
        neg = dots < 0.0
        if np.any(neg):
            points[neg] -= 2.0 * np.outer(dots[neg], normal)
    return points


def _reject_to_wedge(model: WedgeModel, rng: np.random.Generator, count: int) -> np.ndarray:
    kept: list[np.ndarray] = []
    got = 0
    proposed = 0
    while got < count:
        batch = _unit_sphere(rng, model.d, _BATCH)
        hits = batch[wedge_contains(model, batch)]
        proposed += _BATCH
        got += len(hits)
        kept.append(hits)
        if proposed >= _STALL_PROPOSALS and got < _STALL_ACCEPTANCE * proposed:
            raise SamplerStalled(
                f"acceptance {got}/{proposed} below {_STALL_ACCEPTANCE} for normals "
                f"{model.normals.tolist()}"
            )
    return np.concatenate(kept)[:count]


def _wedge_points(model: WedgeModel, rng: np.random.Generator, count: int) -> np.ndarray:
    if model.j <= 2 and model.is_orthogonal:
        return _fold_to_wedge(model, _unit_sphere(rng, model.d, count))
    return _reject_to_wedge(model, rng, count)


def sample_uniform_wedge(model: WedgeModel, seed: SeedSpec, count: int) -> SampleCloud:
    """count i.i.d. uniform points on the wedge.

    For j <= 2 with orthogonal normals the points come from the exact
    coordinate fold of uniform sphere samples; general normals fall back
    to rejection from the sphere.
    """
    if count < 0:
        raise DomainError("count must be nonnegative")
    points = _wedge_points(model, seed.generator(), count)
    return SampleCloud(model=model, points=points, seed=seed, kind="binomial", size_param=count)


def sample_poisson_wedge(model: WedgeModel, gamma: float, seed: SeedSpec) -> SampleCloud:
    """One draw of the Poisson model with intensity gamma on the wedge.

    With an exact wedge measure sigma the count is Poisson(gamma * sigma)
    followed by that many uniform wedge points; without one (non-orthogonal
    normals) a Poisson process on the whole sphere is thinned to the wedge,
    which realizes the same law exactly.
    """
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    rng = seed.generator()
    sigma = model.surface_measure
    if sigma is not None:
        mean = gamma * sigma
        if mean > MAX_POINTS:
            raise ResourceLimit(f"expected cloud size {mean:.3e} exceeds {MAX_POINTS:.0e}")
        n = int(rng.poisson(mean))
        points = _wedge_points(model, rng, n)
    else:
        mean = gamma * sphere_surface_measure(model.d + 1)
        if mean > MAX_POINTS:
            raise ResourceLimit(f"expected proposal size {mean:.3e} exceeds {MAX_POINTS:.0e}")
        n = int(rng.poisson(mean))
        batch = _unit_sphere(rng, model.d, n)
        points = batch[wedge_contains(model, batch)]
    return SampleCloud(model=model, points=points, seed=seed, kind="poisson", size_param=gamma)


def _beta_prime(rng: np.random.Generator, k: int, beta: float, count: int) -> np.ndarray:
    if k == 0:
        return np.zeros((count, 0))
    b = rng.beta(k / 2.0, beta - k / 2.0, count)
    b = np.minimum(b, 1.0 - 1e-16)
    radius = np.sqrt(b / (1.0 - b))
    directions = _unit_sphere(rng, k - 1, count)
    return radius[:, None] * directions


def sample_beta_prime(k: int, beta: float, seed: SeedSpec, count: int) -> np.ndarray:
    """count i.i.d. vectors in R^k with density prop. to (1 + |x|^2)^(-beta).

    The squared-radius map r^2/(1+r^2) is Beta(k/2, beta - k/2) distributed
    and the direction is uniform on S^(k-1); k=0 yields empty vectors.
    """
    if k < 0 or count < 0:
        raise DomainError("need k >= 0 and count >= 0")
    if beta <= k / 2.0:
        raise DomainError(f"beta must exceed k/2, got beta={beta}, k={k}")
    return _beta_prime(seed.generator(), k, beta, count)
