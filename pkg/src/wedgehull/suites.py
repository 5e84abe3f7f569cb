"""Named verification suites: each check returns a pass/fail with a witness.

The suites bundle the oracle cross-checks (closed forms vs Monte Carlo vs
quadrature), the geometric identities, the inequality grids, and the dual
hull equivalence into reusable units.  The command-line `verify` dispatches
them and the acceptance tests call them with the same default budgets, so
a green CLI run and a green test run mean the same thing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracles
from .errors import InequalityViolation
from .formulas import (
    appendix_f,
    estimate_A_d,
    girard_area,
    i2_bounds,
    i2_closed,
    i2_complement,
    model_constants,
    omega,
    verify_appendix_inequalities,
    wedge_measure,
)
from .geometry import (
    WedgeModel,
    angles_from_normal,
    gnomonic_inverse,
    gnomonic_project,
    napier_jacobian,
    napier_reflect,
    normal_from_angles,
    opening_angle,
    wedge_contains,
)
from .hull import facets_ambient, facets_projected
from .sampling import SeedSpec, derive_stream, sample_uniform_wedge

DEFAULT_MASTER_SEED = 20260815
SUITE_NAMES = ("geometry", "i2", "i1", "appendix", "limits", "hull")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
        }


def _seed(*parts) -> SeedSpec:
    return SeedSpec(DEFAULT_MASTER_SEED, derive_stream("suite", *parts))


def _interior_angles(rng, count: int):
    phi = rng.uniform(0.1, math.pi - 0.1, count)
    psi = rng.uniform(0.1, math.pi / 2 - 0.05, count)
    return phi, psi


def suite_geometry(dims=(2, 3), draws: int = 200) -> list:
    """Chart, projection, and reflection identities on random interior draws."""
    results = []
    for d in dims:
        rng = _seed("geometry", d).generator()
        phi, psi = _interior_angles(rng, draws)
        errs = []
        for p, q in zip(phi, psi):
            u = rng.normal(size=d - 1)
            u /= np.linalg.norm(u)
            z = normal_from_angles(p, q, u)
            back = angles_from_normal(z)
            errs.append(max(abs(back.phi - p), abs(back.psi - q)))
        worst = max(errs)
        results.append(
            CheckResult(
                "geometry", f"chart_round_trip_d{d}", worst < 1e-12, f"max angle error {worst:.2e}"
            )
        )
        model = WedgeModel.right_angle(d)
        cloud = sample_uniform_wedge(model, _seed("geometry_cloud", d), 2000)
        tangent = gnomonic_project(model.center, cloud.points)
        restored = gnomonic_inverse(model.center, tangent)
        round_err = float(np.abs(restored - cloud.points).max())
        results.append(
            CheckResult(
                "geometry",
                f"gnomonic_round_trip_d{d}",
                round_err < 1e-10,
                f"max coordinate error {round_err:.2e}",
            )
        )
        inside = wedge_contains(model, cloud.points)
        results.append(
            CheckResult(
                "geometry",
                f"fold_membership_d{d}",
                bool(inside.all()),
                f"{int(inside.sum())}/{cloud.points.shape[0]} inside",
            )
        )
        beta = opening_angle(phi, psi)
        ident = float(np.abs(np.tan(beta) * np.cos(psi) - np.tan(phi)).max())
        results.append(
            CheckResult(
                "geometry",
                f"opening_angle_identity_d{d}",
                ident < 1e-9,
                f"max residual {ident:.2e}",
            )
        )
        inv_err = 0.0
        meas_err = 0.0
        jac_err = 0.0
        nap_phi = rng.uniform(0.05, math.pi / 2 - 0.05, 50)
        nap_psi = rng.uniform(0.05, math.pi / 2 - 0.05, 50)
        for p, q in zip(nap_phi, nap_psi):
            p2, q2 = napier_reflect(p, q)
            p3, q3 = napier_reflect(p2, q2)
            inv_err = max(inv_err, abs(p3 - p), abs(q3 - q))
            lhs = math.sin(p2) ** (d - 2) * math.sin(q2) ** (d - 1) * napier_jacobian(p, q)
            rhs = math.sin(p) ** (d - 2) * math.sin(q) ** (d - 1)
            meas_err = max(meas_err, abs(lhs - rhs) / rhs)
            h = 1e-6
            pa, qa = napier_reflect(p + h, q)
            pb, qb = napier_reflect(p - h, q)
            pc, qc = napier_reflect(p, q + h)
            pd_, qd = napier_reflect(p, q - h)
            fd = abs(
                ((pa - pb) / (2 * h)) * ((qc - qd) / (2 * h))
                - ((pc - pd_) / (2 * h)) * ((qa - qb) / (2 * h))
            )
            jac_err = max(jac_err, abs(fd - napier_jacobian(p, q)))
        results.append(
            CheckResult(
                "geometry",
                f"napier_involution_d{d}",
                inv_err < 1e-12,
                f"max fixed-point error {inv_err:.2e}",
            )
        )
        results.append(
            CheckResult(
                "geometry",
                f"napier_measure_identity_d{d}",
                meas_err < 1e-10,
                f"max relative error {meas_err:.2e}",
            )
        )
        results.append(
            CheckResult(
                "geometry",
                f"napier_jacobian_fd_d{d}",
                jac_err < 1e-4,
                f"max |analytic - finite difference| {jac_err:.2e}",
            )
        )
    return results


def suite_i2(dims=(2, 3), pairs: int = 20, sample_count: int = 10**6) -> list:
    """Cap-measure Monte Carlo against the closed form and its bounds."""
    results = []
    for d in dims:
        rng = _seed("i2_pairs", d).generator()
        phi, psi = _interior_angles(rng, pairs)
        model = WedgeModel.right_angle(d)
        worst_z = 0.0
        for index, (p, q) in enumerate(zip(phi, psi)):
            u = rng.normal(size=d - 1)
            u /= np.linalg.norm(u)
            z = normal_from_angles(p, q, u)
            est = oracles.mc_cap_measure(model, z, sample_count, _seed("i2_mc", d, index))
            closed = float(i2_closed(d, p, q))
            worst_z = max(worst_z, abs(est.value - closed) / est.std_error)
        results.append(
            CheckResult(
                "i2",
                f"cap_measure_vs_closed_d{d}",
                worst_z < 3.0,
                f"max |z-score| {worst_z:.2f} over {pairs} pairs at {sample_count} samples",
            )
        )
        grid_phi = np.linspace(1e-3, math.pi - 1e-3, 200)
        grid_psi = np.linspace(1e-3, math.pi / 2 - 1e-3, 200)
        pp, qq = np.meshgrid(grid_phi, grid_psi, indexing="ij")
        lower, asym = i2_bounds(d, pp, qq)
        closed_grid = i2_closed(d, pp, qq)
        min_slack = float((closed_grid - lower).min())
        results.append(
            CheckResult(
                "i2",
                f"lower_bound_grid_d{d}",
                min_slack >= 0.0,
                f"min closed-form minus bound {min_slack:.3e} on 200x200 grid",
            )
        )
        ratio = float(i2_closed(d, 1e-2, 1e-2) / i2_bounds(d, 1e-2, 1e-2)[1])
        results.append(
            CheckResult(
                "i2",
                f"asymptotic_ratio_d{d}",
                0.95 <= ratio <= 1.05,
                f"closed/asymptotic {ratio:.6f} at phi=psi=1e-2",
            )
        )
        total = wedge_measure(d)
        comp = float(i2_closed(d, 0.4, 0.7) + i2_complement(d, 0.4, 0.7))
        results.append(
            CheckResult(
                "i2",
                f"complement_identity_d{d}",
                abs(comp - total) < 1e-12,
                f"split sum {comp:.12f} vs wedge measure {total:.12f}",
            )
        )
        girard = girard_area(math.pi / 2, 0.7, math.acos(math.cos(0.4) * math.sin(0.7)))
        factored = float(i2_closed(d, 0.4, 0.7)) / (omega(d + 1) / (4 * math.pi))
        results.append(
            CheckResult(
                "i2",
                f"girard_factorization_d{d}",
                abs(girard - factored) < 1e-12,
                f"triangle area {girard:.12f} vs scaled closed form {factored:.12f}",
            )
        )
    return results


def suite_i1(dims=(2, 3), sample_count: int = 4 * 10**4) -> list:
    """Cross-section integral: bound, small-angle law, quadrature agreement."""
    results = []
    a_values = {2: 2.0 / 3.0}
    for d in dims:
        if d not in a_values:
            a_values[d] = estimate_A_d(d, 10**6, _seed("i1_ad", d)).value
        upper = oracles.i1_upper_bound(d)
        worst = 0.0
        for index, (p, q) in enumerate([(0.3, 0.4), (0.7, 0.5), (1.2, 1.0)]):
            est = oracles.mc_I1(d, p, q, sample_count, _seed("i1_mod", d, index))
            worst = max(worst, est.value / upper)
        results.append(
            CheckResult(
                "i1",
                f"upper_bound_d{d}",
                worst < 1.0,
                f"max estimate/bound {worst:.3e} (bound {upper:.4f})",
            )
        )
        small = oracles.mc_I1(d, 1e-2, 1e-2, sample_count, _seed("i1_small", d))
        b_d = model_constants(d, a_values[d]).B_d
        ratio = small.value / (b_d * 1e-2 ** (d + 1))
        results.append(
            CheckResult(
                "i1",
                f"small_angle_ratio_d{d}",
                0.9 <= ratio <= 1.1,
                f"estimate/(B_d phi^(d+1)) = {ratio:.4f} at phi=psi=1e-2",
            )
        )
        if d == 2:
            worst_z = 0.0
            for index, (p, q) in enumerate([(0.05, 0.05), (0.7, 0.5), (1.2, 1.0)]):
                est = oracles.mc_I1(2, p, q, sample_count, _seed("i1_quad", index))
                quad = oracles.quadrature_I1_dim2(p, q)
                worst_z = max(worst_z, abs(est.value - quad) / est.std_error)
            results.append(
                CheckResult(
                    "i1",
                    "quadrature_cross_check_d2",
                    worst_z < 3.0,
                    f"max |z-score| {worst_z:.2f} against 1-D quadrature",
                )
            )
    return results


def suite_appendix(grid_resolution: int = 200) -> list:
    """Inequality grids plus the pinned point values of the f quotient."""
    results = []
    try:
        report = verify_appendix_inequalities(grid_resolution)
        for check in report.checks:
            results.append(
                CheckResult(
                    "appendix",
                    check.name,
                    check.passed,
                    f"min slack {check.min_slack:.6e} at {check.witness}",
                )
            )
    except InequalityViolation as exc:
        results.append(CheckResult("appendix", "inequality_grids", False, str(exc)))
    val = float(appendix_f(0.01, 0.01))
    results.append(
        CheckResult(
            "appendix",
            "f_origin_value",
            abs(val - 0.5) <= 1e-3,
            f"f(0.01, 0.01) = {val:.8f}",
        )
    )
    edge = float(appendix_f(math.pi / 2, 1.3))
    results.append(
        CheckResult(
            "appendix",
            "f_edge_formula",
            abs(edge - 2.0 / (math.pi * 1.3)) < 1e-12,
            f"f(pi/2, 1.3) = {edge:.12f} vs 2/(pi y)",
        )
    )
    return results


def suite_limits(dims=(2, 3)) -> list:
    """Scaled limit integral: band at n=1e6, scale independence, trend."""
    results = []
    budgets = {2: (0.45, 1.0, 1.5, 0.10), 3: (0.49, 1.5, 2.0, 0.15)}
    for d in dims:
        eps, alpha_a, alpha_b, band = budgets[d]
        target = math.factorial(d - 1)
        grid = [10**3, 10**4, 10**5, 10**6]
        rep = oracles.mc_binomial_limit_lemma(d, alpha_a, grid, eps)
        gap = rep.final_relative_gap
        results.append(
            CheckResult(
                "limits",
                f"ratio_band_d{d}",
                gap <= band,
                f"H/log n = {rep.ratios[-1]:.6f} vs {target} (gap {gap:.2%}, band {band:.0%})",
            )
        )
        trend_ok = all(b > a for a, b in zip(rep.ratios, rep.ratios[1:]))
        results.append(
            CheckResult(
                "limits",
                f"monotone_trend_d{d}",
                trend_ok,
                "ratios " + ", ".join(f"{r:.4f}" for r in rep.ratios),
            )
        )
        other = oracles.mc_binomial_limit_lemma(d, alpha_b, [10**6], eps)
        shift = abs(other.ratios[-1] / rep.ratios[-1] - 1.0)
        results.append(
            CheckResult(
                "limits",
                f"scale_independence_d{d}",
                shift <= 0.05,
                f"ratio change {shift:.2%} between alpha={alpha_a} and alpha={alpha_b}",
            )
        )
    return results


def suite_hull(dims=(2, 3), seeds: int = 100, max_points: int = 30) -> list:
    """Dual facet-count equivalence and the simplicial Euler relation."""
    results = []
    for d in dims:
        model = WedgeModel.right_angle(d)
        rng = _seed("hull_sizes", d).generator()
        sizes = rng.integers(d + 1, max_points + 1, size=seeds)
        mismatches = 0
        euler_bad = 0
        degenerate = 0
        for index, n in enumerate(sizes):
            cloud = sample_uniform_wedge(model, _seed("hull_cloud", d, index), int(n))
            ambient = facets_ambient(cloud)
            projected = facets_projected(cloud)
            if ambient.degenerate_flag or projected.degenerate_flag:
                degenerate += 1
                continue
            if ambient.facets != projected.facets:
                mismatches += 1
            if d == 3 and projected.facet_count != 2 * projected.vertex_count - 4:
                euler_bad += 1
        results.append(
            CheckResult(
                "hull",
                f"dual_route_equivalence_d{d}",
                mismatches == 0,
                f"{mismatches} mismatches over {seeds} clouds ({degenerate} degenerate skipped)",
            )
        )
        if d == 3:
            results.append(
                CheckResult(
                    "hull",
                    "euler_relation_d3",
                    euler_bad == 0,
                    f"{euler_bad} violations of facets = 2 vertices - 4",
                )
            )
    return results


def run_suites(names=None, dims=(2, 3)) -> list:
    """Run the selected suites (all by default) and return every check."""
    selected = SUITE_NAMES if names is None else tuple(names)
    results = []
    for name in selected:
        if name == "geometry":
            results.extend(suite_geometry(dims=dims))
        elif name == "i2":
            results.extend(suite_i2(dims=dims))
        elif name == "i1":
            results.extend(suite_i1(dims=dims))
        elif name == "appendix":
            results.extend(suite_appendix())
        elif name == "limits":
            results.extend(suite_limits(dims=dims))
        elif name == "hull":
            results.extend(suite_hull(dims=dims))
        else:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return results
