"""Acceptance gate: the five top-level criteria, one test each.

Every test prints a single PASS/FAIL line (visible with `pytest -s` or in
the failure report) and asserts both the criterion and its runtime budget.
"""

import subprocess
import sys
import time

import numpy as np

from h32fem.assembly import (
    FeFunction,
    bulk_quad_data,
    grams_of,
    nodal_interp_bulk,
    trace,
)
from h32fem.experiments import ExperimentConfig, get_mesh, run_experiment
from h32fem.gagliardo import gagliardo_seminorms
from h32fem.interp import scott_zhang
from h32fem.norms import (
    dual_neg_half_norm,
    dual_norm_from_load,
    dual_norm_maximizer,
    h1_norm,
    h_half_norm_on_set,
    h_s_norm,
    hhat_threehalf_norm,
    l2_norm,
    spectral_decomp,
)
from h32fem.solvers import deformed_dirichlet_energy


def _report(criterion, ok, detail=""):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_1_algebraic_identities():
    t0 = time.time()
    cfg = ExperimentConfig()
    results = [
        run_experiment("det_identity", cfg),
        run_experiment("resolvent_identity", cfg),
        run_experiment("comparison_identity", cfg),
    ]
    ok = all(t.passed for t in results)
    elapsed = time.time() - t0
    _report(1, ok and elapsed < 10.0, f"(algebraic identities, {elapsed:.1f}s)")


def test_criterion_2_convergence_rates():
    t0 = time.time()
    ok = True
    details = []
    for order in (1, 2):
        cfg = ExperimentConfig(order=order)
        for name in ("interp_rates", "lift_consistency", "lift_multilinear"):
            t = run_experiment(name, cfg)
            ok &= t.passed
            details.append(f"{name}/k{order}:{t.verdict}")
    elapsed = time.time() - t0
    _report(2, ok and elapsed < 600.0, f"({'; '.join(details)}, {elapsed:.1f}s)")


def test_criterion_3_boundedness_suites():
    t0 = time.time()
    names = (
        "inverse_estimate", "dual_inverse", "sz_error", "h1_stability",
        "norm_equivalence", "dirichlet_regularity", "robin_regularity",
        "interpolant_membership", "deformation_discrete", "deformation_continuous",
    )
    ok = True
    failed = []
    for order in (1, 2):
        cfg = ExperimentConfig(order=order)
        for name in names:
            t = run_experiment(name, cfg)
            if not t.passed:
                failed.append(f"{name}/k{order}")
                ok = False
    elapsed = time.time() - t0
    _report(3, ok and elapsed < 1200.0, f"(failed: {failed or 'none'}, {elapsed:.1f}s)")


def test_criterion_4_oracle_cross_checks(rng):
    t0 = time.time()
    ok = True
    # pullback vs remesh on 50 random small deformations per order
    for order, tol in ((1, 1e-8), (2, 1e-6)):
        m = get_mesh("disk", 3, order)
        g = grams_of(m)
        w = nodal_interp_bulk(m, lambda p: np.sin(p[:, 0]) * p[:, 1])
        z = nodal_interp_bulk(m, lambda p: np.cos(p[:, 1]) + p[:, 0] ** 2)
        for _ in range(50):
            a, b, c, d, e, f = rng.normal(size=6) * 0.04
            P = m.nodes
            field = np.column_stack(
                [
                    a + b * P[:, 0] + c * P[:, 1] + d * P[:, 0] * P[:, 1],
                    e + f * P[:, 0] - b * P[:, 1]
                    + d * (P[:, 0] ** 2 - P[:, 1] ** 2) / 2,
                ]
            )
            ex = FeFunction(m, field)
            v1 = deformed_dirichlet_energy(g, ex, w, z, "pullback")
            v2 = deformed_dirichlet_energy(g, ex, w, z, "remesh")
            ok &= abs(v1 - v2) <= tol * max(abs(v1), 1e-30)

    # dual-norm sup attainment
    m = get_mesh("disk", 4, 1)
    g = grams_of(m)
    sbi = spectral_decomp(g, "interior")
    for _ in range(10):
        cvec = rng.normal(size=m.n_nodes)
        cvec[m.boundary_node_ids] = 0.0
        fpr = FeFunction(m, cvec, "bulk0")
        bload = (g.M_bulk @ fpr.coeffs)[sbi.ids]
        d = dual_norm_from_load(bload, sbi)
        phi = dual_norm_maximizer(bload, sbi)
        ok &= abs(d - (bload @ phi) / h_half_norm_on_set(phi, sbi)) <= 1e-8 * d

    # Gagliardo vs spectral bracket on a 20-function panel, non-widening
    brackets = []
    for nside in (2, 4):
        sq = get_mesh("square", nside, 1)
        gq = grams_of(sq)
        sb = spectral_decomp(gq, "all")
        panel_rng = np.random.default_rng(21)
        funcs = []
        for _ in range(20):
            coef = panel_rng.normal(size=(3, 3))
            funcs.append(
                nodal_interp_bulk(
                    sq,
                    lambda p, coef=coef: sum(
                        coef[a, b] * np.sin(a * p[:, 0] + 0.3 * b)
                        * np.cos(b * p[:, 1] - 0.2 * a)
                        for a in range(3)
                        for b in range(3)
                    ),
                )
            )
        gag = gagliardo_seminorms(funcs, sq)
        ratios = [
            float(np.sqrt(gg**2 + l2_norm(u, gq) ** 2) / h_s_norm(u, 0.5, sb))
            for u, gg in zip(funcs, gag)
        ]
        brackets.append((min(ratios), max(ratios)))
        ok &= 0.2 <= min(ratios) and max(ratios) <= 5.0
    widen = brackets[1][1] / brackets[1][0] <= (brackets[0][1] / brackets[0][0]) * 1.05
    ok &= widen

    # Leibniz inequality with sqrt(2) x 1.05 on 200 random polynomial pairs
    t = run_experiment("leibniz_half", ExperimentConfig())
    ok &= t.passed
    elapsed = time.time() - t0
    _report(4, ok and elapsed < 600.0, f"(oracle cross-checks, {elapsed:.1f}s)")


def test_criterion_5_structural_invariants(tmp_path, rng):
    t0 = time.time()
    ok = True
    m = get_mesh("disk", 4, 2)
    g = grams_of(m)
    # partition of unity
    qd = bulk_quad_data(m)
    ok &= np.abs(qd["phi"].sum(axis=1) - 1.0).max() < 1e-13
    # Gram symmetry and kernels
    ok &= abs(g.M_bulk - g.M_bulk.T).max() < 1e-14
    ok &= abs(g.A_bulk - g.A_bulk.T).max() < 1e-14
    ok &= np.abs(g.A_bulk @ np.ones(m.n_nodes)).max() < 1e-12
    ok &= np.abs(g.A_surf @ np.ones(len(m.boundary_node_ids))).max() < 1e-12
    # zero-trace space really has zero trace
    cvec = rng.normal(size=m.n_nodes)
    cvec[m.boundary_node_ids] = 0.0
    u0 = FeFunction(m, cvec, "bulk0")
    ok &= np.all(trace(u0).coeffs == 0.0)
    # SZ idempotence and trace preservation
    u = FeFunction(m, rng.normal(size=m.n_nodes))
    su = scott_zhang(u, m)
    ok &= np.abs(su.coeffs - u.coeffs).max() < 1e-10
    ok &= np.abs(trace(su).coeffs - trace(u).coeffs).max() < 1e-10
    # eigenvalues >= 1 and endpoint exactness
    sb = spectral_decomp(g, "all")
    sbi = spectral_decomp(g, "interior")
    ok &= sb.eigenvalues.min() >= 1.0 - 1e-10
    ok &= abs(h_s_norm(u, 0.0, sb) - l2_norm(u, g)) < 1e-10
    ok &= abs(h_s_norm(u, 1.0, sb) - h1_norm(u, g)) < 1e-10
    # scaling homogeneity of the norm operations
    alpha = 2.75
    for norm_fn in (
        lambda v: h_s_norm(v, 0.5, sb),
        lambda v: hhat_threehalf_norm(v, "zero_trace", g, sbi),
        lambda v: dual_neg_half_norm(v, "full", sb, g),
    ):
        base = norm_fn(u)
        ok &= abs(norm_fn(u.scaled(alpha)) - alpha * base) < 1e-12 * max(1.0, base)
    # deterministic byte-identical CLI output under a fixed seed
    outs = []
    for tag in ("a", "b"):
        path = tmp_path / f"{tag}.csv"
        r = subprocess.run(
            [
                sys.executable, "-m", "h32fem", "verify", "det_identity",
                "--seed", "123", "--out", str(path),
            ],
            capture_output=True,
        )
        ok &= r.returncode == 0
        outs.append(path.read_bytes())
    ok &= outs[0] == outs[1]
    elapsed = time.time() - t0
    _report(5, ok and elapsed < 120.0, f"(structural invariants, {elapsed:.1f}s)")


def test_registry_remainder_passes():
    # experiments not named by a criterion still have to hold
    cfg = ExperimentConfig(order=1)
    for name in (
        "sz_projection", "smallness", "product_sampled", "l2_product",
        "duality_sampled", "neumann_decay",
    ):
        t = run_experiment(name, cfg)
        assert t.passed, name
