import numpy as np
import pytest

from h32fem.assembly import FeFunction, grams_of, nodal_interp_bulk, trace
from h32fem.norms import (
    boundary_sobolev_norm,
    dual_neg_half_norm,
    dual_norm_from_load,
    dual_norm_maximizer,
    h1_norm,
    h_half_norm_on_set,
    h_s_norm,
    hhat_threehalf_norm,
    l2_norm,
    spectral_decomp,
    vec_dual_half_norm,
)


@pytest.fixture(scope="module")
def setup(disk4k1):
    g = grams_of(disk4k1)
    return disk4k1, g, spectral_decomp(g, "all"), spectral_decomp(g, "interior")


def test_eigen_structure(setup):
    m, g, sb, sbi = setup
    assert len(sb) == m.n_nodes
    assert len(sbi) == len(m.interior_node_ids)
    assert sb.eigenvalues.min() >= 1.0 - 1e-10
    assert sbi.eigenvalues.min() >= 1.0 - 1e-10
    V, M = sb.eigenvectors, sb.mass_on_set
    assert np.abs(V.T @ M @ V - np.eye(len(sb))).max() < 1e-10


def test_constant_has_unit_eigenvalue(setup):
    m, g, sb, _ = setup
    # the constant vector is the eigenvector with lambda = 1
    assert abs(sb.eigenvalues[0] - 1.0) < 1e-10


def test_endpoint_exactness(setup, rng):
    m, g, sb, _ = setup
    u = FeFunction(m, rng.normal(size=m.n_nodes))
    assert abs(h_s_norm(u, 0.0, sb) - l2_norm(u, g)) < 1e-10
    assert abs(h_s_norm(u, 1.0, sb) - h1_norm(u, g)) < 1e-10


def test_zero_and_homogeneity(setup, rng):
    m, g, sb, _ = setup
    zero = FeFunction(m, np.zeros(m.n_nodes))
    assert h_s_norm(zero, 0.5, sb) == 0.0
    u = FeFunction(m, rng.normal(size=m.n_nodes))
    n = h_s_norm(u, 0.5, sb)
    assert abs(h_s_norm(u.scaled(-3.25), 0.5, sb) - 3.25 * n) < 1e-12 * max(1, n)


def test_monotonicity_in_s(setup, rng):
    m, g, sb, _ = setup
    u = FeFunction(m, rng.normal(size=m.n_nodes))
    vals = [h_s_norm(u, s, sb) for s in np.linspace(0.0, 1.0, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_s_range_validation(setup):
    m, g, sb, _ = setup
    u = FeFunction(m, np.ones(m.n_nodes))
    with pytest.raises(ValueError):
        h_s_norm(u, 1.2, sb)


def test_dual_norm_zero_and_sup_attainment(setup, rng):
    m, g, sb, sbi = setup
    zero = FeFunction(m, np.zeros(m.n_nodes), "bulk0")
    assert dual_neg_half_norm(zero, "zero_trace", sbi, g) == 0.0
    c = rng.normal(size=m.n_nodes)
    c[m.boundary_node_ids] = 0.0
    f = FeFunction(m, c, "bulk0")
    b = (g.M_bulk @ f.coeffs)[sbi.ids]
    d = dual_norm_from_load(b, sbi)
    phi = dual_norm_maximizer(b, sbi)
    attained = (b @ phi) / h_half_norm_on_set(phi, sbi)
    assert abs(d - attained) <= 1e-8 * max(d, 1e-30)


def test_zero_trace_below_full(setup, rng):
    m, g, sb, sbi = setup
    for _ in range(10):
        c = rng.normal(size=m.n_nodes)
        c[m.boundary_node_ids] = 0.0
        f = FeFunction(m, c, "bulk0")
        zt = dual_neg_half_norm(f, "zero_trace", sbi, g)
        fl = dual_neg_half_norm(f, "full", sb, g)
        assert zt <= fl + 1e-12


def test_variant_dofset_mismatch(setup):
    m, g, sb, sbi = setup
    f = FeFunction(m, np.zeros(m.n_nodes))
    with pytest.raises(ValueError):
        dual_neg_half_norm(f, "zero_trace", sb, g)
    with pytest.raises(ValueError):
        dual_neg_half_norm(f, "nonsense", sbi, g)


def test_vec_dual_constant_field_zero_trace(setup):
    m, g, sb, sbi = setup
    zc = FeFunction(m, np.tile([0.7, -1.3], (m.n_nodes, 1)))
    assert vec_dual_half_norm(zc, "zero_trace", sbi, g) < 1e-10
    # against the full space the boundary flux survives
    assert vec_dual_half_norm(zc, "full", sb, g) > 1e-3


def test_hhat_norm_of_constant(setup):
    m, g, sb, sbi = setup
    c = 2.5
    u = nodal_interp_bulk(m, lambda p: c * np.ones(len(p)))
    ones_s = np.ones(len(m.boundary_node_ids))
    perimeter = ones_s @ (g.M_surf @ ones_s)
    expected = c * np.sqrt(perimeter)
    assert abs(hhat_threehalf_norm(u, "zero_trace", g, sbi) - expected) < 1e-10


def test_discrete_trace_inequality(setup, rng):
    m, g, sb, sbi = setup
    # the 3/2 norm contains the boundary H1 term by construction
    for _ in range(5):
        u = FeFunction(m, rng.normal(size=m.n_nodes))
        tn = boundary_sobolev_norm(trace(u), 1, g)
        assert tn <= hhat_threehalf_norm(u, "zero_trace", g, sbi) * (1 + 1e-12)


def test_boundary_norms(setup):
    m, g, _, _ = setup
    gs = trace(nodal_interp_bulk(m, lambda p: 3.0 * np.ones(len(p))))
    ones_s = np.ones(len(m.boundary_node_ids))
    per = ones_s @ (g.M_surf @ ones_s)
    assert abs(boundary_sobolev_norm(gs, 1, g) - 3.0 * np.sqrt(per)) < 1e-12
    v0 = boundary_sobolev_norm(gs, 0, g)
    vh = boundary_sobolev_norm(gs, 0.5, g)
    v1 = boundary_sobolev_norm(gs, 1, g)
    assert v0 - 1e-12 <= vh <= v1 + 1e-12
    with pytest.raises(ValueError):
        boundary_sobolev_norm(gs, 0.25, g)


def test_norm_homogeneity_all_ops(setup, rng):
    m, g, sb, sbi = setup
    alpha = 1.7
    u = FeFunction(m, rng.normal(size=m.n_nodes))
    pairs = [
        (hhat_threehalf_norm(u, "zero_trace", g, sbi),
         hhat_threehalf_norm(u.scaled(alpha), "zero_trace", g, sbi)),
        (dual_neg_half_norm(u, "full", sb, g),
         dual_neg_half_norm(u.scaled(alpha), "full", sb, g)),
    ]
    for base, scaled in pairs:
        assert abs(scaled - alpha * base) < 1e-12 * max(1.0, base)
