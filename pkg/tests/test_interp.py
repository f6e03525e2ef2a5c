import numpy as np

from h32fem.assembly import FeFunction, grams_of, nodal_interp_bulk, trace, zero_function
from h32fem.interp import (
    dirichlet_lift,
    dirichlet_riesz_data,
    ritz_map,
    scott_zhang,
    sz_via_dirichlet,
    winf_like_norm,
)
from h32fem.lifting import build_lift_map
from h32fem.norms import h1_norm
from h32fem.meshing import build_square_mesh, disk_mesh
from h32fem.solvers import solve_dirichlet_fe


def test_sz_projection_property(disk4k2, rng):
    u = FeFunction(disk4k2, rng.normal(size=disk4k2.n_nodes))
    s = scott_zhang(u, disk4k2)
    assert np.abs(s.coeffs - u.coeffs).max() < 1e-10


def test_sz_idempotent(disk4k1, rng):
    u = FeFunction(disk4k1, rng.normal(size=disk4k1.n_nodes))
    once = scott_zhang(u, disk4k1)
    twice = scott_zhang(once, disk4k1)
    assert np.abs(twice.coeffs - once.coeffs).max() < 1e-10


def test_sz_constant(disk4k2):
    one = nodal_interp_bulk(disk4k2, lambda p: np.ones(len(p)))
    assert np.abs(scott_zhang(one, disk4k2).coeffs - 1.0).max() < 1e-12


def test_sz_trace_preservation_fe(disk4k2, rng):
    u = FeFunction(disk4k2, rng.normal(size=disk4k2.n_nodes))
    s = scott_zhang(u, disk4k2)
    assert np.abs(trace(s).coeffs - trace(u).coeffs).max() < 1e-10


def test_riesz_data_defining_identity(disk4k1, rng):
    g = grams_of(disk4k1)
    u = FeFunction(disk4k1, rng.normal(size=disk4k1.n_nodes))
    f, gs = dirichlet_riesz_data(u, g)
    res = (g.M_bulk @ f.coeffs - g.A_bulk @ u.coeffs)[g.interior_ids]
    scale = max(1.0, np.abs(u.coeffs).max())
    assert np.abs(res).max() < 1e-10 * scale
    assert np.array_equal(gs.coeffs, trace(u).coeffs)


def test_riesz_data_constants_and_linears():
    m = disk_mesh(4, 1)
    g = grams_of(m)
    uc = nodal_interp_bulk(m, lambda p: 3.0 * np.ones(len(p)))
    f, gs = dirichlet_riesz_data(uc, g)
    assert np.abs(f.coeffs).max() < 1e-12
    sq = build_square_mesh(4, 1)
    gq = grams_of(sq)
    ux = nodal_interp_bulk(sq, lambda p: p[:, 0])
    fx, _ = dirichlet_riesz_data(ux, gq)
    assert np.abs(fx.coeffs).max() < 1e-12


def test_dirichlet_lift_of_constant(disk4k1):
    lm = build_lift_map(disk4k1)
    one = nodal_interp_bulk(disk4k1, lambda p: np.ones(len(p)))
    sol = dirichlet_lift(one, lm)
    assert sol.fine_mesh.h <= disk4k1.h / 4 + 1e-12
    assert np.abs(sol.coeffs - 1.0).max() < 1e-10


def test_sz_via_dirichlet_constant(disk4k1):
    lm = build_lift_map(disk4k1)
    one = nodal_interp_bulk(disk4k1, lambda p: np.ones(len(p)))
    out = sz_via_dirichlet(one, lm)
    assert np.abs(out.coeffs - 1.0).max() < 1e-8


def test_sz_via_dirichlet_trace_error_decays():
    # trace preservation holds up to the overkill surrogate error, which
    # shrinks under refinement
    errs = []
    for n in (2, 4):
        m = disk_mesh(n, 1)
        g = grams_of(m)
        lm = build_lift_map(m)
        u = solve_dirichlet_fe(
            g,
            nodal_interp_bulk(m, lambda p: np.sin(3.0 * p[:, 0])),
            trace(nodal_interp_bulk(m, lambda p: p[:, 0] * p[:, 1])),
        )
        out = sz_via_dirichlet(u, lm)
        errs.append(np.abs(trace(out).coeffs - trace(u).coeffs).max())
    assert errs[0] < 0.05
    assert errs[1] < 0.6 * errs[0]


def test_winf_like_norm_values(disk4k1):
    lm = build_lift_map(disk4k1)
    zero = zero_function(disk4k1)
    assert winf_like_norm(zero, lm) == 0.0
    c = nodal_interp_bulk(disk4k1, lambda p: -2.0 * np.ones(len(p)))
    assert abs(winf_like_norm(c, lm) - 2.0) < 1e-8


def test_ritz_identity_on_square(square4, square4_grams):
    lm = build_lift_map(square4)
    u = nodal_interp_bulk(square4, lambda p: p[:, 0] + 0.3 * p[:, 1])
    r = ritz_map(
        lambda p: p[:, 0] + 0.3 * p[:, 1],
        lambda p: np.tile([1.0, 0.3], (len(p), 1)),
        lm,
        square4_grams,
    )
    assert np.abs(r.coeffs - u.coeffs).max() < 1e-11


def test_ritz_constant_rate_on_disk():
    errs, hs = [], []
    for n in (3, 6, 12):
        m = disk_mesh(n, 1)
        g = grams_of(m)
        lm = build_lift_map(m)
        r = ritz_map(
            lambda p: np.ones(len(p)), lambda p: np.zeros((len(p), 2)), lm, g
        )
        one = nodal_interp_bulk(m, lambda p: np.ones(len(p)))
        errs.append(h1_norm(FeFunction(m, r.coeffs - one.coeffs), g))
        hs.append(m.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 1.0 - 0.25


def test_ritz_system_symmetry(square4, square4_grams):
    from h32fem.solvers import trace_matrix

    R = trace_matrix(square4_grams)
    K = square4_grams.A_bulk + R.T @ square4_grams.M_surf @ R
    assert abs(K - K.T).max() < 1e-13


def test_boundary_angle_map_and_surface_eval():
    from h32fem.interp import BoundaryAngleMap, eval_surface_fe

    m = disk_mesh(5, 2)
    gs = trace(nodal_interp_bulk(m, lambda p: p[:, 0]))
    amap = BoundaryAngleMap(m)
    angles = np.linspace(-np.pi, np.pi, 40, endpoint=False)
    faces, t = amap.locate(angles)
    vals = eval_surface_fe(gs, faces, t)
    # the trace of x on the discrete boundary is cos(theta) up to geometry error
    assert np.abs(vals - np.cos(angles)).max() < 5e-3


def test_overkill_path_on_square(rng):
    # identity-lift branch: Dirichlet lift and quasi-interpolant on the square
    sq = build_square_mesh(2, 1)
    g = grams_of(sq)
    lm = build_lift_map(sq)
    gx = trace(nodal_interp_bulk(sq, lambda p: p[:, 0]))
    u = solve_dirichlet_fe(g, zero_function(sq), gx)
    sol = dirichlet_lift(u, lm)
    # harmonic linear data: the overkill solution is x as well
    fine_x = sol.fine_mesh.nodes[:, 0]
    assert np.abs(sol.coeffs - fine_x).max() < 1e-9
    out = sz_via_dirichlet(u, lm, sol=sol)
    assert np.abs(out.coeffs - u.coeffs).max() < 1e-8
