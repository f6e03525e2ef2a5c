import numpy as np
import pytest

from h32fem.assembly import nodal_interp_bulk
from h32fem.basis import tri_edge_ref_points
from h32fem.lifting import (
    MeshLocator,
    build_lift_map,
    grad_lambda_inf_error,
    inverse_lift,
    lambda_jacobian,
    lambda_lift,
    lift_function,
    lift_mixed,
    lift_rule_data,
)
from h32fem.meshing import build_square_mesh, disk_mesh, geometry_map


@pytest.fixture(scope="module")
def lifted(disk4k2, disk4k2_lift):
    return disk4k2, disk4k2_lift


def test_identity_on_interior_elements(lifted):
    m, lm = lifted
    interior = np.nonzero(lm.curved_edge < 0)[0][:5]
    refs = np.array([[0.2, 0.3]] * len(interior))
    pts, _, _ = lift_mixed(lm, interior, refs)
    for e, p in zip(interior, pts):
        expected, _ = geometry_map(m, e, np.array([0.2, 0.3]))
        assert np.abs(p - expected).max() < 1e-14


def test_boundary_nodes_fixed(lifted):
    m, lm = lifted
    bel = lm.boundary_elements()[:5]
    for e in bel:
        le = lm.curved_edge[e]
        for t in (0.0, 0.5, 1.0):
            ref = tri_edge_ref_points(le, np.array([t]))
            p0, _ = geometry_map(m, e, ref[0])
            p1, _, _ = lift_mixed(lm, np.array([e]), ref)
            # nodes already on the circle stay put; other edge points move radially
            if abs(np.linalg.norm(p0) - 1.0) < 1e-12:
                assert np.abs(p1[0] - p0).max() < 1e-12


def test_curved_edge_maps_onto_circle(lifted):
    m, lm = lifted
    worst = 0.0
    for e in lm.boundary_elements()[:10]:
        le = lm.curved_edge[e]
        ref = tri_edge_ref_points(le, np.linspace(0.0, 1.0, 33))
        pts, _, _ = lift_mixed(lm, np.full(33, e), ref)
        worst = max(worst, np.abs(np.linalg.norm(pts, axis=1) - 1.0).max())
    assert worst < 1e-10


def test_continuity_across_interfaces(lifted):
    m, lm = lifted
    # every interior edge of a boundary element must agree with the plain map
    ts = np.linspace(0.0, 1.0, 9)
    for e in lm.boundary_elements()[:8]:
        for le in range(3):
            if le == lm.curved_edge[e]:
                continue
            ref = tri_edge_ref_points(le, ts)
            lifted_pts, _, _ = lift_mixed(lm, np.full(len(ts), e), ref)
            plain, _ = geometry_map(m, e, ref)
            assert np.abs(lifted_pts - plain).max() < 1e-10


def test_jacobian_finite_difference(lifted):
    m, lm = lifted
    e = lm.boundary_elements()[0]
    ref0 = np.array([0.31, 0.27])
    J = lambda_jacobian(lm, e, ref0)
    p0, _, jg = lift_mixed(lm, np.array([e]), ref0[None, :])
    eps = 1e-7
    num = np.zeros((2, 2))
    for r in range(2):
        d = np.zeros(2)
        d[r] = eps
        p1, _, _ = lift_mixed(lm, np.array([e]), (ref0 + d)[None, :])
        num[:, r] = (p1[0] - p0[0]) / eps
    Jfd = num @ np.linalg.inv(jg[0])
    assert np.abs(J - Jfd).max() < 1e-6


def test_grad_lambda_decay_rate():
    for k in (1, 2):
        errs, hs = [], []
        for n in (4, 8, 16, 32):
            m = disk_mesh(n, k)
            errs.append(grad_lambda_inf_error(build_lift_map(m)))
            hs.append(m.h)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert abs(slope - k) <= 0.3


def test_lift_positive_orientation(lifted):
    m, lm = lifted
    data = lift_rule_data(lm)
    assert data["det"].min() > 0.0


def test_composition_roundtrip(lifted):
    m, lm = lifted
    u = nodal_interp_bulk(m, lambda p: np.sin(p[:, 0]) + p[:, 1] ** 2)
    w = lift_function(u, lm)
    back = inverse_lift(w, lm)
    assert np.abs(back(m.nodes) - u.coeffs).max() < 1e-12


def test_lambda_lift_points(lifted):
    m, lm = lifted
    # points on the discrete boundary lift onto the unit circle
    mids = []
    for f in range(4):
        e, le = m.face_elem[f], m.face_local_edge[f]
        ref = tri_edge_ref_points(le, np.array([0.37]))
        p, _ = geometry_map(m, e, ref[0])
        mids.append(p)
    lifted_pts = lambda_lift(lm, np.array(mids))
    assert np.abs(np.linalg.norm(lifted_pts, axis=1) - 1.0).max() < 1e-10


def test_locator_roundtrip(lifted, rng):
    m, lm = lifted
    loc = MeshLocator(m, lift=lm)
    r = np.sqrt(rng.uniform(0, 1, 300)) * 0.999
    th = rng.uniform(0, 2 * np.pi, 300)
    P = np.column_stack([r * np.cos(th), r * np.sin(th)])
    elems, refs = loc.locate(P)
    back, _, _ = lift_mixed(lm, elems, refs)
    assert np.abs(back - P).max() < 1e-9


def test_square_lift_is_identity():
    sq = build_square_mesh(3, 2)
    lm = build_lift_map(sq)
    assert lm.is_identity
    assert len(lm.boundary_elements()) == 0
    u = nodal_interp_bulk(sq, lambda p: p[:, 0] * p[:, 1])
    w = lift_function(u, lm)
    pts = np.array([[0.21, 0.33], [0.8, 0.05]])
    assert np.abs(w.values(pts) - pts[:, 0] * pts[:, 1]).max() < 1e-11
