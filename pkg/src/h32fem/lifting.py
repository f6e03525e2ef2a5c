"""Geometric lift from the discrete disk onto the exact disk.

The lift is a Lenoir-style blended radial projection. On elements without
a boundary face it is the identity. On a boundary-layer element with
curved edge E and opposite vertex o, a point with barycentric coordinates
(lam_o, lam_a, lam_b) is moved by

    D = (1 - lam_o) * (P(b) - b),      b = F(edge point at t = lam_b / (lam_a + lam_b)),

where F is the element's geometry map and P the radial projection onto
the unit circle. D vanishes on the two interior edges (their edge shadows
are boundary vertices, already on the circle), so the global map is
continuous, restricted to the curved edge it is exactly the radial
projection onto the circle, and its gradient deviates from the identity
by O(h^k).

The lift is inverted pointwise by a vectorized Newton iteration on the
composite map Lambda(F(xi)); the same machinery doubles as a point
locator for evaluating FE functions at arbitrary physical points.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .basis import TRI_EDGES, tri_shape, tri_shape_grad
from .meshing import batched_geometry
from .quadrature import default_degree, triangle_rule

# reference-coordinate gradients of the barycentric coordinates
_DLAM = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_VREF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass
class LiftMap:
    mesh: object
    curved_edge: np.ndarray  # (ne,) local edge index on the boundary, -1 inside

    @property
    def is_identity(self):
        return self.mesh.domain_kind != "disk"

    def boundary_elements(self):
        return np.nonzero(self.curved_edge >= 0)[0]


def build_lift_map(mesh):
    curved = np.full(mesh.n_elements, -1, dtype=np.int64)
    if mesh.domain_kind == "disk":
        for e, le in zip(mesh.face_elem, mesh.face_local_edge):
            if curved[e] >= 0:
                raise RuntimeError("element with two boundary faces; refine the mesh")
            curved[e] = le
    return LiftMap(mesh=mesh, curved_edge=curved)


def _barycentric(refs):
    lam = np.empty(refs.shape[:-1] + (3,))
    lam[..., 0] = 1.0 - refs[..., 0] - refs[..., 1]
    lam[..., 1] = refs[..., 0]
    lam[..., 2] = refs[..., 1]
    return lam


def _displacement(lm, elems, refs):
    """Lift displacement and its reference gradient at per-point (elem, ref).

    Returns D (n, 2) and dD/dxi (n, 2, 2); zero rows for interior elements.
    """
    mesh = lm.mesh
    n = len(elems)
    D = np.zeros((n, 2))
    dD = np.zeros((n, 2, 2))
    if lm.is_identity:
        return D, dD
    le = lm.curved_edge[elems]
    sel = np.nonzero(le >= 0)[0]
    if len(sel) == 0:
        return D, dD
    elems = np.asarray(elems)[sel]
    refs = refs[sel]
    le = le[sel]
    edge_pairs = np.array(TRI_EDGES)
    a = edge_pairs[le, 0]
    b = edge_pairs[le, 1]
    o = 3 - a - b
    lam = _barycentric(refs)
    idx = np.arange(len(sel))
    lam_a, lam_b = lam[idx, a], lam[idx, b]
    sigma = np.maximum(lam_a + lam_b, 1e-30)
    t = lam_b / sigma

    # edge shadow through the element's own geometry map
    eref = _VREF[a] * (1.0 - t)[:, None] + _VREF[b] * t[:, None]
    coords = mesh.nodes[mesh.elements[elems]]          # (n, nb, 2)
    phi = tri_shape(mesh.order, eref)                  # (n, nb)
    dphi = tri_shape_grad(mesh.order, eref)            # (n, nb, 2)
    bpt = np.einsum("nb,nbx->nx", phi, coords)
    jac = np.einsum("nbr,nbx->nxr", dphi, coords)
    tan_ref = _VREF[b] - _VREF[a]                      # (n, 2)
    dbdt = np.einsum("nxr,nr->nx", jac, tan_ref)

    nrm = np.linalg.norm(bpt, axis=1)
    phat = bpt / nrm[:, None]
    disp = phat - bpt                                  # P(b) - b
    # d(P - id)/db applied to db/dt:  ((I - phat phat^T)/|b| - I) dbdt
    proj = dbdt - phat * np.einsum("nx,nx->n", phat, dbdt)[:, None]
    dPdt = proj / nrm[:, None] - dbdt

    grad_sigma = _DLAM[a] + _DLAM[b]                   # (n, 2)
    # sigma * grad(t) = grad(lam_b) - t * grad(sigma), exактly
    sg_t = _DLAM[b] - t[:, None] * grad_sigma

    D[sel] = sigma[:, None] * disp
    dD[sel] = disp[:, :, None] * grad_sigma[:, None, :] + dPdt[:, :, None] * sg_t[:, None, :]
    return D, dD


def lift_mixed(lm, elems, refs):
    """Lifted points and composite Jacobians at per-point (elem, ref) pairs.

    Returns pts (n, 2), jac (n, 2, 2) of xi -> Lambda(F(xi)), and the
    plain geometry Jacobian (n, 2, 2).
    """
    mesh = lm.mesh
    coords = mesh.nodes[mesh.elements[np.asarray(elems)]]
    phi = tri_shape(mesh.order, refs)
    dphi = tri_shape_grad(mesh.order, refs)
    base = np.einsum("nb,nbx->nx", phi, coords)
    jgeo = np.einsum("nbr,nbx->nxr", dphi, coords)
    D, dD = _displacement(lm, elems, refs)
    return base + D, jgeo + dD, jgeo


def lift_rule_data(lm, degree=None):
    """Lift data for all elements at shared rule points (cached).

    dict with: rule, pts (lifted), jac (composite, reference->Omega),
    det (of the composite), jgeo/detgeo (plain geometry), grad_lambda
    (physical gradient of the lift, (ne, m, 2, 2)).
    """
    mesh = lm.mesh
    if degree is None:
        degree = default_degree(mesh.order)
    cache = mesh.__dict__.setdefault("_qcache", {})
    key = ("lift", degree)
    if key in cache:
        return cache[key]
    rule = triangle_rule(degree)
    m = len(rule)
    pts, jgeo, detgeo = batched_geometry(mesh, rule.points)
    jac = jgeo.copy()
    lifted = pts.copy()
    bel = lm.boundary_elements()
    if len(bel) > 0:
        elems = np.repeat(bel, m)
        refs = np.tile(rule.points, (len(bel), 1))
        D, dD = _displacement(lm, elems, refs)
        lifted[bel] += D.reshape(len(bel), m, 2)
        jac[bel] += dD.reshape(len(bel), m, 2, 2)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if det.min() <= 0.0:
        raise RuntimeError("lift map not orientation preserving at quadrature points")
    inv_geo = _inv2(jgeo)
    grad_lambda = np.einsum("emxr,emrs->emxs", jac, inv_geo)
    data = {
        "rule": rule,
        "pts": lifted,
        "jac": jac,
        "det": det,
        "jgeo": jgeo,
        "detgeo": detgeo,
        "grad_lambda": grad_lambda,
    }
    cache[key] = data
    return data


def _inv2(j):
    det = j[..., 0, 0] * j[..., 1, 1] - j[..., 0, 1] * j[..., 1, 0]
    inv = np.empty_like(j)
    inv[..., 0, 0] = j[..., 1, 1]
    inv[..., 1, 1] = j[..., 0, 0]
    inv[..., 0, 1] = -j[..., 0, 1]
    inv[..., 1, 0] = -j[..., 1, 0]
    return inv / det[..., None, None]


def grad_lambda_inf_error(lm, degree=None):
    """max over rule points of the spectral norm of grad(Lambda) - I."""
    data = lift_rule_data(lm, degree)
    G = data["grad_lambda"] - np.eye(2)
    return float(np.linalg.norm(G, ord=2, axis=(-2, -1)).max())


def lambda_jacobian(lm, elem, ref_pt):
    """Physical gradient of the lift on one element at reference points."""
    refs = np.atleast_2d(ref_pt)
    elems = np.full(len(refs), elem, dtype=np.int64)
    _, jac, jgeo = lift_mixed(lm, elems, refs)
    grad = np.einsum("nxr,nrs->nxs", jac, _inv2(jgeo))
    return grad[0] if np.ndim(ref_pt) == 1 else grad


# -- point location and pointwise evaluation --------------------------------


class MeshLocator:
    """Inverts the (optionally lifted) geometry map by batched Newton.

    locate() maps physical points to (element, reference coordinates). A
    point that no candidate element contains (within tol) is clamped into
    its best candidate; points farther outside than `slack` raise. The
    clamp covers the O(h^{k+1}) slivers between a curved mesh and the
    exact domain.
    """

    def __init__(self, mesh, lift=None, n_candidates=16, tol=1e-10, slack=1e-3):
        self.mesh = mesh
        self.lift = lift
        self.tol = tol
        self.slack = slack
        rule = triangle_rule(2)
        if lift is not None and not lift.is_identity:
            data = lift_rule_data(lift, 2)
            centers = data["pts"].mean(axis=1)
        else:
            pts, _, _ = batched_geometry(mesh, rule.points)
            centers = pts.mean(axis=1)
        self.k = min(n_candidates, mesh.n_elements)
        self.tree = cKDTree(centers)

    def _forward(self, elems, refs):
        if self.lift is not None:
            return lift_mixed(self.lift, elems, refs)[:2]
        mesh = self.mesh
        coords = mesh.nodes[mesh.elements[elems]]
        phi = tri_shape(mesh.order, refs)
        dphi = tri_shape_grad(mesh.order, refs)
        pts = np.einsum("nb,nbx->nx", phi, coords)
        jac = np.einsum("nbr,nbx->nxr", dphi, coords)
        return pts, jac

    _STARTS = ((1.0 / 3.0, 1.0 / 3.0), (0.15, 0.15), (0.7, 0.15), (0.15, 0.7))

    def _newton_from(self, elems, targets, start):
        refs = np.tile(start, (len(elems), 1))
        for _ in range(25):
            pts, jac = self._forward(elems, refs)
            res = targets - pts
            if np.abs(res).max() < 1e-13:
                break
            det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
            # keep iterates where a curved map can degenerate from diverging
            bad = np.abs(det) < 1e-300
            if np.any(bad):
                det = np.where(bad, 1.0, det)
                res = np.where(bad[:, None], 0.0, res)
            inv = np.empty_like(jac)
            inv[..., 0, 0] = jac[..., 1, 1]
            inv[..., 1, 1] = jac[..., 0, 0]
            inv[..., 0, 1] = -jac[..., 0, 1]
            inv[..., 1, 0] = -jac[..., 1, 0]
            inv /= det[..., None, None]
            step = np.einsum("nrx,nx->nr", inv, res)
            np.clip(step, -1.0, 1.0, out=step)
            refs = np.clip(refs + step, -2.0, 3.0)
        pts, _ = self._forward(elems, refs)
        resid = np.linalg.norm(targets - pts, axis=1)
        return refs, resid

    def _newton(self, elems, targets):
        """Multi-start Newton; a non-converged point scores as far outside.

        Later starts rerun only the points the earlier ones did not land
        inside the element.
        """
        elems = np.asarray(elems)
        refs, resid = self._newton_from(elems, targets, self._STARTS[0])
        score = self._violation(refs) + np.where(resid > 1e-9, np.inf, 0.0)
        for start in self._STARTS[1:]:
            redo = np.nonzero(score > self.tol)[0]
            if len(redo) == 0:
                break
            r2, resid2 = self._newton_from(elems[redo], targets[redo], start)
            s2 = self._violation(r2) + np.where(resid2 > 1e-9, np.inf, 0.0)
            upd = s2 < score[redo]
            refs[redo[upd]] = r2[upd]
            score[redo[upd]] = s2[upd]
        return refs, score

    @staticmethod
    def _violation(refs):
        lam = _barycentric(refs)
        return np.maximum(0.0, -lam.min(axis=-1))

    def locate(self, pts):
        """Physical points -> (element ids, reference coordinates)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        _, cand = self.tree.query(pts, k=self.k)
        cand = cand.reshape(n, -1)
        elems = np.full(n, -1, dtype=np.int64)
        refs = np.zeros((n, 2))
        best_viol = np.full(n, np.inf)
        best_elem = np.zeros(n, dtype=np.int64)
        best_ref = np.zeros((n, 2))
        alive = np.arange(n)
        for r in range(cand.shape[1]):
            if len(alive) == 0:
                break
            els = cand[alive, r]
            rr, viol = self._newton(els, pts[alive])
            # keep the best candidate seen for possible clamping
            upd = viol < best_viol[alive]
            ba = alive[upd]
            best_viol[ba] = viol[upd]
            best_elem[ba] = els[upd]
            best_ref[ba] = rr[upd]
            ok = viol <= self.tol
            hit = alive[ok]
            elems[hit] = els[ok]
            refs[hit] = rr[ok]
            alive = alive[~ok]
        if len(alive) > 0:
            if best_viol[alive].max() > self.slack:
                worst = best_viol[alive].max()
                raise RuntimeError(f"point location failed (violation {worst:.2e})")
            elems[alive] = best_elem[alive]
            refs[alive] = _clamp_to_triangle(best_ref[alive])
        return elems, refs


def _clamp_to_triangle(refs):
    lam = np.clip(_barycentric(refs), 0.0, None)
    lam /= lam.sum(axis=-1, keepdims=True)
    return lam[..., 1:]


class LiftedFeFunction:
    """An FE function transported onto the exact domain by the lift.

    values/gradients are evaluated at physical points of Omega by
    inverting the composite map; the gradient is the pushforward through
    the composite Jacobian.
    """

    def __init__(self, u, lm, locator=None):
        if u.coeffs.ndim != 1:
            raise ValueError("lift_function expects a scalar FE function")
        self.u = u
        self.lm = lm
        self.locator = locator or MeshLocator(u.mesh, lift=lm)

    def _eval(self, pts):
        mesh = self.u.mesh
        elems, refs = self.locator.locate(pts)
        phi = tri_shape(mesh.order, refs)
        dphi = tri_shape_grad(mesh.order, refs)
        local = self.u.coeffs[mesh.elements[elems]]
        vals = np.einsum("nb,nb->n", phi, local)
        gref = np.einsum("nbr,nb->nr", dphi, local)
        _, jac, _ = lift_mixed(self.lm, elems, refs)
        grads = np.einsum("nrx,nr->nx", _inv2(jac), gref)
        return vals, grads

    def values(self, pts):
        return self._eval(np.atleast_2d(pts))[0]

    def gradients(self, pts):
        return self._eval(np.atleast_2d(pts))[1]

    def __call__(self, pts):
        return self.values(pts)


def lift_function(u_h, lm, locator=None):
    """Pointwise-evaluable lift of u_h onto the exact domain."""
    return LiftedFeFunction(u_h, lm, locator)


class InverseLiftedFunction:
    """A function on the exact domain pulled back onto the discrete domain."""

    def __init__(self, v, lm, locator=None):
        self.v = v
        self.lm = lm
        self.locator = locator or MeshLocator(lm.mesh)

    def values(self, pts):
        pts = np.atleast_2d(pts)
        elems, refs = self.locator.locate(pts)
        lifted, _, _ = lift_mixed(self.lm, elems, refs)
        return np.asarray(self.v(lifted), dtype=float)

    def __call__(self, pts):
        return self.values(pts)


def inverse_lift(v, lm, locator=None):
    """Pointwise-evaluable pullback v(Lambda(x)) on the discrete domain."""
    return InverseLiftedFunction(v, lm, locator)


def lambda_lift(lm, x, locator=None):
    """Lift physical points of the discrete domain onto the exact domain."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    loc = locator or MeshLocator(lm.mesh)
    elems, refs = loc.locate(pts)
    lifted, _, _ = lift_mixed(lm, elems, refs)
    return lifted[0] if np.ndim(x) == 1 else lifted
