"""FE functions and assembly of the four Gram forms.

Bulk forms are the L2 and Dirichlet pairings over the (possibly curved)
triangulation; surface forms are their analogues on the discrete boundary
curve, with the surface gradient realized as the tangential derivative
along each (curved) boundary face. Surface DOFs are the boundary nodes in
ascending bulk-node order; surface basis functions are traces of the bulk
ones, so trace extraction is pure index gathering.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import (
    edge_shape,
    edge_shape_deriv,
    tri_edge_ref_points,
    tri_shape,
    tri_shape_grad,
)
from .meshing import batched_geometry
from .quadrature import default_degree, edge_rule, triangle_rule

BULK = "bulk"
BULK0 = "bulk0"
SURFACE = "surface"


@dataclass
class FeFunction:
    """Coefficient vector over a nodal Lagrange basis.

    coeffs has shape (n,) for scalars or (n, 2) for 2-vector fields, with n
    the bulk node count (bulk spaces) or the boundary node count (surface).
    """

    mesh: object
    coeffs: np.ndarray
    space: str = BULK

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        n = len(self.mesh.boundary_node_ids) if self.space == SURFACE else self.mesh.n_nodes
        if self.coeffs.shape[0] != n:
            raise ValueError(
                f"coefficient length {self.coeffs.shape[0]} does not match space {self.space} ({n})"
            )
        if self.space == BULK0:
            bdry = self.coeffs[self.mesh.boundary_node_ids]
            if np.any(bdry != 0.0):
                raise ValueError("bulk0 function has nonzero boundary coefficients")

    @property
    def arity(self):
        return 1 if self.coeffs.ndim == 1 else self.coeffs.shape[1]

    def scaled(self, alpha):
        return FeFunction(self.mesh, alpha * self.coeffs, self.space)


def zero_function(mesh, space=BULK, arity=1):
    n = len(mesh.boundary_node_ids) if space == SURFACE else mesh.n_nodes
    shape = (n,) if arity == 1 else (n, arity)
    return FeFunction(mesh, np.zeros(shape), space)


# -- quadrature-point caches ------------------------------------------------


def _mesh_cache(mesh):
    return mesh.__dict__.setdefault("_qcache", {})


def bulk_quad_data(mesh, degree=None):
    """Shared per-mesh data at triangle rule points.

    Returns dict with rule, phi (m,nb), dphi (m,nb,2), pts/jac/det over all
    elements, invjac, and physical basis gradients gphys (ne,m,nb,2).
    """
    if degree is None:
        degree = default_degree(mesh.order)
    cache = _mesh_cache(mesh)
    key = ("bulk", degree)
    if key in cache:
        return cache[key]
    rule = triangle_rule(degree)
    phi = tri_shape(mesh.order, rule.points)
    dphi = tri_shape_grad(mesh.order, rule.points)
    pts, jac, det = batched_geometry(mesh, rule.points)
    if det.min() <= 0.0:
        raise RuntimeError("nonpositive Jacobian during assembly")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1]
    inv[..., 1, 1] = jac[..., 0, 0]
    inv[..., 0, 1] = -jac[..., 0, 1]
    inv[..., 1, 0] = -jac[..., 1, 0]
    inv /= det[..., None, None]
    # physical gradient: dphi/dx_x = sum_r dphi/dxi_r * dxi_r/dx_x
    gphys = np.einsum("eqrx,qbr->eqbx", inv, dphi)
    data = {
        "rule": rule,
        "phi": phi,
        "dphi": dphi,
        "pts": pts,
        "jac": jac,
        "det": det,
        "invjac": inv,
        "gphys": gphys,
    }
    cache[key] = data
    return data


def surface_quad_data(mesh, degree=None):
    """Per-boundary-face data at edge rule points: curve points, speed, bases."""
    if degree is None:
        degree = default_degree(mesh.order)
    cache = _mesh_cache(mesh)
    key = ("surf", degree)
    if key in cache:
        return cache[key]
    rule = edge_rule(degree)
    psi = edge_shape(mesh.order, rule.points)
    dpsi = edge_shape_deriv(mesh.order, rule.points)
    coords = mesh.nodes[mesh.boundary_faces]          # (nf, nbe, 2)
    pts = np.einsum("qb,fbx->fqx", psi, coords)
    vel = np.einsum("qb,fbx->fqx", dpsi, coords)      # curve velocity
    speed = np.linalg.norm(vel, axis=-1)
    data = {"rule": rule, "psi": psi, "dpsi": dpsi, "pts": pts, "vel": vel, "speed": speed}
    cache[key] = data
    return data


# -- Gram matrices ----------------------------------------------------------


@dataclass
class GramSet:
    """Assembled bilinear forms plus the DOF bookkeeping between them."""

    mesh: object
    M_bulk: sp.csr_matrix
    A_bulk: sp.csr_matrix
    M_surf: sp.csr_matrix
    A_surf: sp.csr_matrix
    interior_ids: np.ndarray
    boundary_ids: np.ndarray

    def surf_index_of(self, bulk_ids):
        """Surface DOF indices of the given boundary bulk nodes."""
        lookup = self.__dict__.get("_b2s")
        if lookup is None:
            lookup = np.full(self.mesh.n_nodes, -1, dtype=np.int64)
            lookup[self.boundary_ids] = np.arange(len(self.boundary_ids))
            self.__dict__["_b2s"] = lookup
        return lookup[bulk_ids]


def _scatter(ne_mats, conn, n):
    nb = conn.shape[1]
    rows = np.repeat(conn[:, :, None], nb, axis=2)
    cols = np.repeat(conn[:, None, :], nb, axis=1)
    mat = sp.coo_matrix(
        (ne_mats.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    )
    return mat.tocsr()


def grams_of(mesh):
    """The default-degree GramSet of a mesh, assembled once and cached."""
    cache = _mesh_cache(mesh)
    if "grams" not in cache:
        cache["grams"] = assemble_grams(mesh)
    return cache["grams"]


def assemble_grams(mesh, degree=None):
    qd = bulk_quad_data(mesh, degree)
    w = qd["rule"].weights
    phi, gphys, det = qd["phi"], qd["gphys"], qd["det"]
    Me = np.einsum("q,qi,qj,eq->eij", w, phi, phi, det)
    Ae = np.einsum("q,eqix,eqjx,eq->eij", w, gphys, gphys, det)
    M = _scatter(Me, mesh.elements, mesh.n_nodes)
    A = _scatter(Ae, mesh.elements, mesh.n_nodes)

    sd = surface_quad_data(mesh, degree)
    ws, psi, dpsi, speed = sd["rule"].weights, sd["psi"], sd["dpsi"], sd["speed"]
    Mse = np.einsum("q,qi,qj,fq->fij", ws, psi, psi, speed)
    # tangential derivative: psi'(t)/|c'(t)|, measure |c'(t)| dt
    Ase = np.einsum("q,qi,qj,fq->fij", ws, dpsi, dpsi, 1.0 / speed)
    bids = mesh.boundary_node_ids
    lookup = np.full(mesh.n_nodes, -1, dtype=np.int64)
    lookup[bids] = np.arange(len(bids))
    sconn = lookup[mesh.boundary_faces]
    Ms = _scatter(Mse, sconn, len(bids))
    As = _scatter(Ase, sconn, len(bids))

    return GramSet(
        mesh=mesh,
        M_bulk=M,
        A_bulk=A,
        M_surf=Ms,
        A_surf=As,
        interior_ids=mesh.interior_node_ids,
        boundary_ids=bids,
    )


# -- evaluation and interpolation -------------------------------------------


def eval_fe(u, elem, ref_pt):
    """Value and physical gradient of a bulk FE function at reference points."""
    if u.space == SURFACE:
        raise ValueError("eval_fe expects a bulk function")
    mesh = u.mesh
    ref = np.atleast_2d(ref_pt)
    phi = tri_shape(mesh.order, ref)
    dphi = tri_shape_grad(mesh.order, ref)
    _, jac = _elem_geometry(mesh, elem, ref)
    inv = _inv2(jac)
    local = u.coeffs[mesh.elements[elem]]
    val = np.einsum("qb,b...->q...", phi, local)
    gref = np.einsum("qbr,b...->qr...", dphi, local)
    grad = np.einsum("qrx,qr...->qx...", inv, gref)
    if np.ndim(ref_pt) == 1:
        return val[0], grad[0]
    return val, grad


def _elem_geometry(mesh, elem, ref):
    coords = mesh.nodes[mesh.elements[elem]]
    phi = tri_shape(mesh.order, ref)
    dphi = tri_shape_grad(mesh.order, ref)
    pts = phi @ coords
    jac = np.einsum("qbr,bx->qxr", dphi, coords)
    return pts, jac


def _inv2(jac):
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1]
    inv[..., 1, 1] = jac[..., 0, 0]
    inv[..., 0, 1] = -jac[..., 0, 1]
    inv[..., 1, 0] = -jac[..., 1, 0]
    return inv / det[..., None, None]


def eval_on_elements(u, degree=None):
    """Values and gradients of a bulk FE function at all assembly rule points.

    Returns (values, grads) with shapes (ne, m[, arity]) and (ne, m, 2[, arity]).
    """
    qd = bulk_quad_data(u.mesh, degree)
    local = u.coeffs[u.mesh.elements]  # (ne, nb[, arity])
    vals = np.einsum("qb,eb...->eq...", qd["phi"], local)
    grads = np.einsum("eqbx,eb...->eqx...", qd["gphys"], local)
    return vals, grads


def nodal_interp_bulk(mesh, v, arity=1):
    """Nodal interpolant: coefficients are v at the physical node positions."""
    vals = _eval_pointwise(v, mesh.nodes, arity)
    return FeFunction(mesh, vals, BULK)


def nodal_interp_surface(mesh, v, arity=1):
    vals = _eval_pointwise(v, mesh.nodes[mesh.boundary_node_ids], arity)
    return FeFunction(mesh, vals, SURFACE)


def _eval_pointwise(v, pts, arity):
    try:
        vals = np.asarray(v(pts), dtype=float)
        expect = (len(pts),) if arity == 1 else (len(pts), arity)
        if vals.shape != expect:
            raise ValueError
    except Exception:
        vals = np.array([v(p) for p in pts], dtype=float)
    return vals


def trace(u):
    """Surface function whose coefficients are u at the boundary nodes."""
    if u.space == SURFACE:
        raise ValueError("trace expects a bulk function")
    return FeFunction(u.mesh, u.coeffs[u.mesh.boundary_node_ids], SURFACE)


def interior_part(u):
    """Project a bulk function onto V_h^0 by zeroing boundary coefficients."""
    c = u.coeffs.copy()
    c[u.mesh.boundary_node_ids] = 0.0
    return FeFunction(u.mesh, c, BULK0)


# -- boundary-restricted quadrature (independent of the S_h assembly path) --


def integrate_bulk_on_boundary(u, degree=None):
    """Integral of u^2 over the boundary, evaluated through the bulk basis.

    Goes through each boundary face's parent element and the bulk geometry
    map restricted to that edge, so it shares no code with the surface
    assembly (same rule degree, so the two quadratures of the same curved
    integrand must agree to rounding).
    """
    mesh = u.mesh
    if degree is None:
        degree = default_degree(mesh.order)
    rule = edge_rule(degree)
    total = 0.0
    for f in range(len(mesh.boundary_faces)):
        e = mesh.face_elem[f]
        le = mesh.face_local_edge[f]
        ref = tri_edge_ref_points(le, rule.points)
        vals, _ = eval_fe(u, e, ref)
        # curve speed from the bulk geometry map along the edge
        coords = mesh.nodes[mesh.elements[e]]
        dphi = tri_shape_grad(mesh.order, ref)
        jac = np.einsum("qbr,bx->qxr", dphi, coords)
        a, b = [(0, 1), (1, 2), (2, 0)][le]
        vref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tangent_ref = vref[b] - vref[a]
        vel = np.einsum("qxr,r->qx", jac, tangent_ref)
        speed = np.linalg.norm(vel, axis=-1)
        total += float(np.sum(rule.weights * vals**2 * speed))
    return total


def export_matrixmarket(grams, directory):
    """Dump the four Gram matrices as MatrixMarket text files."""
    import os

    from scipy.io import mmwrite

    os.makedirs(directory, exist_ok=True)
    for name, mat in (
        ("M_bulk", grams.M_bulk),
        ("A_bulk", grams.A_bulk),
        ("M_surf", grams.M_surf),
        ("A_surf", grams.A_surf),
    ):
        mmwrite(os.path.join(directory, name + ".mtx"), mat)
