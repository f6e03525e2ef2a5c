"""Discrete Dirichlet/Robin solvers, overkill surrogates, deformed energies.

All systems are symmetric positive definite and are solved by a sparse
direct factorization (deterministic for a fixed matrix). The "continuous"
solution operators are realized on an overkill mesh a fixed number of
uniform refinements finer than the working mesh; with two refinements the
surrogate error sits an order below every O(h^{1/2}) and O(h^k) quantity
the experiments measure.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    BULK,
    FeFunction,
    assemble_grams,
    bulk_quad_data,
    eval_on_elements,
    surface_quad_data,
)
from .meshing import Mesh, build_square_mesh, disk_mesh
from .multilinear import deformation_tensor


def trace_matrix(grams):
    """Sparse selector mapping bulk coefficients to surface coefficients."""
    nb = len(grams.boundary_ids)
    return sp.coo_matrix(
        (np.ones(nb), (np.arange(nb), grams.boundary_ids)),
        shape=(nb, grams.mesh.n_nodes),
    ).tocsr()


def _interior_solver(grams):
    cache = grams.__dict__
    if "_dirichlet_solve" not in cache:
        ids = grams.interior_ids
        A_II = grams.A_bulk[np.ix_(ids, ids)].tocsc()
        cache["_dirichlet_solve"] = spla.factorized(A_II)
    return cache["_dirichlet_solve"]


def _robin_solver(grams):
    cache = grams.__dict__
    if "_robin_solve" not in cache:
        R = trace_matrix(grams)
        K = (grams.A_bulk + R.T @ grams.M_surf @ R).tocsc()
        cache["_robin_solve"] = spla.factorized(K)
    return cache["_robin_solve"]


def solve_dirichlet_fe(grams, f_h, g_h):
    """Solve a(u, phi) = m(f, phi) for interior phi, with trace(u) = g."""
    mesh = grams.mesh
    rhs_full = grams.M_bulk @ f_h.coeffs
    u = np.zeros(mesh.n_nodes)
    u[grams.boundary_ids] = g_h.coeffs
    ids = grams.interior_ids
    rhs = rhs_full[ids] - (grams.A_bulk @ u)[ids]
    u[ids] = _interior_solver(grams)(rhs)
    return FeFunction(mesh, u, BULK)


def solve_robin_fe(grams, f_h, g_h):
    """Solve a(u, phi) + m_G(u, phi) = m(f, phi) + m_G(g, phi) for all phi."""
    mesh = grams.mesh
    R = trace_matrix(grams)
    rhs = grams.M_bulk @ f_h.coeffs + R.T @ (grams.M_surf @ g_h.coeffs)
    return FeFunction(mesh, _robin_solver(grams)(rhs), BULK)


def dirichlet_residual(grams, u, f_h):
    """Max interior residual |m(f, phi_i) - a(u, phi_i)| (solver check)."""
    r = grams.M_bulk @ f_h.coeffs - grams.A_bulk @ u.coeffs
    return float(np.abs(r[grams.interior_ids]).max())


# -- overkill surrogates -----------------------------------------------------


@dataclass
class OverkillSolution:
    """FE solution on a much finer mesh, standing in for the exact solver."""

    fine_mesh: Mesh
    fe: FeFunction
    problem: str  # 'dirichlet' or 'robin'

    @property
    def coeffs(self):
        return self.fe.coeffs


def refined_copy(mesh, factor):
    """The same domain meshed `factor` times finer (same order)."""
    if mesh.domain_kind == "disk":
        rings = int(round(np.sqrt(mesh.n_elements / 6)))
        return disk_mesh(rings * factor, mesh.order)
    n = int(round(np.sqrt(mesh.n_elements / 2)))
    return build_square_mesh(n * factor, mesh.order)


def assemble_load(grams, f, degree=None):
    """Load vector integral(f * phi_j) for a pointwise-evaluable f."""
    mesh = grams.mesh
    qd = bulk_quad_data(mesh, degree)
    pts = qd["pts"]
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    loc = np.einsum("q,eq,eq,qb->eb", qd["rule"].weights, qd["det"], fv, qd["phi"])
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements.ravel(), loc.ravel())
    return out


def assemble_surface_load(grams, g, degree=None):
    """Surface load integral(g * psi_j) for a pointwise-evaluable g."""
    mesh = grams.mesh
    sd = surface_quad_data(mesh, degree)
    pts = sd["pts"]
    gv = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    loc = np.einsum("q,fq,fq,qb->fb", sd["rule"].weights, sd["speed"], gv, sd["psi"])
    out = np.zeros(len(grams.boundary_ids))
    lookup = np.full(mesh.n_nodes, -1, dtype=np.int64)
    lookup[grams.boundary_ids] = np.arange(len(grams.boundary_ids))
    np.add.at(out, lookup[mesh.boundary_faces].ravel(), loc.ravel())
    return out


def continuous_surrogate(kind, f, g, fine_grams):
    """Overkill solve of the Dirichlet or Robin problem with callable data.

    f is a bulk source (callable or None for zero); g is boundary data,
    interpolated nodally for the Dirichlet problem and tested against the
    surface basis for the Robin problem.
    """
    mesh = fine_grams.mesh
    if kind == "dirichlet":
        u = np.zeros(mesh.n_nodes)
        bpts = mesh.nodes[fine_grams.boundary_ids]
        u[fine_grams.boundary_ids] = np.asarray(g(bpts), dtype=float)
        rhs_full = assemble_load(fine_grams, f) if f is not None else np.zeros(mesh.n_nodes)
        ids = fine_grams.interior_ids
        rhs = rhs_full[ids] - (fine_grams.A_bulk @ u)[ids]
        u[ids] = _interior_solver(fine_grams)(rhs)
        return OverkillSolution(mesh, FeFunction(mesh, u, BULK), "dirichlet")
    if kind == "robin":
        rhs = assemble_load(fine_grams, f) if f is not None else np.zeros(mesh.n_nodes)
        R = trace_matrix(fine_grams)
        rhs = rhs + R.T @ assemble_surface_load(fine_grams, g)
        u = _robin_solver(fine_grams)(rhs)
        return OverkillSolution(mesh, FeFunction(mesh, u, BULK), "robin")
    raise ValueError(f"unknown problem kind {kind!r}")


# -- deformed Dirichlet energy ----------------------------------------------


def _displacement_gradients(e_x, degree=None):
    """Displacement gradients A[x, c] = d(e_c)/dx_x at the rule points.

    This is the transposed-Jacobian convention (components in columns), the
    one under which B = (A+I)^{-T} (A+I)^{-1} det(A+I) is the correct
    pullback matrix for the Dirichlet energy.
    """
    _, grads = eval_on_elements(e_x, degree)  # (ne, m, 2, arity)
    return grads


def deformed_dirichlet_energy(grams, e_x, w_h, z_h, method="pullback", degree=None):
    """Dirichlet energy after deforming the domain by x -> x + e_x(x).

    'pullback' integrates the deformation-tensor form on the original mesh;
    'remesh' displaces the geometry nodes by the nodal values of e_x,
    reassembles the stiffness form there, and pairs the same coefficient
    vectors. Both equal the energy on the deformed domain up to quadrature.
    """
    mesh = grams.mesh
    if e_x.arity != 2:
        raise ValueError("deformation field must be a 2-vector FE function")
    if method == "remesh":
        displaced = Mesh(
            nodes=mesh.nodes + e_x.coeffs,
            elements=mesh.elements,
            boundary_faces=mesh.boundary_faces,
            order=mesh.order,
            domain_kind=mesh.domain_kind,
        )
        g2 = assemble_grams(displaced, degree)
        return float(w_h.coeffs @ (g2.A_bulk @ z_h.coeffs))
    if method != "pullback":
        raise ValueError(f"unknown method {method!r}")
    qd = bulk_quad_data(mesh, degree)
    G = _displacement_gradients(e_x, degree)              # (ne, m, 2, 2)
    F = G + np.eye(2)
    detF = F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    if detF.min() <= 0.0:
        raise RuntimeError("deformation inverts an element at a quadrature point")
    Finv = np.empty_like(F)
    Finv[..., 0, 0] = F[..., 1, 1]
    Finv[..., 1, 1] = F[..., 0, 0]
    Finv[..., 0, 1] = -F[..., 0, 1]
    Finv[..., 1, 0] = -F[..., 1, 0]
    Finv /= detF[..., None, None]
    # B = F^{-T} F^{-1} det(F); integrand (B grad w).grad z
    B = np.einsum("eqrx,eqry->eqxy", Finv, Finv) * detF[..., None, None]
    _, gw = eval_on_elements(w_h, degree)
    _, gz = eval_on_elements(z_h, degree)
    val = np.einsum("q,eq,eqxy,eqy,eqx->", qd["rule"].weights, qd["det"], B, gw, gz)
    return float(val)


def deformation_tensor_field(e_x, degree=None):
    """Pointwise deformation tensors of id + e_x at the rule points."""
    G = _displacement_gradients(e_x, degree)
    out = np.empty_like(G)
    ne, m = G.shape[:2]
    for e in range(ne):
        for q in range(m):
            out[e, q] = deformation_tensor(G[e, q])
    return out


def deformation_field(e_x, w_h, degree=None):
    """(B - I) grad w at the rule points: the vector field whose gradient
    pairing with z gives the deformed-minus-original Dirichlet energy."""
    B = deformation_tensor_field(e_x, degree)
    _, gw = eval_on_elements(w_h, degree)
    return np.einsum("eqxy,eqy->eqx", B, gw)
