"""Isoparametric triangulations of the unit disk and the unit square.

The disk mesh is a deterministic concentric-ring layout: ring j of n carries
6j equally spaced nodes at radius j/n, the center is a single node, and the
strips between consecutive rings are triangulated by an angular two-pointer
merge. This gives exactly 6 n^2 triangles, uniform element size (radial
spacing 1/n, arc spacing pi/(3n)), and a shape-regularity constant that is
independent of n. For order k=2 every element gets midside nodes; midside
nodes of boundary edges are projected radially onto the unit circle, which
is what makes the boundary fit isoparametric.

The square mesh is the usual diagonal split of an n x n grid of [0,1]^2 and
exists as an exact-geometry test mode: the boundary is resolved exactly and
the geometric lift is the identity there.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .basis import TRI_EDGES, tri_shape, tri_shape_grad
from .quadrature import default_degree, triangle_rule


@dataclass
class Mesh:
    """Curved order-k triangulation with node/element/boundary tables.

    nodes: (N, 2) coordinates. elements: (nelem, 3 or 6) node ids, CCW.
    boundary_faces: (nbf, 2 or 3) node ids, oriented CCW along the boundary
    (endpoint a, endpoint b, then the midside node for k=2).
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_faces: np.ndarray
    order: int
    domain_kind: str
    boundary_node_ids: np.ndarray = field(init=False)
    interior_node_ids: np.ndarray = field(init=False)
    h: float = field(init=False)
    # element id and local edge index behind each boundary face
    face_elem: np.ndarray = field(init=False)
    face_local_edge: np.ndarray = field(init=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=np.int64)
        self.boundary_faces = np.asarray(self.boundary_faces, dtype=np.int64)
        bset = np.unique(self.boundary_faces.ravel())
        self.boundary_node_ids = bset
        mask = np.ones(len(self.nodes), dtype=bool)
        mask[bset] = False
        self.interior_node_ids = np.nonzero(mask)[0]
        self.h = self._max_diameter()
        self.face_elem, self.face_local_edge = self._face_adjacency()

    # -- derived geometry ------------------------------------------------

    def _max_diameter(self):
        c = self.nodes[self.elements]  # (nelem, nb, 2)
        d = np.linalg.norm(c[:, :, None, :] - c[:, None, :, :], axis=-1)
        return float(d.max())

    def _face_adjacency(self):
        lookup = {}
        for e, conn in enumerate(self.elements):
            for le, (a, b) in enumerate(TRI_EDGES):
                lookup[(conn[a], conn[b])] = (e, le)
        fe = np.empty(len(self.boundary_faces), dtype=np.int64)
        fl = np.empty(len(self.boundary_faces), dtype=np.int64)
        for i, f in enumerate(self.boundary_faces):
            fe[i], fl[i] = lookup[(f[0], f[1])]
        return fe, fl

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_nodes(self):
        return len(self.nodes)

    def element_coords(self, elems=None):
        """(nelem, nbasis, 2) geometry node coordinates."""
        if elems is None:
            return self.nodes[self.elements]
        return self.nodes[self.elements[elems]]

    def quasi_uniformity_ratio(self):
        """(max element diameter) / (min inscribed-circle diameter)."""
        v = self.nodes[self.elements[:, :3]]
        a = np.linalg.norm(v[:, 1] - v[:, 0], axis=1)
        b = np.linalg.norm(v[:, 2] - v[:, 1], axis=1)
        c = np.linalg.norm(v[:, 0] - v[:, 2], axis=1)
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        inscribed = 4.0 * area / (a + b + c)
        return self.h / float(inscribed.min())

    # -- serialization ---------------------------------------------------

    def to_json(self):
        doc = {
            "nodes": self.nodes.tolist(),
            "elements": self.elements.tolist(),
            "boundary_faces": self.boundary_faces.tolist(),
            "order": int(self.order),
            "domain_kind": self.domain_kind,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(
            nodes=np.array(doc["nodes"], dtype=float),
            elements=np.array(doc["elements"], dtype=np.int64),
            boundary_faces=np.array(doc["boundary_faces"], dtype=np.int64),
            order=int(doc["order"]),
            domain_kind=doc["domain_kind"],
        )


# -- geometry map ----------------------------------------------------------


def geometry_map(mesh, elem, ref_pt):
    """Physical point and Jacobian of the order-k geometry map.

    ref_pt may be a single (2,) point or an (m, 2) batch; returns arrays of
    matching shape: point(s) (.., 2) and Jacobian(s) (.., 2, 2).
    """
    if not 0 <= elem < mesh.n_elements:
        raise IndexError(f"invalid element id {elem}")
    ref = np.atleast_2d(ref_pt)
    coords = mesh.nodes[mesh.elements[elem]]  # (nb, 2)
    phi = tri_shape(mesh.order, ref)          # (m, nb)
    dphi = tri_shape_grad(mesh.order, ref)    # (m, nb, 2)
    pts = phi @ coords
    jac = np.einsum("mbr,bx->mxr", dphi, coords)
    if np.ndim(ref_pt) == 1:
        return pts[0], jac[0]
    return pts, jac


def batched_geometry(mesh, ref_pts, elems=None):
    """Points and Jacobians for all (or selected) elements at shared ref points.

    Returns pts (nelem, m, 2), jac (nelem, m, 2, 2), det (nelem, m).
    """
    coords = mesh.element_coords(elems)       # (ne, nb, 2)
    phi = tri_shape(mesh.order, ref_pts)      # (m, nb)
    dphi = tri_shape_grad(mesh.order, ref_pts)
    pts = np.einsum("mb,ebx->emx", phi, coords)
    jac = np.einsum("mbr,ebx->emxr", dphi, coords)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    return pts, jac, det


def _check_not_inverted(mesh):
    rule = triangle_rule(default_degree(mesh.order))
    _, _, det = batched_geometry(mesh, rule.points)
    if det.min() <= 0.0:
        raise RuntimeError("mesh has an inverted element (nonpositive Jacobian)")


# -- disk mesh -------------------------------------------------------------


def _ring_start(j):
    return 1 + 3 * j * (j - 1) if j >= 1 else 0


def _disk_vertices(n_rings):
    pts = [np.zeros((1, 2))]
    for j in range(1, n_rings + 1):
        ang = 2.0 * np.pi * np.arange(6 * j) / (6 * j)
        r = j / n_rings
        pts.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
    return np.vstack(pts)


def _disk_triangles(n_rings):
    tris = []
    # center fan
    s1 = _ring_start(1)
    for i in range(6):
        tris.append((0, s1 + i, s1 + (i + 1) % 6))
    # strips
    for j in range(1, n_rings):
        mi, mo = 6 * j, 6 * (j + 1)
        si, so = _ring_start(j), _ring_start(j + 1)
        i = o = 0
        while i < mi or o < mo:
            adv_outer = o < mo and (i == mi or (o + 1) * mi <= (i + 1) * mo)
            if adv_outer:
                tris.append((so + o % mo, so + (o + 1) % mo, si + i % mi))
                o += 1
            else:
                tris.append((si + i % mi, so + o % mo, si + (i + 1) % mi))
                i += 1
    return np.array(tris, dtype=np.int64)


def _orient_ccw(nodes, tris):
    v = nodes[tris]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    sign = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flip = sign < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _boundary_directed_edges(tris):
    """Boundary edges directed as traversed by their (CCW) element."""
    seen = {}
    for conn in tris:
        for a, b in TRI_EDGES:
            key = (min(conn[a], conn[b]), max(conn[a], conn[b]))
            seen[key] = seen.get(key, 0) + 1
    out = []
    for conn in tris:
        for a, b in TRI_EDGES:
            key = (min(conn[a], conn[b]), max(conn[a], conn[b]))
            if seen[key] == 1:
                out.append((conn[a], conn[b]))
    return out


# Chord parameter of the boundary midside node before radial projection:
# 1/2 + min(BIAS_CAP, BIAS * chord length). Exactly 1/2 would make every
# curved edge a symmetric arc section, whose quadratic fit of the circle
# superconverges (O(h^4)) and hides the generic O(h^{k+1}) boundary-fit
# rate the geometric estimates are written for. The radial fit error grows
# linearly in the offset fraction (at fixed h, like offset * h^2), so an
# offset proportional to h pins the fit at its generic O(h^3) scale.
BOUNDARY_MIDNODE_BIAS = 0.3
BOUNDARY_MIDNODE_BIAS_CAP = 0.08


def _add_midside_nodes(nodes, tris, boundary_edges, project_to_circle):
    """Upgrade a vertex mesh to order 2. Returns nodes, elements, face midnode map."""
    bset = {(min(a, b), max(a, b)) for a, b in boundary_edges}
    nodes = list(map(tuple, nodes))
    mid_of = {}

    def midnode(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid_of:
            if project_to_circle and key in bset:
                pa, pb = np.array(nodes[key[0]]), np.array(nodes[key[1]])
                chord = np.linalg.norm(pb - pa)
                t = 0.5 + min(BOUNDARY_MIDNODE_BIAS_CAP, BOUNDARY_MIDNODE_BIAS * chord)
                p = (1.0 - t) * pa + t * pb
                p = p / np.linalg.norm(p)
            else:
                p = 0.5 * (np.array(nodes[a]) + np.array(nodes[b]))
            mid_of[key] = len(nodes)
            nodes.append(tuple(p))
        return mid_of[key]

    elems = []
    for conn in tris:
        mids = [midnode(conn[a], conn[b]) for a, b in TRI_EDGES]
        elems.append(tuple(conn) + tuple(mids))
    return np.array(nodes), np.array(elems, dtype=np.int64), mid_of


def _finish_mesh(nodes, tris, order, domain_kind, project_to_circle):
    tris = _orient_ccw(nodes, tris.copy())
    bedges = _boundary_directed_edges(tris)
    if order == 1:
        faces = np.array(bedges, dtype=np.int64)
        mesh = Mesh(nodes, tris, faces, order, domain_kind)
    elif order == 2:
        nodes2, elems2, mid_of = _add_midside_nodes(
            nodes, tris, bedges, project_to_circle
        )
        faces = np.array(
            [(a, b, mid_of[(min(a, b), max(a, b))]) for a, b in bedges],
            dtype=np.int64,
        )
        mesh = Mesh(nodes2, elems2, faces, order, domain_kind)
    else:
        raise ValueError(f"unsupported order {order}")
    _check_not_inverted(mesh)
    return mesh


def disk_mesh(n_rings, order=1):
    """Ring-layout disk mesh with 6*n_rings^2 elements."""
    if n_rings < 2:
        raise ValueError("need at least 2 rings")
    nodes = _disk_vertices(n_rings)
    tris = _disk_triangles(n_rings)
    return _finish_mesh(nodes, tris, order, "disk", project_to_circle=True)


def build_disk_mesh(target_h, order=1):
    """Disk mesh whose h is within a factor 2 of target_h.

    target_h must lie in (0, 0.5] so the boundary layer is one element deep.
    """
    if not 0.0 < target_h <= 0.5:
        raise ValueError(f"target_h {target_h} out of range (0, 0.5]")
    if order not in (1, 2):
        raise ValueError(f"unsupported order {order}")
    n = max(3, int(np.ceil(1.1 / target_h)))
    mesh = disk_mesh(n, order)
    if not target_h / 2.0 <= mesh.h <= 2.0 * target_h:
        raise RuntimeError("disk mesher missed the target h by more than 2x")
    return mesh


# -- square mesh -----------------------------------------------------------


def build_square_mesh(n_per_side, order=1):
    """Structured triangulation of [0,1]^2 with 2*n^2 elements."""
    n = int(n_per_side)
    if n < 2:
        raise ValueError("n_per_side must be >= 2")
    if order not in (1, 2):
        raise ValueError(f"unsupported order {order}")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    tris = np.array(tris, dtype=np.int64)
    return _finish_mesh(nodes, tris, order, "square", project_to_circle=False)
