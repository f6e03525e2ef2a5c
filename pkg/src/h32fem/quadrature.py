"""Quadrature rules on the reference triangle and reference edge.

Reference cells: the unit triangle {(x, y): x >= 0, y >= 0, x + y <= 1}
(measure 1/2) and the unit interval [0, 1] (measure 1). Triangle rules of
degree >= 2 are collapsed tensor-product Gauss rules (square -> triangle via
(u, v) -> (u, v*(1-u)) with the 1-u Jacobian absorbed into the weights),
which are exact for all polynomials up to the requested total degree and
have strictly positive weights.
"""

from dataclasses import dataclass

import numpy as np

MAX_TRIANGLE_DEGREE = 50
MAX_EDGE_DEGREE = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference cell, exact up to `degree`."""

    points: np.ndarray   # (n, 2) on the triangle, (n,) on the edge
    weights: np.ndarray  # (n,)
    degree: int

    def __len__(self):
        return len(self.weights)


def _gauss01(npts):
    """Gauss-Legendre rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_rule(degree):
    """Rule on [0, 1] exact for polynomials up to `degree`."""
    if not 0 <= degree <= MAX_EDGE_DEGREE:
        raise ValueError(f"unsupported edge quadrature degree {degree}")
    n = degree // 2 + 1
    x, w = _gauss01(n)
    return QuadratureRule(points=x, weights=w, degree=degree)


def triangle_rule(degree):
    """Rule on the reference triangle exact for total degree <= `degree`."""
    if not 0 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    if degree <= 1:
        # centroid rule, weight = reference measure
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        return QuadratureRule(points=pts, weights=np.array([0.5]), degree=1)
    # collapsed product: u-direction sees degree+1 after the Jacobian
    nu = (degree + 1) // 2 + 1
    nv = degree // 2 + 1
    u, wu = _gauss01(nu)
    v, wv = _gauss01(nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu * (1.0 - u), wv)
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    return QuadratureRule(points=pts, weights=W.ravel(), degree=degree)


def quadrature(cell, degree):
    """Dispatch on cell kind: 'triangle' or 'edge'."""
    if cell == "triangle":
        return triangle_rule(degree)
    if cell == "edge":
        return edge_rule(degree)
    raise ValueError(f"unknown reference cell {cell!r}")


def default_degree(order):
    """Assembly quadrature degree for geometry order k: 2k + 4.

    High enough that the rational integrands on curved order-k elements are
    integrated well below the h^k terms the experiments measure.
    """
    return 2 * order + 4
