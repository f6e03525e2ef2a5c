"""Constant-coefficient multilinear forms and the deformation-tensor algebra.

A form is stored as a dense coefficient tensor whose leading axes run over
the entries of each input slot (vectors contribute one axis, matrices two)
and whose trailing axes are the output entries (none for scalar output).
Evaluation is a sequence of tensordot contractions, so linearity in each
slot holds to rounding by construction.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MultilinearForm:
    slot_shapes: tuple
    output_shape: tuple
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.slot_shapes = tuple(tuple(s) for s in self.slot_shapes)
        self.output_shape = tuple(self.output_shape)
        expect = sum(self.slot_shapes, ()) + self.output_shape
        if self.coeffs.shape != expect:
            raise ValueError(
                f"coefficient tensor shape {self.coeffs.shape} != slots+output {expect}"
            )

    @property
    def n_slots(self):
        return len(self.slot_shapes)


def ml_eval(T, args):
    """Full contraction of the coefficient tensor with the slot arguments."""
    if len(args) != T.n_slots:
        raise ValueError(f"expected {T.n_slots} arguments, got {len(args)}")
    out = T.coeffs
    for shape, a in zip(T.slot_shapes, args):
        a = np.asarray(a, dtype=float)
        if a.shape != shape:
            raise ValueError(f"argument shape {a.shape} does not match slot {shape}")
        nd = len(shape)
        out = np.tensordot(a, out, axes=(list(range(nd)), list(range(nd))))
    if T.output_shape == ():
        return float(out)
    return out


def ml_norm(T):
    """Maximum absolute value over all coefficients."""
    return float(np.abs(T.coeffs).max()) if T.coeffs.size else 0.0


def ml_fix_slot(T, slot_index, c):
    """Contract one slot with a constant, yielding a form with one less slot."""
    c = np.asarray(c, dtype=float)
    if c.shape != T.slot_shapes[slot_index]:
        raise ValueError(f"constant shape {c.shape} does not match slot {slot_index}")
    start = sum(len(s) for s in T.slot_shapes[:slot_index])
    nd = len(T.slot_shapes[slot_index])
    coeffs = np.tensordot(
        c, np.moveaxis(T.coeffs, range(start, start + nd), range(nd)),
        axes=(list(range(nd)), list(range(nd))),
    )
    shapes = T.slot_shapes[:slot_index] + T.slot_shapes[slot_index + 1 :]
    return MultilinearForm(shapes, T.output_shape, coeffs)


def ml_from_function(fn, slot_shapes, output_shape=()):
    """Build the coefficient tensor of a multilinear map by basis enumeration."""
    slot_shapes = tuple(tuple(s) for s in slot_shapes)
    output_shape = tuple(output_shape)
    coeffs = np.zeros(sum(slot_shapes, ()) + output_shape)
    ranges = [list(itertools.product(*(range(d) for d in s))) for s in slot_shapes]
    for combo in itertools.product(*ranges):
        args = []
        for shape, idx in zip(slot_shapes, combo):
            e = np.zeros(shape)
            e[idx] = 1.0
            args.append(e)
        flat = sum(combo, ())
        coeffs[flat] = fn(*args)
    return MultilinearForm(slot_shapes, output_shape, coeffs)


def trace_pair_form(d=2):
    """The bilinear form (u1, u2) -> tr(u1^T u2)."""
    return ml_from_function(lambda a, b: np.trace(a.T @ b), [(d, d), (d, d)])


def det_form(d):
    """d-linear form, symmetrized over slots, with T(A, ..., A) = det(A)."""
    if d not in (2, 3):
        raise ValueError("det_form supports d in {2, 3}")
    shape = (d,) * (2 * d)
    coeffs = np.zeros(shape)
    perms = list(itertools.permutations(range(d)))

    def parity(p):
        sign = 1
        p = list(p)
        for i in range(len(p)):
            while p[i] != i:
                j = p[i]
                p[i], p[j] = p[j], p[i]
                sign = -sign
        return sign

    # unsymmetrized Leibniz coefficients: slot k holds row k
    base = np.zeros(shape)
    for sigma in perms:
        idx = []
        for k in range(d):
            idx.extend((k, sigma[k]))
        base[tuple(idx)] += parity(sigma)
    # symmetrize over slot permutations
    for pi in perms:
        order = []
        for k in range(d):
            order.extend((2 * pi[k], 2 * pi[k] + 1))
        coeffs += np.transpose(base, order)
    coeffs /= len(perms)
    return MultilinearForm([(d, d)] * d, (), coeffs)


def deformation_tensor(A):
    """(A + I)^{-T} (A + I)^{-1} det(A + I) - I for the displacement gradient A."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    G = A + np.eye(d)
    Ginv = np.linalg.inv(G)
    return Ginv.T @ Ginv * np.linalg.det(G) - np.eye(d)


def deformation_form(d=2):
    """Multilinear form behind the deformation tensor acting on a gradient.

    Slots: two copies for the inverse gradient, d copies for the gradient
    (through the determinant), and the vector it acts on; evaluated at
    (G^{-1}, G^{-1}, G, ..., G, v) it returns G^{-T} G^{-1} det(G) v.
    """
    detf = det_form(d)

    def fn(N1, N2, *rest):
        ms, v = rest[:-1], rest[-1]
        return (N1.T @ N2 @ v) * ml_eval(detf, ms)

    shapes = [(d, d), (d, d)] + [(d, d)] * d + [(d,)]
    return ml_from_function(fn, shapes, (d,))


def neumann_tail(A):
    """(A + I)^{-1} - I by direct solve."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    return np.linalg.solve(A + np.eye(d), np.eye(d)) - np.eye(d)


def neumann_partial_sum(A, n_terms):
    """Partial sum of the alternating power series for (A + I)^{-1} - I."""
    A = np.asarray(A, dtype=float)
    out = np.zeros_like(A)
    P = np.eye(A.shape[0])
    for i in range(1, n_terms + 1):
        P = P @ A
        out += (-1.0) ** i * P
    return out


def resolvent_difference(A, B):
    """(A + I)^{-1} - (B + I)^{-1}, computed directly."""
    return neumann_tail(A) - neumann_tail(B)


def resolvent_identity_residual(A, B):
    """Relative mismatch of the factored identity for the resolvent difference.

    Compares the direct difference with -(A+I)^{-1} (A-B) (B+I)^{-1}.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d = A.shape[0]
    lhs = resolvent_difference(A, B)
    Ainv = np.linalg.inv(A + np.eye(d))
    Binv = np.linalg.inv(B + np.eye(d))
    rhs = -Ainv @ (A - B) @ Binv
    scale = max(np.abs(lhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def comparison_decompose(T, us, cs, fixed=()):
    """Terms of the multilinear comparison T(u; v) - T(c; v).

    For m varying slots the difference expands into 2^m - 1 terms, one per
    nonempty subset S: the form evaluated with u_i - c_i on S and c_i off
    S (fixed trailing arguments v are passed through). Returns the list of
    evaluated terms; their sum equals ml_eval(T, u + v) - ml_eval(T, c + v).
    """
    m = len(us)
    if len(cs) != m:
        raise ValueError("need one constant per varying slot")
    terms = []
    diffs = [np.asarray(u, dtype=float) - np.asarray(c, dtype=float) for u, c in zip(us, cs)]
    for mask in range(1, 2**m):
        args = [
            diffs[i] if (mask >> i) & 1 else cs[i]
            for i in range(m)
        ]
        terms.append(ml_eval(T, list(args) + list(fixed)))
    return terms
