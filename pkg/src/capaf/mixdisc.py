"""Mixed discriminants of symmetric matrices.

The mixed discriminant Q(A_1, ..., A_n) is the full polarization of the
determinant: det(sum_k t_k A_k) = sum over index tuples of t_{i_1}...t_{i_n}
Q(A_{i_1}, ..., A_{i_n}).  Two independent evaluation routes are kept:

* the generalized-Kronecker-delta sum over signed permutation pairs
  (n! squared terms; used for n <= 3, where the expansion is explicit), and
* the inclusion-exclusion polarization over subsets,
  Q = (1/n!) sum_{S nonempty} (-1)^{n-|S|} det(sum_{k in S} A_k),
  valid for every n.

For positive definite arguments Q > 0 and the gradient matrix
dQ/d(A_1)_{ij} is positive definite, and Alexandrov's inequality
Q(A, B, rest)^2 >= Q(A, A, rest) Q(B, B, rest) holds with equality exactly
when A is proportional to B.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import InvalidInputError

_SIGN = {}


def _perm_pairs(n: int):
    """Signed permutation pairs ((sigma, pi), sign) for the delta-sum route."""
    if n not in _SIGN:
        perms = list(permutations(range(n)))

        def parity(p):
            seen = [False] * len(p)
            sign = 1
            for i in range(len(p)):
                if seen[i]:
                    continue
                j, cycle = i, 0
                while not seen[j]:
                    seen[j] = True
                    j = p[j]
                    cycle += 1
                if cycle % 2 == 0:
                    sign = -sign
            return sign

        _SIGN[n] = [(s, p, parity(s) * parity(p)) for s in perms for p in perms]
    return _SIGN[n]


def _as_stack(mats) -> np.ndarray:
    """Normalize input to an (m, B, n, n) stack of matrix batches."""
    arrs = [np.asarray(a, dtype=float) for a in mats]
    if any(a.ndim not in (2, 3) for a in arrs):
        raise InvalidInputError("matrices must have shape (n, n) or (B, n, n)")
    batched = any(a.ndim == 3 for a in arrs)
    arrs = [a[None] if a.ndim == 2 else a for a in arrs]
    b = max(a.shape[0] for a in arrs)
    arrs = [np.broadcast_to(a, (b,) + a.shape[1:]) for a in arrs]
    n = arrs[0].shape[-1]
    if any(a.shape[-2:] != (n, n) for a in arrs):
        raise InvalidInputError("matrices must share one size")
    return np.stack(arrs, axis=0), batched


@dataclass
class SymMatrixTuple:
    """Ordered tuple of n symmetric n x n matrices."""

    mats: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.mats)
        n = mats[0].shape[0]
        if len(mats) != n:
            raise InvalidInputError(f"need exactly n={n} matrices, got {len(mats)}")
        for m in mats:
            if m.shape != (n, n):
                raise InvalidInputError("matrices must share one square shape")
            if np.max(np.abs(m - m.T)) > 1e-12:
                raise InvalidInputError("matrix not symmetric within 1e-12")
        self.mats = mats

    @property
    def n(self) -> int:
        return self.mats[0].shape[0]


def mixed_discriminant(mats, route: str = "delta") -> np.ndarray:
    """Q(A_1, ..., A_n); accepts a SymMatrixTuple, a list of (n, n) matrices,
    or a list of (B, n, n) batches.  route in {'delta', 'subset'}."""
    if isinstance(mats, SymMatrixTuple):
        mats = mats.mats
    stack, batched = _as_stack(mats)
    m, b, n, _ = stack.shape
    if m != n:
        raise InvalidInputError(f"mixed discriminant of {n}x{n} matrices needs {n} arguments")
    if route == "subset":
        out = _subset_route(stack)
    elif route == "delta":
        if n > 3:
            raise InvalidInputError("delta-sum route implemented for n <= 3")
        out = _delta_route(stack)
    else:
        raise InvalidInputError(f"unknown route {route!r}")
    return out if batched else float(out[0])


def _delta_route(stack: np.ndarray) -> np.ndarray:
    n = stack.shape[-1]
    if n == 1:
        return stack[0, :, 0, 0].copy()
    if n == 2:
        a, c = stack[0], stack[1]
        return 0.5 * (a[:, 0, 0] * c[:, 1, 1] + a[:, 1, 1] * c[:, 0, 0]
                      - a[:, 0, 1] * c[:, 1, 0] - a[:, 1, 0] * c[:, 0, 1])
    out = np.zeros(stack.shape[1])
    for sigma, pi, sign in _perm_pairs(n):
        term = stack[0, :, sigma[0], pi[0]].copy()
        for k in range(1, n):
            term *= stack[k, :, sigma[k], pi[k]]
        out += sign * term
    return out / 6.0  # n == 3: 1/n!


def _subset_route(stack: np.ndarray) -> np.ndarray:
    m, b, n, _ = stack.shape
    out = np.zeros(b)
    for mask in range(1, 1 << n):
        idx = [k for k in range(n) if mask >> k & 1]
        s = stack[idx].sum(axis=0)
        out += (-1.0) ** (n - len(idx)) * np.linalg.det(s)
    fact = 1.0
    for k in range(2, n + 1):
        fact *= k
    return out / fact


def mixed_disc_gradient(mats) -> np.ndarray:
    """Gradient of Q with respect to the entries of the first matrix.

    Linear in A_1, so the (i, j) entry is Q(E_ij, A_2, ..., A_n) with E_ij
    the single-entry matrix; satisfies sum_ij (A_1)_ij grad_ij = Q and is
    positive definite when all arguments are.
    """
    if isinstance(mats, SymMatrixTuple):
        mats = mats.mats
    stack, batched = _as_stack(mats)
    m, b, n, _ = stack.shape
    if m != n:
        raise InvalidInputError("gradient needs the full n-argument tuple")
    if n == 1:
        out = np.ones((b, 1, 1))
    elif n == 2:
        a2 = stack[1]
        tr = np.trace(a2, axis1=-2, axis2=-1)
        out = 0.5 * (tr[:, None, None] * np.eye(2)[None] - np.swapaxes(a2, -1, -2))
    elif n == 3:
        out = np.zeros((b, 3, 3))
        for sigma, pi, sign in _perm_pairs(3):
            term = stack[1, :, sigma[1], pi[1]] * stack[2, :, sigma[2], pi[2]]
            out[:, sigma[0], pi[0]] += sign * term
        out /= 6.0
    else:
        raise InvalidInputError("gradient implemented for n <= 3")
    return out if batched else out[0]


def md_transform_check(mats, b_matrix, tol: float = 1e-10) -> dict:
    """Verify Q(A_1 B, ..., A_n B) = Q(A_1, ..., A_n) det(B)."""
    if isinstance(mats, SymMatrixTuple):
        mats = mats.mats
    b_matrix = np.asarray(b_matrix, dtype=float)
    det_b = float(np.linalg.det(b_matrix))
    if abs(det_b) < 1e-300:
        raise InvalidInputError("transform matrix must be invertible")
    lhs = mixed_discriminant([np.asarray(a) @ b_matrix for a in mats], route="subset")
    rhs = mixed_discriminant(mats, route="subset") * det_b
    scale = max(abs(lhs), abs(rhs), 1e-30)
    rel = abs(lhs - rhs) / scale
    return {"lhs": lhs, "rhs": rhs, "relative_error": rel, "passed": bool(rel <= tol)}


def alexandrov_md_check(a, b, rest=(), tol: float = 1e-12):
    """Alexandrov's mixed discriminant inequality as an InequalityReport.

    Q(A, B, rest)^2 >= Q(A, A, rest) Q(B, B, rest) for symmetric A and
    positive definite B and rest; equality iff A = c B.
    """
    from .functionals import InequalityReport

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    rest = [np.asarray(r, dtype=float) for r in rest]
    q_ab = mixed_discriminant([a, b, *rest])
    q_aa = mixed_discriminant([a, a, *rest])
    q_bb = mixed_discriminant([b, b, *rest])
    lhs = q_ab**2
    rhs = q_aa * q_bb
    # equality detection: is A proportional to B?
    scale_ab = np.sum(a * b) / max(np.sum(b * b), 1e-300)
    prop = float(np.max(np.abs(a - scale_ab * b))) <= 1e-12 * max(1.0, float(np.max(np.abs(a))))
    return InequalityReport.inequality("alexandrov-mixed-discriminant", lhs, rhs, tol,
                                       equality_expected=prop)


def mixed_discriminant_batch(mats) -> np.ndarray:
    """Batched Q over aligned (B, n, n) arrays; fast delta-route expressions."""
    stack, _ = _as_stack(mats)
    return _delta_route(stack)
