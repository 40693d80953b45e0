"""Minkowski-norm calculus: F, its derivatives, the dual norm, and the
metric structure of the Wulff shape.

A Minkowski norm is a positive 1-homogeneous function F on R^d (d = n+1),
smooth away from the origin, whose restriction of the Euclidean Hessian to
tangent spaces of the unit sphere (the anisotropy matrix A_F) is positive
definite.  The gradient map x -> DF(x) sends the unit sphere onto the Wulff
shape W = {F0 = 1}, where F0 is the dual norm

    F0(xi) = sup_{x != 0} <x, xi> / F(x).

The metric G is the Hessian of (1/2) F0^2 and Q is its third derivative;
both are 0-homogeneous resp. (-1)-homogeneous and are evaluated on W in
practice.  Homogeneity gives the identities G(xi)(xi, xi) = 1 and
Q(xi)(xi, ., .) = 0 for xi on W, which the tests use as oracles.

Three families are provided:

* isotropic      F(x) = |x|             (round Wulff shape)
* ellipsoid      F(x) = sqrt(<x, Mx>)   (M symmetric positive definite)
* perturbed      base family plus smooth zonal terms a * |x| * g(<x^, c>)

Isotropic and ellipsoid derivatives are closed form.  The perturbed family
defaults to Richardson-extrapolated central differences for its public
grad/hess (exact formulas are kept alongside as a cross-check), and its
dual norm is computed by a multistart damped Newton ascent on the sphere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fd
from .errors import InvalidInputError, ModelInvalidError, NumericError

_EPS = 1e-14


def _rows(x):
    """View input as (B, d); return (array, had_batch_dim)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], False
    return x, True


def _unbatch(val, batched):
    return val if batched else val[0]


def unit_rows(x: np.ndarray) -> np.ndarray:
    """Normalize each row to unit Euclidean length."""
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def tangent_basis(x: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the tangent space x^perp.

    Seeds with the coordinate axis least aligned with x, orthonormalizes,
    and (in 3d) completes with the cross product; the fixed seeding and
    ordering make every downstream cache reproducible.  Returns shape
    (..., d-1, d) with basis vectors as rows.
    """
    x, batched = _rows(x)
    b, d = x.shape
    if d == 2:
        t = np.stack([-x[:, 1], x[:, 0]], axis=-1)
        out = t[:, None, :]
    elif d == 3:
        axis = np.argmin(np.abs(x), axis=-1)
        e = np.eye(3)[axis]
        u1 = e - (np.sum(e * x, axis=-1, keepdims=True)) * x
        u1 = unit_rows(u1)
        u2 = np.cross(x, u1)
        out = np.stack([u1, u2], axis=1)
    else:
        raise InvalidInputError(f"ambient dimension {d} not supported")
    return out if batched else out[0]


# ---------------------------------------------------------------------------
# perturbation terms
# ---------------------------------------------------------------------------

_TERM_KINDS = ("bump", "linear", "quadratic")


@dataclass(frozen=True)
class PerturbTerm:
    """One zonal perturbation a * |x| * g(u), u = <x/|x|, center>.

    kind 'bump' is the smooth localized profile g(u) = exp(-(1 - u)/width)
    (zonal Gaussian in the 1 - cos distance); 'linear' g(u) = u translates
    the Wulff shape; 'quadratic' g(u) = u^2 is a low-order zonal term.
    """

    kind: str
    center: tuple
    width: float
    amplitude: float

    def __post_init__(self):
        if self.kind not in _TERM_KINDS:
            raise InvalidInputError(f"unknown perturbation kind {self.kind!r}")
        c = unit_rows(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if self.kind == "bump" and not (0.0 < self.width < 2.0):
            raise InvalidInputError("bump width must lie in (0, 2)")

    def _profile(self, u):
        """Return g(u), g'(u), g''(u) elementwise."""
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return u, np.ones_like(u), np.zeros_like(u)
        if self.kind == "quadratic":
            return u * u, 2.0 * u, np.full_like(u, 2.0)
        s = self.width
        g = np.exp(-(1.0 - u) / s)
        return g, g / s, g / s**2

    def value(self, x):
        x, batched = _rows(x)
        r = np.linalg.norm(x, axis=-1)
        u = x @ np.asarray(self.center) / r
        g, _, _ = self._profile(u)
        return _unbatch(self.amplitude * r * g, batched)

    def grad(self, x):
        x, batched = _rows(x)
        c = np.asarray(self.center)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        xh = x / r
        u = xh @ c
        g, g1, _ = self._profile(u)
        p = c[None, :] - u[:, None] * xh
        out = self.amplitude * (g[:, None] * xh + g1[:, None] * p)
        return _unbatch(out, batched)

    def hess(self, x):
        x, batched = _rows(x)
        b, d = x.shape
        c = np.asarray(self.center)
        r = np.linalg.norm(x, axis=-1)
        xh = x / r[:, None]
        u = xh @ c
        g, g1, g2 = self._profile(u)
        p = c[None, :] - u[:, None] * xh
        proj = np.eye(d)[None] - xh[:, :, None] * xh[:, None, :]
        h = (g - u * g1)[:, None, None] * proj + g2[:, None, None] * p[:, :, None] * p[:, None, :]
        out = self.amplitude * h / r[:, None, None]
        return _unbatch(out, batched)


# ---------------------------------------------------------------------------
# norm models
# ---------------------------------------------------------------------------


class MinkowskiNorm:
    """Base class; subclasses implement value/grad/hess and the dual side."""

    family = "abstract"
    dim: int
    fd_step: float = 1e-4

    # -- primal side --------------------------------------------------------

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def hess(self, x) -> np.ndarray:
        raise NotImplementedError

    def _check_nonzero(self, x):
        x, batched = _rows(x)
        if np.any(np.linalg.norm(x, axis=-1) < _EPS):
            raise InvalidInputError("norm evaluated at the zero vector")
        return x, batched

    def cahn_hoffman(self, x, on_nonunit: str = "normalize") -> np.ndarray:
        """Gradient map DF at unit x; parametrizes the Wulff shape.

        Equals F(x) x + (spherical gradient of F) for unit x.
        """
        x, batched = _rows(x)
        r = np.linalg.norm(x, axis=-1)
        off = np.abs(r - 1.0) > 1e-12
        if np.any(off):
            if on_nonunit == "reject":
                raise InvalidInputError("cahn_hoffman requires unit input")
            x = x / r[:, None]
        return _unbatch(self.grad(x), batched)

    def anisotropy_matrix(self, x, basis: np.ndarray | None = None) -> np.ndarray:
        """Tangent restriction of the Hessian of F at unit x.

        ``basis`` is an orthonormal tangent basis with shape (..., n, d);
        when omitted the deterministic coordinate-seeded basis is used.
        """
        x, batched = _rows(x)
        if basis is None:
            basis = tangent_basis(x)
        else:
            basis = np.asarray(basis, dtype=float)
            if not batched:
                basis = basis[None]
            elif basis.ndim == 2:
                basis = np.broadcast_to(basis, (x.shape[0],) + basis.shape)
        h = self.hess(x)
        a = np.einsum("bki,bij,blj->bkl", basis, h, basis)
        return _unbatch(a, batched)

    # -- dual side -----------------------------------------------------------

    def dual_value(self, xi) -> np.ndarray:
        raise NotImplementedError

    def metric(self, xi) -> np.ndarray:
        """G(xi): Hessian of (1/2) F0^2, shape (..., d, d)."""
        raise NotImplementedError

    def q_tensor(self, xi) -> np.ndarray:
        """Q(xi): third derivative of (1/2) F0^2, shape (..., d, d, d)."""
        raise NotImplementedError

    def metric_on_wulff(self, z, x_warm) -> np.ndarray:
        """G at points z = DF(x_warm) on the Wulff shape (batched)."""
        return self.metric(z)

    def q_on_wulff(self, z, x_warm) -> np.ndarray:
        return self.q_tensor(z)

    def gauss_preimage(self, z, x_warm=None) -> np.ndarray:
        """Unit x with DF(x) parallel to z (inverse Cahn-Hoffman direction)."""
        raise NotImplementedError

    # -- diagnostics ----------------------------------------------------------

    def validation_sample(self) -> np.ndarray:
        from .capgeom import icosphere_vertices

        if self.dim == 3:
            return icosphere_vertices(5)
        phi = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def anisotropy_condition(self, sample: np.ndarray | None = None) -> float:
        """Max condition number of A_F over a sphere sample (degeneracy gauge)."""
        pts = self.validation_sample() if sample is None else np.atleast_2d(sample)
        a = self.anisotropy_matrix(pts)
        ev = np.linalg.eigvalsh(a)
        if np.any(ev[:, 0] <= 0):
            return float("inf")
        return float(np.max(ev[:, -1] / ev[:, 0]))

    def descriptor(self) -> dict:
        raise NotImplementedError


class IsotropicNorm(MinkowskiNorm):
    """F(x) = |x|; the Wulff shape is the round unit sphere."""

    family = "isotropic"

    def __init__(self, dim: int = 3):
        self.dim = dim

    def value(self, x):
        x, batched = self._check_nonzero(x)
        return _unbatch(np.linalg.norm(x, axis=-1), batched)

    def grad(self, x):
        x, batched = self._check_nonzero(x)
        return _unbatch(unit_rows(x), batched)

    def hess(self, x):
        x, batched = self._check_nonzero(x)
        r = np.linalg.norm(x, axis=-1)
        xh = x / r[:, None]
        h = (np.eye(self.dim)[None] - xh[:, :, None] * xh[:, None, :]) / r[:, None, None]
        return _unbatch(h, batched)

    def dual_value(self, xi):
        xi, batched = self._check_nonzero(xi)
        return _unbatch(np.linalg.norm(xi, axis=-1), batched)

    def metric(self, xi):
        xi, batched = _rows(xi)
        g = np.broadcast_to(np.eye(self.dim), (xi.shape[0], self.dim, self.dim)).copy()
        return _unbatch(g, batched)

    def q_tensor(self, xi):
        xi, batched = _rows(xi)
        return _unbatch(np.zeros((xi.shape[0],) + (self.dim,) * 3), batched)

    def gauss_preimage(self, z, x_warm=None):
        z, batched = self._check_nonzero(z)
        return _unbatch(unit_rows(z), batched)

    def descriptor(self):
        return {"family": "isotropic", "dim": self.dim}


class EllipsoidNorm(MinkowskiNorm):
    """F(x) = sqrt(<x, Mx>) for symmetric positive definite M.

    The dual is sqrt(<xi, M^-1 xi>); G = M^-1 is constant and Q = 0.
    """

    family = "ellipsoid"

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError("ellipsoid matrix must be square")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise InvalidInputError("ellipsoid matrix must be symmetric")
        ev = np.linalg.eigvalsh(m)
        if ev[0] <= 0:
            raise ModelInvalidError("ellipsoid matrix is not positive definite")
        self.matrix = 0.5 * (m + m.T)
        self.matrix_inv = np.linalg.inv(self.matrix)
        self.dim = m.shape[0]

    def value(self, x):
        x, batched = self._check_nonzero(x)
        return _unbatch(np.sqrt(np.einsum("bi,ij,bj->b", x, self.matrix, x)), batched)

    def grad(self, x):
        x, batched = self._check_nonzero(x)
        mx = x @ self.matrix
        f = np.sqrt(np.einsum("bi,bi->b", x, mx))
        return _unbatch(mx / f[:, None], batched)

    def hess(self, x):
        x, batched = self._check_nonzero(x)
        mx = x @ self.matrix
        f = np.sqrt(np.einsum("bi,bi->b", x, mx))
        h = self.matrix[None] / f[:, None, None] - mx[:, :, None] * mx[:, None, :] / f[:, None, None] ** 3
        return _unbatch(h, batched)

    def dual_value(self, xi):
        xi, batched = self._check_nonzero(xi)
        return _unbatch(np.sqrt(np.einsum("bi,ij,bj->b", xi, self.matrix_inv, xi)), batched)

    def metric(self, xi):
        xi, batched = _rows(xi)
        g = np.broadcast_to(self.matrix_inv, (xi.shape[0], self.dim, self.dim)).copy()
        return _unbatch(g, batched)

    def q_tensor(self, xi):
        xi, batched = _rows(xi)
        return _unbatch(np.zeros((xi.shape[0],) + (self.dim,) * 3), batched)

    def gauss_preimage(self, z, x_warm=None):
        z, batched = self._check_nonzero(z)
        return _unbatch(unit_rows(z @ self.matrix_inv), batched)

    def descriptor(self):
        return {"family": "ellipsoid", "matrix": self.matrix.tolist()}


class PerturbedNorm(MinkowskiNorm):
    """Base family plus smooth zonal terms.

    Public grad/hess use Richardson central differences by default
    (``derivatives='fd'``); the closed-form routes stay available as
    exact_grad/exact_hess for cross-checks.  Construction validates F > 0
    and A_F > 0 on a dense sphere sample and fails loudly otherwise.
    """

    family = "perturbed"

    def __init__(self, base: MinkowskiNorm, terms, fd_step: float = 1e-4,
                 derivatives: str = "fd", validate: bool = True):
        if derivatives not in ("fd", "analytic"):
            raise InvalidInputError("derivatives must be 'fd' or 'analytic'")
        self.base = base
        self.terms = tuple(terms)
        self.dim = base.dim
        self.fd_step = float(fd_step)
        self.derivatives = derivatives
        self._dual_starts = None
        if validate:
            self.validate()

    # primal

    def value(self, x):
        x, batched = self._check_nonzero(x)
        v = np.asarray(self.base.value(x), dtype=float).copy()
        for t in self.terms:
            v += t.value(x)
        return _unbatch(v, batched)

    def exact_grad(self, x):
        x, batched = self._check_nonzero(x)
        g = np.asarray(self.base.grad(x), dtype=float).copy()
        for t in self.terms:
            g += t.grad(x)
        return _unbatch(g, batched)

    def exact_hess(self, x):
        x, batched = self._check_nonzero(x)
        h = np.asarray(self.base.hess(x), dtype=float).copy()
        for t in self.terms:
            h += t.hess(x)
        return _unbatch(h, batched)

    def grad(self, x):
        if self.derivatives == "analytic":
            return self.exact_grad(x)
        x, batched = self._check_nonzero(x)
        scale = np.maximum(1.0, np.linalg.norm(x, axis=-1))
        h = self.fd_step * float(np.median(scale))
        g, _ = fd.central_gradient(lambda p: np.asarray(self.value(p)), x, h)
        return _unbatch(g, batched)

    def hess(self, x):
        if self.derivatives == "analytic":
            return self.exact_hess(x)
        x, batched = self._check_nonzero(x)
        scale = np.maximum(1.0, np.linalg.norm(x, axis=-1))
        h = self.fd_step * float(np.median(scale))
        hess, _ = fd.central_hessian(lambda p: np.asarray(self.value(p)), x, h)
        hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
        return _unbatch(hess, batched)

    def validate(self):
        pts = self.validation_sample()
        vals = np.asarray(self.value(pts))
        if np.any(vals <= 0):
            i = int(np.argmin(vals))
            raise ModelInvalidError(f"perturbed norm non-positive at sample node {i}", node=pts[i])
        a = np.asarray(self.base.hess(pts)).copy()
        for t in self.terms:
            a += t.hess(pts)
        tb = tangent_basis(pts)
        at = np.einsum("bki,bij,blj->bkl", tb, a, tb)
        ev = np.linalg.eigvalsh(at)
        if np.any(ev[:, 0] <= 0):
            i = int(np.argmin(ev[:, 0]))
            raise ModelInvalidError(
                f"anisotropy matrix not positive definite at sample node {i} "
                f"(min eigenvalue {ev[i, 0]:.3e})",
                node=pts[i],
            )

    # dual: multistart damped Newton ascent of <y, xi>/F(y) over the sphere

    def _coarse_starts(self):
        if self._dual_starts is None:
            if self.dim == 3:
                from .capgeom import icosphere_vertices

                verts = icosphere_vertices(0)  # 12 icosahedron vertices
                axes = np.concatenate([np.eye(3), -np.eye(3)], axis=0)
                self._dual_starts = unit_rows(np.concatenate([verts, axes], axis=0))[:20]
            else:
                phi = np.linspace(0.0, 2.0 * np.pi, 20, endpoint=False)
                self._dual_starts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return self._dual_starts

    def _phi(self, y, xi):
        return np.einsum("bi,bi->b", y, xi) / self.value(y)

    def _newton_ascend(self, y, xi, tol, max_iter=60):
        """Damped Newton on the sphere, batched; returns (y, residual)."""
        b, d = y.shape
        scale = np.linalg.norm(xi, axis=-1)
        res = np.full(b, np.inf)
        for _ in range(max_iter):
            f = np.asarray(self.value(y))
            df = np.asarray(self.exact_grad(y))
            num = np.einsum("bi,bi->b", y, xi)
            gam = num / f  # current phi
            grad_phi = xi / f[:, None] - gam[:, None] * df / f[:, None]
            tb = tangent_basis(y)
            gt = np.einsum("bki,bi->bk", tb, grad_phi)
            res = np.linalg.norm(gt, axis=-1) / np.maximum(scale, _EPS)
            active = res > tol
            if not np.any(active):
                break
            d2f = np.asarray(self.exact_hess(y))
            h = (
                -(xi[:, :, None] * df[:, None, :] + df[:, :, None] * xi[:, None, :]) / f[:, None, None] ** 2
                - gam[:, None, None] * d2f / f[:, None, None]
                + 2.0 * gam[:, None, None] * df[:, :, None] * df[:, None, :] / f[:, None, None] ** 2
            )
            ht = np.einsum("bki,bij,blj->bkl", tb, h, tb)
            n = d - 1
            reg = 1e-12 * np.eye(n)
            try:
                step = np.linalg.solve(-(ht - reg), gt[..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = gt
            # damping: backtrack until phi does not decrease
            phi0 = gam
            t = np.ones(b)
            ynew = y.copy()
            for _ in range(30):
                cand = unit_rows(y + np.einsum("bk,bkd->bd", t[:, None] * step, tb))
                phic = self._phi(cand, xi)
                ok = (phic >= phi0 - 1e-15) | ~active
                ynew = np.where(ok[:, None], cand, ynew)
                if np.all(ok):
                    break
                t = np.where(ok, t, t * 0.5)
            y = np.where(active[:, None], ynew, y)
        return y, res

    def dual_value(self, xi, return_argmax: bool = False):
        xi, batched = self._check_nonzero(xi)
        tol = 1e-10
        starts = self._coarse_starts()
        vals = np.stack([self._phi(np.broadcast_to(s, xi.shape).copy(), xi) for s in starts], axis=0)
        order = np.argsort(-vals, axis=0)
        best_y = None
        best_phi = np.full(xi.shape[0], -np.inf)
        for rank in range(3):
            y0 = starts[order[rank]]
            y, res = self._newton_ascend(y0.copy(), xi, tol)
            phi = self._phi(y, xi)
            take = phi > best_phi
            best_phi = np.where(take, phi, best_phi)
            best_y = y if best_y is None else np.where(take[:, None], y, best_y)
        yf, res = self._newton_ascend(best_y, xi, tol, max_iter=10)
        phi = self._phi(yf, xi)
        if np.any(res > 1e-6):
            raise NumericError(
                "dual-norm ascent did not converge",
                best_value=float(np.max(phi)),
                residual=float(np.max(res)),
            )
        if return_argmax:
            return _unbatch(phi, batched), _unbatch(yf, batched)
        return _unbatch(phi, batched)

    def dual_value_warm(self, xi, y0, return_argmax: bool = False):
        """Batched dual values with a warm-start maximizer per row."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        y0 = np.atleast_2d(np.asarray(y0, dtype=float))
        if y0.shape[0] == 1 and xi.shape[0] > 1:
            y0 = np.broadcast_to(y0, xi.shape).copy()
        y, res = self._newton_ascend(unit_rows(y0), xi, 1e-12, max_iter=30)
        phi = self._phi(y, xi)
        if np.any(res > 1e-6):
            raise NumericError("warm dual ascent did not converge",
                               best_value=float(np.max(phi)), residual=float(np.max(res)))
        if return_argmax:
            return phi, y
        return phi

    def gauss_preimage(self, z, x_warm=None):
        z, batched = self._check_nonzero(z)
        if x_warm is None:
            _, y = self.dual_value(z, return_argmax=True)
            y = np.atleast_2d(y)
        else:
            x_warm = np.atleast_2d(np.asarray(x_warm, dtype=float))
            _, y = self.dual_value_warm(z, x_warm, return_argmax=True)
        return _unbatch(y, batched)

    # metric / Q by central differences of (1/2) F0^2

    def _half_dual_sq(self, pts, warm):
        val = self.dual_value_warm(pts, warm)
        return 0.5 * val * val

    def metric(self, xi):
        xi, batched = _rows(xi)
        _, y = self.dual_value(xi, return_argmax=True)
        out = self.metric_on_wulff(xi, np.atleast_2d(y))
        return _unbatch(out, batched)

    def metric_on_wulff(self, z, x_warm):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        x_warm = np.atleast_2d(np.asarray(x_warm, dtype=float))
        b, d = z.shape
        h = self.fd_step * float(np.median(np.maximum(1.0, np.linalg.norm(z, axis=-1))))
        if np.any(np.linalg.norm(z, axis=-1) < 10.0 * h):
            raise InvalidInputError("metric stencil too close to the origin")

        # central_hessian evaluates stencils in (b*k, d) blocks with the k
        # shifts of one batch row contiguous; replicate warm starts to match.
        def fwrap(pts):
            m = pts.shape[0]
            if m == b:
                return self._half_dual_sq(pts, x_warm)
            warm = np.repeat(x_warm, m // b, axis=0)
            return self._half_dual_sq(pts, warm)

        hess, _ = fd.central_hessian(fwrap, z, h, richardson=False)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    def q_tensor(self, xi):
        xi, batched = _rows(xi)
        _, y = self.dual_value(xi, return_argmax=True)
        out = self.q_on_wulff(xi, np.atleast_2d(y))
        return _unbatch(out, batched)

    def q_on_wulff(self, z, x_warm):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        x_warm = np.atleast_2d(np.asarray(x_warm, dtype=float))
        b, d = z.shape
        k = 10.0 * self.fd_step
        q = np.empty((b, d, d, d))
        eye = np.eye(d)
        for c in range(d):
            gp = self.metric_on_wulff(z + k * eye[c], x_warm)
            gm = self.metric_on_wulff(z - k * eye[c], x_warm)
            q[:, :, :, c] = (gp - gm) / (2.0 * k)
        # enforce total symmetry
        q = (q + np.transpose(q, (0, 1, 3, 2)) + np.transpose(q, (0, 3, 2, 1))
             + np.transpose(q, (0, 2, 1, 3)) + np.transpose(q, (0, 2, 3, 1))
             + np.transpose(q, (0, 3, 1, 2))) / 6.0
        return q

    def descriptor(self):
        return {
            "family": "perturbed",
            "base": self.base.descriptor(),
            "fd_step": self.fd_step,
            "derivatives": self.derivatives,
            "terms": [
                {"kind": t.kind, "center": list(t.center), "width": t.width, "amplitude": t.amplitude}
                for t in self.terms
            ],
        }


def norm_from_descriptor(desc: dict) -> MinkowskiNorm:
    """Rebuild a norm model from its descriptor() dict."""
    fam = desc["family"]
    if fam == "isotropic":
        return IsotropicNorm(dim=int(desc.get("dim", 3)))
    if fam == "ellipsoid":
        return EllipsoidNorm(np.asarray(desc["matrix"], dtype=float))
    if fam == "perturbed":
        base = norm_from_descriptor(desc["base"])
        terms = [PerturbTerm(t["kind"], tuple(t["center"]), float(t["width"]), float(t["amplitude"]))
                 for t in desc["terms"]]
        return PerturbedNorm(base, terms, fd_step=float(desc.get("fd_step", 1e-4)),
                             derivatives=desc.get("derivatives", "fd"))
    raise InvalidInputError(f"unknown norm family {fam!r}")


# ---------------------------------------------------------------------------
# operation-style wrappers
# ---------------------------------------------------------------------------


def eval_norm(model: MinkowskiNorm, x) -> np.ndarray:
    return model.value(x)


def cahn_hoffman(model: MinkowskiNorm, x, on_nonunit="normalize") -> np.ndarray:
    return model.cahn_hoffman(x, on_nonunit=on_nonunit)


def anisotropy_matrix(model: MinkowskiNorm, x, basis=None) -> np.ndarray:
    return model.anisotropy_matrix(x, basis=basis)


def dual_norm(model: MinkowskiNorm, xi) -> np.ndarray:
    return model.dual_value(xi)


def metric_g(model: MinkowskiNorm, xi) -> np.ndarray:
    return model.metric(xi)


def q_tensor(model: MinkowskiNorm, xi) -> np.ndarray:
    return model.q_tensor(xi)
