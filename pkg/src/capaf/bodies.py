"""Capillary convex bodies bound to a cap mesh.

A body is a support field plus per-node caches on one mesh: boundary
positions X = Ds, the Euclidean radii matrix W = D^2 s restricted to the
node tangent basis, the anisotropic radii matrix tau in the g-ring frame,
and the anisotropic principal curvatures and normalized symmetric means.
The support field is the single source of truth; everything else is a
derived view, which keeps Minkowski combinations exact (caches combine
linearly, curvatures are re-derived from the combined tau).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import comb

import numpy as np

from .capgeom import (CapConfig, CapMesh, build_cap_mesh,
                      icosphere_vertices, region_residual)
from .errors import (ConvexityViolationError, GenerationError,
                     InvalidInputError)
from .fields import (CombinationField, LinearField, SphericalBumpField,
                     SupportField, WulffCapField, tau_from_generator)

_BACKTRACK_LIMIT = 20


def _sigma_means(kappa: np.ndarray) -> np.ndarray:
    """Normalized symmetric means H_k = sigma_k(kappa)/binom(n, k), k=0..n+1."""
    nn, n = kappa.shape
    h = np.empty((nn, n + 2))
    h[:, 0] = 1.0
    if n == 1:
        h[:, 1] = kappa[:, 0]
    elif n == 2:
        h[:, 1] = 0.5 * (kappa[:, 0] + kappa[:, 1])
        h[:, 2] = kappa[:, 0] * kappa[:, 1]
    else:
        for k in range(1, n + 1):
            from itertools import combinations

            acc = np.zeros(nn)
            for idx in combinations(range(n), k):
                acc += np.prod(kappa[:, idx], axis=1)
            h[:, k] = acc / comb(n, k)
    h[:, n + 1] = 0.0
    return h


def _eig_pair(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Eigenvalues of W A^{-1} (generalized problem W v = lambda A v)."""
    m = np.linalg.solve(a, w)
    n = m.shape[-1]
    if n == 1:
        return m[:, 0, 0][:, None]
    if n == 2:
        tr = m[:, 0, 0] + m[:, 1, 1]
        det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
        disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
        return np.stack([tr / 2.0 - disc, tr / 2.0 + disc], axis=-1)
    return np.sort(np.linalg.eigvals(m).real, axis=-1)


class CapillaryBody:
    """A capillary convex body: support field plus mesh-bound caches."""

    def __init__(self, mesh: CapMesh, field: SupportField, provenance: dict,
                 validate: bool = True):
        self.mesh = mesh
        self.field = field
        self.provenance = dict(provenance)
        self._populate()
        if validate:
            self._validate()

    def _populate(self):
        mesh = self.mesh
        x = mesh.nodes
        self.s = np.asarray(self.field.value(x))
        self.shat = self.s / mesh.F_vals
        self.X = np.asarray(self.field.grad(x))
        hess = np.asarray(self.field.hess(x))
        self.W = np.einsum("bki,bij,blj->bkl", mesh.tb, hess, mesh.tb)
        self.detW = np.linalg.det(self.W) if mesh.n > 1 else self.W[:, 0, 0].copy()
        self.tau, self.tau_asym = tau_from_generator(mesh, self.field)
        radii = np.linalg.eigvalsh(self.tau)
        self.tau_eigs = radii
        with np.errstate(divide="ignore"):
            self.kappa = np.where(radii > 0, 1.0 / radii, np.inf)[:, ::-1]
        self.H = _sigma_means(self.kappa)
        self.anchor = np.asarray(self.field.anchor, dtype=float)
        self.shat_anchored = (self.s - x @ self.anchor) / mesh.F_vals
        w_ev = np.linalg.eigvalsh(self.W)
        self.min_w_eig = float(np.min(w_ev[:, 0]))
        self.min_tau_eig = float(np.min(radii[:, 0]))
        self.convex = bool(self.min_w_eig > 0 and self.min_tau_eig > 0)
        bd = mesh.boundary_idx
        self.boundary_plane_dev = float(np.max(np.abs(self.X[bd, -1]))) if len(bd) else 0.0
        halfspace_min = float(np.min(self.X[:, -1]))
        self.capillary = bool(self.boundary_plane_dev <= 1e-6 * max(1.0, float(np.max(np.abs(self.s))))
                              and halfspace_min >= -1e-9)

    def _validate(self):
        if not self.convex:
            raise ConvexityViolationError(
                f"body not strictly convex (min W eig {self.min_w_eig:.3e}, "
                f"min tau eig {self.min_tau_eig:.3e})")
        if not self.capillary:
            raise InvalidInputError(
                f"body violates the capillary boundary condition "
                f"(plane deviation {self.boundary_plane_dev:.3e})")

    # ------------------------------------------------------------------ views

    def capillary_support(self, i=None) -> np.ndarray:
        """s_hat(xi_i) = s(x_i)/F(x_i)."""
        return self.shat if i is None else self.shat[i]

    def capillary_support_metric_form(self, i=None) -> np.ndarray:
        """Same value through G(T^-1 xi)(X, T^-1 xi); a second route."""
        vals = np.einsum("bi,bij,bj->b", self.X, self.mesh.G, self.mesh.psi)
        return vals if i is None else vals[i]

    def u_bar(self, i=None) -> np.ndarray:
        """Alternative normalization s_hat / s_hat_o (read-only diagnostic)."""
        so = self.mesh.cap_support_values() / self.mesh.F_vals
        vals = self.shat / so
        return vals if i is None else vals[i]

    def tau_matrix(self, i: int) -> np.ndarray:
        return self.tau[i]

    def tau_eigs_secondary(self) -> np.ndarray:
        """Radii via the Euclidean route: eigenvalues of W A_F^{-1}."""
        return _eig_pair(self.W, self.mesh.A)

    def anisotropic_curvatures(self, i: int):
        """(kappa^F, [H_0..H_{n+1}]) at node i."""
        if self.tau_eigs[i, 0] <= 0:
            raise ConvexityViolationError(f"nonpositive radii eigenvalue at node {i}")
        return self.kappa[i], self.H[i]

    def robin_residual(self, i: int):
        """Boundary condition residual at boundary node i.

        Returns (residual, euclidean_residual, ok) where the first is
        grad_{mu_F} s_hat - w0 s_hat / (F(nu) <mu, E_d>), the second is
        <X, E_d> (both vanish together for capillary bodies), and ok is
        False when the co-normal is numerically vertical-degenerate.
        """
        mesh = self.mesh
        loop = list(mesh.boundary_loop)
        if i not in loop:
            raise InvalidInputError(f"node {i} is not a boundary node")
        b = loop.index(i)
        if not mesh.conormal_ok[b]:
            return 0.0, float(self.X[i, -1]), False
        grad_shat = self.X[i] - self.shat[i] * mesh.psi[i]
        lhs = grad_shat @ mesh.G[i] @ mesh.muF[b]
        rhs = self.mesh.omega0 * self.shat[i] / (mesh.F_vals[i] * mesh.mu[b, -1])
        return float(lhs - rhs), float(self.X[i, -1]), True

    def robin_residuals(self):
        """(residuals, euclid, ok_mask) across the ordered boundary loop."""
        mesh = self.mesh
        loop = mesh.boundary_loop
        grad_shat = self.X[loop] - self.shat[loop, None] * mesh.psi[loop]
        lhs = np.einsum("bi,bij,bj->b", grad_shat, mesh.G[loop], mesh.muF)
        with np.errstate(divide="ignore", invalid="ignore"):
            rhs = mesh.omega0 * self.shat[loop] / (mesh.F_vals[loop] * mesh.mu[:, -1])
        res = np.where(mesh.conormal_ok, lhs - rhs, 0.0)
        return res, self.X[loop, -1], mesh.conormal_ok.copy()

    def reconstruction_residual(self) -> float:
        """max |(grad s_hat + s_hat T^-1 xi) - X| over nodes (two routes)."""
        mesh = self.mesh
        grad_comp = np.einsum("bkd,bde,be->bk", mesh.frame, mesh.G, self.X)
        grad_amb = np.einsum("bk,bkd->bd", grad_comp, mesh.frame)
        recon = grad_amb + self.shat[:, None] * mesh.psi
        return float(np.max(np.abs(recon - self.X)))

    def scale_estimate(self) -> float:
        return float(np.max(np.abs(self.s)))

    # -------------------------------------------------------------- serialize

    def record(self) -> dict:
        return {
            "provenance": self.provenance,
            "norm": self.mesh.model.descriptor(),
            "n": self.mesh.n,
            "omega0": self.mesh.omega0,
            "mesh_level": self.mesh.config.mesh_level,
            "flags": {"convex": self.convex, "capillary": self.capillary},
        }

    def record_json(self) -> str:
        return json.dumps(self.record(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _as_mesh(mesh_or_config) -> CapMesh:
    if isinstance(mesh_or_config, CapMesh):
        return mesh_or_config
    if isinstance(mesh_or_config, CapConfig):
        return build_cap_mesh(mesh_or_config)
    raise InvalidInputError("expected a CapMesh or CapConfig")


def make_wulff_cap(mesh_or_config, r0: float, e_vec=None) -> CapillaryBody:
    """Capillary Wulff cap of radius r0: support r0 (F(x) + w0 <E, x>).

    E defaults to EF; any E with <E, E_d> = 1 keeps the boundary condition
    and horizontally shifts the body.
    """
    mesh = _as_mesh(mesh_or_config)
    ef = mesh.EF
    e_vec = ef if e_vec is None else np.asarray(e_vec, dtype=float)
    field = WulffCapField(mesh.model, mesh.omega0, r0, e_vec, ef)
    prov = {"kind": "wulff-cap", "r0": r0, "e_vec": list(map(float, e_vec))}
    return CapillaryBody(mesh, field, prov)


def body_from_field(mesh: CapMesh, field: SupportField, provenance=None,
                    validate: bool = True) -> CapillaryBody:
    return CapillaryBody(mesh, field, provenance or {"kind": "custom"}, validate=validate)


def minkowski_combine(bodies, lambdas) -> CapillaryBody:
    """Body with support field sum_i lambda_i s_i (nonnegative weights).

    Caches combine linearly (bitwise-exact for a singleton combination);
    curvatures are re-derived from the combined radii matrix.
    """
    bodies = list(bodies)
    lambdas = [float(v) for v in lambdas]
    if not bodies or len(bodies) != len(lambdas):
        raise InvalidInputError("bodies and weights must align and be nonempty")
    if any(lam < 0 for lam in lambdas):
        raise InvalidInputError("weights must be nonnegative")
    if sum(lambdas) <= 0:
        raise InvalidInputError("weights must not all vanish")
    mesh = bodies[0].mesh
    if any(not mesh.same_mesh(b.mesh) for b in bodies):
        raise InvalidInputError("all bodies must share one mesh")
    field = CombinationField([b.field for b in bodies], lambdas)
    prov = {"kind": "combination", "weights": lambdas,
            "parts": [b.provenance.get("kind", "?") for b in bodies]}
    out = CapillaryBody.__new__(CapillaryBody)
    out.mesh = mesh
    out.field = field
    out.provenance = prov

    def lincomb(attr):
        acc = lambdas[0] * getattr(bodies[0], attr)
        for b, lam in zip(bodies[1:], lambdas[1:]):
            acc = acc + lam * getattr(b, attr)
        return acc

    out.s = lincomb("s")
    out.shat = lincomb("shat")
    out.X = lincomb("X")
    out.W = lincomb("W")
    out.tau = lincomb("tau")
    out.anchor = lincomb("anchor")
    out.detW = np.linalg.det(out.W) if mesh.n > 1 else out.W[:, 0, 0].copy()
    out.tau_asym = np.max(np.abs(out.tau - np.swapaxes(out.tau, 1, 2)), axis=(1, 2))
    radii = np.linalg.eigvalsh(out.tau)
    out.tau_eigs = radii
    with np.errstate(divide="ignore"):
        out.kappa = np.where(radii > 0, 1.0 / radii, np.inf)[:, ::-1]
    out.H = _sigma_means(out.kappa)
    out.shat_anchored = (out.s - mesh.nodes @ out.anchor) / mesh.F_vals
    w_ev = np.linalg.eigvalsh(out.W)
    out.min_w_eig = float(np.min(w_ev[:, 0]))
    out.min_tau_eig = float(np.min(radii[:, 0]))
    out.convex = bool(out.min_w_eig > 0 and out.min_tau_eig > 0)
    bd = mesh.boundary_idx
    out.boundary_plane_dev = float(np.max(np.abs(out.X[bd, -1]))) if len(bd) else 0.0
    out.capillary = bool(out.boundary_plane_dev <= 1e-6 * max(1.0, float(np.max(np.abs(out.s))))
                         and float(np.min(out.X[:, -1])) >= -1e-9)
    out._validate()
    return out


def translate_horizontal(body: CapillaryBody, v) -> CapillaryBody:
    """Body translated by a horizontal vector v."""
    v = np.asarray(v, dtype=float)
    if abs(v[-1]) > 1e-14:
        raise InvalidInputError("translation must be horizontal")
    field = CombinationField([body.field, LinearField(v)], [1.0, 1.0])
    prov = dict(body.provenance)
    prov["translated_by"] = list(map(float, v))
    return CapillaryBody(body.mesh, field, prov)


def _interior_candidate_directions(mesh: CapMesh) -> np.ndarray:
    """Mesh-independent coarse sample of directions inside the region.

    Built on a fixed level-2 icosphere (n=2) or a fixed angle grid (n=1)
    so the same seed yields the same field at every mesh level.
    """
    model, omega0 = mesh.model, mesh.omega0
    if mesh.n == 2:
        sample = icosphere_vertices(2)
    else:
        phi = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
        sample = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    r = region_residual(model, omega0, sample)
    cut = 0.45 * float(np.max(r))
    cand = sample[r > cut]
    if len(cand) == 0:
        cand = sample[np.argmax(r)][None, :]
    return cand


def _boundary_margin_cos(mesh: CapMesh, center: np.ndarray) -> float:
    """min (1 - <c, x>) over a fixed dense sample of the region complement."""
    model, omega0 = mesh.model, mesh.omega0
    if mesh.n == 2:
        sample = icosphere_vertices(4)
    else:
        phi = np.linspace(0.0, 2.0 * np.pi, 2048, endpoint=False)
        sample = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    outside = sample[region_residual(model, omega0, sample) <= 0.0]
    if len(outside) == 0:
        return 2.0
    return float(np.min(1.0 - outside @ center))


def random_capillary_body(mesh_or_config, seed: int, amplitude: float = 0.15) -> CapillaryBody:
    """Reproducible random capillary convex body.

    Unit Wulff cap, plus a random horizontal translation, plus smooth bumps
    supported strictly inside the parameter region (so the boundary
    condition is exact).  Bump amplitudes are scaled by width^2 so the
    curvature perturbation is O(amplitude).  The whole perturbation is
    halved (up to 20 times) until the body is strictly convex with positive
    radii and positive capillary support; exhaustion raises GenerationError.
    """
    if amplitude < 0:
        raise InvalidInputError("amplitude must be nonnegative")
    mesh = _as_mesh(mesh_or_config)
    rng = np.random.default_rng(seed)
    d = mesh.dim
    v = rng.normal(size=d)
    v[-1] = 0.0
    nv = np.linalg.norm(v)
    if nv > 0:
        v *= 0.4 * amplitude * (0.5 + 0.5 * rng.random()) / nv
    cand = _interior_candidate_directions(mesh)
    n_bumps = int(rng.integers(2, 4)) if amplitude > 0 else 0
    picks = rng.choice(len(cand), size=min(n_bumps, len(cand)), replace=False)
    bump_specs = []
    for p in picks:
        center = cand[p]
        margin = _boundary_margin_cos(mesh, center)
        width = 0.5 * margin * (0.6 + 0.35 * rng.random())
        if width <= 1e-6:
            continue
        amp = amplitude * (0.4 + 0.6 * rng.random()) * (1.0 if rng.random() < 0.5 else -1.0)
        amp *= width**2 / 8.0
        bump_specs.append((center, width, amp))

    scale = 1.0
    last_err = "no attempts"
    for _ in range(_BACKTRACK_LIMIT + 1):
        parts = [WulffCapField(mesh.model, mesh.omega0, 1.0, mesh.EF, mesh.EF)]
        coeffs = [1.0]
        if np.linalg.norm(v) > 0:
            parts.append(LinearField(v * scale))
            coeffs.append(1.0)
        for center, width, amp in bump_specs:
            parts.append(SphericalBumpField(center, width, amp * scale))
            coeffs.append(1.0)
        field = CombinationField(parts, coeffs)
        body = CapillaryBody(mesh, field,
                             {"kind": "random", "seed": int(seed), "amplitude": amplitude,
                              "backtrack_scale": scale},
                             validate=False)
        if body.convex and body.capillary and float(np.min(body.shat)) > 0.05:
            return body
        last_err = (f"minW={body.min_w_eig:.2e} minTau={body.min_tau_eig:.2e} "
                    f"minShat={float(np.min(body.shat)):.2e}")
        scale *= 0.5
    raise GenerationError(f"random body generation exhausted backtracking ({last_err})")


def rebind(body: CapillaryBody, mesh: CapMesh) -> CapillaryBody:
    """Same support field evaluated on another mesh (convergence studies)."""
    return CapillaryBody(mesh, body.field, dict(body.provenance))


def body_from_record(record, mesh: CapMesh | None = None) -> CapillaryBody:
    """Reconstruct a body from its serialized record.

    Construction is deterministic, so replaying the recorded provenance on
    an equal mesh reproduces every cache bit for bit.
    """
    from .norms import norm_from_descriptor

    if isinstance(record, str):
        record = json.loads(record)
    if mesh is None:
        cfg = CapConfig(int(record["n"]), float(record["omega0"]),
                        norm_from_descriptor(record["norm"]),
                        int(record["mesh_level"]))
        mesh = build_cap_mesh(cfg)
    prov = record["provenance"]
    kind = prov.get("kind")
    if kind == "wulff-cap":
        return make_wulff_cap(mesh, float(prov["r0"]),
                              np.asarray(prov["e_vec"], dtype=float))
    if kind == "random":
        return random_capillary_body(mesh, int(prov["seed"]),
                                     float(prov["amplitude"]))
    raise InvalidInputError(f"cannot rebuild body of kind {kind!r}")
