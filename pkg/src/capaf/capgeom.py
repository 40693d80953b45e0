"""Geometry of the capillary cap.

The parameter region is S = {x on the unit sphere : <DF(x), E_d> >= -w0},
the Gauss image of every w0-capillary convex hypersurface for the norm F.
The cap itself is C = {Psi(x) + w0 * EF : x in S}, a translated piece of the
Wulff shape lying in the closed upper half-space; EF is the unique multiple
of Psi(E_d) (resp. -Psi(-E_d), resp. E_d itself) pairing to 1 with E_d.

Meshing: for n = 2 an icosphere is clipped against the region boundary by
snapping straddling vertices onto {residual = 0} along great circles
(bisection plus one Newton polish, residual tolerance 1e-12); quadrature is
vertex-lumped spherical-triangle area, second-order accurate.  For n = 1 the
region is a single arc, subdivided uniformly in angle with trapezoid weights
(the angular measure is exact).

Every node carries caches: Psi(x), the anisotropy matrix and its
determinant (the pullback density from the cap to S), the cap point xi, the
ambient metric G at T^{-1} xi, and a G-orthonormal tangent frame.  At
boundary nodes the frame's last vector is aligned with A_F(nu) mu, mu being
the Euclidean outward co-normal, and the first vectors span the boundary
tangent.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidConfigError, MeshConstructionError,
                     NumericError)
from .norms import MinkowskiNorm, tangent_basis, unit_rows

DEFAULT_TOLERANCES = {
    "boundary_residual": 1e-12,
    "frame_orthonormal": 1e-10,
    "boundary_plane": 1e-9,
    "mixdisc": 1e-10,
    "mixdisc_exact": 1e-12,
    "routes_analytic": 1e-8,
    "routes_fd": 1e-5,
    "routes_polyfit": 1e-4,
    "wulff_tau": 1e-6,
    "wulff_querm": 1e-5,
    "kernel_max": 1e-4,
    "kernel_ratio": 2.0,
    "minkowski_ratio": 2.0,
    "symmetry_ratio": 2.0,
    "symmetry_trailing": 1e-12,
    "steiner": 1e-4,
    "af_gap": 1e-8,
    "af_equality": 1e-6,
    "chain_gap": 1e-7,
    "chain_equality": 1e-6,
    "operator_eigen": 1e-8,
    "operator_energy": 1e-6,
    "robin": 1e-8,
    "hull_volume": 5e-3,
    "divergence": 1e-3,
    "support_two_route": 1e-8,
    "support_two_route_fd": 1e-5,
}


# ---------------------------------------------------------------------------
# icosphere
# ---------------------------------------------------------------------------


def _icosahedron():
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts = unit_rows(verts)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return verts, faces


def icosphere(level: int):
    """Subdivided icosahedron projected to the sphere: (verts, faces)."""
    verts, faces = _icosahedron()
    verts = [v for v in verts]
    for _ in range(level):
        midpoint = {}
        new_faces = []

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
        faces = np.asarray(new_faces, dtype=np.int64)
    return np.asarray(verts), faces


def icosphere_vertices(level: int) -> np.ndarray:
    return icosphere(level)[0]


def spherical_triangle_areas(a, b, c) -> np.ndarray:
    """Solid angles of geodesic triangles with vertex rows a, b, c."""
    triple = np.einsum("bi,bi->b", a, np.cross(b, c))
    denom = 1.0 + np.einsum("bi,bi->b", a, b) + np.einsum("bi,bi->b", b, c) + np.einsum("bi,bi->b", c, a)
    return np.abs(2.0 * np.arctan2(triple, denom))


# ---------------------------------------------------------------------------
# region and config
# ---------------------------------------------------------------------------


def ef_vector(model: MinkowskiNorm, omega0: float) -> np.ndarray:
    """Constant vector EF with <EF, E_d> = 1 used to translate the Wulff cap."""
    d = model.dim
    e = np.zeros(d)
    e[-1] = 1.0
    lo, hi = admissible_range(model)
    if not (lo < omega0 < hi):
        raise InvalidConfigError(
            f"omega0={omega0} outside admissible open interval ({lo:.6g}, {hi:.6g})")
    if omega0 == 0.0:
        return e
    if omega0 < 0.0:
        return np.asarray(model.cahn_hoffman(e)) / float(model.value(e))
    return -np.asarray(model.cahn_hoffman(-e)) / float(model.value(-e))


def admissible_range(model: MinkowskiNorm):
    d = model.dim
    e = np.zeros(d)
    e[-1] = 1.0
    return -float(model.value(e)), float(model.value(-e))


def region_residual(model: MinkowskiNorm, omega0: float, x) -> np.ndarray:
    """<DF(x), E_d> + omega0; nonnegative exactly on the parameter region."""
    g = np.asarray(model.grad(np.asarray(x, dtype=float)))
    return g[..., -1] + omega0


@dataclass
class CapConfig:
    """Geometry configuration: dimension, capillarity constant, norm, mesh."""

    n: int
    omega0: float
    norm: MinkowskiNorm
    mesh_level: int = 3
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if self.n not in (1, 2):
            errors.append(f"n={self.n} unsupported; meshing is restricted to n in {{1, 2}}")
        if self.norm.dim != self.n + 1:
            errors.append(f"norm dimension {self.norm.dim} != n+1 = {self.n + 1}")
        else:
            lo, hi = admissible_range(self.norm)
            if not (lo < self.omega0 < hi):
                errors.append(
                    f"omega0={self.omega0} outside admissible open interval ({lo:.6g}, {hi:.6g})")
        if self.mesh_level < 0 or self.mesh_level > 7:
            errors.append(f"mesh_level={self.mesh_level} out of range [0, 7]")
        if errors:
            raise InvalidConfigError("; ".join(errors), errors=errors)
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(self.tolerances)
        self.tolerances = tol

    @property
    def dim(self) -> int:
        return self.n + 1

    def with_level(self, level: int) -> "CapConfig":
        return CapConfig(self.n, self.omega0, self.norm, level, dict(self.tolerances))


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


class CapMesh:
    """Immutable discretization of the cap with per-node geometric caches."""

    def __init__(self, config: CapConfig, nodes, weights, cells, is_boundary,
                 boundary_loop, diagnostics):
        self.config = config
        self.n = config.n
        self.dim = config.dim
        self.omega0 = config.omega0
        self.model = config.norm
        self.nodes = nodes
        self.weights = weights
        self.cells = cells
        self.is_boundary = is_boundary
        self.boundary_loop = boundary_loop
        self.diagnostics = dict(diagnostics)
        self._populate_caches()
        self._cap_body = None
        self._q_frame = None

    # cache construction -----------------------------------------------------

    def _populate_caches(self):
        model, cfg = self.model, self.config
        x = self.nodes
        self.EF = ef_vector(model, self.omega0)
        self.F_vals = np.asarray(model.value(x))
        self.psi = np.asarray(model.cahn_hoffman(x))
        self.tb = tangent_basis(x)
        self.A = np.asarray(model.anisotropy_matrix(x, basis=self.tb))
        ev = np.linalg.eigvalsh(self.A)
        if np.any(ev[..., 0] <= 0):
            bad = int(np.argmin(ev[..., 0]))
            raise MeshConstructionError(
                f"anisotropy matrix not positive definite at node {bad}")
        self.detA = np.linalg.det(self.A) if self.n > 1 else self.A[:, 0, 0].copy()
        self.anisotropy_condition = float(np.max(ev[..., -1] / ev[..., 0]))
        self.xi = self.psi + self.omega0 * self.EF
        self.G = np.asarray(model.metric_on_wulff(self.psi, x))
        self.interior_idx = np.flatnonzero(~self.is_boundary)
        self.boundary_idx = np.asarray(self.boundary_loop, dtype=np.int64)
        self._boundary_geometry()
        self._build_frames()
        self._check_invariants()

    def _boundary_geometry(self):
        loop = self.boundary_loop
        nb = len(loop)
        d = self.dim
        self.mu = np.zeros((nb, d))
        self.muF = np.zeros((nb, d))
        self.c_normalizer = np.zeros(nb)
        self.conormal_ok = np.ones(nb, dtype=bool)
        self.boundary_arc_weights = np.zeros(nb)
        if nb == 0:
            return
        x_b = self.nodes[loop]
        xi_b = self.xi[loop]
        hess_b = np.asarray(self.model.hess(x_b))
        if self.n == 2:
            nxt = np.roll(np.arange(nb), -1)
            prv = np.roll(np.arange(nb), 1)
            # the boundary curve lies in the floor plane, so its tangent is
            # exactly perpendicular to both the Gauss direction and E_3
            e3 = np.zeros(d)
            e3[-1] = 1.0
            t_hat = unit_rows(np.cross(x_b, np.broadcast_to(e3, x_b.shape)))
            chord = xi_b[nxt] - xi_b[prv]
            flip = np.einsum("bi,bi->b", t_hat, chord) < 0
            t_hat[flip] = -t_hat[flip]
            mu = np.cross(x_b, t_hat)
            sign = np.where(mu[:, -1] > 0, -1.0, 1.0)
            mu = unit_rows(mu) * sign[:, None]
            seg = np.linalg.norm(xi_b[nxt] - xi_b, axis=-1)
            self.boundary_arc_weights = 0.5 * (seg + seg[prv])
            self.boundary_tangent = t_hat
        else:
            # two endpoints; co-normal is the outward curve tangent
            t = np.stack([-x_b[:, 1], x_b[:, 0]], axis=-1)
            dxi = np.einsum("bij,bj->bi", hess_b, t)
            mu = unit_rows(dxi)
            mu[0] = -mu[0]  # first endpoint: outward means decreasing angle
            self.boundary_arc_weights = np.ones(nb)
            self.boundary_tangent = None
        self.mu = mu
        self.conormal_ok = np.abs(mu[:, -1]) > 1e-8
        self.muF = np.einsum("bij,bj->bi", hess_b, mu)
        g_b = self.G[loop]
        qn = np.einsum("bi,bij,bj->b", self.muF, g_b, self.muF)
        self.c_normalizer = 1.0 / np.sqrt(np.maximum(qn, 1e-300))

    def _build_frames(self):
        g = self.G
        tb = self.tb
        n, d = self.n, self.dim

        def gdot(u, v):
            return np.einsum("bi,bij,bj->b", u, g, v)

        def gdot_at(idx, u, v):
            return np.einsum("bi,bij,bj->b", u, g[idx], v)

        frame = np.zeros((len(self.nodes), n, d))
        u1 = tb[:, 0]
        e1 = u1 / np.sqrt(gdot(u1, u1))[:, None]
        frame[:, 0] = e1
        if n == 2:
            u2 = tb[:, 1]
            w = u2 - gdot(e1, u2)[:, None] * e1
            frame[:, 1] = w / np.sqrt(gdot(w, w))[:, None]
        loop = self.boundary_loop
        if len(loop):
            if n == 2:
                t_hat = self.boundary_tangent
                eb1 = t_hat / np.sqrt(gdot_at(loop, t_hat, t_hat))[:, None]
                w = self.muF - gdot_at(loop, eb1, self.muF)[:, None] * eb1
                eb2 = w / np.sqrt(gdot_at(loop, w, w))[:, None]
                frame[loop, 0] = eb1
                frame[loop, 1] = eb2
            else:
                sgn = np.sign(np.einsum("bi,bi->b", frame[loop, 0], self.muF))
                sgn[sgn == 0] = 1.0
                frame[loop, 0] = frame[loop, 0] * sgn[:, None]
        self.frame = frame

    def _check_invariants(self):
        tol = self.config.tolerances
        gram = np.einsum("bki,bij,blj->bkl", self.frame, self.G, self.frame)
        dev = np.max(np.abs(gram - np.eye(self.n)[None]))
        if dev > tol["frame_orthonormal"]:
            raise NumericError(f"frame orthonormality defect {dev:.3e}", residual=dev)
        self.frame_orthonormal_defect = float(dev)
        plane = np.abs(self.xi[self.boundary_idx, -1]) if len(self.boundary_idx) else np.zeros(1)
        if np.any(plane > tol["boundary_plane"]):
            raise MeshConstructionError(
                f"boundary cap point off the support plane by {np.max(plane):.3e}")
        r = region_residual(self.model, self.omega0, self.nodes)
        interior_bad = r[self.interior_idx] <= 0
        if np.any(interior_bad):
            raise MeshConstructionError("interior node with nonpositive region residual")
        self.region_residuals = r

    # accessors ---------------------------------------------------------------

    def cap_point(self, i: int) -> np.ndarray:
        return self.xi[i]

    def gbar_frame(self, i: int) -> np.ndarray:
        return self.frame[i]

    def pullback_area_density(self, i: int) -> float:
        return float(self.detA[i])

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def sigma_total(self) -> float:
        return float(np.sum(self.weights))

    @property
    def q_frame(self) -> np.ndarray:
        """Q contracted against the frame at every node: (N, n, n, n)."""
        if self._q_frame is None:
            q = self.q_ambient
            self._q_frame = np.einsum(
                "bijk,bpi,bqj,brk->bpqr", q, self.frame, self.frame, self.frame)
        return self._q_frame

    @property
    def q_ambient(self) -> np.ndarray:
        if not hasattr(self, "_q_ambient") or self._q_ambient is None:
            self._q_ambient = np.asarray(self.model.q_on_wulff(self.psi, self.nodes))
        return self._q_ambient

    @property
    def cap_body(self):
        """Unit Wulff-cap body on this mesh (lazy)."""
        if self._cap_body is None:
            from .bodies import make_wulff_cap

            self._cap_body = make_wulff_cap(self, 1.0)
        return self._cap_body

    def cap_support_values(self) -> np.ndarray:
        """Support values of the unit cap body: F(x) + w0 <x, EF>."""
        return self.F_vals + self.omega0 * (self.nodes @ self.EF)

    def same_mesh(self, other: "CapMesh") -> bool:
        return self is other

    def dump_table(self) -> str:
        """Plain-text node table: node_index, x, tag, w, xi, detA_F."""
        buf = io.StringIO()
        d = self.dim
        xcols = " ".join(f"x{k}" for k in range(d))
        xicols = " ".join(f"xi{k}" for k in range(d))
        buf.write(f"# node_index {xcols} tag w {xicols} detA_F\n")
        for i in range(self.node_count):
            tag = "boundary" if self.is_boundary[i] else "interior"
            xs = " ".join(repr(float(v)) for v in self.nodes[i])
            xis = " ".join(repr(float(v)) for v in self.xi[i])
            buf.write(f"{i} {xs} {tag} {float(self.weights[i])!r} {xis} "
                      f"{float(self.detA[i])!r}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# mesh construction
# ---------------------------------------------------------------------------


def _snap_to_boundary(model, omega0, v_out, v_in, tol):
    """Root of the region residual along the great circle from v_out to v_in."""
    ang = float(np.arccos(np.clip(v_out @ v_in, -1.0, 1.0)))
    if ang < 1e-14:
        return v_in.copy()
    axis_a, axis_b = v_out, v_in

    def gamma(t):
        return (np.sin((1.0 - t) * ang) * axis_a + np.sin(t * ang) * axis_b) / np.sin(ang)

    def res(t):
        return float(region_residual(model, omega0, gamma(t)[None, :])[0])

    lo, hi = 0.0, 1.0
    r_lo = res(lo)
    if r_lo > 0:
        raise MeshConstructionError("snap bracketing failed: outside vertex not outside")
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if res(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    # one Newton polish with a finite-difference slope
    h = 1e-7
    slope = (res(min(t + h, 1.0)) - res(max(t - h, 0.0))) / (min(t + h, 1.0) - max(t - h, 0.0))
    if slope != 0.0:
        t_new = t - res(t) / slope
        if 0.0 <= t_new <= 1.0 and abs(res(t_new)) <= abs(res(t)):
            t = t_new
    point = unit_rows(gamma(t)[None, :])[0]
    if abs(res(t)) > max(tol * 100.0, 1e-10):
        raise MeshConstructionError(f"boundary snap residual {res(t):.3e} above tolerance")
    return point


def _build_mesh_2d(config: CapConfig) -> CapMesh:
    model, omega0 = config.norm, config.omega0
    tol_b = config.tolerances["boundary_residual"]
    verts, faces = icosphere(config.mesh_level)
    r = region_residual(model, omega0, verts)
    inside = r > tol_b
    outside = r < -tol_b

    keep = np.any(inside[faces], axis=1)
    faces = faces[keep]
    if len(faces) == 0:
        raise MeshConstructionError("empty parameter region")

    # snap outside vertices used by kept faces toward their best inside neighbor
    used_out = np.unique(faces.flatten())
    used_out = used_out[outside[used_out]]
    neighbor = {int(v): -1 for v in used_out}
    for a, b, c in faces:
        for v in (a, b, c):
            if outside[v]:
                for u in (a, b, c):
                    if inside[u]:
                        cur = neighbor[int(v)]
                        if cur < 0 or r[u] > r[cur] or (r[u] == r[cur] and u < cur):
                            neighbor[int(v)] = int(u)
    verts = verts.copy()
    snapped = np.zeros(len(verts), dtype=bool)
    for v in sorted(neighbor):
        u = neighbor[v]
        if u < 0:
            raise MeshConstructionError(f"outside vertex {v} has no inside neighbor")
        verts[v] = _snap_to_boundary(model, omega0, verts[v], verts[u], tol_b)
        snapped[v] = True

    # drop unreferenced vertices and reindex
    used = np.unique(faces.flatten())
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = verts[used]
    cells = remap[faces]
    is_boundary = (snapped | (np.abs(r) <= tol_b))[used]

    weights = np.zeros(len(nodes))
    areas = spherical_triangle_areas(nodes[cells[:, 0]], nodes[cells[:, 1]], nodes[cells[:, 2]])
    np.add.at(weights, cells[:, 0], areas / 3.0)
    np.add.at(weights, cells[:, 1], areas / 3.0)
    np.add.at(weights, cells[:, 2], areas / 3.0)

    loop = _walk_boundary(cells, is_boundary, nodes)
    on_loop = np.zeros(len(nodes), dtype=bool)
    on_loop[loop] = True
    off_loop = int(np.sum(is_boundary & ~on_loop))
    is_boundary = on_loop

    diag = {"snapped": int(np.sum(snapped)), "off_loop_boundary": off_loop,
            "cells": len(cells)}
    return CapMesh(config, nodes, weights, cells, is_boundary, loop, diag)


def _walk_boundary(cells, is_boundary, nodes):
    """Ordered boundary loop (counterclockwise seen from +E3)."""
    from collections import defaultdict

    count = defaultdict(int)
    for a, b, c in cells:
        for e in ((a, b), (b, c), (a, c)):
            count[(min(e), max(e))] += 1
    edges = [e for e, k in count.items() if k == 1]
    if not edges:
        raise MeshConstructionError("no boundary edges found")
    adj = defaultdict(list)
    for a, b in edges:
        if not (is_boundary[a] and is_boundary[b]):
            raise MeshConstructionError("boundary edge with interior endpoint")
        adj[a].append(b)
        adj[b].append(a)
    for v, nb in adj.items():
        if len(nb) != 2:
            raise MeshConstructionError(f"boundary node {v} has degree {len(nb)}")
    start = min(adj)
    loop = [start]
    prev, cur = -1, start
    for _ in range(len(adj)):
        a, b = adj[cur]
        nxt = a if a != prev else b
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
    if len(loop) != len(adj):
        raise MeshConstructionError("boundary walk did not close into a single loop")
    loop = np.asarray(loop, dtype=np.int64)
    xy = nodes[loop][:, :2]
    signed = 0.5 * float(np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1]))
    if signed < 0:
        loop = loop[::-1].copy()
    return loop


def _build_mesh_1d(config: CapConfig) -> CapMesh:
    model, omega0 = config.norm, config.omega0

    def res(phi):
        phi = np.atleast_1d(phi)
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return region_residual(model, omega0, pts)

    m0 = 4096
    phis = np.linspace(0.0, 2.0 * np.pi, m0, endpoint=False)
    rv = res(phis)
    roots = []
    for i in range(m0):
        a = phis[i]
        ra, rb = rv[i], rv[(i + 1) % m0]
        if ra == 0.0:
            roots.append(a)
        elif ra * rb < 0:
            lo, hi = a, a + (2.0 * np.pi / m0)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if res(mid)[0] * ra > 0:
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    if len(roots) < 2:
        raise MeshConstructionError(f"expected two region boundary angles, found {len(roots)}")
    roots = sorted(roots)
    # pick the arc (cyclically) whose midpoint lies inside the region
    best = None
    for i in range(len(roots)):
        lo = roots[i]
        hi = roots[(i + 1) % len(roots)]
        if hi <= lo:
            hi += 2.0 * np.pi
        mid = 0.5 * (lo + hi)
        if res(mid)[0] > 0:
            if best is not None:
                raise MeshConstructionError("parameter region is not a single arc")
            best = (lo, hi)
    if best is None:
        raise MeshConstructionError("empty parameter region")
    lo, hi = best
    m = 16 * 2**config.mesh_level
    phi_nodes = np.linspace(lo, hi, m + 1)
    nodes = np.stack([np.cos(phi_nodes), np.sin(phi_nodes)], axis=-1)
    dphi = (hi - lo) / m
    weights = np.full(m + 1, dphi)
    weights[0] = weights[-1] = dphi / 2.0
    cells = np.stack([np.arange(m), np.arange(1, m + 1)], axis=-1)
    is_boundary = np.zeros(m + 1, dtype=bool)
    is_boundary[0] = is_boundary[-1] = True
    loop = np.array([0, m], dtype=np.int64)
    diag = {"arc": (float(lo), float(hi)), "cells": m}
    return CapMesh(config, nodes, weights, cells, is_boundary, loop, diag)


def build_cap_mesh(config: CapConfig) -> CapMesh:
    """Mesh the parameter region and populate all per-node caches."""
    if config.n == 2:
        return _build_mesh_2d(config)
    return _build_mesh_1d(config)
