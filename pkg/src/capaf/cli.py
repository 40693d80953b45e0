"""Command-line front end.

Subcommands:
  verify --config P [--suite S] [--out DIR] [--jobs N]
  mesh info --config P [--dump FILE]
  body gen --config P --seed K --out FILE
  study converge --config P --check NAME --levels A..B [--out DIR]

Exit codes: 0 all checks passed, 1 some check failed (or a body could not
be generated), 2 usage or configuration error.  Identical configs produce
byte-identical numeric report fields, independently of --jobs; per-record
wall times (JSON only) are the single exception.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import functionals as fn
from .bodies import (make_wulff_cap, minkowski_combine, random_capillary_body,
                     rebind, translate_horizontal)
from .capgeom import build_cap_mesh
from .config import SUITE_NAMES, SuiteConfig, parse_config
from .errors import CapafError, GenerationError, InvalidConfigError
from .fields import kernel_field
from .mixdisc import (mixed_discriminant, mixed_disc_gradient,
                      md_transform_check)
from .report import CheckRecord, RunReport, digest, emit_report


class RunContext:
    """Lazy caches shared by the suite runners of one verification run."""

    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self._meshes = {}
        self._bodies = {}
        self.generation_failures = []

    def mesh(self, level=None):
        level = self.cfg.mesh_level if level is None else level
        if level not in self._meshes:
            self._meshes[level] = build_cap_mesh(self.cfg.cap_config(level))
        return self._meshes[level]

    def body(self, seed, level=None):
        level = self.cfg.mesh_level if level is None else level
        key = (seed, level)
        if key not in self._bodies:
            self._bodies[key] = random_capillary_body(self.mesh(level), seed,
                                                      self.cfg.amplitude)
        return self._bodies[key]

    def body_tuple(self, seed, count, level=None):
        return [self.body(seed * 101 + j, level) for j in range(count)]

    def study_levels(self):
        top = self.cfg.mesh_level
        return [max(1, top - 2), max(2, top - 1), top]


def _timed_record(suite, name, inputs, fn_check) -> CheckRecord:
    t0 = time.perf_counter()
    rep = fn_check()
    dt = time.perf_counter() - t0
    return CheckRecord(suite, name, digest(inputs), rep.lhs, rep.rhs, rep.gap,
                       rep.relative_gap, rep.tolerance, rep.passed,
                       wall_time_s=dt)


def _ratio_record(suite, name, inputs, values, min_ratio, floor=0.0,
                  kind="check") -> CheckRecord:
    """Record asserting that `values` decrease by >= min_ratio per step.

    Decay assertions only make sense above the scheme's noise floor; FD-
    backed norms run them as diagnostics (kind="diagnostic") because their
    signed defects live near the floor and can cross zero.
    """
    vals = [float(v) for v in values]
    ratios = [vals[i] / max(vals[i + 1], 1e-300) for i in range(len(vals) - 1)]
    worst = min(ratios)
    passed = worst >= min_ratio or vals[-1] <= floor
    return CheckRecord(suite, name, digest(inputs), worst, min_ratio,
                       worst - min_ratio, worst / min_ratio - 1.0, min_ratio,
                       bool(passed) or kind != "check", kind=kind)


def _value_record(suite, name, inputs, value, tolerance) -> CheckRecord:
    value = float(value)
    return CheckRecord(suite, name, digest(inputs), value, tolerance,
                       value - tolerance, value / max(tolerance, 1e-300) - 1.0,
                       tolerance, bool(value <= tolerance))


# ---------------------------------------------------------------------------
# suite runners
# ---------------------------------------------------------------------------


def _run_mixdisc(ctx: RunContext):
    tol = ctx.cfg.tolerances
    rng = np.random.default_rng(20240)
    records = []
    t0 = time.perf_counter()
    worst = {"diag": 0.0, "perm": 0.0, "multi": 0.0, "transform": 0.0,
             "gradient": 0.0, "alexandrov": 0.0}
    for n in (2, 3):
        for _ in range(200):
            def spd():
                a = rng.normal(size=(n, n))
                return a @ a.T + 0.3 * np.eye(n)

            mats = [spd() for _ in range(n)]
            q = mixed_discriminant(mats)
            scale = max(abs(q), 1e-30)
            worst["diag"] = max(worst["diag"], abs(
                mixed_discriminant([mats[0]] * n) - np.linalg.det(mats[0]))
                / max(abs(np.linalg.det(mats[0])), 1e-30))
            perm = list(rng.permutation(n))
            worst["perm"] = max(worst["perm"], abs(
                mixed_discriminant([mats[p] for p in perm]) - q) / scale)
            a_alt = spd()
            al, be = rng.random() + 0.2, rng.random() + 0.2
            lhs = mixed_discriminant([al * mats[0] + be * a_alt] + mats[1:])
            rhs = al * q + be * mixed_discriminant([a_alt] + mats[1:])
            worst["multi"] = max(worst["multi"], abs(lhs - rhs) / max(abs(rhs), 1e-30))
            bmat = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
            chk = md_transform_check(mats, bmat)
            worst["transform"] = max(worst["transform"], chk["relative_error"])
            grad = mixed_disc_gradient(mats)
            worst["gradient"] = max(worst["gradient"], abs(
                float(np.sum(mats[0] * grad)) - q) / scale)
            rep = fn.InequalityReport.inequality(
                "alexandrov", mixed_discriminant([mats[0], mats[1]] + mats[2:n])**2,
                mixed_discriminant([mats[0], mats[0]] + mats[2:n])
                * mixed_discriminant([mats[1], mats[1]] + mats[2:n]), tol["mixdisc"])
            worst["alexandrov"] = max(worst["alexandrov"], -rep.relative_gap)
    dt = time.perf_counter() - t0
    for key, val in sorted(worst.items()):
        rec = _value_record("mixdisc", key, {"n": [2, 3], "count": 200}, val,
                            tol["mixdisc"])
        rec.wall_time_s = dt / len(worst)
        records.append(rec)
    return records


def _run_routes(ctx: RunContext):
    cfg = ctx.cfg
    tol = cfg.tolerances
    analytic = cfg.norm.family != "perturbed"
    route_tol = tol["routes_analytic"] if analytic else tol["routes_fd"]
    records = []
    for seed in cfg.seeds:
        bods = ctx.body_tuple(seed, cfg.n + 1)
        inputs = {"seed": seed, "level": cfg.mesh_level}
        va = fn.mixed_volume(bods, route="anisotropic")
        ve = fn.mixed_volume(bods, route="euclidean")
        vp = fn.mixed_volume(bods, route="polyfit")
        records.append(_timed_record(
            "routes", f"aniso-vs-euclid.seed{seed}", inputs,
            lambda: fn.InequalityReport.identity("aniso-vs-euclid", va.value,
                                                 ve.value, route_tol)))
        records.append(_timed_record(
            "routes", f"polyfit-vs-euclid.seed{seed}", inputs,
            lambda: fn.InequalityReport.identity("polyfit-vs-euclid", vp.value,
                                                 ve.value, tol["routes_polyfit"])))
        body = bods[0]
        records.append(_timed_record(
            "routes", f"diagonal-consistency.seed{seed}", inputs,
            lambda: fn.InequalityReport.identity(
                "diagonal", fn.mixed_volume_value([body] * (cfg.n + 1)),
                fn.volume(body), route_tol)))
        v = np.zeros(cfg.n + 1)
        v[0] = 0.08
        vt = translate_horizontal(body, v)
        records.append(_timed_record(
            "routes", f"translation-invariance.seed{seed}", inputs,
            lambda: fn.InequalityReport.identity(
                "translation", fn.volume(vt), fn.volume(body), 1e-10)))
        scaled = minkowski_combine([body], [1.7])
        records.append(_timed_record(
            "routes", f"scaling.seed{seed}", inputs,
            lambda: fn.InequalityReport.identity(
                "scaling", fn.volume(scaled), 1.7 ** (cfg.n + 1) * fn.volume(body),
                1e-11)))
    return records


def _run_af(ctx: RunContext):
    cfg = ctx.cfg
    tol = cfg.tolerances
    records = []
    for seed in cfg.seeds:
        bods = ctx.body_tuple(seed, cfg.n + 1)
        inputs = {"seed": seed, "level": cfg.mesh_level}
        records.append(_timed_record(
            "af", f"inequality.seed{seed}", inputs,
            lambda: fn.af_inequality_check(bods, tol=tol["af_gap"])))
        k2 = bods[1]
        v = np.zeros(cfg.n + 1)
        v[0] = 0.1
        k1 = translate_horizontal(minkowski_combine([k2], [2.0]), v)
        eq_bodies = [k1, k2] + bods[2:]
        records.append(_timed_record(
            "af", f"equality-case.seed{seed}", inputs,
            lambda: fn.af_inequality_check(eq_bodies, tol=tol["af_equality"],
                                           equality_expected=True)))
    return records


def _run_chain(ctx: RunContext):
    cfg = ctx.cfg
    tol = cfg.tolerances
    n = cfg.n
    records = []
    mesh = ctx.mesh()
    for seed in cfg.seeds:
        body = ctx.body(seed)
        inputs = {"seed": seed, "level": cfg.mesh_level}
        for k in range(n + 1):
            for l in range(k):
                records.append(_timed_record(
                    "chain", f"querm-k{k}-l{l}.seed{seed}", inputs,
                    lambda k=k, l=l: fn.quermassintegral_chain_check(
                        body, k, l, tol=tol["chain_gap"])))
        others = ctx.body_tuple(seed, n + 1)
        for m in range(2, n + 2):
            trailing = others[2:2 + (n + 1 - m)]
            for i in range(0, m - 1):
                for j in range(i + 1, m):
                    for k in range(j + 1, m + 1):
                        records.append(_timed_record(
                            "chain", f"gen-m{m}-i{i}-j{j}-k{k}.seed{seed}", inputs,
                            lambda m=m, i=i, j=j, k=k, trailing=trailing:
                            fn.generalized_chain_check(
                                others[0], others[1], trailing, m, i, j, k,
                                tol=tol["chain_gap"])))
    wulff = make_wulff_cap(mesh, 1.3)
    records.append(_timed_record(
        "chain", "wulff-equality", {"r0": 1.3},
        lambda: fn.quermassintegral_chain_check(
            wulff, cfg.n, 0, tol=tol["chain_equality"], equality_expected=True)))
    k1 = ctx.body(max(cfg.seeds) + 977)
    v = np.zeros(cfg.n + 1)
    v[0] = 0.07
    k0 = translate_horizontal(minkowski_combine([k1], [1.4]), v)
    trailing = ctx.body_tuple(max(cfg.seeds) + 978, cfg.n - 1)
    records.append(_timed_record(
        "chain", "gen-equality-case", {"a": 1.4},
        lambda: fn.generalized_chain_check(
            k0, k1, trailing, 2, 0, 1, 2, tol=tol["chain_equality"],
            equality_expected=True)))
    return records


def _run_minkowski(ctx: RunContext):
    cfg = ctx.cfg
    levels = ctx.study_levels()
    records = []
    tables = {}
    for k in range(cfg.n):
        agg = []
        for level in levels:
            worst = 0.0
            for seed in cfg.seeds:
                body = rebind(ctx.body(seed, levels[-1]), ctx.mesh(level))
                worst = max(worst, abs(fn.minkowski_formula_residual(body, k)))
            agg.append(worst)
        rows = []
        for i, level in enumerate(levels):
            ratio = agg[i - 1] / max(agg[i], 1e-300) if i else float("nan")
            rows.append([level, agg[i], agg[i], ratio])
        tables[f"minkowski-k{k}"] = rows
        kind = "check" if cfg.norm.family != "perturbed" else "diagnostic"
        records.append(_ratio_record(
            "minkowski", f"residual-decay-k{k}", {"levels": levels, "k": k},
            agg, cfg.tolerances["minkowski_ratio"], floor=1e-9, kind=kind))
    return records, tables


def _run_symmetry(ctx: RunContext):
    cfg = ctx.cfg
    levels = ctx.study_levels()
    records = []
    tables = {}
    swap_agg, trail_agg = [], []
    for level in levels:
        worst_swap, worst_trail = 0.0, 0.0
        for seed in cfg.seeds:
            fine = ctx.body_tuple(seed, cfg.n + 1, levels[-1])
            bods = [rebind(b, ctx.mesh(level)) for b in fine]
            out = fn.symmetry_check(bods)
            worst_swap = max(worst_swap, out["swap_deviation"] / out["scale"])
            worst_trail = max(worst_trail, out["trailing_deviation"] / out["scale"])
        swap_agg.append(worst_swap)
        trail_agg.append(worst_trail)
    rows = []
    for i, level in enumerate(levels):
        ratio = swap_agg[i - 1] / max(swap_agg[i], 1e-300) if i else float("nan")
        rows.append([level, swap_agg[i], swap_agg[i], ratio])
    tables["symmetry-swap"] = rows
    kind = "check" if cfg.norm.family != "perturbed" else "diagnostic"
    records.append(_ratio_record("symmetry", "swap-decay",
                                 {"levels": levels}, swap_agg,
                                 cfg.tolerances["symmetry_ratio"], floor=1e-12,
                                 kind=kind))
    records.append(_value_record("symmetry", "trailing-permutation",
                                 {"levels": levels}, max(trail_agg),
                                 cfg.tolerances["symmetry_trailing"]))
    # diagnostic: symmetry on differences of capillary functions (logged only)
    mesh = ctx.mesh()
    b = ctx.body_tuple(max(cfg.seeds) + 5, cfg.n + 1)
    diff_bodies = [minkowski_combine([b[0]], [1.0])] + b[1:]
    out = fn.symmetry_check(diff_bodies)
    rec = CheckRecord("symmetry", "difference-experiment", digest({"note": "diagnostic"}),
                      out["swap_deviation"], 0.0, out["swap_deviation"],
                      out["swap_deviation"] / out["scale"], float("nan"), True,
                      kind="diagnostic")
    records.append(rec)
    return records, tables


def _run_steiner(ctx: RunContext):
    cfg = ctx.cfg
    records = []
    for seed in cfg.seeds:
        body = ctx.body(seed)
        records.append(_timed_record(
            "steiner", f"coefficients.seed{seed}",
            {"seed": seed, "level": cfg.mesh_level},
            lambda: fn.steiner_check(body, tol=cfg.tolerances["steiner"])))
    cap = ctx.mesh().cap_body
    records.append(_timed_record(
        "steiner", "cap-binomial", {"level": cfg.mesh_level},
        lambda: fn.steiner_check(cap, tol=1e-7)))
    return records


def _run_kernel(ctx: RunContext):
    cfg = ctx.cfg
    levels = ctx.study_levels()
    records = []
    tables = {}
    analytic = cfg.norm.family != "perturbed"
    if analytic:
        for alpha in range(cfg.n):
            decay = []
            for level in levels:
                val, _ = fn.kernel_tau_intrinsic(ctx.mesh(level), alpha)
                decay.append(val)
            rows = []
            for i, level in enumerate(levels):
                ratio = decay[i - 1] / max(decay[i], 1e-300) if i else float("nan")
                rows.append([level, decay[i], decay[i], ratio])
            tables[f"kernel-E{alpha + 1}"] = rows
            records.append(_value_record(
                "kernel", f"tau-max-E{alpha + 1}", {"levels": levels},
                decay[-1] * (4.0 ** (levels[-1] - 4)),  # normalized to level 4
                cfg.tolerances["kernel_max"]))
            records.append(_ratio_record(
                "kernel", f"tau-decay-E{alpha + 1}", {"levels": levels},
                decay, cfg.tolerances["kernel_ratio"], floor=1e-11))
    else:
        for alpha in range(cfg.n):
            val, _ = fn.kernel_tau_intrinsic(ctx.mesh(), alpha)
            records.append(_value_record(
                "kernel", f"tau-max-E{alpha + 1}-fd-smoke",
                {"level": cfg.mesh_level}, val, 1e-2))
    # generator-route kernels are exactly linear: tau vanishes to FD noise
    mesh = ctx.mesh()
    from .fields import tau_from_generator

    worst = 0.0
    for alpha in range(cfg.n):
        tau, _ = tau_from_generator(mesh, kernel_field(mesh, alpha))
        worst = max(worst, float(np.max(np.abs(tau))))
    records.append(_value_record("kernel", "generator-route-zero",
                                 {"level": cfg.mesh_level}, worst, 1e-10))
    return records, tables


def _run_operator(ctx: RunContext):
    cfg = ctx.cfg
    tol = cfg.tolerances
    records = []
    tables = {}
    if cfg.n < 2:
        return records, tables
    levels = ctx.study_levels()
    for seed in cfg.seeds:
        inputs = {"seed": seed, "level": cfg.mesh_level}
        trailing = ctx.body_tuple(seed, cfg.n - 1)
        f2 = trailing[0]
        ag = fn.operator_a_apply(f2, trailing)
        records.append(_value_record(
            "operator", f"eigenfunction-identity.seed{seed}", inputs,
            float(np.max(np.abs(ag - f2.shat))), tol["operator_eigen"]))
        kern = kernel_field(ctx.mesh(), 0)
        ak = fn.operator_a_apply(kern, trailing)
        records.append(_value_record(
            "operator", f"kernel-annihilation.seed{seed}", inputs,
            float(np.max(np.abs(ak))), 1e-8))
        g = ctx.body(seed + 7919).field - ctx.body(seed + 7920).field
        records.append(_timed_record(
            "operator", f"energy.seed{seed}", inputs,
            lambda: fn.operator_a_energy_check(g, trailing,
                                               tol=tol["operator_energy"])))
    # self-adjointness decay with refinement (aggregate over seeds)
    devs = []
    for level in levels:
        worst = 0.0
        for seed in cfg.seeds:
            fine = ctx.body_tuple(seed, cfg.n + 1, levels[-1])
            bods = [rebind(b, ctx.mesh(level)) for b in fine]
            worst = max(worst, fn.operator_selfadjoint_deviation(
                bods[0], bods[1], bods[2:] if cfg.n > 2 else [bods[2]]))
        devs.append(worst)
    rows = []
    for i, level in enumerate(levels):
        ratio = devs[i - 1] / max(devs[i], 1e-300) if i else float("nan")
        rows.append([level, devs[i], devs[i], ratio])
    tables["operator-selfadjoint"] = rows
    kind = "check" if cfg.norm.family != "perturbed" else "diagnostic"
    records.append(_ratio_record("operator", "selfadjoint-decay",
                                 {"levels": levels}, devs, 2.0, floor=1e-10,
                                 kind=kind))
    return records, tables


SUITE_RUNNERS = {
    "mixdisc": _run_mixdisc,
    "routes": _run_routes,
    "af": _run_af,
    "chain": _run_chain,
    "minkowski": _run_minkowski,
    "symmetry": _run_symmetry,
    "steiner": _run_steiner,
    "kernel": _run_kernel,
    "operator": _run_operator,
}


def run_suite(cfg: SuiteConfig) -> RunReport:
    """Run the selected suites and assemble the report."""
    ctx = RunContext(cfg)
    report = RunReport(config_echo=cfg.echo())
    suites = [s for s in SUITE_RUNNERS if s in cfg.suites]

    def run_one(name):
        try:
            out = SUITE_RUNNERS[name](ctx)
        except GenerationError as exc:
            rec = CheckRecord(name, "generation-failure", digest(str(exc)),
                              float("nan"), float("nan"), float("nan"),
                              float("nan"), float("nan"), False)
            return [rec], {}
        if isinstance(out, tuple):
            return out
        return out, {}

    if cfg.jobs > 1:
        # warm the shared mesh caches serially first: runners mutate ctx
        for level in ctx.study_levels():
            if any(s in suites for s in ("minkowski", "symmetry", "kernel", "operator")):
                ctx.mesh(level)
        ctx.mesh()
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run_one, suites))
    else:
        results = [run_one(s) for s in suites]
    for (records, tables) in results:
        report.records.extend(records)
        report.convergence.update(tables)
    report.records.sort(key=lambda r: (r.suite, r.name))
    return report


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_verify(args) -> int:
    cfg = parse_config(args.config)
    if args.suite:
        if args.suite not in SUITE_NAMES:
            print(f"error: unknown suite {args.suite!r}; valid: {', '.join(SUITE_NAMES)}",
                  file=sys.stderr)
            return 2
        cfg.suites = ([s for s in SUITE_NAMES if s != "all"]
                      if args.suite == "all" else [args.suite])
    if args.out:
        cfg.out_dir = args.out
    if args.jobs:
        cfg.jobs = args.jobs
    report = run_suite(cfg)
    paths = emit_report(report, cfg.out_dir)
    s = report.summary
    print(f"checks: {s['total']}  passed: {s['passed']}  failed: {s['failed']}  "
          f"diagnostics: {s['diagnostics']}")
    for r in report.records:
        if not r.passed and r.kind == "check":
            print(f"FAIL {r.suite}.{r.name}: gap={r.gap!r} tol={r.tolerance!r}")
    print(f"report: {paths['json']}")
    return 0 if report.all_passed else 1


def _cmd_mesh_info(args) -> int:
    cfg = parse_config(args.config)
    mesh = build_cap_mesh(cfg.cap_config())
    print(f"family: {cfg.norm.family}  n: {cfg.n}  omega0: {cfg.omega0}  "
          f"level: {cfg.mesh_level}")
    print(f"nodes: {mesh.node_count}  interior: {len(mesh.interior_idx)}  "
          f"boundary: {len(mesh.boundary_idx)}  cells: {len(mesh.cells)}")
    print(f"sigma(S) quadrature: {mesh.sigma_total!r}")
    print(f"region residual range: [{float(mesh.region_residuals.min())!r}, "
          f"{float(mesh.region_residuals.max())!r}]")
    print(f"anisotropy condition number: {mesh.anisotropy_condition!r}")
    print(f"frame orthonormality defect: {mesh.frame_orthonormal_defect!r}")
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write(mesh.dump_table())
        print(f"node table written to {args.dump}")
    return 0


def _cmd_body_gen(args) -> int:
    cfg = parse_config(args.config)
    mesh = build_cap_mesh(cfg.cap_config())
    try:
        body = random_capillary_body(mesh, args.seed, cfg.amplitude)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return 1
    res, euc, ok = body.robin_residuals()
    print(f"seed {args.seed}: min W eig {body.min_w_eig!r}, min tau eig "
          f"{body.min_tau_eig!r}, min s_hat {float(np.min(body.shat))!r}")
    print(f"robin residual max {float(np.max(np.abs(res)))!r}, "
          f"degenerate co-normals {int(np.sum(~ok))}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body.record_json())
        print(f"body record written to {args.out}")
    return 0


STUDY_CHECKS = ("minkowski", "symmetry", "kernel", "divergence", "area",
                "operator_adjoint")


def _cmd_study(args) -> int:
    cfg = parse_config(args.config)
    if args.check not in STUDY_CHECKS:
        print(f"error: unknown check {args.check!r}; valid: {', '.join(STUDY_CHECKS)}",
              file=sys.stderr)
        return 2
    try:
        lo, hi = (int(v) for v in args.levels.split(".."))
    except ValueError:
        print("error: --levels expects A..B", file=sys.stderr)
        return 2
    levels = list(range(lo, hi + 1))
    ctx = RunContext(cfg)
    values = []
    for level in levels:
        mesh = ctx.mesh(level)
        if args.check == "area":
            val = abs(mesh.sigma_total)
            # self-convergence: difference to the next level, filled later
            values.append(val)
        elif args.check == "kernel":
            val = max(fn.kernel_tau_intrinsic(mesh, alpha)[0] for alpha in range(cfg.n))
            values.append(val)
        elif args.check == "minkowski":
            worst = 0.0
            for seed in cfg.seeds:
                body = rebind(ctx.body(seed, levels[-1]), mesh)
                for k in range(cfg.n):
                    worst = max(worst, abs(fn.minkowski_formula_residual(body, k)))
            values.append(worst)
        elif args.check == "symmetry":
            worst = 0.0
            for seed in cfg.seeds:
                bods = [rebind(b, mesh) for b in ctx.body_tuple(seed, cfg.n + 1, levels[-1])]
                out = fn.symmetry_check(bods)
                worst = max(worst, out["swap_deviation"] / out["scale"])
            values.append(worst)
        elif args.check == "divergence":
            b1 = rebind(ctx.body(cfg.seeds[0], levels[-1]), mesh)
            trailing = [rebind(ctx.body(cfg.seeds[0] + 1, levels[-1]), mesh)
                        for _ in range(cfg.n - 1)]
            values.append(fn.divergence_identity_check(b1, trailing)["max_residual"])
        elif args.check == "operator_adjoint":
            if cfg.n < 2:
                print("error: operator study needs n >= 2", file=sys.stderr)
                return 2
            bods = [rebind(b, mesh) for b in ctx.body_tuple(cfg.seeds[0], cfg.n + 1, levels[-1])]
            values.append(fn.operator_selfadjoint_deviation(bods[0], bods[1], [bods[2]]))
    if args.check == "area":
        # Richardson self-convergence of the region measure
        residuals = [abs(values[i] - values[-1]) for i in range(len(values) - 1)] + [float("nan")]
    else:
        residuals = values
    print("level,value,residual,ratio")
    rows = []
    for i, level in enumerate(levels):
        ratio = (residuals[i - 1] / residuals[i]
                 if i and residuals[i] and residuals[i] == residuals[i] else float("nan"))
        rows.append([level, values[i], residuals[i], ratio])
        print(f"{level},{values[i]!r},{residuals[i]!r},{ratio!r}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"study-{args.check}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("level,value,residual,ratio\n")
            for row in rows:
                fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                                  for v in row) + "\n")
        print(f"table written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capaf",
                                description="anisotropic capillary convex-body checks")
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run verification suites")
    pv.add_argument("--config", required=True)
    pv.add_argument("--suite", default=None)
    pv.add_argument("--out", default=None)
    pv.add_argument("--jobs", type=int, default=None)

    pm = sub.add_parser("mesh", help="mesh utilities")
    pm_sub = pm.add_subparsers(dest="mesh_command", required=True)
    pmi = pm_sub.add_parser("info", help="print mesh summary")
    pmi.add_argument("--config", required=True)
    pmi.add_argument("--dump", default=None)

    pb = sub.add_parser("body", help="body utilities")
    pb_sub = pb.add_subparsers(dest="body_command", required=True)
    pbg = pb_sub.add_parser("gen", help="generate a random body")
    pbg.add_argument("--config", required=True)
    pbg.add_argument("--seed", type=int, required=True)
    pbg.add_argument("--out", default=None)

    ps = sub.add_parser("study", help="convergence studies")
    ps_sub = ps.add_subparsers(dest="study_command", required=True)
    psc = ps_sub.add_parser("converge", help="run a convergence table")
    psc.add_argument("--config", required=True)
    psc.add_argument("--check", required=True)
    psc.add_argument("--levels", required=True, help="A..B")
    psc.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "mesh":
            return _cmd_mesh_info(args)
        if args.command == "body":
            return _cmd_body_gen(args)
        if args.command == "study":
            return _cmd_study(args)
    except InvalidConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except CapafError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
