"""Model documents, benchmark generators, result tables, and study harnesses.

A model is a JSON document with patches (geometry + section + material),
constraints, loads, solver settings, and output requests.  Parsing
validates everything up front and reports precise issue paths.  The
bundled benchmark generators reproduce the three study families used for
validation: the moment-loaded cantilever that rolls up into circles, the
two-member Lee frame, and the parabolic half-arch with a symmetry plane.

Result tables are plain CSV with dot decimals and 17 significant digits,
so files round-trip losslessly and are locale-independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .assembly import (
    Assembler,
    ClampConstraint,
    FixConstraint,
    LineLoad,
    MomentCouple,
    PointForce,
    RigidJointConstraint,
    SymmetryConstraint,
)
from .constitutive import (
    CrossSection,
    Material,
    model_integrals,
    section_properties,
    stress_profile,
)
from .errors import IgaBeamError, SolverError, ValidationError
from .metric import metric_at
from .solver import (
    ArcLengthConfig,
    SolverConfig,
    arclength_run,
    limit_point_scan,
    newton_run,
)
from .splines import (
    KnotVector,
    NurbsPatch,
    basis_ders,
    elevate_to,
    gauss_rule,
    line_patch,
    refine_uniform,
    with_attributes,
)

__all__ = [
    "TrackedPoint",
    "SectionProbe",
    "ModelFile",
    "parse_model",
    "serialize_model",
    "build_assembler",
    "build_trackers",
    "run_model",
    "write_path_csv",
    "write_profile_csv",
    "write_convergence_csv",
    "l2_displacement_error",
    "l2_force_errors",
    "convergence_study",
    "straightening_strain_estimate",
    "patch_arc_length",
    "rollup_displacement",
    "rollup_tip",
    "pure_bending_state",
    "mainspring_model",
    "lee_model",
    "arch_model",
    "benchmark_model",
]

_FMT = "{:.17g}"


@dataclass(frozen=True)
class TrackedPoint:
    """Scalar displacement output: one Cartesian component at (patch, xi)."""

    name: str
    patch: int
    xi: float
    dof: str  # "x" or "y"
    scale: float = 1.0


@dataclass(frozen=True)
class SectionProbe:
    """Location for a through-thickness stress profile."""

    patch: int
    xi: float


@dataclass
class ModelFile:
    patches: list
    constraints: list
    loads: list
    solver: SolverConfig
    tracked: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    analytic_reference: dict | None = None


# ---------------------------------------------------------------------------
# parsing / serialization


def _issue(issues, path, msg):
    issues.append(f"{path}: {msg}")


def _parse_patch(doc, path, issues):
    try:
        degree = int(doc["degree"])
        knots = KnotVector(np.asarray(doc["knots"], dtype=float), degree)
        cps = np.asarray(doc["control_points"], dtype=float)
        weights = np.asarray(
            doc.get("weights", np.ones(len(doc["control_points"]))), dtype=float
        )
        section = section_properties(doc["section"])
        material = Material(float(doc["material"]["E"]))
        return NurbsPatch(knots, cps, weights, section, material)
    except KeyError as exc:
        _issue(issues, path, f"missing field {exc}")
    except ValidationError as exc:
        for sub in exc.issues:
            _issue(issues, path, sub)
    except IgaBeamError as exc:
        _issue(issues, path, str(exc))
    except (TypeError, ValueError) as exc:
        _issue(issues, path, str(exc))
    return None


_ENDS = ("start", "end")


def _parse_constraint(doc, path, n_patches, patches, issues):
    kind = doc.get("type")
    try:
        if kind == "fix":
            c = FixConstraint(int(doc["patch"]), int(doc["cp"]), doc.get("dofs", "xy"))
            if c.dofs not in ("x", "y", "xy"):
                _issue(issues, path, f"dofs must be x, y or xy, got {c.dofs!r}")
                return None
        elif kind == "clamp":
            c = ClampConstraint(int(doc["patch"]), doc.get("end", "start"))
        elif kind == "symmetry":
            c = SymmetryConstraint(int(doc["patch"]), doc.get("end", "end"))
        elif kind == "rigid_joint":
            c = RigidJointConstraint(
                int(doc["patch_a"]), doc.get("end_a", "end"),
                int(doc["patch_b"]), doc.get("end_b", "start"),
            )
        else:
            _issue(issues, path, f"unknown constraint type {kind!r}")
            return None
    except KeyError as exc:
        _issue(issues, path, f"missing field {exc}")
        return None

    refs = (
        [("patch", c.patch)]
        if kind != "rigid_joint"
        else [("patch_a", c.patch_a), ("patch_b", c.patch_b)]
    )
    ok = True
    for name, ip in refs:
        if not 0 <= ip < n_patches:
            _issue(issues, path, f"{name} {ip} out of range (model has {n_patches} patches)")
            ok = False
    for name in ("end", "end_a", "end_b"):
        if name in doc and doc[name] not in _ENDS:
            _issue(issues, path, f"{name} must be one of {_ENDS}")
            ok = False
    if ok and kind == "fix" and patches[c.patch] is not None:
        if not 0 <= c.cp < patches[c.patch].n_cp:
            _issue(issues, path, f"cp {c.cp} out of range")
            ok = False
    return c if ok else None


def _parse_load(doc, path, n_patches, patches, issues):
    kind = doc.get("type")
    try:
        if kind == "force":
            ld = PointForce(
                int(doc["patch"]), float(doc["xi"]),
                float(doc.get("fx", 0.0)), float(doc.get("fy", 0.0)),
            )
        elif kind == "moment":
            ld = MomentCouple(int(doc["patch"]), doc.get("end", "end"), float(doc["m"]))
        elif kind == "line":
            ld = LineLoad(int(doc["patch"]), float(doc.get("px", 0.0)), float(doc.get("py", 0.0)))
        else:
            _issue(issues, path, f"unknown load type {kind!r}")
            return None
    except KeyError as exc:
        _issue(issues, path, f"missing field {exc}")
        return None
    if not 0 <= ld.patch < n_patches:
        _issue(issues, path, f"patch {ld.patch} out of range")
        return None
    if isinstance(ld, MomentCouple) and ld.end not in _ENDS:
        _issue(issues, path, f"end must be one of {_ENDS}")
        return None
    if isinstance(ld, PointForce) and patches[ld.patch] is not None:
        kv = patches[ld.patch].knots
        if not kv.start <= ld.xi <= kv.end:
            _issue(issues, path, f"xi {ld.xi} outside knot range")
            return None
    return ld


def _parse_solver(doc, issues):
    path = "solver"
    arc_doc = doc.get("arc", {})
    try:
        arc = ArcLengthConfig(
            initial_radius=float(arc_doc.get("initial_radius", 0.1)),
            target_iterations=int(arc_doc.get("target_iterations", 5)),
            step_scale_bounds=tuple(arc_doc.get("step_scale_bounds", (0.25, 4.0))),
            radius_bounds=(
                tuple(arc_doc["radius_bounds"])
                if arc_doc.get("radius_bounds") is not None
                else None
            ),
            max_lpf=float(arc_doc.get("max_lpf", doc.get("max_lpf", 1.0))),
            max_steps=int(arc_doc.get("max_steps", 1000)),
            max_cuts=int(arc_doc.get("max_cuts", 10)),
        )
        cfg = SolverConfig(
            method=doc.get("method", "newton"),
            model=doc.get("model", "Da"),
            force_update=doc.get("force_update", "F1"),
            n_increments=int(doc.get("n_increments", 20)),
            tolerance=float(doc.get("tolerance", 1e-8)),
            max_iterations=int(doc.get("max_iterations", 25)),
            max_lpf=float(doc.get("max_lpf", 1.0)),
            arc=arc,
        )
    except (TypeError, ValueError) as exc:
        _issue(issues, path, str(exc))
        return None
    if cfg.method not in ("newton", "arclength"):
        _issue(issues, path, f"method must be newton or arclength, got {cfg.method!r}")
    if cfg.model not in ("D0", "D1", "D2", "D3", "Da"):
        _issue(issues, path, f"unknown constitutive model {cfg.model!r}")
    if cfg.force_update not in ("F1", "F2", "F3"):
        _issue(issues, path, f"force_update must be F1, F2 or F3")
    return cfg


def parse_model(text: str) -> ModelFile:
    """Parse and validate a model JSON document.

    Raises ValidationError carrying every detected issue as
    "<path>: <message>".
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"document: invalid JSON ({exc})")
    issues: list[str] = []

    patch_docs = doc.get("patches", [])
    if not patch_docs:
        _issue(issues, "patches", "at least one patch is required")
    patches = [
        _parse_patch(d, f"patches[{i}]", issues) for i, d in enumerate(patch_docs)
    ]

    n = len(patches)
    constraint_docs = doc.get("constraints", [])
    if not constraint_docs:
        _issue(issues, "constraints", "at least one constraint is required")
    constraints = [
        _parse_constraint(d, f"constraints[{i}]", n, patches, issues)
        for i, d in enumerate(constraint_docs)
    ]
    loads = [
        _parse_load(d, f"loads[{i}]", n, patches, issues)
        for i, d in enumerate(doc.get("loads", []))
    ]
    solver = _parse_solver(doc.get("solver", {}), issues)

    out_doc = doc.get("output", {})
    tracked = []
    names = set()
    for i, d in enumerate(out_doc.get("tracked", [])):
        path = f"output.tracked[{i}]"
        try:
            tp = TrackedPoint(
                name=str(d["name"]), patch=int(d["patch"]), xi=float(d["xi"]),
                dof=str(d["dof"]), scale=float(d.get("scale", 1.0)),
            )
        except KeyError as exc:
            _issue(issues, path, f"missing field {exc}")
            continue
        if tp.dof not in ("x", "y"):
            _issue(issues, path, f"dof must be x or y, got {tp.dof!r}")
            continue
        if not 0 <= tp.patch < n:
            _issue(issues, path, f"patch {tp.patch} out of range")
            continue
        if tp.name in names:
            _issue(issues, path, f"duplicate tracked name {tp.name!r}")
            continue
        names.add(tp.name)
        tracked.append(tp)
    probes = []
    for i, d in enumerate(out_doc.get("probes", [])):
        path = f"output.probes[{i}]"
        try:
            pr = SectionProbe(patch=int(d["patch"]), xi=float(d["xi"]))
        except KeyError as exc:
            _issue(issues, path, f"missing field {exc}")
            continue
        if not 0 <= pr.patch < n:
            _issue(issues, path, f"patch {pr.patch} out of range")
            continue
        probes.append(pr)

    if issues:
        raise ValidationError(issues)
    return ModelFile(
        patches=patches,
        constraints=constraints,
        loads=loads,
        solver=solver,
        tracked=tracked,
        probes=probes,
        analytic_reference=doc.get("analytic_reference"),
    )


def _section_doc(sec: CrossSection) -> dict:
    if sec.shape == "rectangle":
        return {"shape": "rectangle", "b": sec.dims[0], "h": sec.dims[1]}
    return {"shape": "circle", "d": sec.dims[0]}


def serialize_model(model: ModelFile) -> str:
    """Model back to its JSON form (full float precision)."""
    doc = {
        "patches": [
            {
                "degree": p.degree,
                "knots": p.knots.values.tolist(),
                "control_points": p.control_points.tolist(),
                "weights": p.weights.tolist(),
                "section": _section_doc(p.section),
                "material": {"E": p.material.E},
            }
            for p in model.patches
        ],
        "constraints": [],
        "loads": [],
        "solver": {
            "method": model.solver.method,
            "model": model.solver.model,
            "force_update": model.solver.force_update,
            "n_increments": model.solver.n_increments,
            "tolerance": model.solver.tolerance,
            "max_iterations": model.solver.max_iterations,
            "max_lpf": model.solver.max_lpf,
            "arc": {
                "initial_radius": model.solver.arc.initial_radius,
                "target_iterations": model.solver.arc.target_iterations,
                "step_scale_bounds": list(model.solver.arc.step_scale_bounds),
                "radius_bounds": (
                    list(model.solver.arc.radius_bounds)
                    if model.solver.arc.radius_bounds is not None
                    else None
                ),
                "max_lpf": model.solver.arc.max_lpf,
                "max_steps": model.solver.arc.max_steps,
                "max_cuts": model.solver.arc.max_cuts,
            },
        },
        "output": {
            "tracked": [asdict(t) for t in model.tracked],
            "probes": [asdict(p) for p in model.probes],
        },
    }
    for c in model.constraints:
        if isinstance(c, FixConstraint):
            doc["constraints"].append(
                {"type": "fix", "patch": c.patch, "cp": c.cp, "dofs": c.dofs}
            )
        elif isinstance(c, ClampConstraint):
            doc["constraints"].append({"type": "clamp", "patch": c.patch, "end": c.end})
        elif isinstance(c, SymmetryConstraint):
            doc["constraints"].append({"type": "symmetry", "patch": c.patch, "end": c.end})
        elif isinstance(c, RigidJointConstraint):
            doc["constraints"].append(
                {
                    "type": "rigid_joint",
                    "patch_a": c.patch_a, "end_a": c.end_a,
                    "patch_b": c.patch_b, "end_b": c.end_b,
                }
            )
    for ld in model.loads:
        if isinstance(ld, PointForce):
            doc["loads"].append(
                {"type": "force", "patch": ld.patch, "xi": ld.xi, "fx": ld.fx, "fy": ld.fy}
            )
        elif isinstance(ld, MomentCouple):
            doc["loads"].append(
                {"type": "moment", "patch": ld.patch, "end": ld.end, "m": ld.m}
            )
        elif isinstance(ld, LineLoad):
            doc["loads"].append(
                {"type": "line", "patch": ld.patch, "px": ld.px, "py": ld.py}
            )
    if model.analytic_reference:
        doc["analytic_reference"] = model.analytic_reference
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# runners


def build_assembler(model: ModelFile) -> Assembler:
    return Assembler(
        model.patches,
        constraints=model.constraints,
        loads=model.loads,
        model=model.solver.model,
        algorithm=model.solver.force_update,
    )


def build_trackers(model: ModelFile, assembler: Assembler) -> dict:
    trackers = {}
    for tp in model.tracked:
        patch = model.patches[tp.patch]
        first, R = basis_ders(patch, tp.xi, 0)
        row = R[0].copy()
        comp = 0 if tp.dof == "x" else 1
        base = assembler.offsets[tp.patch]
        idx = base + 2 * (first + np.arange(patch.degree + 1)) + comp

        def fn(q, asm, idx=idx, row=row, scale=tp.scale):
            return scale * float(row @ q[idx])

        trackers[tp.name] = fn
    return trackers


def run_model(model: ModelFile, trackers=None):
    """Solve a model; returns (records, assembler, trackers)."""
    asm = build_assembler(model)
    if trackers is None:
        trackers = build_trackers(model, asm)
    runner = newton_run if model.solver.method == "newton" else arclength_run
    records = runner(asm, model.solver, trackers)
    return records, asm, trackers


# ---------------------------------------------------------------------------
# CSV emission


def _fmt_row(values) -> str:
    return ",".join(_FMT.format(v) if isinstance(v, float) else str(v) for v in values)


def write_path_csv(path, records, tracked_names):
    lines = ["step,LPF," + ",".join(tracked_names)]
    for r in records:
        lines.append(
            _fmt_row([r.step, float(r.lpf)] + [float(r.tracked[n]) for n in tracked_names])
        )
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def write_profile_csv(path, etas, sigma_exact, sigma_linear):
    lines = ["eta,sigma_exact,sigma_linear"]
    for row in zip(etas, sigma_exact, sigma_linear):
        lines.append(_fmt_row([float(v) for v in row]))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def write_convergence_csv(path, rows):
    lines = ["dofs,e_u_L2,e_N,e_M"]
    for dofs, eu, en, em in rows:
        lines.append(_fmt_row([int(dofs), float(eu), float(en), float(em)]))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def profile_at_probe(model: ModelFile, assembler: Assembler, q, probe: SectionProbe):
    patch = model.patches[probe.patch]
    disp = assembler.patch_disp(q, probe.patch)
    ref = metric_at(patch, None, probe.xi)
    cur = metric_at(patch, disp, probe.xi)
    exact = stress_profile(ref, cur, patch.section, patch.material, mode="exact")
    linear = stress_profile(
        ref, cur, patch.section, patch.material, etas=exact[:, 0], mode="linear"
    )
    return exact[:, 0], exact[:, 1], linear[:, 1]


def write_run_outputs(out_dir, model: ModelFile, records, assembler, trackers):
    """path.csv, per-probe profile CSVs, and summary.json for a finished run."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    names = [t.name for t in model.tracked]
    write_path_csv(os.path.join(out_dir, "path.csv"), records, names)
    if records:
        q = records[-1].q
        for i, probe in enumerate(model.probes):
            etas, se, sl = profile_at_probe(model, assembler, q, probe)
            write_profile_csv(
                os.path.join(out_dir, f"profile_{i}.csv"), etas, se, sl
            )
    limits = limit_point_scan(records)
    iters = [r.iterations for r in records[1:]]
    summary = {
        "final_lpf": records[-1].lpf if records else None,
        "steps": len(records) - 1 if records else 0,
        "limit_points": [[int(i), kind] for i, kind in limits],
        "iterations": {
            "total": int(np.sum(iters)) if iters else 0,
            "max": int(np.max(iters)) if iters else 0,
            "mean": float(np.mean(iters)) if iters else 0.0,
        },
        "tracked_final": {n: records[-1].tracked[n] for n in names} if records else {},
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
    return summary


# ---------------------------------------------------------------------------
# error norms and studies


def l2_displacement_error(patch: NurbsPatch, disp, ref_fn) -> float:
    """Relative L2 displacement error against a reference field.

    sqrt(int |u - u_ref|^2 ds / int |u_ref|^2 ds) by Gauss quadrature on
    the coarse patch; ``ref_fn(xi)`` returns the reference displacement.
    """
    rule = gauss_rule(patch)
    num = 0.0
    den = 0.0
    for xi, w in zip(rule.points, rule.weights):
        first, R = basis_ders(patch, xi, 1)
        u = R[0] @ (np.asarray(disp)[first : first + patch.degree + 1])
        u_ref = np.asarray(ref_fn(xi), dtype=float)
        pm = metric_at(patch, None, xi)
        ds = w * math.sqrt(pm.g)
        diff = u - u_ref
        num += ds * float(diff @ diff)
        den += ds * float(u_ref @ u_ref)
    if den == 0.0:
        raise ValidationError("reference displacement norm is zero")
    return math.sqrt(num / den)


def l2_force_errors(tables, state, refN_fn, refM_fn) -> tuple:
    """Relative L2 errors of (Ntilde, Mtilde) at the quadrature points."""
    numN = denN = numM = denM = 0.0
    t = tables
    for q in range(t.n_qp):
        ds = t.wq[q] * math.sqrt(t.g_ref[q])
        Nr, Mr = refN_fn(t.xi[q]), refM_fn(t.xi[q])
        numN += ds * (state[q, 4] - Nr) ** 2
        denN += ds * Nr**2
        numM += ds * (state[q, 5] - Mr) ** 2
        denM += ds * Mr**2
    if denN == 0.0 or denM == 0.0:
        raise ValidationError("reference force norm is zero")
    return math.sqrt(numN / denN), math.sqrt(numM / denM)


def straightening_strain_estimate(arc_length_ref: float, chord: float) -> float:
    """Green-Lagrange strain of an arc of length L* straightening to chord L."""
    if not (arc_length_ref >= chord > 0.0):
        raise ValidationError("requires L* >= L > 0")
    return (arc_length_ref**2 - chord**2) / (2.0 * chord**2)


def patch_arc_length(patch: NurbsPatch, subdivisions: int = 64) -> float:
    """Reference arc length by composite Gauss quadrature of sqrt(g)."""
    nodes, wts = np.polynomial.legendre.leggauss(8)
    total = 0.0
    a, b = patch.knots.start, patch.knots.end
    edges = np.linspace(a, b, subdivisions + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for t, w in zip(nodes, wts):
            pm = metric_at(patch, None, mid + half * t)
            total += half * w * math.sqrt(pm.g)
    return total


# -- analytic roll-up reference ---------------------------------------------


def rollup_displacement(n: float, L: float, lpf: float):
    """Thin-beam circle map of the moment-loaded cantilever.

    Returns u(s): the material point at arc coordinate s moves onto a
    circle of radius R = L/(2 pi n lpf) through the clamped end.
    """
    if lpf == 0.0:
        return lambda s: np.zeros(2)
    R = L / (2.0 * math.pi * n * lpf)

    def u(s):
        return np.array([R * math.sin(s / R) - s, R * (1.0 - math.cos(s / R))])

    return u


def rollup_tip(n: float, L: float, lpf: float):
    """Analytic tip position of the rolled-up cantilever."""
    if lpf == 0.0:
        return np.array([L, 0.0])
    R = L / (2.0 * math.pi * n * lpf)
    return np.array([R * math.sin(L / R), R * (1.0 - math.cos(L / R))])


def pure_bending_state(section, material, n, L, lpf, model="Da"):
    """Uniform pure-bending equilibrium of the roll-up problem.

    Solves the two scalar conditions Mtilde = M/g*, Ntilde = -M K*/g* for
    the physical curvature K* and stretch g* = 1 + 2 eps of the deformed
    circle under the tip moment M = 2 pi n E I0 lpf / L (arc-length
    parametrization).  For D1 this returns eps = 0 and K* = lpf 2 pi n/L
    exactly; independent of the finite element machinery.
    """
    E = material.E
    M = 2.0 * math.pi * n * E * section.I0 * lpf / L
    if lpf == 0.0:
        return 0.0, 0.0
    K = 2.0 * math.pi * n * lpf / L
    eps = 0.0
    for _ in range(200):
        gs = 1.0 + 2.0 * eps
        A, Ib, I = model_integrals(model, section, K)
        K_new = (M * gs + E * Ib * eps) / (E * I * gs)
        eps_new = (Ib * gs * K_new - M * K_new * gs / E) / A
        if abs(K_new - K) < 1e-15 * abs(K_new) and abs(eps_new - eps) < 1e-18 + 1e-15 * abs(eps_new):
            K, eps = K_new, eps_new
            break
        K, eps = K_new, eps_new
    return K, eps


# ---------------------------------------------------------------------------
# benchmark generators


def _meshed_line(p0, p1, degree, elements, continuity=None):
    patch = line_patch(p0, p1, degree)
    mult = degree - (degree - 1 if continuity is None else continuity)
    return refine_uniform(patch, elements, mult)


def mainspring_model(
    n: int = 1,
    h: float = 0.05,
    model: str = "D1",
    degree: int = 4,
    elements: int = 24,
    continuity: int | None = None,
    n_increments: int = 20,
    force_update: str = "F1",
    E: float = 2.1e8,
    L: float = 10.0,
    max_lpf: float = 1.0,
) -> ModelFile:
    """Cantilever rolled up into n circles by an end moment 2 pi n E I0 / L.

    Square section b = h; at LPF = 1 the curviness reaches
    K h = 2 pi n h / L.
    """
    section = CrossSection.rectangle(h, h)
    material = Material(E)
    patch = _meshed_line((0.0, 0.0), (L, 0.0), degree, elements, continuity)
    patch = with_attributes(patch, section, material)
    m_ref = 2.0 * math.pi * n * E * section.I0 / L
    # strong roll-up coiling needs room for the finite-difference
    # tangent fallback on top of the plain iterations
    solver = SolverConfig(
        method="newton",
        model=model,
        force_update=force_update,
        n_increments=n_increments,
        max_iterations=40,
        max_lpf=max_lpf,
    )
    return ModelFile(
        patches=[patch],
        constraints=[ClampConstraint(0, "start")],
        loads=[MomentCouple(0, "end", m_ref)],
        solver=solver,
        tracked=[
            TrackedPoint("u_tip", 0, 1.0, "x"),
            TrackedPoint("v_tip", 0, 1.0, "y"),
        ],
        probes=[SectionProbe(0, 0.5)],
        analytic_reference={"type": "rollup", "n": n, "L": L},
    )


_LEE_CASES = {
    # h and the load scale multiplier relative to the thin original
    "LF": (2.0, 1.0),
    "LF1": (5.0, 15.625),
    "LF2": (10.0, 125.0),
}


def lee_model(
    case: str = "LF",
    model: str = "Da",
    degree: int = 4,
    elements: int = 5,
    continuity: int = 1,
    method: str = "arclength",
    E: float = 720.0,
    L: float = 120.0,
    b: float = 3.0,
    load_offset: float = 0.2,
    P: float = 20.0,
    initial_radius: float = 2.0,
    max_steps: int = 400,
    force_update: str = "F1",
) -> ModelFile:
    """Lee's frame: two rigidly joined members, hinged at both far ends.

    The vertical force acts at ``load_offset`` of the horizontal member
    (measured from the joint).  Cases LF1/LF2 increase the section height
    2.5x/5x and scale the reference load with the bending stiffness, which
    drives the peak curviness to roughly 0.23 and 0.46.
    """
    if case not in _LEE_CASES:
        raise ValidationError(f"unknown Lee case {case!r} (LF, LF1, LF2)")
    h, load_scale = _LEE_CASES[case]
    section = CrossSection.rectangle(b, h)
    material = Material(E)
    column = _meshed_line((0.0, 0.0), (0.0, L), degree, elements, continuity)
    beam = _meshed_line((0.0, L), (L, L), degree, elements, continuity)
    column = with_attributes(column, section, material)
    beam = with_attributes(beam, section, material)
    solver = SolverConfig(
        method=method,
        model=model,
        force_update=force_update,
        n_increments=40,
        max_lpf=1.0,
        arc=ArcLengthConfig(
            initial_radius=initial_radius, max_steps=max_steps, max_lpf=1.0
        ),
    )
    return ModelFile(
        patches=[column, beam],
        constraints=[
            FixConstraint(0, 0, "xy"),
            FixConstraint(1, beam.n_cp - 1, "xy"),
            RigidJointConstraint(0, "end", 1, "start"),
        ],
        loads=[PointForce(1, load_offset, 0.0, -P * load_scale)],
        solver=solver,
        tracked=[
            TrackedPoint("v_A", 1, load_offset, "y", scale=-1.0),
            TrackedPoint("u_A", 1, load_offset, "x"),
        ],
        probes=[SectionProbe(1, load_offset)],
    )


_ARCH_CASES = {
    # rise f and reference load P
    "R1": (0.3, 3.0e4),
    "R2": (0.5, 1.0e5),
    "R3": (1.0, 6.0e5),
    "R4": (2.0, 3.0e6),
}


def arch_model(
    case: str = "R1",
    model: str = "Da",
    degree: int = 3,
    elements: int = 16,
    continuity: int | None = None,
    E: float = 2.1e8,
    L: float = 10.0,
    b: float = 0.35,
    h: float = 0.35,
    P: float | None = None,
    f: float | None = None,
    initial_radius: float = 0.05,
    max_steps: int = 3000,
    force_update: str = "F1",
) -> ModelFile:
    """Parabolic arch y = 4 f x (L - x)/L^2, pinned, apex point load.

    One half is modeled with a symmetry plane at the apex, which enforces
    the symmetric multi-snap path.  Cases R1..R4 raise the rise f (and the
    reference load), moving the response from a single snap-through to
    multiple snaps.
    """
    if case not in _ARCH_CASES:
        raise ValidationError(f"unknown arch case {case!r} (R1..R4)")
    f_case, p_case = _ARCH_CASES[case]
    rise = f_case if f is None else f
    load = p_case if P is None else P
    section = CrossSection.rectangle(b, h)
    material = Material(E)
    # exact half parabola: quadratic Bezier with x linear in the parameter
    master = NurbsPatch(
        KnotVector(np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 2),
        np.array([[0.0, 0.0], [L / 4.0, rise], [L / 2.0, rise]]),
        np.ones(3),
    )
    patch = elevate_to(master, degree)
    mult = degree - (degree - 1 if continuity is None else continuity)
    patch = refine_uniform(patch, elements, mult)
    patch = with_attributes(patch, section, material)
    solver = SolverConfig(
        method="arclength",
        model=model,
        force_update=force_update,
        max_lpf=1.0,
        arc=ArcLengthConfig(
            initial_radius=initial_radius,
            max_steps=max_steps,
            max_lpf=1.0,
        ),
    )
    return ModelFile(
        patches=[patch],
        constraints=[FixConstraint(0, 0, "xy"), SymmetryConstraint(0, "end")],
        loads=[PointForce(0, 1.0, 0.0, -load / 2.0)],
        solver=solver,
        tracked=[TrackedPoint("v_s", 0, 1.0, "y", scale=-1.0)],
        probes=[SectionProbe(0, 1.0)],
        analytic_reference={"type": "parabola", "f": rise, "L": L},
    )


def benchmark_model(name: str, **kwargs) -> ModelFile:
    """Dispatch to a named benchmark generator (mainspring, lee, arch)."""
    generators = {"mainspring": mainspring_model, "lee": lee_model, "arch": arch_model}
    if name not in generators:
        raise ValidationError(
            f"unknown benchmark {name!r}; available: {sorted(generators)}"
        )
    return generators[name](**kwargs)


# ---------------------------------------------------------------------------
# convergence harness


def convergence_study(
    base: ModelFile,
    degrees,
    levels: int,
    reference: str = "analytic",
):
    """Mesh-refinement study on a single-patch moment-loaded model.

    Rebuilds meshes from the model's patch by degree elevation plus
    uniform knot insertion (all meshes share the exact geometry), runs the
    load-controlled solver to LPF = 1, and measures displacement and
    section-force errors against the analytic thin-beam reference or a
    fine numerical one.  Returns {degree: [(dofs, e_u, e_N, e_M), ...]}.
    """
    if len(base.patches) != 1:
        raise ValidationError("convergence study requires a single-patch model")
    master = base.patches[0]
    sec, mat = master.section, master.material

    if reference == "analytic":
        ref = base.analytic_reference or {}
        if ref.get("type") != "rollup":
            raise ValidationError(
                "analytic reference available only for roll-up models; "
                "use --reference fine"
            )
        n_circ, L = float(ref["n"]), float(ref["L"])
        lpf = base.solver.max_lpf
        u_of_s = rollup_displacement(n_circ, L, lpf)
        Kstar, eps = pure_bending_state(sec, mat, n_circ, L, lpf, base.solver.model)
        gs = 1.0 + 2.0 * eps
        M = 2.0 * math.pi * n_circ * mat.E * sec.I0 * lpf / L

        def u_ref_factory(patch):
            start = patch.knots.start
            span = patch.knots.end - start
            if abs(eps) < 1e-30:
                return lambda xi: u_of_s(L * (xi - start) / span)

            # stretched circle: material point s maps through arc lam*s
            lam = math.sqrt(gs)
            R = 1.0 / Kstar

            def u(xi):
                s = L * (xi - start) / span
                a = lam * s / R
                return np.array([R * math.sin(a) - s, R * (1.0 - math.cos(a))])

            return u

        def refN_factory(patch):
            c2 = patch.knots.end - patch.knots.start
            g_par = (L / c2) ** 2 * gs
            return lambda xi: -M * Kstar / g_par

        def refM_factory(patch):
            c2 = patch.knots.end - patch.knots.start
            g_par = (L / c2) ** 2 * gs
            return lambda xi: M / g_par

    elif reference == "fine":
        fine = ModelFile(
            patches=[
                with_attributes(
                    refine_uniform(elevate_to(master, 5), 60, 4), sec, mat
                )
            ],
            constraints=base.constraints,
            loads=base.loads,
            solver=base.solver,
            tracked=base.tracked,
            probes=[],
            analytic_reference=base.analytic_reference,
        )
        records, asm_f, _ = run_model(fine, trackers={})
        qf = records[-1].q
        fine_patch = fine.patches[0]
        disp_f = asm_f.patch_disp(qf, 0)

        def u_ref_factory(patch):
            def u(xi):
                first, R = basis_ders(fine_patch, xi, 0)
                return R[0] @ disp_f[first : first + fine_patch.degree + 1]

            return u

        def _force_at(xi):
            from .metric import axis_strain

            ref_m = metric_at(fine_patch, None, xi)
            cur_m = metric_at(fine_patch, disp_f, xi)
            st = axis_strain(ref_m, cur_m)
            A, Ib, I = model_integrals(base.solver.model, sec, cur_m.K)
            s = mat.E / (cur_m.g**2)
            return (
                s * (A * st.eps11 - Ib * st.kappa),
                s * (-Ib * st.eps11 + I * st.kappa),
            )

        def refN_factory(patch):
            return lambda xi: _force_at(xi)[0]

        def refM_factory(patch):
            return lambda xi: _force_at(xi)[1]

    else:
        raise ValidationError(f"unknown reference {reference!r} (analytic or fine)")

    results = {}
    for p in degrees:
        rows = []
        for lev in range(1, levels + 1):
            nel = 2**lev
            mesh = refine_uniform(elevate_to(master, p), nel, 1)
            mesh = with_attributes(mesh, sec, mat)
            mdl = ModelFile(
                patches=[mesh],
                constraints=base.constraints,
                loads=base.loads,
                solver=base.solver,
                tracked=[],
                probes=[],
                analytic_reference=base.analytic_reference,
            )
            records, asm, _ = run_model(mdl, trackers={})
            q = records[-1].q
            disp = asm.patch_disp(q, 0)
            e_u = l2_displacement_error(mesh, disp, u_ref_factory(mesh))
            KT, F, states = asm.assemble_raw(q, _final_store(asm, records))
            e_N, e_M = l2_force_errors(
                asm.tables[0], states[0], refN_factory(mesh), refM_factory(mesh)
            )
            rows.append((2 * mesh.n_cp, e_u, e_N, e_M))
        results[p] = rows
    return results


def _final_store(assembler, records):
    """Re-derive the converged store at the last record (F1 semantics)."""
    from .solver import BeamStateStore, update_section_forces

    store = BeamStateStore.reference(assembler)
    _, _, states = assembler.assemble_raw(records[-1].q, store.states)
    return update_section_forces(store, states, "F1", assembler).states


def fit_loglog_slope(xs, ys, floor: float = 1e-12):
    """Least-squares slope of log(y) against log(x), ignoring y below floor."""
    pts = [(x, y) for x, y in zip(xs, ys) if y > floor]
    if len(pts) < 2:
        raise ValidationError("not enough points above the error floor for a slope fit")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])
