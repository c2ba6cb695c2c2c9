"""Incremental-iterative solution: Newton load control and arc-length.

Both drivers iterate the linearized equilibrium K_T dq = lpf Q - F and
only commit the per-quadrature-point section-force state when an
increment converges, so a failed increment leaves the state bit-identical
to the last accepted one.  The arc-length driver uses a cylindrical
(displacement-norm) constraint with a secant predictor and traverses load
and displacement limit points.

Section forces are carried forward by one of three update algorithms:

    F1  recompute from the total strain and the current tangent matrix
    F2  accumulate increments, adjusting the stored normal force by
        -2 chi Mtilde for the incremental curvature change chi
    F3  accumulate increments with no adjustment

All three coincide on the first increment from a stress-free state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import Assembler
from .constitutive import model_integrals
from .errors import ConstraintError, CurvinessError, GeometryError, SolverError

__all__ = [
    "ArcLengthConfig",
    "SolverConfig",
    "BeamStateStore",
    "ContinuationRecord",
    "newton_run",
    "arclength_run",
    "update_section_forces",
    "limit_point_scan",
    "record_at_lpf",
]


@dataclass(frozen=True)
class ArcLengthConfig:
    """Arc-length tuning knobs.

    The radius is scaled by sqrt(target_iterations / actual) after each
    step, clamped per step and in absolute terms.  The tangent operator
    converges linearly in its tail (the constitutive-rate and follower
    load terms are deliberately left out of K_T), which floors realistic
    iteration counts near 5; the default target sits above that floor so
    the radius can regrow after cuts.
    """

    initial_radius: float = 0.1
    target_iterations: int = 8
    step_scale_bounds: tuple = (0.25, 4.0)
    radius_bounds: tuple | None = None  # default (1e-4, 4) x initial_radius
    max_lpf: float = 1.0
    max_steps: int = 1000
    max_cuts: int = 10

    def resolved_radius_bounds(self):
        if self.radius_bounds is not None:
            return self.radius_bounds
        return (1e-4 * self.initial_radius, 4.0 * self.initial_radius)


@dataclass(frozen=True)
class SolverConfig:
    method: str = "newton"
    model: str = "Da"
    force_update: str = "F1"
    n_increments: int = 20
    tolerance: float = 1e-8
    max_iterations: int = 25
    residual_floor: float = 1e-100
    max_lpf: float = 1.0
    arc: ArcLengthConfig = field(default_factory=ArcLengthConfig)

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.n_increments < 1:
            raise ValueError("n_increments must be >= 1")


class BeamStateStore:
    """Per-quadrature-point converged state of the whole structure.

    Each patch holds an (nq, 6) array of eps11, kappa, K, g, Ntilde,
    Mtilde.  Only ``commit`` mutates the store.
    """

    def __init__(self, states):
        self.states = [np.array(s, dtype=float) for s in states]

    @staticmethod
    def reference(assembler: Assembler) -> "BeamStateStore":
        return BeamStateStore(assembler.zero_state())

    def copy(self) -> "BeamStateStore":
        return BeamStateStore([s.copy() for s in self.states])

    def commit(self, new_states):
        self.states = [np.array(s, dtype=float) for s in new_states]


@dataclass(frozen=True)
class ContinuationRecord:
    """One converged point of the equilibrium path."""

    step: int
    lpf: float
    q: np.ndarray
    tracked: dict
    iterations: int
    converged: bool = True
    limit_point: str | None = None


def update_section_forces(
    store: BeamStateStore, strain_states, algorithm: str, assembler: Assembler
) -> BeamStateStore:
    """Commit converged strains to the store under the chosen algorithm.

    ``strain_states`` carries per-patch arrays with columns eps11, kappa,
    K, g at the accepted configuration.  F1 rebuilds (Ntilde, Mtilde) from
    the total strains; F2 adjusts the stored normal force by the
    incremental Frenet curvature change (the stress couple needs no
    adjustment); F3 accumulates without adjustment.
    """
    if algorithm not in ("F1", "F2", "F3"):
        raise ValueError(f"unknown force update algorithm {algorithm!r}")
    new_states = []
    for tab, prev, cur in zip(assembler.tables, store.states, strain_states):
        sec, mat = tab.patch.section, tab.patch.material
        out = np.empty((cur.shape[0], 6))
        out[:, :4] = cur[:, :4]
        for qi in range(cur.shape[0]):
            eps, kap, K, g = cur[qi, :4]
            A, Ib, I = model_integrals(assembler.model, sec, K)
            s = mat.E / (g * g)
            d11, d12, d22 = s * A, -s * Ib, s * I
            if algorithm == "F1":
                Nt = d11 * eps + d12 * kap
                Mt = d12 * eps + d22 * kap
            else:
                de = eps - prev[qi, 0]
                dk = kap - prev[qi, 1]
                Nt = prev[qi, 4] + d11 * de + d12 * dk
                Mt = prev[qi, 5] + d12 * de + d22 * dk
                if algorithm == "F2":
                    chi = K - prev[qi, 2]
                    Nt -= 2.0 * chi * prev[qi, 5]
            out[qi, 4] = Nt
            out[qi, 5] = Mt
        new_states.append(out)
    committed = store.copy()
    committed.commit(new_states)
    return committed


def _char_length(assembler: Assembler) -> float:
    pts = np.vstack([p.control_points for p in assembler.patches])
    span = np.ptp(pts, axis=0)
    return float(max(np.hypot(span[0], span[1]), 1.0))


def _tracked_values(trackers, q, assembler) -> dict:
    return {name: float(fn(q, assembler)) for name, fn in (trackers or {}).items()}


def _solve_linear(K, rhs, sym: bool = True, lstsq_fallback: bool = False):
    try:
        sol = scipy.linalg.solve(K, rhs, assume_a="sym" if sym else "gen")
        if not np.all(np.isfinite(sol)):
            raise scipy.linalg.LinAlgError("non-finite solution")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        if lstsq_fallback:
            # singular tangent at a transient iterate: take the
            # minimum-norm step on the solvable subspace and keep going
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            if np.all(np.isfinite(sol)):
                return sol
        raise SolverError(
            "singular tangent stiffness; a limit point was likely reached - "
            "consider the arc-length method"
        ) from exc
    return sol


def _force_scale(lam, normQ, normF, ref_scale, cfg):
    """Force scale for the relative residual test.

    The local scale max(|lpf| |Q|, |F|) collapses when the path crosses a
    zero-load state, so a fraction of the running peak force level along
    the path keeps the test meaningful there (and a floor keeps the
    LPF = 0 start trivially converged).
    """
    return max(abs(lam) * normQ, normF, 0.1 * ref_scale, cfg.residual_floor)


def _fd_tangent(assembler, q, store, lpf, red):
    """Finite-difference tangent of the reduced residual at fixed LPF.

    Central differences over the reduced directions; returns a matrix
    acting like the reduced stiffness (solving B dq = r moves toward
    equilibrium).  Two assemblies per reduced DOF; with desk-scale
    systems this is the trusted fallback when the formulation's
    quasi-tangent loses convergence at strong curviness.
    """
    n = red.T.shape[1]
    eps = 1e-7 * _char_length(assembler)
    J = np.empty((n, n))
    for j in range(n):
        dq = red.T[:, j] * eps
        _, Fp, _ = assembler.assemble_raw(q + dq, store.states)
        Qp = assembler.external_force(q + dq)
        _, Fm, _ = assembler.assemble_raw(q - dq, store.states)
        Qm = assembler.external_force(q - dq)
        rp = red.T.T @ (lpf * Qp - Fp)
        rm = red.T.T @ (lpf * Qm - Fm)
        J[:, j] = (rp - rm) / (2.0 * eps)
    return -J


def _stalling(history):
    """True when the residual failed to shrink meaningfully lately."""
    return len(history) >= 4 and history[-1] > 0.25 * history[-4]


def _newton_at_lpf(assembler, q, store, lpf, cfg, drift_tol, ref_scale):
    """Equilibrium at fixed load level; returns (q, states, iters, scale).

    Iterates K_T dq = lpf Q - F with the formulation's symmetric tangent.
    That operator omits the follower-couple and constitutive-rate terms,
    whose error modes can turn divergent once the beam is strongly
    curved; when the residual stalls, the iteration switches to a
    finite-difference tangent of the exact residual, which restores
    quadratic convergence at the price of one assembly per reduced DOF.
    """
    q_init = q.copy()
    q = q.copy()
    res0 = None
    history: list = []
    use_fd = False
    it = 0
    while it <= cfg.max_iterations:
        try:
            if not np.all(np.isfinite(q)):
                raise CurvinessError("non-finite trial displacements")
            KT, F, states = assembler.assemble_raw(q, store.states)
            Q = assembler.external_force(q)
            red = assembler.reduction(q)
        except (CurvinessError, GeometryError, ConstraintError) as exc:
            # the plain iteration wandered into inadmissible geometry;
            # redo the increment with the finite-difference tangent
            if use_fd or it >= cfg.max_iterations:
                raise SolverError(
                    f"iteration left the admissible region at LPF {lpf:.6g}: {exc}"
                ) from exc
            use_fd = True
            q = q_init.copy()
            it += 1
            continue
        R = lpf * Q - F
        r = red.T.T @ R
        res = float(np.linalg.norm(r))
        normQ = float(np.linalg.norm(red.T.T @ Q))
        normF = float(np.linalg.norm(red.T.T @ F))
        scale = _force_scale(lpf, normQ, normF, ref_scale, cfg)
        drift = float(np.max(np.abs(red.c))) if red.c.size else 0.0
        if res <= cfg.tolerance * scale and drift <= drift_tol:
            return q, states, it, max(abs(lpf) * normQ, normF)
        if it == cfg.max_iterations:
            break
        it += 1
        if res0 is None:
            res0 = res
        history.append(res)
        if not use_fd and _stalling(history):
            # the quasi-tangent lost this increment; redo it from the
            # converged start with the finite-difference tangent
            use_fd = True
            q = q_init.copy()
            continue
        if use_fd:
            B = _fd_tangent(assembler, q, store, lpf, red)
            dq = _solve_linear(B, r, sym=False, lstsq_fallback=True)
        else:
            Kr = red.reduce_matrix(KT)
            dq = _solve_linear(Kr, red.T.T @ (R - KT @ red.c))
        q = q + red.expand(dq)
    raise SolverError(
        f"no convergence in {cfg.max_iterations} iterations at LPF {lpf:.6g}; "
        "consider the arc-length method or smaller increments"
    )


def newton_run(assembler: Assembler, config: SolverConfig, trackers=None):
    """Load-controlled continuation over n_increments equal LPF steps.

    A failing increment is bisected into sub-increments (committed to the
    state store, but not recorded) before giving up; SolverError carries
    the partial path when even that fails.
    """
    q = np.zeros(assembler.ndof)
    store = BeamStateStore.reference(assembler)
    drift_tol = 1e-10 * _char_length(assembler)
    records = [
        ContinuationRecord(
            step=0, lpf=0.0, q=q.copy(), tracked=_tracked_values(trackers, q, assembler),
            iterations=0,
        )
    ]
    ref_scale = 0.0

    def advance(q, store, lpf_from, lpf_to, ref_scale, depth=0):
        try:
            q, states, iters, level = _newton_at_lpf(
                assembler, q, store, lpf_to, config, drift_tol, ref_scale
            )
            store = update_section_forces(store, states, config.force_update, assembler)
            return q, store, max(ref_scale, level), iters
        except SolverError:
            if depth >= 6:
                raise
            mid = 0.5 * (lpf_from + lpf_to)
            q, store, ref_scale, it1 = advance(q, store, lpf_from, mid, ref_scale, depth + 1)
            q, store, ref_scale, it2 = advance(q, store, mid, lpf_to, ref_scale, depth + 1)
            return q, store, ref_scale, it1 + it2

    lpf_prev = 0.0
    for k in range(1, config.n_increments + 1):
        lpf = config.max_lpf * k / config.n_increments
        try:
            q, store, ref_scale, iters = advance(q, store, lpf_prev, lpf, ref_scale)
        except SolverError as exc:
            raise SolverError(str(exc), records=records, diagnostics={"lpf": lpf}) from exc
        lpf_prev = lpf
        records.append(
            ContinuationRecord(
                step=k, lpf=lpf, q=q.copy(),
                tracked=_tracked_values(trackers, q, assembler), iterations=iters,
            )
        )
    return records


class _RadiusCut(Exception):
    pass


def _arc_step(assembler, q0, store, lam0, radius, sign, v_prev, cfg, drift_tol, ref_scale):
    """One arc-length step; returns (q, lam, states, iters, v_full, level)."""
    KT, F, states = assembler.assemble_raw(q0, store.states)
    Q = assembler.external_force(q0)
    red = assembler.reduction(q0)
    Kr = red.reduce_matrix(KT)
    dq_t = _solve_linear(Kr, red.T.T @ Q)
    u_t = red.T @ dq_t
    norm_t = float(np.linalg.norm(u_t))
    if norm_t < 1e-300:
        raise SolverError("load direction produces no displacement; check loads")
    dlam = radius / norm_t
    if v_prev is not None:
        if float(u_t @ v_prev) < 0.0:
            dlam = -dlam
    else:
        dlam = sign * dlam
    v = dlam * u_t + red.c
    q = q0 + v
    lam = lam0 + dlam

    for it in range(1, cfg.max_iterations + 1):
        try:
            if not np.all(np.isfinite(q)) or not np.isfinite(lam):
                raise CurvinessError("non-finite trial state")
            KT, F, states = assembler.assemble_raw(q, store.states)
            Q = assembler.external_force(q)
            red = assembler.reduction(q)
        except (CurvinessError, GeometryError, ConstraintError):
            raise _RadiusCut from None
        R = lam * Q - F
        Rr = red.T.T @ R
        res = float(np.linalg.norm(Rr))
        normQ = float(np.linalg.norm(red.T.T @ Q))
        normF = float(np.linalg.norm(red.T.T @ F))
        scale = _force_scale(lam, normQ, normF, ref_scale, cfg)
        drift = float(np.max(np.abs(red.c))) if red.c.size else 0.0
        if res <= cfg.tolerance * scale and drift <= drift_tol:
            return q, lam, states, it, v, max(abs(lam) * normQ, normF)
        Kr = red.reduce_matrix(KT)
        du_R = red.T @ _solve_linear(Kr, red.T.T @ (R - KT @ red.c)) + red.c
        du_Q = red.T @ _solve_linear(Kr, red.T.T @ Q)
        # cylindrical constraint |v + du_R + dl du_Q| = radius
        a = float(du_Q @ du_Q)
        b = 2.0 * float(du_Q @ (v + du_R))
        cc = float((v + du_R) @ (v + du_R)) - radius * radius
        disc = b * b - 4.0 * a * cc
        if a == 0.0:
            raise _RadiusCut
        if disc >= 0.0:
            sq = np.sqrt(disc)
            roots = ((-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a))
            # keep the root best aligned with the running increment
            best = max(roots, key=lambda r: float((v + du_R + r * du_Q) @ v))
        else:
            # no real intersection this iteration: step to the closest
            # approach of the constraint cylinder and keep iterating
            best = -b / (2.0 * a)
        v = v + du_R + best * du_Q
        q = q0 + v
        lam += best
        if not np.all(np.isfinite(q)) or not np.isfinite(lam):
            raise _RadiusCut
    raise _RadiusCut


def arclength_run(assembler: Assembler, config: SolverConfig, trackers=None):
    """Cylindrical arc-length continuation until LPF reaches its target.

    The radius adapts toward the target iteration count within the
    configured bounds; complex constraint roots or stalled iterations cut
    the radius and retry, and an exhausted cut budget raises SolverError
    with the partial path.
    """
    arc = config.arc
    q = np.zeros(assembler.ndof)
    store = BeamStateStore.reference(assembler)
    drift_tol = 1e-10 * _char_length(assembler)
    records = [
        ContinuationRecord(
            step=0, lpf=0.0, q=q.copy(), tracked=_tracked_values(trackers, q, assembler),
            iterations=0,
        )
    ]
    lam = 0.0
    radius = arc.initial_radius
    v_prev = None
    ref_scale = 0.0
    for step in range(1, arc.max_steps + 1):
        r = radius
        for cut in range(arc.max_cuts + 1):
            try:
                q_new, lam_new, states, iters, v, level = _arc_step(
                    assembler, q, store, lam, r, +1.0, v_prev, config, drift_tol,
                    ref_scale,
                )
                break
            except _RadiusCut:
                r *= 0.5
        else:
            raise SolverError(
                f"arc-length step {step} failed after {arc.max_cuts} radius cuts",
                records=records,
                diagnostics={"lpf": lam, "radius": r},
            )
        q, lam, v_prev = q_new, lam_new, v
        ref_scale = max(ref_scale, level)
        store = update_section_forces(store, states, config.force_update, assembler)
        records.append(
            ContinuationRecord(
                step=step, lpf=lam, q=q.copy(),
                tracked=_tracked_values(trackers, q, assembler), iterations=iters,
            )
        )
        if lam >= arc.max_lpf:
            break
        # sqrt rule with a success floor: the quasi-Newton iteration count
        # flattens near its linear-tail plateau, so pure sqrt(target/actual)
        # freezes the radius whenever the plateau meets the target; a
        # converged step therefore always regrows the radius a little and
        # the cut loop provides the counterforce at genuinely hard spots
        grow = np.sqrt(arc.target_iterations / max(iters, 1))
        if iters <= 0.8 * config.max_iterations:
            grow = max(grow, 1.25)
        grow = min(max(grow, arc.step_scale_bounds[0]), arc.step_scale_bounds[1])
        rb = arc.resolved_radius_bounds()
        radius = min(max(r * grow, rb[0]), rb[1])

    if len(records) > 1 and records[-1].lpf > arc.max_lpf:
        # land the terminal record exactly on the target load level,
        # starting from the interpolated crossing state
        lo = records[-2]
        hi = records[-1]
        t = (arc.max_lpf - lo.lpf) / (hi.lpf - lo.lpf)
        q_guess = (1.0 - t) * lo.q + t * hi.q
        try:
            q_end, states, iters, _ = _newton_at_lpf(
                assembler, q_guess, store, arc.max_lpf, config, drift_tol, ref_scale
            )
        except SolverError:
            return records
        records[-1] = ContinuationRecord(
            step=hi.step, lpf=arc.max_lpf, q=q_end.copy(),
            tracked=_tracked_values(trackers, q_end, assembler), iterations=iters,
        )
    return records


def limit_point_scan(records, tracked: str | None = None):
    """Limit points of a continuation path.

    Sign changes of the LPF increment mark load limit points; sign changes
    of the tracked displacement increment mark displacement limit points
    (snap-back).  ``tracked`` defaults to the first tracked quantity.
    """
    out = []
    if len(records) < 3:
        return out
    lpfs = np.array([r.lpf for r in records])
    out.extend((i, "load-limit") for i in _sign_flips(np.diff(lpfs)))
    names = list(records[0].tracked)
    if tracked is None and names:
        tracked = names[0]
    if tracked is not None and tracked in records[0].tracked:
        vals = np.array([r.tracked[tracked] for r in records])
        out.extend((i, "displacement-limit") for i in _sign_flips(np.diff(vals)))
    out.sort(key=lambda t: t[0])
    return out


def _sign_flips(diffs: np.ndarray):
    """Indices (of the record ending the reversal) where the sign flips."""
    scale = float(np.max(np.abs(diffs))) if len(diffs) else 0.0
    tol = 1e-12 * scale
    flips = []
    last = 0.0
    for i, d in enumerate(diffs):
        if abs(d) <= tol:
            continue
        s = np.sign(d)
        if last != 0.0 and s != last:
            flips.append(i + 1)
        last = s
    return flips


def record_at_lpf(records, lpf: float, occurrence: str = "last"):
    """Linearly interpolated (q, tracked) at an LPF crossing of the path."""
    crossings = []
    for i in range(len(records) - 1):
        a, b = records[i].lpf, records[i + 1].lpf
        if (a - lpf) * (b - lpf) <= 0.0 and a != b:
            crossings.append(i)
    if not crossings:
        raise SolverError(f"path never reaches LPF {lpf}")
    i = crossings[-1] if occurrence == "last" else crossings[0]
    a, b = records[i], records[i + 1]
    t = (lpf - a.lpf) / (b.lpf - a.lpf)
    q = (1.0 - t) * a.q + t * b.q
    tracked = {
        k: (1.0 - t) * a.tracked[k] + t * b.tracked[k] for k in a.tracked
    }
    return q, tracked
