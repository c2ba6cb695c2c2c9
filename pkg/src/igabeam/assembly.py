"""Element kinematic matrices, loads, constraints, and global assembly.

The tangent system of the discrete equilibrium is

    K_T = sum int (BL^T D BL + B^T G B) sqrt(g) dxi
    F   = sum int  BL^T f sqrt(g) dxi,   Q = loads,

integrated with p+1 Gauss points per span and the metric of the current
configuration.  BL maps control-point velocities to the axis strain rates
(d11, kappa_dot); G is the symmetric matrix of generalized section forces
driving the geometric stiffness.

Boundary conditions are imposed strongly by master-slave elimination:
fixed DOFs are dropped and every linear relation (clamped-end rotation
lock, symmetry plane, rigid multi-patch joint) eliminates one slave DOF.
Joint coefficients are rebuilt from the current geometry each iteration,
with a drift correction so the constraint residual is driven to zero
alongside equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constitutive import CrossSection, Material, SectionForces
from .errors import ConstraintError, CurvinessError, GeometryError
from .metric import metric_at
from .splines import NurbsPatch, basis_ders, end_chord, gauss_rule

__all__ = [
    "ElementKinematics",
    "GeometricForceMatrix",
    "GlobalSystem",
    "PatchTables",
    "PointForce",
    "LineLoad",
    "MomentCouple",
    "FixConstraint",
    "ClampConstraint",
    "SymmetryConstraint",
    "RigidJointConstraint",
    "Assembler",
    "Reduction",
    "element_BL",
    "element_G",
    "moment_couple_load",
    "apply_constraints",
    "assemble",
]


# ---------------------------------------------------------------------------
# element-level kinematics (readable reference forms of the kernel math)


@dataclass(frozen=True)
class ElementKinematics:
    """Strain projection H, basis-derivative matrix B, and BL = H B."""

    first: int
    H: np.ndarray  # (2, 4)
    B: np.ndarray  # (4, 2m)
    BL: np.ndarray  # (2, 2m)


@dataclass(frozen=True)
class GeometricForceMatrix:
    """Blocks G^beta_alpha of the generalized section-force matrix."""

    blocks: np.ndarray  # (2, 2, 2, 2): [alpha, beta, i, j]

    @property
    def matrix(self) -> np.ndarray:
        """Assembled 4x4 form in the (v_x', v_x'', v_y', v_y'') ordering."""
        G = np.empty((4, 4))
        for al in range(2):
            for be in range(2):
                G[2 * al : 2 * al + 2, 2 * be : 2 * be + 2] = self.blocks[al, be]
        return G


def element_BL(patch: NurbsPatch, disp, xi: float) -> ElementKinematics:
    """Kinematic matrices at xi in the current configuration.

    Row 1 of BL realizes d11 = g1 . v'; row 2 realizes
    kappa_dot = g2 . (v'' - Gamma v'); both exactly annihilate rigid-body
    velocity fields.
    """
    pm = metric_at(patch, disp, xi)
    first, R = basis_ders(patch, xi, 2)
    m = patch.degree + 1

    H = np.zeros((2, 4))
    H[0, 0] = pm.g1[0]
    H[0, 2] = pm.g1[1]
    H[1, 0] = -pm.gamma111 * pm.g2[0]
    H[1, 1] = pm.g2[0]
    H[1, 2] = -pm.gamma111 * pm.g2[1]
    H[1, 3] = pm.g2[1]

    B = np.zeros((4, 2 * m))
    B[0, 0::2] = R[1]
    B[1, 0::2] = R[2]
    B[2, 1::2] = R[1]
    B[3, 1::2] = R[2]
    return ElementKinematics(first=first, H=H, B=B, BL=H @ B)


def element_G(patch: NurbsPatch, disp, xi: float, forces: SectionForces) -> GeometricForceMatrix:
    """Generalized section-force blocks G^beta_alpha at xi; symmetric."""
    pm = metric_at(patch, disp, xi)
    g1, g2, g = pm.g1, pm.g2, pm.g
    gam, Ktil = pm.gamma111, pm.Ktilde
    Nt, Mt = forces.Ntilde, forces.Mtilde

    blocks = np.zeros((2, 2, 2, 2))
    for al in range(2):
        for be in range(2):
            Bm = g2[be] * g1[al] / g
            Btil = g1[be] * g2[al] / g
            Y = gam * Bm - (Ktil * g2[be] - gam * g1[be]) * g2[al] / g
            blocks[al, be, 0, 0] = Nt * (1.0 if al == be else 0.0) + Mt * Y
            blocks[al, be, 0, 1] = -Mt * Btil
            blocks[al, be, 1, 0] = -Mt * Bm
    return GeometricForceMatrix(blocks=blocks)


# ---------------------------------------------------------------------------
# loads


@dataclass(frozen=True)
class PointForce:
    patch: int
    xi: float
    fx: float
    fy: float


@dataclass(frozen=True)
class LineLoad:
    """Dead load per unit reference arc length."""

    patch: int
    px: float
    py: float


@dataclass(frozen=True)
class MomentCouple:
    patch: int
    end: str
    m: float


def moment_couple_load(patch: NurbsPatch, disp, end: str, m: float):
    """Force couple on the last two control points realizing an end moment.

    The two forces are perpendicular to the current end chord and scale
    with the current control-point distance so their resultant vanishes
    and their moment equals ``m`` in every configuration; the load vector
    must therefore be rebuilt each iteration.

    Returns (cp_indices, forces) with forces of shape (2, 2): the chord-end
    control point first.
    """
    chord = end_chord(patch, end, disp)
    d2 = chord @ chord
    if d2 < 1e-28:
        raise GeometryError("moment couple needs distinct end control points")
    # m/d along the unit normal = m * (rotate90 chord) / d^2
    f = m * np.array([-chord[1], chord[0]]) / d2
    n = patch.n_cp
    if end == "end":
        idx = (n - 1, n - 2)
    else:
        idx = (0, 1)
    return idx, np.array([f, -f])


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class FixConstraint:
    patch: int
    cp: int
    dofs: str = "xy"  # "x", "y", or "xy"


@dataclass(frozen=True)
class ClampConstraint:
    """Fully fixed end control point plus a rotation lock on its neighbour.

    The neighbour may move only along the initial end tangent, which keeps
    the end chord direction exact for arbitrarily large motion elsewhere.
    """

    patch: int
    end: str


@dataclass(frozen=True)
class SymmetryConstraint:
    """Sliding clamp at a symmetry plane through a patch end.

    The end control point stays on the plane (no motion along the initial
    end tangent, which is the plane normal) and the end chord keeps its
    direction; the structure may translate freely within the plane.
    """

    patch: int
    end: str


@dataclass(frozen=True)
class RigidJointConstraint:
    """Rigid connection of two patch ends: common point, fixed relative angle.

    Displacement continuity ties the two end control points; the relative
    end-chord angle is held by eliminating the transverse component of the
    second patch's penultimate control point as a function of the other
    five involved components, with coefficients rebuilt each iteration.
    """

    patch_a: int
    end_a: str
    patch_b: int
    end_b: str


@dataclass
class Reduction:
    """Master-slave elimination map: dq_full = T dq_red + c."""

    T: np.ndarray
    c: np.ndarray
    retained: np.ndarray  # global indices of retained DOFs

    def reduce_matrix(self, K: np.ndarray) -> np.ndarray:
        return self.T.T @ K @ self.T

    def reduce_residual(self, R: np.ndarray, K: np.ndarray) -> np.ndarray:
        if np.any(self.c):
            return self.T.T @ (R - K @ self.c)
        return self.T.T @ R

    def expand(self, dq_red: np.ndarray) -> np.ndarray:
        return self.T @ dq_red + self.c


class _RowBuilder:
    """Accumulates elimination rows and resolves master chains."""

    def __init__(self, ndof: int):
        self.ndof = ndof
        self.fixed: set[int] = set()
        self.slaves: dict[int, tuple[dict[int, float], float]] = {}

    def fix(self, dof: int):
        if dof in self.slaves:
            raise ConstraintError(f"DOF {dof} both fixed and slave")
        self.fixed.add(dof)

    def add_row(self, coefs: dict[int, float], rhs: float, slave_candidates=None):
        """Add one linear row sum c_k dq_k = rhs, eliminating one slave DOF."""
        # substitute already-eliminated DOFs
        work = dict(coefs)
        rhs_w = rhs
        changed = True
        while changed:
            changed = False
            for d in list(work):
                if d in self.fixed:
                    work.pop(d)
                    changed = True
                elif d in self.slaves:
                    c = work.pop(d)
                    masters, const = self.slaves[d]
                    for md, mc in masters.items():
                        work[md] = work.get(md, 0.0) + c * mc
                    rhs_w -= c * const
                    changed = True
        candidates = [d for d in (slave_candidates or work) if d in work]
        if not candidates:
            raise ConstraintError("constraint row has no eliminable DOF")
        s = max(candidates, key=lambda d: abs(work[d]))
        cs = work.pop(s)
        if abs(cs) < 1e-12:
            raise ConstraintError("singular constraint row")
        masters = {d: -c / cs for d, c in work.items() if c != 0.0}
        self.slaves[s] = (masters, rhs_w / cs)

    def build(self) -> Reduction:
        eliminated = self.fixed | set(self.slaves)
        retained = np.array(
            [d for d in range(self.ndof) if d not in eliminated], dtype=int
        )
        col = {d: j for j, d in enumerate(retained)}
        T = np.zeros((self.ndof, len(retained)))
        c = np.zeros(self.ndof)
        for j, d in enumerate(retained):
            T[d, j] = 1.0
        for s, (masters, const) in self.slaves.items():
            c[s] = const
            for md, mc in masters.items():
                if md in self.fixed:
                    continue
                if md in self.slaves:
                    raise ConstraintError("unresolved master chain")
                T[s, col[md]] += mc
        return Reduction(T=T, c=c, retained=retained)


def _dominant_component(vec: np.ndarray) -> int:
    return int(np.argmax(np.abs(vec)))


# ---------------------------------------------------------------------------
# global assembly


@dataclass
class PatchTables:
    """Quadrature-point tables of one patch, fixed for a whole run.

    a1 and b2 are the reference tangent and second-derivative vectors and
    c_ref their cross product; the kernels form strain increments against
    these instead of subtracting nearly equal current/reference metrics.
    """

    patch: NurbsPatch
    offset: int  # first global DOF of this patch
    xi: np.ndarray
    first: np.ndarray
    R0: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    wq: np.ndarray
    a1: np.ndarray
    b2: np.ndarray
    g_ref: np.ndarray
    c_ref: np.ndarray
    K_ref: np.ndarray

    @staticmethod
    def build(patch: NurbsPatch, offset: int) -> "PatchTables":
        rule = gauss_rule(patch)
        nq = len(rule.points)
        m = patch.degree + 1
        first = np.empty(nq, dtype=np.int64)
        R0 = np.empty((nq, m))
        R1 = np.empty((nq, m))
        R2 = np.empty((nq, m))
        a1 = np.empty((nq, 2))
        b2 = np.empty((nq, 2))
        g_ref = np.empty(nq)
        c_ref = np.empty(nq)
        K_ref = np.empty(nq)
        for q, xi in enumerate(rule.points):
            fi, R = basis_ders(patch, xi, 2)
            first[q] = fi
            R0[q], R1[q], R2[q] = R[0], R[1], R[2]
            cps = patch.control_points[fi : fi + m]
            a1[q] = R[1] @ cps
            b2[q] = R[2] @ cps
            g_ref[q] = a1[q] @ a1[q]
            c_ref[q] = a1[q, 0] * b2[q, 1] - a1[q, 1] * b2[q, 0]
            K_ref[q] = c_ref[q] / (g_ref[q] * np.sqrt(g_ref[q]))
        return PatchTables(
            patch=patch,
            offset=offset,
            xi=rule.points.copy(),
            first=first,
            R0=R0,
            R1=R1,
            R2=R2,
            wq=rule.weights.copy(),
            a1=a1,
            b2=b2,
            g_ref=g_ref,
            c_ref=c_ref,
            K_ref=K_ref,
        )

    @property
    def n_qp(self) -> int:
        return len(self.xi)


@dataclass
class GlobalSystem:
    """Assembled tangent system with its constraint reduction."""

    K_T: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    reduction: Reduction
    states: list  # per-patch (nq, 6) arrays: eps, kap, K, g, Ntilde, Mtilde


class Assembler:
    """Holds patches, loads, and constraints of one structure.

    Element contributions are accumulated patch by patch in index order,
    so repeated assembly of the same state is bit-reproducible.
    """

    def __init__(self, patches, constraints=(), loads=(), model: str = "Da", algorithm: str = "F1"):
        self.patches = list(patches)
        self.model = model
        self.algorithm = algorithm
        self.constraints = list(constraints)
        self.loads = list(loads)

        self.offsets = []
        off = 0
        for p in self.patches:
            self.offsets.append(off)
            off += 2 * p.n_cp
        self.ndof = off
        self.tables = [
            PatchTables.build(p, o) for p, o in zip(self.patches, self.offsets)
        ]
        self._q_const = self._constant_loads()
        self._static_rows = self._build_static_rows()

    # -- loads ------------------------------------------------------------

    def _constant_loads(self) -> np.ndarray:
        Q = np.zeros(self.ndof)
        for ld in self.loads:
            if isinstance(ld, PointForce):
                patch = self.patches[ld.patch]
                first, R = basis_ders(patch, ld.xi, 0)
                base = self.offsets[ld.patch]
                for i in range(patch.degree + 1):
                    Q[base + 2 * (first + i)] += R[0, i] * ld.fx
                    Q[base + 2 * (first + i) + 1] += R[0, i] * ld.fy
            elif isinstance(ld, LineLoad):
                t = self.tables[ld.patch]
                base = self.offsets[ld.patch]
                scale = t.wq * np.sqrt(t.g_ref)
                for q in range(t.n_qp):
                    for i in range(t.patch.degree + 1):
                        row = base + 2 * (t.first[q] + i)
                        Q[row] += scale[q] * t.R0[q, i] * ld.px
                        Q[row + 1] += scale[q] * t.R0[q, i] * ld.py
        return Q

    def external_force(self, q: np.ndarray) -> np.ndarray:
        """Reference load vector (LPF = 1) at configuration q.

        Moment couples follow the current end chords, so this is rebuilt
        each iteration; their tangent-stiffness contribution is
        deliberately disregarded.
        """
        Q = self._q_const.copy()
        for ld in self.loads:
            if isinstance(ld, MomentCouple):
                patch = self.patches[ld.patch]
                disp = self.patch_disp(q, ld.patch)
                idx, forces = moment_couple_load(patch, disp, ld.end, ld.m)
                base = self.offsets[ld.patch]
                for cp, f in zip(idx, forces):
                    Q[base + 2 * cp] += f[0]
                    Q[base + 2 * cp + 1] += f[1]
        return Q

    # -- helpers ----------------------------------------------------------

    def patch_disp(self, q: np.ndarray, ip: int) -> np.ndarray:
        base = self.offsets[ip]
        n = self.patches[ip].n_cp
        return q[base : base + 2 * n].reshape(n, 2)

    def zero_state(self) -> list:
        """Reference per-patch state arrays (stress-free)."""
        out = []
        for t in self.tables:
            s = np.zeros((t.n_qp, 6))
            s[:, 2] = t.K_ref
            s[:, 3] = t.g_ref
            out.append(s)
        return out

    # -- constraints -------------------------------------------------------

    def _end_indices(self, ip: int, end: str):
        n = self.patches[ip].n_cp
        return (n - 1, n - 2) if end == "end" else (0, 1)

    def _dof(self, ip: int, cp: int, comp: int) -> int:
        return self.offsets[ip] + 2 * cp + comp

    def _build_static_rows(self):
        """Fixities and constant-coefficient rows (clamp, symmetry)."""
        fixed = []
        rows = []
        for c in self.constraints:
            if isinstance(c, FixConstraint):
                if "x" in c.dofs:
                    fixed.append(self._dof(c.patch, c.cp, 0))
                if "y" in c.dofs:
                    fixed.append(self._dof(c.patch, c.cp, 1))
            elif isinstance(c, ClampConstraint):
                endc, pen = self._end_indices(c.patch, c.end)
                fixed.append(self._dof(c.patch, endc, 0))
                fixed.append(self._dof(c.patch, endc, 1))
                chord = end_chord(self.patches[c.patch], c.end)
                normal = np.array([-chord[1], chord[0]]) / np.hypot(*chord)
                coefs = {
                    self._dof(c.patch, pen, 0): normal[0],
                    self._dof(c.patch, pen, 1): normal[1],
                }
                slave = self._dof(c.patch, pen, _dominant_component(normal))
                rows.append((coefs, [slave]))
            elif isinstance(c, SymmetryConstraint):
                endc, pen = self._end_indices(c.patch, c.end)
                chord = end_chord(self.patches[c.patch], c.end)
                tangent = chord / np.hypot(*chord)
                normal = np.array([-tangent[1], tangent[0]])
                # end point pinned to the plane (normal = end tangent)
                coefs_t = {
                    self._dof(c.patch, endc, 0): tangent[0],
                    self._dof(c.patch, endc, 1): tangent[1],
                }
                rows.append(
                    (coefs_t, [self._dof(c.patch, endc, _dominant_component(tangent))])
                )
                # chord keeps its direction: transverse relative motion locked
                coefs_n = {
                    self._dof(c.patch, pen, 0): normal[0],
                    self._dof(c.patch, pen, 1): normal[1],
                    self._dof(c.patch, endc, 0): -normal[0],
                    self._dof(c.patch, endc, 1): -normal[1],
                }
                rows.append(
                    (coefs_n, [self._dof(c.patch, pen, _dominant_component(normal))])
                )
        return fixed, rows

    def reduction(self, q: np.ndarray) -> Reduction:
        """Constraint elimination map linearized at configuration q."""
        rb = _RowBuilder(self.ndof)
        fixed, rows = self._static_rows
        for d in fixed:
            rb.fix(d)
        for coefs, cands in rows:
            # static rows are homogeneous; drift stays zero but is corrected anyway
            phi = sum(cf * q[d] for d, cf in coefs.items())
            rb.add_row(coefs, -phi, cands)
        for c in self.constraints:
            if isinstance(c, RigidJointConstraint):
                self._add_joint_rows(rb, c, q)
        return rb.build()

    def _add_joint_rows(self, rb: _RowBuilder, c: RigidJointConstraint, q: np.ndarray):
        end_a, pen_a = self._end_indices(c.patch_a, c.end_a)
        end_b, pen_b = self._end_indices(c.patch_b, c.end_b)
        pa, pb = self.patches[c.patch_a], self.patches[c.patch_b]
        da = self.patch_disp(q, c.patch_a)
        db = self.patch_disp(q, c.patch_b)

        # displacement continuity: end_b follows end_a
        for comp in range(2):
            dof_a = self._dof(c.patch_a, end_a, comp)
            dof_b = self._dof(c.patch_b, end_b, comp)
            gap = (pb.control_points[end_b, comp] + q[dof_b]) - (
                pa.control_points[end_a, comp] + q[dof_a]
            )
            # reference geometries coincide at the joint, so gap is pure drift
            rb.add_row({dof_b: 1.0, dof_a: -1.0}, -gap, [dof_b])

        # relative end-chord angle held at its initial value
        ca = end_chord(pa, c.end_a, da)
        cb = end_chord(pb, c.end_b, db)
        ca0 = end_chord(pa, c.end_a)
        cb0 = end_chord(pb, c.end_b)
        rel = np.arctan2(ca[0] * cb[1] - ca[1] * cb[0], ca @ cb)
        rel0 = np.arctan2(ca0[0] * cb0[1] - ca0[1] * cb0[0], ca0 @ cb0)
        phi = rel - rel0
        if phi > np.pi:
            phi -= 2.0 * np.pi
        elif phi < -np.pi:
            phi += 2.0 * np.pi

        grad_cb = np.array([-cb[1], cb[0]]) / (cb @ cb)
        grad_ca = np.array([-ca[1], ca[0]]) / (ca @ ca)
        coefs = {}

        def _acc(dof, val):
            coefs[dof] = coefs.get(dof, 0.0) + val

        for comp in range(2):
            _acc(self._dof(c.patch_b, end_b, comp), grad_cb[comp])
            _acc(self._dof(c.patch_b, pen_b, comp), -grad_cb[comp])
            _acc(self._dof(c.patch_a, end_a, comp), -grad_ca[comp])
            _acc(self._dof(c.patch_a, pen_a, comp), grad_ca[comp])
        slave_cands = [
            self._dof(c.patch_b, pen_b, 0),
            self._dof(c.patch_b, pen_b, 1),
        ]
        rb.add_row(coefs, -phi, slave_cands)

    # -- assembly ----------------------------------------------------------

    def assemble_raw(self, q: np.ndarray, store_states: list):
        """Unconstrained K_T, F, and fresh per-patch state arrays at q."""
        KT = np.zeros((self.ndof, self.ndof))
        F = np.zeros(self.ndof)
        model_code = _kernels.MODEL_CODES[self.model]
        algo_code = _kernels.ALGO_CODES[self.algorithm]
        states = []
        err = np.empty(1)
        for ip, (t, prev) in enumerate(zip(self.tables, store_states)):
            patch = t.patch
            sec: CrossSection = patch.section
            mat: Material = patch.material
            n2 = 2 * patch.n_cp
            Kp = np.zeros((n2, n2))
            Fp = np.zeros(n2)
            state = np.empty((t.n_qp, 6))
            u = self.patch_disp(q, ip).copy()
            shape_code = 0 if sec.shape == "rectangle" else 1
            b = sec.dims[0]
            h = sec.dims[1] if sec.shape == "rectangle" else sec.dims[0]
            _kernels.assemble_patch(
                u,
                t.first,
                t.R1,
                t.R2,
                t.wq,
                t.a1,
                t.b2,
                t.g_ref,
                t.c_ref,
                prev[:, 0].copy(),
                prev[:, 1].copy(),
                prev[:, 2].copy(),
                prev[:, 4].copy(),
                prev[:, 5].copy(),
                model_code,
                algo_code,
                mat.E,
                sec.A0,
                sec.I0,
                sec.I4,
                sec.h_eff,
                shape_code,
                b,
                h,
                Kp,
                Fp,
                state,
                err,
            )
            if err[0] >= 0.0:
                raise CurvinessError(
                    f"curviness bound violated during assembly: |K|*h = {err[0]:.6g}"
                )
            o = t.offset
            KT[o : o + n2, o : o + n2] += Kp
            F[o : o + n2] += Fp
            states.append(state)
        return KT, F, states

    def assemble(self, q: np.ndarray, store_states: list) -> GlobalSystem:
        KT, F, states = self.assemble_raw(q, store_states)
        Q = self.external_force(q)
        red = self.reduction(q)
        return GlobalSystem(K_T=KT, Q=Q, F=F, reduction=red, states=states)


def apply_constraints(system: GlobalSystem):
    """Reduced (K, Q, F) triple of an assembled system.

    The drift-correction offset of the reduction is an iteration-level
    concern and is not folded in here.
    """
    red = system.reduction
    return (
        red.reduce_matrix(system.K_T),
        red.T.T @ system.Q,
        red.T.T @ system.F,
    )


def assemble(patches, q, store_states, model, loads=(), constraints=(), algorithm="F1") -> GlobalSystem:
    """One-shot assembly of the global tangent system (spec surface).

    Builds an Assembler, which callers running many iterations should hold
    on to instead (tables are precomputed there).
    """
    asm = Assembler(patches, constraints=constraints, loads=loads, model=model, algorithm=algorithm)
    if q is None:
        q = np.zeros(asm.ndof)
    if store_states is None:
        store_states = asm.zero_state()
    return asm.assemble(q, store_states)
