"""NURBS curve machinery: basis evaluation, refinement, quadrature.

Clamped (open) univariate NURBS curves in the plane carry both the beam
geometry and the displacement field.  Evaluation follows the standard
Cox-de Boor recursion with the rational quotient rule applied through
third derivatives; refinement (knot insertion, degree elevation) operates
on homogeneous control points and never alters the traced point set.

All objects are immutable after construction; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from .errors import DomainError, GeometryError, RefinementError

__all__ = [
    "KnotVector",
    "NurbsPatch",
    "QuadratureRule",
    "find_span",
    "bspline_ders",
    "basis_ders",
    "curve_point",
    "curve_ders",
    "insert_knot",
    "elevate_degree",
    "elevate_to",
    "refine_uniform",
    "gauss_rule",
    "GAUSS_LEGENDRE",
]

_KNOT_TOL = 1e-12

# Gauss-Legendre abscissae/weights on [-1, 1], hard-coded to 64-bit accuracy
# for 1..8 points (covers degree p <= 7 with the p+1 rule).
GAUSS_LEGENDRE = {
    1: (np.array([0.0]), np.array([2.0])),
    2: (
        np.array([-0.5773502691896257645, 0.5773502691896257645]),
        np.array([1.0, 1.0]),
    ),
    3: (
        np.array([-0.7745966692414833770, 0.0, 0.7745966692414833770]),
        np.array(
            [0.5555555555555555556, 0.8888888888888888889, 0.5555555555555555556]
        ),
    ),
    4: (
        np.array(
            [
                -0.8611363115940525752,
                -0.3399810435848562648,
                0.3399810435848562648,
                0.8611363115940525752,
            ]
        ),
        np.array(
            [
                0.3478548451374538574,
                0.6521451548625461426,
                0.6521451548625461426,
                0.3478548451374538574,
            ]
        ),
    ),
    5: (
        np.array(
            [
                -0.9061798459386639928,
                -0.5384693101056830910,
                0.0,
                0.5384693101056830910,
                0.9061798459386639928,
            ]
        ),
        np.array(
            [
                0.2369268850561890875,
                0.4786286704993664680,
                0.5688888888888888889,
                0.4786286704993664680,
                0.2369268850561890875,
            ]
        ),
    ),
    6: (
        np.array(
            [
                -0.9324695142031520278,
                -0.6612093864662645137,
                -0.2386191860831969086,
                0.2386191860831969086,
                0.6612093864662645137,
                0.9324695142031520278,
            ]
        ),
        np.array(
            [
                0.1713244923791703450,
                0.3607615730481386076,
                0.4679139345726910474,
                0.4679139345726910474,
                0.3607615730481386076,
                0.1713244923791703450,
            ]
        ),
    ),
    7: (
        np.array(
            [
                -0.9491079123427585245,
                -0.7415311855993944399,
                -0.4058451513773971669,
                0.0,
                0.4058451513773971669,
                0.7415311855993944399,
                0.9491079123427585245,
            ]
        ),
        np.array(
            [
                0.1294849661688696933,
                0.2797053914892766679,
                0.3818300505051189450,
                0.4179591836734693878,
                0.3818300505051189450,
                0.2797053914892766679,
                0.1294849661688696933,
            ]
        ),
    ),
    8: (
        np.array(
            [
                -0.9602898564975362317,
                -0.7966664774136267396,
                -0.5255324099163289858,
                -0.1834346424956498049,
                0.1834346424956498049,
                0.5255324099163289858,
                0.7966664774136267396,
                0.9602898564975362317,
            ]
        ),
        np.array(
            [
                0.1012285362903762592,
                0.2223810344533744705,
                0.3137066458778872873,
                0.3626837833783619830,
                0.3626837833783619830,
                0.3137066458778872873,
                0.2223810344533744705,
                0.1012285362903762592,
            ]
        ),
    ),
}


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot sequence of a degree-p spline space.

    The first and last knots must repeat exactly p+1 times (open form);
    interior knots may repeat up to p times.  Unclamped sequences are
    rejected at construction.
    """

    values: np.ndarray
    degree: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)
        p = self.degree
        if p < 1:
            raise RefinementError(f"degree must be >= 1, got {p}")
        if len(vals) < 2 * (p + 1):
            raise RefinementError("knot vector too short for its degree")
        if np.any(np.diff(vals) < 0.0):
            raise RefinementError("knot values must be nondecreasing")
        span = vals[-1] - vals[0]
        tol = _KNOT_TOL * max(span, 1.0)
        if np.any(np.abs(vals[: p + 1] - vals[0]) > tol) or np.any(
            np.abs(vals[-(p + 1) :] - vals[-1]) > tol
        ):
            raise RefinementError("knot vector is not clamped (open)")
        for xi, mult in zip(*self.interior_multiplicities()):
            if mult > p:
                raise RefinementError(
                    f"interior knot {xi} has multiplicity {mult} > degree {p}"
                )

    @property
    def n_basis(self) -> int:
        return len(self.values) - self.degree - 1

    @property
    def start(self) -> float:
        return float(self.values[0])

    @property
    def end(self) -> float:
        return float(self.values[-1])

    def interior_multiplicities(self):
        """Distinct interior knots and their multiplicities."""
        p = self.degree
        interior = self.values[p + 1 : -(p + 1)]
        if len(interior) == 0:
            return np.array([]), np.array([], dtype=int)
        uniq, counts = np.unique(interior, return_counts=True)
        return uniq, counts

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values (element boundaries)."""
        return np.unique(self.values)

    def spans(self):
        """Indices i of the nonempty spans [values[i], values[i+1])."""
        vals = self.values
        return [i for i in range(len(vals) - 1) if vals[i + 1] > vals[i]]


@dataclass(frozen=True)
class NurbsPatch:
    """A planar NURBS curve with its section and material attributes.

    control_points has shape (N, 2) with N = len(knots) - degree - 1; the
    weights are strictly positive.  ``section`` and ``material`` are opaque
    here (see :mod:`igabeam.constitutive`) and may be None for bare
    geometry.
    """

    knots: KnotVector
    control_points: np.ndarray
    weights: np.ndarray
    section: object = None
    material: object = None

    def __post_init__(self):
        cps = np.atleast_2d(np.asarray(self.control_points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "control_points", cps)
        object.__setattr__(self, "weights", w)
        cps.setflags(write=False)
        w.setflags(write=False)
        if cps.ndim != 2 or cps.shape[1] != 2:
            raise GeometryError("control points must have shape (N, 2)")
        n = self.knots.n_basis
        if cps.shape[0] != n:
            raise GeometryError(
                f"control point count {cps.shape[0]} does not match "
                f"knot vector (expected {n})"
            )
        if w.shape != (n,):
            raise GeometryError("weights must match control point count")
        if np.any(w <= 0.0):
            raise GeometryError("weights must be strictly positive")

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def n_cp(self) -> int:
        return self.control_points.shape[0]

    def homogeneous(self) -> np.ndarray:
        """Control points in homogeneous form (w*x, w*y, w), shape (N, 3)."""
        hw = np.empty((self.n_cp, 3))
        hw[:, :2] = self.control_points * self.weights[:, None]
        hw[:, 2] = self.weights
        return hw

    @staticmethod
    def from_homogeneous(knots: KnotVector, hw: np.ndarray, section=None, material=None):
        w = hw[:, 2].copy()
        return NurbsPatch(knots, hw[:, :2] / w[:, None], w, section, material)


@dataclass(frozen=True)
class QuadratureRule:
    """Per-span Gauss points mapped into the parametric domain."""

    spans: tuple  # tuple of (points, weights) arrays, one entry per span
    points: np.ndarray = field(init=False)  # all abscissae, flattened
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.concatenate([s[0] for s in self.spans])
        wts = np.concatenate([s[1] for s in self.spans])
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)


def find_span(knots: KnotVector, xi: float) -> int:
    """Index i with knots[i] <= xi < knots[i+1]; the final span is closed.

    Raises DomainError when xi lies outside the knot range.
    """
    vals = knots.values
    p = knots.degree
    n = knots.n_basis
    tol = _KNOT_TOL * max(vals[-1] - vals[0], 1.0)
    if xi < vals[0] - tol or xi > vals[-1] + tol:
        raise DomainError(f"parameter {xi} outside knot range [{vals[0]}, {vals[-1]}]")
    if xi >= vals[n]:
        # right-closed convention at the end of the curve
        span = n - 1
        while vals[span + 1] <= vals[span]:
            span -= 1
        return span
    lo, hi = p, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xi < vals[mid]:
            hi = mid
        else:
            lo = mid
    return lo


def bspline_ders(knots: KnotVector, xi: float, n_ders: int, span: int | None = None):
    """Nonzero B-spline basis values and derivatives at xi.

    Returns (span, ders) where ders[k, j] is the k-th derivative of basis
    function span-p+j, for k = 0..n_ders.  Derivatives above the degree
    are identically zero.
    """
    p = knots.degree
    vals = knots.values
    if span is None:
        span = find_span(knots, xi)
    nd = min(n_ders, p)

    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xi - vals[span + 1 - j]
        right[j] = vals[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n_ders + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    r = p
    for k in range(1, nd + 1):
        ders[k, :] *= r
        r *= p - k
    return span, ders


def basis_ders(patch: NurbsPatch, xi: float, n_ders: int = 2):
    """Rational basis values/derivatives R_I, R_I', ... for the p+1 active functions.

    The quotient rule is applied through order n_ders (<= 3 supported; the
    formulation itself uses 2).  Returns (first_index, R) where R has shape
    (n_ders+1, p+1) and first_index is the global index of the first active
    control point.

    The values row sums to one and every derivative row sums to zero
    (partition of unity).
    """
    if n_ders > 3:
        raise DomainError("rational derivatives supported only up to order 3")
    span, nders = bspline_ders(patch.knots, xi, n_ders)
    p = patch.degree
    first = span - p
    w = patch.weights[first : first + p + 1]

    # W^(k) = sum_J w_J N_J^(k); R^(k) from the Leibniz-expanded quotient rule
    wders = nders @ w  # (n_ders+1,)
    R = np.empty_like(nders)
    R[0] = w * nders[0] / wders[0]
    for k in range(1, n_ders + 1):
        acc = w * nders[k]
        for j in range(1, k + 1):
            acc = acc - comb(k, j) * wders[j] * R[k - j]
        R[k] = acc / wders[0]
    return first, R


def curve_ders(patch: NurbsPatch, xi: float, n_ders: int = 2) -> np.ndarray:
    """Curve point and parametric derivatives, shape (n_ders+1, 2)."""
    first, R = basis_ders(patch, xi, n_ders)
    cps = patch.control_points[first : first + patch.degree + 1]
    return R @ cps


def curve_point(patch: NurbsPatch, xi: float) -> np.ndarray:
    return curve_ders(patch, xi, 0)[0]


def insert_knot(patch: NurbsPatch, xi: float, times: int = 1) -> NurbsPatch:
    """Insert xi into the knot vector (Boehm), leaving the geometry unchanged.

    xi must lie strictly inside the knot range and the resulting interior
    multiplicity must not exceed the degree.
    """
    kv = patch.knots
    p = patch.degree
    vals = kv.values
    if not (vals[0] < xi < vals[-1]):
        raise RefinementError(f"knot {xi} must be strictly inside ({vals[0]}, {vals[-1]})")
    current = int(np.sum(np.abs(vals - xi) <= _KNOT_TOL * max(vals[-1] - vals[0], 1.0)))
    if current + times > p:
        raise RefinementError(
            f"inserting {xi} x{times} would raise interior multiplicity to "
            f"{current + times} > degree {p}"
        )
    hw = patch.homogeneous()
    for _ in range(times):
        span = find_span(kv, xi)
        old = kv.values
        new_hw = np.empty((hw.shape[0] + 1, 3))
        new_hw[: span - p + 1] = hw[: span - p + 1]
        new_hw[span + 1 :] = hw[span:]
        for i in range(span - p + 1, span + 1):
            alpha = (xi - old[i]) / (old[i + p] - old[i])
            new_hw[i] = alpha * hw[i] + (1.0 - alpha) * hw[i - 1]
        kv = KnotVector(np.insert(old, span + 1, xi), p)
        hw = new_hw
    return NurbsPatch.from_homogeneous(kv, hw, patch.section, patch.material)


def _greville(kv: KnotVector) -> np.ndarray:
    p = kv.degree
    vals = kv.values
    return np.array([vals[i + 1 : i + p + 1].mean() for i in range(kv.n_basis)])


def elevate_degree(patch: NurbsPatch) -> NurbsPatch:
    """Raise the degree by one, preserving the traced curve exactly.

    The elevated space contains the original curve, so the new homogeneous
    control points are recovered by collocation at the Greville abscissae
    of the elevated space (banded, totally positive system).
    """
    kv = patch.knots
    p = kv.degree
    uniq = kv.breakpoints()
    mults = []
    for u in uniq:
        m = int(np.sum(np.abs(kv.values - u) <= _KNOT_TOL * max(kv.end - kv.start, 1.0)))
        mults.append(m + 1)
    new_vals = np.repeat(uniq, mults)
    new_kv = KnotVector(new_vals, p + 1)

    grev = _greville(new_kv)
    n = new_kv.n_basis
    A = np.zeros((n, n))
    rhs = np.empty((n, 3))
    hw = patch.homogeneous()
    for row, t in enumerate(grev):
        span, ders = bspline_ders(new_kv, t, 0)
        A[row, span - (p + 1) : span + 1] = ders[0]
        span_o, ders_o = bspline_ders(kv, t, 0)
        rhs[row] = ders_o[0] @ hw[span_o - p : span_o + 1]
    new_hw = np.linalg.solve(A, rhs)
    return NurbsPatch.from_homogeneous(new_kv, new_hw, patch.section, patch.material)


def elevate_to(patch: NurbsPatch, degree: int) -> NurbsPatch:
    """Elevate repeatedly until the patch reaches ``degree``."""
    if degree < patch.degree:
        raise RefinementError(f"cannot lower degree {patch.degree} to {degree}")
    while patch.degree < degree:
        patch = elevate_degree(patch)
    return patch


def refine_uniform(patch: NurbsPatch, n_elements: int, multiplicity: int = 1) -> NurbsPatch:
    """Split the parametric domain into n_elements equal spans.

    Interior knots are inserted with the given multiplicity, so the result
    is C^(p-multiplicity) across element boundaries.  Existing interior
    knots must align with the uniform grid.
    """
    if n_elements < 1:
        raise RefinementError("n_elements must be >= 1")
    kv = patch.knots
    start, end = kv.start, kv.end
    for i in range(1, n_elements):
        xi = start + (end - start) * i / n_elements
        current = int(
            np.sum(np.abs(patch.knots.values - xi) <= _KNOT_TOL * max(end - start, 1.0))
        )
        add = multiplicity - current
        if add > 0:
            patch = insert_knot(patch, xi, add)
    return patch


def gauss_rule(patch: NurbsPatch, n_points: int | None = None) -> QuadratureRule:
    """Per-span Gauss-Legendre rule with p+1 points (the standard IGA choice)."""
    p = patch.degree
    n = (p + 1) if n_points is None else n_points
    if n not in GAUSS_LEGENDRE:
        raise DomainError(f"no tabulated Gauss rule with {n} points (1..8 available)")
    nodes, wts = GAUSS_LEGENDRE[n]
    vals = patch.knots.values
    spans = []
    for i in patch.knots.spans():
        a, b = vals[i], vals[i + 1]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        spans.append((mid + half * nodes, half * wts))
    return QuadratureRule(tuple(spans))


def end_chord(patch: NurbsPatch, end: str, disp: np.ndarray | None = None) -> np.ndarray:
    """Vector from the penultimate to the last control point at a patch end.

    The end tangent of a clamped NURBS curve is parallel to this chord; it
    carries boundary rotations.  ``disp`` (N, 2) adds control displacements.
    """
    cps = patch.control_points if disp is None else patch.control_points + disp
    if end == "end":
        chord = cps[-1] - cps[-2]
    elif end == "start":
        chord = cps[0] - cps[1]
    else:
        raise DomainError(f"end must be 'start' or 'end', got {end!r}")
    if np.hypot(*chord) < 1e-14:
        raise GeometryError(f"coincident control points at patch {end}")
    return chord


def end_angle(patch: NurbsPatch, end: str, disp: np.ndarray | None = None) -> float:
    """Orientation angle of the end chord, in radians."""
    c = end_chord(patch, end, disp)
    return float(np.arctan2(c[1], c[0]))


def line_patch(p0, p1, degree: int = 1) -> NurbsPatch:
    """Straight two-point patch, optionally elevated."""
    patch = NurbsPatch(
        KnotVector(np.array([0.0, 0.0, 1.0, 1.0]), 1),
        np.array([p0, p1], dtype=float),
        np.ones(2),
    )
    return elevate_to(patch, degree)


def with_attributes(patch: NurbsPatch, section=None, material=None) -> NurbsPatch:
    """Copy of the patch with section/material attached."""
    return replace(patch, section=section, material=material)
