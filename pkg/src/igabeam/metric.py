"""Differential geometry of the beam axis and its equidistant fibers.

Quantities follow the convective-coordinate description of the axis: the
tangent base vector g1 = r', the anticlockwise unit normal g2, the metric
determinant g = g1.g1, the connection coefficient Gamma^1_11 coupling
first and second parametric derivatives, and the signed per-arc-length
curvature K (positive for anticlockwise turning).  Strains are metric
differences between the deformed and reference configurations, so they
vanish identically for rigid-body motion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CurvinessError, GeometryError
from .splines import NurbsPatch, basis_ders, gauss_rule

__all__ = [
    "PointMetric",
    "EquidistantMetric",
    "AxisStrain",
    "metric_at",
    "equidistant_metric",
    "axis_strain",
    "equidistant_strain_profile",
    "rigid_body_check",
]

_DEGENERATE_G = 1e-14


@dataclass(frozen=True)
class PointMetric:
    """Axis metric at one parametric point.

    g1 : tangent base vector (2,)
    g2 : unit normal, g1 rotated anticlockwise and normalized (2,)
    g : metric determinant g1.g1
    gamma111 : Christoffel symbol Gamma^1_11 = (r''.g1)/g
    K : signed curvature per arc length
    """

    g1: np.ndarray
    g2: np.ndarray
    g: float
    gamma111: float
    K: float

    @property
    def Ktilde(self) -> float:
        """Signed curvature with respect to the convective frame, g*K."""
        return self.g * self.K


@dataclass(frozen=True)
class EquidistantMetric:
    """Metric of the fiber at thickness offset eta.

    g0 = 1 - eta*K is the initial curvature correction term relating fiber
    and axis tangent lengths; gbar = g0^2 * g is the fiber metric.
    """

    eta: float
    g0: float
    gbar: float


@dataclass(frozen=True)
class AxisStrain:
    """Total convective strains of the beam axis.

    eps11 : axial strain, half the metric difference
    kappa : curvature change with respect to the convective frame
    chi : curvature change with respect to the Frenet frame (K* - K)
    """

    eps11: float
    kappa: float
    chi: float


def _metric_from_ders(d1: np.ndarray, d2: np.ndarray) -> PointMetric:
    g = float(d1 @ d1)
    if g <= _DEGENERATE_G:
        raise GeometryError(f"degenerate tangent: g = {g}")
    sq = np.sqrt(g)
    g2 = np.array([-d1[1], d1[0]]) / sq
    gamma = float(d2 @ d1) / g
    K = float(d1[0] * d2[1] - d1[1] * d2[0]) / (g * sq)
    return PointMetric(g1=d1, g2=g2, g=g, gamma111=gamma, K=K)


def metric_at(patch: NurbsPatch, disp: np.ndarray | None, xi: float) -> PointMetric:
    """Axis metric of the (possibly displaced) patch at xi.

    ``disp`` holds Cartesian control-point displacements, shape (N, 2);
    None or zeros give the reference metric.
    """
    first, R = basis_ders(patch, xi, 2)
    cps = patch.control_points[first : first + patch.degree + 1]
    if disp is not None:
        cps = cps + np.asarray(disp, dtype=float)[first : first + patch.degree + 1]
    d = R @ cps
    return _metric_from_ders(d[1], d[2])


def equidistant_metric(pm: PointMetric, eta: float) -> EquidistantMetric:
    """Fiber metric at offset eta; fails beyond the curviness bound eta*K -> 1."""
    g0 = 1.0 - eta * pm.K
    if g0 <= 1e-9:
        raise CurvinessError(
            f"equidistant metric singular: eta*K = {eta * pm.K:.6g} (g0 = {g0:.3g})"
        )
    return EquidistantMetric(eta=eta, g0=g0, gbar=g0 * g0 * pm.g)


def axis_strain(ref: PointMetric, cur: PointMetric) -> AxisStrain:
    """Total strain measures between two metrics of the same material point."""
    return AxisStrain(
        eps11=0.5 * (cur.g - ref.g),
        kappa=cur.g * cur.K - ref.g * ref.K,
        chi=cur.K - ref.K,
    )


def equidistant_strain_profile(
    strain: AxisStrain, ref: PointMetric, cur: PointMetric, eta: float
) -> float:
    """Exact Lagrange strain of the fiber at offset eta.

    eps_bar(eta) = ((1 - eta K*)^2 g* - (1 - eta K)^2 g) / 2, i.e. the axis
    strain definition applied at the equidistant line.  Raises when eta is
    inadmissible in either configuration.
    """
    g0_ref = 1.0 - eta * ref.K
    g0_cur = 1.0 - eta * cur.K
    if g0_ref <= 1e-9 or g0_cur <= 1e-9:
        bad = eta * (ref.K if g0_ref <= 1e-9 else cur.K)
        raise CurvinessError(f"fiber offset inadmissible: eta*K = {bad:.6g}")
    return 0.5 * (g0_cur * g0_cur * cur.g - g0_ref * g0_ref * ref.g)


def _rigid_displacement(points: np.ndarray, translation, angle: float, center) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    return (points - center) @ rot.T + center + np.asarray(translation, dtype=float) - points


def rigid_body_check(
    patch: NurbsPatch,
    translation=(0.0, 0.0),
    angle: float = 0.0,
    center=(0.0, 0.0),
) -> float:
    """Largest dimensionless axis strain under a rigid map of the control net.

    Rotates every control point by ``angle`` about ``center`` and then
    translates; returns the maximum over the patch quadrature points of
    |eps11|/g and |kappa|/(|Ktilde| + sqrt(g)).  Exact frame invariance
    makes this roundoff-small.
    """
    disp = _rigid_displacement(patch.control_points, translation, angle, center)
    worst = 0.0
    for xi in gauss_rule(patch).points:
        ref = metric_at(patch, None, xi)
        cur = metric_at(patch, disp, xi)
        st = axis_strain(ref, cur)
        worst = max(
            worst,
            abs(st.eps11) / ref.g,
            abs(st.kappa) / (abs(ref.Ktilde) + np.sqrt(ref.g)),
        )
    return worst
