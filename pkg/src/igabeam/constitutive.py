"""Cross sections, material law, and the five constitutive model variants.

The exact model couples the axial and bending actions of a curved beam
through section integrals weighted by the initial curvature correction
g0 = 1 - eta*K.  All three integrals reduce to the single kernel
J(K) = int dA / (1 - eta*K):

    I    = (J - A0) / K^2          (bending)
    Ibar = 2 K I                   (coupling)
    A    = A0 + 4 K^2 I            (axial)

J has closed forms for rectangles (logarithmic) and circles (algebraic
root); the reduced models replace I by Taylor truncations.  The matrix
relating strain rates (d11, kappa_dot) to section-force rates carries the
factor E/g^2 from the contravariant material law evaluated with the
current metric.

Model tags:

    D0  decoupled thin-beam matrix diag(A0, I0)
    D1  small-curvature coupling, Ibar = K I0
    D2  first Taylor correction,  Ibar = 2 K I0
    D3  higher Taylor correction including the 4th area moment
    Da  analytic (exact) integrals
"""

from __future__ import annotations

from dataclasses import dataclass
from math import atanh, log, pi, sqrt

import numpy as np

from .errors import CurvinessError, ValidationError
from .metric import AxisStrain, PointMetric

__all__ = [
    "MODELS",
    "CrossSection",
    "Material",
    "ConstitutiveMatrix",
    "SectionForces",
    "section_properties",
    "section_kernel_J",
    "exact_bending_integral",
    "model_integrals",
    "constitutive_matrix",
    "section_force_rates",
    "stress_profile",
    "model_coupling_integral",
    "physical_normal_force",
    "pure_bending_axis_strain",
]

MODELS = ("D0", "D1", "D2", "D3", "Da")

# margin below the singular point |K| h/2 = 1 of the exact integrals
_CURVINESS_LIMIT = 0.999


@dataclass(frozen=True)
class Material:
    """Saint Venant-Kirchhoff material: a single Young's modulus."""

    E: float

    def __post_init__(self):
        if not self.E > 0.0:
            raise ValidationError(f"material.E must be positive, got {self.E}")


@dataclass(frozen=True)
class CrossSection:
    """Solid rectangle or circle with precomputed area moments.

    A0 : area
    I0 : second moment of area about the centroid
    I4 : fourth moment int eta^4 dA
    h_eff : thickness extent entering the curviness K*h
    """

    shape: str
    dims: tuple
    A0: float
    I0: float
    I4: float
    h_eff: float

    @staticmethod
    def rectangle(b: float, h: float) -> "CrossSection":
        if b <= 0.0 or h <= 0.0:
            raise ValidationError(f"rectangle dimensions must be positive: b={b}, h={h}")
        return CrossSection(
            shape="rectangle",
            dims=(b, h),
            A0=b * h,
            I0=b * h**3 / 12.0,
            I4=b * h**5 / 80.0,
            h_eff=h,
        )

    @staticmethod
    def circle(d: float) -> "CrossSection":
        if d <= 0.0:
            raise ValidationError(f"circle diameter must be positive: d={d}")
        r = 0.5 * d
        return CrossSection(
            shape="circle",
            dims=(d,),
            A0=pi * r**2,
            I0=pi * r**4 / 4.0,
            I4=pi * r**6 / 8.0,
            h_eff=d,
        )


def section_properties(shape) -> CrossSection:
    """Build a CrossSection from a shape mapping.

    Accepts {"shape": "rectangle", "b": .., "h": ..} or
    {"shape": "circle", "d": ..}.
    """
    if isinstance(shape, CrossSection):
        return shape
    kind = shape.get("shape")
    if kind == "rectangle":
        return CrossSection.rectangle(float(shape["b"]), float(shape["h"]))
    if kind == "circle":
        return CrossSection.circle(float(shape["d"]))
    raise ValidationError(f"unknown section shape {kind!r}")


@dataclass(frozen=True)
class ConstitutiveMatrix:
    """Symmetric 2x2 matrix mapping (d11, kappa_dot) to (N_dot, M_dot)."""

    matrix: np.ndarray
    model: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)


@dataclass(frozen=True)
class SectionForces:
    """Convective stress resultant and stress couple at a section."""

    Ntilde: float
    Mtilde: float


def _check_curviness(K: float, h_eff: float):
    if abs(K) * h_eff / 2.0 >= _CURVINESS_LIMIT:
        raise CurvinessError(
            f"curviness bound violated: |K|*h = {abs(K) * h_eff:.6g} "
            f"(limit {2 * _CURVINESS_LIMIT:.3f})"
        )


def section_kernel_J(section: CrossSection, K: float) -> float:
    """The integral J(K) = int dA / (1 - eta K) over the section."""
    _check_curviness(K, section.h_eff)
    if section.shape == "rectangle":
        b, h = section.dims
        if K == 0.0:
            return b * h
        return (2.0 * b / K) * atanh(K * h / 2.0)
    d, = section.dims
    r = 0.5 * d
    y = (K * r) ** 2
    # 1 - sqrt(1-y) rationalized: J = 2 pi r^2 / (1 + sqrt(1-y))... times factor
    return 2.0 * pi * r * r / (1.0 + sqrt(1.0 - y))


def exact_bending_integral(section: CrossSection, K: float) -> float:
    """I(K) = int eta^2 / (1 - eta K) dA, in cancellation-safe closed form."""
    _check_curviness(K, section.h_eff)
    if section.shape == "circle":
        d, = section.dims
        r = 0.5 * d
        y = (K * r) ** 2
        return pi * r**4 / (1.0 + sqrt(1.0 - y)) ** 2
    b, h = section.dims
    x = K * h / 2.0
    if abs(x) < 0.01:
        # series of (atanh x - x): I = (b h^3/4) sum x^(2m) / (2m+3)
        x2 = x * x
        s = 0.0
        for m in range(6, -1, -1):
            s = s * x2 + 1.0 / (2 * m + 3)
        return b * h**3 / 4.0 * s
    return (b / K**3) * (log((1.0 + x) / (1.0 - x)) - 2.0 * x)


def model_integrals(model: str, section: CrossSection, K: float):
    """(A, Ibar, I) triple of the requested constitutive model at curvature K."""
    A0, I0, I4 = section.A0, section.I0, section.I4
    if model == "D0":
        return A0, 0.0, I0
    if model == "D1":
        return A0, K * I0, I0
    if model == "D2":
        return A0, 2.0 * K * I0, I0
    if model == "D3":
        return A0 + 4.0 * K * K * I0, 2.0 * K * I0 + 2.0 * K**3 * I4, I0 + K * K * I4
    if model == "Da":
        I = exact_bending_integral(section, K)
        return A0 + 4.0 * K * K * I, 2.0 * K * I, I
    raise ValidationError(f"unknown constitutive model {model!r}")


def constitutive_matrix(
    model: str, section: CrossSection, material: Material, K: float, g: float
) -> ConstitutiveMatrix:
    """Tangent section stiffness (E/g^2) [[A, -Ibar], [-Ibar, I]].

    K and g are the signed curvature and metric determinant of the current
    configuration (updated Lagrangian).  For Da the curviness bound
    |K| h/2 < 1 must hold.
    """
    if g <= 0.0:
        raise CurvinessError(f"metric determinant must be positive, got {g}")
    A, Ibar, I = model_integrals(model, section, K)
    s = material.E / (g * g)
    return ConstitutiveMatrix(
        matrix=s * np.array([[A, -Ibar], [-Ibar, I]]), model=model
    )


def section_force_rates(D: ConstitutiveMatrix, e) -> SectionForces:
    """Matrix-vector map from strain rates (d11, kappa_dot) to force rates."""
    f = D.matrix @ np.asarray(e, dtype=float)
    return SectionForces(Ntilde=float(f[0]), Mtilde=float(f[1]))


def _fiber_half_width(section: CrossSection, eta: float) -> float:
    if section.shape == "rectangle":
        return 0.5 * section.dims[0]
    r = 0.5 * section.dims[0]
    return sqrt(max(r * r - eta * eta, 0.0))


def stress_profile(
    ref: PointMetric,
    cur: PointMetric,
    section: CrossSection,
    material: Material,
    etas=None,
    mode: str = "exact",
) -> np.ndarray:
    """Through-thickness stress distribution at a section, shape (n, 2).

    exact mode evaluates the full Lagrange fiber strain
    eps(eta) = ((1 - eta K*)^2 g* - (1 - eta K)^2 g)/2 and converts it to
    the physical stress E eps(eta) / gbar11*(eta) with the current fiber
    metric, which is what makes the intrados/extrados asymmetry of
    strongly curved sections visible.  linear mode zeroes both curvatures
    inside the profile, keeping the axis strains: the classical straight
    distribution sigma = E (eps11 - eta kappa) / g*.
    """
    h = section.h_eff
    if etas is None:
        etas = np.linspace(-h / 2.0, h / 2.0, 41)
    etas = np.asarray(etas, dtype=float)
    g0_cur = 1.0 - etas * cur.K
    g0_ref = 1.0 - etas * ref.K
    if np.any(g0_cur <= 1e-9) or np.any(g0_ref <= 1e-9):
        raise CurvinessError("stress profile crosses the curviness bound")
    E = material.E
    if mode == "exact":
        eps_bar = 0.5 * (g0_cur**2 * cur.g - g0_ref**2 * ref.g)
        sigma = E * eps_bar / (g0_cur**2 * cur.g)
    elif mode == "linear":
        st = AxisStrain(
            eps11=0.5 * (cur.g - ref.g),
            kappa=cur.g * cur.K - ref.g * ref.K,
            chi=cur.K - ref.K,
        )
        sigma = E * (st.eps11 - etas * st.kappa) / cur.g
    else:
        raise ValidationError(f"unknown stress profile mode {mode!r}")
    return np.column_stack([etas, sigma])


def model_coupling_integral(model: str, section: CrossSection, K: float) -> float:
    """Ibar entering the physical normal force, per model.

    D0 and D1 build on g0 -> 1, which removes the flexural contribution to
    the physical normal force entirely; the remaining models keep their
    Taylor (or exact) coupling integral.
    """
    if model in ("D0", "D1"):
        return 0.0
    return model_integrals(model, section, K)[1]


def physical_normal_force(
    section: CrossSection,
    material: Material,
    model: str,
    strain: AxisStrain,
    ref: PointMetric,
    cur: PointMetric,
) -> float:
    """Physical normal force N = E A0 eps(11) - E Ibar chi / 2.

    eps(11) = eps11 / g is the physical axial strain of the axis and chi
    the Frenet curvature change; Ibar follows the active model (see
    model_coupling_integral).  Vanishes in pure bending for the exact
    model.
    """
    eps_phys = strain.eps11 / ref.g
    Ibar = model_coupling_integral(model, section, cur.K)
    return material.E * (section.A0 * eps_phys - 0.5 * Ibar * strain.chi)


def pure_bending_axis_strain(
    section: CrossSection, n: float, L: float, lpf: float, model: str = "Da"
) -> float:
    """Axis strain of the moment-loaded cantilever, eps(11) = Ibar(chi) chi / (2 A0).

    chi = lpf * 2 pi n / L is the curvature reached when the tip moment
    2 pi n E I0 lpf / L rolls the beam up; the N = 0 condition then fixes
    the centroid strain.  Serves as the independent oracle for the
    stress-update comparison.
    """
    if n <= 0 or L <= 0:
        raise ValidationError("pure bending oracle needs positive n and L")
    chi = lpf * 2.0 * pi * n / L
    if lpf == 0.0:
        return 0.0
    _check_curviness(chi, section.h_eff)
    A, Ibar, I = model_integrals(model, section, chi)
    return Ibar * chi / (2.0 * section.A0)
