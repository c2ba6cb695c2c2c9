"""Hot assembly kernels, jitted with numba when available.

The per-iteration cost of a continuation run is dominated by the loop
over quadrature points that rebuilds the tangent matrix and internal
force vector.  That loop lives here in plain loop-style numpy code so the
exact same source runs in two modes:

* compiled with ``numba.njit`` (default when numba imports cleanly), or
* interpreted as ordinary numpy/python, selected by the environment flag
  ``IGABEAM_NUMBA=0`` (or forced on with ``IGABEAM_NUMBA=1``).

``benchmarks/bench_kernels.py`` times the two paths against each other.

Everything here works on plain float64 arrays; the object layer that
feeds it lives in :mod:`igabeam.assembly`.  Model and algorithm tags are
integer codes:

    model: 0=D0 1=D1 2=D2 3=D3 4=Da      (MODEL_CODES)
    algorithm: 1=F1 2=F2 3=F3            (total / adjusted / accumulated)
    shape: 0=rectangle(b,h) 1=circle(d)

The curviness guard cannot raise from compiled code, so kernels report
through an error cell: err[0] < 0 means ok, otherwise it holds the
offending K*h.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["USING_NUMBA", "MODEL_CODES", "ALGO_CODES", "assemble_patch", "patch_strain_state"]

_flag = os.environ.get("IGABEAM_NUMBA", "auto").strip().lower()
if _flag in ("0", "false", "off", "no"):
    USING_NUMBA = False
elif _flag in ("1", "true", "on", "yes"):
    import numba  # noqa: F401  (hard requirement when forced on)

    USING_NUMBA = True
else:
    try:
        import numba  # noqa: F401

        USING_NUMBA = True
    except ImportError:  # pragma: no cover
        USING_NUMBA = False


def _maybe_jit(func):
    if USING_NUMBA:
        from numba import njit

        return njit(cache=True)(func)
    return func


MODEL_CODES = {"D0": 0, "D1": 1, "D2": 2, "D3": 3, "Da": 4}
ALGO_CODES = {"F1": 1, "F2": 2, "F3": 3}

_CURVINESS_LIMIT = 0.999


@_maybe_jit
def _exact_I(shape_code, b, h, K):
    """int eta^2/(1-eta K) dA in cancellation-safe closed form."""
    if shape_code == 1:
        r = 0.5 * h
        y = (K * r) ** 2
        root = math.sqrt(1.0 - y)
        return math.pi * r**4 / ((1.0 + root) * (1.0 + root))
    x = K * h / 2.0
    if abs(x) < 0.01:
        x2 = x * x
        s = 0.0
        for m in range(6, -1, -1):
            s = s * x2 + 1.0 / (2 * m + 3)
        return b * h**3 / 4.0 * s
    return (b / K**3) * (math.log((1.0 + x) / (1.0 - x)) - 2.0 * x)


@_maybe_jit
def _d_entries(model_code, E, A0, I0, I4, h_eff, shape_code, b, h, K, g):
    """(d11, d12, d22, bad_kh) of the scaled constitutive matrix.

    bad_kh < 0 signals success; otherwise it carries |K|*h at the
    violated curviness bound.
    """
    if model_code == 4 and abs(K) * h_eff / 2.0 >= _CURVINESS_LIMIT:
        return 0.0, 0.0, 0.0, abs(K) * h_eff
    if model_code == 0:
        A = A0
        Ib = 0.0
        I = I0
    elif model_code == 1:
        A = A0
        Ib = K * I0
        I = I0
    elif model_code == 2:
        A = A0
        Ib = 2.0 * K * I0
        I = I0
    elif model_code == 3:
        A = A0 + 4.0 * K * K * I0
        Ib = 2.0 * K * I0 + 2.0 * K**3 * I4
        I = I0 + K * K * I4
    else:
        I = _exact_I(shape_code, b, h, K)
        A = A0 + 4.0 * K * K * I
        Ib = 2.0 * K * I
    s = E / (g * g)
    return s * A, -s * Ib, s * I, -1.0


@_maybe_jit
def patch_strain_state(u, first, R1, R2, a1, b2, g_ref, c_ref, out):
    """Metric and strain state at every quadrature point of one patch.

    Strains are built from displacement-derivative increments against the
    tabulated reference (a1 = reference tangent, b2 = reference second
    derivative, c_ref = their cross product), which avoids the
    catastrophic cancellation of subtracting nearly equal metrics at
    small load levels.

    u        (ncp, 2) control point displacements
    first    (nq,)    first active control point per quadrature point
    R1, R2   (nq, m)  first/second basis derivative tables
    out      (nq, 4)  filled with eps11, kappa, K, g
    """
    nq, m = R1.shape
    for q in range(nq):
        a = first[q]
        d1x = 0.0
        d1y = 0.0
        d2x = 0.0
        d2y = 0.0
        for i in range(m):
            ux = u[a + i, 0]
            uy = u[a + i, 1]
            d1x += R1[q, i] * ux
            d1y += R1[q, i] * uy
            d2x += R2[q, i] * ux
            d2y += R2[q, i] * uy
        a1x, a1y = a1[q, 0], a1[q, 1]
        b2x, b2y = b2[q, 0], b2[q, 1]
        dg = 2.0 * (a1x * d1x + a1y * d1y) + d1x * d1x + d1y * d1y
        g = g_ref[q] + dg
        sq = math.sqrt(g)
        sq_ref = math.sqrt(g_ref[q])
        dc = (
            a1x * d2y - a1y * d2x
            + d1x * b2y - d1y * b2x
            + d1x * d2y - d1y * d2x
        )
        c = c_ref[q] + dc
        K = c / (g * sq)
        out[q, 0] = 0.5 * dg
        out[q, 1] = dc / sq - c_ref[q] * dg / (sq * sq_ref * (sq + sq_ref))
        out[q, 2] = K
        out[q, 3] = g


@_maybe_jit
def assemble_patch(
    u,
    first,
    R1,
    R2,
    wq,
    a1,
    b2,
    g_ref,
    c_ref,
    eps_p,
    kap_p,
    K_p,
    N_p,
    M_p,
    model_code,
    algo_code,
    E,
    A0,
    I0,
    I4,
    h_eff,
    shape_code,
    b,
    h,
    KT,
    F,
    state,
    err,
):
    """Tangent matrix and internal force vector of one patch.

    Accumulates, over the quadrature points, the material term
    BL^T D BL and the geometric term B^T G B of the tangent, and BL^T f
    for the internal forces, all weighted with the current sqrt(g).
    Section forces f per point follow the requested update algorithm
    from the previous converged state (eps_p, kap_p, K_p, N_p, M_p).
    Strain measures are formed from displacement increments against the
    reference tables (see patch_strain_state) so residuals stay clean at
    arbitrarily small load levels.

    Outputs: KT (2ncp, 2ncp) and F (2ncp,) must come in zeroed;
    state (nq, 6) receives eps11, kappa, K, g, Ntilde, Mtilde; err (1,)
    reports a violated curviness bound (see module docstring).
    """
    nq, m = R1.shape
    err[0] = -1.0
    for q in range(nq):
        a = first[q]
        d1x = 0.0
        d1y = 0.0
        d2x = 0.0
        d2y = 0.0
        for i in range(m):
            ux = u[a + i, 0]
            uy = u[a + i, 1]
            d1x += R1[q, i] * ux
            d1y += R1[q, i] * uy
            d2x += R2[q, i] * ux
            d2y += R2[q, i] * uy
        a1x, a1y = a1[q, 0], a1[q, 1]
        b2x, b2y = b2[q, 0], b2[q, 1]
        g1x = a1x + d1x
        g1y = a1y + d1y
        h2x = b2x + d2x
        h2y = b2y + d2y
        dg = 2.0 * (a1x * d1x + a1y * d1y) + d1x * d1x + d1y * d1y
        g = g_ref[q] + dg
        sq = math.sqrt(g)
        sq_ref = math.sqrt(g_ref[q])
        g2x = -g1y / sq
        g2y = g1x / sq
        gam = (h2x * g1x + h2y * g1y) / g
        dc = (
            a1x * d2y - a1y * d2x
            + d1x * b2y - d1y * b2x
            + d1x * d2y - d1y * d2x
        )
        c = c_ref[q] + dc
        K = c / (g * sq)
        Ktil = c / sq

        eps = 0.5 * dg
        kap = dc / sq - c_ref[q] * dg / (sq * sq_ref * (sq + sq_ref))

        d11, d12, d22, bad = _d_entries(
            model_code, E, A0, I0, I4, h_eff, shape_code, b, h, K, g
        )
        if bad >= 0.0:
            err[0] = bad
            return

        if algo_code == 1:
            Nt = d11 * eps + d12 * kap
            Mt = d12 * eps + d22 * kap
        elif algo_code == 2:
            chi = K - K_p[q]
            de = eps - eps_p[q]
            dk = kap - kap_p[q]
            Nt = N_p[q] - 2.0 * chi * M_p[q] + d11 * de + d12 * dk
            Mt = M_p[q] + d12 * de + d22 * dk
        else:
            de = eps - eps_p[q]
            dk = kap - kap_p[q]
            Nt = N_p[q] + d11 * de + d12 * dk
            Mt = M_p[q] + d12 * de + d22 * dk

        state[q, 0] = eps
        state[q, 1] = kap
        state[q, 2] = K
        state[q, 3] = g
        state[q, 4] = Nt
        state[q, 5] = Mt

        w = wq[q] * sq

        # geometric blocks: Bm[b,a] = g2_b g1_a / g, Btil[b,a] = g1_b g2_a / g,
        # Y[b,a] = gam Bm[b,a] - (Ktil g2_b - gam g1_b) g2_a / g
        gv1 = (g1x, g1y)
        gv2 = (g2x, g2y)
        for i in range(m):
            row = 2 * (a + i)
            r1i = R1[q, i]
            r2i = R2[q, i]
            c2i = r2i - gam * r1i
            bl1xi = r1i * g1x
            bl1yi = r1i * g1y
            bl2xi = c2i * g2x
            bl2yi = c2i * g2y
            F[row] += w * (Nt * bl1xi + Mt * bl2xi)
            F[row + 1] += w * (Nt * bl1yi + Mt * bl2yi)
            for j in range(m):
                col = 2 * (a + j)
                r1j = R1[q, j]
                r2j = R2[q, j]
                c2j = r2j - gam * r1j
                bl1xj = r1j * g1x
                bl1yj = r1j * g1y
                bl2xj = c2j * g2x
                bl2yj = c2j * g2y
                # material part BL^T D BL
                KT[row, col] += w * (
                    bl1xi * (d11 * bl1xj + d12 * bl2xj)
                    + bl2xi * (d12 * bl1xj + d22 * bl2xj)
                )
                KT[row, col + 1] += w * (
                    bl1xi * (d11 * bl1yj + d12 * bl2yj)
                    + bl2xi * (d12 * bl1yj + d22 * bl2yj)
                )
                KT[row + 1, col] += w * (
                    bl1yi * (d11 * bl1xj + d12 * bl2xj)
                    + bl2yi * (d12 * bl1xj + d22 * bl2xj)
                )
                KT[row + 1, col + 1] += w * (
                    bl1yi * (d11 * bl1yj + d12 * bl2yj)
                    + bl2yi * (d12 * bl1yj + d22 * bl2yj)
                )
                # geometric part: for components a_, b_ the block reads
                # R1i R1j (Nt delta + Mt Y[a_,b_])
                #   - Mt (Btil[a_,b_] R2i R1j + Bm[a_,b_] R1i R2j)
                for a_ in range(2):
                    for b_ in range(2):
                        Bm = gv2[a_] * gv1[b_] / g
                        Btil = gv1[a_] * gv2[b_] / g
                        Y = gam * Bm - (Ktil * gv2[a_] - gam * gv1[a_]) * gv2[b_] / g
                        val = r1i * r1j * Mt * Y - Mt * (
                            Btil * r2i * r1j + Bm * r1i * r2j
                        )
                        if a_ == b_:
                            val += r1i * r1j * Nt
                        KT[row + a_, col + b_] += w * val
