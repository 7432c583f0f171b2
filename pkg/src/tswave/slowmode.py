"""Inviscid (Rayleigh) approximate mode and its error terms.

Builds the two critical-layer solutions psi_{0,1} = U_s - c_hat and
psi_{0,2} = (U_s - c_hat) * J(Y) with J(Y) the inverse-square integral from
Y = 1, the wavenumber-corrected pair psi_{alpha,j} = e^{-alpha Y} psi_{0,j},
the corrector Phi_1^s, and the combined slow mode
Phi_app^s = psi_{alpha,1} + alpha Phi_1^s, all with derivatives up to order 3
in closed form for profiles that expose analytic primitives.  A quadrature
evaluation path (`method="quadrature"`) retains the integral definitions and
serves as the independent oracle.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UnsupportedOrder
from .numerics import Ray, Segment, quad_segment
from .params import ModeFunction
from .profile import DEFAULT_PROFILE

__all__ = [
    "inv_square_integral",
    "psi0",
    "corrector_integrals",
    "phi1s",
    "phi_app_s",
    "phi_app_s_mode",
    "boundary_values",
    "rayleigh_apply",
    "rayleigh_residual_form",
    "damped_corrector_combo",
    "slow_errors",
]

_QUAD_TOL = 1e-11


def inv_square_integral(Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """J(Y) = int_1^Y (U_s - c_hat)^{-2} dX.

    "auto" uses the profile's closed-form primitive when available; the
    quadrature route splits at Y = 1: an integration-by-parts representation
    removes the near-singular inverse square on [0, 1] (leaving an integrable
    logarithm), while the integrand is already tame for Y > 1.
    """
    chat = params.c_hat
    if method == "auto" and hasattr(profile, "inv_square_integral"):
        return profile.inv_square_integral(Y, chat)
    scalar = np.isscalar(Y)
    out = np.array([_j_quad(float(y), chat, profile) for y in np.atleast_1d(Y)],
                   dtype=complex)
    return complex(out[0]) if scalar else out


def _j_quad(Y, chat, profile):
    def w(X):
        return profile.eval("U", 0, X) - chat

    if Y == 1.0:
        return 0.0 + 0.0j
    if Y > 1.0:
        return quad_segment(lambda X: 1.0 / w(np.real(X)) ** 2, Segment(1.0, Y),
                            rel_tol=_QUAD_TOL)

    def ratio(X):
        du = profile.eval("U", 1, X)
        d2u = profile.eval("U", 2, X)
        return d2u / du**3

    def dratio(X):
        du = profile.eval("U", 1, X)
        d2u = profile.eval("U", 2, X)
        d3u = profile.eval("U", 3, X)
        return d3u / du**3 - 3.0 * d2u**2 / du**4

    du_y = profile.eval("U", 1, Y)
    du_1 = profile.eval("U", 1, 1.0)
    boundary = (-1.0 / (du_y * w(Y)) + 1.0 / (du_1 * w(1.0))
                - np.log(w(Y)) * ratio(Y) + np.log(w(1.0)) * ratio(1.0))
    rest = quad_segment(lambda X: np.log(w(np.real(X))) * dratio(np.real(X)),
                        Segment(1.0, Y), rel_tol=_QUAD_TOL)
    return boundary + rest


def psi0(j, order, Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """psi_{0,j} and derivatives, j = 1 (regular) or 2 (critical-layer) solution."""
    if order < 0 or order > 3:
        raise UnsupportedOrder(f"psi0 order {order}")
    Y = np.asarray(Y, dtype=float)
    chat = params.c_hat
    if j == 1:
        if order == 0:
            return profile.eval("U", 0, Y) - chat
        return profile.eval("U", order, Y) + 0.0j
    if j != 2:
        raise ValueError("j must be 1 or 2")
    J = inv_square_integral(Y, params, profile, method)
    w = profile.eval("U", 0, Y) - chat
    if order == 0:
        return w * J
    du = profile.eval("U", 1, Y)
    if order == 1:
        return du * J + 1.0 / w
    d2u = profile.eval("U", 2, Y)
    if order == 2:
        return d2u * J
    d3u = profile.eval("U", 3, Y)
    return d3u * J + d2u / w**2


def corrector_integrals(Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """Running integrals (K, L) of the corrector:

    K(Y) = int_0^Y U_s' psi_{0,2},  L(Y) = int_Y^inf U_s' psi_{0,1}.
    """
    chat = params.c_hat
    Yarr = np.atleast_1d(np.asarray(Y, dtype=float))
    if method == "auto" and hasattr(profile, "corrector_integral"):
        K = profile.corrector_integral(Yarr, chat)
        w = profile.eval("U", 0, Yarr) - chat
        b = profile.u_inf - chat
        # b^2 - w^2 written through the wake; the direct difference bottoms
        # out at one ulp once U_s saturates, which exponential weights amplify
        L = profile.wake(Yarr) * (b + w) / 2.0
    else:
        def k_int(y):
            if y == 0.0:
                return 0.0 + 0.0j
            return quad_segment(
                lambda X: profile.eval("U", 1, np.real(X))
                * psi0(2, 0, np.real(X), params, profile, method),
                Segment(0.0, y), rel_tol=_QUAD_TOL)

        def l_int(y):
            return quad_segment(
                lambda X: profile.eval("U", 1, np.real(X))
                * psi0(1, 0, np.real(X), params, profile, method),
                Ray(y, 1.0 + 0.0j), rel_tol=_QUAD_TOL)

        K = np.array([k_int(float(y)) for y in Yarr], dtype=complex)
        L = np.array([l_int(float(y)) for y in Yarr], dtype=complex)
    if np.isscalar(Y):
        return complex(np.atleast_1d(K)[0]), complex(np.atleast_1d(L)[0])
    return K, L


def _shifted_derivative(j, order, Y, params, profile, method):
    """(d/dY - alpha)^order applied to psi_{0,j}."""
    a = params.alpha
    out = 0.0
    for m in range(order + 1):
        out = out + math.comb(order, m) * (-a) ** (order - m) * psi0(
            j, m, Y, params, profile, method)
    return out


def phi1s(order, Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """Corrector Phi_1^s and derivatives up to order 3.

    The derivative formulas keep the two running integrals intact; the
    Wronskian psi_{0,1} psi_{0,2}' - psi_{0,2} psi_{0,1}' = 1 collapses the
    leftover products into the explicit e^{-alpha Y} correction terms.
    """
    if order < 0 or order > 3:
        raise UnsupportedOrder(f"phi1s order {order}")
    Yarr = np.asarray(Y, dtype=float)
    a = params.alpha
    K, L = corrector_integrals(Yarr, params, profile, method)
    ea = np.exp(-a * Yarr)
    p = (-2.0 * _shifted_derivative(1, order, Yarr, params, profile, method) * ea * K
         - 2.0 * _shifted_derivative(2, order, Yarr, params, profile, method) * ea * L)
    if order <= 1:
        return p
    du = profile.eval("U", 1, Yarr)
    if order == 2:
        return p + 2.0 * du * ea
    d2u = profile.eval("U", 2, Yarr)
    return p + (2.0 * d2u - 6.0 * a * du) * ea


def phi_app_s(order, Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """Slow mode psi_{alpha,1} + alpha Phi_1^s and derivatives up to order 3."""
    Yarr = np.asarray(Y, dtype=float)
    ea = np.exp(-params.alpha * Yarr)
    base = ea * _shifted_derivative(1, order, Yarr, params, profile, method)
    return base + params.alpha * phi1s(order, Yarr, params, profile, method)


def phi_app_s_mode(params, profile=DEFAULT_PROFILE, method="auto"):
    return ModeFunction(
        max_order=3,
        evaluator=lambda order, Y: phi_app_s(order, Y, params, profile, method),
        decay_rate=params.alpha,
    )


def boundary_values(params, profile=DEFAULT_PROFILE, method="auto"):
    """(Phi_app^s(0), dY Phi_app^s(0)) from the closed boundary formulas."""
    chat = params.c_hat
    a = params.alpha
    j0 = complex(np.atleast_1d(inv_square_integral(0.0, params, profile, method))[0])
    psi02_0 = -chat * j0
    dpsi02_0 = j0 - 1.0 / chat
    phi0 = -chat - a * psi02_0 * (1.0 - 2.0 * chat)
    dphi0 = 1.0 + a * chat + a * (1.0 - 2.0 * chat) * (a * psi02_0 - dpsi02_0)
    return phi0, dphi0


def rayleigh_apply(f, Y, params, profile=DEFAULT_PROFILE):
    """(U_s - c_hat)(f'' - alpha^2 f) - U_s'' f evaluated pointwise."""
    if f.max_order < 2:
        raise UnsupportedOrder("rayleigh_apply needs two derivatives")
    Yarr = np.asarray(Y, dtype=float)
    w = profile.eval("U", 0, Yarr) - params.c_hat
    d2u = profile.eval("U", 2, Yarr)
    return w * (f.eval(2, Yarr) - params.alpha**2 * f.eval(0, Yarr)) - d2u * f.eval(0, Yarr)


def damped_corrector_combo(Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """dY Phi_1^s + alpha Phi_1^s in its cancelled form
    -2 psi_{0,1}' e^{-alpha Y} K - 2 psi_{0,2}' e^{-alpha Y} L.

    Adding phi1s(1) and alpha*phi1s(0) separately cancels the alpha-shifted
    pieces only to roundoff, and exponentially weighted tail norms amplify
    that noise; this form decays like the shear itself.
    """
    Yarr = np.asarray(Y, dtype=float)
    K, L = corrector_integrals(Yarr, params, profile, method)
    ea = np.exp(-params.alpha * Yarr)
    return (-2.0 * psi0(1, 1, Yarr, params, profile, method) * ea * K
            - 2.0 * psi0(2, 1, Yarr, params, profile, method) * ea * L)


def rayleigh_residual_form(Y, params, profile=DEFAULT_PROFILE, method="auto"):
    """Closed form -2 alpha^2 (U_s - c_hat)(dY Phi_1^s + alpha Phi_1^s)."""
    Yarr = np.asarray(Y, dtype=float)
    w = profile.eval("U", 0, Yarr) - params.c_hat
    return -2.0 * params.alpha**2 * w * damped_corrector_combo(
        Yarr, params, profile, method)


def slow_errors(group, Y, params, psi_app_s, profile=DEFAULT_PROFILE,
                phi_mode=None, method="auto"):
    """Slow-mode error terms: group 1 and 2 are the divergence/tangential
    parts, group 3 carries the strongly decaying remainder.

    ``psi_app_s`` is the magnetic slow mode (order >= 1); ``phi_mode``
    optionally overrides the velocity slow mode (defaults to the closed-form
    evaluation at these parameters).
    """
    if group not in (1, 2, 3):
        raise ValueError("group must be 1, 2 or 3")
    Yarr = np.asarray(Y, dtype=float)
    a = params.alpha
    n = params.n
    se = params.sqrt_eps
    c = params.c
    hs = profile.eval("H", 0, Yarr)

    def phi(order):
        if phi_mode is not None:
            return phi_mode.eval(order, Yarr)
        return phi_app_s(order, Yarr, params, profile, method)

    if group == 1:
        us = profile.eval("U", 0, Yarr)
        return ((1j / n) * (phi(3) - 2.0 * a**2 * phi(1))
                - se * hs * psi_app_s.eval(1, Yarr)
                - (a / n) * ((us - c) * psi_app_s.eval(0, Yarr) - hs * phi(0)))
    if group == 2:
        return ((a**3 / n) * phi(0)
                - 1j * a * se * hs * psi_app_s.eval(0, Yarr)
                - (a / n) * phi(0))
    dhs = profile.eval("H", 1, Yarr)
    d2hs = profile.eval("H", 2, Yarr)
    return (rayleigh_residual_form(Yarr, params, profile, method)
            + se * dhs * psi_app_s.eval(1, Yarr)
            + se * d2hs * psi_app_s.eval(0, Yarr))
