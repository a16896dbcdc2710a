r"""
Error-bound constants and the Riccati coefficients of the error envelope.

For an exact state :math:`u` and an error :math:`e = u - u_h`, the energy
error equation reads

.. math::

    \tfrac12 \tfrac{d}{dt}\|e\|_H^2 = -\alpha_1 \mathrm{I} + \alpha_1 \mathrm{II}
        - \alpha_2 \mathrm{III} + \mathrm{IV},

with

* :math:`\mathrm{I} = e^T Q A(u) e`, bounded by :math:`c_F \|e\|_2^2`,
* :math:`\mathrm{II} = e^T Q R_1(e)`, bounded by :math:`c_R \|e\|_2^3`,
* :math:`\mathrm{III} = e^T A(u) Q u - e^T A(u_h) Q u_h`, bounded by
  :math:`c_S \|e\|_2^2 + 2 c_R \|e\|_2^3`,
* :math:`\mathrm{IV} = e^T H \tau`, bounded by :math:`\|\tau\|_H \|e\|_H`.

Here :math:`\|e\|_2^2 = \sum_k \|e_k\|_2^2` sums element restrictions, so a
node shared by two elements is counted twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from csbp.discretization import (
    _check_state,
    apply_jacobian,
    h_norm,
    split_rhs,
    truncation_error,
)
from csbp.fluxes import FluxModel
from csbp.sbp import GlobalOperator, two_norm


# {{{ flux Jacobian differences


def element_jacobians(gop: GlobalOperator, model: FluxModel, u) -> np.ndarray:
    """Jacobians blocked by element, shape ``(n_e, n_p, n_c, n_c)``."""
    u = _check_state(gop, model, u)
    return model.jacobian(u)[gop.element_to_global]


def _blocked_jacobians(model: FluxModel, u_blocked) -> np.ndarray:
    u_blocked = np.asarray(u_blocked, dtype=np.float64)
    if u_blocked.ndim == 2:
        u_blocked = u_blocked[..., None]
    n_e, n_p, n_c = u_blocked.shape
    A = model.jacobian(u_blocked.reshape(-1, n_c))
    return A.reshape(n_e, n_p, n_c, n_c)


def jacobian_difference_sup(Ak: np.ndarray) -> float:
    r""":math:`\max_k \max_{i,j} |A(u_j) - A(u_i)|` taken entrywise.

    *Ak* holds element-blocked Jacobians of shape ``(n_e, n_p, n_c, n_c)``.
    """
    diff = Ak[:, None, :] - Ak[:, :, None]
    return float(np.max(np.abs(diff)))


def jacobian_difference_row_sum(Ak: np.ndarray) -> float:
    """Largest induced infinity norm (max absolute row sum) of the block matrices ``A*_k``."""
    diff = np.abs(Ak[:, None, :] - Ak[:, :, None])
    # diff[k, i, j, r, s]; row (i, r) sums over (j, s)
    return float(np.max(np.sum(diff, axis=(2, 4))))


def flux_jacobian_difference_sup(model: FluxModel, u, gop: GlobalOperator | None = None) -> float:
    """Entrywise supremum of the flux Jacobian difference over element node pairs.

    *u* is either a global state (with *gop* given) or an element-blocked
    array of shape ``(n_e, n_p)`` / ``(n_e, n_p, n_c)``.
    """
    if gop is None:
        return jacobian_difference_sup(_blocked_jacobians(model, u))
    return jacobian_difference_sup(element_jacobians(gop, model, u))


# }}}


# {{{ bound constants


def element_sum_norm2(gop: GlobalOperator, v) -> float:
    r""":math:`\sum_k \|v_k\|_2^2` over element restrictions."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    return float(np.sum(v[gop.element_to_global] ** 2))


@dataclass(frozen=True)
class BoundSample:
    """Bound ingredients at a single time."""

    t: float
    a_star: float
    a_star_norm: float
    u_x_inf: float
    tau_u_inf: float
    tau_inf: float
    tau_H: float
    c_F: float
    c_S: float


@dataclass(frozen=True)
class BoundConstants:
    r"""Bound constants with the ingredients they were built from.

    Time-dependent quantities are suprema over :attr:`samples`.

    .. attribute:: a_star

        Entrywise :math:`|A^*|_\infty`.

    .. attribute:: a_star_norm

        The Jacobian-difference factor entering :math:`c_F`: equal to
        :attr:`a_star` for scalar laws, and the induced infinity norm of the
        block difference matrix for systems.
    """

    c_F: float
    c_R: float
    c_S: float
    h: float
    n_e: int
    p: int
    n_p: int
    n_c: int
    c_r: float
    q_star: float
    q_hat_star: float
    w_min: float
    w_max: float
    domain_length: float
    alpha1: float
    alpha2: float
    a_star: float
    a_star_norm: float
    u_x_inf: float
    tau_u_inf: float
    tau_inf: float
    samples: tuple[BoundSample, ...] = field(repr=False, default=())

    @property
    def b_mesh(self) -> float:
        r""":math:`\sup_t w_{\min}^{-1} (\alpha_1 c_F(t) + \alpha_2 c_S(t))` on this mesh."""
        return max(
            (self.alpha1 * s.c_F + self.alpha2 * s.c_S) / self.w_min for s in self.samples
        )


def _c_F(n_p, n_c, a_star_norm, q_hat_star):
    if n_c == 1:
        return 0.5 * n_p**1.5 * a_star_norm * q_hat_star
    return 0.5 * math.sqrt(n_p * n_c) * a_star_norm * q_hat_star


def _c_S(c_F, c_r, w_min, w_max, n_p, n_c, u_x_inf, tau_u_inf):
    geom = w_max**1.5 / math.sqrt(w_min)
    return c_F + c_r * geom * math.sqrt(n_p * n_c) * (u_x_inf + tau_u_inf)


def _operator_norms(gop: GlobalOperator, n_c: int) -> tuple[float, float]:
    q_star = gop.q_star
    if n_c == 1:
        return q_star, q_star
    ones = np.ones((n_c, n_c))
    q_hat = max(two_norm(np.kron(Qk, ones)) for Qk in np.unique(gop.element_Q, axis=0))
    return q_star, q_hat


def sample_bounds(gop: GlobalOperator, model: FluxModel, exact, t: float) -> BoundSample:
    x = gop.x
    u = _check_state(gop, model, exact.value(x, t))
    Ak = element_jacobians(gop, model, u)
    a_star = jacobian_difference_sup(Ak)
    a_star_norm = a_star if model.n_c == 1 else jacobian_difference_row_sum(Ak)

    te = truncation_error(gop, model, exact, t)
    u_x_inf = float(np.max(np.abs(exact.gradient(x, t))))

    _, q_hat = _operator_norms(gop, model.n_c)
    n_p = gop.ref.n_p
    c_F = _c_F(n_p, model.n_c, a_star_norm, q_hat)
    c_S = _c_S(c_F, model.c_r, gop.w_min, gop.w_max, n_p, model.n_c, u_x_inf, te.tau_u_inf)
    return BoundSample(
        t=float(t), a_star=a_star, a_star_norm=a_star_norm,
        u_x_inf=u_x_inf, tau_u_inf=te.tau_u_inf,
        tau_inf=te.norm_inf, tau_H=te.norm_H,
        c_F=c_F, c_S=c_S,
    )


def default_time_samples(T: float, n: int = 21) -> np.ndarray:
    return np.linspace(0.0, T, n)


def bound_constants(gop: GlobalOperator, model: FluxModel, exact, t_samples) -> BoundConstants:
    t_samples = np.atleast_1d(np.asarray(t_samples, dtype=np.float64))
    if t_samples.size == 0:
        raise ValueError("at least one time sample is required")

    samples = tuple(sample_bounds(gop, model, exact, t) for t in t_samples)
    q_star, q_hat = _operator_norms(gop, model.n_c)

    return BoundConstants(
        c_F=max(s.c_F for s in samples),
        c_R=0.5 * model.c_r * q_star,
        c_S=max(s.c_S for s in samples),
        h=gop.mesh.h, n_e=gop.mesh.n_e, p=gop.ref.p,
        n_p=gop.ref.n_p, n_c=model.n_c, c_r=model.c_r,
        q_star=q_star, q_hat_star=q_hat,
        w_min=gop.w_min, w_max=gop.w_max,
        domain_length=gop.domain_length,
        alpha1=model.alpha1, alpha2=model.alpha2,
        a_star=max(s.a_star for s in samples),
        a_star_norm=max(s.a_star_norm for s in samples),
        u_x_inf=max(s.u_x_inf for s in samples),
        tau_u_inf=max(s.tau_u_inf for s in samples),
        tau_inf=max(s.tau_inf for s in samples),
        samples=samples,
    )


# }}}


# {{{ Riccati coefficients


@dataclass(frozen=True)
class RiccatiCoefficients:
    """Coefficients of ``y' = a y^2 + b y + c`` for one mesh.

    .. attribute:: b

        Supremum over the whole mesh family (shared by every mesh).

    .. attribute:: b_mesh

        The same supremum restricted to this mesh alone.
    """

    a: float
    b: float
    c: float
    h: float
    n_e: int
    d: int = 1
    b_mesh: float = 0.0
    sample_times: tuple[float, ...] = ()

    @property
    def delta(self) -> float:
        return self.b**2 - 4.0 * self.a * self.c

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


def riccati_coefficients(constants, c_r: float | None = None) -> list[RiccatiCoefficients]:
    """Riccati coefficients for every mesh of a family of :class:`BoundConstants`.

    *c_r* overrides the flux Hessian bound (e.g. ``0`` for a linear flux).
    """
    constants = list(constants)
    if not constants:
        raise ValueError("at least one mesh level is required")

    rows = []
    for bc in constants:
        cr = bc.c_r if c_r is None else c_r
        c_R = 0.5 * cr * bc.q_star
        a = (bc.alpha1 + 2.0 * bc.alpha2) * c_R * bc.w_min**-1.5
        c = math.sqrt(bc.domain_length) * bc.tau_inf
        if c_r is None:
            b_mesh = bc.b_mesh
        else:
            b_mesh = max(
                (bc.alpha1 * s.c_F
                 + bc.alpha2 * _c_S(s.c_F, cr, bc.w_min, bc.w_max, bc.n_p, bc.n_c,
                                    s.u_x_inf, s.tau_u_inf)) / bc.w_min
                for s in bc.samples
            )
        rows.append((bc, a, b_mesh, c))

    b = max(r[2] for r in rows)
    return [
        RiccatiCoefficients(
            a=a, b=b, c=c, h=bc.h, n_e=bc.n_e, b_mesh=b_mesh,
            sample_times=tuple(s.t for s in bc.samples),
        )
        for bc, a, b_mesh, c in rows
    ]


# }}}


# {{{ term inequalities


@dataclass(frozen=True)
class TermCheck:
    lhs: float
    rhs: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1.0e-12)


@dataclass(frozen=True)
class TermReport:
    terms: dict
    hadamard_lhs: float
    hadamard_rhs: float
    energy_rate: float
    energy_rate_terms: float

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.terms.values())

    @property
    def hadamard_residual(self) -> float:
        scale = max(abs(self.hadamard_lhs), abs(self.hadamard_rhs), 1.0e-300)
        return abs(self.hadamard_lhs - self.hadamard_rhs) / scale


def hadamard_form(gop: GlobalOperator, model: FluxModel, u, e, dtype=np.float64) -> float:
    r""":math:`\tfrac12 \sum_k e_k^T (\hat{Q}_k \circ A^*_k) e_k`.

    *dtype* selects the accumulation precision.
    """
    e = _check_state(gop, model, e).astype(dtype)
    Ak = element_jacobians(gop, model, u).astype(dtype)
    ek = e[gop.element_to_global]
    # block (i, j) of the Hadamard product is Q_ij (A_j - A_i)
    diff = Ak[:, None, :] - Ak[:, :, None]
    val = np.einsum("kij,kir,kijrs,kjs->", gop.element_Q.astype(dtype), ek, diff, ek)
    return float(0.5 * val)


def quadratic_flux_form(gop: GlobalOperator, model: FluxModel, u, e, dtype=np.float64) -> float:
    r""":math:`e^T \bar{Q} \bar{A}(u) e` accumulated in *dtype*."""
    e = _check_state(gop, model, e).astype(dtype)
    A = model.jacobian(_check_state(gop, model, u)).astype(dtype)
    Ae = np.einsum("nij,nj->ni", A, e)
    return float(np.sum(e * (gop.Q.astype(dtype) @ Ae)))


def term_inequality_report(
    gop: GlobalOperator, model: FluxModel, exact, t: float, e
) -> TermReport:
    """Evaluate the four energy-error terms against their bounds for one error vector."""
    x = gop.x
    u = _check_state(gop, model, exact.value(x, t))
    e = _check_state(gop, model, e)
    u_h = u - e

    sample = sample_bounds(gop, model, exact, t)
    c_R = 0.5 * model.c_r * gop.q_star
    e2 = element_sum_norm2(gop, e)
    e2n = math.sqrt(e2)

    A_u = model.jacobian(u)
    A_uh = model.jacobian(u_h)
    R1 = model.flux(u_h) - model.flux(u) + apply_jacobian(A_u, e)
    te = truncation_error(gop, model, exact, t)

    term1 = float(np.sum(e * gop.apply_Q(apply_jacobian(A_u, e))))
    term2 = float(np.sum(e * gop.apply_Q(R1)))
    term3 = float(
        np.sum(e * apply_jacobian(A_u, gop.apply_Q(u)))
        - np.sum(e * apply_jacobian(A_uh, gop.apply_Q(u_h)))
    )
    term4 = float(np.sum(e * gop.H[:, None] * te.tau))

    terms = {
        "I": TermCheck(abs(term1), sample.c_F * e2),
        "II": TermCheck(abs(term2), c_R * e2n**3),
        "III": TermCheck(abs(term3), sample.c_S * e2 + 2.0 * c_R * e2n**3),
        "IV": TermCheck(abs(term4), te.norm_H * h_norm(gop, e)),
    }

    # e^T H de/dt with de/dt = u_t - rhs(u_h), against the term decomposition
    u_x = _check_state(gop, model, exact.gradient(x, t))
    de_dt = -apply_jacobian(A_u, u_x) - split_rhs(gop, model, u_h)
    energy_rate = float(np.sum(e * gop.H[:, None] * de_dt))
    energy_rate_terms = (
        -model.alpha1 * term1 + model.alpha1 * term2 - model.alpha2 * term3 + term4
    )

    # both sides are small differences of much larger products, so the
    # identity is evaluated in extended precision
    return TermReport(
        terms=terms,
        hadamard_lhs=quadratic_flux_form(gop, model, u, e, dtype=np.longdouble),
        hadamard_rhs=hadamard_form(gop, model, u, e, dtype=np.longdouble),
        energy_rate=energy_rate,
        energy_rate_terms=energy_rate_terms,
    )


# }}}
