r"""
Homogeneous flux models and smooth exact solutions.

A flux :math:`F` is homogeneous of degree :math:`\beta` when
:math:`F(\eta U) = \eta^\beta F(U)`; Euler's theorem then gives
:math:`A(U) U = \beta F(U)` with :math:`A = \partial F / \partial U`. The
split coefficients are :math:`\alpha_1 = \beta / (\beta + 1)` and
:math:`\alpha_2 = 1 / (\beta + 1)`.

States are arrays of shape ``(n_nodes, n_c)``; Jacobians are returned with
shape ``(n_nodes, n_c, n_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from csbp.errors import DimensionError, InvalidScaleError, PostBreakingError


@dataclass(frozen=True)
class FluxModel:
    name: str
    n_c: int
    beta: float
    flux: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    c_r: float

    @property
    def alpha1(self) -> float:
        return self.beta / (self.beta + 1.0)

    @property
    def alpha2(self) -> float:
        return 1.0 / (self.beta + 1.0)

    def as_state(self, u) -> np.ndarray:
        """Coerce *u* to shape ``(n, n_c)``."""
        u = np.asarray(u, dtype=np.float64)
        if u.ndim == 0:
            u = u.reshape(1, 1)
        elif u.ndim == 1:
            u = u.reshape(-1, 1) if self.n_c == 1 else u.reshape(1, -1)
        if u.ndim != 2 or u.shape[1] != self.n_c:
            raise DimensionError(f"expected states with {self.n_c} components: got shape {u.shape}")
        return u


def _burgers_flux(u):
    return 0.5 * u**2


def _burgers_jacobian(u):
    return u[:, :, None].copy()


def burgers_model() -> FluxModel:
    """Inviscid Burgers, :math:`f(u) = u^2 / 2`."""
    return FluxModel(
        name="burgers", n_c=1, beta=2.0,
        flux=_burgers_flux, jacobian=_burgers_jacobian, c_r=1.0,
    )


def _sym2_flux(u):
    u1, u2 = u[:, 0], u[:, 1]
    return np.stack([0.5 * (u1**2 + u2**2), u1 * u2], axis=1)


def _sym2_jacobian(u):
    u1, u2 = u[:, 0], u[:, 1]
    A = np.empty((u.shape[0], 2, 2))
    A[:, 0, 0] = u1
    A[:, 0, 1] = u2
    A[:, 1, 0] = u2
    A[:, 1, 1] = u1
    return A


def symmetric2_model() -> FluxModel:
    r"""Two-component symmetric system :math:`F = ((u_1^2 + u_2^2)/2, u_1 u_2)`.

    The characteristic variables :math:`s = u_1 + u_2` and
    :math:`w = u_1 - u_2` each satisfy the scalar Burgers equation.
    """
    return FluxModel(
        name="symmetric2", n_c=2, beta=2.0,
        flux=_sym2_flux, jacobian=_sym2_jacobian, c_r=2.0,
    )


MODELS = {
    "burgers": burgers_model,
    "symmetric2": symmetric2_model,
}


def get_model(name: str) -> FluxModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None


# {{{ checks


@dataclass(frozen=True)
class HomogeneityReport:
    scaling_residual: float
    euler_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.scaling_residual, self.euler_residual) <= self.tolerance


def check_homogeneity(model: FluxModel, U, eta: float) -> HomogeneityReport:
    if eta == 0:
        raise InvalidScaleError("homogeneity scale must be nonzero")

    U = model.as_state(U)
    F = model.flux(U)
    A = model.jacobian(U)

    scaling = np.abs(model.flux(eta * U) - eta**model.beta * F)
    euler = np.abs(np.einsum("nij,nj->ni", A, U) - model.beta * F)
    return HomogeneityReport(
        scaling_residual=float(np.max(scaling)),
        euler_residual=float(np.max(euler)),
        tolerance=1.0e-13 * (1.0 + float(np.max(np.abs(F)))),
    )


@dataclass(frozen=True)
class TaylorRemainder:
    """Remainder, its 2-norm and the quadratic bound.

    .. attribute:: roundoff

        Absolute rounding allowance: ``R1`` is a difference of terms that
        may be much larger than ``R1`` itself.
    """

    R1: np.ndarray
    norm: float
    bound: float
    roundoff: float = 0.0

    @property
    def within_bound(self) -> bool:
        return self.norm <= self.bound * (1.0 + 1.0e-12) + self.roundoff


def taylor_remainder(model: FluxModel, u, u_h) -> TaylorRemainder:
    r"""First-order Taylor remainder :math:`R_1 = f(u_h) - f(u) + A(u)(u - u_h)`.

    The bound compares :math:`\|R_1\|_2` against :math:`(c_r/2) \|e\|_2^2`.
    """
    u = model.as_state(u)
    u_h = model.as_state(u_h)
    if u.shape != u_h.shape:
        raise DimensionError(f"shape mismatch: {u.shape} vs {u_h.shape}")

    e = u - u_h
    terms = (model.flux(u_h), model.flux(u), np.einsum("nij,nj->ni", model.jacobian(u), e))
    R1 = terms[0] - terms[1] + terms[2]
    magnitude = np.linalg.norm(sum(np.abs(t) for t in terms))
    return TaylorRemainder(
        R1=R1,
        norm=float(np.linalg.norm(R1)),
        bound=0.5 * model.c_r * float(np.sum(e**2)),
        roundoff=8.0 * np.finfo(np.float64).eps * float(magnitude),
    )


# }}}


# {{{ exact solutions


def _solve_characteristic(sigma, m, x, t, tol=1.0e-13, maxit=50):
    r"""Foot :math:`\xi` of the characteristic through ``(x, t)``.

    Solves :math:`\xi + \sigma t \sin(2 \pi m \xi) = x` by Newton's method,
    falling back to bisection on :math:`[x - |\sigma| t, x + |\sigma| t]`
    for points that fail to converge.
    """
    x = np.asarray(x, dtype=np.float64)
    k = 2.0 * np.pi * m
    st = sigma * t

    def g(xi):
        return xi + st * np.sin(k * xi) - x

    xi = x.copy()
    converged = np.zeros(x.shape, dtype=bool)
    for _ in range(maxit):
        gp = 1.0 + st * k * np.cos(k * xi)
        dx = g(xi) / gp
        xi = np.where(converged, xi, xi - dx)
        converged |= np.abs(dx) <= tol * (1.0 + np.abs(xi))
        if np.all(converged):
            break

    bad = ~converged | (np.abs(xi - x) > abs(st) * (1.0 + 1.0e-12) + tol)
    if np.any(bad):
        xi[bad] = _bisect_characteristic(g, x, abs(st), bad)
    return xi


def _bisect_characteristic(g, x, width, mask, tol=1.0e-15):
    lo = x[mask] - width
    hi = x[mask] + width
    xm = x.copy()
    # g is increasing in xi before breaking, so the bracket is valid
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        xm[mask] = mid
        val = g(xm)[mask]
        lo = np.where(val < 0, mid, lo)
        hi = np.where(val < 0, hi, mid)
        if np.max(hi - lo) <= tol * (1.0 + np.max(np.abs(mid))):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ExactSolution:
    """Smooth pre-shock Burgers solution for :math:`u_0 = \\sigma \\sin(2 \\pi m x)`."""

    sigma: float
    wavenumber: int = 1

    @property
    def n_c(self) -> int:
        return 1

    @property
    def breaking_time(self) -> float:
        if self.sigma == 0:
            return np.inf
        return 1.0 / (2.0 * np.pi * abs(self.sigma) * self.wavenumber)

    def _check_time(self, t):
        if t < 0:
            raise ValueError(f"time must be nonnegative: got {t}")
        if t >= self.breaking_time:
            raise PostBreakingError(
                f"t = {t} is at or past the breaking time {self.breaking_time}"
            )

    def initial(self, x):
        return self.sigma * np.sin(2.0 * np.pi * self.wavenumber * np.asarray(x))

    def foot(self, x, t):
        self._check_time(t)
        if t == 0 or self.sigma == 0:
            return np.asarray(x, dtype=np.float64).copy()
        return _solve_characteristic(self.sigma, self.wavenumber, x, t)

    def value(self, x, t) -> np.ndarray:
        """Exact solution, shape ``(len(x), 1)``."""
        return self.initial(self.foot(x, t)).reshape(-1, 1)

    def gradient(self, x, t) -> np.ndarray:
        r""":math:`u_x = u_0'(\xi) / (1 + u_0'(\xi) t)` along the characteristic."""
        xi = self.foot(x, t)
        k = 2.0 * np.pi * self.wavenumber
        du0 = self.sigma * k * np.cos(k * xi)
        return (du0 / (1.0 + du0 * t)).reshape(-1, 1)


def burgers_exact(sigma: float, x, t: float, wavenumber: int = 1) -> np.ndarray:
    """Exact Burgers solution values at *x* (1D array)."""
    return ExactSolution(sigma, wavenumber).value(x, t)[:, 0]


@dataclass(frozen=True)
class SystemExactSolution:
    r"""Exact ``symmetric2`` solution with :math:`u_2(x, 0) = \rho\, u_1(x, 0)`.

    Built from two Burgers solutions for :math:`s = u_1 + u_2` (amplitude
    :math:`(1 + \rho)\sigma`) and :math:`w = u_1 - u_2` (amplitude
    :math:`(1 - \rho)\sigma`).
    """

    sigma: float
    ratio: float = 0.5
    wavenumber: int = 1

    @property
    def n_c(self) -> int:
        return 2

    @property
    def _parts(self):
        return (
            ExactSolution((1.0 + self.ratio) * self.sigma, self.wavenumber),
            ExactSolution((1.0 - self.ratio) * self.sigma, self.wavenumber),
        )

    @property
    def breaking_time(self) -> float:
        return min(part.breaking_time for part in self._parts)

    def initial(self, x):
        u1 = self.sigma * np.sin(2.0 * np.pi * self.wavenumber * np.asarray(x))
        return np.stack([u1, self.ratio * u1], axis=1)

    def _combine(self, s, w):
        return np.concatenate([0.5 * (s + w), 0.5 * (s - w)], axis=1)

    def value(self, x, t) -> np.ndarray:
        if t >= self.breaking_time:
            raise PostBreakingError(
                f"t = {t} is at or past the breaking time {self.breaking_time}"
            )
        s, w = (part.value(x, t) for part in self._parts)
        return self._combine(s, w)

    def gradient(self, x, t) -> np.ndarray:
        if t >= self.breaking_time:
            raise PostBreakingError(
                f"t = {t} is at or past the breaking time {self.breaking_time}"
            )
        s, w = (part.gradient(x, t) for part in self._parts)
        return self._combine(s, w)


def make_exact(model: FluxModel, sigma: float = 1.0, wavenumber: int = 1):
    if model.name == "burgers":
        return ExactSolution(sigma, wavenumber)
    if model.name == "symmetric2":
        return SystemExactSolution(sigma, wavenumber=wavenumber)
    raise ValueError(f"no exact solution available for model {model.name!r}")


@dataclass(frozen=True)
class ConstantSolution:
    """Spatially uniform state; an exact solution of every conservation law."""

    state: tuple
    breaking_time: float = np.inf

    @property
    def n_c(self) -> int:
        return len(self.state)

    def initial(self, x):
        return np.tile(np.asarray(self.state, dtype=np.float64), (np.size(x), 1))

    def value(self, x, t) -> np.ndarray:
        return self.initial(x)

    def gradient(self, x, t) -> np.ndarray:
        return np.zeros((np.size(x), self.n_c))


# }}}
