r"""
Split-form C-SBP semi-discretization and time integration.

The semi-discrete scheme is

.. math::

    \frac{d u_h}{dt} = -\alpha_1 \bar{D} f(u_h) - \alpha_2 \bar{A}(u_h) \bar{D} u_h,

with :math:`\bar{D}` the global derivative applied componentwise (the
Kronecker extension by :math:`I_{n_c}`) and :math:`\bar{A}` block diagonal.
States are ``(n_nodes, n_c)`` arrays; flattening them row-major gives the
component-fastest ordering.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from csbp.errors import DimensionError, DivergenceError
from csbp.fluxes import FluxModel
from csbp.sbp import GlobalOperator


def _check_state(gop: GlobalOperator, model: FluxModel, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1 and model.n_c == 1:
        u = u[:, None]
    if u.shape != (gop.n_nodes, model.n_c):
        raise DimensionError(
            f"state must have shape {(gop.n_nodes, model.n_c)}: got {u.shape}"
        )
    return u


def apply_jacobian(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Nodewise product of ``(n, n_c, n_c)`` Jacobians with ``(n, n_c)`` vectors."""
    return np.einsum("nij,nj->ni", A, v)


def split_rhs(gop: GlobalOperator, model: FluxModel, u_h) -> np.ndarray:
    u_h = _check_state(gop, model, u_h)
    conservative = gop.apply_D(model.flux(u_h))
    advective = apply_jacobian(model.jacobian(u_h), gop.apply_D(u_h))
    return -model.alpha1 * conservative - model.alpha2 * advective


def discrete_energy(gop: GlobalOperator, u) -> float:
    r""":math:`u^T \bar{H} u`, summed over components."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    if u.shape[0] != gop.n_nodes:
        raise DimensionError(f"state has {u.shape[0]} nodes, operator has {gop.n_nodes}")
    return float(np.sum(gop.H[:, None] * u * u))


def h_norm(gop: GlobalOperator, v) -> float:
    return math.sqrt(discrete_energy(gop, v))


def max_wave_speed(model: FluxModel, u) -> float:
    A = model.jacobian(model.as_state(u))
    return float(np.max(np.abs(np.linalg.eigvalsh(A))))


# {{{ time integration


@dataclass(frozen=True)
class Trajectory:
    """Samples of an RK4 run.

    .. attribute:: times

        Sample times, strictly increasing, starting at 0.

    .. attribute:: step_times
    .. attribute:: energy

        Discrete energy after every step (including the initial state).
    """

    times: np.ndarray
    states: np.ndarray
    step_times: np.ndarray
    energy: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def relative_energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(abs(self.energy[-1] - e0) / e0) if e0 > 0 else float(abs(self.energy[-1]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fd:
            writer = csv.writer(fd)
            writer.writerow(["t", "energy"])
            for t, e in zip(self.step_times, self.energy):
                writer.writerow([repr(float(t)), repr(float(e))])


def rk4_integrate(
    gop: GlobalOperator,
    model: FluxModel,
    u0,
    T: float,
    dt: float,
    *,
    sample_times=None,
    cfl: float = 0.2,
) -> Trajectory:
    """Classical RK4 from 0 to *T*.

    Steps are shortened to land exactly on every requested sample time and
    on *T*. The initial state is always the first sample.
    """
    if dt <= 0 or T <= 0:
        raise ValueError(f"dt and T must be positive: got dt={dt}, T={T}")

    u = _check_state(gop, model, u0).copy()

    speed = max_wave_speed(model, u)
    if speed > 0 and dt > cfl * gop.mesh.h / speed:
        raise ValueError(
            f"dt = {dt} violates CFL {cfl}: limit is {cfl * gop.mesh.h / speed}"
        )

    targets = [] if sample_times is None else sorted(float(s) for s in sample_times)
    targets = [s for s in targets if 0.0 < s < T] + [float(T)]
    # drop near-duplicates that would produce zero-length steps
    stops = []
    for s in targets:
        if not stops or s - stops[-1] > 1.0e-14 * T:
            stops.append(s)

    def rhs(v):
        return split_rhs(gop, model, v)

    times, states = [0.0], [u.copy()]
    step_times, energy = [0.0], [discrete_energy(gop, u)]

    t = 0.0
    step = 0
    for stop in stops:
        n = max(1, math.ceil((stop - t) / dt - 1.0e-9))
        for i in range(n):
            tn = stop if i == n - 1 else t + dt
            h = tn - t
            k1 = rhs(u)
            k2 = rhs(u + 0.5 * h * k1)
            k3 = rhs(u + 0.5 * h * k2)
            k4 = rhs(u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = tn
            step += 1

            if not np.all(np.isfinite(u)):
                raise DivergenceError(f"non-finite state at step {step} (t = {t})", step=step)
            step_times.append(t)
            energy.append(discrete_energy(gop, u))

        times.append(t)
        states.append(u.copy())

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        step_times=np.array(step_times),
        energy=np.array(energy),
    )


# }}}


# {{{ truncation error


@dataclass(frozen=True)
class TruncationError:
    r"""Truncation error of the exact solution inserted in the scheme.

    .. attribute:: tau_u

        Derivative consistency error :math:`\bar{D} u - u_x` at the nodes.
    """

    tau: np.ndarray
    norm_H: float
    norm_inf: float
    tau_u: np.ndarray
    domain_length: float

    @property
    def tau_u_inf(self) -> float:
        return float(np.max(np.abs(self.tau_u)))

    @property
    def h_norm_bounded(self) -> bool:
        return self.norm_H <= math.sqrt(self.domain_length) * self.norm_inf * (1.0 + 1.0e-12)


def exact_state(gop: GlobalOperator, exact, t: float) -> np.ndarray:
    return np.asarray(exact.value(gop.x, t), dtype=np.float64).reshape(gop.n_nodes, -1)


def truncation_error(gop: GlobalOperator, model: FluxModel, exact, t: float) -> TruncationError:
    r""":math:`\tau = u_t + \alpha_1 \bar{D} f(u) + \alpha_2 \bar{A}(u) \bar{D} u`.

    The time derivative comes from the PDE itself, :math:`u_t = -A(u) u_x`,
    with :math:`u_x` the analytic spatial derivative.
    """
    x = gop.x
    u = _check_state(gop, model, exact.value(x, t))
    u_x = _check_state(gop, model, exact.gradient(x, t))

    A = model.jacobian(u)
    Du = gop.apply_D(u)
    u_t = -apply_jacobian(A, u_x)
    tau = u_t + model.alpha1 * gop.apply_D(model.flux(u)) + model.alpha2 * apply_jacobian(A, Du)

    return TruncationError(
        tau=tau,
        norm_H=h_norm(gop, tau),
        norm_inf=float(np.max(np.abs(tau))),
        tau_u=Du - u_x,
        domain_length=gop.domain_length,
    )


# }}}
