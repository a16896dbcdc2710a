r"""
Constant-coefficient Riccati initial-value problem

.. math::

    y' = a y^2 + b y + c, \qquad y(0) = 0, \qquad a, b, c \ge 0.

Closed forms are evaluated in algebraically equivalent variants that avoid
cancellation near the double-root boundary :math:`\Delta = b^2 - 4ac = 0`:

* real roots, :math:`s = \sqrt{\Delta}`:
  :math:`y = 2c\,\mathrm{expm1}(st) / (s (2 + \mathrm{expm1}(st)) - b\,\mathrm{expm1}(st))`,
* complex roots, :math:`\omega = \sqrt{-\Delta}`, :math:`\theta = \omega t / 2`:
  :math:`y = 2c \tan\theta / (\omega - b \tan\theta)`,

both of which reduce to the double-root solution :math:`y = 2ct / (2 - bt)`
as :math:`\Delta \to 0`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from csbp.errors import (
    BlowUpDomainError,
    EnvelopeNotApplicableError,
    InvalidCoefficientError,
    OracleRangeError,
)

DELTA_EPS = 1.0e-10


class RiccatiCase(enum.Enum):
    LINEAR_CONSTANT = "LinearConstant"
    LINEAR_EXPONENTIAL = "LinearExponential"
    TANGENT_PURE = "TangentPure"
    REAL_ROOTS = "RealRoots"
    DOUBLE_ROOT = "DoubleRoot"
    COMPLEX_ROOTS = "ComplexRoots"
    TRIVIAL = "Trivial"


@dataclass(frozen=True)
class Classification:
    case: RiccatiCase
    a: float
    b: float
    c: float

    @property
    def delta(self) -> float:
        return self.b**2 - 4.0 * self.a * self.c

    @property
    def roots(self) -> tuple[float, float]:
        """``(r1, r2)`` for the real-root case, ``r1 = -2c / (b + sqrt(delta))``."""
        if self.case is not RiccatiCase.REAL_ROOTS:
            raise ValueError(f"roots are only defined for real roots: case is {self.case.value}")
        s = math.sqrt(self.delta)
        return -2.0 * self.c / (self.b + s), (-self.b - s) / (2.0 * self.a)

    @property
    def omega(self) -> float:
        return math.sqrt(max(-self.delta, 0.0))


def _validate(a, b, c):
    for name, v in (("a", a), ("b", b), ("c", c)):
        if not math.isfinite(v) or v < 0:
            raise InvalidCoefficientError(f"coefficient {name} must be finite and >= 0: got {v}")


def classify(a: float, b: float, c: float) -> Classification:
    a, b, c = float(a), float(b), float(c)
    _validate(a, b, c)

    if a == 0.0:
        case = RiccatiCase.LINEAR_CONSTANT if b == 0.0 else RiccatiCase.LINEAR_EXPONENTIAL
    elif c == 0.0:
        case = RiccatiCase.TRIVIAL
    elif b == 0.0:
        case = RiccatiCase.TANGENT_PURE
    else:
        delta = b**2 - 4.0 * a * c
        if abs(delta) <= DELTA_EPS * max(b**2, 4.0 * a * c):
            case = RiccatiCase.DOUBLE_ROOT
        elif delta > 0:
            case = RiccatiCase.REAL_ROOTS
        else:
            case = RiccatiCase.COMPLEX_ROOTS

    return Classification(case, a, b, c)


@dataclass(frozen=True)
class BlowUpTime:
    """Blow-up time of the Riccati solution; ``finite`` is False when it never blows up."""

    finite: bool
    value: float = math.inf

    def __float__(self) -> float:
        return self.value if self.finite else math.inf

    def exceeds(self, t: float) -> bool:
        return not self.finite or self.value > t


def _t_star(cl: Classification) -> float:
    a, b, c = cl.a, cl.b, cl.c
    case = cl.case
    if case in (RiccatiCase.LINEAR_CONSTANT, RiccatiCase.LINEAR_EXPONENTIAL, RiccatiCase.TRIVIAL):
        return math.inf
    if case is RiccatiCase.TANGENT_PURE:
        return math.pi / (2.0 * math.sqrt(a) * math.sqrt(c))
    if case is RiccatiCase.DOUBLE_ROOT:
        return 2.0 / b
    if case is RiccatiCase.REAL_ROOTS:
        s = math.sqrt(cl.delta)
        # ln((b + s) / (b - s)) / s, with b - s = 4ac / (b + s) free of cancellation
        # factored so subnormal a, c do not underflow the product
        return math.log1p((2.0 * s / (4.0 * a)) * ((b + s) / c)) / s
    # complex roots: (pi - 2 atan(b / omega)) / omega
    w = cl.omega
    return 2.0 * math.atan2(w, b) / w


def blow_up_time(a: float, b: float, c: float) -> BlowUpTime:
    t = _t_star(classify(a, b, c))
    return BlowUpTime(finite=math.isfinite(t), value=t)


def _evaluate(cl: Classification, t: np.ndarray) -> np.ndarray:
    a, b, c = cl.a, cl.b, cl.c
    case = cl.case
    if case is RiccatiCase.TRIVIAL:
        return np.zeros_like(t)
    if case is RiccatiCase.LINEAR_CONSTANT:
        return c * t
    if case is RiccatiCase.LINEAR_EXPONENTIAL:
        return (c / b) * np.expm1(b * t)
    if case is RiccatiCase.TANGENT_PURE:
        return math.sqrt(c / a) * np.tan(math.sqrt(a) * math.sqrt(c) * t)
    if case is RiccatiCase.DOUBLE_ROOT:
        # (b / 2a) (2 / (2 - bt) - 1), with c = b^2 / 4a
        return (b / (2.0 * a)) * (b * t) / (2.0 - b * t)
    if case is RiccatiCase.REAL_ROOTS:
        s = math.sqrt(cl.delta)
        g = np.expm1(s * t)
        return 2.0 * c * g / (s * (2.0 + g) - b * g)
    w = cl.omega
    tn = np.tan(0.5 * w * t)
    return 2.0 * c * tn / (w - b * tn)


def evaluate(a: float, b: float, c: float, t):
    """Closed-form solution at time(s) *t* in ``[0, t*)``."""
    cl = classify(a, b, c)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("times must be nonnegative")

    t_star = _t_star(cl)
    if np.any(t_arr >= t_star):
        raise BlowUpDomainError(
            f"t = {float(np.max(t_arr))} is at or beyond the blow-up time {t_star}", t_star=t_star
        )

    y = _evaluate(cl, t_arr)
    y = np.where(t_arr == 0.0, 0.0, y)
    return float(y) if y.ndim == 0 else y


# {{{ numeric oracle


def numeric_oracle(
    a: float, b: float, c: float, t,
    *, tol: float = 1.0e-10, max_steps: int = 200_000,
):
    """Adaptive step-doubling RK4 solution of the Riccati problem at time(s) *t*.

    Independent of the closed forms except for the blow-up time, which is
    used only to reject requests too close to the pole.
    """
    _validate(float(a), float(b), float(c))
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t_arr < 0):
        raise ValueError("times must be nonnegative")

    t_star = _t_star(classify(a, b, c))
    if np.any(t_arr >= 0.95 * t_star):
        raise OracleRangeError(f"requested time too close to the blow-up time {t_star}")

    def f(y):
        return (a * y + b) * y + c

    def rk4(y, h):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    order = np.argsort(t_arr)
    out = np.empty_like(t_arr)

    y, s = 0.0, 0.0
    h = 1.0e-3 if np.max(t_arr, initial=0.0) == 0 else 1.0e-3 * float(np.max(t_arr))
    steps = 0
    for idx in order:
        target = t_arr[idx]
        while s < target:
            if steps >= max_steps:
                raise OracleRangeError(f"step limit {max_steps} exceeded at t = {s}")
            steps += 1

            h = min(h, target - s)
            full = rk4(y, h)
            half = rk4(rk4(y, 0.5 * h), 0.5 * h)
            err = abs(half - full) / 15.0
            scale = tol * max(1.0, abs(half))
            if err <= scale:
                s += h
                # local extrapolation
                y = half + (half - full) / 15.0
                if s > target - 1.0e-15 * max(1.0, target):
                    s = target
            fac = 0.9 * (scale / err) ** 0.2 if err > 0 else 4.0
            h *= min(4.0, max(0.2, fac))
        out[idx] = y

    return float(out[0]) if np.ndim(t) == 0 else out


# }}}


# {{{ envelope comparison


@dataclass(frozen=True)
class EnvelopeResult:
    times: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        return self.envelope - self.measured

    @property
    def violations(self) -> np.ndarray:
        """Indices of samples where the measured error exceeds the envelope."""
        return np.flatnonzero(self.measured > self.envelope * (1.0 + 1.0e-9) + 1.0e-14)

    @property
    def passed(self) -> bool:
        return self.violations.size == 0


def envelope_check(times, measured, coeffs) -> EnvelopeResult:
    """Compare measured error norms against the Riccati envelope ``y(t)``.

    *coeffs* is an ``(a, b, c)`` triple or anything with ``as_tuple()``.
    """
    a, b, c = coeffs.as_tuple() if hasattr(coeffs, "as_tuple") else coeffs
    times = np.asarray(times, dtype=np.float64)
    measured = np.asarray(measured, dtype=np.float64)
    if times.shape != measured.shape:
        raise ValueError(f"shape mismatch: {times.shape} vs {measured.shape}")

    t_star = _t_star(classify(a, b, c))
    if np.any(times >= t_star):
        raise EnvelopeNotApplicableError(
            f"sample times reach the blow-up time {t_star}; a finer mesh is required",
            t_star=t_star,
        )

    y = np.asarray(evaluate(a, b, c, times), dtype=np.float64).reshape(times.shape)
    return EnvelopeResult(times=times, measured=measured, envelope=y)


# }}}
