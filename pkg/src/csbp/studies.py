"""
Mesh-refinement studies: convergence with error envelopes, coefficient
scaling, and plain simulation runs.

Every study is a deterministic function of its :class:`StudyConfig` and writes
``report.csv`` and ``summary.json`` into the configured output directory.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from csbp.bounds import (
    bound_constants,
    default_time_samples,
    riccati_coefficients,
)
from csbp.discretization import (
    exact_state,
    h_norm,
    max_wave_speed,
    rk4_integrate,
)
from csbp.errors import ConfigError, InsufficientDataError
from csbp.fluxes import MODELS, get_model, make_exact
from csbp.riccati import blow_up_time, envelope_check
from csbp.sbp import build_operator, operator_scaling_study

STUDY_KINDS = ("simulate", "converge", "scaling")


# {{{ configuration


@dataclass(frozen=True)
class StudyConfig:
    """Parameters of a study.

    .. attribute:: t_fraction

        Final time as a fraction of the breaking time of the exact solution.

    .. attribute:: dt

        Fixed time step. When *None*, each mesh uses ``cfl * h / max|A(u0)|``.

    .. attribute:: n_time_samples

        Number of uniform envelope sample times in ``(0, T]``.

    .. attribute:: n_bound_samples

        Number of uniform times in ``[0, T]`` over which the bound constants
        take their suprema.
    """

    problem: str = "burgers"
    p: int = 3
    n_e: tuple[int, ...] = (16, 32, 64, 128)
    sigma: float = 1.0
    t_fraction: float = 0.5
    dt: float | None = None
    cfl: float = 0.1
    n_time_samples: int = 50
    n_bound_samples: int = 21
    energy_tol: float = 1.0e-9
    output_dir: str = "out"
    kind: str = "converge"
    wavenumber: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_e", tuple(int(n) for n in self.n_e))

        if self.kind not in STUDY_KINDS:
            raise ConfigError(f"unknown study kind {self.kind!r}; expected one of {STUDY_KINDS}")
        if self.problem not in MODELS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {sorted(MODELS)}")
        if not 1 <= self.p <= 6:
            raise ConfigError(f"degree must be in 1..6: got {self.p}")
        if not self.n_e:
            raise ConfigError("mesh list is empty")
        if any(b <= a for a, b in zip(self.n_e, self.n_e[1:])):
            raise ConfigError(f"mesh list must be strictly increasing: got {list(self.n_e)}")
        if min(self.n_e) < 2:
            raise ConfigError("every mesh needs at least 2 elements")
        if self.kind in ("converge", "scaling") and len(self.n_e) < 3:
            raise ConfigError(
                f"a {self.kind} study fits slopes and needs at least 3 mesh levels:"
                f" got {len(self.n_e)}"
            )
        if not 0.0 < self.t_fraction < 1.0:
            raise ConfigError(f"t_fraction must lie in (0, 1): got {self.t_fraction}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive: got {self.sigma}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive: got {self.dt}")
        if not self.cfl > 0:
            raise ConfigError(f"cfl must be positive: got {self.cfl}")
        if self.n_time_samples < 1 or self.n_bound_samples < 1:
            raise ConfigError("sample counts must be positive")
        if self.wavenumber < 1:
            raise ConfigError(f"wavenumber must be a positive integer: got {self.wavenumber}")

    @classmethod
    def from_dict(cls, data: dict) -> StudyConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> StudyConfig:
        with open(path) as fd:
            return cls.from_dict(json.load(fd))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["n_e"] = list(self.n_e)
        return d

    def replace(self, **changes) -> StudyConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Problem:
    """Model, exact solution and final time derived from a config."""

    model: object
    exact: object
    T: float

    @classmethod
    def from_config(cls, config: StudyConfig) -> Problem:
        model = get_model(config.problem)
        exact = make_exact(model, config.sigma, config.wavenumber)
        return cls(model=model, exact=exact, T=config.t_fraction * exact.breaking_time)


def _time_step(config: StudyConfig, gop, model, u0) -> float:
    if config.dt is not None:
        return config.dt
    return config.cfl * gop.mesh.h / max_wave_speed(model, u0)


def _integrate(config, gop, problem, dt, sample_times=None):
    u0 = exact_state(gop, problem.exact, 0.0)
    try:
        return rk4_integrate(
            gop, problem.model, u0, problem.T, dt,
            sample_times=sample_times, cfl=max(config.cfl, 1.0e-300),
        )
    except ValueError as exc:
        if "CFL" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise


# }}}


# {{{ order fitting


@dataclass(frozen=True)
class OrderFit:
    slope: float
    half_width: float
    intercept: float

    def within(self, lo: float, hi: float) -> bool:
        return lo <= self.slope <= hi


def fit_order(h_list, value_list) -> OrderFit:
    """Least-squares slope of ``log(value)`` against ``log(h)``.

    ``half_width`` is the standard error of the slope.
    """
    h = np.asarray(h_list, dtype=np.float64)
    v = np.asarray(value_list, dtype=np.float64)
    if h.shape != v.shape or h.ndim != 1:
        raise ValueError(f"h and values must be 1D of equal length: {h.shape} vs {v.shape}")
    if h.size < 3:
        raise InsufficientDataError(f"need at least 3 points to fit an order: got {h.size}")
    if np.any(h <= 0) or np.any(v <= 0):
        raise ValueError("h and values must be positive for a log-log fit")

    res = stats.linregress(np.log(h), np.log(v))
    return OrderFit(slope=float(res.slope), half_width=float(res.stderr),
                    intercept=float(res.intercept))


# }}}


# {{{ output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_json(path, data) -> None:
    with open(path, "w") as fd:
        json.dump(_jsonable(data), fd, indent=2, sort_keys=True)
        fd.write("\n")


class _Report:
    columns: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_csv(self, path) -> None:
        write_csv(path, self.columns, self.rows)

    def write(self, output_dir=None) -> tuple[str, str]:
        output_dir = self.config.output_dir if output_dir is None else output_dir
        os.makedirs(output_dir, exist_ok=True)
        csv_path = os.path.join(output_dir, "report.csv")
        json_path = os.path.join(output_dir, "summary.json")
        self.to_csv(csv_path)
        write_json(json_path, self.summary())
        return csv_path, json_path


# }}}


# {{{ convergence study


@dataclass(frozen=True)
class DtGuard:
    """Change of the final error on the finest mesh when the time step is halved."""

    dt: float
    error: float
    error_half: float
    tolerance: float = 0.01

    @property
    def relative_change(self) -> float:
        return abs(self.error - self.error_half) / self.error if self.error > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.relative_change < self.tolerance


@dataclass(frozen=True)
class PrefixEnvelope:
    """Envelope comparison restricted to ``(0, 0.99 t*]`` on a mesh with ``t* <= T``."""

    n_e: int
    t_end: float
    passed: bool
    min_margin: float


@dataclass(frozen=True)
class ConvergenceReport(_Report):
    config: StudyConfig
    rows: list
    order: OrderFit
    tau_order: OrderFit
    dt_guard: DtGuard
    prefix_envelopes: list = field(default_factory=list)

    columns = ("h", "n_e", "error_H", "tau_inf", "a", "b", "c", "Delta", "t_star",
               "envelope", "max_margin")

    @property
    def errors(self) -> np.ndarray:
        return np.array([r["error_H"] for r in self.rows])

    @property
    def error_strictly_decreasing(self) -> bool:
        e = self.errors
        return bool(np.all(e[1:] < e[:-1]))

    @property
    def checks(self) -> dict:
        return {
            "error_strictly_decreasing": self.error_strictly_decreasing,
            "error_order": self.order.slope >= self.config.p - 0.3,
            "envelope": all(r["envelope"] != "fail" for r in self.rows),
            "prefix_envelope": all(pe.passed for pe in self.prefix_envelopes),
            "dt_halving": self.dt_guard.passed,
        }

    def summary(self) -> dict:
        return {
            "kind": "converge",
            "config": self.config.to_dict(),
            "order": self.order,
            "tau_order": self.tau_order,
            "dt_guard": {**dataclasses.asdict(self.dt_guard),
                         "relative_change": self.dt_guard.relative_change,
                         "passed": self.dt_guard.passed},
            "prefix_envelopes": self.prefix_envelopes,
            "envelope_status": {r["n_e"]: r["envelope"] for r in self.rows},
            "checks": self.checks,
            "passed": self.passed,
        }


def run_convergence_study(config: StudyConfig, *, write: bool = False) -> ConvergenceReport:
    problem = Problem.from_config(config)
    model, exact, T = problem.model, problem.exact, problem.T

    gops = [build_operator(config.p, n_e) for n_e in config.n_e]
    t_bounds = default_time_samples(T, config.n_bound_samples)
    constants = [bound_constants(gop, model, exact, t_bounds) for gop in gops]
    coeffs = riccati_coefficients(constants)

    env_times = np.linspace(0.0, T, config.n_time_samples + 1)[1:]

    rows, prefixes, final_dt = [], [], None
    for gop, bc, rc in zip(gops, constants, coeffs):
        t_star = blow_up_time(*rc.as_tuple())
        applicable = t_star.exceeds(T)

        prefix_times = None
        if not applicable:
            t_end = 0.99 * t_star.value
            prefix_times = np.linspace(0.0, t_end, config.n_time_samples + 1)[1:]

        samples = env_times if prefix_times is None else np.union1d(env_times, prefix_times)
        u0 = exact_state(gop, exact, 0.0)
        dt = _time_step(config, gop, model, u0)
        final_dt = dt
        traj = _integrate(config, gop, problem, dt, sample_times=samples)

        z_all = np.array([
            h_norm(gop, exact_state(gop, exact, t) - s) for t, s in zip(traj.times, traj.states)
        ])

        def z_at(times, traj=traj, z_all=z_all):
            # stops closer than roundoff to a sample are merged by the integrator
            idx = np.abs(traj.times[None, :] - np.asarray(times)[:, None]).argmin(axis=1)
            return z_all[idx]

        error_T = float(z_all[-1])

        status, max_margin = "not-applicable", None
        if applicable:
            res = envelope_check(env_times, z_at(env_times), rc)
            status = "pass" if res.passed else "fail"
            max_margin = float(np.max(res.margins))
        else:
            res = envelope_check(prefix_times, z_at(prefix_times), rc)
            prefixes.append(PrefixEnvelope(
                n_e=gop.mesh.n_e, t_end=float(prefix_times[-1]),
                passed=res.passed, min_margin=float(np.min(res.margins)),
            ))

        rows.append({
            "h": gop.mesh.h, "n_e": gop.mesh.n_e,
            "error_H": error_T, "tau_inf": bc.tau_inf,
            "a": rc.a, "b": rc.b, "c": rc.c, "Delta": rc.delta,
            "t_star": float(t_star),
            "envelope": status, "max_margin": max_margin,
        })

    traj_half = _integrate(config, gops[-1], problem, 0.5 * final_dt)
    error_half = h_norm(gops[-1], exact_state(gops[-1], exact, T) - traj_half.final)

    report = ConvergenceReport(
        config=config,
        rows=rows,
        order=fit_order([r["h"] for r in rows], [r["error_H"] for r in rows]),
        tau_order=fit_order([r["h"] for r in rows], [r["tau_inf"] for r in rows]),
        dt_guard=DtGuard(dt=final_dt, error=rows[-1]["error_H"], error_half=error_half),
        prefix_envelopes=prefixes,
    )
    if write:
        report.write()
    return report


# }}}


# {{{ scaling study


@dataclass(frozen=True)
class ScalingReport(_Report):
    config: StudyConfig
    rows: list
    slopes: dict
    t_star_nondecreasing: bool
    t_star_log_slope: float

    columns = ("h", "n_e", "p", "c_F", "c_R", "c_S", "a", "b", "b_mesh", "c", "Delta",
               "t_star", "a_star", "norm_H_k", "norm_Q_k", "norm_D_k")

    @property
    def checks(self) -> dict:
        p, s = self.config.p, self.slopes
        d = 1
        expected_a = -1.0 - 0.5 * d
        return {
            "slope_a": s["a"].within(expected_a - 0.2, expected_a + 0.2),
            "slope_b": s["b"].within(-0.2, 0.2),
            "slope_b_mesh": s["b_mesh"].within(-0.2, 0.2),
            "slope_c": s["c"].within(p - 0.3, p + 0.7),
            "t_star_nondecreasing": self.t_star_nondecreasing,
            "slope_H_k": abs(s["H_k"].slope - 1.0) <= 0.05,
            "slope_Q_k": abs(s["Q_k"].slope) <= 0.05,
            "slope_D_k": abs(s["D_k"].slope + 1.0) <= 0.05,
        }

    bounds_columns = ("h", "n_e", "p", "c_F", "c_R", "c_S", "a", "b", "c", "Delta")

    def write(self, output_dir=None) -> tuple[str, str]:
        paths = super().write(output_dir)
        out = os.path.dirname(paths[0])
        write_csv(os.path.join(out, "bounds.csv"), self.bounds_columns, self.rows)
        return paths

    def summary(self) -> dict:
        return {
            "kind": "scaling",
            "config": self.config.to_dict(),
            "slopes": self.slopes,
            "t_star_nondecreasing": self.t_star_nondecreasing,
            "t_star_log_slope": self.t_star_log_slope,
            "checks": self.checks,
            "passed": self.passed,
        }


def _slope_or_flat(h, values) -> OrderFit:
    # a quantity that is identically zero has no meaningful log slope
    values = np.asarray(values, dtype=np.float64)
    if np.all(values == 0):
        return OrderFit(slope=0.0, half_width=0.0, intercept=-math.inf)
    return fit_order(h, values)


def run_scaling_study(config: StudyConfig, *, write: bool = False) -> ScalingReport:
    if len(config.n_e) < 4:
        raise InsufficientDataError(
            f"a scaling study needs at least 4 mesh levels: got {len(config.n_e)}"
        )
    problem = Problem.from_config(config)
    model, exact, T = problem.model, problem.exact, problem.T

    gops = [build_operator(config.p, n_e) for n_e in config.n_e]
    t_bounds = default_time_samples(T, config.n_bound_samples)
    constants = [bound_constants(gop, model, exact, t_bounds) for gop in gops]
    coeffs = riccati_coefficients(constants)
    ops = operator_scaling_study(config.p, config.n_e)

    rows = []
    for i, (bc, rc) in enumerate(zip(constants, coeffs)):
        rows.append({
            "h": bc.h, "n_e": bc.n_e, "p": bc.p,
            "c_F": bc.c_F, "c_R": bc.c_R, "c_S": bc.c_S,
            "a": rc.a, "b": rc.b, "b_mesh": rc.b_mesh, "c": rc.c, "Delta": rc.delta,
            "t_star": float(blow_up_time(*rc.as_tuple())),
            "a_star": bc.a_star,
            "norm_H_k": float(ops.norm_H[i]),
            "norm_Q_k": float(ops.norm_Q[i]),
            "norm_D_k": float(ops.norm_D[i]),
        })

    h = [r["h"] for r in rows]

    def col(name):
        return [r[name] for r in rows]

    slopes = {
        "a": fit_order(h, col("a")),
        "b": fit_order(h, col("b")),
        "b_mesh": fit_order(h, col("b_mesh")),
        "c": _slope_or_flat(h, col("c")),
        "ac": _slope_or_flat(h, [r["a"] * r["c"] for r in rows]),
        "a_star": _slope_or_flat(h, col("a_star")),
        "H_k": fit_order(h, col("norm_H_k")),
        "Q_k": fit_order(h, col("norm_Q_k")),
        "D_k": fit_order(h, col("norm_D_k")),
    }

    t_star = np.array(col("t_star"))
    finite = np.isfinite(t_star)
    log_slope = (
        float(np.polyfit(np.log(1.0 / np.asarray(h))[finite], t_star[finite], 1)[0])
        if np.count_nonzero(finite) >= 2 else math.nan
    )

    report = ScalingReport(
        config=config,
        rows=rows,
        slopes=slopes,
        t_star_nondecreasing=bool(np.all(t_star[1:] >= t_star[:-1])),
        t_star_log_slope=log_slope,
    )
    if write:
        report.write()
    return report


# }}}


# {{{ simulation


@dataclass(frozen=True)
class SimulationReport(_Report):
    config: StudyConfig
    rows: list

    columns = ("h", "n_e", "dt", "steps", "error_H", "energy_drift")

    @property
    def checks(self) -> dict:
        return {
            "energy_drift": all(r["energy_drift"] <= self.config.energy_tol for r in self.rows),
        }

    def summary(self) -> dict:
        return {
            "kind": "simulate",
            "config": self.config.to_dict(),
            "checks": self.checks,
            "passed": self.passed,
        }


def run_simulation(config: StudyConfig, *, write: bool = False) -> SimulationReport:
    """Integrate to ``T`` on every mesh, recording the final error and energy drift.

    With *write*, per-mesh energy histories go to ``energy_<n_e>.csv``.
    """
    problem = Problem.from_config(config)
    rows, trajectories = [], []
    for n_e in config.n_e:
        gop = build_operator(config.p, n_e)
        u0 = exact_state(gop, problem.exact, 0.0)
        dt = _time_step(config, gop, problem.model, u0)
        traj = _integrate(config, gop, problem, dt)
        trajectories.append((n_e, traj))
        rows.append({
            "h": gop.mesh.h, "n_e": n_e, "dt": dt,
            "steps": len(traj.step_times) - 1,
            "error_H": h_norm(gop, exact_state(gop, problem.exact, problem.T) - traj.final),
            "energy_drift": traj.relative_energy_drift,
        })

    report = SimulationReport(config=config, rows=rows)
    if write:
        report.write()
        for n_e, traj in trajectories:
            traj.to_csv(os.path.join(config.output_dir, f"energy_{n_e}.csv"))
    return report


# }}}


def run_study(config: StudyConfig, *, write: bool = False):
    runner = {
        "simulate": run_simulation,
        "converge": run_convergence_study,
        "scaling": run_scaling_study,
    }[config.kind]
    return runner(config, write=write)
