"""Experiment plans, replicated sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import io
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .environments import AnalyticSystem, Quadratic, QueueNetwork, QueueNetworkConfig
from .projections import BoxConstraint, PdProjectionPolicy
from .qgaussian import QGaussianSpec
from .two_timescale import Algorithm, OptimizerConfig, Trajectory, run

__all__ = [
    "PlanError",
    "QuadraticProblem",
    "ExperimentPlan",
    "ResultRow",
    "load_plan",
    "default_plan",
    "plan_from_dict",
    "run_sweep",
    "write_results",
    "results_csv",
    "trajectory_csv",
    "export_trajectory",
]

RESULT_HEADER = [
    "kind", "algorithm", "q", "beta", "gamma", "seed", "runs", "final_distance", "sd",
]
TIMING_HEADER = ["algorithm", "q", "beta", "gamma", "seed", "wall_time_s"]
TRAJECTORY_HEADER = ["n", "distance", "z_norm", "w_norm"]


class PlanError(ValueError):
    """The experiment plan or config file is invalid."""


@dataclass(frozen=True)
class QuadraticProblem:
    """Noisy quadratic ``|theta - center|^2`` used as a sanity environment."""

    center: np.ndarray
    box: BoxConstraint
    noise_sd: float = 0.0

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def theta_bar(self) -> np.ndarray:
        return self.center

    def system(self) -> AnalyticSystem:
        return AnalyticSystem(Quadratic.isotropic(self.center), self.noise_sd)


@dataclass(frozen=True)
class ExperimentPlan:
    base: OptimizerConfig
    problem: QueueNetworkConfig | QuadraticProblem
    initial_theta: np.ndarray
    q_values: tuple[float, ...]
    beta_values: tuple[float, ...]
    gamma_values: tuple[float, ...]
    algorithms: tuple[Algorithm, ...]
    replications: int = 20
    seed_base: int = 0
    output: str | None = None

    def system(self):
        if isinstance(self.problem, QueueNetworkConfig):
            return QueueNetwork(self.problem)
        return self.problem.system()

    @property
    def target(self) -> np.ndarray:
        return self.problem.theta_bar

    def configs(self):
        """Every (sweep point, replication) config, validated up front."""
        out = []
        n = self.base.spec.dim
        for alg in self.algorithms:
            for q in self.q_values:
                for beta in self.beta_values:
                    for gamma in self.gamma_values:
                        try:
                            spec = QGaussianSpec(n, q, beta)
                            point = dataclasses.replace(
                                self.base, algorithm=alg, spec=spec, c_exponent=gamma
                            )
                        except ValueError as exc:
                            raise PlanError(
                                f"invalid sweep point algorithm={alg.value} q={q} "
                                f"beta={beta} gamma={gamma}: {exc}"
                            ) from exc
                        for r in range(self.replications):
                            out.append(dataclasses.replace(point, seed=self.seed_base + r))
        return out


@dataclass(frozen=True)
class ResultRow:
    kind: str  # "replication" or "aggregate"
    algorithm: str
    q: float
    beta: float
    gamma: float
    seed: int | None
    runs: int
    final_distance: float  # mean for aggregate rows
    sd: float | None  # sample standard deviation for aggregate rows
    wall_time: float | None = field(default=None, compare=False)

    @property
    def key(self):
        return (self.algorithm, self.q, self.beta, self.gamma)

    def csv_fields(self) -> list:
        return [
            self.kind, self.algorithm, self.q, self.beta, self.gamma,
            "" if self.seed is None else self.seed, self.runs, self.final_distance,
            "" if self.sd is None else self.sd,
        ]


# --------------------------------------------------------------------------
# config files


def _vector(value, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(dim, float(arr))
    if arr.shape != (dim,):
        raise PlanError(f"{name} must be a scalar or a list of length {dim}")
    return arr


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def plan_from_dict(data: dict[str, Any]) -> ExperimentPlan:
    try:
        return _plan_from_dict(data)
    except PlanError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(str(exc)) from exc


def _plan_from_dict(data: dict[str, Any]) -> ExperimentPlan:
    known = {"optimizer", "system", "queue", "quadratic", "sweep"}
    unknown = set(data) - known
    if unknown:
        raise PlanError(f"unknown config sections: {sorted(unknown)}")
    opt = dict(data.get("optimizer", {}))
    kind = data.get("system", {}).get("kind", "queue")
    if kind == "queue":
        qd = dict(data.get("queue", {}))
        n1, n2 = int(qd.pop("N1", 10)), int(qd.pop("N2", 10))
        dim = n1 + n2
        box = BoxConstraint(
            _vector(qd.pop("lower", 0.1), dim, "lower"),
            _vector(qd.pop("upper", 0.6), dim, "upper"),
        )
        initial = _vector(qd.pop("initial_theta", 0.6), dim, "initial_theta")
        theta_bar = _vector(qd.pop("theta_bar", 0.3), dim, "theta_bar")
        problem = QueueNetworkConfig(
            N1=n1, N2=n2, theta_bar=theta_bar, box=box, **qd
        )
    elif kind == "quadratic":
        qd = dict(data.get("quadratic", {}))
        center = np.asarray(qd.pop("center", [0.3, 0.3]), dtype=float).ravel()
        dim = center.size
        box = BoxConstraint(
            _vector(qd.pop("lower", -1.0), dim, "lower"),
            _vector(qd.pop("upper", 1.0), dim, "upper"),
        )
        initial = _vector(qd.pop("initial_theta", 0.9), dim, "initial_theta")
        problem = QuadraticProblem(center, box, float(qd.pop("noise_sd", 0.0)))
        if qd:
            raise PlanError(f"unknown quadratic keys: {sorted(qd)}")
    else:
        raise PlanError(f"system.kind must be 'queue' or 'quadratic', got {kind!r}")

    algorithm = Algorithm(opt.pop("algorithm", "nqsf2"))
    q = float(opt.pop("q", 1.0))
    beta = float(opt.pop("beta", 0.1))
    policy = PdProjectionPolicy(opt.pop("pd_variant", "jacobi"), float(opt.pop("epsilon", 0.1)))
    base = OptimizerConfig(
        algorithm=algorithm,
        spec=QGaussianSpec(dim, q, beta),
        box=box,
        pd_policy=policy,
        a_exponent=float(opt.pop("a_exponent", 1.0)),
        b_exponent=float(opt.pop("b_exponent", 0.85)),
        c_exponent=float(opt.pop("c_exponent", 0.65)),
        outer_iterations=int(opt.pop("outer_iterations", 5000)),
        inner_iterations=int(opt.pop("inner_iterations", 100)),
        a_scale=float(opt.pop("a_scale", 1.0)),
    )
    if opt:
        raise PlanError(f"unknown optimizer keys: {sorted(opt)}")
    if not box.contains(initial):
        raise PlanError("initial_theta lies outside the box")

    sw = dict(data.get("sweep", {}))
    plan = ExperimentPlan(
        base=base,
        problem=problem,
        initial_theta=initial,
        q_values=tuple(float(v) for v in _as_tuple(sw.pop("q", q))),
        beta_values=tuple(float(v) for v in _as_tuple(sw.pop("beta", beta))),
        gamma_values=tuple(float(v) for v in _as_tuple(sw.pop("gamma", base.c_exponent))),
        algorithms=tuple(Algorithm(v) for v in _as_tuple(sw.pop("algorithm", algorithm.value))),
        replications=int(sw.pop("replications", 20)),
        seed_base=int(sw.pop("seed_base", 0)),
        output=sw.pop("output", None),
    )
    if sw:
        raise PlanError(f"unknown sweep keys: {sorted(sw)}")
    if plan.replications < 1:
        raise PlanError("replications must be at least 1")
    plan.configs()  # validates every sweep point
    return plan


def load_plan(path: str | Path) -> ExperimentPlan:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise PlanError(f"{path}: {exc}") from exc
    return plan_from_dict(data)


def default_plan() -> ExperimentPlan:
    """The checked-in profile with the published benchmark settings."""
    text = resources.files("qgsf.profiles").joinpath("benchmark.toml").read_text()
    return plan_from_dict(tomllib.loads(text))


# --------------------------------------------------------------------------
# running


def _run_one(args) -> tuple[OptimizerConfig, float, float]:
    config, plan = args
    start = time.perf_counter()
    traj = run(config, plan.system(), plan.initial_theta, plan.target)
    return config, traj.final_distance, time.perf_counter() - start


def run_sweep(plan: ExperimentPlan, workers: int = 1) -> list[ResultRow]:
    """Replicated runs for every sweep point; replication ``r`` uses seed
    ``seed_base + r``.  Rows come back sorted, so worker count never changes
    the output."""
    configs = plan.configs()
    tasks = [(c, plan) for c in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    rows = [
        ResultRow(
            "replication", c.algorithm.value, c.spec.q, c.spec.beta, c.c_exponent,
            c.seed, 1, dist, None, wall,
        )
        for c, dist, wall in results
    ]
    rows.sort(key=lambda r: (r.key, r.seed))
    return rows + aggregate(rows)


def aggregate(rows: Sequence[ResultRow]) -> list[ResultRow]:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r.kind == "replication":
            groups.setdefault(r.key, []).append(r.final_distance)
    out = []
    for key in sorted(groups):
        vals = groups[key]
        sd = statistics.stdev(vals) if len(vals) > 1 else float("nan")
        out.append(ResultRow("aggregate", *key, None, len(vals), statistics.fmean(vals), sd))
    return out


def results_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for r in rows:
        writer.writerow(r.csv_fields())
    return buf.getvalue()


def write_results(rows: Sequence[ResultRow], path: str | Path) -> Path:
    """Write the deterministic results CSV and a ``.timing.csv`` sidecar."""
    path = Path(path)
    path.write_text(results_csv(rows))
    timing = path.with_suffix(".timing.csv")
    with open(timing, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMING_HEADER)
        for r in rows:
            if r.kind == "replication":
                writer.writerow([r.algorithm, r.q, r.beta, r.gamma, r.seed, r.wall_time])
    return timing


def trajectory_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    dist = traj.distance
    for n in range(traj.theta.shape[0]):
        writer.writerow([n, float(dist[n]), float(traj.z_norm[n]), float(traj.w_norm[n])])
    return buf.getvalue()


def export_trajectory(plan: ExperimentPlan, seed: int, output: str | Path | None) -> Trajectory:
    """Run the plan's base config once and write the per-iteration CSV."""
    config = dataclasses.replace(plan.base, seed=seed)
    traj = run(config, plan.system(), plan.initial_theta, plan.target)
    text = trajectory_csv(traj)
    if output is not None:
        Path(output).write_text(text)
    return traj
