"""Simulation environments observed by the two-timescale optimizer.

A *system* creates independent *replicas*; a replica reports one cost per
observation epoch under whatever parameter it is currently driven with.
Two systems are provided: the two-node M/G/1 feedback network and an
analytic objective with optional Gaussian observation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import _backend
from .projections import BoxConstraint

__all__ = [
    "Replica",
    "SimSystem",
    "QueueNetworkConfig",
    "QueueNetwork",
    "QueueReplica",
    "EventLog",
    "AnalyticSystem",
    "AnalyticReplica",
    "Quadratic",
    "service_scale",
    "service_time",
    "advance_and_observe",
    "analytic_observe",
    "observe_costs",
]

ARRIVAL_1, ARRIVAL_2, DEPARTURE_1, DEPARTURE_2 = range(4)

SeedLike = int | np.random.SeedSequence


class Replica(Protocol):
    def observe_cost(self, params) -> float: ...


class SimSystem(Protocol):
    def create_replica(self, seed: SeedLike) -> Replica: ...


def observe_costs(replica, params, n: int) -> np.ndarray:
    """``n`` successive observations under fixed ``params``."""
    batch = getattr(replica, "observe_costs", None)
    if batch is not None:
        return batch(params, n)
    return np.array([replica.observe_cost(params) for _ in range(n)], dtype=float)


# --------------------------------------------------------------------------
# queueing network


@dataclass(frozen=True)
class QueueNetworkConfig:
    lambda1: float = 0.2
    lambda2: float = 0.1
    feedback_p: float = 0.4  # probability of leaving after node 2
    R1: float = 10.0
    R2: float = 20.0
    N1: int = 10
    N2: int = 10
    theta_bar: np.ndarray = field(default_factory=lambda: np.full(20, 0.3))
    box: BoxConstraint = field(default_factory=lambda: BoxConstraint.uniform(0.1, 0.6, 20))

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("arrival rates must be positive")
        if not 0.0 < self.feedback_p < 1.0:
            raise ValueError("feedback_p must lie in (0, 1)")
        if not (self.R1 > 0 and self.R2 > 0):
            raise ValueError("R1 and R2 must be positive")
        if self.N1 < 1 or self.N2 < 1:
            raise ValueError("N1 and N2 must be positive")
        tb = np.asarray(self.theta_bar, dtype=float).ravel()
        if tb.size != self.dim:
            raise ValueError(f"theta_bar must have length N1+N2={self.dim}")
        if self.box.dim != self.dim:
            raise ValueError(f"box must have dimension N1+N2={self.dim}")
        object.__setattr__(self, "theta_bar", tb)

    @property
    def dim(self) -> int:
        return self.N1 + self.N2


def service_scale(theta_node, theta_bar_node, R: float) -> float:
    """``(1 + |theta - theta_bar|^2) / R``, the service time for ``u = 1``."""
    diff = np.asarray(theta_node, dtype=float) - np.asarray(theta_bar_node, dtype=float)
    return (1.0 + float(np.dot(diff, diff))) / R


def service_time(node: int, theta_node, theta_bar_node, R: float, u: float) -> float:
    if node not in (1, 2):
        raise ValueError(f"node must be 1 or 2, got {node!r}")
    return u * service_scale(theta_node, theta_bar_node, R)


def _as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


class _UniformStream:
    """Buffered uniforms from one generator, consumed by index in the kernels."""

    CHUNK = 4096

    def __init__(self, seed: np.random.SeedSequence):
        self.gen = np.random.default_rng(seed)
        self.buf = np.empty(0)

    def ensure(self, pos: int, need: int) -> int:
        """Guarantee ``need`` unread draws from ``pos``; return the new position."""
        if self.buf.size - pos >= need:
            return pos
        fresh = self.gen.random(max(self.CHUNK, need))
        self.buf = np.concatenate([self.buf[pos:], fresh])
        return 0


@dataclass
class EventLog:
    costs: np.ndarray
    times: np.ndarray
    kinds: np.ndarray
    in_system: np.ndarray


class QueueReplica:
    """One independent copy of the network.

    Each processed event is an observation epoch; the reported cost is the
    summed time-in-network of every customer present right after the event.
    Customers keep their network-entry time when fed back to node 1.
    Parameters take effect at the next service start.
    """

    def __init__(self, config: QueueNetworkConfig, seed: SeedLike):
        self.config = config
        arrivals, services, routing = _as_seed_sequence(seed).spawn(3)
        self._arrivals = _UniformStream(arrivals)
        self._services = _UniformStream(services)
        self._routing = _UniformStream(routing)
        self.fstate = np.array([0.0, math.inf, math.inf, math.inf, math.inf])
        self.istate = np.zeros(7, dtype=np.int64)
        self.q1 = np.zeros(64)
        self.q2 = np.zeros(64)
        pos = self._arrivals.ensure(0, 2)
        u1, u2 = self._arrivals.buf[pos : pos + 2]
        self.fstate[1] = (-math.log1p(-u1)) / config.lambda1
        self.fstate[2] = (-math.log1p(-u2)) / config.lambda2
        self.istate[4] = pos + 2

    # -- state inspection -------------------------------------------------
    @property
    def clock(self) -> float:
        return float(self.fstate[0])

    def queue_lengths(self) -> tuple[int, int]:
        return int(self.istate[1]), int(self.istate[3])

    def _entries(self, ring, head, count) -> list[float]:
        return [float(ring[(head + k) % ring.size]) for k in range(count)]

    def entry_times(self) -> tuple[list[float], list[float]]:
        """Network-entry times of customers at node 1 and node 2, FIFO order."""
        h1, c1, h2, c2 = (int(v) for v in self.istate[:4])
        return self._entries(self.q1, h1, c1), self._entries(self.q2, h2, c2)

    def current_cost(self) -> float:
        e1, e2 = self.entry_times()
        return sum(self.clock - e for e in e1) + sum(self.clock - e for e in e2)

    def set_state(self, clock, next_arrivals, departures, node1=(), node2=()):
        """Overwrite the event calendar and queues (for constructing scenarios)."""
        node1, node2 = list(node1), list(node2)
        if bool(node1) != math.isfinite(departures[0]) or bool(node2) != math.isfinite(
            departures[1]
        ):
            raise ValueError("a node has a scheduled departure iff it is non-empty")
        times = [*next_arrivals, *departures]
        if any(t < clock for t in times) or any(e > clock for e in node1 + node2):
            raise ValueError("event times must not precede the clock")
        self.fstate[:] = [clock, *next_arrivals, *departures]
        cap = max(64, 2 * max(len(node1), len(node2)))
        self.q1 = np.zeros(cap)
        self.q2 = np.zeros(cap)
        self.q1[: len(node1)] = node1
        self.q2[: len(node2)] = node2
        self.istate[:4] = (0, len(node1), 0, len(node2))

    # -- simulation -------------------------------------------------------
    @staticmethod
    def _grow(ring, head, count, need):
        if ring.size >= need:
            return ring, head
        out = np.zeros(max(2 * ring.size, need))
        idx = (head + np.arange(count)) % ring.size
        out[:count] = ring[idx]
        return out, 0

    def run_events(self, params, n: int) -> EventLog:
        """Process ``n`` events under ``params``, logging each epoch."""
        cfg = self.config
        params = np.asarray(params, dtype=float)
        if params.shape != (cfg.dim,):
            raise ValueError(f"params must have length {cfg.dim}")
        svc1 = service_scale(params[: cfg.N1], cfg.theta_bar[: cfg.N1], cfg.R1)
        svc2 = service_scale(params[cfg.N1 :], cfg.theta_bar[cfg.N1 :], cfg.R2)
        st = self.istate
        st[4] = self._arrivals.ensure(int(st[4]), n)
        st[5] = self._services.ensure(int(st[5]), 2 * n)
        st[6] = self._routing.ensure(int(st[6]), n)
        self.q1, st[0] = self._grow(self.q1, int(st[0]), int(st[1]), int(st[1]) + n)
        self.q2, st[2] = self._grow(self.q2, int(st[2]), int(st[3]), int(st[3]) + n)
        log = EventLog(
            costs=np.empty(n),
            times=np.empty(n),
            kinds=np.empty(n, dtype=np.int8),
            in_system=np.empty(n, dtype=np.int64),
        )
        _backend.simulate_events(
            self.fstate, st, self.q1, self.q2,
            self._arrivals.buf, self._services.buf, self._routing.buf,
            n, svc1, svc2, cfg.lambda1, cfg.lambda2, cfg.feedback_p,
            log.costs, log.times, log.kinds, log.in_system,
        )
        return log

    def observe_costs(self, params, n: int) -> np.ndarray:
        return self.run_events(params, n).costs

    def observe_cost(self, params) -> float:
        return float(self.run_events(params, 1).costs[0])


def advance_and_observe(replica: QueueReplica, params) -> float:
    """Process the next event under ``params`` and return the cost right after it."""
    return replica.observe_cost(params)


@dataclass(frozen=True)
class QueueNetwork:
    config: QueueNetworkConfig = field(default_factory=QueueNetworkConfig)

    def create_replica(self, seed: SeedLike) -> QueueReplica:
        return QueueReplica(self.config, seed)


# --------------------------------------------------------------------------
# analytic objectives


@dataclass(frozen=True)
class AnalyticSystem:
    objective: Callable
    noise_sd: float = 0.0

    def __post_init__(self):
        if not self.noise_sd >= 0:
            raise ValueError("noise_sd must be non-negative")

    def create_replica(self, seed: SeedLike) -> "AnalyticReplica":
        return AnalyticReplica(self, np.random.default_rng(_as_seed_sequence(seed)))


def analytic_observe(sys: AnalyticSystem, params, rng: np.random.Generator) -> float:
    value = float(sys.objective(np.asarray(params, dtype=float)))
    if sys.noise_sd == 0:
        return value
    return value + sys.noise_sd * float(rng.standard_normal())


class AnalyticReplica:
    def __init__(self, system: AnalyticSystem, rng: np.random.Generator):
        self.system = system
        self.rng = rng

    def observe_cost(self, params) -> float:
        return analytic_observe(self.system, params, self.rng)

    def observe_costs(self, params, n: int) -> np.ndarray:
        value = float(self.system.objective(np.asarray(params, dtype=float)))
        out = np.full(n, value)
        if self.system.noise_sd:
            out += self.system.noise_sd * self.rng.standard_normal(n)
        return out


@dataclass(frozen=True)
class Quadratic:
    """``(theta - center)^T A (theta - center)`` with ``A`` symmetric."""

    A: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        c = np.asarray(self.center, dtype=float).ravel()
        if a.shape != (c.size, c.size):
            raise ValueError("A must be square and match center")
        if not np.allclose(a, a.T):
            raise ValueError("A must be symmetric")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "center", c)

    @classmethod
    def isotropic(cls, center) -> "Quadratic":
        c = np.asarray(center, dtype=float).ravel()
        return cls(np.eye(c.size), c)

    def __call__(self, theta) -> np.ndarray | float:
        d = np.asarray(theta, dtype=float) - self.center
        out = np.einsum("...i,ij,...j->...", d, self.A, d)
        return float(out) if out.ndim == 0 else out

    def gradient(self, theta) -> np.ndarray:
        return 2.0 * self.A @ (np.asarray(theta, dtype=float) - self.center)

    def hessian(self) -> np.ndarray:
        return 2.0 * self.A
