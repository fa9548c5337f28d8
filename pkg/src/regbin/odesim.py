"""Hill-function ODE models of Boolean networks.

A rule is mapped onto ``[0, 1]`` by replacing each variable with the
activating Hill function of its concentration, NOT with ``1 - v``, AND with a
product and OR with the probabilistic sum ``a + b - ab``. Each gene then obeys

    dx_g/dt = kappa_rate_g * rule_g(x) - gamma_g * x_g

and rule-less genes simply decay.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import _kernels
from .graph import And, BoolExpr, BooleanNetwork, Not, Or, Var
from .profile import BinaryProfile, Provenance, TriState

DEFAULT_HILL_N = 4.0


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_valid_time: float):
        super().__init__(f"{message} (last valid time {last_valid_time:g})")
        self.last_valid_time = last_valid_time


class SnapshotRangeError(ValueError):
    pass


def hill_plus(x: float, theta: float, n: float = DEFAULT_HILL_N) -> float:
    """Activating Hill function ``x^n / (x^n + theta^n)``."""
    if x <= 0.0:
        return 0.0
    r = theta / x
    if r > 1.0:
        p = (x / theta) ** n
        return p / (1.0 + p)
    return 1.0 / (1.0 + r**n)


def hill_minus(x: float, theta: float, n: float = DEFAULT_HILL_N) -> float:
    """Repressing Hill function ``theta^n / (x^n + theta^n)``."""
    if x <= 0.0:
        return 1.0
    r = theta / x
    if r > 1.0:
        p = (x / theta) ** n
        return 1.0 / (1.0 + p)
    p = r**n
    return p / (1.0 + p)


@dataclass(frozen=True)
class HillParams:
    kappa_rate: Mapping[str, float]
    gamma: Mapping[str, float]
    theta: Mapping[str, float]
    hill_n: Union[float, Mapping[str, float]] = DEFAULT_HILL_N

    def __post_init__(self):
        for name in ("kappa_rate", "gamma", "theta"):
            table = getattr(self, name)
            object.__setattr__(self, name, {g: float(v) for g, v in sorted(table.items())})
            for g, v in getattr(self, name).items():
                if not (v > 0 and math.isfinite(v)):
                    raise ValueError(f"{name}[{g}] must be positive and finite, got {v}")
        if isinstance(self.hill_n, Mapping):
            object.__setattr__(self, "hill_n", {g: float(v) for g, v in sorted(self.hill_n.items())})
            bad = {g: v for g, v in self.hill_n.items() if not v >= 1}
        else:
            object.__setattr__(self, "hill_n", float(self.hill_n))
            bad = {} if self.hill_n >= 1 else {"*": self.hill_n}
        if bad:
            raise ValueError(f"Hill exponent must be >= 1: {bad}")
        for g, th in self.theta.items():
            k, gam = self.kappa_rate.get(g), self.gamma.get(g)
            if k is not None and gam is not None and th >= k / gam:
                warnings.warn(
                    f"theta[{g}]={th:g} is not below the saturation level {k / gam:g}",
                    stacklevel=3,
                )

    def n_of(self, gene: str) -> float:
        if isinstance(self.hill_n, Mapping):
            return self.hill_n.get(gene, DEFAULT_HILL_N)
        return self.hill_n

    def missing(self, genes: Sequence[str]) -> list[str]:
        return [
            g for g in genes if g not in self.kappa_rate or g not in self.gamma or g not in self.theta
        ]

    def to_dict(self) -> dict:
        genes = sorted(set(self.kappa_rate) | set(self.gamma) | set(self.theta))
        return {
            "genes": {
                g: {
                    "kappa_rate": self.kappa_rate.get(g),
                    "gamma": self.gamma.get(g),
                    "theta": self.theta.get(g),
                    "hill_n": self.n_of(g),
                }
                for g in genes
            }
        }


def continuous_extension(expr: BoolExpr, state: Mapping[str, float], params: HillParams) -> float:
    if isinstance(expr, Var):
        g = expr.name
        return hill_plus(state[g], params.theta[g], params.n_of(g))
    if isinstance(expr, Not):
        return 1.0 - continuous_extension(expr.arg, state, params)
    if isinstance(expr, And):
        out = 1.0
        for a in expr.args:
            out *= continuous_extension(a, state, params)
        return out
    if isinstance(expr, Or):
        out = 0.0
        for a in expr.args:
            v = continuous_extension(a, state, params)
            out = out + v - out * v
        return out
    raise TypeError(f"not a Boolean expression: {expr!r}")


def _compile(expr: BoolExpr, index: Mapping[str, int], ops: list[int], args: list[int]) -> None:
    if isinstance(expr, Var):
        ops.append(_kernels.OP_VAR)
        args.append(index[expr.name])
    elif isinstance(expr, Not):
        _compile(expr.arg, index, ops, args)
        ops.append(_kernels.OP_NOT)
        args.append(0)
    else:
        op = _kernels.OP_AND if isinstance(expr, And) else _kernels.OP_OR
        _compile(expr.args[0], index, ops, args)
        for a in expr.args[1:]:
            _compile(a, index, ops, args)
            ops.append(op)
            args.append(0)


@dataclass(frozen=True)
class HillOdeSystem:
    network: BooleanNetwork
    params: HillParams
    genes: tuple[str, ...] = field(init=False)
    ops: np.ndarray = field(init=False, repr=False)
    args: np.ndarray = field(init=False, repr=False)
    starts: np.ndarray = field(init=False, repr=False)
    kappa: np.ndarray = field(init=False, repr=False)
    gamma: np.ndarray = field(init=False, repr=False)
    theta: np.ndarray = field(init=False, repr=False)
    hill_n: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        genes = self.network.genes
        missing = self.params.missing(genes)
        if missing:
            raise ValueError(f"missing Hill parameters for {missing}")
        index = {g: i for i, g in enumerate(genes)}
        ops: list[int] = []
        args: list[int] = []
        starts = [0]
        for g in genes:
            rule = self.network.rule(g)
            if rule is not None:
                _compile(rule, index, ops, args)
            starts.append(len(ops))
        p = self.params
        setattr_ = object.__setattr__
        setattr_(self, "genes", genes)
        setattr_(self, "ops", np.asarray(ops, dtype=np.intc))
        setattr_(self, "args", np.asarray(args, dtype=np.intc))
        setattr_(self, "starts", np.asarray(starts, dtype=np.intc))
        setattr_(self, "kappa", np.array([p.kappa_rate[g] for g in genes]))
        setattr_(self, "gamma", np.array([p.gamma[g] for g in genes]))
        setattr_(self, "theta", np.array([p.theta[g] for g in genes]))
        setattr_(self, "hill_n", np.array([p.n_of(g) for g in genes]))
        for arr in (self.ops, self.args, self.starts, self.kappa, self.gamma, self.theta, self.hill_n):
            arr.setflags(write=False)

    @property
    def dimension(self) -> int:
        return len(self.genes)

    def _kernel_args(self):
        return (self.ops, self.args, self.starts, self.kappa, self.gamma, self.theta, self.hill_n)

    def vector(self, values: Mapping[str, float] | Sequence[float]) -> np.ndarray:
        if isinstance(values, Mapping):
            missing = [g for g in self.genes if g not in values]
            if missing:
                raise ValueError(f"missing values for {missing}")
            return np.array([float(values[g]) for g in self.genes])
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} values, got shape {arr.shape}")
        return arr

    def rhs(self, x: Mapping[str, float] | Sequence[float], backend: str | None = None) -> np.ndarray:
        kern = _kernels.get_backend(backend)
        return kern.rhs(*self._kernel_args(), np.ascontiguousarray(self.vector(x)))


def build_ode(net: BooleanNetwork, params: HillParams) -> HillOdeSystem:
    return HillOdeSystem(net, params)


@dataclass(frozen=True)
class Trajectory:
    genes: tuple[str, ...]
    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    dt: float
    integrator: str = "rk4"

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def column(self, gene: str) -> np.ndarray:
        return self.states[:, self.genes.index(gene)]

    def state_at(self, i: int) -> dict[str, float]:
        return {g: float(v) for g, v in zip(self.genes, self.states[i])}


def integrate_rk4(
    system: HillOdeSystem,
    x0: Mapping[str, float] | Sequence[float],
    t_end: float,
    dt: float,
    *,
    record_every: int = 1,
    backend: str | None = None,
) -> Trajectory:
    """Fixed-step classical RK4 from ``t=0`` to ``t_end``.

    Negative components are clamped to zero after every step. If ``t_end`` is
    not a multiple of ``dt`` the last step is shortened to land on ``t_end``.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError(f"t_end must be positive, got {t_end}")
    if dt > t_end:
        raise ValueError("dt must not exceed t_end")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    x = system.vector(x0)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial condition must be finite")
    if np.any(x < 0):
        raise ValueError("initial condition must be non-negative")
    kern = _kernels.get_backend(backend)
    n_full = int(math.floor(t_end / dt + 1e-9))
    remainder = t_end - n_full * dt
    states, derivs, steps, failed = kern.integrate(
        *system._kernel_args(), np.ascontiguousarray(x), float(dt), n_full, int(record_every)
    )
    times = np.asarray(steps, dtype=float) * dt
    if failed >= 0:
        raise IntegrationError(f"non-finite state at step {failed}", float(times[-1]))
    if remainder > 1e-9 * dt:
        s2, d2, _, failed = kern.integrate(
            *system._kernel_args(), np.ascontiguousarray(states[-1]), float(remainder), 1, 1
        )
        if failed >= 0:
            raise IntegrationError("non-finite state in final step", float(times[-1]))
        states = np.vstack([states, s2[-1:]])
        derivs = np.vstack([derivs, d2[-1:]])
        times = np.append(times, t_end)
    return Trajectory(system.genes, times, states, derivs, float(dt))


def detect_steady_state(traj: Trajectory, tol: float, window: float) -> float | None:
    """Earliest time by which the derivative max-norm has stayed below ``tol``
    for ``window`` time units and remains so to the end of the trajectory."""
    if tol <= 0 or window <= 0:
        raise ValueError("tol and window must be positive")
    span = traj.t_end - float(traj.times[0])
    if span < window:
        raise ValueError(f"trajectory span {span:g} shorter than window {window:g}")
    quiet = np.max(np.abs(traj.derivatives), axis=1) < tol if traj.derivatives.size else np.ones(len(traj), bool)
    loud = np.flatnonzero(~quiet)
    if loud.size == 0:
        start = float(traj.times[0])
    elif loud[-1] == len(traj) - 1:
        return None
    else:
        start = float(traj.times[loud[-1] + 1])
    target = start + window
    eps = 1e-9 * max(1.0, abs(target))
    if target > traj.t_end + eps:
        return None
    i = int(np.searchsorted(traj.times, target - eps))
    return float(traj.times[i])


@dataclass(frozen=True)
class Snapshot:
    time: float
    values: Mapping[str, float]


@dataclass(frozen=True)
class AtTimes:
    times: tuple[float, ...]

    def resolve(self, traj: Trajectory) -> tuple[float, ...]:
        return tuple(float(t) for t in self.times)


@dataclass(frozen=True)
class LateK:
    k: int = 3
    spacing: float = 5.0

    def resolve(self, traj: Trajectory) -> tuple[float, ...]:
        if self.k < 0:
            raise ValueError("k must be non-negative")
        return tuple(traj.t_end - (self.k - 1 - i) * self.spacing for i in range(self.k))


SnapshotPolicy = Union[AtTimes, LateK]


def extract_snapshots(traj: Trajectory, policy: SnapshotPolicy) -> list[Snapshot]:
    t0, t1 = float(traj.times[0]), traj.t_end
    tol = 0.5 * traj.dt + 1e-12
    out = []
    for t in policy.resolve(traj):
        if t < t0 - tol or t > t1 + tol:
            raise SnapshotRangeError(f"snapshot time {t:g} outside trajectory [{t0:g}, {t1:g}]")
        i = int(np.argmin(np.abs(traj.times - t)))
        out.append(Snapshot(float(traj.times[i]), traj.state_at(i)))
    return out


def threshold_binarize(snapshot: Snapshot, params: HillParams) -> BinaryProfile:
    """Ground-truth profile: One when the value reaches its threshold (``>=``)."""
    missing = [g for g in snapshot.values if g not in params.theta]
    if missing:
        raise ValueError(f"no threshold for {missing}")
    return BinaryProfile.from_states(
        {g: TriState.ONE if v >= params.theta[g] else TriState.ZERO for g, v in snapshot.values.items()},
        Provenance.THRESHOLD,
    )
