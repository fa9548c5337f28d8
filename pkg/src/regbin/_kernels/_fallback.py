"""Pure-Python RK4 core; same contract as the compiled ``_rk4`` module."""

from __future__ import annotations

import math

import numpy as np

OP_VAR, OP_NOT, OP_AND, OP_OR = 0, 1, 2, 3


def _hill_plus(x: float, theta: float, n: float) -> float:
    if x <= 0.0:
        return 0.0
    r = theta / x
    if r > 1.0:
        p = (x / theta) ** n
        return p / (1.0 + p)
    p = r**n
    return 1.0 / (1.0 + p)


def _make_rhs(ops, args, starts, kappa, gamma, theta, hill_n):
    ops = [int(o) for o in ops]
    args = [int(a) for a in args]
    starts = [int(s) for s in starts]
    kappa = [float(v) for v in kappa]
    gamma = [float(v) for v in gamma]
    theta = [float(v) for v in theta]
    hill_n = [float(v) for v in hill_n]
    programs = [
        list(zip(ops[starts[g] : starts[g + 1]], args[starts[g] : starts[g + 1]]))
        for g in range(len(kappa))
    ]

    def f(x: list[float]) -> list[float]:
        out = []
        for g, prog in enumerate(programs):
            if not prog:
                out.append(-gamma[g] * x[g])
                continue
            stack: list[float] = []
            for op, a in prog:
                if op == OP_VAR:
                    stack.append(_hill_plus(x[a], theta[a], hill_n[a]))
                elif op == OP_NOT:
                    stack[-1] = 1.0 - stack[-1]
                elif op == OP_AND:
                    b = stack.pop()
                    stack[-1] = stack[-1] * b
                else:
                    b = stack.pop()
                    stack[-1] = stack[-1] + b - stack[-1] * b
            out.append(kappa[g] * stack[0] - gamma[g] * x[g])
        return out

    return f


def rhs(ops, args, starts, kappa, gamma, theta, hill_n, x):
    f = _make_rhs(ops, args, starts, kappa, gamma, theta, hill_n)
    return np.asarray(f([float(v) for v in x]), dtype=float)


def integrate(ops, args, starts, kappa, gamma, theta, hill_n, x0, dt, n_steps, record_every=1):
    f = _make_rhs(ops, args, starts, kappa, gamma, theta, hill_n)
    n = len(x0)
    x = [float(v) for v in x0]
    half, sixth = 0.5 * dt, dt / 6.0
    states, derivs, steps = [], [], []
    failed = -1
    for i in range(n_steps):
        k1 = f(x)
        recorded = i % record_every == 0
        if recorded:
            states.append(list(x))
            derivs.append(k1)
            steps.append(i)
        k2 = f([x[g] + half * k1[g] for g in range(n)])
        k3 = f([x[g] + half * k2[g] for g in range(n)])
        k4 = f([x[g] + dt * k3[g] for g in range(n)])
        new = [x[g] + sixth * (k1[g] + 2.0 * k2[g] + 2.0 * k3[g] + k4[g]) for g in range(n)]
        if not all(math.isfinite(v) for v in new):
            failed = i
            if not recorded:
                states.append(list(x))
                derivs.append(k1)
                steps.append(i)
            break
        x = [v if v > 0.0 else 0.0 for v in new]
    if failed < 0:
        states.append(list(x))
        derivs.append(f(x))
        steps.append(n_steps)
    shape = (len(states), n)
    return (
        np.asarray(states, dtype=float).reshape(shape),
        np.asarray(derivs, dtype=float).reshape(shape),
        np.asarray(steps, dtype=np.int64),
        failed,
    )
