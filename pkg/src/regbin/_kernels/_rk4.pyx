# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 core for Hill-function ODE systems.

Each gene's rule is a postfix program over four opcodes (see
``regbin._kernels.OP_*``). The right-hand side is
``kappa_g * program_g(x) - gamma_g * x_g``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, isfinite

cnp.import_array()

cdef enum:
    OP_VAR = 0
    OP_NOT = 1
    OP_AND = 2
    OP_OR = 3


cdef inline double _hill_plus(double x, double theta, double n) noexcept nogil:
    cdef double r, p
    if x <= 0.0:
        return 0.0
    r = theta / x
    if r > 1.0:
        p = pow(x / theta, n)
        return p / (1.0 + p)
    p = pow(r, n)
    return 1.0 / (1.0 + p)


cdef void _rhs(const int[:] ops, const int[:] args, const int[:] starts,
               const double[:] kappa, const double[:] gamma,
               const double[:] theta, const double[:] hill_n,
               const double* x, double* out, double* stack, int ngenes) noexcept nogil:
    cdef int g, k, sp, a
    for g in range(ngenes):
        if starts[g] == starts[g + 1]:
            out[g] = -gamma[g] * x[g]
            continue
        sp = 0
        for k in range(starts[g], starts[g + 1]):
            if ops[k] == OP_VAR:
                a = args[k]
                stack[sp] = _hill_plus(x[a], theta[a], hill_n[a])
                sp += 1
            elif ops[k] == OP_NOT:
                stack[sp - 1] = 1.0 - stack[sp - 1]
            elif ops[k] == OP_AND:
                stack[sp - 2] = stack[sp - 2] * stack[sp - 1]
                sp -= 1
            else:
                stack[sp - 2] = stack[sp - 2] + stack[sp - 1] - stack[sp - 2] * stack[sp - 1]
                sp -= 1
        out[g] = kappa[g] * stack[0] - gamma[g] * x[g]


def rhs(const int[:] ops, const int[:] args, const int[:] starts,
        const double[:] kappa, const double[:] gamma, const double[:] theta,
        const double[:] hill_n, const double[:] x):
    cdef int ngenes = x.shape[0]
    out = np.zeros(ngenes)
    if ngenes == 0:
        return out
    cdef double[::1] outv = out
    cdef double[::1] xc = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] stack = np.zeros(max(ops.shape[0], 1))
    _rhs(ops, args, starts, kappa, gamma, theta, hill_n, &xc[0], &outv[0], &stack[0], ngenes)
    return out


def integrate(const int[:] ops, const int[:] args, const int[:] starts,
              const double[:] kappa, const double[:] gamma, const double[:] theta,
              const double[:] hill_n, const double[:] x0, double dt, long n_steps,
              long record_every=1):
    """Fixed-step RK4 with non-negativity clamping.

    Returns ``(states, derivs, steps, failed_step)``. ``steps`` holds the step
    index of each recorded row. ``failed_step`` is -1 on success, otherwise the
    index of the first step producing a non-finite state; rows then end at the
    last valid state.
    """
    cdef int ngenes = x0.shape[0]
    cdef long n_rec = n_steps // record_every + 1
    if n_steps % record_every:
        n_rec += 1
    states_arr = np.zeros((n_rec, ngenes))
    derivs_arr = np.zeros((n_rec, ngenes))
    steps_arr = np.zeros(n_rec, dtype=np.int64)
    cdef double[:, ::1] states = states_arr
    cdef double[:, ::1] derivs = derivs_arr
    cdef long long[::1] steps = steps_arr
    cdef cnp.ndarray[double, ndim=1] buf = np.zeros(6 * ngenes + max(ops.shape[0], 1))
    cdef double* x = &buf[0]
    cdef double* k1 = x + ngenes
    cdef double* k2 = k1 + ngenes
    cdef double* k3 = k2 + ngenes
    cdef double* k4 = k3 + ngenes
    cdef double* tmp = k4 + ngenes
    cdef double* stack = tmp + ngenes
    cdef long i, row = 0
    cdef int g
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef long failed = -1
    cdef bint recorded

    for g in range(ngenes):
        x[g] = x0[g]
    with nogil:
        for i in range(n_steps):
            _rhs(ops, args, starts, kappa, gamma, theta, hill_n, x, k1, stack, ngenes)
            recorded = i % record_every == 0
            if recorded:
                for g in range(ngenes):
                    states[row, g] = x[g]
                    derivs[row, g] = k1[g]
                steps[row] = i
                row += 1
            for g in range(ngenes):
                tmp[g] = x[g] + half * k1[g]
            _rhs(ops, args, starts, kappa, gamma, theta, hill_n, tmp, k2, stack, ngenes)
            for g in range(ngenes):
                tmp[g] = x[g] + half * k2[g]
            _rhs(ops, args, starts, kappa, gamma, theta, hill_n, tmp, k3, stack, ngenes)
            for g in range(ngenes):
                tmp[g] = x[g] + dt * k3[g]
            _rhs(ops, args, starts, kappa, gamma, theta, hill_n, tmp, k4, stack, ngenes)
            for g in range(ngenes):
                tmp[g] = x[g] + sixth * (k1[g] + 2.0 * k2[g] + 2.0 * k3[g] + k4[g])
                if not isfinite(tmp[g]):
                    failed = i
            if failed >= 0:
                if not recorded:
                    for g in range(ngenes):
                        states[row, g] = x[g]
                        derivs[row, g] = k1[g]
                    steps[row] = i
                    row += 1
                break
            for g in range(ngenes):
                x[g] = tmp[g] if tmp[g] > 0.0 else 0.0
        if failed < 0:
            _rhs(ops, args, starts, kappa, gamma, theta, hill_n, x, k1, stack, ngenes)
            for g in range(ngenes):
                states[row, g] = x[g]
                derivs[row, g] = k1[g]
            steps[row] = n_steps
            row += 1
    return states_arr[:row], derivs_arr[:row], steps_arr[:row], failed
