# Utils/kernels.py
# ============================================================================
# Compiled inner loop: staggered rhs, explicit RK stages, step control
# ============================================================================
#
# Raw-array twins of Utils/scheme.rhs and Integrator.step. advance_to runs
# every step between two output times without returning to Python; on a
# positivity failure it hands back the offending cell and step size and
# leaves rho/u untouched, so the caller owns the halving logic.

import numpy as np
from numba import njit

OK = 0
NEGATIVE_STAGE = 1
UNDER_FLOOR = 2

TINY = np.finfo(np.float64).tiny

# stats slots filled by advance_to
STEPS, RHS_EVALS, MIN_DT, MAX_DT = 0, 1, 2, 3


@njit(cache=True)
def _pow(x, e):
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    if e == 0.0:
        return 1.0
    if x == 0.0:
        return 0.0 if e > 0.0 else np.inf
    return x ** e


@njit(cache=True)
def _jump(u, i, n, periodic):
    if periodic:
        return (u[0] if i == n - 1 else u[i + 1]) - u[i]
    return u[i + 1] - u[i]


@njit(cache=True)
def _lowest_active(rho, pinned):
    """Index of the smallest non-pinned density (first on ties), -1 when none"""
    best = -1
    for i in range(rho.size):
        if i == pinned:
            continue
        if best < 0 or rho[i] < rho[best]:
            best = i
    return best


@njit(cache=True)
def rhs_into(rho, u, h, periodic, wall_left, wall_right, pinned,
             a1, a2, gamma, alpha, eps, theta, flux, drho, du):
    """Fill drho/du in place. Returns -1, or the lowest active cell when it is non-positive."""
    n = rho.size
    low = _lowest_active(rho, pinned)
    if low >= 0 and rho[low] <= 0.0:
        return low

    for i in range(n):
        r = rho[i]
        jump = _jump(u, i, n, periodic)
        k = a2 * _pow(r, 1.0 + alpha)
        if eps > 0.0:
            k += eps * _pow(r, 1.0 + theta)
        flux[i] = -a1 * _pow(r, gamma) + k * jump / h
        drho[i] = -(r * r) * jump / h
    if pinned >= 0:
        drho[pinned] = 0.0

    if periodic:
        du[0] = (flux[0] - flux[n - 1]) / h
        for j in range(1, n):
            du[j] = (flux[j] - flux[j - 1]) / h
    else:
        for j in range(1, n):
            du[j] = (flux[j] - flux[j - 1]) / h
        # a free end faces vacuum, whose flux is 0
        du[0] = 0.0 if wall_left else flux[0] / h
        du[n] = 0.0 if wall_right else -flux[n - 1] / h
    return -1


@njit(cache=True)
def stable_dt_of(rho, h, a1, a2, gamma, alpha, eps, theta, cfl, dt_max, dt_min):
    max_k = 0.0
    max_c = 0.0
    max_rho = 0.0
    for i in range(rho.size):
        r = rho[i]
        k = a2 * _pow(r, 1.0 + alpha)
        if eps > 0.0:
            k += eps * _pow(r, 1.0 + theta)
        c = np.sqrt(a1 * gamma * _pow(r, gamma - 1.0))
        max_k = max(max_k, k)
        max_c = max(max_c, c)
        max_rho = max(max_rho, r)

    diffusive = h * h / (2.0 * max_k) if max_k > 0.0 else np.inf
    acoustic = h / (max_c * max_rho + TINY)
    dt = cfl * min(diffusive, acoustic, dt_max)
    return min(max(dt, dt_min), dt_max)


@njit(cache=True)
def rates_into(rho, u, h, periodic, a1, a2, gamma, alpha, eps, theta, out):
    """out <- (viscous dissipation, max |u_x|, BD dissipation) of one state"""
    n = rho.size
    dissipation = 0.0
    ux_linf = 0.0
    for i in range(n):
        r = rho[i]
        jump = _jump(u, i, n, periodic)
        k = a2 * _pow(r, 1.0 + alpha)
        if eps > 0.0:
            k += eps * _pow(r, 1.0 + theta)
        grad = jump / h
        dissipation += k * grad * grad
        ux_linf = max(ux_linf, abs(r * jump / h))
    dissipation *= h

    # pressure-gradient part, on nodes; open ends use the nearest cell pair
    pressure_part = 0.0
    n_nodes = n if periodic else n + 1
    for j in range(n_nodes):
        weight = h
        if periodic:
            left = rho[n - 1] if j == 0 else rho[j - 1]
            right = rho[j]
            rho_node = 0.5 * (left + right)
        elif n < 2:
            continue
        elif j == 0:
            left, right = rho[0], rho[1]
            rho_node, weight = rho[0], 0.5 * h
        elif j == n:
            left, right = rho[n - 2], rho[n - 1]
            rho_node, weight = rho[n - 1], 0.5 * h
        else:
            left, right = rho[j - 1], rho[j]
            rho_node = 0.5 * (left + right)
        grad = (right - left) / h
        w = a2 * _pow(rho_node, gamma + alpha - 2.0)
        if eps > 0.0:
            w += eps * _pow(rho_node, gamma + theta - 2.0)
        pressure_part += a1 * gamma * w * grad * grad * weight

    out[0] = dissipation
    out[1] = ux_linf
    out[2] = dissipation + pressure_part


@njit(cache=True)
def _stage(rho, u, k_rho, k_u, dt, out_rho, out_u):
    for i in range(rho.size):
        out_rho[i] = rho[i] + dt * k_rho[i]
    for j in range(u.size):
        out_u[j] = u[j] + dt * k_u[j]


@njit(cache=True)
def step_into(rho, u, origin, dt, h, periodic, wall_left, wall_right, pinned,
              a1, a2, gamma, alpha, eps, theta, stages, floor, work, new_rho, new_u, stats):
    """One explicit step into new_rho/new_u.

    Returns (status, cell, new_origin). work is an (11, N + 1) scratch block.
    """
    n = rho.size
    m = u.size
    flux = work[0, :n]
    s_rho, s_u = work[1, :n], work[2, :m]
    k1r, k1u = work[3, :n], work[4, :m]
    k2r, k2u = work[5, :n], work[6, :m]
    k3r, k3u = work[7, :n], work[8, :m]
    k4r, k4u = work[9, :n], work[10, :m]

    stats[RHS_EVALS] += 1
    bad = rhs_into(rho, u, h, periodic, wall_left, wall_right, pinned, a1, a2, gamma, alpha, eps, theta,
                   flux, k1r, k1u)
    if bad >= 0:
        return NEGATIVE_STAGE, bad, origin
    o1 = u[0]

    if stages == 1:
        for i in range(n):
            new_rho[i] = rho[i] + dt * k1r[i]
        for j in range(m):
            new_u[j] = u[j] + dt * k1u[j]
        new_origin = origin + dt * o1
    elif stages == 2:
        _stage(rho, u, k1r, k1u, dt, s_rho, s_u)
        o2 = s_u[0]
        stats[RHS_EVALS] += 1
        bad = rhs_into(s_rho, s_u, h, periodic, wall_left, wall_right, pinned, a1, a2, gamma, alpha, eps, theta,
                       flux, k2r, k2u)
        if bad >= 0:
            return NEGATIVE_STAGE, bad, origin
        for i in range(n):
            new_rho[i] = rho[i] + dt * (0.5 * k1r[i] + 0.5 * k2r[i])
        for j in range(m):
            new_u[j] = u[j] + dt * (0.5 * k1u[j] + 0.5 * k2u[j])
        new_origin = origin + dt * (0.5 * o1 + 0.5 * o2)
    else:
        _stage(rho, u, k1r, k1u, 0.5 * dt, s_rho, s_u)
        o2 = s_u[0]
        stats[RHS_EVALS] += 1
        bad = rhs_into(s_rho, s_u, h, periodic, wall_left, wall_right, pinned, a1, a2, gamma, alpha, eps, theta,
                       flux, k2r, k2u)
        if bad >= 0:
            return NEGATIVE_STAGE, bad, origin

        _stage(rho, u, k2r, k2u, 0.5 * dt, s_rho, s_u)
        o3 = s_u[0]
        stats[RHS_EVALS] += 1
        bad = rhs_into(s_rho, s_u, h, periodic, wall_left, wall_right, pinned, a1, a2, gamma, alpha, eps, theta,
                       flux, k3r, k3u)
        if bad >= 0:
            return NEGATIVE_STAGE, bad, origin

        _stage(rho, u, k3r, k3u, dt, s_rho, s_u)
        o4 = s_u[0]
        stats[RHS_EVALS] += 1
        bad = rhs_into(s_rho, s_u, h, periodic, wall_left, wall_right, pinned, a1, a2, gamma, alpha, eps, theta,
                       flux, k4r, k4u)
        if bad >= 0:
            return NEGATIVE_STAGE, bad, origin

        w1, w2 = 1.0 / 6.0, 1.0 / 3.0
        for i in range(n):
            new_rho[i] = rho[i] + dt * (w1 * k1r[i] + w2 * k2r[i] + w2 * k3r[i] + w1 * k4r[i])
        for j in range(m):
            new_u[j] = u[j] + dt * (w1 * k1u[j] + w2 * k2u[j] + w2 * k3u[j] + w1 * k4u[j])
        new_origin = origin + dt * (w1 * o1 + w2 * o2 + w2 * o3 + w1 * o4)

    if not periodic:
        if wall_left:
            new_u[0] = 0.0
        if wall_right:
            new_u[m - 1] = 0.0
    if pinned >= 0:
        new_rho[pinned] = 0.0

    low = _lowest_active(new_rho, pinned)
    if low >= 0 and new_rho[low] <= floor:
        return UNDER_FLOOR, low, origin
    return OK, -1, new_origin


@njit(cache=True, nogil=True)
def advance_to(rho, u, clock, target, tol, h, periodic, wall_left, wall_right, pinned,
               a1, a2, gamma, alpha, eps, theta, stages, cfl, dt_max, dt_min, floor,
               rates, history, stats):
    """Step rho/u/clock = (t, origin) up to `target`, trapezoid-accumulating rates into history.

    Returns (status, cell, dt) with dt the rejected step when status != OK.
    """
    n = rho.size
    m = u.size
    work = np.empty((11, n + 1))
    new_rho = np.empty(n)
    new_u = np.empty(m)
    new_rates = np.empty(3)

    while target - clock[0] > tol:
        dt = min(stable_dt_of(rho, h, a1, a2, gamma, alpha, eps, theta, cfl, dt_max, dt_min),
                 target - clock[0])
        status, cell, new_origin = step_into(rho, u, clock[1], dt, h, periodic, wall_left, wall_right, pinned,
                                             a1, a2, gamma, alpha, eps, theta, stages, floor,
                                             work, new_rho, new_u, stats)
        if status != OK:
            return status, cell, dt

        rho[:] = new_rho
        u[:] = new_u
        clock[0] += dt
        if abs(clock[0] - target) <= tol:
            clock[0] = target
        clock[1] = new_origin

        rates_into(rho, u, h, periodic, a1, a2, gamma, alpha, eps, theta, new_rates)
        for q in range(3):
            history[q] += 0.5 * dt * (rates[q] + new_rates[q])
            rates[q] = new_rates[q]

        stats[STEPS] += 1
        stats[MIN_DT] = min(stats[MIN_DT], dt)
        stats[MAX_DT] = max(stats[MAX_DT], dt)
    return OK, -1, 0.0
