"""Independent reference computations used only by the tests.

None of these share code paths with the package under test.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def incomplete_beta_quadrature(x: float, a: float, b: float) -> float:
    """Integrate the Beta(a, b) density from 0 to x with adaptive quadrature."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_norm = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    def density(t: float) -> float:
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return math.exp((a - 1.0) * math.log(t) + (b - 1.0) * math.log1p(-t) - log_norm)

    breaks = []
    if a > 1.0 and b > 1.0:
        mode = (a - 1.0) / (a + b - 2.0)
        if 0.0 < mode < x:
            breaks.append(mode)
    value, _ = integrate.quad(density, 0.0, x, points=breaks or None, epsabs=1e-14, epsrel=1e-13, limit=500)
    return value


def incomplete_beta_a_b2(x: float, a: float) -> float:
    """Closed form I_x(a, 2) = x^a ((a + 1) - a x)."""
    return x**a * ((a + 1.0) - a * x)


def approval_scipy(successes: int, failures: int, p0: float, alpha0: float = 1.0, beta0: float = 1.0) -> float:
    return float(special.betaincc(alpha0 + successes, beta0 + failures, p0))


def brute_force_sessions(outcomes: np.ndarray, p0=0.95, tau_a=0.95, tau_r=0.05, n_min=30, n_max=100):
    """Loop over each session and rollout, recomputing q with scipy at every step.

    Returns ``(decision strings, stopping times)``.
    """
    decisions, stops = [], []
    for row in np.asarray(outcomes):
        s = 0
        decision, stop = "Continue", n_max
        for n in range(1, n_max + 1):
            s += int(row[n - 1])
            if n < n_min:
                continue
            q = approval_scipy(s, n - s, p0)
            if q >= tau_a:
                decision, stop = "Approve", n
                break
            if q <= tau_r:
                decision, stop = "Reject", n
                break
        decisions.append(decision)
        stops.append(stop)
    return decisions, np.array(stops)


def exact_session_probabilities(p: float, p0=0.95, tau_a=0.95, tau_r=0.05, n_min=30, n_max=100):
    """Exact (approve, reject, exhaust) probabilities by forward recursion over success counts."""
    running = np.zeros(n_max + 1)
    running[0] = 1.0
    approve = reject = 0.0
    for n in range(1, n_max + 1):
        nxt = np.zeros(n_max + 1)
        nxt[1:] += running[:-1] * p
        nxt += running * (1.0 - p)
        for s in range(n + 1):
            if n >= n_min and nxt[s] > 0.0:
                q = approval_scipy(s, n - s, p0)
                if q >= tau_a:
                    approve += nxt[s]
                    nxt[s] = 0.0
                elif q <= tau_r:
                    reject += nxt[s]
                    nxt[s] = 0.0
        running = nxt
    return approve, reject, float(running.sum())


def projectile(x0, z0, vx0, vz0, t, g=1.0):
    return x0 + vx0 * t, z0 + vz0 * t - 0.5 * g * t * t
