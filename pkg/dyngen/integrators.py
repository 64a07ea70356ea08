"""Explicit fixed-step integrators for first-order systems dx/dt = f(t, x, u).

States may carry a leading batch axis; every operation is elementwise over it.
"""

import numpy as np


class Integrator:
    """Integrator for a system of first-order ordinary differential equations
    of the form \\dot x = f(t, x, u).
    """

    def __init__(self, dt: float, f):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt
        self.f = f

    def step(self, t: float, x: np.ndarray, u=None) -> np.ndarray:
        raise NotImplementedError


class Euler(Integrator):
    def step(self, t, x, u=None):
        return x + self.dt * self.f(t, x, u)


class RungeKutta4(Integrator):
    def step(self, t, x, u=None):
        dt = self.dt
        k1 = self.f(t, x, u)
        k2 = self.f(t + 0.5 * dt, x + 0.5 * dt * k1, u)
        k3 = self.f(t + 0.5 * dt, x + 0.5 * dt * k2, u)
        k4 = self.f(t + dt, x + dt * k3, u)
        return x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


class AdamsBashforth3(Integrator):
    """Third-order Adams-Bashforth.

    The two startup steps use RK4 so the scheme keeps third-order global
    accuracy; derivatives at those points are still recorded for the
    multistep formula.
    """

    def __init__(self, dt, f):
        super().__init__(dt, f)
        self._starter = RungeKutta4(dt, f)
        self._f_prev: list[np.ndarray] = []

    def reset(self):
        self._f_prev = []

    def step(self, t, x, u=None):
        fn = self.f(t, x, u)
        if len(self._f_prev) < 2:
            self._f_prev.append(fn)
            return self._starter.step(t, x, u)
        f1, f2 = self._f_prev[-1], self._f_prev[-2]
        x_next = x + self.dt / 12.0 * (23.0 * fn - 16.0 * f1 + 5.0 * f2)
        self._f_prev = [f1, fn]
        return x_next


def get_integrator(dt, f, integrator="AB3"):
    """Factory for integrators: Euler, RK4, AB3"""
    integrators = dict(
        Euler=Euler,
        RK4=RungeKutta4,
        AB3=AdamsBashforth3,
    )
    return integrators[integrator](dt, f)


def first_nonfinite(series: np.ndarray) -> int | None:
    """Index along the last axis of the first non-finite entry, or None."""
    bad = ~np.isfinite(series)
    if not bad.any():
        return None
    cols = np.nonzero(bad.reshape(-1, series.shape[-1]).any(axis=0))[0]
    return int(cols[0])
