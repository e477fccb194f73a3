"""Numerical drift of first integrals along the Hamiltonian flow.

t and l are Casimirs of the bracket, so they are frozen parameters of the
flow in (q, p). Polynomials are evaluated with compensated summation
(``math.fsum`` on real and imaginary parts) and integrated with classical
fixed-step RK4 on complex arrays.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .series import Series


class BlowUp(ArithmeticError):
    pass


class PolyEval:
    """A series restricted to (q, p) after freezing (t, l) at given values."""

    def __init__(self, f: Series, t_star, lam_star):
        n = f.n
        g = f.substitute("t", t_star).substitute("l", lam_star)
        self.n = n
        self.exps = g.exps[:, 2 * n:] if g.keys.size else np.zeros((0, 2 * n), np.int64)
        self.coeffs = g.coeffs.copy()

    def terms(self, z: np.ndarray) -> np.ndarray:
        return self.coeffs * np.prod(z[None, :] ** self.exps, axis=1)

    def __call__(self, z) -> complex:
        v = self.terms(np.asarray(z, np.complex128))
        return complex(math.fsum(v.real), math.fsum(v.imag))


def hamiltonian_field(H: Series, t_star, lam_star):
    """z = (q, p) -> (dH/dp, -dH/dq)."""
    n = H.n
    lay = H.layout
    dp = [PolyEval(H.diff(lay.p(i)), t_star, lam_star) for i in range(n)]
    dq = [PolyEval(H.diff(lay.q(i)), t_star, lam_star) for i in range(n)]

    def field(z):
        return np.array([f(z) for f in dp] + [-f(z) for f in dq], np.complex128)

    return field


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray


def integrate(field, z0, horizon: float, step: float, every: int = 1) -> Trajectory:
    """Classical RK4; samples every ``every`` steps (and the final state)."""
    if step <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(z0, np.complex128).copy()
    nsteps = max(1, int(round(horizon / step)))
    h = horizon / nsteps
    times, states = [0.0], [z.copy()]
    for s in range(1, nsteps + 1):
        k1 = field(z)
        k2 = field(z + 0.5 * h * k1)
        k3 = field(z + 0.5 * h * k2)
        k4 = field(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise BlowUp(f"nonfinite state at tau = {s * h}")
        if s % every == 0 or s == nsteps:
            times.append(s * h)
            states.append(z.copy())
    return Trajectory(np.array(times), np.array(states))


def solve_parameters(integrals, z0, t_star, lam_guess, iters: int = 50, tol: float = 1e-15):
    """l with K_m(z0; t*, l) = 0 for all m (Newton on the l block).

    Placing z0 on the level set K = 0 makes it a point of the invariant manifold.
    """
    K0 = integrals[0]
    n = K0.n
    lay = K0.layout
    z0 = np.asarray(z0, np.complex128)
    partial = [[K.diff(lay.lam(j)) for j in range(n)] for K in integrals]
    lam = np.asarray(lam_guess, np.complex128).copy()
    for _ in range(iters):
        F = np.array([PolyEval(K, t_star, lam)(z0) for K in integrals])
        J = np.array([[PolyEval(d, t_star, lam)(z0) for d in row] for row in partial])
        delta = np.linalg.solve(J, -F)
        lam = lam + delta
        if np.abs(delta).max() <= tol * max(1.0, np.abs(lam).max()):
            break
    return lam


@dataclass
class FlowConfig:
    t_star: list
    z0: list
    horizon: float = 1.0
    step: float = 1e-3
    lambda_star: list | None = None  # None: solve K(z0) = 0
    scales: tuple = (1.0, 0.5, 0.25)

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if np.abs(np.asarray(self.t_star, complex)).max(initial=0.0) > 0.1:
            raise ValueError("|t*| must not exceed 0.1")


@dataclass
class DriftReport:
    scales: list
    drift: list  # drift[s][m]
    energy_drift: list
    lambda_star: list
    slopes: list  # per integral, log2 drift ratio between consecutive scales
    trajectory: Trajectory | None = field(default=None, repr=False)

    def max_drift(self, scale_index: int = 0) -> float:
        return max(self.drift[scale_index])

    def to_json(self) -> dict:
        return {
            "scales": self.scales,
            "drift": self.drift,
            "energy_drift": self.energy_drift,
            "lambda_star": [[[complex(x).real, complex(x).imag] for x in row] for row in self.lambda_star],
            "slopes": self.slopes,
        }


def _drift_one(H, integrals, cfg: FlowConfig, z0, keep: bool):
    n = H.n
    lam = cfg.lambda_star
    if lam is None:
        guess = [z0[i] * z0[n + i] for i in range(n)]
        lam = solve_parameters(integrals, z0, cfg.t_star, guess)
    field = hamiltonian_field(H, cfg.t_star, lam)
    traj = integrate(field, z0, cfg.horizon, cfg.step)
    evals = [PolyEval(K, cfg.t_star, lam) for K in integrals]
    energy = PolyEval(H, cfg.t_star, lam)
    drift = []
    for ev in evals:
        k0 = ev(traj.states[0])
        drift.append(max(abs(ev(z) - k0) for z in traj.states))
    e0 = energy(traj.states[0])
    edrift = max(abs(energy(z) - e0) for z in traj.states)
    return drift, edrift, list(np.asarray(lam)), traj if keep else None


def drift_report(H: Series, integrals, cfg: FlowConfig, keep_trajectory: bool = False) -> DriftReport:
    """max_tau |K_m(z(tau)) - K_m(z0)| for z0 scaled by each factor in ``cfg.scales``."""
    base = np.asarray(cfg.z0, np.complex128)
    drift, energy, lams, traj = [], [], [], None
    for i, s in enumerate(cfg.scales):
        d, e, lam, tr = _drift_one(H, integrals, cfg, base * s, keep_trajectory and i == 0)
        drift.append(d)
        energy.append(e)
        lams.append(lam)
        traj = traj or tr
    slopes = []
    for m in range(len(integrals)):
        row = []
        for a, b, sa, sb in zip(drift, drift[1:], cfg.scales, cfg.scales[1:]):
            if a[m] > 0 and b[m] > 0:
                row.append(math.log(a[m] / b[m]) / math.log(sa / sb))
            else:
                row.append(None)
        slopes.append(row)
    return DriftReport(list(cfg.scales), drift, energy, lams, slopes, traj)


def trajectory_csv(traj: Trajectory, integrals, t_star, lam_star) -> str:
    n = integrals[0].n
    evals = [PolyEval(K, t_star, lam_star) for K in integrals]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
               + [f"K{m + 1}" for m in range(len(integrals))])
    for tau, z in zip(traj.times, traj.states):
        w.writerow([repr(float(tau))] + [repr(complex(x)) for x in z] + [repr(ev(z)) for ev in evals])
    return buf.getvalue()


def report_json(report: DriftReport, config: dict) -> str:
    return json.dumps({"schema_version": 1, "config": config, **report.to_json()}, sort_keys=True, indent=1)


def quadrature_drift(H: Series, integrals, cfg: FlowConfig) -> dict:
    """Drift estimated as max_tau |int_0^tau {K_m, H}(z(s)) ds| (trapezoid rule).

    Avoids the cancellation in K_m(z(tau)) - K_m(z0), whose rounding floor is
    about eps * |K_m|; reported as a diagnostic next to ``drift_report``.
    """
    from .series import poisson
    n = H.n
    base = np.asarray(cfg.z0, np.complex128)
    drift = []
    for s in cfg.scales:
        z0 = base * s
        lam = cfg.lambda_star
        if lam is None:
            lam = solve_parameters(integrals, z0, cfg.t_star, [z0[i] * z0[n + i] for i in range(n)])
        traj = integrate(hamiltonian_field(H, cfg.t_star, lam), z0, cfg.horizon, cfg.step)
        dt = np.diff(traj.times)
        row = []
        for K in integrals:
            rate = PolyEval(poisson(K, H), cfg.t_star, lam)
            v = np.array([rate(z) for z in traj.states])
            cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (v[1:] + v[:-1]))])
            row.append(float(np.abs(cum).max()))
        drift.append(row)
    slopes = [[math.log(a[m] / b[m]) / math.log(sa / sb) if a[m] > 0 and b[m] > 0 else None
               for a, b, sa, sb in zip(drift, drift[1:], cfg.scales, cfg.scales[1:])]
              for m in range(len(integrals))]
    return {"scales": list(cfg.scales), "drift": drift, "slopes": slopes}
