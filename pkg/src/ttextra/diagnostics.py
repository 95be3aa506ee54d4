"""Augmented Lagrangian, potential function, convergence metrics and descent-inequality monitors.

Stacked variables are ``n x p`` arrays; every ``n x n`` matrix acts on them
column by column, so weighted norms are summed over the ``p`` coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .params import StepSizes, dual_coupling
from .problems import DimensionError, Problem

SLACK_TOL = 1e-9
DESCENT_TOL = 1e-12


def _arr(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m), dtype=float)


def sqnorm(x: np.ndarray, m: np.ndarray | None = None) -> float:
    """``sum_k x[:, k]^T M x[:, k]`` (plain squared Frobenius norm when ``m`` is None)."""
    if m is None:
        return float(np.sum(x * x))
    return float(np.sum(x * (m @ x)))


def consensus_error(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - x.mean(axis=0, keepdims=True)))


def stationarity_from_grad(grad: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(grad).sum(axis=0)))


def stationarity(pb: Problem, x: np.ndarray) -> float:
    """Norm of ``sum_i grad f_i(x_i)``."""
    return stationarity_from_grad(pb.gradient(x))


def augmented_lagrangian(pb: Problem, x, lam, rho: float, w_tilde, a) -> float:
    """``f(x) + <lam, A x> + (rho/2) ||x||^2_{I - W~}``."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != x.shape:
        raise DimensionError(f"dual shape {lam.shape} does not match primal shape {x.shape}")
    wt = _arr(w_tilde)
    a = _arr(a)
    return pb.value(x) + float(np.sum(lam * (a @ x))) + rho / 2 * sqnorm(x, np.eye(wt.shape[0]) - wt)


@dataclass(frozen=True)
class PotentialConstants:
    C1: np.ndarray
    C2: np.ndarray
    kappa: float
    coupling: float
    w_tilde: np.ndarray

    def min_eigs(self) -> tuple[float, float]:
        return float(np.linalg.eigvalsh(self.C1)[0]), float(np.linalg.eigvalsh(self.C2)[0])


def potential_constants(steps: StepSizes, w, w_tilde) -> PotentialConstants:
    w = _arr(w)
    wt = _arr(w_tilde)
    eye = np.eye(w.shape[0])
    diff = wt - w
    c1 = steps.beta * eye - steps.rho * diff
    c2 = steps.rho * (eye - wt - diff)
    coupling = dual_coupling(steps.lambda2, steps.rho, steps.l, steps.op_norm_C2_core)
    kappa = steps.c * steps.l / 2 + coupling
    return PotentialConstants(c1, c2, kappa, coupling, wt)


def potential(pb: Problem, x_next, x_curr, lam_next, steps: StepSizes, consts: PotentialConstants, a) -> float:
    x_next = np.asarray(x_next, dtype=float)
    x_curr = np.asarray(x_curr, dtype=float)
    if x_next.shape != x_curr.shape:
        raise DimensionError(f"iterate shapes differ: {x_next.shape} vs {x_curr.shape}")
    a = _arr(a)
    c = steps.c
    d = x_next - x_curr
    return (
        augmented_lagrangian(pb, x_next, lam_next, steps.rho, consts.w_tilde, a)
        + c * steps.rho / 2 * sqnorm(a @ x_next)
        + c / 2 * sqnorm(d, consts.C1)
        + c / 2 * sqnorm(d, consts.C2)
        + consts.kappa * sqnorm(d)
    )


class InsufficientHistoryError(ValueError):
    pass


@dataclass(frozen=True)
class LemmaWindow:
    """Three consecutive primal iterates and the two matching duals."""

    x_prev: np.ndarray
    x_curr: np.ndarray
    x_next: np.ndarray
    lam_curr: np.ndarray
    lam_next: np.ndarray
    iter: int = 1


@dataclass(frozen=True)
class LemmaSlacks:
    lemma51: float
    lemma52: float
    lemma53: float

    @property
    def min(self) -> float:
        return min(self.lemma51, self.lemma52, self.lemma53)


def check_descent_lemmas(window: LemmaWindow, pb: Problem, steps: StepSizes, consts: PotentialConstants, a) -> LemmaSlacks:
    """Signed slacks (right side minus left side) of the three one-step inequalities.

    A negative slack beyond roundoff means the inequality failed at this window.
    """
    if window.iter < 1:
        raise InsufficientHistoryError("descent inequalities need r >= 1 (three iterates)")
    a = _arr(a)
    rho, beta, l = steps.rho, steps.beta, steps.l
    n = a.shape[0]
    eye = np.eye(n)
    d = window.x_next - window.x_curr
    d_prev = window.x_curr - window.x_prev
    w = d - d_prev
    dlam = window.lam_next - window.lam_curr

    lag_next = augmented_lagrangian(pb, window.x_next, window.lam_next, rho, consts.w_tilde, a)
    lag_curr = augmented_lagrangian(pb, window.x_curr, window.lam_curr, rho, consts.w_tilde, a)
    dual_term = sqnorm(dlam) / rho
    s51 = (dual_term - (beta - steps.L / 2) * sqnorm(d)) - (lag_next - lag_curr)

    k = 2 * (1 + 2 * rho) / (rho**2 * (1 - steps.lambda2))
    rhs52 = consts.coupling * sqnorm(d_prev) + k * sqnorm(consts.C1 @ w)
    s52 = rhs52 - dual_term

    lhs53 = rho / 2 * sqnorm(a @ window.x_next) + sqnorm(d, consts.C1) / 2 + sqnorm(d, consts.C2) / 2
    rhs53 = (
        rho / 2 * sqnorm(a @ window.x_curr)
        + sqnorm(d_prev, consts.C1) / 2
        + sqnorm(d_prev, consts.C2) / 2
        + l / 2 * sqnorm(d_prev)
        + l / 2 * sqnorm(d)
        - sqnorm(w, beta * eye - rho * (eye - consts.w_tilde)) / 2
    )
    return LemmaSlacks(s51, s52, rhs53 - lhs53)


@dataclass
class LemmaReport:
    iters: list[int] = field(default_factory=list)
    lemma51: list[float] = field(default_factory=list)
    lemma52: list[float] = field(default_factory=list)
    lemma53: list[float] = field(default_factory=list)

    def add(self, r: int, s: LemmaSlacks) -> None:
        self.iters.append(r)
        self.lemma51.append(s.lemma51)
        self.lemma52.append(s.lemma52)
        self.lemma53.append(s.lemma53)

    @property
    def min_slack(self) -> float:
        vals = self.lemma51 + self.lemma52 + self.lemma53
        return min(vals) if vals else float("inf")

    def holds(self, tol: float = SLACK_TOL) -> bool:
        return self.min_slack >= -tol

    def to_dict(self) -> dict:
        return {
            "iters": self.iters,
            "lemma51": self.lemma51,
            "lemma52": self.lemma52,
            "lemma53": self.lemma53,
            "min_slack": self.min_slack,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def lemma_report(xs, lams, pb: Problem, steps: StepSizes, consts: PotentialConstants, a) -> LemmaReport:
    """Slacks at every window of a stored trajectory ``xs[0..T]``, ``lams[0..T]``."""
    rep = LemmaReport()
    for r in range(1, len(xs) - 1):
        win = LemmaWindow(xs[r - 1], xs[r], xs[r + 1], lams[r], lams[r + 1], r)
        rep.add(r, check_descent_lemmas(win, pb, steps, consts, a))
    return rep


def bounded_below(pc_values, tol: float = DESCENT_TOL) -> bool:
    """Monotone sequences are bounded below by their last value: check min == final."""
    pc = np.asarray(pc_values, dtype=float)
    if pc.size == 0 or not np.all(np.isfinite(pc)):
        return False
    return abs(float(pc.min()) - float(pc[-1])) <= tol
