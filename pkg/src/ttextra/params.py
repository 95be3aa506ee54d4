"""Sequential selection of ``(W, rho, W~, beta)`` and the scalar constants of the descent proof."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph, degrees
from .mixing import (
    MixingMatrix,
    SpectralCertificate,
    ValidationReport,
    build_w_tilde,
    certificate,
    laplacian_based,
    metropolis,
    spectral,
    validate_assumption2,
)

DEFAULT_MARGIN = 1.05


class ParameterError(ValueError):
    pass


class DisconnectedSpectrumError(ParameterError):
    pass


class InfeasibleConstantError(ParameterError):
    pass


class RhoTooSmallError(ParameterError):
    pass


class InfeasibleOverrideError(ParameterError):
    def __init__(self, bound: str, value: float, limit: float):
        self.bound = bound
        self.value = value
        self.limit = limit
        super().__init__(f"{bound} violated: {value:.6g} must exceed lower bound {limit:.6g}")


def rho_lower_bound(lambda2: float, l: float) -> float:
    """``max{2, (8l + sqrt(64 l^2 + 16 l (1 - lambda2))) / (2 (1 - lambda2))}``.

    The first entry is the worst case of ``1 + lambda_max(W~ - W)`` since that
    eigenvalue never exceeds 1, which avoids needing W~ before rho is known.
    """
    if lambda2 >= 1:
        raise DisconnectedSpectrumError(f"lambda2(W) = {lambda2} >= 1: graph or W is not connected")
    if l <= 0:
        raise ParameterError(f"smoothness l must be positive, got {l}")
    gap = 1.0 - lambda2
    return max(2.0, (8 * l + math.sqrt(64 * l * l + 16 * l * gap)) / (2 * gap))


def dual_coupling(lambda2: float, rho: float, l: float, c2_core_norm: float) -> float:
    """``(1 + 2 rho) / (rho^2 (1 - lambda2)) * (4 l^2 + 4 rho^2 ||I - W~ - (W~ - W)||^2)``."""
    return (1 + 2 * rho) / (rho**2 * (1 - lambda2)) * (4 * l * l + 4 * rho**2 * c2_core_norm**2)


def a_max(lambda2: float, rho: float, l: float) -> float:
    return rho**2 * (1 - lambda2) / (4 * l * (1 + 2 * rho))


def choose_a(lambda2: float, rho: float, l: float) -> float:
    """Geometric mean of the admissible interval ``(1, a_max]``."""
    top = a_max(lambda2, rho, l)
    if top <= 1:
        raise RhoTooSmallError(f"rho={rho:.6g} too small: a_max = {top:.6g} <= 1")
    return math.sqrt(top)


def _beta_bound(cert: SpectralCertificate, rho: float, l: float, a: float) -> float:
    if a <= 1:
        raise InfeasibleConstantError(f"a must exceed 1, got {a}")
    big_l = l + rho * cert.op_norm_IminusWtilde
    first = (rho + 1) * cert.lambda_max_diff + 1
    second = (big_l / 2 + dual_coupling(cert.lambda2, rho, l, cert.op_norm_C2_core)) / (1 - 1 / a)
    return max(first, second)


def beta_lower_bound(w: MixingMatrix, wt: MixingMatrix, rho: float, l: float, a: float) -> float:
    if a <= 1:
        raise InfeasibleConstantError(f"a must exceed 1, got {a}")
    return _beta_bound(certificate(w, wt), rho, l, a)


@dataclass(frozen=True)
class StepSizes:
    rho: float
    beta: float
    l: float
    L: float
    a: float
    c: float
    rho_lb: float
    beta_lb: float
    margin: float
    lambda2: float
    lambda_max_diff: float
    op_norm_IminusWtilde: float
    op_norm_C2_core: float
    feasible: bool = True

    @property
    def coupling(self) -> float:
        return dual_coupling(self.lambda2, self.rho, self.l, self.op_norm_C2_core)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "beta": self.beta,
            "a": self.a,
            "c": self.c,
            "l": self.l,
            "L": self.L,
            "rho_lb": self.rho_lb,
            "beta_lb": self.beta_lb,
            "lambda2": self.lambda2,
            "lambda_max_diff": self.lambda_max_diff,
            "margin": self.margin,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class ParameterSet:
    """Output of the selection pipeline: ``(W, rho, W~, beta)`` plus derived data."""

    W: MixingMatrix
    W_tilde: MixingMatrix
    A: np.ndarray
    steps: StepSizes
    certificate: SpectralCertificate
    validation: ValidationReport

    @property
    def rho(self) -> float:
        return self.steps.rho

    @property
    def beta(self) -> float:
        return self.steps.beta


def make_weights(g: Graph, scheme: str = "metropolis", tau: Optional[float] = None) -> MixingMatrix:
    if scheme == "metropolis":
        return metropolis(g)
    if scheme == "laplacian":
        if tau is None:
            # lambda_max(L) <= 2 d_max, so d_max + 1 clears the lambda_max/2 threshold
            tau = float(degrees(g).max()) + 1.0
        return laplacian_based(g, tau)
    raise ValueError(f"unknown weight scheme {scheme!r}")


def select_parameters(
    g: Graph,
    l: float,
    rho: Optional[float] = None,
    beta: Optional[float] = None,
    margin: float = DEFAULT_MARGIN,
    weight_scheme: str = "metropolis",
    tau: Optional[float] = None,
    strict: bool = True,
) -> ParameterSet:
    """Pick ``W``, then ``rho``, then ``W~``, then ``beta``.

    Overrides below their lower bound raise :class:`InfeasibleOverrideError`
    when ``strict``; otherwise they are kept and ``steps.feasible`` is False.
    With an infeasible ``rho`` the constant ``a`` falls back to 2.
    """
    if margin <= 1:
        raise ParameterError(f"margin must exceed 1, got {margin}")
    w = make_weights(g, weight_scheme, tau)
    lam2 = float(spectral(w.entries).eigenvalues[1])
    rho_lb = rho_lower_bound(lam2, l)
    feasible = True
    if rho is None:
        rho = margin * rho_lb
    elif not rho > rho_lb:
        if strict:
            raise InfeasibleOverrideError("rho lower bound", rho, rho_lb)
        feasible = False

    wt = build_w_tilde(w, rho)
    cert = certificate(w, wt)
    if a_max(lam2, rho, l) > 1:
        a = choose_a(lam2, rho, l)
    else:
        a = 2.0
        feasible = False
    beta_lb = _beta_bound(cert, rho, l, a)
    if beta is None:
        beta = margin * beta_lb
    elif not beta > beta_lb:
        if strict:
            raise InfeasibleOverrideError("beta lower bound", beta, beta_lb)
        feasible = False

    steps = StepSizes(
        rho=float(rho),
        beta=float(beta),
        l=float(l),
        L=float(l + rho * cert.op_norm_IminusWtilde),
        a=float(a),
        c=float(beta / (a * l)),
        rho_lb=float(rho_lb),
        beta_lb=float(beta_lb),
        margin=float(margin),
        lambda2=lam2,
        lambda_max_diff=cert.lambda_max_diff,
        op_norm_IminusWtilde=cert.op_norm_IminusWtilde,
        op_norm_C2_core=cert.op_norm_C2_core,
        feasible=feasible,
    )
    report = validate_assumption2(w, wt, rho)
    return ParameterSet(w, wt, cert.sqrt_A, steps, cert, report)


def descent_scalar_margin(steps: StepSizes) -> float:
    """``beta - c l - L/2 - coupling``; positive for a feasible selection."""
    return steps.beta - steps.c * steps.l - steps.L / 2 - steps.coupling


def descent_matrix(steps: StepSizes, w: np.ndarray, wt: np.ndarray) -> np.ndarray:
    """``(c/2)(beta I - rho (I - W~)) - 2(1+2rho)/(rho^2 (1-lambda2)) C1^T C1``."""
    n = w.shape[0]
    eye = np.eye(n)
    c1 = steps.beta * eye - steps.rho * (wt - w)
    k = 2 * (1 + 2 * steps.rho) / (steps.rho**2 * (1 - steps.lambda2))
    m = steps.c / 2 * (steps.beta * eye - steps.rho * (eye - wt)) - k * c1.T @ c1
    return 0.5 * (m + m.T)


def descent_matrix_min_eig(steps: StepSizes, w: np.ndarray, wt: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(descent_matrix(steps, w, wt))[0])
