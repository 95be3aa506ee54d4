"""Per-agent smooth objectives ``f(x) = sum_i f_i(x_i)`` with gradient oracles.

Every built-in family is bounded below by zero and has a globally bounded
Hessian, so a single gradient-Lipschitz constant ``l`` holds on all of R^p.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DimensionError(ValueError):
    pass


class LeastSquaresAgent:
    """``1/2 ||A x - b||^2 + mu * sum_d x_d^2 / (1 + x_d^2)``."""

    def __init__(self, a: np.ndarray, b: np.ndarray, mu: float):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.mu = float(mu)

    def value(self, x: np.ndarray) -> float:
        r = self.a @ x - self.b
        sq = x * x
        return 0.5 * float(r @ r) + self.mu * float(np.sum(sq / (1.0 + sq)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        r = self.a @ x - self.b
        return self.a.T @ r + self.mu * 2.0 * x / (1.0 + x * x) ** 2

    def smoothness(self) -> float:
        # |d^2/dx^2 x^2/(1+x^2)| <= 2, attained at x = 0
        return float(np.linalg.norm(self.a.T @ self.a, 2)) + 2.0 * self.mu


class WelschAgent:
    """``sum_k 1 - exp(-(a_k^T x - y_k)^2 / sigma^2)``; bounded, smooth, non-convex."""

    def __init__(self, a: np.ndarray, y: np.ndarray, sigma: float):
        self.a = np.asarray(a, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.sigma = float(sigma)

    def value(self, x: np.ndarray) -> float:
        r = self.a @ x - self.y
        return float(np.sum(-np.expm1(-(r * r) / self.sigma**2)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        r = self.a @ x - self.y
        s2 = self.sigma**2
        return self.a.T @ (2.0 * r / s2 * np.exp(-(r * r) / s2))

    def hessian_bound(self) -> float:
        # loss'' lies in [-4 e^{-3/2}, 2] / sigma^2
        return 2.0 / self.sigma**2 * float(np.sum(self.a * self.a))


class QuadraticAgent:
    """``1/2 (x - m)^T Q (x - m)`` with ``Q`` positive definite."""

    def __init__(self, q: np.ndarray, m: np.ndarray):
        self.q = np.asarray(q, dtype=float)
        self.m = np.asarray(m, dtype=float)

    def value(self, x: np.ndarray) -> float:
        d = x - self.m
        return 0.5 * float(d @ self.q @ d)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.q @ (x - self.m)

    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.q)[-1])


@dataclass(frozen=True)
class Problem:
    """``n`` agents, each holding a local copy ``x_i`` in R^p.

    ``l`` bounds the gradient-Lipschitz constant of the stacked objective;
    ``l_is_analytic`` is False when it came from sampling.
    """

    family: str
    n: int
    p: int
    agents: tuple
    l: float
    l_is_analytic: bool
    minimizer: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = field(default=None, repr=False)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n, self.p):
            raise DimensionError(f"expected stacked point of shape {(self.n, self.p)}, got {x.shape}")
        return x

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        x = self._check(x)
        vals = np.array([f.value(x[i]) for i, f in enumerate(self.agents)])
        return vals, float(vals.sum())

    def value(self, x: np.ndarray) -> float:
        return self.evaluate(x)[1]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return np.stack([f.grad(x[i]) for i, f in enumerate(self.agents)])


def make_regularized_ls(
    n: int, p: int, samples_per_agent: int, mu: float, seed: int, noise: float = 1.0
) -> Problem:
    """Least squares with a smooth non-convex saturating penalty.

    Rows of each ``A_i`` are standard Gaussian scaled by ``1/sqrt(samples)``.
    """
    if min(n, p, samples_per_agent) < 1:
        raise ValueError("n, p and samples_per_agent must be positive")
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    rng = np.random.default_rng(seed)
    agents = []
    for _ in range(n):
        a = rng.standard_normal((samples_per_agent, p)) / np.sqrt(samples_per_agent)
        b = noise * rng.standard_normal(samples_per_agent)
        agents.append(LeastSquaresAgent(a, b, mu))
    l = max(f.smoothness() for f in agents)
    return Problem("regularized_ls", n, p, tuple(agents), l, True)


def make_welsch_regression(
    n: int,
    p: int,
    samples_per_agent: int,
    sigma: float,
    seed: int,
    noise: float = 0.05,
    trials: int = 200,
) -> Problem:
    """Robust regression with the Welsch loss on planted data ``y = A x_true + noise``.

    ``l`` is estimated by sampling around ``x_true``.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if min(n, p, samples_per_agent) < 1:
        raise ValueError("n, p and samples_per_agent must be positive")
    rng = np.random.default_rng(seed)
    x_true = rng.standard_normal(p)
    agents = []
    for _ in range(n):
        a = rng.standard_normal((samples_per_agent, p)) / np.sqrt(samples_per_agent)
        y = a @ x_true + noise * rng.standard_normal(samples_per_agent)
        agents.append(WelschAgent(a, y, sigma))
    pb = Problem("welsch", n, p, tuple(agents), np.nan, False, center=x_true)
    l_est = estimate_smoothness(pb, trials=trials, radius=2.0 * sigma, seed=seed)
    return Problem("welsch", n, p, tuple(agents), l_est, False, center=x_true)


def make_convex_quadratic(n: int, p: int, seed: int, eps: float = 1.0) -> Problem:
    """Strongly convex quadratics with spectra in ``[eps, 2 eps]`` and a closed-form minimizer."""
    rng = np.random.default_rng(seed)
    agents = []
    for _ in range(n):
        rot, _ = np.linalg.qr(rng.standard_normal((p, p)))
        q = (rot * (eps * (1.0 + rng.random(p)))) @ rot.T
        q = 0.5 * (q + q.T)
        m = rng.standard_normal(p)
        agents.append(QuadraticAgent(q, m))
    return quadratic_from_agents(agents)


def quadratic_from_agents(agents) -> Problem:
    agents = tuple(agents)
    p = agents[0].m.shape[0]
    q_sum = sum(f.q for f in agents)
    rhs = sum(f.q @ f.m for f in agents)
    xstar = np.linalg.solve(q_sum, rhs)
    l = max(f.smoothness() for f in agents)
    return Problem("quadratic", len(agents), p, agents, l, True, minimizer=xstar)


def estimate_smoothness(pb: Problem, trials: int, radius: float, seed: int) -> float:
    """Largest sampled ratio ``||grad f_i(x) - grad f_i(y)|| / ||x - y||``, inflated by 1.2.

    Base points are drawn around ``pb.center`` (origin by default) at a random
    fraction of ``radius``. Half of the pairs are far apart; the other half are
    close, which probes the local Hessian norm.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    center = np.zeros(pb.p) if pb.center is None else pb.center
    best = 0.0
    for f in pb.agents:
        for t in range(trials):
            x = center + radius * rng.random() * rng.standard_normal(pb.p)
            scale = radius if t % 2 == 0 else 1e-4 * radius
            y = x + scale * rng.standard_normal(pb.p)
            dx = np.linalg.norm(x - y)
            if dx == 0:
                continue
            best = max(best, float(np.linalg.norm(f.grad(x) - f.grad(y)) / dx))
    return 1.2 * best


FAMILIES = ("regularized_ls", "welsch", "quadratic")


def make_problem(family: str, n: int, p: int = 2, seed: int = 0, **kw) -> Problem:
    """Build a problem by family name with desk-scale defaults."""
    if family == "regularized_ls":
        return make_regularized_ls(
            n, p, kw.get("samples", 20), kw.get("mu", 2.0), seed, noise=kw.get("noise", 1.0)
        )
    if family == "welsch":
        return make_welsch_regression(
            n, p, kw.get("samples", 200), kw.get("sigma", 2.0), seed, noise=kw.get("noise", 0.05)
        )
    if family == "quadratic":
        return make_convex_quadratic(n, p, seed)
    raise ValueError(f"unknown problem family {family!r}; expected one of {FAMILIES}")
