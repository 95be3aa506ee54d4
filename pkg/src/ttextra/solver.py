"""TT-EXTRA (agent-level and compact primal-dual forms) and the classic EXTRA baselines."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import diagnostics as dg
from .params import StepSizes
from .problems import DimensionError, Problem

log = logging.getLogger(__name__)

FORMS = ("agent", "compact", "both")
CSV_HEADER = (
    "iter", "f", "L_rho", "P_c", "consensus_err", "stationarity",
    "step_norm", "dual_step_norm", "w_norm", "descent_ok",
)


class ConfigError(ValueError):
    pass


class LocalityError(RuntimeError):
    """An agent tried to read a value outside its closed neighborhood."""


class DivergenceError(RuntimeError):
    def __init__(self, message: str, trace: "Trace"):
        super().__init__(message)
        self.trace = trace


def _arr(m) -> np.ndarray:
    return np.asarray(getattr(m, "entries", m), dtype=float)


@dataclass(frozen=True)
class SolverState:
    x: np.ndarray
    x_prev: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    iter: int = 0


def init_state(pb: Problem, w_tilde, w, a, rho: float, x0) -> SolverState:
    """``y^0 = rho (W~ - W) x^0`` and ``lambda^0 = rho A x^0`` (so ``A^T lambda^0 = y^0``)."""
    x0 = np.array(x0, dtype=float)
    if x0.shape != (pb.n, pb.p):
        raise DimensionError(f"x0 must have shape {(pb.n, pb.p)}, got {x0.shape}")
    diff = _arr(w_tilde) - _arr(w)
    a = _arr(a)
    return SolverState(x=x0, lam=rho * (a @ x0), y=rho * (diff @ x0), iter=0)


class _NeighborView:
    """Read-only access to a snapshot restricted to ``N_i`` and ``i`` itself."""

    def __init__(self, data: np.ndarray, agent: int, allowed):
        self._data = data
        self._agent = agent
        self._allowed = frozenset(allowed) | {agent}

    def __getitem__(self, j: int) -> np.ndarray:
        if j not in self._allowed:
            raise LocalityError(f"agent {self._agent} read value of non-neighbor {j}")
        return self._data[j]


def tt_extra_step_agent(state: SolverState, pb: Problem, w, w_tilde, rho: float, beta: float) -> SolverState:
    """One synchronous round, computed agent by agent from neighbor messages.

    ``w`` and ``w_tilde`` must be :class:`MixingMatrix` objects: their graph
    defines which reads are legal.
    """
    g = w.graph
    wm, wtm = w.entries, w_tilde.entries
    x, y = state.x, state.y
    n = pb.n
    x_new = np.empty_like(x)
    for i in range(n):
        view = _NeighborView(x, i, g.neighbors[i])
        mix = np.zeros(pb.p)
        for j in np.flatnonzero(wtm[i]):
            mix += wtm[i, j] * view[j]
        xi = view[i]
        x_new[i] = (1 - rho / beta) * xi - pb.agents[i].grad(xi) / beta + rho / beta * mix - y[i] / beta
    y_new = np.empty_like(y)
    for i in range(n):
        view = _NeighborView(x_new, i, g.neighbors[i])
        acc = np.zeros(pb.p)
        for j in np.flatnonzero(wtm[i] - wm[i]):
            acc += (wtm[i, j] - wm[i, j]) * view[j]
        y_new[i] = y[i] + rho * acc
    return replace(state, x=x_new, x_prev=x, y=y_new, iter=state.iter + 1)


def tt_extra_step_compact(
    state: SolverState, pb: Problem, a, w_tilde, rho: float, beta: float, grad: Optional[np.ndarray] = None
) -> SolverState:
    """``x+ = x - (grad f(x) + A^T lam + rho (I - W~) x) / beta``, then ``lam+ = lam + rho A x+``."""
    a = _arr(a)
    wt = _arr(w_tilde)
    x, lam = state.x, state.lam
    g = pb.gradient(x) if grad is None else grad
    x_new = x - (g + a.T @ lam + rho * (x - wt @ x)) / beta
    lam_new = lam + rho * (a @ x_new)
    return replace(state, x=x_new, x_prev=x, lam=lam_new, iter=state.iter + 1)


@dataclass
class IterateHistory:
    """All EXTRA iterates so far, plus the running sum of all but the newest."""

    iterates: list = field(default_factory=list)
    past_sum: Optional[np.ndarray] = None

    @classmethod
    def start(cls, x0) -> "IterateHistory":
        x0 = np.array(x0, dtype=float)
        return cls([x0], np.zeros_like(x0))

    def push(self, x: np.ndarray) -> None:
        self.past_sum = self.past_sum + self.iterates[-1]
        self.iterates.append(x)

    @property
    def k(self) -> int:
        return len(self.iterates) - 1


def extra_eliminated_step(history: IterateHistory, pb: Problem, w, w_tilde, alpha: float) -> np.ndarray:
    """``x^{k+1} = W x^k - sum_{t<k} (W~ - W) x^t - alpha grad f(x^k)``; appends to ``history``."""
    wm = _arr(w)
    diff = _arr(w_tilde) - wm
    xk = history.iterates[-1]
    x_new = wm @ xk - diff @ history.past_sum - alpha * pb.gradient(xk)
    history.push(x_new)
    return x_new


def init_extra_state(x0, a) -> SolverState:
    x0 = np.array(x0, dtype=float)
    return SolverState(x=x0, lam=_arr(a) @ x0)


def extra_primal_dual_step(state: SolverState, pb: Problem, a, w_tilde, alpha: float) -> SolverState:
    """Primal-dual gradient form of EXTRA with equal step ``alpha``; needs ``lam^0 = A x^0``."""
    a = _arr(a)
    wt = _arr(w_tilde)
    x, lam = state.x, state.lam
    x_new = x - alpha * pb.gradient(x) - a.T @ lam - (x - wt @ x)
    lam_new = lam + a @ x_new
    return replace(state, x=x_new, x_prev=x, lam=lam_new, iter=state.iter + 1)


@dataclass
class RunConfig:
    max_iters: int = 10000
    record_stride: int = 1
    stop_tol_consensus: float = 1e-9
    stop_tol_stationarity: float = 1e-8
    stop_tol_step: float = 1e-10
    init_seed: int = 0
    x0: Optional[list] = None
    form: str = "compact"
    check_lemmas: bool = False
    keep_history: bool = False

    def validate(self) -> None:
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.record_stride < 1:
            raise ConfigError(f"record_stride must be >= 1, got {self.record_stride}")
        for name in ("stop_tol_consensus", "stop_tol_stationarity", "stop_tol_step"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.form not in FORMS:
            raise ConfigError(f"form must be one of {FORMS}, got {self.form!r}")

    def initial_point(self, n: int, p: int) -> np.ndarray:
        if self.x0 is not None:
            x0 = np.array(self.x0, dtype=float)
            if x0.shape != (n, p):
                raise ConfigError(f"x0 must have shape {(n, p)}, got {x0.shape}")
            return x0
        return np.random.default_rng(self.init_seed).standard_normal((n, p))


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    f: float
    L_rho: float
    P_c: float
    consensus_err: float
    stationarity: float
    step_norm: float
    dual_step_norm: float
    w_norm: float
    descent_ok: bool

    def row(self) -> list[str]:
        vals = [self.f, self.L_rho, self.P_c, self.consensus_err, self.stationarity,
                self.step_norm, self.dual_step_norm, self.w_norm]
        return [str(self.iter)] + [f"{v:.17g}" for v in vals] + [str(self.descent_ok).lower()]


@dataclass
class Trace:
    records: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    descent_violations: int = 0
    consensus_A: float = float("nan")
    max_form_gap: float = 0.0
    max_dual_gap: float = 0.0
    lemmas: Optional[dg.LemmaReport] = None
    xs: list = field(default_factory=list)
    lams: list = field(default_factory=list)
    final: Optional[SolverState] = None
    pc_values: list = field(default_factory=list)

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for rec in self.records:
            wr.writerow(rec.row())
        return buf.getvalue()

    def summary(self) -> dict:
        last = self.records[-1] if self.records else None
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "descent_violations": self.descent_violations,
            "consensus_err": last.consensus_err if last else None,
            "stationarity": last.stationarity if last else None,
            "consensus_A": self.consensus_A,
            "dual_step_norm": last.dual_step_norm if last else None,
            "P_c": last.P_c if last else None,
            "max_form_gap": self.max_form_gap,
            "max_dual_gap": self.max_dual_gap,
        }


def read_trace_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0].keys()) != CSV_HEADER:
        raise ValueError(f"unexpected trace header {tuple(rows[0].keys())}")
    return rows


def run(pb: Problem, w, w_tilde, a, steps: StepSizes, cfg: RunConfig) -> Trace:
    """Iterate TT-EXTRA until ``max_iters`` or until all three stop tolerances hold.

    Row ``r`` of the trace describes ``x^r``: ``step_norm = ||x^r - x^{r-1}||``,
    ``P_c = P_c(x^r, x^{r-1}, lambda^r)``, with ``x^{-1} = x^0`` for row 0.
    ``descent_ok`` compares ``P_c`` at consecutive iterations from ``r = 2`` on
    (the first two values have no valid predecessor) and is false on a row if
    any step since the previous recorded row increased ``P_c``.
    """
    # overflow is reported as DivergenceError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(pb, w, w_tilde, a, steps, cfg)


def _run(pb: Problem, w, w_tilde, a, steps: StepSizes, cfg: RunConfig) -> Trace:
    cfg.validate()
    rho, beta = steps.rho, steps.beta
    am = _arr(a)
    wt = _arr(w_tilde)
    consts = dg.potential_constants(steps, w, w_tilde)
    x0 = cfg.initial_point(pb.n, pb.p)
    state = init_state(pb, w_tilde, w, am, rho, x0)
    agent_state = state if cfg.form in ("agent", "both") else None
    trace = Trace(lemmas=dg.LemmaReport() if cfg.check_lemmas else None)

    x_prev, x_prev2 = state.x, state.x
    lam_prev = state.lam
    pc_prev = None
    window_ok = True
    if cfg.keep_history:
        trace.xs.append(state.x.copy())
        trace.lams.append(state.lam.copy())

    grad = pb.gradient(state.x)
    r = 0
    while True:
        x = state.x
        lam = state.lam
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            trace.iterations = r
            raise DivergenceError(f"non-finite iterate at iteration {r}", trace)
        d = x - x_prev
        lag = dg.augmented_lagrangian(pb, x, lam, rho, wt, am)
        pc = lag + (
            steps.c * rho / 2 * dg.sqnorm(am @ x)
            + steps.c / 2 * dg.sqnorm(d, consts.C1)
            + steps.c / 2 * dg.sqnorm(d, consts.C2)
            + consts.kappa * dg.sqnorm(d)
        )
        if not np.isfinite(pc):
            trace.iterations = r
            raise DivergenceError(f"non-finite potential at iteration {r}", trace)
        trace.pc_values.append(pc)
        if r >= 2 and pc > pc_prev + dg.DESCENT_TOL:
            trace.descent_violations += 1
            window_ok = False
        pc_prev = pc

        cons = dg.consensus_error(x)
        stat = dg.stationarity_from_grad(grad)
        step = float(np.linalg.norm(d))
        done = r >= 1 and (
            cons <= cfg.stop_tol_consensus and stat <= cfg.stop_tol_stationarity and step <= cfg.stop_tol_step
        )
        last = done or r >= cfg.max_iters
        if r % cfg.record_stride == 0 or last:
            trace.records.append(TraceRecord(
                iter=r,
                f=pb.value(x),
                L_rho=lag,
                P_c=pc,
                consensus_err=cons,
                stationarity=stat,
                step_norm=step,
                dual_step_norm=float(np.linalg.norm(lam - lam_prev)),
                w_norm=float(np.linalg.norm(d - (x_prev - x_prev2))),
                descent_ok=window_ok,
            ))
            window_ok = True
        if last:
            trace.converged = done
            trace.iterations = r
            trace.consensus_A = float(np.linalg.norm(am @ x))
            trace.final = state
            if not done:
                log.info("max_iters=%d reached without meeting stop tolerances", cfg.max_iters)
            return trace

        new = tt_extra_step_compact(state, pb, am, wt, rho, beta, grad=grad)
        if agent_state is not None:
            agent_state = tt_extra_step_agent(agent_state, pb, w, w_tilde, rho, beta)
            if cfg.form == "agent":
                # the agent iterate drives the run; lambda is carried alongside for diagnostics
                new = replace(new, x=agent_state.x, lam=lam + rho * (am @ agent_state.x))
            gap = float(np.max(np.abs(agent_state.x - new.x)))
            trace.max_form_gap = max(trace.max_form_gap, gap)
            trace.max_dual_gap = max(trace.max_dual_gap, float(np.max(np.abs(agent_state.y - am.T @ new.lam))))
        if cfg.check_lemmas and r >= 1:
            win = dg.LemmaWindow(x_prev, x, new.x, lam, new.lam, r)
            trace.lemmas.add(r, dg.check_descent_lemmas(win, pb, steps, consts, am))
        if cfg.keep_history:
            trace.xs.append(new.x.copy())
            trace.lams.append(new.lam.copy())

        x_prev2, x_prev = x_prev, x
        lam_prev = lam
        state = new
        grad = pb.gradient(state.x)
        r += 1


def tt_extra_trajectory(pb: Problem, w, w_tilde, a, rho: float, beta: float, x0, iters: int, form: str = "compact"):
    """Iterates ``x^0..x^iters`` of TT-EXTRA in the requested form."""
    state = init_state(pb, w_tilde, w, a, rho, x0)
    xs = [state.x]
    for _ in range(iters):
        if form == "agent":
            state = tt_extra_step_agent(state, pb, w, w_tilde, rho, beta)
        else:
            state = tt_extra_step_compact(state, pb, a, w_tilde, rho, beta)
        xs.append(state.x)
    return xs


def extra_trajectory(pb: Problem, w, w_tilde, a, alpha: float, x0, iters: int, form: str = "primal_dual"):
    """Iterates ``x^0..x^iters`` of EXTRA, eliminated or primal-dual form."""
    if form == "eliminated":
        hist = IterateHistory.start(x0)
        for _ in range(iters):
            extra_eliminated_step(hist, pb, w, w_tilde, alpha)
        return hist.iterates
    state = init_extra_state(x0, a)
    xs = [state.x]
    for _ in range(iters):
        state = extra_primal_dual_step(state, pb, a, w_tilde, alpha)
        xs.append(state.x)
    return xs
