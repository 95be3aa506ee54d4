"""Mixing matrices W and W~, their spectra, and the feasibility check on the pair."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, degrees, is_connected

SYMMETRY_TOL = 1e-12
NULL_TOL = 1e-9


class TopologyError(ValueError):
    pass


class SpectrumError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


class StepError(ValueError):
    pass


def _mirror(m: np.ndarray) -> np.ndarray:
    """Rebuild ``m`` from its upper triangle so that it is exactly symmetric."""
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


@dataclass(frozen=True)
class MixingMatrix:
    """Dense symmetric ``n x n`` weight matrix tied to a communication graph."""

    entries: np.ndarray
    graph: Graph

    def __post_init__(self):
        m = _mirror(np.asarray(self.entries, dtype=float))
        if m.shape != (self.graph.n, self.graph.n):
            raise ValueError(f"matrix shape {m.shape} does not match n={self.graph.n}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.graph.n

    def to_dict(self) -> dict:
        return {"n": self.n, "entries": self.entries.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal


def spectral(m: np.ndarray) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending."""
    m = np.asarray(m, dtype=float)
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise SymmetryError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(vals)[::-1]
    return Spectrum(vals[order], vecs[:, order])


def psd_sqrt(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol, tol)`` are treated as exact zeros, so a null
    direction of ``m`` stays an exact null direction of the root. Anything
    below ``-tol`` raises.
    """
    spec = spectral(m)
    if spec.eigenvalues.size and spec.eigenvalues[-1] < -tol:
        raise NotPSDError(f"minimum eigenvalue {spec.eigenvalues[-1]:.3e} below -{tol:g}")
    root = np.sqrt(np.where(spec.eigenvalues < tol, 0.0, spec.eigenvalues))
    a = (spec.eigenvectors * root) @ spec.eigenvectors.T
    return _mirror(a)


def metropolis(g: Graph) -> MixingMatrix:
    """Metropolis constant-edge weights, ``W_ij = 1 / (1 + max(d_i, d_j))``."""
    if not is_connected(g):
        raise TopologyError("Metropolis weights need a connected graph")
    d = degrees(g)
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    w[np.diag_indices(g.n)] = 1.0 - w.sum(axis=1)
    return MixingMatrix(w, g)


def laplacian(g: Graph) -> np.ndarray:
    adj = g.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def laplacian_based(g: Graph, tau: float) -> MixingMatrix:
    """``W = I - L / tau``; requires ``tau > lambda_max(L) / 2``."""
    if not is_connected(g):
        raise TopologyError("Laplacian-based weights need a connected graph")
    lap = laplacian(g)
    lmax = spectral(lap).eigenvalues[0]
    if not tau > lmax / 2 + 1e-12 * max(1.0, lmax):
        raise SpectrumError(
            f"tau={tau} must exceed lambda_max(L)/2 = {lmax / 2:.6g} to keep eig(W) > -1"
        )
    return MixingMatrix(np.eye(g.n) - lap / tau, g)


def w_tilde_matrix(w: np.ndarray, rho: float) -> np.ndarray:
    """``(I + (1/rho + 1) W) / (1/rho + 2)`` as a raw array."""
    inv = 1.0 / rho
    return (np.eye(w.shape[0]) + (inv + 1.0) * w) / (inv + 2.0)


def build_w_tilde(w: MixingMatrix, rho: float) -> MixingMatrix:
    if not rho > 0:
        raise StepError(f"rho must be positive, got {rho}")
    return MixingMatrix(w_tilde_matrix(w.entries, rho), w.graph)


@dataclass(frozen=True)
class SpectralCertificate:
    eigenvalues: np.ndarray
    lambda2: float
    lambda_max_diff: float
    sqrt_A: np.ndarray
    op_norm_IminusWtilde: float
    op_norm_C2_core: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "lambda2": self.lambda2,
            "lambda_max_diff": self.lambda_max_diff,
            "op_norm_IminusWtilde": self.op_norm_IminusWtilde,
            "op_norm_C2_core": self.op_norm_C2_core,
        }


def certificate(w: MixingMatrix, wt: MixingMatrix, tol: float = 1e-10) -> SpectralCertificate:
    eye = np.eye(w.n)
    spec = spectral(w.entries)
    diff = wt.entries - w.entries
    diff_vals = spectral(diff).eigenvalues
    return SpectralCertificate(
        eigenvalues=spec.eigenvalues,
        lambda2=float(spec.eigenvalues[1]) if w.n > 1 else float("nan"),
        lambda_max_diff=float(diff_vals[0]),
        sqrt_A=psd_sqrt(diff, tol),
        op_norm_IminusWtilde=float(np.linalg.norm(eye - wt.entries, 2)),
        op_norm_C2_core=float(np.linalg.norm(eye - wt.entries - diff, 2)),
    )


@dataclass
class ValidationReport:
    """Per-clause outcome of the feasibility check on ``(W, W~, rho)``."""

    clauses: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.clauses[name] = bool(ok)
        self.details[name] = detail

    def failures(self) -> list[str]:
        return [k for k, ok in self.clauses.items() if not ok]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "clauses": {k: {"ok": v, "detail": self.details.get(k, "")} for k, v in self.clauses.items()},
        }


def _off_pattern_max(m: np.ndarray, g: Graph) -> float:
    mask = g.adjacency().astype(bool) | np.eye(g.n, dtype=bool)
    return float(np.max(np.abs(m[~mask]))) if (~mask).any() else 0.0


def _null_is_ones(m: np.ndarray, tol: float) -> tuple[bool, str]:
    spec = spectral(m)
    small = np.abs(spec.eigenvalues) < tol
    k = int(small.sum())
    if k != 1:
        return False, f"{k} eigenvalues with |lambda| < {tol:g}"
    v = spec.eigenvectors[:, small][:, 0]
    ones = np.ones(m.shape[0]) / np.sqrt(m.shape[0])
    align = abs(float(v @ ones))
    return align > 1 - 1e-8, f"null vector alignment with 1: {align:.12f}"


def validate_assumption2(
    w: MixingMatrix, wt: MixingMatrix, rho: float, tol: float = NULL_TOL
) -> ValidationReport:
    """Check sparsity, symmetry, null-space and sandwich conditions on ``(W, W~)``.

    Also reports the spectral consequences for ``W`` itself (eigenvalues in
    ``(-1, 1]`` with a simple eigenvalue 1 on the ones direction). Failures are
    report entries, never exceptions.
    """
    if w.n != wt.n:
        raise ValueError(f"dimension mismatch: W is {w.n}x{w.n}, W~ is {wt.n}x{wt.n}")
    g = w.graph
    n = w.n
    eye = np.eye(n)
    rep = ValidationReport()

    off = max(_off_pattern_max(w.entries, g), _off_pattern_max(wt.entries, g))
    rep.add("sparsity", off == 0.0, f"max |entry| off the graph pattern: {off:.3e}")

    asym = max(np.max(np.abs(w.entries - w.entries.T)), np.max(np.abs(wt.entries - wt.entries.T)))
    rep.add("symmetry", asym == 0.0, f"max asymmetry: {asym:.3e}")

    diff = wt.entries - w.entries
    ok_null, detail = _null_is_ones(diff, tol)
    resid = float(np.max(np.abs((eye - wt.entries) @ np.ones(n))))
    rep.add(
        "null_space",
        ok_null and resid < tol,
        f"Null(W~ - W): {detail}; max |(I - W~) 1| = {resid:.3e}",
    )

    upper = spectral((eye + w.entries) / 2 - wt.entries).eigenvalues[-1]
    rep.add("psd_upper", upper >= -tol, f"min eig((I + W)/2 - W~) = {upper:.3e}")
    if rho > 0:
        lower = spectral(wt.entries - w_tilde_matrix(w.entries, rho)).eigenvalues[-1]
        rep.add("psd_lower", lower >= -tol, f"min eig(W~ - lower(rho)) = {lower:.3e}")
    else:
        rep.add("psd_lower", False, f"rho must be positive, got {rho}")

    spec = spectral(w.entries)
    in_range = spec.eigenvalues[0] <= 1 + tol and spec.eigenvalues[-1] > -1 + tol
    ok_w_null, w_detail = _null_is_ones(eye - w.entries, tol)
    rep.add(
        "w_spectrum",
        bool(in_range and ok_w_null),
        f"eig(W) in [{spec.eigenvalues[-1]:.6g}, {spec.eigenvalues[0]:.6g}]; Null(I - W): {w_detail}",
    )
    return rep
