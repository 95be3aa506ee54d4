"""Declarative experiment configuration (JSON), strict about unknown keys."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import graph as gr
from .params import DEFAULT_MARGIN, ParameterSet, select_parameters
from .problems import FAMILIES, Problem, make_problem
from .solver import ConfigError, RunConfig


@dataclass
class GraphSpec:
    generator: str = "ring"
    n: int = 5
    edge_prob: Optional[float] = None
    seed: int = 0

    def build(self) -> gr.Graph:
        if self.generator not in gr.GENERATORS:
            raise ConfigError(f"unknown graph generator {self.generator!r}; known: {sorted(gr.GENERATORS)}")
        if self.generator == "erdos_renyi":
            if self.edge_prob is None:
                raise ConfigError("erdos_renyi needs edge_prob")
            return gr.erdos_renyi_connected(self.n, self.edge_prob, self.seed)
        return gr.GENERATORS[self.generator](self.n)


@dataclass
class ProblemSpec:
    family: str = "regularized_ls"
    n: Optional[int] = None
    p: int = 3
    mu: float = 2.0
    sigma: float = 2.0
    samples: Optional[int] = None
    seed: int = 0

    def build(self, n: int) -> Problem:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown problem family {self.family!r}; known: {FAMILIES}")
        if self.n is not None and self.n != n:
            raise ConfigError(f"problem n={self.n} does not match graph n={n}")
        kw = {"mu": self.mu, "sigma": self.sigma}
        if self.samples is not None:
            kw["samples"] = self.samples
        return make_problem(self.family, n, p=self.p, seed=self.seed, **kw)


@dataclass
class ParamSpec:
    rho: Optional[float] = None
    beta: Optional[float] = None
    margin: float = DEFAULT_MARGIN
    weight_scheme: str = "metropolis"
    tau: Optional[float] = None

    def select(self, g: gr.Graph, l: float, strict: bool) -> ParameterSet:
        return select_parameters(
            g, l, rho=self.rho, beta=self.beta, margin=self.margin,
            weight_scheme=self.weight_scheme, tau=self.tau, strict=strict,
        )


@dataclass
class CompareSpec:
    iters: int = 200
    alpha: Optional[float] = None  # defaults to 1/beta


@dataclass
class OutputSpec:
    trace: Optional[str] = None
    summary: Optional[str] = None
    report: Optional[str] = None


@dataclass
class ExperimentConfig:
    graph: GraphSpec = field(default_factory=GraphSpec)
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    params: ParamSpec = field(default_factory=ParamSpec)
    run: RunConfig = field(default_factory=RunConfig)
    compare: CompareSpec = field(default_factory=CompareSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, "config")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def set(self, dotted: str, raw: str) -> None:
        """Override one scalar field, e.g. ``run.max_iters=5`` (value parsed as JSON)."""
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        section, _, key = dotted.partition(".")
        target = getattr(self, section, None) if key else None
        if target is None or not dataclasses.is_dataclass(target):
            raise ConfigError(f"cannot override {dotted!r}: expected <section>.<field>")
        if key not in {f.name for f in dataclasses.fields(target)}:
            raise ConfigError(f"unknown field {dotted!r}")
        setattr(target, key, value)


def _build(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory if known[name].default_factory is not dataclasses.MISSING else None
        if default is not None and dataclasses.is_dataclass(default):
            kwargs[name] = _build(default, value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)
