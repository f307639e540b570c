"""JSON experiment configuration.

Schema (unknown keys are rejected everywhere)::

    {
      "graph":    {"file": "edges.txt"}
                | {"kind": "path", "n": 4} | {"kind": "star", "k": 3}
                | {"kind": "grid", "m": 3, "n": 4}
                | {"kind": "random", "n": 12, "prob": 0.3, "seed": 1},
                  optional "weight" for generated graphs,
      "domain":   {"interior": ["1", "2"]} | {"exclude": ["0", "3"]},
      "p": 3.0, "q": 2.0, "C": 1.0, "delta": 1.0, "eps": 0.5,
      "sigma":    {"constant": 1.0} | {"expr": "1 + 0.1*sin(t)"},        # x, t
      "f":        {"power": {"C": 1.0, "q": 2.0}}
                | {"power_sum": [{"C": 1.0, "q": 2.0}, ...]}
                | {"expr": "s**2"},                                     # s
      "u0":       {"constant": 1.0} | {"values": {"1": 1.0}} | {"expr": "1 + x"},  # x
      "scenario": "theorem-1" | "theorem-2" | "raw-integrate" | "eigen-only",
      "integrator": {"horizon": 10, "initial_step": null, "min_step": null,
                     "blowup_threshold": 1e8, "rel_tol": 1e-10, "abs_tol": 1e-12},
      "eigen": {"max_iter": 50000, "tol": 1e-8},
      "compare_full": false,
      "output": "out",
      "seed": 0
    }

``x`` in expressions is the vertex position in the sorted vertex list of
the whole graph.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigParse
from .expr import Expression, ExpressionError, ScalarExpression, VertexTimeExpression

__all__ = ["ExperimentConfig", "load_config", "parse_config", "config_hash", "set_param"]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


def _one_of(model, names):
    given = [n for n in names if getattr(model, n) is not None]
    if len(given) != 1:
        raise ValueError(f"exactly one of {', '.join(names)} is required, got {given or 'none'}")
    return model


def _check_expr(text, variables):
    try:
        Expression(text, variables)
    except ExpressionError as e:
        raise ValueError(str(e)) from None


class GraphConfig(_Model):
    file: Optional[str] = None
    kind: Optional[Literal["path", "star", "grid", "random"]] = None
    n: Optional[int] = None
    k: Optional[int] = None
    m: Optional[int] = None
    prob: Optional[float] = None
    seed: Optional[int] = None
    weight: float = 1.0

    @model_validator(mode="after")
    def _shape(self):
        _one_of(self, ("file", "kind"))
        need = {"path": ("n",), "star": ("k",), "grid": ("m", "n"), "random": ("n", "prob")}
        for name in need.get(self.kind, ()):
            if getattr(self, name) is None:
                raise ValueError(f"graph kind {self.kind!r} needs {name!r}")
        return self


class DomainConfig(_Model):
    interior: Optional[list[str]] = None
    exclude: Optional[list[str]] = None

    @model_validator(mode="after")
    def _shape(self):
        return _one_of(self, ("interior", "exclude"))


class SigmaConfig(_Model):
    constant: Optional[float] = None
    expr: Optional[str] = None

    @model_validator(mode="after")
    def _shape(self):
        _one_of(self, ("constant", "expr"))
        if self.expr is not None:
            _check_expr(self.expr, ("x", "t"))
        return self


class PowerTerm(_Model):
    C: float
    q: float


class FConfig(_Model):
    power: Optional[PowerTerm] = None
    power_sum: Optional[list[PowerTerm]] = None
    expr: Optional[str] = None

    @model_validator(mode="after")
    def _shape(self):
        _one_of(self, ("power", "power_sum", "expr"))
        if self.expr is not None:
            _check_expr(self.expr, ("s",))
        return self


class U0Config(_Model):
    constant: Optional[float] = None
    values: Optional[dict[str, float]] = None
    expr: Optional[str] = None

    @model_validator(mode="after")
    def _shape(self):
        _one_of(self, ("constant", "values", "expr"))
        if self.expr is not None:
            _check_expr(self.expr, ("x",))
        return self


class IntegratorConfig(_Model):
    horizon: float = 10.0
    initial_step: Optional[float] = None
    min_step: Optional[float] = None
    blowup_threshold: float = 1e8
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    method: Literal["auto", "dopri5", "radau"] = "auto"


class EigenConfig(_Model):
    max_iter: int = 50_000
    tol: float = 1e-8


class ExperimentConfig(_Model):
    graph: GraphConfig
    domain: DomainConfig
    scenario: Literal["theorem-1", "theorem-2", "raw-integrate", "eigen-only"]
    p: float
    q: Optional[float] = None
    C: Optional[float] = None
    delta: Optional[float] = None
    eps: Optional[float] = None
    sigma: SigmaConfig = Field(default_factory=lambda: SigmaConfig(constant=1.0))
    f: Optional[FConfig] = None
    u0: Optional[U0Config] = None
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    eigen: EigenConfig = Field(default_factory=EigenConfig)
    compare_full: bool = False
    output: str = "out"
    seed: int = 0

    @model_validator(mode="after")
    def _scenario_keys(self):
        need = {
            "theorem-1": ("eps", "delta", "u0"),
            "theorem-2": ("q", "C", "delta", "u0"),
            "raw-integrate": ("f", "u0"),
            "eigen-only": (),
        }[self.scenario]
        for name in need:
            if getattr(self, name) is None:
                raise ValueError(f"scenario {self.scenario!r} requires {name!r}")
        return self

    def to_json(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    # builders

    def build_graph(self, base_dir: Path | None = None):
        from .graph import generate_graph, read_edge_list

        gc = self.graph
        if gc.file is not None:
            path = Path(gc.file)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            return read_edge_list(path)
        args = {
            "path": (gc.n,),
            "star": (gc.k,),
            "grid": (gc.m, gc.n),
            "random": (gc.n, gc.prob, self.seed if gc.seed is None else gc.seed),
        }[gc.kind]
        return generate_graph(gc.kind, *args, weight=gc.weight)

    def interior(self, g) -> list[str]:
        if self.domain.interior is not None:
            return list(self.domain.interior)
        drop = set(self.domain.exclude)
        for x in drop:
            g.idx(x)
        return [x for x in g.vertices if x not in drop]

    def build_sigma(self, g):
        if self.sigma.constant is not None:
            return float(self.sigma.constant)
        return VertexTimeExpression(self.sigma.expr, g.vertices)

    def build_f(self):
        from .dynamics import PowerLaw

        fc = self.f
        if fc is None:
            return None
        if fc.power is not None:
            return PowerLaw.single(fc.power.C, fc.power.q)
        if fc.power_sum is not None:
            return PowerLaw([(t.C, t.q) for t in fc.power_sum])
        return ScalarExpression(fc.expr)

    def build_u0(self, g):
        """Initial data as a map on all of V (missing vertices are 0)."""
        uc = self.u0
        if uc.constant is not None:
            return float(uc.constant)
        if uc.values is not None:
            return dict(uc.values)
        x = np.arange(g.n, dtype=float)
        vals = np.broadcast_to(np.asarray(Expression(uc.expr, ("x",))(x=x), dtype=float), x.shape)
        return dict(zip(g.vertices, map(float, vals)))


def _key_path(err) -> str:
    loc = [str(part) for part in err["loc"]]
    return ".".join(loc) if loc else "<root>"


def parse_config(data: dict | str) -> ExperimentConfig:
    """Validate a config (dict or JSON text); errors name the offending key."""
    try:
        if isinstance(data, str):
            return ExperimentConfig.model_validate_json(data)
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        raise ConfigParse(_key_path(err), err["msg"]) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigParse("<file>", str(e)) from None
    return parse_config(text)


def config_hash(cfg: ExperimentConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    return hashlib.sha256(cfg.dumps().encode()).hexdigest()[:16]


def set_param(data: dict, name: str, value) -> dict:
    """Copy of a config dict with a dotted scalar parameter replaced.

    ``u0`` and ``sigma`` set the constant variant.
    """
    out = json.loads(json.dumps(data))
    if name in ("u0", "sigma"):
        out[name] = {"constant": value}
        return out
    keys = name.split(".")
    node = out
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigParse(name, "parameter path goes through a non-object")
    node[keys[-1]] = value
    return out
