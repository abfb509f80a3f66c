"""Problem instances: equation coefficients, boundary conditions, initial data.

The evolution law is

    u_t - a(t,x,u,u_x) u_xx = f(t,x,u,u_x) [+ f1(t,x,u,u_x)]   on (0,T) x (-ell, ell)

with, at each endpoint, either a dynamical condition

    u_t + b u_x = g [+ g1]   at x = +ell        u_t - b u_x = g [+ g1]   at x = -ell

(the sign makes +/- u_x the outward derivative) or a Dirichlet pin
u = value(t).  All coefficients are Expr trees in (t, x, z, p) where z is
the solution value and p its gradient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

from .errors import ConfigError
from .expr import Expr, free_variables, parse, to_str

__all__ = ["DynamicBC", "DirichletBC", "BoundaryCondition", "ProblemSpec"]


@dataclass(frozen=True)
class DynamicBC:
    b: Expr
    g: Expr
    g1: Expr | None = None

    kind = "dynamic"


@dataclass(frozen=True)
class DirichletBC:
    value: Expr  # function of t only

    kind = "dirichlet"


BoundaryCondition = Union[DynamicBC, DirichletBC]


@dataclass(frozen=True)
class ProblemSpec:
    ell: float
    T: float
    a: Expr
    f: Expr
    u0: Expr
    bc_minus: BoundaryCondition
    bc_plus: BoundaryCondition
    f1: Expr | None = None

    def __post_init__(self):
        if not (self.ell > 0):
            raise ConfigError(f"ell must be positive, got {self.ell}")
        if not (self.T > 0):
            raise ConfigError(f"T must be positive, got {self.T}")
        bad = free_variables(self.u0) - {"x"}
        if bad:
            raise ConfigError(f"u0 may depend on x only, found {sorted(bad)}")
        for side, bc in (("bc_minus", self.bc_minus), ("bc_plus", self.bc_plus)):
            if isinstance(bc, DirichletBC):
                bad = free_variables(bc.value) - {"t"}
                if bad:
                    raise ConfigError(f"{side} Dirichlet value may depend on t only, found {sorted(bad)}")

    @property
    def has_split_rhs(self) -> bool:
        if self.f1 is not None:
            return True
        return any(isinstance(bc, DynamicBC) and bc.g1 is not None
                   for bc in (self.bc_minus, self.bc_plus))

    # ------------------------------------------------------------------
    # JSON wire format (expression strings)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        def bc(key: str) -> BoundaryCondition:
            raw = d.get(key)
            if raw is None:
                raise ConfigError(f"missing boundary condition {key!r}")
            kind = raw.get("kind", "dynamic")
            if kind == "dynamic":
                g1 = raw.get("g1")
                return DynamicBC(b=parse(raw["b"]), g=parse(raw["g"]),
                                 g1=parse(g1) if g1 is not None else None)
            if kind == "dirichlet":
                return DirichletBC(value=parse(raw.get("value", "0")))
            raise ConfigError(f"unknown boundary kind {kind!r}")

        try:
            f1 = d.get("f1")
            return cls(
                ell=float(d["ell"]), T=float(d["T"]),
                a=parse(d["a"]), f=parse(d.get("f", "0")),
                u0=parse(d["u0"]),
                bc_minus=bc("bc_minus"), bc_plus=bc("bc_plus"),
                f1=parse(f1) if f1 is not None else None,
            )
        except KeyError as exc:
            raise ConfigError(f"problem spec missing field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        def bc(b: BoundaryCondition) -> dict:
            if isinstance(b, DynamicBC):
                out = {"kind": "dynamic", "b": to_str(b.b), "g": to_str(b.g)}
                if b.g1 is not None:
                    out["g1"] = to_str(b.g1)
                return out
            return {"kind": "dirichlet", "value": to_str(b.value)}

        out = {"ell": self.ell, "T": self.T, "a": to_str(self.a), "f": to_str(self.f),
               "u0": to_str(self.u0), "bc_minus": bc(self.bc_minus), "bc_plus": bc(self.bc_plus)}
        if self.f1 is not None:
            out["f1"] = to_str(self.f1)
        return out
