"""Linearization kit: variable/constraint fragments for mixed-integer models.

``MilpBlock`` is the value object every model builder emits: a bag of
variable declarations, sparse linear rows, and objective terms. Blocks
compose by name -- merging two blocks that declare the same variable
aliases them (bounds are intersected, kinds must agree). The helpers in
this module emit the four standard fragments used throughout the package:
polygonal inner approximations of apparent-power circles, tangent models
of squared flow terms, absolute-value epigraphs, and exact reformulations
of binary-times-continuous products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

INF = float("inf")

CONTINUOUS = "c"
BINARY = "b"

#: each value is a ``(name, coefficient)`` term or a plain constant
TermLike = "str | tuple[str, float] | float"


class BlockError(ValueError):
    """Malformed block: bad bounds, unknown variable, or kind clash."""


@dataclass(frozen=True)
class VarDef:
    name: str
    lb: float = -INF
    ub: float = INF
    kind: str = CONTINUOUS


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=", ">=" or "=="
    rhs: float
    tags: tuple[str, ...] = ()


class Lin:
    """Mutable linear expression: coefficient map plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self):
        self.terms: dict[str, float] = {}
        self.const = 0.0

    def add(self, name: str, coef: float) -> "Lin":
        if coef != 0.0:
            self.terms[name] = self.terms.get(name, 0.0) + coef
        return self

    def addc(self, value: float) -> "Lin":
        self.const += value
        return self

    def add_term(self, term, scale: float = 1.0) -> "Lin":
        """Add a TermLike: var name, (var, coef) pair, or constant."""
        if isinstance(term, str):
            self.add(term, scale)
        elif isinstance(term, tuple):
            self.add(term[0], term[1] * scale)
        else:
            self.addc(float(term) * scale)
        return self


class MilpBlock:
    def __init__(self):
        self.variables: dict[str, VarDef] = {}
        self.rows: list[Row] = []
        self.objective: dict[str, float] = {}
        self.obj_offset = 0.0
        self.tags: set[str] = set()
        # set by bind() when a fully-substituted row is violated
        self.const_infeasible: str | None = None

    # -- construction -------------------------------------------------

    def var(self, name: str, lb: float = -INF, ub: float = INF,
            kind: str = CONTINUOUS) -> str:
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise BlockError(f"variable {name}: lb {lb} > ub {ub}")
        old = self.variables.get(name)
        if old is not None:
            if old.kind != kind:
                raise BlockError(f"variable {name}: kind clash {old.kind}/{kind}")
            lb, ub = max(old.lb, lb), min(old.ub, ub)
            if lb > ub:
                raise BlockError(f"variable {name}: merged bounds empty")
        self.variables[name] = VarDef(name, lb, ub, kind)
        return name

    def row(self, coeffs: Mapping[str, float], sense: str, rhs: float,
            tags: Iterable[str] = ()) -> None:
        if sense not in ("<=", ">=", "=="):
            raise BlockError(f"bad sense {sense!r}")
        tags = tuple(tags)
        items = tuple(sorted((n, c) for n, c in coeffs.items() if c != 0.0))
        self.rows.append(Row(items, sense, float(rhs), tags))
        self.tags.update(tags)

    def row_expr(self, expr: Lin, sense: str, rhs: float = 0.0,
                 tags: Iterable[str] = ()) -> None:
        """Emit ``expr (sense) rhs`` with the expression constant folded in."""
        self.row(expr.terms, sense, rhs - expr.const, tags)

    def obj(self, name: str, coef: float) -> None:
        if coef != 0.0:
            self.objective[name] = self.objective.get(name, 0.0) + coef

    def tag(self, *tags: str) -> None:
        self.tags.update(tags)

    # -- composition ---------------------------------------------------

    def merge(self, *others: "MilpBlock") -> "MilpBlock":
        for other in others:
            for v in other.variables.values():
                self.var(v.name, v.lb, v.ub, v.kind)
            self.rows.extend(other.rows)
            for name, coef in other.objective.items():
                self.obj(name, coef)
            self.obj_offset += other.obj_offset
            self.tags.update(other.tags)
            if other.const_infeasible and not self.const_infeasible:
                self.const_infeasible = other.const_infeasible
        return self

    def bind(self, values: Mapping[str, float]) -> "MilpBlock":
        """Return a copy with the given variables fixed and eliminated.

        Rows whose variables are all fixed are checked against their
        right-hand side; a violation beyond tolerance marks the block
        constant-infeasible (solvers report it as an infeasible model).
        """
        out = MilpBlock()
        out.tags = set(self.tags)
        out.obj_offset = self.obj_offset
        out.const_infeasible = self.const_infeasible
        for v in self.variables.values():
            if v.name not in values:
                out.variables[v.name] = v
        for name, coef in self.objective.items():
            if name in values:
                out.obj_offset += coef * values[name]
            else:
                out.objective[name] = coef
        tol = 1e-6
        for r in self.rows:
            kept: dict[str, float] = {}
            shift = 0.0
            for name, coef in r.coeffs:
                if name in values:
                    shift += coef * values[name]
                else:
                    kept[name] = kept.get(name, 0.0) + coef
            rhs = r.rhs - shift
            if kept:
                out.rows.append(Row(tuple(sorted(kept.items())), r.sense, rhs, r.tags))
                continue
            scale = max(1.0, abs(r.rhs))
            bad = ((r.sense == "<=" and rhs < -tol * scale)
                   or (r.sense == ">=" and rhs > tol * scale)
                   or (r.sense == "==" and abs(rhs) > tol * scale))
            if bad and out.const_infeasible is None:
                out.const_infeasible = f"bound row violated: {r.tags} rhs {rhs:.3e}"
        return out

    # -- inspection ----------------------------------------------------

    def validate(self) -> None:
        for r in self.rows:
            for name, _ in r.coeffs:
                if name not in self.variables:
                    raise BlockError(f"row references undeclared variable {name}")
        for name in self.objective:
            if name not in self.variables:
                raise BlockError(f"objective references undeclared variable {name}")
        for v in self.variables.values():
            if v.kind == BINARY and (v.lb < 0 or v.ub > 1):
                raise BlockError(f"binary {v.name} with bounds ({v.lb}, {v.ub})")

    def n_binary(self) -> int:
        return sum(1 for v in self.variables.values() if v.kind == BINARY)

    def dump_lp(self) -> str:
        """Human-readable LP-style text rendering for debugging."""
        def fmt(coeffs):
            parts = []
            for name, coef in coeffs:
                sign = "-" if coef < 0 else "+"
                parts.append(f"{sign} {abs(coef):g} {name}")
            s = " ".join(parts) if parts else "0"
            return s[2:] if s.startswith("+ ") else s

        lines = ["minimize:", "  " + fmt(sorted(self.objective.items()))
                 + (f" + {self.obj_offset:g}" if self.obj_offset else "")]
        lines.append("subject to:")
        for i, r in enumerate(self.rows):
            tag = f"  [{','.join(r.tags)}]" if r.tags else ""
            lines.append(f"  r{i}: {fmt(r.coeffs)} {r.sense} {r.rhs:g}{tag}")
        lines.append("bounds:")
        for v in self.variables.values():
            lines.append(f"  {v.lb:g} <= {v.name} <= {v.ub:g}")
        bins = [v.name for v in self.variables.values() if v.kind == BINARY]
        if bins:
            lines.append("binary: " + " ".join(bins))
        return "\n".join(lines) + "\n"


def combine(*blocks: MilpBlock) -> MilpBlock:
    return MilpBlock().merge(*blocks)


# -- fragments ---------------------------------------------------------


def polygon_soc(p: str, q: str, s, n_sides: int,
                tags: Iterable[str] = ("polygon",)) -> MilpBlock:
    """Inner polygonal approximation of ``p^2 + q^2 <= s^2``.

    Emits ``n_sides`` half-planes whose feasible set is the regular
    polygon inscribed in the circle of radius ``s`` (vertices on the
    circle, inradius ``s*cos(pi/n)``). Every accepted point satisfies the
    true quadratic constraint. ``s`` may be a constant, a variable name,
    or a ``(variable, coefficient)`` scaled term (e.g. a rating gated by
    an installation binary).
    """
    if n_sides < 4 or n_sides % 2:
        raise BlockError(f"polygon needs an even side count >= 4, got {n_sides}")
    block = MilpBlock()
    tags = tuple(tags)
    shrink = math.cos(math.pi / n_sides)
    for k in range(n_sides):
        theta = math.pi * (2 * k + 1) / n_sides
        expr = Lin().add(p, math.cos(theta)).add(q, math.sin(theta))
        expr.add_term(s, -shrink)
        block.row_expr(expr, "<=", 0.0, tags)
    return block


def pwl_quadratic(x: str, x_max: float, segments: int, *, x_min: float | None = None,
                  name: str | None = None,
                  tags: Iterable[str] = ("pwl",)) -> tuple[str, MilpBlock]:
    """Tangent (outer) model of ``x**2`` on ``[x_min, x_max]``.

    Returns an auxiliary ``y`` with one supporting row per segment,
    tangent at the segment midpoint: ``y >= 2*m*x - m^2``. The model
    under-estimates the square; the worst gap is ``(width/2)^2`` per
    segment, reached at the breakpoints. Sound wherever ``y`` carries a
    positive cost, which pushes ``y`` onto the tangent envelope.
    """
    if segments < 1:
        raise BlockError("segments must be >= 1")
    if not math.isfinite(x_max):
        raise BlockError(f"pwl_quadratic needs a finite range for {x}")
    if x_min is None:
        x_min = -x_max
    if not math.isfinite(x_min) or x_min >= x_max:
        raise BlockError(f"bad pwl interval [{x_min}, {x_max}]")
    y = name or f"sq({x})"
    block = MilpBlock()
    block.var(y, lb=0.0, ub=max(x_min * x_min, x_max * x_max))
    width = (x_max - x_min) / segments
    tags = tuple(tags)
    for j in range(segments):
        mid = x_min + (j + 0.5) * width
        # y >= 2*mid*x - mid^2
        block.row({y: 1.0, x: -2.0 * mid}, ">=", -mid * mid, tags)
    return y, block


def abs_value(x: str, *, name: str | None = None, bound: float = INF,
              tags: Iterable[str] = ("abs_value",)) -> tuple[str, MilpBlock]:
    """Epigraph of ``|x|``: rows ``x+ >= x`` and ``x+ >= -x``.

    Tight only where the auxiliary carries positive objective cost or is
    capped by other rows; callers own that argument.
    """
    xp = name or f"abs({x})"
    block = MilpBlock()
    block.var(xp, lb=0.0, ub=bound)
    tags = tuple(tags)
    block.row({xp: 1.0, x: -1.0}, ">=", 0.0, tags)
    block.row({xp: 1.0, x: 1.0}, ">=", 0.0, tags)
    return xp, block


def bilinear_binary(y: str, x: str, x_max: float, *, name: str | None = None,
                    tags: Iterable[str] = ("bilinear",)) -> tuple[str, MilpBlock]:
    """Exact reformulation of ``z = y * x`` for binary-valued ``y``.

    ``x`` must live in ``[0, x_max]`` with finite ``x_max`` (the rows use
    it as the activation constant). Exact at every point where ``y`` takes
    an integer value; ``y`` may be a declared binary or a continuous
    variable that other rows pin to {0, 1}.
    """
    if not math.isfinite(x_max):
        raise BlockError(f"bilinear_binary needs a finite bound for {x}")
    z = name or f"prod({y},{x})"
    block = MilpBlock()
    block.var(z, lb=0.0, ub=max(x_max, 0.0))
    tags = tuple(tags)
    block.row({z: 1.0, y: -x_max}, "<=", 0.0, tags)
    block.row({z: 1.0, x: -1.0}, "<=", 0.0, tags)
    block.row({z: 1.0, x: -1.0, y: -x_max}, ">=", -x_max, tags)
    return z, block
