# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.


"""
Scenario files: TOML documents naming a weighted chart or an immersion, the
mesh ladder, free constants and the checks to run.

    id = "hemisphere_dirichlet"
    [manifold]
    dim = 2
    metric = ["1", "0", "sin(x1)^2"]
    weight = "0"
    axes = [{ lower = "0", upper = "pi/2", lower_end = "singular" },
            { lower = "0", upper = "2*pi", periodic = true }]
    [mesh]
    counts = [16, 32]
    [checks.thm1]
    which = "dirichlet"
    c = 1
"""

from __future__ import annotations

import enum
import importlib.resources
import logging as __logging
import os
import re
from dataclasses import dataclass, field
from typing import Any

import tomli

import driftcheck.exprlang as exprlang
from driftcheck.discretize import BoundaryCondition, MeshSpec
from driftcheck.exprlang import Expr, ExprException
from driftcheck.geometry import Axis, AxisEnd, GeometryException, PlanMode, SamplePlan, WeightedManifold
from driftcheck.hypersurface import Immersion, ImmersionException

module_logger = __logging.getLogger(__name__)


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class SCType(enum.IntEnum):
    SC_PARSE = 0
    SC_VALIDATION = 1
    SC_NOT_FOUND = 2


class ScenarioException(Exception):
    def __init__(self, sctype: SCType, msg: str, line: int | None = None, column: int | None = None,
                 field: str | None = None, *args):
        super().__init__(msg, args)
        self.type = sctype
        self.msg = msg
        self.line = line
        self.column = column
        self.field = field

    def __str__(self):
        where = []
        if self.field:
            where.append(self.field)
        if self.line is not None:
            where.append(f"line {self.line}, column {self.column}")
        return f"{self.msg} ({'; '.join(where)})" if where else self.msg


@dataclass(frozen=True)
class CheckRequirement:
    target: str
    params: tuple[str, ...] = ()
    needs_which: bool = False
    needs_f: bool = False
    f_dim: str = "chart"


KNOWN_CHECKS = {
    "thm1": CheckRequirement("manifold", ("c",), needs_which=True),
    "madu": CheckRequirement("manifold", ("m", "a"), needs_which=True),
    "corollary": CheckRequirement("manifold", needs_which=True),
    "obata": CheckRequirement("manifold"),
    "bochner": CheckRequirement("manifold", needs_f=True),
    "hessian_bound": CheckRequirement("manifold", ("m",), needs_f=True),
    "reilly": CheckRequirement("manifold", ("m",), needs_f=True),
    "h_minimality": CheckRequirement("immersion"),
    "splitting": CheckRequirement("immersion", needs_f=True, f_dim="ambient"),
    "stability": CheckRequirement("immersion"),
    "prop25": CheckRequirement("immersion"),
    "thm2": CheckRequirement("immersion", ("c",)),
    "conventions": CheckRequirement("immersion"),
}


@dataclass(frozen=True)
class Tolerances:
    hypothesis: float = 1e-9
    eigen_residual: float = 1e-6
    identity: float = 1e-7


@dataclass(frozen=True)
class CheckSpec:
    name: str
    params: dict[str, float] = field(default_factory=dict)
    which: BoundaryCondition | None = None
    functions: tuple[Expr, ...] = ()
    tolerance: float | None = None
    options: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    manifold: WeightedManifold | None
    immersion: Immersion | None
    mesh: MeshSpec
    plan: SamplePlan
    params: dict[str, float]
    checks: tuple[CheckSpec, ...]
    tolerances: Tolerances
    source: str

    @property
    def target(self) -> WeightedManifold | Immersion:
        return self.manifold if self.manifold is not None else self.immersion

    @property
    def conventions(self) -> dict[str, Any]:
        imm = self.immersion
        return {"shape_sign": None if imm is None else imm.shape_sign,
                "orientation": None if imm is None else imm.orientation,
                "neumann_indexing": "first nonzero"}


SIGNS = {"plus": 1, "minus": -1}


def _invalid(name: str, msg: str) -> ScenarioException:
    return ScenarioException(SCType.SC_VALIDATION, msg, field=name)


def _table(doc: dict, name: str, required: bool = False) -> dict:
    value = doc.get(name)
    if value is None:
        if required:
            raise _invalid(name, f"missing table [{name}]")
        return {}
    if not isinstance(value, dict):
        raise _invalid(name, f"[{name}] must be a table")
    return value


def _expr(text: Any, dim: int, name: str) -> Expr:
    if not isinstance(text, str):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(text)
        else:
            raise _invalid(name, "expected an expression string")
    try:
        return exprlang.parse(text, dim)
    except ExprException as e:
        column = None if e.offset is None else e.offset + 1
        raise ScenarioException(SCType.SC_PARSE, f"{name}: bad expression '{text}': {e}", column=column,
                                field=name) from e


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool):
        raise _invalid(name, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return exprlang.parse_constant(value)
        except ExprException as e:
            raise ScenarioException(SCType.SC_PARSE, f"{name}: bad constant '{value}': {e}", field=name) from e
    raise _invalid(name, "expected a number or a constant expression")


def _positive_int(value: Any, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise _invalid(name, f"expected an integer >= {minimum}")
    return value


def _end(value: Any, name: str) -> AxisEnd:
    try:
        return AxisEnd(value)
    except ValueError:
        raise _invalid(name, f"end must be 'boundary' or 'singular', got {value!r}")


def _sign(value: Any, name: str) -> int:
    if isinstance(value, str) and value in SIGNS:
        return SIGNS[value]
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise _invalid(name, f"expected plus, minus, 1 or -1, got {value!r}")


def _axes(raw: Any, dim: int, name: str) -> tuple[Axis, ...]:
    if not isinstance(raw, list) or len(raw) != dim:
        raise _invalid(name, f"expected {dim} axis tables")
    axes = []
    for i, entry in enumerate(raw):
        where = f"{name}[{i}]"
        if not isinstance(entry, dict) or "lower" not in entry or "upper" not in entry:
            raise _invalid(where, "axis needs lower and upper")
        try:
            axes.append(Axis(lower=_number(entry["lower"], f"{where}.lower"),
                             upper=_number(entry["upper"], f"{where}.upper"),
                             lower_end=_end(entry.get("lower_end", "boundary"), f"{where}.lower_end"),
                             upper_end=_end(entry.get("upper_end", "boundary"), f"{where}.upper_end"),
                             periodic=bool(entry.get("periodic", False))))
        except GeometryException as e:
            raise _invalid(where, str(e)) from e
    return tuple(axes)


def _manifold(section: dict) -> WeightedManifold:
    dim = section.get("dim")
    if dim not in (1, 2):
        raise _invalid("manifold.dim", "dim must be 1 or 2")
    if "metric" not in section:
        raise _invalid("metric", "missing metric")
    if "weight" not in section:
        raise _invalid("weight", "missing weight")
    raw = section["metric"]
    if isinstance(raw, str):
        raw = [raw]
    if not isinstance(raw, list) or len(raw) != dim * (dim + 1) // 2:
        raise _invalid("metric", f"expected {dim * (dim + 1) // 2} metric components (upper triangle, row by row)")
    metric = tuple(_expr(t, dim, f"manifold.metric[{i}]") for i, t in enumerate(raw))
    axes = _axes(section.get("axes"), dim, "manifold.axes")
    try:
        weight = _expr(section["weight"], dim, "manifold.weight")
        manifold = WeightedManifold(dim=dim, metric=metric, weight=weight, axes=axes)
        manifold.validate()
    except (GeometryException, ExprException) as e:
        raise _invalid("manifold", str(e)) from e
    return manifold


def _immersion(section: dict) -> Immersion:
    raw = section.get("map")
    if not isinstance(raw, list) or len(raw) != 3:
        raise _invalid("map", "expected three map components")
    if "weight" not in section:
        raise _invalid("weight", "missing weight")
    try:
        return Immersion(axes=_axes(section.get("axes"), 2, "immersion.axes"),
                         map=tuple(_expr(t, 2, f"immersion.map[{i}]") for i, t in enumerate(raw)),
                         weight=_expr(section["weight"], 3, "immersion.weight"),
                         orientation=_sign(section.get("orientation", 1), "immersion.orientation"),
                         shape_sign=_sign(section.get("shape_sign", 1), "immersion.shape_sign"))
    except ImmersionException as e:
        raise _invalid("immersion", str(e)) from e


def _mesh(section: dict, dim: int) -> MeshSpec:
    counts = section.get("counts", [8] * dim)
    if isinstance(counts, int):
        counts = [counts]
    if not isinstance(counts, list) or len(counts) != dim:
        raise _invalid("mesh.counts", f"expected {dim} element counts")
    counts = tuple(_positive_int(c, "mesh.counts", 2) for c in counts)
    reduction = section.get("reduction")
    if reduction not in (None, "axisymmetric"):
        raise _invalid("mesh.reduction", f"unknown reduction {reduction!r}")
    return MeshSpec(counts=counts, levels=_positive_int(section.get("levels", 3), "mesh.levels"),
                    ratio=_positive_int(section.get("ratio", 2), "mesh.ratio", 2),
                    quadrature=_positive_int(section.get("quadrature", 4), "mesh.quadrature"),
                    reduction=reduction)


def _plan(section: dict) -> SamplePlan:
    try:
        mode = PlanMode(section.get("mode", "grid"))
    except ValueError:
        raise _invalid("plan.mode", "mode must be 'grid' or 'low-discrepancy'")
    return SamplePlan(mode=mode, count=_positive_int(section.get("count", 10), "plan.count"),
                      inset=_number(section.get("inset", 1e-3), "plan.inset"))


def _check(name: str, options: Any, scenario_params: dict[str, float], target: str, dim: int) -> CheckSpec:
    where = f"checks.{name}"
    if name not in KNOWN_CHECKS:
        raise _invalid(where, f"unknown check '{name}'")
    req = KNOWN_CHECKS[name]
    if req.target != target:
        raise _invalid(where, f"check '{name}' needs a [{req.target}] section")
    if not isinstance(options, dict):
        raise _invalid(where, "check options must be a table")
    params = dict(scenario_params)
    for key in ("c", "m", "a"):
        if key in options:
            params[key] = _number(options[key], f"{where}.{key}")
    missing = [p for p in req.params if p not in params]
    if missing:
        raise _invalid(f"params.{missing[0]}", f"check '{name}' needs parameter '{missing[0]}'")
    which = None
    if req.needs_which:
        try:
            which = BoundaryCondition(options.get("which"))
        except ValueError:
            raise _invalid(f"{where}.which", "which must be 'dirichlet' or 'neumann'")
    raw_f = options.get("f")
    if raw_f is None and req.needs_f:
        raise _invalid(f"{where}.f", f"check '{name}' needs test functions f")
    if isinstance(raw_f, str):
        raw_f = [raw_f]
    f_dim = 3 if req.f_dim == "ambient" else dim
    functions = tuple(_expr(t, f_dim, f"{where}.f[{i}]") for i, t in enumerate(raw_f or []))
    tolerance = options.get("tolerance")
    if tolerance is not None:
        tolerance = _number(tolerance, f"{where}.tolerance")
    expect = options.get("expect")
    if expect not in (None, "stable", "unstable"):
        raise _invalid(f"{where}.expect", "expect must be 'stable' or 'unstable'")
    known = {"c", "m", "a", "which", "f", "tolerance"}
    extra = {k: v for k, v in options.items() if k not in known}
    return CheckSpec(name=name, params=params, which=which, functions=functions, tolerance=tolerance, options=extra)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        line, column = getattr(e, "lineno", None), getattr(e, "colno", None)
        if line is None:
            match = re.search(r"line (\d+), column (\d+)", str(e))
            if match:
                line, column = int(match.group(1)), int(match.group(2))
        raise ScenarioException(SCType.SC_PARSE, f"{source}: {e}", line=line, column=column) from e
    sid = doc.get("id")
    if not isinstance(sid, str) or not sid:
        raise _invalid("id", "missing scenario id")
    has_manifold, has_immersion = "manifold" in doc, "immersion" in doc
    if has_manifold == has_immersion:
        raise _invalid("manifold", "exactly one of [manifold] and [immersion] is required")
    if has_manifold:
        manifold, immersion = _manifold(_table(doc, "manifold")), None
        dim, target = manifold.dim, "manifold"
    else:
        manifold, immersion = None, _immersion(_table(doc, "immersion"))
        dim, target = 2, "immersion"
    params = {k: _number(v, f"params.{k}") for k, v in _table(doc, "params").items()}
    tol = _table(doc, "tolerances")
    tolerances = Tolerances(hypothesis=_number(tol.get("hypothesis", 1e-9), "tolerances.hypothesis"),
                            eigen_residual=_number(tol.get("eigen_residual", 1e-6), "tolerances.eigen_residual"),
                            identity=_number(tol.get("identity", 1e-7), "tolerances.identity"))
    checks_table = _table(doc, "checks", required=True)
    if not checks_table:
        raise _invalid("checks", "no checks requested")
    checks = tuple(_check(name, options, params, target, dim) for name, options in checks_table.items())
    scenario = Scenario(id=sid, description=str(doc.get("description", "")), manifold=manifold,
                        immersion=immersion, mesh=_mesh(_table(doc, "mesh"), dim), plan=_plan(_table(doc, "plan")),
                        params=params, checks=checks, tolerances=tolerances, source=source)
    _get_logger("parse_scenario").info(f"loaded scenario {sid} from {source}: checks {[c.name for c in checks]}")
    return scenario


def _catalog_dir():
    return importlib.resources.files("driftcheck").joinpath("catalog")


def catalog_names() -> list[str]:
    return sorted(entry.name[:-len(".toml")] for entry in _catalog_dir().iterdir() if entry.name.endswith(".toml"))


def load_scenario(path: str) -> Scenario:
    """Load a scenario file, or a shipped catalog scenario by name."""
    if os.path.isfile(path):
        with open(path, "r", encoding="utf-8") as f:
            return parse_scenario(f.read(), path)
    if path in catalog_names():
        return parse_scenario(_catalog_dir().joinpath(f"{path}.toml").read_text(encoding="utf-8"), path)
    raise ScenarioException(SCType.SC_NOT_FOUND, f"no scenario file or catalog entry named '{path}'")


def catalog() -> list[Scenario]:
    return [load_scenario(name) for name in catalog_names()]
