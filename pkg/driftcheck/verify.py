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
Checks of the weighted eigenvalue estimates and of the pointwise identities
behind them.

Theorem-style checks return a :class:`CheckReport` with a three-valued verdict:
a conclusion is only judged when every hypothesis held on the sample plan.
Bounds are compared against the Richardson-extrapolated first eigenvalue with
tolerance max(10 * extrapolation error estimate, 1e-8).
"""

from __future__ import annotations

import enum
import logging as __logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

import driftcheck.discretize as discretize
import driftcheck.eigensolve as eigensolve
import driftcheck.exprlang as exprlang
import driftcheck.geometry as geometry
from driftcheck.discretize import BoundaryCondition, MeshSpec
from driftcheck.exprlang import Expr
from driftcheck.geometry import HypothesisCheck, SamplePlan

module_logger = __logging.getLogger(__name__)

CONCLUSION_FLOOR = 1e-8


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class VEType(enum.IntEnum):
    VE_INVALID_PARAMETER = 0
    VE_NON_CONSTANT_WEIGHT = 1
    VE_NO_BOUNDARY = 2


class VerifyException(Exception):
    def __init__(self, vetype: VEType, msg: str, *args):
        super().__init__(msg, args)
        self.type = vetype
        self.msg = msg

    def __str__(self):
        return self.msg


class Verdict(enum.Enum):
    CONFIRMED = "confirmed"
    VIOLATED = "violated"
    HYPOTHESES_NOT_MET = "hypotheses-not-met"
    ERROR = "error"


@dataclass
class CheckReport:
    name: str
    verdict: Verdict
    hypotheses: list[HypothesisCheck] = field(default_factory=list)
    computed: dict[str, Any] = field(default_factory=dict)
    bounds: dict[str, Any] = field(default_factory=dict)
    runtime_ms: float | None = None
    message: str | None = None


@dataclass
class VerificationReport:
    scenario_id: str
    conventions: dict[str, Any]
    checks: list[CheckReport] = field(default_factory=list)

    def worst(self) -> Verdict | None:
        verdicts = {c.verdict for c in self.checks}
        for v in (Verdict.VIOLATED, Verdict.ERROR):
            if v in verdicts:
                return v
        return None

    def exit_code(self) -> int:
        """2 if any check is violated, else 0; errored checks stay in the report only."""
        return 2 if self.worst() == Verdict.VIOLATED else 0


# pointwise identities

def bochner_residual(manifold, f: Expr, points) -> float:
    """max |1/2 L|grad f|^2 - (|Hess f|^2 + <grad f, grad L f> + Ric_h(grad f, grad f))| with L the drift Laplacian."""
    points = np.asarray(points, dtype=np.float64)
    geo = manifold.local(points, 3)
    fj = exprlang.taylor(f, points, 3)
    lhs = geo.drift_laplacian(geo.grad_dot(fj, fj)) * 0.5
    rhs = geo.norm2(geo.hessian(fj)) + geo.grad_dot(fj, geo.drift_laplacian(fj)) + geo.bilinear(geo.ric_h(), fj, fj)
    return float(np.max(np.abs(lhs.value - rhs.value)))


def hessian_bound_check(manifold, f: Expr, m: float, points) -> float:
    """min over points of |Hess f|^2 - [(L f)^2/m - <grad f, grad h>^2/(m-n)]."""
    n = len(manifold.axes)
    if not m > n:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, f"m={m} must exceed the dimension {n}")
    points = np.asarray(points, dtype=np.float64)
    geo = manifold.local(points, 2)
    fj = exprlang.taylor(f, points, 2)
    hess2 = geo.norm2(geo.hessian(fj)).value
    lap_h = geo.drift_laplacian(fj).value
    fh = geo.grad_dot(fj, geo.h).value
    return float(np.min(hess2 - (lap_h ** 2 / m - fh ** 2 / (m - n))))


@dataclass(frozen=True)
class ReillyResult:
    lhs: float
    rhs: float
    margin: float
    error_estimate: float


def reilly_check(manifold, mesh: discretize.Mesh, f: Expr, m: float, q: int = 6) -> ReillyResult:
    """Integrated Reilly-type inequality: interior curvature terms against the boundary flux."""
    n = len(manifold.axes)
    if not m > n:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, f"m={m} must exceed the dimension {n}")
    faces = manifold.faces()
    if not faces:
        raise VerifyException(VEType.VE_NO_BOUNDARY, "the Reilly inequality needs a boundary")

    def interior(pts):
        geo = manifold.local(pts, 3)
        fj = exprlang.taylor(f, pts, 3)
        lap = geo.drift_laplacian(fj)
        grad2 = geo.grad_dot(fj, fj)
        terms = (lap * lap * (1.0 / m) + geo.grad_dot(fj, lap)
                 - grad2 * geo.grad_dot(geo.h, geo.h) * (1.0 / (m - n)) + geo.bilinear(geo.ric_h(), fj, fj))
        return terms.value

    def flux_for(face):
        def flux(pts):
            geo = manifold.local(pts, 2)
            fj = exprlang.taylor(f, pts, 2)
            grad2 = geo.grad_dot(fj, fj)
            eta = geometry.boundary_geometry_at(manifold, face, pts).normal
            return 0.5 * sum(eta[..., j] * grad2.partial(j) for j in range(n))
        return flux

    lhs = discretize.integrate(mesh, manifold, [interior], q)
    coarse_lhs = discretize.integrate(mesh, manifold, [interior], max(1, q - 2))
    rhs, err = 0.0, abs(lhs - coarse_lhs)
    for face in faces:
        value, face_err = discretize.integrate_boundary(mesh, manifold, face, flux_for(face), q)
        rhs += value
        err += face_err
    return ReillyResult(lhs=lhs, rhs=rhs, margin=rhs - lhs, error_estimate=err)


# eigenvalue studies

@dataclass(frozen=True)
class LevelResult:
    level: int
    counts: tuple[int, ...]
    dofs: int
    lambda1: float
    residual: float
    method: str


@dataclass(frozen=True)
class EigenvalueStudy:
    condition: BoundaryCondition | None
    reduction: str | None
    levels: tuple[LevelResult, ...]
    richardson: discretize.RichardsonResult

    @property
    def lambda1(self) -> float:
        return self.richardson.extrapolate

    def to_dict(self) -> dict:
        rich = self.richardson
        return {
            "lambda1": rich.extrapolate,
            "extrapolate": rich.extrapolate,
            "error_estimate": rich.error_estimate,
            "observed_order": rich.observed_order,
            "level_orders": list(rich.level_orders),
            "level_extrapolates": list(rich.level_extrapolates),
            "boundary_condition": None if self.condition is None else self.condition.value,
            "reduction": self.reduction,
            "levels": [{"level": lv.level, "counts": list(lv.counts), "dofs": lv.dofs, "lambda1": lv.lambda1,
                        "residual": lv.residual, "method": lv.method} for lv in self.levels],
        }


def _reduced_target(manifold, spec: MeshSpec, which: BoundaryCondition | None):
    log = _get_logger("first_eigenvalue")
    if spec.reduction != "axisymmetric":
        return manifold, spec.counts, None
    if which != BoundaryCondition.DIRICHLET:
        log.warning("axisymmetric reduction only applies to the Dirichlet problem, using the full chart")
        return manifold, spec.counts, None
    reduced = discretize.axisymmetric_reduction(manifold)
    a = next(i for i, ax in enumerate(manifold.axes) if not ax.periodic)
    return reduced, (spec.counts[a],), "axisymmetric"


def first_eigenvalue(manifold, spec: MeshSpec, which: BoundaryCondition | None, k: int = 1,
                     residual_tol: float = 1e-6, levels: int | None = None) -> EigenvalueStudy:
    """Lowest eigenvalue over the refinement ladder, nonzero for Neumann and closed charts.

    ``which`` None means a chart without boundary: no condition, constant mode deflated.
    """
    log = _get_logger("first_eigenvalue")
    target, counts, reduction = _reduced_target(manifold, spec, which)
    ladder = MeshSpec(counts=tuple(counts), levels=levels or spec.levels, ratio=spec.ratio,
                      quadrature=spec.quadrature)
    results = []
    for level in range(ladder.levels):
        mesh = discretize.build_mesh(target, ladder.counts_at(level))
        problem = discretize.assemble(target, mesh, ladder.quadrature)
        if which is None:
            deflate = True
        else:
            problem = discretize.apply_bc(problem, which)
            deflate = problem.deflate_constant
        eig = eigensolve.smallest_eigenpairs(problem.K, problem.B, k=k, tol=residual_tol, deflate_constant=deflate)
        results.append(LevelResult(level=level, counts=mesh.counts, dofs=problem.size,
                                   lambda1=float(eig.eigenvalues[k - 1]), residual=float(eig.residuals[k - 1]),
                                   method=eig.method))
        log.debug(f"level {level}: {problem.size} dofs, lambda_{k}={results[-1].lambda1:.12g}, "
                  f"residual {results[-1].residual:.2e}")
    rich = discretize.richardson([r.lambda1 for r in results], ratio=ladder.ratio)
    return EigenvalueStudy(condition=which, reduction=reduction, levels=tuple(results), richardson=rich)


def conclusion_tolerance(study: EigenvalueStudy) -> float:
    return max(10.0 * study.richardson.error_estimate, CONCLUSION_FLOOR)


def _boundary_hypotheses(manifold, plan: SamplePlan, which: BoundaryCondition, tol: float) -> list[HypothesisCheck]:
    if not manifold.faces():
        raise VerifyException(VEType.VE_NO_BOUNDARY, "boundary eigenvalue problems need a boundary")
    if which == BoundaryCondition.DIRICHLET:
        name, quantity = "boundary_weighted_mean_curvature", "weighted_mean_curvature"
    else:
        name, quantity = "boundary_second_fundamental_form", "geodesic_curvature"
    stats = geometry.boundary_scan(manifold, plan, quantity)
    return [HypothesisCheck.evaluate(name, stats.minimum, tol, plan.describe())]


def _bound_verdict(lambda1: float, bound: float, tolerance: float, strict: bool) -> Verdict:
    ok = lambda1 > bound - tolerance if strict else lambda1 >= bound - tolerance
    return Verdict.CONFIRMED if ok else Verdict.VIOLATED


def _gap(lambda1: float, bound: float) -> float | None:
    return (lambda1 - bound) / abs(bound) if bound != 0.0 else None


def thm1_verify(manifold, spec: MeshSpec, c: float, which: BoundaryCondition, plan: SamplePlan = SamplePlan(),
                tol: float = 1e-9, residual_tol: float = 1e-6, levels: int | None = None,
                name: str = "thm1") -> CheckReport:
    """lambda_1 > inf(lambda_min(Ric_h) - c |grad h|^2) under Ric_h > c|grad h|^2 and the boundary condition."""
    log = _get_logger("thm1_verify")
    if not c > 0:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, f"c must be positive, got {c}")
    desc = plan.describe()
    stats = geometry.ric_h_margin_scan(manifold, plan, c)
    hypotheses = [HypothesisCheck.evaluate("ric_h_positive", stats.ric_h_min, tol, desc, strict=True),
                  HypothesisCheck.evaluate("ric_h_exceeds_c_grad_h", stats.minimum, tol, desc, strict=True)]
    hypotheses += _boundary_hypotheses(manifold, plan, which, tol)
    study = first_eigenvalue(manifold, spec, which, residual_tol=residual_tol, levels=levels)
    bound = stats.minimum
    tolerance = conclusion_tolerance(study)
    computed = study.to_dict()
    computed["tolerance"] = tolerance
    computed["level_margins"] = [lv.lambda1 - bound for lv in study.levels]
    bounds = {"bound": bound, "argmin": list(stats.argmin), "c": c, "gap": _gap(study.lambda1, bound)}
    if all(h.passed for h in hypotheses):
        verdict = _bound_verdict(study.lambda1, bound, tolerance, strict=True)
    else:
        verdict = Verdict.HYPOTHESES_NOT_MET
    log.info(f"{name} ({which.value}): lambda_1={study.lambda1:.10g} bound={bound:.10g} -> {verdict.value}")
    return CheckReport(name=name, verdict=verdict, hypotheses=hypotheses, computed=computed, bounds=bounds)


def madu_bounds(m: float, a: float, n: int) -> tuple[float, float]:
    """(m a / (m - n), m a / (m - 1)): the stated bound and the one re-derived from the integral chain."""
    return m * a / (m - n), m * a / (m - 1.0)


def madu_verify(manifold, spec: MeshSpec, m: float, a: float, which: BoundaryCondition,
                plan: SamplePlan = SamplePlan(), tol: float = 1e-9, residual_tol: float = 1e-6,
                levels: int | None = None) -> CheckReport:
    log = _get_logger("madu_verify")
    n = len(manifold.axes)
    if not m > n:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, f"m={m} must exceed the dimension {n}")
    if not a > 0:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, f"a must be positive, got {a}")
    desc = plan.describe()
    stats = geometry.ric_h_margin_scan(manifold, plan, 1.0 / (m - n))
    hypotheses = [HypothesisCheck.evaluate("ric_h_bound", stats.minimum - a, tol, desc)]
    hypotheses += _boundary_hypotheses(manifold, plan, which, tol)
    printed, derived = madu_bounds(m, a, n)
    bounds = {"as_printed": {"value": printed, "verdict": None, "gap": None},
              "derived_form": {"value": derived, "verdict": None, "gap": None,
                               "note": "re-derived from the integral inequality chain, not stated"},
              "m": m, "a": a}
    if not all(h.passed for h in hypotheses):
        log.info(f"madu ({which.value}): hypotheses not met")
        return CheckReport(name="madu", verdict=Verdict.HYPOTHESES_NOT_MET, hypotheses=hypotheses, bounds=bounds)
    study = first_eigenvalue(manifold, spec, which, residual_tol=residual_tol, levels=levels)
    tolerance = conclusion_tolerance(study)
    computed = study.to_dict()
    computed["tolerance"] = tolerance
    v_printed = _bound_verdict(study.lambda1, printed, tolerance, strict=False)
    v_derived = _bound_verdict(study.lambda1, derived, tolerance, strict=False)
    bounds["as_printed"].update(verdict=v_printed.value, gap=_gap(study.lambda1, printed))
    bounds["derived_form"].update(verdict=v_derived.value, gap=_gap(study.lambda1, derived))
    bounds["discrepancy"] = v_printed != v_derived
    if bounds["discrepancy"]:
        log.warning(f"madu: stated bound {printed:.6g} is {v_printed.value}, "
                    f"re-derived bound {derived:.6g} is {v_derived.value}")
    return CheckReport(name="madu", verdict=v_printed, hypotheses=hypotheses, computed=computed, bounds=bounds)


def _require_constant_weight(manifold):
    if not manifold.weight.is_constant():
        raise VerifyException(VEType.VE_NON_CONSTANT_WEIGHT, f"weight '{manifold.weight}' is not constant")


def corollary_verify(manifold, spec: MeshSpec, which: BoundaryCondition, plan: SamplePlan = SamplePlan(),
                     tol: float = 1e-9, residual_tol: float = 1e-6, levels: int | None = None) -> CheckReport:
    """Constant weight: lambda_1 > inf lambda_min(Ric)."""
    _require_constant_weight(manifold)
    return thm1_verify(manifold, spec, 1.0, which, plan, tol, residual_tol, levels, name="corollary")


def obata_verify(manifold, spec: MeshSpec, plan: SamplePlan = SamplePlan(), tol: float = 1e-9,
                 residual_tol: float = 1e-6, levels: int | None = None) -> CheckReport:
    """Closed chart, constant weight, Ric >= a > 0: lambda_1 >= n a / (n - 1)."""
    _require_constant_weight(manifold)
    n = len(manifold.axes)
    if n < 2:
        raise VerifyException(VEType.VE_INVALID_PARAMETER, "the closed-manifold bound needs dimension at least 2")
    if manifold.faces():
        raise VerifyException(VEType.VE_INVALID_PARAMETER, "the closed-manifold bound needs a chart without boundary")
    stats = geometry.ric_h_margin_scan(manifold, plan, 0.0)
    a = stats.ric_h_min
    hypotheses = [HypothesisCheck.evaluate("ricci_positive", a, tol, plan.describe(), strict=True)]
    bound = n * a / (n - 1)
    bounds = {"bound": bound, "a": a}
    if not hypotheses[0].passed:
        return CheckReport(name="obata", verdict=Verdict.HYPOTHESES_NOT_MET, hypotheses=hypotheses, bounds=bounds)
    study = first_eigenvalue(manifold, spec, None, residual_tol=residual_tol, levels=levels)
    tolerance = conclusion_tolerance(study)
    computed = study.to_dict()
    computed["tolerance"] = tolerance
    bounds["gap"] = _gap(study.lambda1, bound)
    return CheckReport(name="obata", verdict=_bound_verdict(study.lambda1, bound, tolerance, strict=False),
                       hypotheses=hypotheses, computed=computed, bounds=bounds)
