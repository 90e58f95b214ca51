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


from __future__ import annotations

import logging as __logging
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

import driftcheck.discretize as discretize
import driftcheck.eigensolve as eigensolve
import driftcheck.exprlang as exprlang
import driftcheck.hypersurface as hypersurface
import driftcheck.verify as verify
from driftcheck.discretize import BoundaryCondition, DiscretizeException, MeshSpec
from driftcheck.eigensolve import EigenException
from driftcheck.exception import capture
from driftcheck.exprlang import ExprException
from driftcheck.geometry import GeometryException
from driftcheck.hypersurface import ImmersionException
from driftcheck.scenario import CheckSpec, Scenario, ScenarioException, SCType
from driftcheck.verify import CheckReport, Verdict, VerificationReport, VerifyException

module_logger = __logging.getLogger(__name__)

EVALUATION_ERRORS = (ExprException, GeometryException, DiscretizeException, EigenException, ImmersionException,
                     VerifyException)


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


@dataclass(frozen=True)
class RunOptions:
    levels: int | None = None
    timings: bool = False


def _mesh_spec(scenario: Scenario, options: RunOptions) -> MeshSpec:
    spec = scenario.mesh
    if options.levels is None:
        return spec
    return MeshSpec(counts=spec.counts, levels=options.levels, ratio=spec.ratio, quadrature=spec.quadrature,
                    reduction=spec.reduction)


def _finest_mesh(scenario: Scenario, options: RunOptions) -> discretize.Mesh:
    spec = _mesh_spec(scenario, options)
    return discretize.build_mesh(scenario.target, spec.counts_at(spec.levels - 1))


def _identity_verdict(ok: bool) -> Verdict:
    return Verdict.CONFIRMED if ok else Verdict.VIOLATED


def _thm1(scenario, check, options):
    t = scenario.tolerances
    return verify.thm1_verify(scenario.manifold, _mesh_spec(scenario, options), check.params["c"], check.which,
                              scenario.plan, t.hypothesis, t.eigen_residual)


def _madu(scenario, check, options):
    t = scenario.tolerances
    return verify.madu_verify(scenario.manifold, _mesh_spec(scenario, options), check.params["m"],
                              check.params["a"], check.which, scenario.plan, t.hypothesis, t.eigen_residual)


def _corollary(scenario, check, options):
    t = scenario.tolerances
    return verify.corollary_verify(scenario.manifold, _mesh_spec(scenario, options), check.which, scenario.plan,
                                   t.hypothesis, t.eigen_residual)


def _obata(scenario, check, options):
    t = scenario.tolerances
    return verify.obata_verify(scenario.manifold, _mesh_spec(scenario, options), scenario.plan, t.hypothesis,
                               t.eigen_residual)


def _bochner(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else scenario.tolerances.identity
    pts = scenario.plan.points(scenario.manifold)
    residuals = [verify.bochner_residual(scenario.manifold, f, pts) for f in check.functions]
    worst = max(residuals)
    return CheckReport(name=check.name, verdict=_identity_verdict(worst <= tol),
                       computed={"residual": worst, "tolerance": tol, "points": len(pts),
                                 "functions": [{"f": str(f), "residual": r}
                                               for f, r in zip(check.functions, residuals)]})


def _hessian_bound(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else 1e-12
    pts = scenario.plan.points(scenario.manifold)
    m = check.params["m"]
    margins = [verify.hessian_bound_check(scenario.manifold, f, m, pts) for f in check.functions]
    worst = min(margins)
    return CheckReport(name=check.name, verdict=_identity_verdict(worst >= -tol),
                       computed={"margin": worst, "tolerance": tol, "m": m, "points": len(pts),
                                 "functions": [{"f": str(f), "margin": v} for f, v in zip(check.functions, margins)]})


def _reilly(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else 1e-6
    q = int(check.options.get("quadrature", 6))
    # coarsest level
    mesh = discretize.build_mesh(scenario.manifold, scenario.mesh.counts)
    m = check.params["m"]
    results = [verify.reilly_check(scenario.manifold, mesh, f, m, q) for f in check.functions]
    ok = all(r.margin >= -max(tol, r.error_estimate) for r in results)
    rows = [{"f": str(f), "lhs": r.lhs, "rhs": r.rhs, "margin": r.margin, "error_estimate": r.error_estimate}
            for f, r in zip(check.functions, results)]
    return CheckReport(name=check.name, verdict=_identity_verdict(ok),
                       computed={"margin": min(r.margin for r in results), "tolerance": tol, "m": m,
                                 "quadrature": q, "functions": rows})


def _h_minimality(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else scenario.tolerances.identity
    stats = hypersurface.h_minimality_residual(scenario.immersion, scenario.plan)
    return CheckReport(name=check.name, verdict=_identity_verdict(stats.maximum <= tol),
                       computed={"residual": stats.maximum, "argmax": list(stats.argmax), "tolerance": tol,
                                 "points": stats.count})


def _splitting(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else scenario.tolerances.identity
    pts = scenario.plan.points(scenario.immersion)
    rows = []
    for f in check.functions:
        plain, drift = hypersurface.splitting_residual(scenario.immersion, f, pts)
        rows.append({"f": str(f), "plain": float(np.max(plain)), "drift": float(np.max(drift))})
    worst = max(max(r["plain"], r["drift"]) for r in rows)
    return CheckReport(name=check.name, verdict=_identity_verdict(worst <= tol),
                       computed={"residual": worst, "tolerance": tol, "functions": rows})


def _prop25(scenario, check, options):
    tol = check.tolerance if check.tolerance is not None else scenario.tolerances.identity
    pts = scenario.plan.points(scenario.immersion)
    functions = check.functions or (exprlang.Number(1.0),)
    rows = [{"f": str(f), "residual": float(np.max(hypersurface.prop25_residual(scenario.immersion, f, pts)))}
            for f in functions]
    worst = max(r["residual"] for r in rows)
    return CheckReport(name=check.name, verdict=_identity_verdict(worst <= tol),
                       computed={"residual": worst, "tolerance": tol, "points": len(pts), "functions": rows})


def _stability(scenario, check, options):
    t = scenario.tolerances
    mesh = _finest_mesh(scenario, options)
    outcome = hypersurface.stability_verdict(scenario.immersion, mesh, tol=t.hypothesis,
                                             residual_tol=t.eigen_residual, q=scenario.mesh.quadrature)
    observed = "stable" if outcome.stable else "unstable"
    expect = check.options.get("expect")
    verdict = Verdict.CONFIRMED if expect is None or expect == observed else Verdict.VIOLATED
    return CheckReport(name=check.name, verdict=verdict,
                       computed={"mu1": outcome.mu1, "residual": float(outcome.eigen.residuals[0]),
                                 "tolerance": t.hypothesis, "q_one": outcome.q_one, "outcome": observed,
                                 "expect": expect, "dirichlet": outcome.dirichlet, "dofs": outcome.dofs,
                                 "counts": list(mesh.counts)})


def _thm2(scenario, check, options):
    t = scenario.tolerances
    mesh = _finest_mesh(scenario, options)
    report = hypersurface.thm2_check(scenario.immersion, mesh, check.params["c"], scenario.plan, t.hypothesis,
                                     scenario.mesh.quadrature)
    computed = {"predicted_stable": report.predicted_stable, "c": check.params["c"]}
    if report.stability is not None:
        computed.update(mu1=report.stability.mu1, residual=float(report.stability.eigen.residuals[0]),
                        q_one=report.stability.q_one, stable=report.stability.stable)
    return CheckReport(name=check.name, verdict=Verdict(report.verdict), hypotheses=list(report.hypotheses),
                       computed=computed)


def _conventions(scenario, check, options):
    functions = check.functions or (exprlang.Number(1.0),)
    rows = hypersurface.convention_survey(scenario.immersion, scenario.plan, functions[0])
    return CheckReport(name=check.name, verdict=Verdict.CONFIRMED,
                       computed={"f": str(functions[0]), "survey": rows,
                                 "tolerance": scenario.tolerances.identity})


CHECKS: dict[str, Callable[[Scenario, CheckSpec, RunOptions], CheckReport]] = {
    "thm1": _thm1,
    "madu": _madu,
    "corollary": _corollary,
    "obata": _obata,
    "bochner": _bochner,
    "hessian_bound": _hessian_bound,
    "reilly": _reilly,
    "h_minimality": _h_minimality,
    "splitting": _splitting,
    "stability": _stability,
    "prop25": _prop25,
    "thm2": _thm2,
    "conventions": _conventions,
}


def run_check(scenario: Scenario, check: CheckSpec, options: RunOptions = RunOptions()) -> CheckReport:
    """Run one check; evaluation errors become an "error" entry instead of propagating."""
    log = _get_logger("run_check")
    start = time.perf_counter()
    report = None
    with capture(*EVALUATION_ERRORS) as c:
        report = CHECKS[check.name](scenario, check, options)
    if c.error is not None:
        log.warning(f"{scenario.id}/{check.name}: {type(c.error).__name__}: {c.error}")
        report = CheckReport(name=check.name, verdict=Verdict.ERROR, message=str(c.error))
    if options.timings:
        report.runtime_ms = (time.perf_counter() - start) * 1000.0
    log.info(f"{scenario.id}/{check.name}: {report.verdict.value}")
    return report


def run_scenario(scenario: Scenario, options: RunOptions = RunOptions()) -> VerificationReport:
    report = VerificationReport(scenario_id=scenario.id, conventions=scenario.conventions)
    for check in scenario.checks:
        report.checks.append(run_check(scenario, check, options))
    return report


def default_condition(scenario: Scenario) -> BoundaryCondition | None:
    """Boundary condition of the first eigenvalue check, else Dirichlet when the chart has a boundary."""
    for check in scenario.checks:
        if check.which is not None:
            return check.which
    return BoundaryCondition.DIRICHLET if scenario.target.faces() else None


def converge(scenario: Scenario, options: RunOptions = RunOptions()) -> verify.EigenvalueStudy:
    if scenario.manifold is None:
        raise ScenarioException(SCType.SC_VALIDATION, "convergence studies need a [manifold] scenario",
                                field="manifold")
    spec = _mesh_spec(scenario, options)
    if spec.levels < 3:
        raise ScenarioException(SCType.SC_VALIDATION, "convergence studies need at least 3 levels",
                                field="mesh.levels")
    return verify.first_eigenvalue(scenario.manifold, spec, default_condition(scenario),
                                   residual_tol=scenario.tolerances.eigen_residual)


def spectrum(scenario: Scenario, k: int, options: RunOptions = RunOptions()) -> eigensolve.EigenResult:
    """Lowest k eigenpairs on the finest mesh: the drift Laplacian for charts, the stability operator for immersions."""
    mesh = _finest_mesh(scenario, options)
    tol = scenario.tolerances.eigen_residual
    if scenario.immersion is not None:
        problem = hypersurface.stability_problem(scenario.immersion, mesh, scenario.mesh.quadrature)
        return eigensolve.smallest_eigenpairs(problem.operator(), problem.B, k=k, tol=tol,
                                              shift=hypersurface.stability_shift(scenario.immersion, mesh))
    problem = discretize.assemble(scenario.manifold, mesh, scenario.mesh.quadrature)
    which = default_condition(scenario)
    if which is None:
        deflate = True
    else:
        problem = discretize.apply_bc(problem, which)
        deflate = problem.deflate_constant
    return eigensolve.smallest_eigenpairs(problem.K, problem.B, k=k, tol=tol, deflate_constant=deflate)
