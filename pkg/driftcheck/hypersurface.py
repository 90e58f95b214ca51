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
Parametric surfaces in Euclidean 3-space carrying an ambient weight.

Shape convention: the shape operator is A X = s * D_X nu with s = ``shape_sign``,
so a_ij = -s <nu, d_i d_j F> and H = g^{ij} a_ij. With the outward normal of a
round sphere and s = +1, H is positive. The ambient space is flat, so the
ambient Bakry-Emery term Ric_h(nu, nu) is the weight Hessian along nu.
"""

from __future__ import annotations

import enum
import itertools
import logging as __logging
from dataclasses import dataclass

import numpy as np

import driftcheck.discretize as discretize
import driftcheck.eigensolve as eigensolve
import driftcheck.exprlang as exprlang
import driftcheck.geometry as geometry
import driftcheck.jet as jet
from driftcheck.exprlang import Expr
from driftcheck.geometry import Axis, ChartGeometry, HypothesisCheck, MarginStats, SamplePlan
from driftcheck.jet import Jet

module_logger = __logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class IEType(enum.IntEnum):
    IE_RANK_DEFICIENT = 0
    IE_INVALID_PARAMETER = 1


class ImmersionException(Exception):
    def __init__(self, ietype: IEType, msg: str, *args):
        super().__init__(msg, args)
        self.type = ietype
        self.msg = msg

    def __str__(self):
        return self.msg


@dataclass(frozen=True)
class Immersion:
    axes: tuple[Axis, Axis]
    map: tuple[Expr, Expr, Expr]
    weight: Expr
    orientation: int = 1
    shape_sign: int = 1

    def __post_init__(self):
        if len(self.axes) != 2 or len(self.map) != 3:
            raise ImmersionException(IEType.IE_INVALID_PARAMETER, "an immersion maps a 2D chart into 3-space")
        if self.orientation not in (1, -1) or self.shape_sign not in (1, -1):
            raise ImmersionException(IEType.IE_INVALID_PARAMETER, "orientation and shape sign must be +1 or -1")

    @property
    def dim(self) -> int:
        return 2

    def with_convention(self, shape_sign: int | None = None, orientation: int | None = None,
                        weight: Expr | None = None) -> Immersion:
        return Immersion(axes=self.axes, map=self.map, weight=self.weight if weight is None else weight,
                         orientation=self.orientation if orientation is None else orientation,
                         shape_sign=self.shape_sign if shape_sign is None else shape_sign)

    def embedding(self, points, order: int) -> list[Jet]:
        xs = Jet.variables(np.asarray(points, dtype=np.float64), order)
        return [c.evaluate(xs) for c in self.map]

    def shape(self, points, order: int) -> ShapeJets:
        return ShapeJets(self, points, order)

    def local(self, points, order: int) -> ChartGeometry:
        """Induced metric and restricted weight; same contract as WeightedManifold.local."""
        f = self.embedding(points, order + 1)
        df = [[c.derivative(i) for c in f] for i in range(2)]
        g = [[jet.dot(df[i], df[j]).truncate(order) for j in range(2)] for i in range(2)]
        return ChartGeometry(g, self.weight.evaluate(f).truncate(order))

    def image(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.stack([np.broadcast_to(exprlang.values(c, points), points.shape[:-1]) for c in self.map], axis=-1)

    def metric_values(self, points) -> np.ndarray:
        f = self.embedding(points, 1)
        df = np.stack([np.stack([c.partial(i) for c in f], axis=-1) for i in range(2)], axis=-2)
        return df @ np.swapaxes(df, -1, -2)

    def weight_values(self, points) -> np.ndarray:
        return exprlang.values(self.weight, self.image(points))

    def faces(self) -> list[geometry.Face]:
        return geometry.boundary_faces(self.axes)


class ShapeJets:
    """Extrinsic quantities of an immersion as jets around a batch of chart points.

    With map jets of order K, the normal is of order K-1 and the second
    fundamental form and mean curvature of order K-2.
    """

    def __init__(self, imm: Immersion, points, order: int):
        self._log = module_logger.getChild(self.__class__.__name__)
        self.points = np.asarray(points, dtype=np.float64)
        self.imm = imm
        self.F = imm.embedding(self.points, order)
        self.dF = [[c.derivative(i) for c in self.F] for i in range(2)]
        cross = jet.cross(self.dF[0], self.dF[1])
        norm2 = jet.dot(cross, cross)
        scale = jet.dot(self.dF[0], self.dF[0]).value * jet.dot(self.dF[1], self.dF[1]).value
        if np.any(~(norm2.value > RANK_TOLERANCE * scale)):
            raise ImmersionException(IEType.IE_RANK_DEFICIENT, "map differential has rank below 2")
        inv_norm = jet.power(norm2, -0.5) * float(imm.orientation)
        self.nu = [c * inv_norm for c in cross]
        g = [[jet.dot(self.dF[i], self.dF[j]) for j in range(2)] for i in range(2)]
        self.geo = ChartGeometry(g, imm.weight.evaluate(self.F))
        s = float(imm.shape_sign)
        self.a = [[None, None], [None, None]]
        for i in range(2):
            for j in range(i, 2):
                ddf = [c.derivative(j) for c in self.dF[i]]
                self.a[i][j] = self.a[j][i] = jet.dot(self.nu, ddf) * (-s)
        self.H = self.geo.trace(self.a)
        self.A2 = self.geo.norm2(self.a)

    def image(self) -> np.ndarray:
        return np.stack([c.value for c in self.F], axis=-1)

    def normal(self) -> np.ndarray:
        return np.stack([c.value for c in self.nu], axis=-1)

    def tangents(self) -> np.ndarray:
        """d_i F as rows, shape (..., 2, 3)."""
        return np.stack([np.stack([c.value for c in self.dF[i]], axis=-1) for i in range(2)], axis=-2)

    def ambient_weight(self, order: int = 3) -> Jet:
        return exprlang.taylor(self.imm.weight, self.image(), order)


@dataclass(frozen=True)
class ShapePointData:
    point: np.ndarray
    metric: np.ndarray
    normal: np.ndarray
    second_form: np.ndarray
    mean_curvature: np.ndarray
    norm2_A: np.ndarray
    ambient_grad_h: np.ndarray
    weighted_mean_curvature: np.ndarray
    ambient_hess_h: np.ndarray
    ric_h_normal: np.ndarray


def shape_on(imm: Immersion, points) -> ShapePointData:
    sj = ShapeJets(imm, points, 2)
    nu = sj.normal()
    hbar = sj.ambient_weight(2)
    grad = hbar.gradient()
    hess = hbar.hessian()
    h_nu = np.sum(grad * nu, axis=-1)
    return ShapePointData(point=sj.points, metric=sj.geo.metric(), normal=nu,
                          second_form=geometry.jet_values(sj.a),
                          mean_curvature=sj.H.value, norm2_A=sj.A2.value, ambient_grad_h=grad,
                          weighted_mean_curvature=sj.H.value - h_nu, ambient_hess_h=hess,
                          ric_h_normal=np.einsum("...a,...ab,...b->...", nu, hess, nu))


def shape_at(imm: Immersion, p) -> ShapePointData:
    return shape_on(imm, np.asarray(p, dtype=np.float64).reshape(-1))


def stability_potential(imm: Immersion, points) -> np.ndarray:
    """|A|^2 + Ric_h(nu, nu) of the ambient weighted space."""
    data = shape_on(imm, points)
    return data.norm2_A + data.ric_h_normal


def h_minimality_residual(imm: Immersion, plan: SamplePlan) -> MarginStats:
    """|H - <grad h, nu>| over the plan; the maximum is the residual."""
    pts = plan.points(imm)
    data = shape_on(imm, pts)
    return MarginStats.of(np.abs(data.weighted_mean_curvature), pts)


def splitting_residual(imm: Immersion, fbar: Expr, p) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of the ambient/intrinsic Laplacian splitting, plain and drift versions."""
    sj = ShapeJets(imm, p, 3)
    nu = sj.normal()
    fb = exprlang.taylor(fbar, sj.image(), 2)
    hb = sj.ambient_weight(1)
    amb_lap = np.trace(fb.hessian(), axis1=-2, axis2=-1)
    amb_drift = amb_lap - np.sum(hb.gradient() * fb.gradient(), axis=-1)
    f_nu = np.sum(fb.gradient() * nu, axis=-1)
    f_nunu = np.einsum("...a,...ab,...b->...", nu, fb.hessian(), nu)
    f = fbar.evaluate(sj.F)
    lap = sj.geo.laplacian(f).value
    drift = sj.geo.drift_laplacian(f).value
    H = sj.H.value
    h_nu = np.sum(hb.gradient() * nu, axis=-1)
    plain = np.abs(amb_lap - (lap + H * f_nu + f_nunu))
    weighted = np.abs(amb_drift - (drift + (H - h_nu) * f_nu + f_nunu))
    return plain, weighted


def _tangential_terms(sj: ShapeJets):
    """Ambient weight derivatives contracted with the tangent frame and the normal.

    Returns sum_i (D^3 h)(e_i, nu, e_i) and sum_ik a_ik (D^2 h)(e_k, e_i) over an
    orthonormal tangent frame, computed through the inverse induced metric.
    """
    nu = sj.normal()
    t = sj.tangents()
    ginv = sj.geo.inverse_metric()
    proj = np.einsum("...ij,...ia,...jb->...ab", ginv, t, t)
    hb = sj.ambient_weight(3)
    third = hb.third()
    cubic = np.einsum("...abc,...ab,...c->...", third, proj, nu)
    hess_t = np.einsum("...ia,...ab,...jb->...ij", t, hb.hessian(), t)
    a = geometry.jet_values(sj.a)
    contraction = np.einsum("...ij,...jk,...kl,...li->...", ginv, a, ginv, hess_t)
    return cubic, contraction, hb


def prop25_residual(imm: Immersion, f: Expr, p) -> np.ndarray:
    """|L_h(fH) - RHS| where the RHS is the third-order weight identity for h-minimal surfaces."""
    sj = ShapeJets(imm, p, 4)
    fj = exprlang.taylor(f, sj.points, 4)
    fh = fj * sj.H
    potential = sj.A2.value + np.einsum("...a,...ab,...b->...", sj.normal(), sj.ambient_weight(2).hessian(),
                                        sj.normal())
    lhs = sj.geo.drift_laplacian(fh).value + potential * fh.value
    cubic, contraction, _ = _tangential_terms(sj)
    # the two cubic sums coincide in flat ambient space; kept apart as in the identity
    rhs = (fj.value * (2.0 * cubic - cubic + 2.0 * contraction)
           + 2.0 * sj.geo.grad_dot(sj.H, fj).value
           + sj.H.value * sj.geo.drift_laplacian(fj).value)
    return np.abs(lhs - rhs)


@dataclass(frozen=True)
class StabilityOutcome:
    mu1: float
    stable: bool
    eigen: eigensolve.EigenResult
    q_one: float
    dirichlet: bool
    dofs: int


def stability_problem(imm: Immersion, mesh: discretize.Mesh, q: int = 4) -> discretize.AssembledProblem:
    """Assembled Q(phi) = int (|grad phi|^2 - V phi^2) dv_h with V = |A|^2 + Ric_h(nu, nu)."""
    problem = discretize.assemble(imm, mesh, q, potential=lambda pts: stability_potential(imm, pts))
    if mesh.boundary_dofs().size:
        problem = discretize.apply_bc(problem, discretize.BoundaryCondition.DIRICHLET)
    return problem


def quadratic_form(problem: discretize.AssembledProblem, phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=np.float64)
    return float(phi @ (problem.operator() @ phi))


def quadratic_form_direct(imm: Immersion, mesh: discretize.Mesh, phi: np.ndarray, q: int = 4) -> float:
    """Q(phi) for a full-mesh nodal vector by quadrature of the integrand itself."""
    data = discretize.element_data(imm, mesh, discretize.quadrature(q, mesh.dim))
    local = phi[mesh.element_dofs()]
    grad = np.einsum("ea,eai->ei", local, data.grads)
    grad2 = np.einsum("ei,eqij,ej->eq", grad, data.ginv, grad)
    values = np.einsum("qa,ea->eq", data.phi, local)
    potential = stability_potential(imm, data.points.reshape(-1, 2)).reshape(values.shape)
    return float(np.sum(data.weights * (grad2 - potential * values ** 2)))


def stability_shift(imm: Immersion, mesh: discretize.Mesh) -> float:
    """A shift below the stability spectrum: Q(phi) >= -max|V| int phi^2."""
    centroids = mesh.vertices[mesh.elements].mean(axis=1)
    return -1.5 * float(np.max(np.abs(stability_potential(imm, centroids)))) - 1.0


def stability_verdict(imm: Immersion, mesh: discretize.Mesh, k: int = 1, tol: float = 1e-9,
                      residual_tol: float = 1e-6, q: int = 4) -> StabilityOutcome:
    log = _get_logger("stability_verdict")
    problem = stability_problem(imm, mesh, q)
    full = discretize.assemble(imm, mesh, q, potential=lambda pts: stability_potential(imm, pts))
    ones = np.ones(mesh.n_dofs)
    q_one = quadratic_form(full, ones)
    eig = eigensolve.smallest_eigenpairs(problem.operator(), problem.B, k=k, tol=residual_tol,
                                         shift=stability_shift(imm, mesh))
    mu1 = eig.first
    stable = mu1 >= -tol
    log.info(f"mu_1={mu1:.8g} ({'stable' if stable else 'unstable'}), Q(1)={q_one:.6g}")
    return StabilityOutcome(mu1=mu1, stable=bool(stable), eigen=eig, q_one=q_one,
                            dirichlet=problem.condition == discretize.BoundaryCondition.DIRICHLET,
                            dofs=problem.size)


@dataclass(frozen=True)
class Thm2Report:
    hypotheses: tuple[HypothesisCheck, ...]
    predicted_stable: bool
    stability: StabilityOutcome | None
    verdict: str


def thm2_margin(imm: Immersion, points, c: float) -> np.ndarray:
    """lambda_min(Ric_h) - 2[|A|^2 + c|grad h|^2 + (|D^2 h|^2 + |grad H|^2) / H^2] pointwise."""
    sj = ShapeJets(imm, points, 3)
    geo = sj.geo
    ric_h = geometry.jet_values(geo.ric_h())
    lam = geometry.relative_min_eigenvalue(ric_h, geo.metric())
    hess = sj.ambient_weight(2).hessian()
    frob = np.sum(hess * hess, axis=(-2, -1))
    H = sj.H.value
    rhs = 2.0 * (sj.A2.value + c * geo.grad_dot(geo.h, geo.h).value
                 + (frob + geo.grad_dot(sj.H, sj.H).value) / H ** 2)
    return lam - rhs


def thm2_check(imm: Immersion, mesh: discretize.Mesh | None, c: float, plan: SamplePlan,
               tol: float = 1e-9, q: int = 4) -> Thm2Report:
    """Hypotheses of the stability criterion, with the eigenvalue cross-check when a mesh is given."""
    log = _get_logger("thm2_check")
    if not c > 0:
        raise ImmersionException(IEType.IE_INVALID_PARAMETER, f"c must be positive, got {c}")
    desc = plan.describe()
    pts = plan.points(imm)
    sj = ShapeJets(imm, pts, 2)
    hb = sj.ambient_weight(3)
    third_norm = np.sqrt(np.sum(hb.third() ** 2, axis=(-3, -2, -1)))
    h_res = np.abs(shape_on(imm, pts).weighted_mean_curvature)
    checks = [
        HypothesisCheck.evaluate("parallel_hessian", -float(np.max(third_norm)), tol, desc),
        HypothesisCheck.evaluate("h_minimal", -float(np.max(h_res)), tol, desc),
        HypothesisCheck.evaluate("mean_curvature_nonzero", float(np.min(np.abs(sj.H.value))), tol, desc, strict=True),
    ]
    boundary = geometry.boundary_scan(imm, plan)
    if boundary is not None:
        checks.append(HypothesisCheck.evaluate("boundary_weighted_mean_curvature", boundary.minimum, tol, desc))
    if checks[2].passed:
        checks.append(HypothesisCheck.evaluate("curvature_condition", float(np.min(thm2_margin(imm, pts, c))),
                                               tol, desc))
    predicted = all(h.passed for h in checks)
    outcome = stability_verdict(imm, mesh, tol=tol, q=q) if mesh is not None else None
    if not predicted:
        verdict = "hypotheses-not-met"
    elif outcome is None or outcome.stable:
        verdict = "confirmed"
    else:
        verdict = "violated"
    log.info(f"verdict {verdict}")
    return Thm2Report(hypotheses=tuple(checks), predicted_stable=predicted, stability=outcome, verdict=verdict)


def convention_survey(imm: Immersion, plan: SamplePlan, f: Expr | None = None) -> list[dict]:
    """h-minimality and L_h(fH) residuals for every (shape sign, weight sign) pair."""
    pts = plan.points(imm)
    f = f if f is not None else exprlang.Number(1.0)
    rows = []
    for shape_sign, weight_sign in itertools.product((1, -1), (1, -1)):
        weight = imm.weight if weight_sign > 0 else exprlang.Negate(imm.weight)
        variant = imm.with_convention(shape_sign=shape_sign, weight=weight)
        rows.append({
            "shape_sign": shape_sign,
            "weight_sign": weight_sign,
            "h_minimality": float(np.max(np.abs(shape_on(variant, pts).weighted_mean_curvature))),
            "prop25": float(np.max(prop25_residual(variant, f, pts))),
        })
    return rows
