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
Pointwise Riemannian geometry on a single coordinate chart.

All tensors are built from jets of the metric components and of the weight, so
Christoffel symbols, curvature and covariant derivatives come out exact up to
rounding. Index conventions: ``christoffel[k, i, j]`` is the symbol with upper
index k; ``ricci[i, j]`` and ``hess_h[i, j]`` are covariant.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import itertools
import logging as __logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc

import driftcheck.exprlang as exprlang
import driftcheck.jet as jet
from driftcheck.exprlang import Expr
from driftcheck.jet import Jet

module_logger = __logging.getLogger(__name__)


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class GEType(enum.IntEnum):
    GE_DEGENERATE_METRIC = 0
    GE_EMPTY_PLAN = 1
    GE_PERIODIC_FACE = 2
    GE_SINGULAR_FACE = 3
    GE_INVALID_PARAMETER = 4


class GeometryException(Exception):
    def __init__(self, getype: GEType, msg: str, *args):
        super().__init__(msg, args)
        self.type = getype
        self.msg = msg

    def __str__(self):
        return self.msg


class AxisEnd(enum.Enum):
    BOUNDARY = "boundary"
    SINGULAR = "singular"


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    lower_end: AxisEnd = AxisEnd.BOUNDARY
    upper_end: AxisEnd = AxisEnd.BOUNDARY
    periodic: bool = False

    def __post_init__(self):
        if not self.upper > self.lower:
            raise GeometryException(GEType.GE_INVALID_PARAMETER,
                                    f"axis upper bound {self.upper} must exceed lower bound {self.lower}")

    def end(self, upper: bool) -> AxisEnd:
        return self.upper_end if upper else self.lower_end

    @property
    def length(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class Face:
    """The chart face x_axis = upper/lower end."""
    axis: int
    upper: bool

    @property
    def sign(self) -> float:
        return 1.0 if self.upper else -1.0

    def __str__(self):
        return f"x{self.axis + 1}={'upper' if self.upper else 'lower'}"


def boundary_faces(axes: Sequence[Axis]) -> list[Face]:
    """Faces that carry boundary data, in axis order, lower before upper."""
    faces = []
    for i, axis in enumerate(axes):
        if axis.periodic:
            continue
        for upper in (False, True):
            if axis.end(upper) == AxisEnd.BOUNDARY:
                faces.append(Face(i, upper))
    return faces


def _det(g: Sequence[Sequence[Jet]]) -> Jet:
    if len(g) == 1:
        return g[0][0]
    return g[0][0] * g[1][1] - g[0][1] * g[1][0]


def _inverse(g: Sequence[Sequence[Jet]], det: Jet) -> list[list[Jet]]:
    if len(g) == 1:
        return [[g[0][0].reciprocal()]]
    inv_det = det.reciprocal()
    off = -(g[0][1] * inv_det)
    return [[g[1][1] * inv_det, off], [off, g[0][0] * inv_det]]


class ChartGeometry:
    """Metric, weight and derived tensors of one chart, as jets around a batch of points.

    ``metric`` is the full symmetric matrix of metric jets, ``weight`` the jet of h.
    Derived tensors lose one jet order per derivative taken.
    """

    def __init__(self, metric: Sequence[Sequence[Jet]], weight: Jet):
        self._log = module_logger.getChild(self.__class__.__name__)
        self.g = [list(row) for row in metric]
        self.n = len(self.g)
        self.h = weight
        self.det = _det(self.g)
        bad = (self.det.value <= 0.0) | (self.g[0][0].value <= 0.0) | ~np.isfinite(self.det.value)
        if np.any(bad):
            raise GeometryException(GEType.GE_DEGENERATE_METRIC,
                                    f"metric is not positive definite at {int(np.count_nonzero(bad))} point(s)")
        self.ginv = _inverse(self.g, self.det)

    # arrays

    def metric(self) -> np.ndarray:
        return jet_values(self.g)

    def inverse_metric(self) -> np.ndarray:
        return jet_values(self.ginv)

    @functools.cached_property
    def sqrt_det(self) -> Jet:
        return jet.sqrt(self.det)

    @functools.cached_property
    def christoffel(self) -> list[list[list[Jet]]]:
        n = self.n
        dg = [[[self.g[i][j].derivative(l) for j in range(n)] for i in range(n)] for l in range(n)]
        first = [[[(dg[i][j][l] + dg[j][i][l] - dg[l][i][j]) * 0.5 for j in range(n)] for i in range(n)]
                 for l in range(n)]
        out = []
        for k in range(n):
            rows = []
            for i in range(n):
                row = []
                for j in range(n):
                    row.append(jet.dot([self.ginv[k][l] for l in range(n)], [first[l][i][j] for l in range(n)]))
                rows.append(row)
            out.append(rows)
        return out

    @functools.cached_property
    def ricci(self) -> list[list[Jet]]:
        n = self.n
        gam = self.christoffel
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                r = None
                for k in range(n):
                    term = gam[k][i][j].derivative(k) - gam[k][i][k].derivative(j)
                    for l in range(n):
                        term = term + gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][i][k]
                    r = term if r is None else r + term
                out[i][j] = out[j][i] = r
        return out

    # operators on scalar fields

    def gradient(self, u: Jet) -> list[Jet]:
        """Contravariant gradient g^{ij} d_j u."""
        du = [u.derivative(j) for j in range(self.n)]
        return [jet.dot(self.ginv[i], du) for i in range(self.n)]

    def grad_dot(self, u: Jet, v: Jet) -> Jet:
        du = [u.derivative(j) for j in range(self.n)]
        return jet.dot(self.gradient(v), du)

    def hessian(self, u: Jet) -> list[list[Jet]]:
        n = self.n
        gam = self.christoffel
        du = [u.derivative(k) for k in range(n)]
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                out[i][j] = out[j][i] = du[i].derivative(j) - jet.dot([gam[k][i][j] for k in range(n)], du)
        return out

    def trace(self, t: Sequence[Sequence[Jet]]) -> Jet:
        return jet.dot([self.ginv[i][j] for i in range(self.n) for j in range(self.n)],
                       [t[i][j] for i in range(self.n) for j in range(self.n)])

    def norm2(self, t: Sequence[Sequence[Jet]]) -> Jet:
        """|t|^2 = g^{ik} g^{jl} t_ij t_kl for a covariant 2-tensor."""
        n = self.n
        total = None
        for i, j, k, l in itertools.product(range(n), repeat=4):
            term = self.ginv[i][k] * self.ginv[j][l] * t[i][j] * t[k][l]
            total = term if total is None else total + term
        return total

    def laplacian(self, u: Jet) -> Jet:
        return self.trace(self.hessian(u))

    def drift_laplacian(self, u: Jet) -> Jet:
        return self.laplacian(u) - self.grad_dot(self.h, u)

    def ric_h(self) -> list[list[Jet]]:
        hh = self.hessian(self.h)
        return [[self.ricci[i][j] + hh[i][j] for j in range(self.n)] for i in range(self.n)]

    def bilinear(self, t: Sequence[Sequence[Jet]], u: Jet, v: Jet) -> Jet:
        """t(grad u, grad v)."""
        gu, gv = self.gradient(u), self.gradient(v)
        return jet.dot([t[i][j] for i in range(self.n) for j in range(self.n)],
                       [gu[i] * gv[j] for i in range(self.n) for j in range(self.n)])


def jet_values(jets) -> np.ndarray:
    """Values of an n x n nested list of jets, shaped (..., n, n)."""
    return np.stack([np.stack([j.value for j in row], axis=-1) for row in jets], axis=-2)


def relative_min_eigenvalue(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of the symmetric form t relative to the metric g, batched."""
    chol = np.linalg.cholesky(g)
    linv = np.linalg.inv(chol)
    m = linv @ t @ np.swapaxes(linv, -1, -2)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    return np.linalg.eigvalsh(m)[..., 0]


@dataclass(frozen=True)
class WeightedManifold:
    """A chart (box domain), a metric given by expressions and a weight h.

    ``metric`` holds the upper triangle row by row: (g11,) or (g11, g12, g22).
    """
    dim: int
    metric: tuple[Expr, ...]
    weight: Expr
    axes: tuple[Axis, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GeometryException(GEType.GE_INVALID_PARAMETER, f"chart dimension {self.dim} not supported")
        if len(self.metric) != self.dim * (self.dim + 1) // 2:
            raise GeometryException(GEType.GE_INVALID_PARAMETER,
                                    f"{len(self.metric)} metric components given for dimension {self.dim}")
        if len(self.axes) != self.dim:
            raise GeometryException(GEType.GE_INVALID_PARAMETER, f"{len(self.axes)} axes for dimension {self.dim}")

    def component(self, i: int, j: int) -> Expr:
        i, j = min(i, j), max(i, j)
        return self.metric[i * self.dim - i * (i - 1) // 2 + (j - i)]

    def local(self, points, order: int) -> ChartGeometry:
        points = np.asarray(points, dtype=np.float64)
        xs = Jet.variables(points, order)
        g = [[None] * self.dim for _ in range(self.dim)]
        for i in range(self.dim):
            for j in range(i, self.dim):
                g[i][j] = g[j][i] = self.component(i, j).evaluate(xs)
        return ChartGeometry(g, self.weight.evaluate(xs))

    def field(self, expr: Expr, points, order: int) -> Jet:
        return exprlang.taylor(expr, points, order)

    def metric_values(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        out = np.empty(points.shape[:-1] + (self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                out[..., i, j] = out[..., j, i] = np.broadcast_to(exprlang.values(self.component(i, j), points),
                                                                  points.shape[:-1])
        return out

    def weight_values(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.broadcast_to(exprlang.values(self.weight, points), points.shape[:-1])

    def faces(self) -> list[Face]:
        return boundary_faces(self.axes)

    def validate(self, inset: float = 1e-3) -> None:
        """Metric positive definite and weight finite on a 100 * 10^dim point scan."""
        count = int(round((100 * 10 ** self.dim) ** (1.0 / self.dim)))
        pts = SamplePlan(mode=PlanMode.GRID, count=count, inset=inset).points(self)
        self.local(pts, 0)
        hv = self.weight_values(pts)
        if not np.all(np.isfinite(hv)):
            raise GeometryException(GEType.GE_INVALID_PARAMETER, "weight is not finite on the domain")


class PlanMode(enum.Enum):
    GRID = "grid"
    LOW_DISCREPANCY = "low-discrepancy"


@dataclass(frozen=True)
class SamplePlan:
    mode: PlanMode = PlanMode.GRID
    count: int = 10
    inset: float = 1e-3

    def describe(self) -> str:
        return f"{self.mode.value} x{self.count} per axis, inset {self.inset:g}"

    def _axis_range(self, axis: Axis) -> tuple[float, float]:
        lo, hi = axis.lower, axis.upper
        if axis.periodic:
            return lo, hi
        if axis.lower_end == AxisEnd.SINGULAR:
            lo += self.inset
        if axis.upper_end == AxisEnd.SINGULAR:
            hi -= self.inset
        return lo, hi

    def axis_samples(self, axis: Axis) -> np.ndarray:
        lo, hi = self._axis_range(axis)
        if axis.periodic:
            return lo + (hi - lo) * np.arange(self.count) / self.count
        if self.count == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, self.count)

    def points(self, field) -> np.ndarray:
        """Sample points of shape (N, dim) inside the inset closure of the chart domain."""
        if self.count < 1:
            raise GeometryException(GEType.GE_EMPTY_PLAN, "sample plan has no points")
        axes = field.axes
        if self.mode == PlanMode.GRID:
            grids = np.meshgrid(*[self.axis_samples(a) for a in axes], indexing="ij")
            return np.stack([g.reshape(-1) for g in grids], axis=-1)
        total = self.count ** len(axes)
        unit = qmc.Halton(d=len(axes), scramble=False).random(total)
        ranges = [self._axis_range(a) for a in axes]
        return qmc.scale(unit, [r[0] for r in ranges], [r[1] for r in ranges])

    def face_points(self, field, face: Face) -> np.ndarray:
        axes = field.axes
        end = axes[face.axis].upper if face.upper else axes[face.axis].lower
        if len(axes) == 1:
            return np.array([[end]])
        other = 1 - face.axis
        s = self.axis_samples(axes[other])
        pts = np.empty((s.size, 2))
        pts[:, face.axis] = end
        pts[:, other] = s
        return pts


@dataclass(frozen=True)
class MarginStats:
    minimum: float
    argmin: tuple[float, ...]
    maximum: float
    argmax: tuple[float, ...]
    mean: float
    count: int
    ric_h_min: float | None = None

    @classmethod
    def of(cls, values: np.ndarray, points: np.ndarray, **extra) -> MarginStats:
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise GeometryException(GEType.GE_EMPTY_PLAN, "no samples to summarize")
        imin, imax = int(np.argmin(values)), int(np.argmax(values))
        return cls(minimum=float(values[imin]), argmin=tuple(float(v) for v in points[imin]),
                   maximum=float(values[imax]), argmax=tuple(float(v) for v in points[imax]),
                   mean=float(values.mean()), count=int(values.size), **extra)


@dataclass(frozen=True)
class CurvatureData:
    """Curvature quantities at one point, or stacked over a batch (leading axes)."""
    point: np.ndarray
    christoffel: np.ndarray
    ricci: np.ndarray
    hess_h: np.ndarray
    ric_h: np.ndarray
    grad_h_norm2: np.ndarray
    lambda_min_ric_h: np.ndarray


def curvature_on(field, points) -> CurvatureData:
    points = np.asarray(points, dtype=np.float64)
    geo = field.local(points, 2)
    n = geo.n
    christoffel = np.stack([jet_values(geo.christoffel[k]) for k in range(n)], axis=-3)
    ricci = jet_values(geo.ricci)
    hess_h = jet_values(geo.hessian(geo.h))
    ric_h = ricci + hess_h
    grad_h_norm2 = geo.grad_dot(geo.h, geo.h).value
    lam = relative_min_eigenvalue(ric_h, geo.metric())
    return CurvatureData(point=points, christoffel=christoffel, ricci=ricci, hess_h=hess_h, ric_h=ric_h,
                         grad_h_norm2=grad_h_norm2, lambda_min_ric_h=lam)


def curvature_at(field, p) -> CurvatureData:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    return curvature_on(field, p)


def drift_laplacian_at(field, f: Expr, p) -> float:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    geo = field.local(p, 2)
    return float(geo.drift_laplacian(exprlang.taylor(f, p, 2)).value)


def ric_h_margin_scan(field, plan: SamplePlan, c: float) -> MarginStats:
    """Statistics of rho_c = lambda_min(Ric_h) - c |grad h|^2 over the plan."""
    log = _get_logger("ric_h_margin_scan")
    if c < 0:
        raise GeometryException(GEType.GE_INVALID_PARAMETER, f"c must be non-negative, got {c}")
    pts = plan.points(field)
    if pts.size == 0:
        raise GeometryException(GEType.GE_EMPTY_PLAN, "sample plan has no points")
    data = curvature_on(field, pts)
    rho = data.lambda_min_ric_h - c * data.grad_h_norm2
    stats = MarginStats.of(rho, pts, ric_h_min=float(np.min(data.lambda_min_ric_h)))
    log.debug(f"c={c} min rho={stats.minimum:.6g} at {stats.argmin}, min Ric_h={stats.ric_h_min:.6g}")
    return stats


@dataclass(frozen=True)
class BoundaryPointData:
    point: np.ndarray
    normal: np.ndarray
    geodesic_curvature: np.ndarray
    mean_curvature: np.ndarray
    weighted_mean_curvature: np.ndarray


def _check_face(field, face: Face):
    axis = field.axes[face.axis]
    if axis.periodic:
        raise GeometryException(GEType.GE_PERIODIC_FACE, f"face {face} lies on a periodic axis")
    if axis.end(face.upper) == AxisEnd.SINGULAR:
        raise GeometryException(GEType.GE_SINGULAR_FACE, f"face {face} is a natural-singular end")


def boundary_geometry(field, face: Face, s=0.0) -> BoundaryPointData:
    """Outward normal and (weighted) mean curvature of the face at boundary parameter ``s``.

    ``s`` is the coordinate along the other axis in dimension 2 (scalar or array)
    and is ignored in dimension 1. The curvature sign is positive when the
    boundary bends away from the outward normal, so the rim of a flat disk has
    curvature +1.
    """
    _check_face(field, face)
    axis = field.axes[face.axis]
    end = axis.upper if face.upper else axis.lower
    n = len(field.axes)
    if n == 1:
        pts = np.array([end], dtype=np.float64)
    else:
        s = np.asarray(s, dtype=np.float64)
        pts = np.empty(s.shape + (2,))
        pts[..., face.axis] = end
        pts[..., 1 - face.axis] = s
    return boundary_geometry_at(field, face, pts)


def boundary_geometry_at(field, face: Face, pts) -> BoundaryPointData:
    pts = np.asarray(pts, dtype=np.float64)
    n = pts.shape[-1]
    a = face.axis
    sigma = face.sign
    geo = field.local(pts, 1)
    ginv = geo.inverse_metric()
    g_aa_inv = ginv[..., a, a]
    normal = sigma * ginv[..., a, :] / np.sqrt(g_aa_inv)[..., None]
    dh = np.stack([geo.h.partial(j) for j in range(n)], axis=-1)
    eta_dh = np.sum(normal * dh, axis=-1)
    if n == 1:
        kappa = np.zeros(pts.shape[:-1])
    else:
        b = 1 - a
        gamma = geo.christoffel[a][b][b].value
        g_bb = geo.metric()[..., b, b]
        kappa = -sigma * gamma / (g_bb * np.sqrt(g_aa_inv))
    return BoundaryPointData(point=pts, normal=normal, geodesic_curvature=kappa, mean_curvature=kappa,
                             weighted_mean_curvature=kappa - eta_dh)


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    margin: float
    passed: bool
    plan: str
    tolerance: float
    strict: bool = False

    @classmethod
    def evaluate(cls, name: str, margin: float, tolerance: float, plan: str, strict: bool = False) -> HypothesisCheck:
        margin = float(margin)
        passed = margin > tolerance if strict else margin >= -tolerance
        module_logger.getChild("HypothesisCheck").debug(f"{name}: margin {margin:.6g} -> {'pass' if passed else 'fail'}")
        return cls(name=name, margin=margin, passed=bool(passed), plan=plan, tolerance=tolerance, strict=strict)


def boundary_scan(field, plan: SamplePlan, quantity: str = "weighted_mean_curvature") -> MarginStats | None:
    """Minimum of a boundary quantity over all boundary faces; None for a chart without boundary."""
    values, points = [], []
    for face in field.faces():
        pts = plan.face_points(field, face)
        data = boundary_geometry_at(field, face, pts)
        values.append(np.asarray(getattr(data, quantity)).reshape(-1))
        points.append(pts)
    if not values:
        return None
    return MarginStats.of(np.concatenate(values), np.concatenate(points))
