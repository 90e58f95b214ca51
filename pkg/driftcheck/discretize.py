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
Piecewise-linear finite elements on structured chart meshes.

The stiffness and mass forms are weighted by the Riemannian density
sqrt(det g) e^{-h}, so the generalized eigenproblem K v = lambda B v is the
Galerkin discretization of the drift Laplacian. Elements are segments in one
dimension and split quads in two. Periodic axes identify the seam, and every
natural-singular end collapses to a single degree of freedom.
"""

from __future__ import annotations

import dataclasses
import enum
import logging as __logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

import driftcheck.exprlang as exprlang
from driftcheck.exprlang import Expr
from driftcheck.geometry import Axis, AxisEnd, Face, WeightedManifold, boundary_faces

module_logger = __logging.getLogger(__name__)


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class DEType(enum.IntEnum):
    DE_RESOLUTION_TOO_SMALL = 0
    DE_DEGENERATE_METRIC = 1
    DE_NO_BOUNDARY = 2
    DE_REDUCTION = 3


class DiscretizeException(Exception):
    def __init__(self, detype: DEType, msg: str, element: int | None = None, *args):
        super().__init__(msg, args)
        self.type = detype
        self.msg = msg
        self.element = element

    def __str__(self):
        return self.msg if self.element is None else f"{self.msg} (element {self.element})"


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Mesh:
    dim: int
    axes: tuple[Axis, ...]
    counts: tuple[int, ...]
    nodes: tuple[np.ndarray, ...]
    vertices: np.ndarray
    elements: np.ndarray
    vertex_to_dof: np.ndarray
    n_dofs: int
    boundary: dict[Face, np.ndarray]
    periodic_pairs: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def boundary_dofs(self) -> np.ndarray:
        if not self.boundary:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(list(self.boundary.values())))

    def element_dofs(self) -> np.ndarray:
        return self.vertex_to_dof[self.elements]

    def dof_coordinates(self) -> np.ndarray:
        """Chart coordinates of the first vertex carrying each dof."""
        first = np.full(self.n_dofs, -1, dtype=np.int64)
        order = np.arange(self.vertices.shape[0])[::-1]
        first[self.vertex_to_dof[order]] = order
        return self.vertices[first]


def build_mesh(field, counts: Sequence[int] | int) -> Mesh:
    """Structured mesh of the chart box with ``counts[i]`` intervals along axis i."""
    log = _get_logger("build_mesh")
    axes = tuple(field.axes)
    dim = len(axes)
    if isinstance(counts, (int, np.integer)):
        counts = (int(counts),) * dim
    counts = tuple(int(c) for c in counts)
    if len(counts) != dim:
        raise DiscretizeException(DEType.DE_RESOLUTION_TOO_SMALL, f"{len(counts)} counts for {dim} axes")
    if any(c < 2 for c in counts):
        raise DiscretizeException(DEType.DE_RESOLUTION_TOO_SMALL, f"resolution {counts} needs at least 2 per axis")

    nodes = tuple(np.linspace(a.lower, a.upper, c + 1) for a, c in zip(axes, counts))
    shape = tuple(c + 1 for c in counts)
    index = np.indices(shape).reshape(dim, -1).T
    vertices = np.stack([nodes[k][index[:, k]] for k in range(dim)], axis=-1)

    # canonical representative per vertex: seam copies fold back, singular ends collapse
    canon = index.copy()
    pairs = []
    for k, (axis, c) in enumerate(zip(axes, counts)):
        if axis.periodic:
            seam = canon[:, k] == c
            canon[seam, k] = 0
            seam_ids = np.flatnonzero(index[:, k] == c)
            partner = index[seam_ids].copy()
            partner[:, k] = 0
            pairs.append(np.stack([seam_ids, np.ravel_multi_index(partner.T, shape)], axis=-1))
    for k, (axis, c) in enumerate(zip(axes, counts)):
        if axis.periodic:
            continue
        for upper in (False, True):
            if axis.end(upper) == AxisEnd.SINGULAR:
                at_end = index[:, k] == (c if upper else 0)
                canon[at_end] = 0
                canon[at_end, k] = c if upper else 0
    rep = np.ravel_multi_index(canon.T, shape)
    _, vertex_to_dof = np.unique(rep, return_inverse=True)
    vertex_to_dof = vertex_to_dof.reshape(-1).astype(np.int64)
    n_dofs = int(vertex_to_dof.max()) + 1

    if dim == 1:
        elements = np.stack([np.arange(counts[0]), np.arange(1, counts[0] + 1)], axis=-1)
    else:
        n1, n2 = counts
        i, j = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        v00 = (i * (n2 + 1) + j).reshape(-1)
        v10 = v00 + (n2 + 1)
        v11 = v10 + 1
        v01 = v00 + 1
        elements = np.stack([np.stack([v00, v10, v11], -1), np.stack([v00, v11, v01], -1)], axis=1).reshape(-1, 3)

    boundary = {}
    taken = np.zeros(n_dofs, dtype=bool)
    for face in boundary_faces(axes):
        c = counts[face.axis]
        on_face = index[:, face.axis] == (c if face.upper else 0)
        dofs = np.unique(vertex_to_dof[on_face])
        dofs = dofs[~taken[dofs]]
        taken[dofs] = True
        boundary[face] = dofs

    periodic_pairs = np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=np.int64)
    mesh = Mesh(dim=dim, axes=axes, counts=counts, nodes=nodes, vertices=vertices, elements=elements,
                vertex_to_dof=vertex_to_dof, n_dofs=n_dofs, boundary=boundary, periodic_pairs=periodic_pairs)
    log.debug(f"mesh {counts}: {vertices.shape[0]} vertices, {n_dofs} dofs, {elements.shape[0]} elements")
    return mesh


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference element: [0, 1] or the triangle (0,0), (1,0), (0,1)."""
    order: int
    dim: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def volume(self) -> float:
        return 1.0 if self.dim == 1 else 0.5


def gauss_legendre(order: int, lower: float = 0.0, upper: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (upper - lower)
    return lower + half * (t + 1.0), half * w


def quadrature(order: int, dim: int) -> QuadratureRule:
    """Gauss rule with ``order`` points per direction; collapsed (Duffy) product on triangles."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = gauss_legendre(order)
    if dim == 1:
        return QuadratureRule(order, 1, x[:, None], w)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    wi, wj = np.meshgrid(w, w, indexing="ij")
    pts = np.stack([xi.reshape(-1), (eta * (1.0 - xi)).reshape(-1)], axis=-1)
    weights = (wi * wj * (1.0 - xi)).reshape(-1)
    return QuadratureRule(order, 2, pts, weights)


def _shape_functions(rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """P1 values at the rule points (Q, dim+1) and reference gradients (dim+1, dim)."""
    if rule.dim == 1:
        x = rule.points[:, 0]
        return np.stack([1.0 - x, x], axis=-1), np.array([[-1.0], [1.0]])
    x, y = rule.points[:, 0], rule.points[:, 1]
    return np.stack([1.0 - x - y, x, y], axis=-1), np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ElementData:
    points: np.ndarray    # (E, Q, dim) chart coordinates of quadrature points
    weights: np.ndarray   # (E, Q) rule weight * |det J| * sqrt(det g) e^{-h}
    ginv: np.ndarray      # (E, Q, dim, dim)
    phi: np.ndarray       # (Q, dim+1)
    grads: np.ndarray     # (E, dim+1, dim) chart gradients of the hat functions


def element_data(field, mesh: Mesh, rule: QuadratureRule) -> ElementData:
    verts = mesh.vertices[mesh.elements]
    x0 = verts[:, 0, :]
    jac = np.swapaxes(verts[:, 1:, :] - x0[:, None, :], -1, -2)
    det_j = np.linalg.det(jac)
    inv_j = np.linalg.inv(jac)
    phi, ref_grads = _shape_functions(rule)
    grads = np.einsum("eji,aj->eai", inv_j, ref_grads)
    pts = x0[:, None, :] + np.einsum("eij,qj->eqi", jac, rule.points)

    flat = pts.reshape(-1, mesh.dim)
    g = field.metric_values(flat)
    det_g = np.linalg.det(g)
    bad = ~(np.isfinite(det_g) & (det_g > 0.0) & (g[:, 0, 0] > 0.0))
    if np.any(bad):
        element = int(np.flatnonzero(bad)[0] // rule.points.shape[0])
        raise DiscretizeException(DEType.DE_DEGENERATE_METRIC, "metric is not positive definite at a quadrature point",
                                  element=element)
    h = field.weight_values(flat)
    density = np.sqrt(det_g) * np.exp(-h)
    if not np.all(np.isfinite(density)):
        element = int(np.flatnonzero(~np.isfinite(density))[0] // rule.points.shape[0])
        raise DiscretizeException(DEType.DE_DEGENERATE_METRIC, "weighted density is not finite", element=element)
    shape = pts.shape[:2]
    weights = rule.weights[None, :] * np.abs(det_j)[:, None] * density.reshape(shape)
    ginv = np.linalg.inv(g).reshape(shape + (mesh.dim, mesh.dim))
    return ElementData(points=pts, weights=weights, ginv=ginv, phi=phi, grads=grads)


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    dofs = mesh.element_dofs()
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, k)).reshape(-1)
    m = sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    m.sum_duplicates()
    return ((m + m.T) * 0.5).tocsr()


FieldLike = Union[Expr, np.ndarray, Callable[[np.ndarray], np.ndarray], float]


def field_values(f: FieldLike, mesh: Mesh, data: ElementData) -> np.ndarray:
    """Values of a field at the quadrature points, shape (E, Q)."""
    shape = data.points.shape[:2]
    if isinstance(f, Expr):
        return np.broadcast_to(exprlang.values(f, data.points), shape)
    if isinstance(f, np.ndarray) and f.shape == (mesh.n_dofs,):
        return np.einsum("qa,ea->eq", data.phi, f[mesh.element_dofs()])
    if callable(f):
        return np.broadcast_to(np.asarray(f(data.points.reshape(-1, mesh.dim))).reshape(shape), shape)
    return np.broadcast_to(np.asarray(f, dtype=np.float64), shape)


@dataclass(frozen=True)
class AssembledProblem:
    K: sp.csr_matrix
    B: sp.csr_matrix
    mesh: Mesh
    quadrature_order: int
    dofs: np.ndarray
    dirichlet: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    condition: BoundaryCondition | None = None
    deflate_constant: bool = False
    potential: sp.csr_matrix | None = None

    @property
    def size(self) -> int:
        return self.K.shape[0]

    def operator(self) -> sp.csr_matrix:
        """Stiffness minus the potential form, when one was assembled."""
        return self.K if self.potential is None else (self.K - self.potential).tocsr()

    def expand(self, v: np.ndarray) -> np.ndarray:
        """Full-mesh nodal vector from a reduced one (zero on eliminated dofs)."""
        full = np.zeros((self.mesh.n_dofs,) + np.shape(v)[1:])
        full[self.dofs] = v
        return full

    def dirichlet_energy(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.float64)
        return float(v @ (self.K @ v))


def assemble(field, mesh: Mesh, q: QuadratureRule | int = 4, potential: FieldLike | None = None) -> AssembledProblem:
    """Weighted P1 stiffness and mass matrices; optionally the potential form int V u v dv_h."""
    log = _get_logger("assemble")
    rule = q if isinstance(q, QuadratureRule) else quadrature(q, mesh.dim)
    data = element_data(field, mesh, rule)
    k_local = np.einsum("eai,eqij,ebj,eq->eab", data.grads, data.ginv, data.grads, data.weights)
    b_local = np.einsum("qa,qb,eq->eab", data.phi, data.phi, data.weights)
    pot = None
    if potential is not None:
        v = field_values(potential, mesh, data)
        pot = _scatter(mesh, np.einsum("qa,qb,eq->eab", data.phi, data.phi, data.weights * v))
    problem = AssembledProblem(K=_scatter(mesh, k_local), B=_scatter(mesh, b_local), mesh=mesh,
                               quadrature_order=rule.order, dofs=np.arange(mesh.n_dofs), potential=pot)
    log.debug(f"assembled {mesh.n_dofs} dofs, nnz(K)={problem.K.nnz}")
    return problem


def apply_bc(problem: AssembledProblem, kind: BoundaryCondition) -> AssembledProblem:
    if kind == BoundaryCondition.NEUMANN:
        return dataclasses.replace(problem, condition=kind, deflate_constant=True)
    bdofs = problem.mesh.boundary_dofs()
    if bdofs.size == 0:
        raise DiscretizeException(DEType.DE_NO_BOUNDARY, "Dirichlet condition requested on a mesh without boundary")
    keep = np.setdiff1d(problem.dofs, bdofs)

    def restrict(m):
        return None if m is None else m[keep][:, keep].tocsr()

    return dataclasses.replace(problem, K=restrict(problem.K), B=restrict(problem.B), dofs=keep, dirichlet=bdofs,
                               condition=kind, deflate_constant=False, potential=restrict(problem.potential))


def integrate(mesh: Mesh, field, integrands: Sequence[FieldLike] = (), q: int = 4) -> float:
    """Weighted integral of the product of ``integrands`` against sqrt(det g) e^{-h}."""
    data = element_data(field, mesh, quadrature(q, mesh.dim))
    values = data.weights
    for f in integrands:
        values = values * field_values(f, mesh, data)
    return float(np.sum(values))


def weighted_volume(mesh: Mesh, field, q: int = 4) -> float:
    return integrate(mesh, field, (), q)


def _face_integral(mesh: Mesh, field, face: Face, integrand: Callable[[np.ndarray], np.ndarray], q: int) -> float:
    axis = mesh.axes[face.axis]
    end = axis.upper if face.upper else axis.lower
    if mesh.dim == 1:
        pts = np.array([[end]])
        return float(np.sum(np.asarray(integrand(pts)).reshape(-1) * np.exp(-field.weight_values(pts))))
    b = 1 - face.axis
    nodes = mesh.nodes[b]
    t, w = gauss_legendre(q)
    s = nodes[:-1, None] + np.diff(nodes)[:, None] * t[None, :]
    ws = (np.diff(nodes)[:, None] * w[None, :]).reshape(-1)
    pts = np.empty((s.size, 2))
    pts[:, face.axis] = end
    pts[:, b] = s.reshape(-1)
    g = field.metric_values(pts)
    line = np.sqrt(g[:, b, b]) * np.exp(-field.weight_values(pts))
    return float(np.sum(ws * line * np.asarray(integrand(pts)).reshape(-1)))


def integrate_boundary(mesh: Mesh, field, face: Face, integrand: FieldLike, q: int = 4) -> tuple[float, float]:
    """Weighted boundary integral over ``face`` and an error estimate from orders q and q+2."""
    if isinstance(integrand, Expr):
        expr = integrand

        def integrand(pts):
            return exprlang.values(expr, pts)
    elif not callable(integrand):
        constant = float(integrand)

        def integrand(pts):
            return np.full(pts.shape[0], constant)
    coarse = _face_integral(mesh, field, face, integrand, q)
    fine = _face_integral(mesh, field, face, integrand, q + 2)
    return fine, abs(fine - coarse)


def axisymmetric_reduction(manifold: WeightedManifold) -> WeightedManifold:
    """The 1D manifold whose Dirichlet spectrum bottom matches a rotationally symmetric 2D chart.

    Requires a diagonal metric, one periodic axis, and metric and weight independent
    of it; the reduced weight is h - log sqrt(g_bb).
    """
    if manifold.dim != 2:
        raise DiscretizeException(DEType.DE_REDUCTION, "axisymmetric reduction needs a 2D chart")
    periodic = [i for i, a in enumerate(manifold.axes) if a.periodic]
    if len(periodic) != 1:
        raise DiscretizeException(DEType.DE_REDUCTION, "axisymmetric reduction needs exactly one periodic axis")
    b = periodic[0]
    a = 1 - b
    off = manifold.component(0, 1)
    if not off.is_constant() or exprlang.fold_constant(off) != 0.0:
        raise DiscretizeException(DEType.DE_REDUCTION, "axisymmetric reduction needs a diagonal metric")
    g_aa, g_bb = manifold.component(a, a), manifold.component(b, b)
    for name, expr in (("metric", g_aa), ("metric", g_bb), ("weight", manifold.weight)):
        if expr.depends_on(b):
            raise DiscretizeException(DEType.DE_REDUCTION, f"{name} depends on the periodic coordinate x{b + 1}")
    mapping = {a: 0, b: 0}
    weight = exprlang.BinaryOp("-", manifold.weight,
                               exprlang.BinaryOp("*", exprlang.Number(0.5), exprlang.Call("log", g_bb)))
    return WeightedManifold(dim=1, metric=(exprlang.reindex(g_aa, mapping),),
                            weight=exprlang.reindex(weight, mapping), axes=(manifold.axes[a],))


@dataclass(frozen=True)
class MeshSpec:
    counts: tuple[int, ...]
    levels: int = 3
    ratio: int = 2
    quadrature: int = 4
    reduction: str | None = None

    def counts_at(self, level: int) -> tuple[int, ...]:
        return tuple(c * self.ratio ** level for c in self.counts)


@dataclass(frozen=True)
class RichardsonResult:
    values: tuple[float, ...]
    ratio: float
    assumed_order: float
    extrapolate: float
    observed_order: float | None
    error_estimate: float
    level_orders: tuple[float | None, ...]
    level_extrapolates: tuple[float | None, ...]


def observed_order(coarse: float, mid: float, fine: float, ratio: float = 2.0) -> float | None:
    num, den = coarse - mid, mid - fine
    if den == 0.0 or num / den <= 0.0:
        return None
    return math.log(num / den) / math.log(ratio)


def richardson(values: Sequence[float], ratio: float = 2.0, order: float = 2.0) -> RichardsonResult:
    """Extrapolate a sequence computed on meshes refined by ``ratio``, coarsest first."""
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("richardson needs at least one value")
    factor = ratio ** order
    extrapolates = [None] + [(factor * values[i] - values[i - 1]) / (factor - 1.0) for i in range(1, len(values))]
    orders = [None, None] + [observed_order(values[i - 2], values[i - 1], values[i], ratio)
                             for i in range(2, len(values))]
    best = extrapolates[-1] if extrapolates[-1] is not None else values[-1]
    return RichardsonResult(values=values, ratio=ratio, assumed_order=order, extrapolate=best,
                            observed_order=orders[-1], error_estimate=abs(best - values[-1]),
                            level_orders=tuple(orders), level_extrapolates=tuple(extrapolates))


def dump_coordinate(matrix, path: str) -> None:
    """Write the upper triangle as 1-based "i j value" lines after a "dim nnz" header."""
    upper = sp.triu(sp.csr_matrix(matrix)).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w") as f:
        f.write(f"{upper.shape[0]} {order.size}\n")
        for k in order:
            f.write(f"{upper.row[k] + 1} {upper.col[k] + 1} {float(upper.data[k])!r}\n")
