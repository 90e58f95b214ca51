import math

import numpy as np
import pytest
import scipy.sparse as sp

import driftcheck.discretize as discretize
import driftcheck.eigensolve as eigensolve
import driftcheck.exprlang as exprlang
import tests.helpers
from driftcheck.discretize import BoundaryCondition, DEType, DiscretizeException, MeshSpec
from driftcheck.geometry import Axis, AxisEnd, Face
from tests.test_geometry import gaussian_disk, manifold, sphere_cap


def flat_interval(lower=0.0, upper=1.0, weight="0"):
    return manifold(["1"], weight, [Axis(lower, upper)])


def test_interval_mesh():
    mesh = discretize.build_mesh(flat_interval(), 4)
    assert mesh.n_dofs == 5
    assert mesh.n_elements == 4
    assert list(mesh.boundary[Face(0, False)]) == [0]
    assert list(mesh.boundary[Face(0, True)]) == [4]
    assert mesh.dof_coordinates()[:, 0] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


def test_box_mesh():
    box = manifold(["1", "0", "1"], "0", [Axis(0.0, 1.0), Axis(0.0, 1.0)])
    mesh = discretize.build_mesh(box, (2, 3))
    assert mesh.n_dofs == 12
    assert mesh.n_elements == 12
    assert mesh.boundary_dofs().size == 10
    # corners belong to the first face that claims them
    assert sum(len(v) for v in mesh.boundary.values()) == 10


def test_periodic_and_singular_ends():
    mesh = discretize.build_mesh(gaussian_disk(), (2, 4))
    assert mesh.n_dofs == 1 + 2 * 4
    assert mesh.periodic_pairs.shape == (3, 2)
    assert list(mesh.boundary) == [Face(0, True)]
    assert mesh.boundary[Face(0, True)].size == 4


def test_resolution_too_small():
    with pytest.raises(DiscretizeException) as e:
        discretize.build_mesh(flat_interval(), 1)
    assert e.value.type == DEType.DE_RESOLUTION_TOO_SMALL


def test_quadrature_rules():
    line = discretize.quadrature(3, 1)
    assert line.weights.sum() == pytest.approx(1.0)
    assert np.sum(line.weights * line.points[:, 0] ** 5) == pytest.approx(1.0 / 6.0)
    tri = discretize.quadrature(3, 2)
    assert tri.weights.sum() == pytest.approx(0.5)
    x, y = tri.points[:, 0], tri.points[:, 1]
    assert np.all(x + y <= 1.0)
    assert np.sum(tri.weights * x * x) == pytest.approx(1.0 / 12.0)
    assert np.sum(tri.weights * x * y) == pytest.approx(1.0 / 24.0)


def test_mass_and_stiffness_of_constants():
    problem = discretize.assemble(flat_interval(), discretize.build_mesh(flat_interval(), 8))
    ones = np.ones(problem.size)
    assert ones @ (problem.B @ ones) == pytest.approx(1.0)
    assert np.abs(problem.K @ ones).max() == pytest.approx(0.0, abs=1e-12)
    assert abs(problem.K - problem.K.T).max() == 0.0


def test_weighted_volumes():
    line = flat_interval(-1.0, 1.0, "x1^2/2")
    exact = math.sqrt(2 * math.pi) * math.erf(1 / math.sqrt(2))
    assert discretize.weighted_volume(discretize.build_mesh(line, 8), line) == pytest.approx(exact, rel=1e-8)
    disk = gaussian_disk()
    exact = 2 * math.pi * (1 - math.exp(-0.5))
    assert discretize.weighted_volume(discretize.build_mesh(disk, (8, 16)), disk, 6) == pytest.approx(exact, rel=1e-8)
    cap = sphere_cap()
    assert discretize.weighted_volume(discretize.build_mesh(cap, (8, 16)), cap, 6) == pytest.approx(2 * math.pi,
                                                                                                   rel=1e-8)


def test_integrate_products():
    line = flat_interval()
    mesh = discretize.build_mesh(line, 4)
    x = exprlang.parse("x1", 1)
    assert discretize.integrate(mesh, line, [x, x]) == pytest.approx(1.0 / 3.0)
    nodal = mesh.dof_coordinates()[:, 0]
    assert discretize.integrate(mesh, line, [nodal]) == pytest.approx(0.5)
    assert discretize.integrate(mesh, line, [lambda p: 2.0 * p[:, 0]]) == pytest.approx(1.0)
    assert discretize.integrate(mesh, line, [3.0]) == pytest.approx(3.0)


def test_dirichlet_energy():
    line = flat_interval()
    mesh = discretize.build_mesh(line, 4)
    problem = discretize.assemble(line, mesh)
    v = mesh.dof_coordinates()[:, 0]
    assert problem.dirichlet_energy(v) == pytest.approx(1.0)


def test_boundary_conditions():
    line = flat_interval()
    problem = discretize.assemble(line, discretize.build_mesh(line, 4))
    dirichlet = discretize.apply_bc(problem, BoundaryCondition.DIRICHLET)
    assert dirichlet.size == 3
    assert list(dirichlet.dirichlet) == [0, 4]
    assert dirichlet.expand(np.ones(3)).tolist() == [0.0, 1.0, 1.0, 1.0, 0.0]
    neumann = discretize.apply_bc(problem, BoundaryCondition.NEUMANN)
    assert neumann.size == 5
    assert neumann.deflate_constant


def test_dirichlet_without_boundary():
    sphere = manifold(["1", "0", "sin(x1)^2"], "0",
                      [Axis(0.0, math.pi, lower_end=AxisEnd.SINGULAR, upper_end=AxisEnd.SINGULAR),
                       Axis(0.0, 2 * math.pi, periodic=True)])
    problem = discretize.assemble(sphere, discretize.build_mesh(sphere, (4, 8)))
    with pytest.raises(DiscretizeException) as e:
        discretize.apply_bc(problem, BoundaryCondition.DIRICHLET)
    assert e.value.type == DEType.DE_NO_BOUNDARY


def test_degenerate_metric_names_element():
    bad = manifold(["x1"], "0", [Axis(-1.0, 1.0)])
    with pytest.raises(DiscretizeException) as e:
        discretize.assemble(bad, discretize.build_mesh(bad, 4))
    assert e.value.type == DEType.DE_DEGENERATE_METRIC
    assert e.value.element == 0


def test_rim_integral():
    disk = gaussian_disk()
    mesh = discretize.build_mesh(disk, (4, 8))
    value, err = discretize.integrate_boundary(mesh, disk, Face(0, True), 1.0)
    assert value == pytest.approx(2 * math.pi * math.exp(-0.5))
    assert err < 1e-10
    value, _ = discretize.integrate_boundary(mesh, disk, Face(0, True), exprlang.parse("cos(x2)^2", 2), 6)
    assert value == pytest.approx(math.pi * math.exp(-0.5))


def test_interval_end_integral():
    line = flat_interval(-1.0, 1.0, "x1^2/2")
    mesh = discretize.build_mesh(line, 4)
    value, err = discretize.integrate_boundary(mesh, line, Face(0, True), exprlang.parse("x1 + 1", 1))
    assert value == pytest.approx(2.0 * math.exp(-0.5))
    assert err == 0.0


def test_axisymmetric_reduction():
    reduced = discretize.axisymmetric_reduction(sphere_cap())
    assert reduced.dim == 1
    assert reduced.axes[0].lower_end == AxisEnd.SINGULAR
    assert exprlang.values(reduced.weight, np.array([[0.5]])) == pytest.approx(-math.log(math.sin(0.5)))
    assert exprlang.values(reduced.metric[0], np.array([[0.5]])) == pytest.approx(1.0)


def test_reduction_guards():
    skewed = manifold(["1", "0", "sin(x1)^2"], "cos(x2)",
                      [Axis(0.0, 1.0, lower_end=AxisEnd.SINGULAR), Axis(0.0, 2 * math.pi, periodic=True)])
    with pytest.raises(DiscretizeException) as e:
        discretize.axisymmetric_reduction(skewed)
    assert e.value.type == DEType.DE_REDUCTION
    with pytest.raises(DiscretizeException):
        discretize.axisymmetric_reduction(flat_interval())


def test_reduced_gaussian_disk_matches_oracle():
    reduced = discretize.axisymmetric_reduction(gaussian_disk())
    values = []
    for n in (32, 64, 128):
        problem = discretize.apply_bc(discretize.assemble(reduced, discretize.build_mesh(reduced, n)),
                                      BoundaryCondition.DIRICHLET)
        values.append(eigensolve.smallest_eigenpairs(problem.K, problem.B).first)
    rich = discretize.richardson(values)
    assert rich.extrapolate == pytest.approx(tests.helpers.gaussian_disk_oracle(), rel=1e-5)
    assert values[0] > values[1] > values[2]


def test_flat_interval_upper_bound():
    line = flat_interval()
    problem = discretize.apply_bc(discretize.assemble(line, discretize.build_mesh(line, 8)),
                                  BoundaryCondition.DIRICHLET)
    lam = eigensolve.smallest_eigenpairs(problem.K, problem.B).first
    assert math.pi ** 2 < lam < 1.02 * math.pi ** 2


def test_mesh_spec_levels():
    spec = MeshSpec(counts=(4, 8), levels=3)
    assert spec.counts_at(0) == (4, 8)
    assert spec.counts_at(2) == (16, 32)


def test_richardson_exact_for_quadratic_error():
    lam, c = 2.0, 0.3
    rich = discretize.richardson([lam + c, lam + c / 4, lam + c / 16])
    assert rich.extrapolate == pytest.approx(lam)
    assert rich.observed_order == pytest.approx(2.0)
    assert rich.error_estimate == pytest.approx(c / 16, rel=1e-9)
    assert rich.level_orders[:2] == (None, None)
    assert rich.level_extrapolates[0] is None


def test_observed_order_non_monotone():
    assert discretize.observed_order(1.0, 2.0, 1.5) is None
    assert discretize.observed_order(1.0, 1.0, 1.0) is None


def test_dump_coordinate():
    with tests.helpers.tempdir() as td:
        path = td.path + "/k.txt"
        discretize.dump_coordinate(sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]])), path)
        with open(path) as f:
            lines = f.read().splitlines()
    assert lines == ["2 3", "1 1 2.0", "1 2 -1.0", "2 2 2.0"]


def test_constant_shift_of_weight_leaves_spectrum_unchanged():
    base, shifted = flat_interval(-1.0, 1.0, "x1^2/2"), flat_interval(-1.0, 1.0, "x1^2/2 + 3")
    mesh = discretize.build_mesh(base, 16)
    a = discretize.apply_bc(discretize.assemble(base, mesh), BoundaryCondition.DIRICHLET)
    b = discretize.apply_bc(discretize.assemble(shifted, mesh), BoundaryCondition.DIRICHLET)
    scale = math.exp(-3.0)
    assert b.K.toarray() == pytest.approx(scale * a.K.toarray(), rel=1e-12, abs=1e-300)
    assert b.B.toarray() == pytest.approx(scale * a.B.toarray(), rel=1e-12, abs=1e-300)
    values_a = eigensolve.smallest_eigenpairs(a.K, a.B, k=4).eigenvalues
    values_b = eigensolve.smallest_eigenpairs(b.K, b.B, k=4).eigenvalues
    assert values_b == pytest.approx(values_a, rel=1e-12)


def test_rayleigh_quotient_of_hat_function():
    line = flat_interval()
    problem = discretize.apply_bc(discretize.assemble(line, discretize.build_mesh(line, 2)),
                                  BoundaryCondition.DIRICHLET)
    assert eigensolve.rayleigh_quotient(problem.K, problem.B, [1.0]) == pytest.approx(12.0)


def test_rayleigh_quotients_bound_discrete_first_eigenvalue():
    disk = gaussian_disk()
    problem = discretize.apply_bc(discretize.assemble(disk, discretize.build_mesh(disk, (6, 12))),
                                  BoundaryCondition.DIRICHLET)
    first = eigensolve.smallest_eigenpairs(problem.K, problem.B).first
    rng = np.random.default_rng(12)
    for _ in range(20):
        v = rng.standard_normal(problem.size)
        assert eigensolve.rayleigh_quotient(problem.K, problem.B, v) >= first - 1e-10
