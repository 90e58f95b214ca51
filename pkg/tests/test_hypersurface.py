import math

import numpy as np
import pytest

import driftcheck.discretize as discretize
import driftcheck.exprlang as exprlang
import driftcheck.geometry as geometry
import driftcheck.hypersurface as hypersurface
import tests.helpers
from driftcheck.geometry import Axis, AxisEnd, PlanMode, SamplePlan, WeightedManifold
from driftcheck.hypersurface import IEType, Immersion, ImmersionException

GAUSSIAN = "(x1^2 + x2^2 + x3^2)/2"
PLAN = SamplePlan(mode=PlanMode.GRID, count=7, inset=1e-2)


def immersion(components, weight=GAUSSIAN, axes=None, **kwargs):
    axes = axes or (Axis(0.0, math.pi, lower_end=AxisEnd.SINGULAR, upper_end=AxisEnd.SINGULAR),
                    Axis(0.0, 2 * math.pi, periodic=True))
    return Immersion(axes=tuple(axes), map=tuple(exprlang.parse(c, 2) for c in components),
                     weight=exprlang.parse(weight, 3), **kwargs)


def sphere(radius="sqrt(2)", **kwargs):
    return immersion([f"{radius}*sin(x1)*cos(x2)", f"{radius}*sin(x1)*sin(x2)", f"{radius}*cos(x1)"], **kwargs)


def cylinder():
    return immersion(["cos(x2)", "sin(x2)", "x1"],
                     axes=(Axis(-0.5, 0.5), Axis(0.0, 2 * math.pi, periodic=True)), orientation=-1)


def plane_disk():
    return immersion(["x1*cos(x2)", "x1*sin(x2)", "0"],
                     axes=(Axis(0.0, 1.0, lower_end=AxisEnd.SINGULAR), Axis(0.0, 2 * math.pi, periodic=True)))


def test_sphere_shape():
    data = hypersurface.shape_at(sphere(), [0.8, 0.3])
    r = math.sqrt(2)
    assert data.mean_curvature == pytest.approx(2 / r)
    assert data.norm2_A == pytest.approx(2 / r ** 2)
    assert data.normal == pytest.approx([math.sin(0.8) * math.cos(0.3), math.sin(0.8) * math.sin(0.3), math.cos(0.8)])
    assert data.weighted_mean_curvature == pytest.approx(0.0, abs=1e-12)
    assert data.ric_h_normal == pytest.approx(1.0)
    assert data.metric == pytest.approx(np.diag([2.0, 2.0 * math.sin(0.8) ** 2]))


def test_sign_conventions_flip_mean_curvature():
    p = [1.1, 2.0]
    base = hypersurface.shape_at(sphere(), p).mean_curvature
    reshaped = hypersurface.shape_at(sphere(shape_sign=-1), p)
    assert reshaped.mean_curvature == pytest.approx(-base)
    assert reshaped.weighted_mean_curvature == pytest.approx(-2 * base)
    # both terms follow the normal
    flipped = hypersurface.shape_at(sphere(orientation=-1), p)
    assert flipped.mean_curvature == pytest.approx(-base)
    assert flipped.weighted_mean_curvature == pytest.approx(0.0, abs=1e-12)


def test_cylinder_outward_normal():
    data = hypersurface.shape_at(cylinder(), [0.2, 0.0])
    assert data.normal == pytest.approx([1.0, 0.0, 0.0])
    assert data.mean_curvature == pytest.approx(1.0)
    assert data.norm2_A == pytest.approx(1.0)


def test_invalid_immersions():
    with pytest.raises(ImmersionException) as e:
        sphere(orientation=2)
    assert e.value.type == IEType.IE_INVALID_PARAMETER
    flat = immersion(["x1", "0", "0"], axes=(Axis(0.0, 1.0), Axis(0.0, 1.0)))
    with pytest.raises(ImmersionException) as e:
        hypersurface.shape_at(flat, [0.5, 0.5])
    assert e.value.type == IEType.IE_RANK_DEFICIENT


def test_h_minimality():
    for imm in (sphere(), cylinder(), plane_disk()):
        assert hypersurface.h_minimality_residual(imm, PLAN).maximum < 1e-10
    wrong = sphere(radius="2")
    stats = hypersurface.h_minimality_residual(wrong, PLAN)
    assert stats.minimum == pytest.approx(1.0)


def test_stability_potential():
    pts = PLAN.points(sphere())
    assert hypersurface.stability_potential(sphere(), pts) == pytest.approx(np.full(len(pts), 2.0))
    # |A|^2 = 0 and the Hessian of |x|^2/2 is the identity
    disk_pts = PLAN.points(plane_disk())
    assert hypersurface.stability_potential(plane_disk(), disk_pts) == pytest.approx(np.full(len(disk_pts), 1.0))


@pytest.mark.parametrize("fbar", ["x1^2 + x2*x3", "sin(x1)*x2", "exp(x3/2)"])
def test_splitting_identities(fbar):
    f = exprlang.parse(fbar, 3)
    for imm in (sphere(), cylinder(), sphere(radius="1.3")):
        plain, drift = hypersurface.splitting_residual(imm, f, PLAN.points(imm))
        assert np.max(plain) < 1e-9
        assert np.max(drift) < 1e-9


@pytest.mark.parametrize("f", ["1", "cos(x1)", "sin(x1)*cos(x2)"])
def test_third_order_identity_on_shrinker_sphere(f):
    imm = sphere()
    assert np.max(hypersurface.prop25_residual(imm, exprlang.parse(f, 2), PLAN.points(imm))) < 1e-8


def test_closed_sphere_is_unstable():
    imm = sphere()
    mesh = discretize.build_mesh(imm, (8, 16))
    outcome = hypersurface.stability_verdict(imm, mesh)
    assert not outcome.dirichlet
    assert not outcome.stable
    assert outcome.mu1 == pytest.approx(-2.0, rel=1e-8)
    assert outcome.q_one == pytest.approx(-16 * math.pi * math.exp(-1.0), rel=1e-6)


def test_plane_disk_is_shifted_drift_laplacian():
    imm = plane_disk()
    outcomes = [hypersurface.stability_verdict(imm, discretize.build_mesh(imm, (n, 2 * n))) for n in (8, 16, 32)]
    assert all(o.dirichlet and o.stable for o in outcomes)
    rich = discretize.richardson([o.mu1 for o in outcomes])
    assert rich.extrapolate == pytest.approx(tests.helpers.gaussian_disk_oracle() - 1.0, rel=1e-3)



def test_quadratic_form_assembled_and_direct_agree():
    imm = cylinder()
    mesh = discretize.build_mesh(imm, (6, 12))
    full = discretize.assemble(imm, mesh, 4, potential=lambda pts: hypersurface.stability_potential(imm, pts))
    x = mesh.dof_coordinates()
    phi = np.cos(math.pi * x[:, 0]) * (1.0 + 0.3 * np.sin(x[:, 1]))
    assert hypersurface.quadratic_form(full, phi) == pytest.approx(
        hypersurface.quadratic_form_direct(imm, mesh, phi), rel=1e-10)


def test_stability_shift_is_below_potential():
    imm = sphere()
    assert hypersurface.stability_shift(imm, discretize.build_mesh(imm, (4, 8))) == pytest.approx(-4.0)


def test_criterion_hypotheses_on_sphere():
    imm = sphere()
    report = hypersurface.thm2_check(imm, discretize.build_mesh(imm, (4, 8)), 1.0, PLAN)
    names = [h.name for h in report.hypotheses]
    assert names == ["parallel_hessian", "h_minimal", "mean_curvature_nonzero", "curvature_condition"]
    assert all(h.passed for h in report.hypotheses[:3])
    assert report.hypotheses[3].margin == pytest.approx(0.5 - 5.0)
    assert not report.predicted_stable
    assert report.verdict == "hypotheses-not-met"
    assert report.stability is not None and not report.stability.stable


def test_criterion_skips_curvature_when_h_vanishes():
    imm = plane_disk()
    report = hypersurface.thm2_check(imm, None, 1.0, PLAN)
    names = [h.name for h in report.hypotheses]
    assert "curvature_condition" not in names
    assert "boundary_weighted_mean_curvature" in names
    assert report.verdict == "hypotheses-not-met"
    assert report.stability is None


def test_criterion_rejects_nonpositive_c():
    with pytest.raises(ImmersionException):
        hypersurface.thm2_check(sphere(), None, 0.0, PLAN)


def test_convention_survey():
    rows = hypersurface.convention_survey(sphere(), PLAN)
    assert [(r["shape_sign"], r["weight_sign"]) for r in rows] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    assert rows[0]["h_minimality"] < 1e-10
    assert rows[3]["h_minimality"] < 1e-10
    assert rows[1]["h_minimality"] == pytest.approx(2 * math.sqrt(2))
    assert rows[0]["prop25"] < 1e-8


def test_criterion_rejects_cubic_weight():
    imm = sphere(weight=GAUSSIAN + " + x1^3/6")
    report = hypersurface.thm2_check(imm, None, 1.0, PLAN)
    assert report.hypotheses[0].name == "parallel_hessian"
    assert report.hypotheses[0].margin == pytest.approx(-1.0)
    assert not report.hypotheses[0].passed
    assert report.verdict == "hypotheses-not-met"


def test_mean_curvature_is_an_eigenfunction_on_shrinker_sphere():
    imm = sphere()
    pts = PLAN.points(imm)
    data = hypersurface.shape_on(imm, pts)
    potential = hypersurface.stability_potential(imm, pts)
    # H is constant, so L_h H reduces to the potential term
    assert potential * data.mean_curvature == pytest.approx(2.0 * data.mean_curvature)


def test_induced_metric_matches_pullback_chart():
    imm = sphere()
    pts = SamplePlan(count=10, inset=0.05).points(imm)
    chart = WeightedManifold(dim=2, metric=tuple(exprlang.parse(t, 2) for t in ("2", "0", "2*sin(x1)^2")),
                             weight=exprlang.parse("1", 2), axes=imm.axes)
    expected = chart.metric_values(pts)
    assert np.max(np.abs(hypersurface.shape_on(imm, pts).metric - expected)) <= 1e-10
    assert np.max(np.abs(imm.metric_values(pts) - expected)) <= 1e-10


@pytest.mark.parametrize("radius, r2", [("1", 1.0), ("sqrt(2)", 2.0), ("1.7", 2.89)])
def test_gauss_equation_on_spheres(radius, r2):
    imm = sphere(radius=radius)
    pts = SamplePlan(count=10, inset=0.05).points(imm)
    data = geometry.curvature_on(imm, pts)
    assert np.max(np.abs(data.ricci - imm.metric_values(pts) / r2)) <= 1e-8
    shape = hypersurface.shape_on(imm, pts)
    assert shape.norm2_A == pytest.approx(np.full(len(pts), 2.0 / r2))


def test_orientation_flip():
    imm = sphere(radius="2")
    pts = SamplePlan(mode=PlanMode.LOW_DISCREPANCY, count=8, inset=0.05).points(imm)[:50]
    assert len(pts) == 50
    up, down = hypersurface.shape_on(imm, pts), hypersurface.shape_on(imm.with_convention(orientation=-1), pts)
    assert down.normal == pytest.approx(-up.normal)
    assert down.second_form == pytest.approx(-up.second_form)
    assert down.mean_curvature == pytest.approx(-up.mean_curvature)
    assert down.norm2_A == pytest.approx(up.norm2_A)
    assert down.weighted_mean_curvature == pytest.approx(-up.weighted_mean_curvature)
    flipped = imm.with_convention(orientation=-1)
    assert hypersurface.h_minimality_residual(flipped, PLAN).maximum == pytest.approx(
        hypersurface.h_minimality_residual(imm, PLAN).maximum)
