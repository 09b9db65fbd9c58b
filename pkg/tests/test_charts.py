import math

import numpy as np
import pytest

from metricbundle import (
    Chart,
    ChartError,
    GridSpec,
    chart_from_label,
    embedding_jacobian,
    flat_chart,
    induced_metric,
    quadrature_grid,
    sphere_chart,
    torus_chart,
    validate_spd,
)
from conftest import interior_points


def strip_jacobian(chart):
    """Copy of a chart with the analytic jacobian removed (forces FD)."""
    return Chart(
        dim=chart.dim,
        domain=chart.domain,
        embedding=chart.embedding,
        jacobian=None,
        label=chart.label + ":fd",
        periodic=chart.periodic,
        default_margin=chart.default_margin,
    )


class TestEmbeddingJacobian:
    def test_identity_embedding(self):
        chart = flat_chart(((0.0, 1.0), (0.0, 1.0)))
        jac = embedding_jacobian(chart, [0.5, 0.5])
        np.testing.assert_allclose(jac, np.eye(2))

    def test_sphere_columns_at_equator(self):
        # d/dtheta (sin t cos p, sin t sin p, cos t) = (cos t cos p, cos t sin p, -sin t)
        # d/dphi = (-sin t sin p, sin t cos p, 0); at t = pi/2, p = 0 these are
        # (0, 0, -1) and (0, 1, 0).
        jac = embedding_jacobian(sphere_chart(1.0), [math.pi / 2, 0.0])
        np.testing.assert_allclose(jac[:, 0], [0.0, 0.0, -1.0], atol=1e-12)
        np.testing.assert_allclose(jac[:, 1], [0.0, 1.0, 0.0], atol=1e-12)

    def test_fd_matches_analytic_on_torus(self):
        chart = torus_chart(2.0, 1.0)
        fd_chart = strip_jacobian(chart)
        for x in interior_points(chart, 20, seed=1):
            fd = embedding_jacobian(fd_chart, x, h=1e-5)
            exact = embedding_jacobian(chart, x)
            assert np.max(np.abs(fd - exact)) < 1e-8

    def test_missing_embedding(self):
        chart = Chart(dim=2, domain=((0, 1), (0, 1)), label="bare")
        with pytest.raises(ChartError, match="no embedding"):
            embedding_jacobian(chart, [0.5, 0.5])

    def test_point_outside_domain(self):
        with pytest.raises(ChartError, match="outside"):
            embedding_jacobian(flat_chart(((0, 1), (0, 1))), [2.0, 0.5])


class TestInducedMetric:
    def test_identity_embedding(self):
        chart = flat_chart(((0.0, 1.0), (0.0, 1.0)))
        np.testing.assert_allclose(induced_metric(chart, [0.3, 0.7]), np.eye(2))

    def test_round_sphere(self):
        g = induced_metric(sphere_chart(1.0), [math.pi / 3, 1.0])
        np.testing.assert_allclose(g, np.diag([1.0, 0.75]), atol=1e-12)

    def test_torus_metric(self):
        for u in (0.4, 2.0, 5.0):
            g = induced_metric(torus_chart(2.0, 1.0), [u, 1.3])
            np.testing.assert_allclose(g, np.diag([1.0, (2.0 + math.cos(u)) ** 2]), atol=1e-12)

    def test_rank_deficient_jacobian(self):
        collapsed = Chart(
            dim=2,
            domain=((0, 1), (0, 1)),
            embedding=lambda x: np.array([x[0], 0.0, 0.0]),
            label="collapsed",
        )
        with pytest.raises(ChartError, match="rank-deficient"):
            induced_metric(collapsed, [0.5, 0.5])


class TestQuadratureGrid:
    def test_midpoint_unit_square(self):
        nodes, weights = quadrature_grid(flat_chart(((0, 1), (0, 1))), GridSpec((2, 2), "midpoint"))
        assert len(nodes) == 4
        np.testing.assert_allclose(weights, 0.25)
        np.testing.assert_allclose(sorted(nodes[:, 0]), [0.25, 0.25, 0.75, 0.75])

    def test_sphere_area_element(self):
        nodes, weights = quadrature_grid(sphere_chart(1.0), GridSpec((64, 64)))
        integral = float(np.sum(np.sin(nodes[:, 0]) * weights))
        assert abs(integral - 4.0 * math.pi) < 1e-6

    def test_torus_box_volume(self):
        _nodes, weights = quadrature_grid(torus_chart(2.0, 1.0), GridSpec((16, 16)))
        assert abs(float(np.sum(weights)) - 4.0 * math.pi**2) < 1e-12 * 4 * math.pi**2

    def test_weights_sum_to_shrunk_volume(self):
        chart = flat_chart(((0, 1), (0, 2)))
        spec = GridSpec((5, 7), "midpoint", margin=0.1)
        _nodes, weights = quadrature_grid(chart, spec)
        np.testing.assert_allclose(float(np.sum(weights)), 0.8 * 1.8, rtol=1e-13)

    def test_nodes_strictly_interior(self):
        chart = sphere_chart(1.0)
        nodes, _ = quadrature_grid(chart, GridSpec((16, 16)))
        assert np.all(nodes[:, 0] > 0.0) and np.all(nodes[:, 0] < math.pi)

    def test_degenerate_margin(self):
        with pytest.raises(ChartError, match="collapses"):
            quadrature_grid(flat_chart(((0, 1), (0, 1))), GridSpec((4, 4), margin=0.6))

    def test_convergence_under_doubling(self):
        # Midpoint error is O(N^-2), so each doubling must shrink it.
        chart = sphere_chart(1.0)
        errors = []
        for count in (8, 16, 32, 64):
            nodes, weights = quadrature_grid(chart, GridSpec((count, count), "midpoint"))
            integral = float(np.sum(np.sin(nodes[:, 0]) * weights))
            errors.append(abs(integral - 4.0 * math.pi))
        assert errors[0] > errors[1] > errors[2] > errors[3]


class TestChartInvariants:
    @pytest.mark.parametrize("label", ["flat", "sphere:r=1", "torus:R=2,r=1", "sphere:r=2"])
    def test_fd_vs_analytic_jacobian(self, label):
        chart = chart_from_label(label)
        fd_chart = strip_jacobian(chart)
        worst = 0.0
        for x in interior_points(chart, 100, seed=7):
            diff = embedding_jacobian(fd_chart, x, h=1e-5) - embedding_jacobian(chart, x)
            worst = max(worst, float(np.max(np.abs(diff))))
        assert worst < 1e-7

    @pytest.mark.parametrize("label", ["flat", "sphere:r=1", "torus:R=2,r=1"])
    def test_induced_metric_spd_on_grid(self, label):
        chart = chart_from_label(label)
        nodes, _ = quadrature_grid(chart, GridSpec((8, 16)))
        for x in nodes:
            assert validate_spd(induced_metric(chart, x)).passed

    def test_wrap_and_delta(self):
        chart = torus_chart(2.0, 1.0)
        wrapped = chart.wrap([2 * math.pi + 0.3, -0.2])
        np.testing.assert_allclose(wrapped, [0.3, 2 * math.pi - 0.2])
        delta = chart.wrapped_delta([0.1, 0.0], [2 * math.pi - 0.1, 0.0])
        np.testing.assert_allclose(delta, [0.2, 0.0], atol=1e-12)

    def test_degenerate_domain_rejected(self):
        with pytest.raises(ChartError, match="degenerate"):
            Chart(dim=1, domain=((1.0, 1.0),))
