import math

import numpy as np
import pytest

from metricbundle import (
    BundleClass,
    EvenFormValue,
    GridSpec,
    ahat_point,
    ch_additivity_check,
    chern_character_point,
    curvature_form,
    first_chern_number,
    flat_chart,
    gauss_bonnet,
    index_additivity_check,
    index_ch_ahat,
    index_ch_td,
    integrate_even_form,
    k0_class,
    k0_combine,
    k0_element,
    monopole_connection,
    sphere_section,
    todd_point,
    torus_section,
    trivial_connection,
    whitney_sum,
)
from metricbundle.chern import K0Element, first_chern_point

GRID = GridSpec((128, 256))
COARSE = GridSpec((64, 128))


@pytest.fixture(scope="module")
def sphere_setup():
    section = sphere_section(1.0)
    return section, section.chart


class TestChernCharacterPoint:
    def test_rank_in_degree_zero(self, sphere_setup):
        _, chart = sphere_setup
        form = curvature_form(trivial_connection(3, chart))
        value = chern_character_point(form, [1.0, 1.0])
        assert value.degree0 == 3
        assert value.degree2 == 0

    def test_monopole_density(self, sphere_setup):
        # -(1/2 pi i) tr F with F_tp = (-i n / 2) sin t gives (n / 4 pi) sin t.
        _, chart = sphere_setup
        n = 4
        form = curvature_form(monopole_connection(n, chart))
        for t in (0.3, 1.2, 2.8):
            value = chern_character_point(form, [t, 0.7])
            assert value.degree2 == pytest.approx(n * math.sin(t) / (4 * math.pi), abs=1e-12)

    def test_whitney_sum_trace(self, sphere_setup):
        _, chart = sphere_setup
        a, b = monopole_connection(1, chart), monopole_connection(2, chart)
        total = curvature_form(whitney_sum(a, b))
        x = [1.1, 0.4]
        value = chern_character_point(total, x)
        parts = [chern_character_point(curvature_form(c), x) for c in (a, b)]
        assert value.degree0 == 2
        assert value.degree2 == pytest.approx(parts[0].degree2 + parts[1].degree2, abs=1e-15)


class TestIntegrateEvenForm:
    def test_monopole_like_density(self, sphere_setup):
        _, chart = sphere_setup
        sampler = lambda x: EvenFormValue(0.0, math.sin(x[0]) / (4 * math.pi))
        assert integrate_even_form(chart, GridSpec((64, 64)), sampler) == pytest.approx(1.0, abs=1e-6)

    def test_zero_sampler(self, sphere_setup):
        _, chart = sphere_setup
        assert integrate_even_form(chart, GridSpec((8, 8)), lambda x: EvenFormValue(5.0, 0.0)) == 0.0

    def test_constant_on_unit_square(self):
        chart = flat_chart(((0.0, 1.0), (0.0, 1.0)))
        value = integrate_even_form(chart, GridSpec((16, 16)), lambda x: EvenFormValue(0.0, 1.0))
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_requires_surface(self):
        chart = flat_chart(((0.0, 1.0),) , label="interval")
        with pytest.raises(ValueError, match="2-dimensional"):
            integrate_even_form(chart, GridSpec((8,)), lambda x: EvenFormValue(0.0, 1.0))


class TestFirstChernNumber:
    @pytest.mark.parametrize("n", [-5, -2, 0, 1, 3, 5])
    def test_monopole_quantization(self, sphere_setup, n):
        _, chart = sphere_setup
        report = first_chern_number(monopole_connection(n, chart), chart, GRID)
        assert abs(report.raw - n) < 1e-6
        assert report.rounded == n
        assert report.gap < 0.01
        assert report.imag_residue < 1e-9

    def test_trivial_bundle(self, sphere_setup):
        _, chart = sphere_setup
        report = first_chern_number(trivial_connection(2, chart), chart, COARSE)
        assert report.raw == 0.0

    def test_c1_equals_ch1_pointwise(self, sphere_setup):
        _, chart = sphere_setup
        form = curvature_form(monopole_connection(3, chart))
        x = np.array([0.9, 2.0])
        assert first_chern_point(form, x) == pytest.approx(
            chern_character_point(form, x).degree2, abs=1e-15
        )


class TestToddAndAhat:
    def test_flat_todd(self):
        value = todd_point(0.0, 1.0)
        assert value.degree0 == 1.0 and value.degree2 == 0.0

    def test_sphere_todd_integrates_to_half_euler(self, sphere_setup):
        section, chart = sphere_setup
        sampler = lambda x: todd_point(1.0, math.sin(x[0]))
        assert integrate_even_form(chart, GridSpec((64, 64)), sampler) == pytest.approx(1.0, abs=1e-3)

    def test_torus_todd_integrates_to_zero(self):
        section = torus_section(2.0, 1.0)

        def sampler(x):
            u = x[0]
            curvature = math.cos(u) / (2.0 + math.cos(u))
            return todd_point(curvature, 2.0 + math.cos(u))

        assert integrate_even_form(section.chart, GridSpec((64, 64)), sampler) == pytest.approx(
            0.0, abs=1e-3
        )

    def test_ahat_is_unit(self, sphere_setup):
        _, chart = sphere_setup
        value = ahat_point([0.3, 0.4])
        assert value.degree0 == 1.0 and value.degree2 == 0.0
        assert integrate_even_form(chart, GridSpec((16, 16)), lambda x: ahat_point(x)) == 0.0

    def test_ch_times_ahat_gives_degree(self, sphere_setup):
        _, chart = sphere_setup
        report = index_ch_ahat(monopole_connection(2, chart), chart, COARSE)
        assert report.raw == pytest.approx(2.0, abs=1e-6)


class TestGaussBonnet:
    def test_unit_sphere(self, sphere_setup):
        section, chart = sphere_setup
        report = gauss_bonnet(section, chart, GRID)
        assert abs(report.raw - 2.0) < 1e-3
        assert report.rounded == 2

    def test_torus(self):
        section = torus_section(2.0, 1.0)
        report = gauss_bonnet(section, section.chart, GRID)
        assert abs(report.raw) < 1e-3
        assert report.rounded == 0

    def test_radius_independence(self):
        big = sphere_section(5.0)
        report = gauss_bonnet(big, big.chart, GRID)
        assert abs(report.raw - 2.0) < 1e-3


class TestIndexChTd:
    @pytest.mark.parametrize("n", range(-2, 4))
    def test_twisted_line_bundles(self, sphere_setup, n):
        section, chart = sphere_setup
        report = index_ch_td(monopole_connection(n, chart), section, chart, GRID)
        assert abs(report.raw - (n + 1)) < 2e-3
        assert report.formula == "ch-td"

    def test_trivial_line_bundle_on_torus(self):
        section = torus_section(2.0, 1.0)
        report = index_ch_td(trivial_connection(1, section.chart), section, section.chart, GRID)
        assert abs(report.raw) < 1e-3

    def test_rank_two_trivial_on_sphere(self, sphere_setup):
        section, chart = sphere_setup
        report = index_ch_td(trivial_connection(2, chart), section, chart, GRID)
        assert abs(report.raw - 2.0) < 2e-3

    def test_radius_invariance(self):
        small, big = sphere_section(1.0), sphere_section(5.0)
        r1 = index_ch_td(monopole_connection(2, small.chart), small, small.chart, GRID)
        r5 = index_ch_td(monopole_connection(2, big.chart), big, big.chart, GRID)
        assert abs(r1.raw - r5.raw) < 1e-3


class TestIndexChAhat:
    def test_trivial_bundle_sphere_and_torus(self, sphere_setup):
        _, chart = sphere_setup
        assert abs(index_ch_ahat(trivial_connection(1, chart), chart, COARSE).raw) < 1e-9
        tor = torus_section(2.0, 1.0)
        assert abs(index_ch_ahat(trivial_connection(2, tor.chart), tor.chart, COARSE).raw) < 1e-9

    @pytest.mark.parametrize("n", [-3, 1, 4])
    def test_twist_recovers_degree(self, sphere_setup, n):
        _, chart = sphere_setup
        report = index_ch_ahat(monopole_connection(n, chart), chart, GRID)
        assert abs(report.raw - n) < 1e-6


class TestWhitneySum:
    def test_rank_and_blocks(self, sphere_setup):
        _, chart = sphere_setup
        total = whitney_sum(monopole_connection(1, chart), monopole_connection(2, chart))
        assert total.rank == 2
        a = total.coefficients(np.array([1.0, 1.0]))
        assert a.shape == (2, 2, 2)
        assert a[1, 0, 1] == 0 and a[1, 1, 0] == 0

    def test_zero_rank_identity(self, sphere_setup):
        _, chart = sphere_setup
        e = monopole_connection(2, chart)
        summed = whitney_sum(e, trivial_connection(0, chart))
        assert summed.rank == e.rank
        x = np.array([0.8, 0.8])
        np.testing.assert_allclose(summed.coefficients(x), e.coefficients(x))

    def test_degrees_add(self, sphere_setup):
        _, chart = sphere_setup
        total = whitney_sum(monopole_connection(3, chart), monopole_connection(-1, chart))
        report = first_chern_number(total, chart, COARSE)
        assert abs(report.raw - 2.0) < 1e-6

    def test_chart_mismatch(self, sphere_setup):
        _, chart = sphere_setup
        other = torus_section(2.0, 1.0).chart
        with pytest.raises(ValueError, match="base-chart"):
            whitney_sum(monopole_connection(1, chart), trivial_connection(1, other))


class TestAdditivity:
    def test_ch_additivity_pair(self, sphere_setup):
        _, chart = sphere_setup
        bundles = [monopole_connection(1, chart), monopole_connection(2, chart)]
        report = ch_additivity_check(bundles, chart, GridSpec((32, 64)))
        assert report.max_defect < 1e-12

    def test_ch_additivity_singleton(self, sphere_setup):
        _, chart = sphere_setup
        report = ch_additivity_check([monopole_connection(2, chart)], chart, GridSpec((16, 32)))
        assert report.max_defect == 0.0

    def test_ch_additivity_triple(self, sphere_setup):
        _, chart = sphere_setup
        bundles = [monopole_connection(n, chart) for n in (1, 2, -3)]
        report = ch_additivity_check(bundles, chart, GridSpec((32, 64)))
        assert report.max_defect < 1e-12
        total = whitney_sum(whitney_sum(*bundles[:2]), bundles[2])
        assert abs(first_chern_number(total, chart, COARSE).raw) < 1e-6

    @pytest.mark.parametrize(
        "charges,expected",
        [((1, 2), 5.0), ((2, -2), 2.0), ((1, 2, -3), 3.0)],
    )
    def test_index_additivity(self, sphere_setup, charges, expected):
        section, chart = sphere_setup
        bundles = [monopole_connection(n, chart) for n in charges]
        report = index_additivity_check(bundles, section, chart, COARSE)
        assert report.gap < 1e-6
        assert report.lhs == pytest.approx(expected, abs=5e-3)
        assert report.rhs == pytest.approx(sum(report.per_bundle), abs=1e-12)

    def test_trivial_pair_on_torus(self):
        section = torus_section(2.0, 1.0)
        bundles = [trivial_connection(1, section.chart), trivial_connection(1, section.chart)]
        report = index_additivity_check(bundles, section, section.chart, COARSE)
        assert report.gap < 1e-12
        assert abs(report.lhs) < 1e-3


class TestK0:
    def test_monopole_class(self, sphere_setup):
        _, chart = sphere_setup
        cls = k0_class(monopole_connection(3, chart), chart, COARSE)
        assert (cls.rank, cls.degree) == (1, 3)
        assert abs(cls.raw_degree - 3.0) < 0.01

    def test_trivial_class(self, sphere_setup):
        _, chart = sphere_setup
        cls = k0_class(trivial_connection(2, chart), chart, COARSE)
        assert (cls.rank, cls.degree) == (2, 0)

    def test_cancelling_sum_matches_trivial(self, sphere_setup):
        _, chart = sphere_setup
        total = whitney_sum(monopole_connection(1, chart), monopole_connection(-1, chart))
        cls = k0_class(total, chart, COARSE)
        assert (cls.rank, cls.degree) == (2, 0)

    def test_combine_add(self):
        a = k0_element(BundleClass(1, 3))
        b = k0_element(BundleClass(1, -3))
        assert k0_combine(a, b, "add").reduced == (2, 0)

    def test_inverse_law(self):
        x = k0_element(BundleClass(2, 5), BundleClass(1, -1))
        assert k0_combine(x, x, "subtract").reduced == (0, 0)

    def test_whitney_class_equals_summed_class(self):
        lhs = k0_combine(k0_element(BundleClass(1, 1)), k0_element(BundleClass(1, 2)), "add")
        assert k0_combine(lhs, k0_element(BundleClass(2, 3)), "subtract").reduced == (0, 0)

    def test_group_laws_random(self):
        rng = np.random.default_rng(17)

        def random_element():
            plus = tuple(
                BundleClass(int(rng.integers(0, 4)), int(rng.integers(-5, 6)))
                for _ in range(rng.integers(0, 3))
            )
            minus = tuple(
                BundleClass(int(rng.integers(0, 4)), int(rng.integers(-5, 6)))
                for _ in range(rng.integers(0, 3))
            )
            return K0Element(plus=plus, minus=minus)

        zero = K0Element()
        for _ in range(2000):
            a, b, c = random_element(), random_element(), random_element()
            add = lambda x, y: k0_combine(x, y, "add")
            assert add(a, b).reduced == add(b, a).reduced
            assert add(add(a, b), c).reduced == add(a, add(b, c)).reduced
            assert add(a, zero).reduced == a.reduced
            assert k0_combine(a, a, "subtract").reduced == (0, 0)
            # Grothendieck cancellation: adding c to both sides changes nothing.
            padded = K0Element(plus=a.plus + c.plus, minus=a.minus + c.plus)
            assert padded.reduced == a.reduced

    def test_coarse_grid_rejected(self, sphere_setup):
        _, chart = sphere_setup
        with pytest.raises(ValueError, match="grid too coarse"):
            k0_class(monopole_connection(5, chart), chart, GridSpec((3, 3), "midpoint"))


class TestImagResidue:
    def test_unitary_gauge_forms_are_real(self, sphere_setup):
        section, chart = sphere_setup
        for n in (-2, 1, 4):
            report = index_ch_td(monopole_connection(n, chart), section, chart, COARSE)
            assert report.imag_residue < 1e-9
