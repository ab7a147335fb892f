import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherelab.cubes import DyadicCube, box_root
from spherelab.errors import DomainError, ResolutionError, WeightError
from spherelab.grid import (
    GridFunction,
    GridSpec,
    TranslationClipWarning,
    from_callable,
    indicator,
    inner,
    load_grid,
    load_grid_csv,
    local_average,
    lp_norm,
    save_grid,
    save_grid_csv,
    translate,
)


def unit_cube_indicator(spec):
    def pred(*coords):
        mask = True
        for g in coords:
            mask = mask & ((0 <= g) & (g < 1))
        return mask

    return indicator(spec, pred)


class TestGridSpec:
    def test_spacing(self, spec2):
        assert spec2.spacing == pytest.approx(4.0 / 128)

    def test_rejects_non_pow2(self):
        with pytest.raises(ValueError):
            GridSpec(2, 2.0, 100)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            GridSpec(4, 2.0, 64)

    def test_centers_cover_box(self, spec2):
        c = spec2.centers()
        assert c[0] == pytest.approx(-2.0 + spec2.spacing / 2)
        assert c[-1] == pytest.approx(2.0 - spec2.spacing / 2)


class TestLocalAverage:
    def test_constant_function(self, spec2):
        f = from_callable(spec2, lambda x, y: np.ones_like(x))
        root = box_root(spec2)
        for r in (1.0, 1.5, 2.0, 3.0):
            assert local_average(f, root, r).value == pytest.approx(1.0)

    def test_indicator_direct_count(self, spec2):
        # brute-force cell-count oracle for <1_E>_{Q,1}
        f = unit_cube_indicator(spec2)
        root = box_root(spec2)
        count = int(f.values.sum())
        expected = count / spec2.points**2
        assert local_average(f, root, 1.0).value == pytest.approx(expected, rel=1e-12)

    def test_half_cube_rms(self, spec2):
        # indicator of half of Q at r=2 gives sqrt(1/2)
        f = indicator(spec2, lambda x, y: x < 0)
        root = box_root(spec2)
        assert local_average(f, root, 2.0).value == pytest.approx(0.5**0.5, rel=1e-12)

    def test_monotone_in_r(self, spec2, rng):
        # power-mean monotonicity over 100 random dyadic cubes
        from spherelab.cubes import cell_level, cube_of_cell

        f = GridFunction(spec2, rng.random(spec2.shape))
        qc = cell_level(spec2)
        cubes = [box_root(spec2)]
        for _ in range(99):
            j = int(rng.integers(1, 6))
            cell = tuple(rng.integers(0, spec2.points, size=2))
            cubes.append(cube_of_cell(spec2, cell, qc + j, shift=int(rng.integers(0, 9))))
        for q in cubes:
            vals = [local_average(f, q, r).value for r in (1.0, 1.5, 2.0, 4.0)]
            assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_below_resolution_rejected(self, spec2):
        f = unit_cube_indicator(spec2)
        # a cube placed entirely outside the box has empty intersection
        far = DyadicCube(shift=0, level=-2, coords=(-500, -500))
        with pytest.raises(ResolutionError):
            local_average(f, far, 1.0)


class TestLpNorm:
    def test_unit_cube(self, spec2):
        f = unit_cube_indicator(spec2)
        for p in (1.0, 2.0, 3.5):
            assert lp_norm(f, p) == pytest.approx(1.0, rel=1e-12)

    def test_homogeneous(self, spec2, rng):
        f = GridFunction(spec2, rng.standard_normal(spec2.shape))
        c = -3.7
        assert lp_norm(c * f, 2.0) == pytest.approx(abs(c) * lp_norm(f, 2.0), rel=1e-12)

    def test_holder_pairs(self, spec2, rng):
        for p in (1.5, 2.0, 3.0):
            q = p / (p - 1)
            f = GridFunction(spec2, rng.standard_normal(spec2.shape))
            g = GridFunction(spec2, rng.standard_normal(spec2.shape))
            assert abs(inner(f, g)) <= lp_norm(f, p) * lp_norm(g, q) * (1 + 1e-12)

    def test_radial_weight_against_quadrature(self, spec2_fine):
        # ||1_B||_{L^1(|x|^a)} compared with the 1-D radial integral
        spec = spec2_fine
        a = 1.0
        f = indicator(spec, lambda x, y: x**2 + y**2 < 1)
        w = from_callable(spec, lambda x, y: np.sqrt(x**2 + y**2) ** a)
        w.values[w.values == 0] = spec.spacing / 2  # origin cell, midpoint radius
        exact = 2 * np.pi / (a + 2)  # int_0^1 r^a r dr dtheta
        assert lp_norm(f, 1.0, w) == pytest.approx(exact, rel=0.01)

    def test_invalid_weight(self, spec2):
        f = unit_cube_indicator(spec2)
        w = from_callable(spec2, lambda x, y: np.zeros_like(x))
        with pytest.raises(WeightError):
            lp_norm(f, 2.0, w)


class TestTranslate:
    def test_identity(self, spec2):
        f = unit_cube_indicator(spec2)
        g = translate(f, (0.0, 0.0))
        np.testing.assert_array_equal(f.values, g.values)

    def test_roundtrip(self, spec2):
        f = unit_cube_indicator(spec2)
        y = (8 * spec2.spacing, -5 * spec2.spacing)
        g = translate(translate(f, y), tuple(-v for v in y))
        np.testing.assert_array_equal(f.values, g.values)

    def test_norm_preserved_interior(self, spec2):
        f = unit_cube_indicator(spec2)
        g = translate(f, (16 * spec2.spacing, 16 * spec2.spacing))
        for p in (1.0, 2.0):
            assert lp_norm(g, p) == pytest.approx(lp_norm(f, p), rel=1e-12)

    def test_symmetric_difference(self, spec2):
        # ||f - tau_y f||_1 for a unit-cube indicator moved by one cell
        f = unit_cube_indicator(spec2)
        h = spec2.spacing
        g = translate(f, (h, 0.0))
        # exact count: two slabs of one-cell thickness and unit cross-section
        expected = 2 * h * 1.0
        assert lp_norm(f - g, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_non_lattice_vector_rejected(self, spec2):
        f = unit_cube_indicator(spec2)
        with pytest.raises(DomainError):
            translate(f, (spec2.spacing / 3, 0.0))

    def test_clip_warning(self, spec2):
        f = unit_cube_indicator(spec2)
        with pytest.warns(TranslationClipWarning):
            translate(f, (1.5, 0.0))


class TestSerialization:
    def test_binary_roundtrip(self, spec2, rng, tmp_path):
        f = GridFunction(spec2, rng.standard_normal(spec2.shape))
        path = tmp_path / "f.sgrd"
        save_grid(f, path)
        g = load_grid(path)
        assert g.spec == spec2
        np.testing.assert_array_equal(f.values, g.values)

    def test_csv_roundtrip(self, rng, tmp_path):
        spec = GridSpec(2, 1.0, 16)
        f = GridFunction(spec, rng.standard_normal(spec.shape))
        path = tmp_path / "f.csv"
        save_grid_csv(f, path)
        g = load_grid_csv(path)
        assert g.spec == spec
        np.testing.assert_allclose(f.values, g.values, rtol=0, atol=0)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(min_value=-10, max_value=10, allow_nan=False), p=st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_lp_norm_homogeneity_property(c, p):
    spec = GridSpec(2, 1.0, 16)
    rng = np.random.default_rng(7)
    f = GridFunction(spec, rng.standard_normal(spec.shape))
    assert lp_norm(c * f, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-10, abs=1e-12)
