import numpy as np
import pytest

from spherelab.cubes import box_root, cell_level, cube_of_cell
from spherelab.errors import RegionError, SphereLabError
from spherelab.forms import (
    domination_experiment,
    evaluate_form,
    form_lp_bound_check,
    maximal_majorant_ratio,
    one_form_reduction_check,
)
from spherelab.grid import GridFunction, GridSpec, from_callable, indicator
from spherelab.sparse import build_sparse_collection, greedy_density_assignment


@pytest.fixture
def spec() -> GridSpec:
    return GridSpec(2, 2.0, 64)


def ones(spec):
    return from_callable(spec, lambda *x: np.ones_like(x[0]))


class TestEvaluateForm:
    def test_single_cube(self, spec, rng):
        cube = cube_of_cell(spec, (16, 16), cell_level(spec) + 4, 0)
        coll = greedy_density_assignment(spec, [cube])
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        from spherelab.grid import local_average

        r, s = 1.5, 2.0
        want = (
            cube.volume(spec)
            * local_average(f, cube, r).value
            * local_average(g, cube, s).value
        )
        got = evaluate_form(coll, f, g, r, s)
        assert got.value == pytest.approx(want, rel=1e-12)

    def test_indicator_on_own_cube(self, spec):
        cube = cube_of_cell(spec, (16, 16), cell_level(spec) + 4, 0)
        coll = greedy_density_assignment(spec, [cube])
        sl, _ = cube.box_slices(spec)
        vals = np.zeros(spec.shape)
        vals[sl] = 1.0
        f = GridFunction(spec, vals)
        for r, s in ((1.0, 1.0), (1.7, 2.4)):
            assert evaluate_form(coll, f, f, r, s).value == pytest.approx(
                cube.volume(spec), rel=1e-12
            )

    def test_matches_naive_resummation(self, spec, rng):
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        coll = build_sparse_collection(
            GridFunction(spec, (rng.random(spec.shape) < 0.2).astype(float)),
            GridFunction(spec, (rng.random(spec.shape) < 0.2).astype(float)),
            r=1.2,
            s=1.3,
        )
        r, s = 1.4, 1.9
        form = evaluate_form(coll, f, g, r, s)
        h = spec.spacing
        naive = 0.0
        for cube, _ in sorted(form.per_cube_terms, key=lambda t: t[0].key()):
            sl, _n = cube.box_slices(spec)
            vol = cube.volume_cells(spec)
            fa = (np.sum(np.abs(f.values[sl]) ** r) / vol) ** (1 / r)
            ga = (np.sum(np.abs(g.values[sl]) ** s) / vol) ** (1 / s)
            naive += (vol * h**spec.dim) * fa * ga
        assert form.value == pytest.approx(naive, rel=1e-12)

    def test_bilinear_homogeneity(self, spec, rng):
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        coll = greedy_density_assignment(spec, [box_root(spec)])
        base = evaluate_form(coll, f, g, 1.5, 1.5).value
        scaled = evaluate_form(coll, 3.0 * f, 0.5 * g, 1.5, 1.5).value
        assert scaled == pytest.approx(1.5 * base, rel=1e-10)

    def test_monotone_in_exponents(self, spec, rng):
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        coll = build_sparse_collection(
            GridFunction(spec, (rng.random(spec.shape) < 0.3).astype(float)), ones(spec), r=1.0, s=1.0
        )
        v11 = evaluate_form(coll, f, g, 1.0, 1.0).value
        v22 = evaluate_form(coll, f, g, 2.0, 2.0).value
        assert v22 >= v11 - 1e-12

    def test_m_form_at_most_plain(self, spec, rng):
        f = indicator(spec, lambda x, y: x**2 + y**2 < 0.6)
        g = GridFunction(spec, rng.random(spec.shape))
        coll = build_sparse_collection(f, g, r=1.2, s=1.2, m_sets_for="lacunary")
        plain = evaluate_form(coll, f, g, 1.2, 1.2, use_m_sets=False).value
        mval = evaluate_form(coll, f, g, 1.2, 1.2, use_m_sets=True).value
        assert mval <= plain + 1e-12

    def test_missing_m_sets_rejected(self, spec, rng):
        coll = greedy_density_assignment(spec, [box_root(spec)])
        f = GridFunction(spec, rng.random(spec.shape))
        with pytest.raises(SphereLabError):
            evaluate_form(coll, f, f, 1.0, 1.0, use_m_sets=True)


class TestDomination:
    def test_indicator_on_root_cemp_at_most_one(self, spec):
        f = ones(spec)
        res = domination_experiment(f, f, "lacunary", r=1.0 / 0.55, s=1.0 / 0.55)
        assert res.c_emp <= 1.0 + 1e-6
        ok = res.collection
        assert len(ok.cubes) >= 1

    def test_region_gate(self, spec):
        f = ones(spec)
        with pytest.raises(RegionError):
            domination_experiment(f, f, "lacunary", r=1.25, s=1.25)  # (0.8, 0.8) outside

    def test_full_operator_small_grid(self):
        spec = GridSpec(2, 4.0, 64)
        f = indicator(spec, lambda x, y: (np.abs(x) < 0.3) & (np.abs(y) < 0.1))
        g = indicator(spec, lambda x, y: (np.abs(x) < 0.3) & (np.abs(y - 1.5) < 0.2))
        res = domination_experiment(
            f, g, "full", r=1.0 / 0.3, s=1.0 / 0.75, use_m_sets=True
        )
        assert np.isfinite(res.c_emp) and res.c_emp > 0


class TestFormLpBound:
    def test_constant_pair_ratio_small(self, spec, rng):
        f = GridFunction(spec, (rng.random(spec.shape) < 0.2).astype(float))
        coll = build_sparse_collection(f, f, r=1.0, s=1.0)
        corpus = [(ones(spec), ones(spec))]
        ratio = form_lp_bound_check(coll, 1.0, 1.5, 2.0, corpus)
        assert ratio <= 4.0 * 1.0  # sparsity bound for the constant pair

    def test_majorant_dominates(self, spec, rng):
        f0 = GridFunction(spec, (rng.random(spec.shape) < 0.2).astype(float))
        coll = build_sparse_collection(f0, f0, r=1.0, s=1.0)
        r, s, p = 1.0, 1.5, 2.0
        for _ in range(5):
            f = GridFunction(spec, rng.random(spec.shape))
            g = GridFunction(spec, rng.random(spec.shape))
            lam = evaluate_form(coll, f, g, r, s).value
            from spherelab.grid import lp_norm

            denom = lp_norm(f, p) * lp_norm(g, p / (p - 1))
            # proof majorant: Lambda < 2 int M_r f M_s g (density > 1/2 here)
            assert lam / denom <= 2.0 * maximal_majorant_ratio(coll, f, g, r, s, p) + 1e-12

    def test_scaling_invariance(self, spec, rng):
        f0 = GridFunction(spec, (rng.random(spec.shape) < 0.2).astype(float))
        coll = build_sparse_collection(f0, f0, r=1.0, s=1.0)
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        a = form_lp_bound_check(coll, 1.0, 1.5, 2.0, [(f, g)])
        b = form_lp_bound_check(coll, 1.0, 1.5, 2.0, [(7.0 * f, g)])
        assert a == pytest.approx(b, rel=1e-10)

    def test_exponent_order_enforced(self, spec):
        coll = greedy_density_assignment(spec, [box_root(spec)])
        with pytest.raises(ValueError):
            form_lp_bound_check(coll, 2.0, 1.5, 1.5, [])


class TestOneFormReduction:
    def test_identical_collections(self, spec, rng):
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        coll = greedy_density_assignment(spec, [box_root(spec)])
        form = evaluate_form(coll, f, g, 1.5, 1.5)
        combined, c, _, dropped = one_form_reduction_check([form, form], f, g)
        assert c == pytest.approx(1.0, rel=1e-12)
        assert dropped == []

    def test_disjoint_collections(self, spec, rng):
        qc = cell_level(spec)
        c1 = cube_of_cell(spec, (0, 0), qc + 4, 0)
        c2 = cube_of_cell(spec, (32, 32), qc + 4, 0)
        f = GridFunction(spec, rng.random(spec.shape))
        g = GridFunction(spec, rng.random(spec.shape))
        f1 = evaluate_form(greedy_density_assignment(spec, [c1]), f, g, 1.0, 1.0)
        f2 = evaluate_form(greedy_density_assignment(spec, [c2]), f, g, 1.0, 1.0)
        combined, c, coll, dropped = one_form_reduction_check([f1, f2], f, g)
        assert len(coll.cubes) == 2 and dropped == []
        assert c <= 2.0

    def test_shifted_grid_union(self, rng):
        # forms built on all 3^n grids over one (f, g): the repaired union
        # dominates the best single-grid form up to 3^n
        spec = GridSpec(2, 2.0, 128)
        f = indicator(spec, lambda x, y: (x + 0.5) ** 2 + (y + 0.5) ** 2 < 0.2**2)
        g = GridFunction(spec, rng.random(spec.shape))
        forms = []
        from spherelab.cubes import enclosing_cube

        lo = np.argwhere(f.values > 0).min(axis=0)
        hi = np.argwhere(f.values > 0).max(axis=0) + 1
        for shift in range(9):
            root = enclosing_cube(spec, lo, hi, shift=shift)
            coll = build_sparse_collection(f, g, root=root, r=1.2, s=1.2)
            forms.append(evaluate_form(coll, f, g, 1.2, 1.2))
        combined, c, coll, dropped = one_form_reduction_check(forms, f, g)
        assert c <= 9.0
        from spherelab.sparse import certify_sparsity

        ok, witness = certify_sparsity(coll)
        assert ok, witness
