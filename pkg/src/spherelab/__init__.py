"""spherelab: spherical averages, maximal functions, and sparse-form experiments."""

__version__ = "0.1.0"

from .grid import (
    GridSpec,
    GridFunction,
    LocalAverage,
    indicator,
    from_callable,
    local_average,
    lp_norm,
    inner,
    translate,
    save_grid,
    load_grid,
)
from .cubes import DyadicCube, box_root, enclosing_cube, BoxSums
from .regions import ExponentRegion, region, contains, phi_curves
from .fourier import (
    SphereSymbol,
    sphere_symbol,
    symbol_decay_profile,
    continuity_symbol_norm,
    lp_pieces,
    radial_derivative_bound,
)
from .operators import (
    RadiusNet,
    MaximalResult,
    make_net,
    spherical_average,
    lacunary_maximal,
    full_maximal,
    localized_average,
    localized_unit_maximal,
    continuity_maximal,
    translation_continuity_norm,
)
from .sparse import (
    CZDecomposition,
    SparseCollection,
    stopping_children,
    cz_decompose,
    build_sparse_collection,
    certify_sparsity,
    carleson_embedding_check,
)
from .forms import (
    SparseFormValue,
    evaluate_form,
    domination_experiment,
    form_lp_bound_check,
    one_form_reduction_check,
)
from .weights import (
    WeightProfile,
    power_weight,
    ap_constant,
    a1_constant,
    rh_constant,
    factorization_check,
    weighted_boundedness_probe,
)
from .extremals import (
    ExponentFit,
    fit_loglog,
    annulus_pair,
    knapp_pair,
    stein_function,
    boundary_locator,
    continuity_sharpness_experiment,
)

__all__ = [
    "GridSpec",
    "GridFunction",
    "LocalAverage",
    "DyadicCube",
    "ExponentRegion",
    "SphereSymbol",
    "RadiusNet",
    "MaximalResult",
    "CZDecomposition",
    "SparseCollection",
    "SparseFormValue",
    "WeightProfile",
    "ExponentFit",
    "indicator",
    "from_callable",
    "local_average",
    "lp_norm",
    "inner",
    "translate",
    "save_grid",
    "load_grid",
    "box_root",
    "enclosing_cube",
    "BoxSums",
    "region",
    "contains",
    "phi_curves",
    "sphere_symbol",
    "symbol_decay_profile",
    "continuity_symbol_norm",
    "lp_pieces",
    "radial_derivative_bound",
    "make_net",
    "spherical_average",
    "lacunary_maximal",
    "full_maximal",
    "localized_average",
    "localized_unit_maximal",
    "continuity_maximal",
    "translation_continuity_norm",
    "stopping_children",
    "cz_decompose",
    "build_sparse_collection",
    "certify_sparsity",
    "carleson_embedding_check",
    "evaluate_form",
    "domination_experiment",
    "form_lp_bound_check",
    "one_form_reduction_check",
    "power_weight",
    "ap_constant",
    "a1_constant",
    "rh_constant",
    "factorization_check",
    "weighted_boundedness_probe",
    "fit_loglog",
    "annulus_pair",
    "knapp_pair",
    "stein_function",
    "boundary_locator",
    "continuity_sharpness_experiment",
]
