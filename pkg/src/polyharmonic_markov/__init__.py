try:
    from ._version import version as __version__
except ImportError:
    __version__ = "unknown"

from .errors import (
    DimensionError,
    EvaluationError,
    MeasureError,
    PolyharmonicError,
    PolySyntaxError,
    TruncationError,
)
from .harmonic import (
    AlmansiDecomp,
    HarmonicLayer,
    almansi_decompose,
    harmonic_basis,
    np_formula,
    np_search,
    sphere_inner,
    sphere_monomial_integral,
)
from .markov import (
    SecondKindRep,
    SeriesRep,
    identity_check,
    markov_eval_numeric,
    markov_series,
    moment_functional,
    polyharmonicity_check,
    rest_series,
    second_kind,
    second_kind_orthogonality,
    support_verdict,
)
from .measures import (
    DiscreteMeasure,
    MomentTable,
    distributed_moments,
    integrate_poly,
    load_measure,
    orthogonality_order,
    orthogonalize,
)
from .polycore import (
    HomogeneousParts,
    MPoly,
    eval_poly,
    homogeneous_parts,
    laplacian,
    parse_poly,
    polyharmonic_degree,
)
from .verify import (
    RankReport,
    density_rank_test,
    separation_test,
    unp_basis,
)

__all__ = (
    "AlmansiDecomp",
    "DimensionError",
    "DiscreteMeasure",
    "EvaluationError",
    "HarmonicLayer",
    "HomogeneousParts",
    "MPoly",
    "MeasureError",
    "MomentTable",
    "PolySyntaxError",
    "PolyharmonicError",
    "RankReport",
    "SecondKindRep",
    "SeriesRep",
    "TruncationError",
    "almansi_decompose",
    "density_rank_test",
    "distributed_moments",
    "eval_poly",
    "harmonic_basis",
    "homogeneous_parts",
    "identity_check",
    "integrate_poly",
    "laplacian",
    "load_measure",
    "markov_eval_numeric",
    "markov_series",
    "moment_functional",
    "np_formula",
    "np_search",
    "orthogonality_order",
    "orthogonalize",
    "parse_poly",
    "polyharmonic_degree",
    "polyharmonicity_check",
    "rest_series",
    "second_kind",
    "second_kind_orthogonality",
    "separation_test",
    "sphere_inner",
    "sphere_monomial_integral",
    "support_verdict",
    "unp_basis",
)
