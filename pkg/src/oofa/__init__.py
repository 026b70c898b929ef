"""Order-of-addition experimental designs.

Construct, evaluate, and certify designs whose treatment is the order in
which m components are added: pair-wise-ordering expansion, balance and
efficiency criteria, exchange searches for optimal fractions, restricted
orderings, and process-variable augmentation.
"""

__version__ = "0.1.0"

from .perm import (  # noqa: F401
    Design,
    design_from_rows,
    expand,
    full_design,
    leave_one_out,
    pwo_columns,
    pwo_row,
    rank,
    unrank,
)
from .candidates import (  # noqa: F401
    CandidateSet,
    Constraint,
    ProcessFactorSpec,
    build,
    full_candidates,
    validate_against,
)
from .reference import (  # noqa: F401
    ReferenceTable,
    TableType,
    admissible_min_N,
    classify_pair_structure,
    classify_pairs,
    reference_counts,
)
from .criteria import (  # noqa: F401
    CriteriaReport,
    chi2_summary,
    chi2_tuple,
    d_efficiency,
    evaluate,
    loo_summary,
    mean_vif,
    moments,
    rank_designs,
    rmv_ord,
)
from .isomorph import (  # noqa: F401
    WtSignature,
    canonical_form,
    d_isomorphic,
    wt_isomorphic,
    wt_signature,
)
from .search import (  # noqa: F401
    SearchConfig,
    SearchResult,
    catalog_run,
    chi2_exchange_search,
    fedorov_search,
)
from .analysis import FittedModel, fit_main_effects, stepwise  # noqa: F401
from .errors import (  # noqa: F401
    SingularModelError,
    UnsatisfiableConstraintError,
    ValidationError,
)
