"""Analysis, sampling, correction and optimization of hierarchical design spaces."""

__version__ = "0.1.0"

from .design_space import (  # noqa: E402
    Activation, Categorical, Continuous, DesignSpace, EnumerationUnavailable, Forbidden, Integer,
    Ordinal, PointStatus, SpaceDefinitionError,
)
from .metrics import hierarchy_stats  # noqa: E402
from .correction import Corrector  # noqa: E402
from .sampling import sample_hierarchical, sample_nonhierarchical  # noqa: E402
from .problems import Problem, get_problem  # noqa: E402
from .record import RunRecord  # noqa: E402

__all__ = [
    "Activation", "Categorical", "Continuous", "DesignSpace", "EnumerationUnavailable", "Forbidden",
    "Integer", "Ordinal", "PointStatus", "SpaceDefinitionError", "hierarchy_stats", "Corrector",
    "sample_hierarchical", "sample_nonhierarchical", "Problem", "get_problem", "RunRecord",
]
