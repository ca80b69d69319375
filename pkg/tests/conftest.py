import sys
from pathlib import Path

from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from archopt.design_space import (  # noqa: E402
    Activation, Continuous, DesignSpace, Forbidden, Integer,
)


@st.composite
def small_spaces(draw, max_discrete=4, max_options=4, max_continuous=2):
    """Random acyclic hierarchical spaces with integer-valued discrete variables."""
    n_d = draw(st.integers(1, max_discrete))
    n_opts = [draw(st.integers(2, max_options)) for _ in range(n_d)]
    variables = [Integer(f"d{j}", 0, n - 1) for j, n in enumerate(n_opts)]
    n_c = draw(st.integers(0, max_continuous))
    variables += [Continuous(f"c{k}", 0.0, 1.0 + k) for k in range(n_c)]
    activations = []
    # each variable may depend on one earlier discrete variable: always acyclic
    for j in range(1, n_d + n_c):
        if draw(st.booleans()):
            drv = draw(st.integers(0, min(j, n_d) - 1))
            vals = draw(st.lists(st.integers(0, n_opts[drv] - 1), min_size=1,
                                 max_size=n_opts[drv], unique=True))
            activations.append(Activation(variables[j].name, {"in": [f"d{drv}", sorted(vals)]}))
    forbidden = []
    if n_d >= 2:
        for _ in range(draw(st.integers(0, 2))):
            a, b = draw(st.lists(st.integers(0, n_d - 1), min_size=2, max_size=2, unique=True))
            va = draw(st.integers(0, n_opts[a] - 1))
            vb = draw(st.integers(0, n_opts[b] - 1))
            forbidden.append(Forbidden({"and": [{"eq": [f"d{a}", va]}, {"eq": [f"d{b}", vb]}]}))
    flag = draw(st.booleans())
    return DesignSpace(variables, activations, forbidden, single_option_inactive=flag)
