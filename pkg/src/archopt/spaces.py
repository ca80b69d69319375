"""Built-in design spaces used as fixtures and by the test problems."""
from __future__ import annotations

from .design_space import (
    Activation, Categorical, Continuous, DesignSpace, Forbidden, Integer, Ordinal,
)

__all__ = ["toy_space", "table2_space", "table4_space", "turbofan_space", "gnc_space"]


def toy_space() -> DesignSpace:
    """Energy-source assignment toy: 1 or 2 sources, 1 or 2 consumers.

    x0: number of sources, x1: number of consumers, x2/x3: source feeding
    consumer 1/2. With a single source both consumers must use source 1;
    the assignment of consumer 2 only exists when there are two consumers.
    Assignments pinned by the single source stay active, so assigning a
    consumer to a missing source is reported as incorrect.
    """
    variables = [
        Ordinal("n_sources", [1, 2]),
        Ordinal("n_consumers", [1, 2]),
        Integer("source_c1", 1, 2),
        Integer("source_c2", 1, 2),
    ]
    activations = [Activation("source_c2", {"eq": ["n_consumers", 2]})]
    forbidden = [
        Forbidden({"and": [{"eq": ["n_sources", 1]}, {"eq": ["source_c1", 2]}]}),
        Forbidden({"and": [{"eq": ["n_sources", 1]}, {"eq": ["source_c2", 2]}]}),
    ]
    return DesignSpace(variables, activations, forbidden, single_option_inactive=False)


def table2_space() -> DesignSpace:
    """Two discrete variables (4 x 3 options) with six valid combinations."""
    variables = [Integer("x0", 0, 3), Integer("x1", 0, 2)]
    activations = [Activation("x1", {"in": ["x0", [0, 1]]})]
    forbidden = [
        Forbidden({"and": [{"eq": ["x0", 0]}, {"eq": ["x1", 2]}]}),
        Forbidden({"and": [{"eq": ["x0", 1]}, {"eq": ["x1", 1]}]}),
    ]
    return DesignSpace(variables, activations, forbidden)


def table4_space() -> DesignSpace:
    """Five-variable activation chain with nine valid discrete vectors."""
    variables = [
        Integer("x0", 0, 1), Integer("x1", 0, 1), Integer("x2", 0, 2),
        Integer("x3", 0, 1), Integer("x4", 0, 2),
    ]
    activations = [
        Activation("x1", {"eq": ["x0", 0]}),
        Activation("x2", {"eq": ["x1", 0]}),
        Activation("x3", {"in": ["x2", [1, 2]]}),
        Activation("x4", {"eq": ["x2", 0]}),
    ]
    return DesignSpace(variables, activations)


def turbofan_space() -> DesignSpace:
    """Simple turbofan architecture space: 6 discrete and 9 continuous variables."""
    variables = [
        Categorical("IncludeFan", [False, True]),
        Categorical("MixedNozzle", [False, True]),
        Categorical("IncludeGearbox", [False, True]),
        Integer("n_shafts", 1, 3),
        Integer("PowerOfftake", 1, 3),
        Integer("BleedOfftake", 1, 3),
        Continuous("BPR", 2.0, 12.5),
        Continuous("FPR", 1.1, 1.8),
        Continuous("GearRatio", 1.0, 5.0),
        Continuous("OPR", 1.1, 60.0),
        Continuous("PR_factor_2", 0.1, 0.9),
        Continuous("PR_factor_3", 0.1, 0.9),
        Continuous("RPM_1", 1000.0, 20000.0),
        Continuous("RPM_2", 1000.0, 20000.0),
        Continuous("RPM_3", 1000.0, 20000.0),
    ]
    fan = {"eq": ["IncludeFan", True]}
    activations = [Activation(name, fan) for name in ("MixedNozzle", "IncludeGearbox", "BPR", "FPR")]
    activations.append(Activation("GearRatio", {"eq": ["IncludeGearbox", True]}))
    for name in ("PR_factor_2", "RPM_2"):
        activations.append(Activation(name, {"ge": ["n_shafts", 2]}))
    for name in ("PR_factor_3", "RPM_3"):
        activations.append(Activation(name, {"eq": ["n_shafts", 3]}))
    # an offtake can only be connected to an existing shaft
    forbidden = []
    for offtake in ("PowerOfftake", "BleedOfftake"):
        for n in (1, 2):
            forbidden.append(Forbidden({"and": [{"eq": ["n_shafts", n]}, {"gt": [offtake, n]}]}))
    return DesignSpace(variables, activations, forbidden)


def gnc_space(max_units: int = 3) -> DesignSpace:
    """Guidance-navigation-control architecture space without actuators.

    Variables: number of sensors and computers (1..max_units each), one
    binary connection variable per sensor/computer pair, and one continuous
    type selector in [0, 1] per sensor and per computer. Every present
    sensor and computer must have at least one connection.
    """
    units = list(range(1, max_units + 1))
    variables = [Ordinal("n_sensors", units), Ordinal("n_computers", units)]
    activations = []

    def present(kind, i):
        # unit i (0-based) exists when the count exceeds i
        return [] if i == 0 else [{"gt": [f"n_{kind}", i]}]

    for i in range(max_units):
        for j in range(max_units):
            name = f"conn_s{i}_c{j}"
            variables.append(Integer(name, 0, 1))
            cond = present("sensors", i) + present("computers", j)
            if cond:
                activations.append(Activation(name, cond[0] if len(cond) == 1 else {"and": cond}))
    for kind in ("sensors", "computers"):
        for i in range(max_units):
            name = f"type_{kind[:-1]}{i}"
            variables.append(Continuous(name, 0.0, 1.0))
            if i > 0:
                activations.append(Activation(name, present(kind, i)[0]))

    forbidden = []
    for i in range(max_units):
        for m in units:
            # sensor i exists and the m existing computers are all unconnected to it
            terms = present("sensors", i) + [{"eq": ["n_computers", m]}]
            terms += [{"eq": [f"conn_s{i}_c{j}", 0]} for j in range(m)]
            forbidden.append(Forbidden({"and": terms}))
    for j in range(max_units):
        for n in units:
            terms = present("computers", j) + [{"eq": ["n_sensors", n]}]
            terms += [{"eq": [f"conn_s{i}_c{j}", 0]} for i in range(n)]
            forbidden.append(Forbidden({"and": terms}))
    return DesignSpace(variables, activations, forbidden, single_option_inactive=False)
