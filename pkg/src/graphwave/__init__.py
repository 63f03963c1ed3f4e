"""Discrete wave equation on finite graphs: lattice dynamics with nodal-mass
vertex conditions, characteristic closed forms and 3-star shape control."""

from .closed_form import (
    StarGeometry,
    WindowExceeded,
    interval_left,
    interval_right,
    star_center_exact,
    star_center_trace,
    star_forward,
)
from .control import (
    ControlPair,
    ShapeTarget,
    explicit_equal_length_controls,
    g_from_target,
    minimal_time,
    optimal_time,
    solve_controls,
    verify_control,
)
from .dynamics import NodeCondition, Trajectory, action, energies, simulate, step
from .experiments import measure_transmission, run_tables
from .graph import (
    DiscreteGraph,
    GraphError,
    GraphSpec,
    build_graph,
    format_graph_spec,
    interval_graph,
    parse_graph_spec,
    path_graph,
    star_graph,
)

__version__ = "0.1.0"
