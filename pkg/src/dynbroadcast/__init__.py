"""Simulator, strategy library, and exact solver for message broadcast by
mobile agents on dynamic graphs where an adversary deletes edges each round
while keeping the graph connected."""

from .graph import (
    Edge,
    FamilyInfo,
    Graph,
    GraphError,
    contract_cut_edges,
    edge_density,
    glue_at_vertex,
    graph_from_json,
    graph_to_json,
    grid_node,
    is_connected,
    make_clique_star,
    make_complete,
    make_density_family,
    make_grid,
    make_lollipop,
    make_path,
    make_ring,
    make_theta,
)
from .engine import (
    AgentPolicy,
    AdversaryPolicy,
    AgentState,
    Configuration,
    Outcome,
    RoundRecord,
    RuleViolation,
    Trace,
    apply_round,
    check_trace,
    initial_state,
    legal_targets,
    simulate,
    step,
    trace_from_json,
    trace_to_json,
    validate_removal,
)
from .analysis import (
    Bond,
    BoundEntry,
    BoundReport,
    bound_report,
    edge_connectivity,
    enumerate_bonds,
    min_degree,
    timing_bounds,
    vertex_connectivity,
    y_set_diameter,
)
from .policies import (
    BondBlocker,
    CliquePolicy,
    GreedyPathPolicy,
    GridFlipflopAdversary,
    IsolationTreeAdversary,
    LollipopPolicy,
    PassiveAdversary,
    RandomTreeAdversary,
    ThetaBlocker,
    ThetaBroadcastPolicy,
    TowardSourcePolicy,
    make_policy,
)
from .solver import (
    Attractor,
    BudgetExceeded,
    CanonicalState,
    SolvedAdversaryPolicy,
    SolvedAgentPolicy,
    SolverResult,
    agents_can_win,
    canonical,
    compute_attractor,
    connected_removals,
    game_value,
    min_agents,
    model_check_policy,
    solvable,
    spanning_trees,
)

__version__ = "1.0.0"
