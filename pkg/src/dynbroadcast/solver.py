"""Exhaustive game solving on small instances.

A state is agent-winning iff every ignorant agent has converted, or for every
adversary removal there exists a joint agent move leading (after conversion)
to an agent-winning state. The winning set is the least fixed point of that
operator, computed in synchronous waves so that the wave index of a state is
exactly the minimax number of rounds to full broadcast.

Adversary branching defaults to spanning trees of the base graph: the
adversary moves no agents, so shrinking the surviving edge set only shrinks
the agents' options, and every connected survivor contains a spanning tree.
The all-subsets mode is retained to test that reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, product
from math import comb
from typing import Hashable, Iterable, Literal, NamedTuple

import numpy as np

from .engine import AgentState, Configuration, _convert, initial_state
from .graph import Edge, Graph, is_connected

DEFAULT_BUDGET_STATES = 300_000
DEFAULT_MAX_NODES = 12
DEFAULT_MAX_AGENTS = 5

Mode = Literal["spanning_trees", "all_subsets"]
Placement = Literal["adversarial", "agents_choose"]

INFINITE = float("inf")


class BudgetExceeded(RuntimeError):
    """State space outgrew the configured budget; result is undecided, never guessed."""


class CanonicalState(NamedTuple):
    """Positions up to permutation of same-class agents."""

    ignorant: tuple[int, ...]
    source: tuple[int, ...]


def canonical(config: Configuration) -> CanonicalState:
    return CanonicalState(tuple(sorted(config.ignorant)), tuple(sorted(config.source)))


def canonical_after_conversion(ignorant: Iterable[int], source: Iterable[int]) -> CanonicalState:
    src = tuple(source)
    src_set = set(src)
    stay = [p for p in ignorant if p not in src_set]
    conv = [p for p in ignorant if p in src_set]
    return CanonicalState(tuple(sorted(stay)), tuple(sorted(list(src) + conv)))


# -- adversary branching ---------------------------------------------------------


def spanning_trees(g: Graph) -> list[frozenset[Edge]]:
    """All spanning trees, as edge sets, in deterministic order."""
    n, edges = g.node_count, sorted(g.edges)
    if comb(len(edges), n - 1) > 2_000_000:
        raise BudgetExceeded("too many edge subsets for spanning tree enumeration")
    trees = []
    for combo in combinations(edges, n - 1):
        if is_connected(n, combo):
            trees.append(frozenset(combo))
    return trees


def connected_removals(g: Graph) -> list[frozenset[Edge]]:
    """Every edge subset whose removal leaves the graph connected."""
    edges = sorted(g.edges)
    if len(edges) > 20:
        raise BudgetExceeded("too many edges for removal-subset enumeration")
    out = []
    for r in range(len(edges) + 1):
        for combo in combinations(edges, r):
            if is_connected(g.node_count, g.edges - frozenset(combo)):
                out.append(frozenset(combo))
    return out


def _branch_removals(g: Graph, mode: Mode) -> list[frozenset[Edge]]:
    if mode == "spanning_trees":
        return [g.edges - t for t in spanning_trees(g)]
    if mode == "all_subsets":
        return connected_removals(g)
    raise ValueError(f"unknown mode {mode!r}")


# -- attractor over the full canonical state space --------------------------------


@dataclass
class Attractor:
    graph: Graph
    total_agents: int
    mode: Mode
    index: dict[CanonicalState, int]
    states: list[CanonicalState]
    rank: dict[CanonicalState, int]  # winning states only; rank = minimax rounds to goal
    states_explored: int

    def wins(self, state: CanonicalState) -> bool:
        return state in self.rank


_ATTRACTOR_CACHE: dict[tuple[Graph, int, Mode], Attractor] = {}


def _enumerate_states(n: int, total: int) -> list[CanonicalState]:
    states = []
    for n_ig in range(total):  # at least one source
        n_src = total - n_ig
        for ig in combinations_with_replacement(range(n), n_ig):
            for src in combinations_with_replacement(range(n), n_src):
                states.append(CanonicalState(ig, src))
    return states


def compute_attractor(
    g: Graph,
    total_agents: int,
    mode: Mode = "spanning_trees",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> Attractor:
    key = (g, total_agents, mode)
    cached = _ATTRACTOR_CACHE.get(key)
    if cached is not None:
        return cached

    n = g.node_count
    states = _enumerate_states(n, total_agents)
    if len(states) > budget_states:
        raise BudgetExceeded(
            f"undecided: budget ({len(states)} states > {budget_states})"
        )
    index = {s: i for i, s in enumerate(states)}
    removals = _branch_removals(g, mode)
    n_removals = len(removals)

    # Per-removal move options per node (stay or cross a surviving edge).
    opts_per_removal: list[list[tuple[int, ...]]] = []
    for removed in removals:
        adj = g.without(removed).adjacency()
        opts_per_removal.append([(v,) + adj[v] for v in range(n)])

    # Distinct target multisets for a class multiset under a removal.
    multiset_memo: dict[tuple[tuple[int, ...], int], tuple[tuple[int, ...], ...]] = {}

    def class_targets(ms: tuple[int, ...], r_idx: int) -> tuple[tuple[int, ...], ...]:
        got = multiset_memo.get((ms, r_idx))
        if got is not None:
            return got
        opts = opts_per_removal[r_idx]
        results: set[tuple[int, ...]] = {()}
        for v in ms:
            results = {
                tuple(sorted(rest + (t,))) for rest in results for t in opts[v]
            }
        out = tuple(sorted(results))
        multiset_memo[(ms, r_idx)] = out
        return out

    # Successor state ids per (state, removal) pair, flattened.
    active = [i for i, s in enumerate(states) if s.ignorant]
    succ_flat = array_int()
    offsets = array_int()
    offsets.append(0)
    pair_of: dict[int, int] = {}  # state idx -> first pair id (pairs are contiguous)

    # Post-conversion state index for a (ignorant, source) target multiset pair.
    conv_memo: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}

    def converted_index(ig_ms: tuple[int, ...], src_ms: tuple[int, ...]) -> int:
        sset = set(src_ms)
        if sset.isdisjoint(ig_ms):
            return index[CanonicalState(ig_ms, src_ms)]
        stay = tuple(p for p in ig_ms if p not in sset)
        conv = tuple(p for p in ig_ms if p in sset)
        return index[CanonicalState(stay, tuple(sorted(src_ms + conv)))]

    # Whole successor sets, keyed by the two target-multiset menus (identical
    # menus arise under many removals of a symmetric graph).
    set_memo: dict[tuple, tuple[int, ...]] = {}

    pair_count = 0
    for s_idx in active:
        st = states[s_idx]
        pair_of[s_idx] = pair_count
        for r_idx in range(n_removals):
            ig_targets = class_targets(st.ignorant, r_idx)
            src_targets = class_targets(st.source, r_idx)
            set_key = (ig_targets, src_targets)
            cached_set = set_memo.get(set_key)
            if cached_set is None:
                succs: set[int] = set()
                add = succs.add
                get = conv_memo.get
                for src_ms in src_targets:
                    for ig_ms in ig_targets:
                        key = (ig_ms, src_ms)
                        t = get(key)
                        if t is None:
                            t = converted_index(ig_ms, src_ms)
                            conv_memo[key] = t
                        add(t)
                cached_set = tuple(succs)
                set_memo[set_key] = cached_set
            succ_flat.extend(cached_set)
            offsets.append(len(succ_flat))
            pair_count += 1

    succ_np = np.frombuffer(succ_flat, dtype=np.int64) if succ_flat else np.empty(0, np.int64)
    off_np = np.frombuffer(offsets, dtype=np.int64)

    win = np.zeros(len(states), dtype=bool)
    rank_arr = np.full(len(states), -1, dtype=np.int64)
    for i, s in enumerate(states):
        if not s.ignorant:
            win[i] = True
            rank_arr[i] = 0

    undecided = active
    wave = 0
    while undecided:
        wave += 1
        newly = []
        still = []
        for s_idx in undecided:
            base = pair_of[s_idx]
            ok = True
            for r_idx in range(n_removals):
                a = off_np[base + r_idx]
                b = off_np[base + r_idx + 1]
                if not win[succ_np[a:b]].any():
                    ok = False
                    break
            (newly if ok else still).append(s_idx)
        if not newly:
            break
        for s_idx in newly:
            win[s_idx] = True
            rank_arr[s_idx] = wave
        undecided = still

    rank = {states[i]: int(rank_arr[i]) for i in range(len(states)) if win[i]}
    result = Attractor(g, total_agents, mode, index, states, rank, len(states))
    _ATTRACTOR_CACHE[key] = result
    return result


def array_int():
    from array import array

    return array("q")


# -- public solver operations ------------------------------------------------------


def agents_can_win(
    g: Graph,
    state: CanonicalState | Configuration,
    mode: Mode = "spanning_trees",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> bool:
    if isinstance(state, Configuration):
        state = canonical(state)
    state = canonical_after_conversion(state.ignorant, state.source)
    att = compute_attractor(g, len(state.ignorant) + len(state.source), mode, budget_states)
    return att.wins(state)


def _initial_states(g: Graph, k_ignorant: int, k_source: int) -> list[CanonicalState]:
    """All placements on distinct nodes, up to same-class permutation."""
    out = []
    for nodes in combinations(range(g.node_count), k_ignorant + k_source):
        for src in combinations(nodes, k_source):
            ig = tuple(v for v in nodes if v not in src)
            out.append(CanonicalState(ig, src))
    return out


def solvable(
    g: Graph,
    k: int,
    placement: Placement | Configuration = "adversarial",
    k_source: int = 1,
    mode: Mode = "spanning_trees",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> bool:
    """Whether the agents can force broadcast with k ignorant agents.

    adversarial: the agents must win from every distinct-node placement;
    agents_choose: from some placement; a Configuration: from that one.
    """
    if isinstance(placement, Configuration):
        return agents_can_win(g, placement, mode, budget_states)
    if k + k_source > g.node_count:
        raise ValueError("more agents than nodes")
    att = compute_attractor(g, k + k_source, mode, budget_states)
    initials = _initial_states(g, k, k_source)
    if placement == "adversarial":
        return all(att.wins(s) for s in initials)
    if placement == "agents_choose":
        return any(att.wins(s) for s in initials)
    raise ValueError(f"unknown placement {placement!r}")


def min_agents(
    g: Graph,
    k_max: int,
    placement: Placement = "adversarial",
    mode: Mode = "spanning_trees",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> int | None:
    """Smallest k with solvable(g, k), or None if every k <= k_max fails.

    Solvability is monotone in k (extra agents can shadow existing ones), so
    the scan stops at the first success. A budget overrun surfaces as
    BudgetExceeded, annotated with the last k that was decided.
    """
    last_decided = 0
    for k in range(1, k_max + 1):
        try:
            if solvable(g, k, placement, mode=mode, budget_states=budget_states):
                return k
        except BudgetExceeded as exc:
            raise BudgetExceeded(
                f"{exc}; undecided at k={k}, last decided k={last_decided}"
            ) from exc
        last_decided = k
    return None


Objective = Literal["first_new_source", "all_sources"]


def game_value(
    g: Graph,
    state: CanonicalState | Configuration,
    objective: Objective = "all_sources",
    mode: Mode = "spanning_trees",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> int | float:
    """Minimax round count until the objective event; inf if the adversary wins."""
    if isinstance(state, Configuration):
        state = canonical(state)
    state = canonical_after_conversion(state.ignorant, state.source)
    total = len(state.ignorant) + len(state.source)
    att = compute_attractor(g, total, mode, budget_states)
    if objective == "all_sources":
        r = att.rank.get(state)
        return INFINITE if r is None else r
    if objective != "first_new_source":
        raise ValueError(f"unknown objective {objective!r}")
    if not state.ignorant:
        return 0
    i0 = len(state.ignorant)
    # Value iteration on the layer with i0 ignorant agents; any successor with
    # fewer ignorant agents is the goal event at value 0.
    removals = _branch_removals(g, mode)
    layer = [s for s in att.states if len(s.ignorant) == i0]
    value: dict[CanonicalState, int | float] = {}
    goal_or_value = lambda s: 0 if len(s.ignorant) < i0 else value.get(s, INFINITE)

    succ_cache: dict[tuple[CanonicalState, int], list[CanonicalState]] = {}

    def successors(s: CanonicalState, r_idx: int) -> list[CanonicalState]:
        got = succ_cache.get((s, r_idx))
        if got is not None:
            return got
        adj = g.without(removals[r_idx]).adjacency()
        opts = [(v,) + adj[v] for v in range(g.node_count)]
        succs = set()
        for src_tgt in product(*(opts[v] for v in s.source)):
            for ig_tgt in product(*(opts[v] for v in s.ignorant)):
                succs.add(canonical_after_conversion(ig_tgt, src_tgt))
        out = sorted(succs)
        succ_cache[(s, r_idx)] = out
        return out

    changed = True
    wave = 0
    while changed:
        wave += 1
        changed = False
        for s in layer:
            if s in value:
                continue
            worst = 0
            ok = True
            for r_idx in range(len(removals)):
                best = min(goal_or_value(t) for t in successors(s, r_idx))
                if best == INFINITE or best >= wave:
                    ok = False
                    break
                worst = max(worst, 1 + best)
            if ok:
                value[s] = worst
                changed = True
    return value.get(state, INFINITE)


# -- extracted policies --------------------------------------------------------------


class SolvedAgentPolicy:
    """Winning joint-move policy read off an attractor.

    Each round it enumerates legal joint moves in the surviving graph and picks
    the one whose successor has the smallest winning rank; any spanning tree of
    the survivor is a spanning tree of the base graph, so a rank-decreasing
    move always exists from a winning state.
    """

    role = "agents"

    def __init__(self, attractor: Attractor, name: str = "solved_agents"):
        self.attractor = attractor
        self.name = name

    def initial_memory(self, base: Graph, state: AgentState) -> Hashable:
        return None

    def decide(self, surviving: Graph, state: AgentState, memory: Hashable):
        adj = surviving.adjacency()
        opts = [(p,) + adj[p] for p in state.positions]
        rank = self.attractor.rank
        best: tuple[int, tuple[int, ...]] | None = None
        for targets in product(*opts):
            ig = [t for t, s in zip(targets, state.is_source) if not s]
            src = [t for t, s in zip(targets, state.is_source) if s]
            nxt = canonical_after_conversion(ig, src)
            r = rank.get(nxt)
            if r is None:
                continue
            cand = (r, targets)
            if best is None or cand < best:
                best = cand
        if best is None:
            return state.positions, None  # not a winning state; stand still
        return best[1], None


class SolvedAdversaryPolicy:
    """Removal policy that keeps the play inside the agent-losing region."""

    role = "adversary"

    def __init__(self, attractor: Attractor, name: str = "solved_adversary"):
        self.attractor = attractor
        self.name = name
        self._removals = _branch_removals(attractor.graph, attractor.mode)

    def place(self, base: Graph, k_ignorant: int, k_source: int) -> AgentState:
        att = self.attractor
        for s in _initial_states(base, k_ignorant, k_source):
            if not att.wins(s):
                return initial_state(s.ignorant, s.source)
        raise ValueError("no adversary-winning placement exists")

    def initial_memory(self, base: Graph, state: AgentState) -> Hashable:
        return None

    def decide(self, base: Graph, state: AgentState, memory: Hashable):
        cfg = state.config()
        here = canonical(cfg)
        att = self.attractor
        for removed in self._removals:
            adj = base.without(removed).adjacency()
            opts = [(v,) + adj[v] for v in range(base.node_count)]
            ok = True
            for src_tgt in product(*(opts[v] for v in here.source)):
                for ig_tgt in product(*(opts[v] for v in here.ignorant)):
                    if att.wins(canonical_after_conversion(ig_tgt, src_tgt)):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return removed, None
        return frozenset(), None  # agent-winning state; nothing to defend


# -- model checking a fixed policy ----------------------------------------------------


@dataclass
class SolverResult:
    winner: Literal["agents", "adversary"]
    optimal_rounds: int | float  # inf iff winner == "adversary"
    states_explored: int
    extracted_policy: object | None = None


def model_check_policy(
    g: Graph,
    initial: AgentState,
    fixed,
    mode: Mode = "all_subsets",
    budget_states: int = DEFAULT_BUDGET_STATES,
) -> SolverResult:
    """Play one side with `fixed` and the other side optimally (exhaustively).

    A fixed agent policy faces every connectivity-preserving removal by
    default (the spanning-tree reduction is not sound against a fixed agent
    policy, which may react to the exact surviving graph).
    """
    if getattr(fixed, "role", None) not in ("agents", "adversary"):
        raise ValueError("fixed policy must declare role 'agents' or 'adversary'")
    removals = _branch_removals(g, mode)
    new_cls, _ = _convert(initial.positions, initial.is_source)
    initial = AgentState(initial.positions, new_cls)

    if fixed.role == "agents":
        return _check_fixed_agents(g, initial, fixed, removals, budget_states)
    return _check_fixed_adversary(g, initial, fixed, budget_states)


def _check_fixed_agents(g, initial, policy, removals, budget_states) -> SolverResult:
    Node = tuple  # (AgentState, memory)
    start: Node = (initial, policy.initial_memory(g, initial))
    succs: dict[Node, list[Node]] = {}
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        state, mem = node
        if state.config().is_solved():
            succs[node] = []
            continue
        if len(seen) > budget_states:
            raise BudgetExceeded("undecided: budget (model check exploration)")
        out = []
        for removed in removals:
            surviving = g.without(removed)
            targets, mem2 = policy.decide(surviving, state, mem)
            from .engine import step

            nxt_state, _ = step(g, state, removed, targets)
            nxt = (nxt_state, mem2)
            out.append(nxt)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
        succs[node] = out

    # Agents (fixed) win iff every adversary play reaches the goal.
    win: dict[Node, int | float] = {}
    for node in succs:
        if node[0].config().is_solved():
            win[node] = 0
    changed = True
    while changed:
        changed = False
        for node, out in succs.items():
            if node in win:
                continue
            vals = [win.get(t) for t in out]
            if all(v is not None for v in vals):
                win[node] = 1 + max(vals)  # adversary maximizes rounds
                changed = True
    if start in win:
        return SolverResult("agents", win[start], len(seen))
    return SolverResult("adversary", INFINITE, len(seen))


def _check_fixed_adversary(g, initial, policy, budget_states) -> SolverResult:
    start = (initial, policy.initial_memory(g, initial))
    succs: dict[tuple, list[tuple]] = {}
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        state, mem = node
        if state.config().is_solved():
            succs[node] = []
            continue
        if len(seen) > budget_states:
            raise BudgetExceeded("undecided: budget (model check exploration)")
        removed, mem2 = policy.decide(g, state, mem)
        adj = g.without(removed).adjacency()
        opts = [(p,) + adj[p] for p in state.positions]
        out = []
        for targets in product(*opts):
            new_cls, _ = _convert(targets, state.is_source)
            nxt = (AgentState(tuple(targets), new_cls), mem2)
            out.append(nxt)
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
        succs[node] = sorted(
            set(out), key=lambda t: (t[0].positions, t[0].is_source)
        )

    # Agents (optimal) win iff some play reaches the goal.
    dist: dict[tuple, int] = {}
    for node in succs:
        if node[0].config().is_solved():
            dist[node] = 0
    changed = True
    while changed:
        changed = False
        for node, out in succs.items():
            if node in dist:
                continue
            vals = [dist[t] for t in out if t in dist]
            if vals:
                dist[node] = 1 + min(vals)
                changed = True
    if start in dist:
        return SolverResult("agents", dist[start], len(seen))
    return SolverResult("adversary", INFINITE, len(seen))
