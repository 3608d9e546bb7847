"""Finite multi-period trees carrying the dollar/euro measure pair exactly.

Every node holds an exchange-rate state on [0, inf] and each branch carries a
pair of rational one-step probabilities (q, q_hat), one per measure.  The two
measures are tied together branch by branch through the density relation

    q * x_child = q_hat * x_node      (finite children),

which makes the change-of-numeraire identities structural: branches into an
exploded state are invisible to the dollar measure (q = 0) and branches into a
devalued state are invisible to the euro measure (q_hat = 0).  The modeler
supplies q_hat on nonzero children and q on zero children; q on finite
children is derived.  All arithmetic is exact (fractions.Fraction).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from ..errors import MeasurabilityError, NormalizationError, StructureError
from ..extended import ExtendedValue

ONE = Fraction(1)


@dataclass(frozen=True)
class Branch:
    child: str
    q: Fraction        # one-step probability under the dollar measure
    q_hat: Fraction    # one-step probability under the euro measure


@dataclass
class TreeNode:
    id: str
    time_index: int
    x: ExtendedValue
    branches: tuple[Branch, ...] = ()
    parent: str | None = None

    @property
    def is_terminal(self) -> bool:
        return not self.branches

    @property
    def is_absorbing_state(self) -> bool:
        return not self.x.is_finite


@dataclass
class DualTree:
    periods: int
    x0: Fraction
    root: str
    nodes: dict[str, TreeNode]
    # exact path probabilities of the cylinder at each node, per measure
    prob_dollar: dict[str, Fraction] = field(default_factory=dict)
    prob_euro: dict[str, Fraction] = field(default_factory=dict)

    def node(self, node_id: str) -> TreeNode:
        return self.nodes[node_id]

    def children(self, node_id: str) -> list[TreeNode]:
        return [self.nodes[b.child] for b in self.nodes[node_id].branches]

    def nodes_at(self, t: int) -> list[TreeNode]:
        return [n for n in self.nodes.values() if n.time_index == t]

    def leaves(self) -> list[TreeNode]:
        return self.nodes_at(self.periods)

    def path_to(self, node_id: str) -> list[str]:
        path = [node_id]
        while self.nodes[path[-1]].parent is not None:
            path.append(self.nodes[path[-1]].parent)
        return path[::-1]

    def descend_leaves(self, node_id: str) -> list[TreeNode]:
        out = []
        stack = [node_id]
        while stack:
            n = self.nodes[stack.pop()]
            if n.is_terminal:
                out.append(n)
            else:
                stack.extend(b.child for b in n.branches)
        return out

# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _as_mass(m) -> Fraction:
    f = Fraction(m)
    if f < 0:
        raise NormalizationError(f"negative branch mass {f}")
    return f


def _as_x(x) -> ExtendedValue:
    if isinstance(x, ExtendedValue):
        return x
    if isinstance(x, str):
        return ExtendedValue.parse(x)
    return ExtendedValue.of(Fraction(x))


def build_dual_tree(doc: Mapping) -> DualTree:
    """Build and validate a DualTree from a node-list document.

    Document keys: "x0" (positive rational), "periods" (int >= 1), "root"
    (node id, optional when the first node is the root) and "nodes", a list of
    {"id", "x", "branches": [[child_id, mass], ...]}.  The mass of a branch is
    q_hat when the child state is nonzero and q when the child state is zero.
    Absorbing states must not declare branches; their absorption chains up to
    the horizon are generated automatically.
    """
    try:
        x0 = Fraction(doc["x0"])
        periods = int(doc["periods"])
        raw = list(doc["nodes"])
        by_id: dict[str, Mapping] = {}
        for entry in raw:
            nid = str(entry["id"])
            if nid in by_id:
                raise StructureError(f"duplicate node id {nid!r}")
            by_id[nid] = entry
    except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
        raise StructureError(f"malformed tree document: {exc!r}") from exc
    if x0 <= 0:
        raise StructureError("x0 must be positive")
    if periods < 1:
        raise StructureError("periods must be >= 1")
    if not raw:
        raise StructureError("empty node list")
    root_id = str(doc.get("root", raw[0]["id"]))
    if root_id not in by_id:
        raise StructureError(f"root {root_id!r} not among nodes")

    nodes: dict[str, TreeNode] = {}
    seen: set[str] = set()

    def build(nid: str, t: int, parent: str | None) -> None:
        if nid in seen:
            raise StructureError(f"node {nid!r} reached twice; specs must be trees")
        seen.add(nid)
        entry = by_id.get(nid)
        if entry is None:
            raise StructureError(f"branch references unknown node {nid!r}")
        x = _as_x(entry["x"])
        declared = entry.get("branches") or []
        if not x.is_finite:
            if declared:
                raise StructureError(
                    f"node {nid!r} is absorbing ({x}); it must not declare branches")
            nodes[nid] = TreeNode(nid, t, x, (), parent)
            _extend_absorbing(nodes, nid, t, x, periods)
            return
        if t == periods:
            if declared:
                raise StructureError(f"terminal node {nid!r} declares branches")
            nodes[nid] = TreeNode(nid, t, x, (), parent)
            return
        if not declared:
            raise StructureError(
                f"finite node {nid!r} at period {t} < {periods} has no branches")
        branches = []
        q_hat_sum = Fraction(0)
        q_sum = Fraction(0)
        for child_id, mass in declared:
            child_id = str(child_id)
            child_entry = by_id.get(child_id)
            if child_entry is None:
                raise StructureError(f"branch references unknown node {child_id!r}")
            cx = _as_x(child_entry["x"])
            m = _as_mass(mass)
            if cx.is_zero:
                q, q_hat = m, Fraction(0)
            elif cx.is_infinite:
                q, q_hat = Fraction(0), m
            else:
                # density relation: q * x_child = q_hat * x_node
                q, q_hat = m * x.fraction / cx.fraction, m
            q_sum += q
            q_hat_sum += q_hat
            branches.append(Branch(child_id, q, q_hat))
        if q_hat_sum != 1:
            raise NormalizationError(
                f"node {nid!r}: euro-measure masses sum to {q_hat_sum}, not 1")
        if q_sum != 1:
            raise NormalizationError(
                f"node {nid!r}: derived dollar-measure masses sum to {q_sum}, not 1 "
                "(martingale constraint violated)")
        nodes[nid] = TreeNode(nid, t, x, tuple(branches), parent)
        for b in branches:
            build(b.child, t + 1, nid)

    try:
        build(root_id, 0, None)
    except (KeyError, TypeError, ValueError, ArithmeticError) as exc:
        raise StructureError(f"malformed tree document: {exc!r}") from exc
    orphans = set(by_id) - seen
    if orphans:
        raise StructureError(f"nodes unreachable from the root: {sorted(orphans)}")
    root_x = nodes[root_id].x
    if not (root_x.is_finite and root_x.fraction == x0):
        raise StructureError(f"root state {root_x} disagrees with x0 = {x0}")

    tree = DualTree(periods, x0, root_id, nodes)
    _compute_path_probs(tree)
    verify_tree_invariants(tree)
    return tree


def _extend_absorbing(nodes: dict[str, TreeNode], nid: str, t: int,
                      x: ExtendedValue, periods: int) -> None:
    """Append the forced self-chain of an absorbed state down to the horizon."""
    prev = nid
    for k in range(t + 1, periods + 1):
        cid = f"{nid}~{k}"
        if cid in nodes:
            raise StructureError(f"absorption id collision at {cid!r}")
        nodes[prev] = TreeNode(
            nodes[prev].id, nodes[prev].time_index, x,
            (Branch(cid, ONE, ONE),), nodes[prev].parent)
        nodes[cid] = TreeNode(cid, k, x, (), prev)
        prev = cid


def _compute_path_probs(tree: DualTree) -> None:
    tree.prob_dollar[tree.root] = Fraction(1)
    tree.prob_euro[tree.root] = Fraction(1)
    stack = [tree.root]
    while stack:
        nid = stack.pop()
        node = tree.nodes[nid]
        for b in node.branches:
            tree.prob_dollar[b.child] = tree.prob_dollar[nid] * b.q
            tree.prob_euro[b.child] = tree.prob_euro[nid] * b.q_hat
            stack.append(b.child)


def verify_tree_invariants(tree: DualTree) -> None:
    """Assert every structural invariant of the measure pair, exactly."""
    for node in tree.nodes.values():
        if node.is_terminal:
            if node.time_index != tree.periods:
                raise StructureError(
                    f"terminal node {node.id!r} at period {node.time_index}")
            continue
        qs = sum((b.q for b in node.branches), Fraction(0))
        q_hats = sum((b.q_hat for b in node.branches), Fraction(0))
        if qs != 1 or q_hats != 1:
            raise NormalizationError(
                f"node {node.id!r}: branch masses sum to ({qs}, {q_hats})")
        if node.is_absorbing_state:
            if len(node.branches) != 1:
                raise StructureError(f"absorbing node {node.id!r} must self-chain")
            child = tree.nodes[node.branches[0].child]
            if child.x != node.x:
                raise StructureError(f"absorbing node {node.id!r} changes state")
            continue
        x = node.x.fraction
        for b in node.branches:
            cx = tree.nodes[b.child].x
            if cx.is_infinite and b.q != 0:
                raise StructureError(f"explosion branch from {node.id!r} has q != 0")
            if cx.is_zero and b.q_hat != 0:
                raise StructureError(f"devaluation branch from {node.id!r} has q_hat != 0")
            if cx.is_finite and b.q * cx.fraction != b.q_hat * x:
                raise StructureError(
                    f"density relation fails on branch {node.id!r} -> {b.child!r}")
    # paths touching an absorbed state are null for the blind measure
    for leaf in tree.leaves():
        path = tree.path_to(leaf.id)
        if any(tree.nodes[i].x.is_infinite for i in path):
            if tree.prob_dollar[leaf.id] != 0:
                raise StructureError(f"dollar measure sees explosion at {leaf.id!r}")
        if any(tree.nodes[i].x.is_zero for i in path):
            if tree.prob_euro[leaf.id] != 0:
                raise StructureError(f"euro measure sees devaluation at {leaf.id!r}")


# ---------------------------------------------------------------------------
# supermartingale defects (one-step duality identities)
# ---------------------------------------------------------------------------

def one_step_defects(tree: DualTree, node_id: str) -> tuple[Fraction, Fraction]:
    """(dollar defect of X, euro defect of 1/X) over one step from a finite node.

    The dollar defect x - E[x_child] equals x times the explosion mass seen
    only by the euro measure, and dually for 1/x; both are returned exactly.
    """
    node = tree.nodes[node_id]
    if not node.x.is_finite or node.is_terminal:
        raise StructureError("defects are defined at interior finite nodes")
    x = node.x.fraction
    e_x = sum((b.q * tree.nodes[b.child].x.fraction
               for b in node.branches if tree.nodes[b.child].x.is_finite),
              Fraction(0))
    e_inv = sum((b.q_hat / tree.nodes[b.child].x.fraction
                 for b in node.branches if tree.nodes[b.child].x.is_finite),
                Fraction(0))
    return x - e_x, 1 / x - e_inv


def explosion_mass(tree: DualTree, node_id: str) -> Fraction:
    node = tree.nodes[node_id]
    return sum((b.q_hat for b in node.branches
                if tree.nodes[b.child].x.is_infinite), Fraction(0))


def devaluation_mass(tree: DualTree, node_id: str) -> Fraction:
    node = tree.nodes[node_id]
    return sum((b.q for b in node.branches
                if tree.nodes[b.child].x.is_zero), Fraction(0))


# ---------------------------------------------------------------------------
# stopping rules and events
# ---------------------------------------------------------------------------

def validate_stopping_rule(tree: DualTree, rule: Iterable[str]) -> frozenset[str]:
    """A stopping rule is an antichain of nodes met exactly once by every path."""
    stop = frozenset(rule)
    unknown = stop - tree.nodes.keys()
    if unknown:
        raise MeasurabilityError(f"unknown nodes in stopping rule: {sorted(unknown)}")
    for leaf in tree.leaves():
        hits = [i for i in tree.path_to(leaf.id) if i in stop]
        if len(hits) != 1:
            raise MeasurabilityError(
                f"path to {leaf.id!r} crosses the stopping rule {len(hits)} times")
    return stop


def period_rule(tree: DualTree, t: int) -> frozenset[str]:
    """Deterministic rule: stop at period t."""
    if not 0 <= t <= tree.periods:
        raise MeasurabilityError(f"period {t} outside [0, {tree.periods}]")
    return frozenset(n.id for n in tree.nodes_at(t))


def first_hit_rule(tree: DualTree, predicate) -> frozenset[str]:
    """Stop at the first node satisfying predicate(node), else at the leaf."""
    stop: set[str] = set()

    def walk(nid: str) -> None:
        node = tree.nodes[nid]
        if predicate(node) or node.is_terminal:
            stop.add(nid)
            return
        for b in node.branches:
            walk(b.child)

    walk(tree.root)
    return frozenset(stop)


def validate_event(tree: DualTree, rule: frozenset[str],
                   event: Iterable[str]) -> frozenset[str]:
    ev = frozenset(event)
    if not ev <= rule:
        raise MeasurabilityError("event is not determined at the stopping rule")
    return ev


def rule_precedes(tree: DualTree, rho: frozenset[str], tau: frozenset[str]) -> None:
    """Check rho <= tau path by path (rho node is an ancestor-or-self of tau's)."""
    for leaf in tree.leaves():
        path = tree.path_to(leaf.id)
        i_rho = next(k for k, n in enumerate(path) if n in rho)
        i_tau = next(k for k, n in enumerate(path) if n in tau)
        if i_rho > i_tau:
            raise MeasurabilityError("rho does not precede tau on every path")


def stopped_node(tree: DualTree, rule: frozenset[str], leaf_id: str) -> str:
    """The node at which the path to leaf_id is stopped."""
    for nid in tree.path_to(leaf_id):
        if nid in rule:
            return nid
    raise MeasurabilityError(f"path to {leaf_id!r} never stopped")


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def tree_to_doc(tree: DualTree) -> dict:
    """Canonical document form; generated absorption chains are omitted and
    re-created on load."""
    nodes = []
    for node in sorted(tree.nodes.values(), key=lambda n: (n.time_index, n.id)):
        if node.parent is not None and not tree.nodes[node.parent].x.is_finite:
            continue
        entry: dict = {"id": node.id, "x": str(node.x)}
        if node.branches and node.x.is_finite:
            out = []
            for b in node.branches:
                cx = tree.nodes[b.child].x
                mass = b.q if cx.is_zero else b.q_hat
                out.append([b.child, str(mass)])
            entry["branches"] = out
        nodes.append(entry)
    return {"x0": str(tree.x0), "periods": tree.periods,
            "root": tree.root, "nodes": nodes}


def load_tree(path) -> DualTree:
    with open(path) as fh:
        return build_dual_tree(json.load(fh))


def dump_tree(tree: DualTree, path) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_doc(tree), fh, indent=2)


def two_period_example() -> DualTree:
    """The hand-checkable two-period tree: x0 = 1, X halves or explodes.

    Under the dollar measure the rate moves deterministically 1 -> 1/2 -> 1/4;
    under the euro measure each step explodes with probability 1/2.
    """
    return build_dual_tree({
        "x0": "1", "periods": 2, "root": "r",
        "nodes": [
            {"id": "r", "x": "1",
             "branches": [["up", "1/2"], ["dn", "1/2"]]},
            {"id": "up", "x": "inf"},
            {"id": "dn", "x": "1/2",
             "branches": [["dn_up", "1/2"], ["dn_dn", "1/2"]]},
            {"id": "dn_up", "x": "inf"},
            {"id": "dn_dn", "x": "1/4"},
        ],
    })
