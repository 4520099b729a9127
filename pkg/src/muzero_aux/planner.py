"""Tree search over learned-model rollouts, and a brute-force planner.

The search only ever calls ``model.initial_inference`` and
``model.recurrent_inference``; it never touches an environment. Any object
with those two methods and an ``action_count`` attribute can be searched,
which is how the tests drive it with hand-built models.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .nn import softmax


class MinMaxStats:
    """Running bounds of every Q value seen in the current tree."""

    def __init__(self):
        self.maximum = -math.inf
        self.minimum = math.inf

    def update(self, q: float) -> None:
        if q > self.maximum:
            self.maximum = q
        if q < self.minimum:
            self.minimum = q

    def normalize(self, q: float) -> float:
        return normalize_q(self, q)


def normalize_q(minmax: MinMaxStats, q: float) -> float:
    if minmax.maximum > minmax.minimum:
        return (q - minmax.minimum) / (minmax.maximum - minmax.minimum)
    return q


class Node:
    """A tree state with per-action edge statistics.

    ``q[a]`` is the mean return backed up from the child state, and
    ``action_value[a] = reward[a] + gamma * q[a]`` is what selection compares.
    ``children[a]`` is the arena index of ``S(s, a)`` or -1 while unexpanded.
    """

    __slots__ = ("latent", "value", "prior", "visits", "q", "action_value", "reward", "children")

    def __init__(self, latent: np.ndarray, value: float, prior: np.ndarray):
        n = len(prior)
        self.latent = latent
        self.value = value
        self.prior = [float(p) for p in prior]
        self.visits = [0] * n
        self.q = [0.0] * n
        self.action_value = [0.0] * n
        self.reward = [0.0] * n
        self.children = [-1] * n

    @property
    def expanded(self) -> bool:
        return bool(self.prior)

    def visit_total(self) -> int:
        return sum(self.visits)


@dataclass
class SearchTree:
    nodes: list[Node] = field(default_factory=list)
    minmax: MinMaxStats = field(default_factory=MinMaxStats)
    # (id(node), action) -> every return backed up through that edge; only kept when tracing
    returns: dict[tuple[int, int], list[float]] | None = None

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def add(self, node: Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1


@dataclass
class SearchResult:
    policy: np.ndarray
    value: float
    visit_counts: np.ndarray
    action: int
    root_value: float
    tree: SearchTree


def select_child(node: Node, minmax: MinMaxStats, c1: float, c2: float) -> int:
    """pUCT argmax over the node's edges, lowest index winning ties.

    Edges are compared on their normalized action value; unvisited edges count as 0.
    """
    if not node.expanded:
        raise RuntimeError("select_child on an unexpanded node")
    total = sum(node.visits)
    sqrt_total = math.sqrt(total)
    explore = c1 + math.log((total + c2 + 1.0) / c2)
    best, best_score = 0, -math.inf
    for a, (p, n, q) in enumerate(zip(node.prior, node.visits, node.action_value)):
        qbar = normalize_q(minmax, q) if n > 0 else 0.0
        score = qbar + p * sqrt_total / (1 + n) * explore
        if score > best_score:
            best, best_score = a, score
    return best


def ucb_scores(node: Node, minmax: MinMaxStats, c1: float, c2: float) -> np.ndarray:
    """The per-edge scores ``select_child`` maximizes (for inspection)."""
    total = sum(node.visits)
    explore = c1 + math.log((total + c2 + 1.0) / c2)
    return np.array([
        (normalize_q(minmax, q) if n > 0 else 0.0) + p * math.sqrt(total) / (1 + n) * explore
        for p, n, q in zip(node.prior, node.visits, node.action_value)])


def expand_root(tree: SearchTree, model, observation: np.ndarray) -> Node:
    out = model.initial_inference(observation)
    root = Node(out.latent, out.value, softmax(out.policy_logits))
    tree.add(root)
    return root


def expand_node(tree: SearchTree, parent: Node, action: int, model) -> tuple[Node, float]:
    """Attach ``S(parent, action)`` to the tree using one dynamics step."""
    if parent.children[action] != -1:
        raise RuntimeError(f"edge for action {action} is already expanded")
    out = model.recurrent_inference(parent.latent, action)
    child = Node(out.latent, out.value, softmax(out.policy_logits))
    parent.children[action] = tree.add(child)
    parent.reward[action] = out.reward
    return child, out.reward


def backup(path: list[tuple[Node, int]], leaf_value: float, gamma: float,
           minmax: MinMaxStats, tree: SearchTree | None = None) -> float:
    """Propagate a leaf evaluation up ``path`` (edges from the root to the leaf).

    The edge into depth ``k`` receives ``G^k``, the discounted return from
    ``s^k`` onwards bootstrapped with the leaf value; its Q is the running mean
    of those. The min-max bounds track the action values ``R + gamma * Q``.
    Returns ``G^0``.
    """
    g = leaf_value
    for node, a in reversed(path):
        n = node.visits[a]
        node.q[a] = (n * node.q[a] + g) / (n + 1)
        node.visits[a] = n + 1
        node.action_value[a] = node.reward[a] + gamma * node.q[a]
        minmax.update(node.action_value[a])
        if tree is not None and tree.returns is not None:
            tree.returns.setdefault((id(node), a), []).append(g)
        g = node.reward[a] + gamma * g
    return g


def root_policy(visit_counts, temperature: float) -> np.ndarray:
    counts = np.asarray(visit_counts, dtype=np.float64)
    if counts.sum() < 1:
        raise RuntimeError("root policy requested before any simulation")
    if temperature == 0:
        out = np.zeros_like(counts)
        out[int(np.argmax(counts))] = 1.0
        return out
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    # counts ** (1/T) computed in log space so small T cannot overflow
    with np.errstate(divide="ignore"):
        logits = np.log(counts) / temperature
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def add_root_noise(node: Node, alpha: float, fraction: float,
                   rng: np.random.Generator) -> None:
    noise = rng.dirichlet([alpha] * len(node.prior))
    node.prior = [(1.0 - fraction) * p + fraction * n for p, n in zip(node.prior, noise)]


def run_mcts(model, root_observation: np.ndarray, num_simulations: int, gamma: float,
             c1: float = 1.25, c2: float = 19652.0,
             noise: tuple[float, float] | None = None,
             rng: np.random.Generator | None = None,
             temperature: float = 1.0, trace: bool = False) -> SearchResult:
    """Search from ``root_observation`` and pick an action.

    ``noise`` is ``(dirichlet_alpha, mixing_fraction)`` applied once at the root.
    The action is sampled from the visit-count policy at ``temperature`` (argmax
    when it is 0). With ``trace`` set, every backed-up return is logged in
    ``result.tree.returns`` keyed by ``(id(node), action)``.
    """
    if num_simulations < 1:
        raise ValueError("num_simulations must be at least 1")
    if rng is None:
        rng = np.random.default_rng()
    tree = SearchTree(returns={} if trace else None)
    root = expand_root(tree, model, root_observation)
    if noise is not None and noise[1] > 0:
        add_root_noise(root, noise[0], noise[1], rng)
    minmax = tree.minmax
    nodes = tree.nodes

    for _ in range(num_simulations):
        node = root
        path: list[tuple[Node, int]] = []
        while True:
            a = select_child(node, minmax, c1, c2)
            path.append((node, a))
            child = node.children[a]
            if child == -1:
                break
            node = nodes[child]
        leaf, _ = expand_node(tree, node, a, model)
        backup(path, leaf.value, gamma, minmax, tree)

    counts = np.array(root.visits, dtype=np.int64)
    policy = root_policy(counts, temperature)
    if temperature == 0:
        action = int(np.argmax(counts))
    else:
        action = int(rng.choice(len(policy), p=policy))
    value = float(np.dot(policy, root.action_value))
    return SearchResult(policy, value, counts, action, root.value, tree)


def exhaustive_plan(model, root_observation: np.ndarray, depth: int, gamma: float,
                    max_sequences: int = 1_000_000) -> tuple[int | None, float]:
    """Score every action sequence of length ``depth`` by its discounted model return.

    Returns the first action of the best sequence (earliest in lexicographic
    order on ties) and its estimate. ``depth == 0`` returns ``(None, v0)``.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n_actions = model.action_count
    if n_actions ** depth > max_sequences:
        raise ValueError(f"{n_actions}^{depth} sequences exceed the budget {max_sequences}")
    root = model.initial_inference(root_observation)
    if depth == 0:
        return None, root.value

    best_action, best_return = None, -math.inf
    # walk sequences in lexicographic order, caching each prefix's latent and return
    prefix_cache: dict[tuple[int, ...], tuple[np.ndarray, float, float]] = {
        (): (root.latent, 0.0, root.value)}
    for seq in itertools.product(range(n_actions), repeat=depth):
        for k in range(1, depth + 1):
            key = seq[:k]
            if key in prefix_cache:
                continue
            latent, ret, _ = prefix_cache[seq[:k - 1]]
            out = model.recurrent_inference(latent, seq[k - 1])
            prefix_cache[key] = (out.latent, ret + gamma ** (k - 1) * out.reward, out.value)
        _, ret, value = prefix_cache[seq]
        total = ret + gamma ** depth * value
        if total > best_return:
            best_action, best_return = seq[0], total
    return best_action, best_return
