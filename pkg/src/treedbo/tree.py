"""Recursive partition of the observation set with splits on data coordinates.

Split thresholds always coincide with some point's coordinate and that point
is assigned to both children, so each child GP anchors the boundary instead
of extrapolating into the gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gp import Dataset


@dataclass
class Leaf:
    indices: np.ndarray            # dataset rows owned by this leaf
    depth: int
    ensemble: list = field(default_factory=list)  # fitted GPs, one per hyper-parameter draw


@dataclass
class Internal:
    feature: int
    threshold: float               # equals x[feature] of >= 1 point in this node
    left: "TreeNode"
    right: "TreeNode"
    indices: np.ndarray
    depth: int


TreeNode = Leaf | Internal


@dataclass
class PathInfo:
    """Leaf-to-root node list with the per-ancestor exclusion index sets.

    ``exclusions[i-1]`` holds the indices of ``nodes[i]`` absent from
    ``nodes[i-1]``; shared boundary points already owned by the lower node
    are excluded.
    """

    nodes: list
    exclusions: list


def node_uncertainty(outputs) -> float:
    """Population mean squared deviation from the node average."""
    v = np.asarray(outputs, dtype=float)
    if v.size == 0:
        raise ValueError("node uncertainty is undefined for an empty node")
    return float(np.mean((v - v.mean()) ** 2))


def split_gain(parent_outputs, left_outputs, right_outputs) -> float:
    """Uncertainty reduction, children weighted by their own sizes.

    The shared boundary point is expected in both children, so the child
    sizes may sum to one more than the parent's.
    """
    n = len(parent_outputs)
    return (node_uncertainty(parent_outputs)
            - (len(left_outputs) / n) * node_uncertainty(left_outputs)
            - (len(right_outputs) / n) * node_uncertainty(right_outputs))


def _best_split(X, y, idx, min_leaf):
    """Exhaustive (feature, data-coordinate) search maximising the gain.

    Returns (gain, feature, threshold) or None.  Ties resolve to the lowest
    feature index, then the lowest threshold, by strict-improvement scanning.
    """
    n = idx.size
    yv = y[idx]
    parent_u = node_uncertainty(yv)
    if parent_u <= 0.0:
        return None
    best = None
    for h in range(X.shape[1]):
        xs = X[idx, h]
        order = np.argsort(xs, kind="stable")
        xs_s = xs[order]
        ys = yv[order]
        cum = np.cumsum(ys)
        cumsq = np.cumsum(ys * ys)
        # last occurrence of each distinct value = candidate threshold position
        last = np.nonzero(np.append(xs_s[1:] != xs_s[:-1], True))[0]
        first = np.append(0, last[:-1] + 1)
        n_left = last + 1                      # points with x <= tau
        n_right = n - first                    # points with x >= tau
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not np.any(ok):
            continue
        s_l = cum[last]
        q_l = cumsq[last]
        s_r = cum[-1] - np.where(first > 0, cum[first - 1], 0.0)
        q_r = cumsq[-1] - np.where(first > 0, cumsq[first - 1], 0.0)
        u_l = np.maximum(q_l / n_left - (s_l / n_left) ** 2, 0.0)
        u_r = np.maximum(q_r / n_right - (s_r / n_right) ** 2, 0.0)
        gains = parent_u - (n_left / n) * u_l - (n_right / n) * u_r
        gains[~ok] = -np.inf
        k = int(np.argmax(gains))              # first max -> lowest threshold
        if gains[k] > 1e-12 * parent_u and (best is None or gains[k] > best[0]):
            best = (float(gains[k]), h, float(xs_s[last[k]]))
    return best


def _grow(data: Dataset, idx, depth, min_leaf):
    if idx.size < 2 * min_leaf - 1:
        return Leaf(indices=idx, depth=depth)
    found = _best_split(data.X, data.y, idx, min_leaf)
    if found is None:
        return Leaf(indices=idx, depth=depth)
    _, h, tau = found
    xs = data.X[idx, h]
    left_idx = idx[xs <= tau]
    right_idx = idx[xs >= tau]                 # boundary points go to both
    return Internal(feature=h, threshold=tau,
                    left=_grow(data, left_idx, depth + 1, min_leaf),
                    right=_grow(data, right_idx, depth + 1, min_leaf),
                    indices=idx, depth=depth)


def build_tree(data: Dataset, min_leaf: int = 5) -> TreeNode:
    """Grow the partition greedily; pure function of (data, min_leaf)."""
    if data.n == 0:
        raise ValueError("cannot build a tree on an empty dataset")
    if min_leaf < 2:
        raise ValueError("min_leaf must be at least 2")
    return _grow(data, np.arange(data.n), 0, min_leaf)


def single_leaf_tree(data: Dataset) -> Leaf:
    """Depth-0 tree holding every observation (the untreed variants)."""
    return Leaf(indices=np.arange(data.n), depth=0)


def route(tree: TreeNode, x) -> Leaf:
    """Descend to the unique leaf for x; boundary coordinates route left."""
    node = tree
    x = np.asarray(x, dtype=float)
    while isinstance(node, Internal):
        node = node.right if x[node.feature] > node.threshold else node.left
    return node


def assign_leaves(tree: TreeNode, X):
    """Vectorised routing: list of (leaf, row-mask) pairs covering all rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = []

    def descend(node, mask):
        if isinstance(node, Leaf):
            out.append((node, mask))
            return
        go_right = X[:, node.feature] > node.threshold
        descend(node.left, mask & ~go_right)
        descend(node.right, mask & go_right)

    descend(tree, np.ones(X.shape[0], dtype=bool))
    return out


def leaves(tree: TreeNode) -> list:
    """All leaves in deterministic left-to-right order."""
    if isinstance(tree, Leaf):
        return [tree]
    return leaves(tree.left) + leaves(tree.right)


def leaf_paths(tree: TreeNode) -> list:
    """One PathInfo per leaf: node list from the leaf up to the root plus the
    per-ancestor exclusion sets (ancestor indices minus the child's)."""
    out = []

    def descend(node, ancestors):
        chain = [node] + ancestors
        if isinstance(node, Leaf):
            exclusions = []
            for lower, upper in zip(chain[:-1], chain[1:]):
                exclusions.append(np.setdiff1d(upper.indices, lower.indices))
            out.append(PathInfo(nodes=chain, exclusions=exclusions))
            return
        descend(node.left, chain)
        descend(node.right, chain)

    descend(tree, [])
    return out
