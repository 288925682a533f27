"""Rooted spanning trees: orientation, rerooting, subtree sums, paths, random trees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EdgeNotInGraphError, HasCycleError, NotSpanningError, VertexRangeError
from .graphs import WeightedGraph


@dataclass(frozen=True)
class RootedTree:
    """Spanning tree with edges oriented towards a distinguished root.

    ``parent[v]`` is the unique out-neighbour of ``v`` (-1 at the root) and
    ``weight_to_parent[v]`` the weight of that edge. ``order`` lists vertices
    leaves-first, so a single forward pass aggregates child values into parents.
    ``depth[v]`` counts edges from ``v`` to the root.
    """

    root: int
    parent: np.ndarray
    weight_to_parent: np.ndarray
    children: tuple[tuple[int, ...], ...]
    order: np.ndarray
    depth: np.ndarray

    @property
    def n(self) -> int:
        return self.parent.shape[0]

    def edge_set(self) -> set[tuple[int, int]]:
        """Undirected edges as canonical (min, max) pairs."""
        return {
            (v, p) if v < p else (p, v)
            for v, p in enumerate(self.parent)
            if p >= 0
        }


def _from_parent_array(root: int, parent: np.ndarray, weight_to_parent: np.ndarray) -> RootedTree:
    n = parent.shape[0]
    kids: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        p = parent[v]
        if p >= 0:
            kids[p].append(v)
    depth = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    stack = [root]
    pos = n
    while stack:
        v = stack.pop()
        pos -= 1
        order[pos] = v
        for c in kids[v]:
            depth[c] = depth[v] + 1
            stack.append(c)
    if pos != 0:
        raise NotSpanningError("parent links do not reach every vertex")
    parent = parent.copy()
    weight_to_parent = weight_to_parent.copy()
    for arr in (parent, weight_to_parent, order, depth):
        arr.setflags(write=False)
    return RootedTree(
        root=int(root),
        parent=parent,
        weight_to_parent=weight_to_parent,
        children=tuple(tuple(k) for k in kids),
        order=order,
        depth=depth,
    )


def root_tree(g: WeightedGraph, tree_edges, root: int) -> RootedTree:
    """Orient a spanning edge set of ``g`` towards ``root``.

    Edge weights are copied from the graph. Raises ``HasCycleError`` when the
    edge count exceeds n-1 or a cycle is found, ``NotSpanningError`` when some
    vertex is unreachable, ``EdgeNotInGraphError`` for foreign edges.
    """
    n = g.n
    if not (0 <= root < n):
        raise VertexRangeError(f"root {root} out of range")
    pairs = [(int(u), int(v)) for u, v in tree_edges]
    if len(pairs) > n - 1:
        raise HasCycleError(f"{len(pairs)} edges on {n} vertices cannot be acyclic")
    if len(pairs) < n - 1:
        raise NotSpanningError(f"{len(pairs)} edges cannot span {n} vertices")
    adjacency: list[list[int]] = [[] for _ in range(n)]
    seen_pairs = set()
    for u, v in pairs:
        g.edge_weight(u, v)  # raises EdgeNotInGraphError (also rejects u == v)
        key = (u, v) if u < v else (v, u)
        if key in seen_pairs:
            raise HasCycleError(f"edge {{{u},{v}}} repeated")
        seen_pairs.add(key)
        adjacency[u].append(v)
        adjacency[v].append(u)

    parent = np.full(n, -1, dtype=np.int64)
    wpar = np.zeros(n, dtype=np.float64)
    visited = np.zeros(n, dtype=bool)
    visited[root] = True
    stack = [int(root)]
    reached = 1
    while stack:
        v = stack.pop()
        for nb in adjacency[v]:
            if nb == parent[v]:
                continue
            if visited[nb]:
                raise HasCycleError("tree edges contain a cycle")
            visited[nb] = True
            parent[nb] = v
            wpar[nb] = g.edge_weight(nb, v)
            stack.append(nb)
            reached += 1
    if reached != n:
        raise NotSpanningError("tree edges do not reach every vertex")
    return _from_parent_array(root, parent, wpar)


def reroot(t: RootedTree, new_root: int) -> RootedTree:
    """Same undirected tree, re-oriented towards ``new_root``.

    Only the parent links on the path between the two roots are reversed.
    """
    if not (0 <= new_root < t.n):
        raise VertexRangeError(f"root {new_root} out of range")
    if new_root == t.root:
        return t
    path = [int(new_root)]
    while path[-1] != t.root:
        path.append(int(t.parent[path[-1]]))
    parent = t.parent.copy()
    wpar = t.weight_to_parent.copy()
    for lower, upper in zip(path, path[1:]):
        parent[upper] = lower
        wpar[upper] = t.weight_to_parent[lower]
    parent[new_root] = -1
    wpar[new_root] = 0.0
    return _from_parent_array(new_root, parent, wpar)


def subtree_aggregate(t: RootedTree, values) -> np.ndarray:
    """For each vertex x, the sum of ``values`` over the subtree hanging at x.

    One leaves-to-root pass, O(n).
    """
    out = np.asarray(values, dtype=np.float64).copy()
    if out.shape != (t.n,):
        raise VertexRangeError(f"expected {t.n} values, got shape {out.shape}")
    for v in t.order:
        p = t.parent[v]
        if p >= 0:
            out[p] += out[v]
    return out


def tree_path(t: RootedTree, x: int, y: int) -> list[tuple[int, int, str]]:
    """Steps of the unique tree path from x to y as ``(from, to, "up"|"down")``.

    "up" steps move child -> parent until the lowest common ancestor, then
    "down" steps move parent -> child.
    """
    up_part: list[tuple[int, int, str]] = []
    down_part: list[tuple[int, int, str]] = []
    a, b = int(x), int(y)
    while t.depth[a] > t.depth[b]:
        up_part.append((a, int(t.parent[a]), "up"))
        a = int(t.parent[a])
    while t.depth[b] > t.depth[a]:
        down_part.append((int(t.parent[b]), b, "down"))
        b = int(t.parent[b])
    while a != b:
        up_part.append((a, int(t.parent[a]), "up"))
        down_part.append((int(t.parent[b]), b, "down"))
        a = int(t.parent[a])
        b = int(t.parent[b])
    return up_part + down_part[::-1]


def tree_distance(t: RootedTree, x: int, y: int) -> float:
    """Weighted length of the unique tree path between x and y."""
    total = 0.0
    a, b = int(x), int(y)
    while t.depth[a] > t.depth[b]:
        total += t.weight_to_parent[a]
        a = int(t.parent[a])
    while t.depth[b] > t.depth[a]:
        total += t.weight_to_parent[b]
        b = int(t.parent[b])
    while a != b:
        total += t.weight_to_parent[a] + t.weight_to_parent[b]
        a = int(t.parent[a])
        b = int(t.parent[b])
    return float(total)


def tree_distance_matrix(t: RootedTree) -> np.ndarray:
    """Dense ``(n, n)`` matrix of tree distances (O(n^2))."""
    n = t.n
    d = np.zeros((n, n))
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for v in range(n):
        p = t.parent[v]
        if p >= 0:
            w = float(t.weight_to_parent[v])
            adjacency[v].append((int(p), w))
            adjacency[int(p)].append((v, w))
    for s in range(n):
        row = d[s]
        stack = [s]
        seen = np.zeros(n, dtype=bool)
        seen[s] = True
        while stack:
            v = stack.pop()
            for nb, w in adjacency[v]:
                if not seen[nb]:
                    seen[nb] = True
                    row[nb] = row[v] + w
                    stack.append(nb)
    return d


def random_spanning_tree(g: WeightedGraph, rng: np.random.Generator) -> RootedTree:
    """Uniform random spanning tree via loop-erased random walks (Wilson).

    The root is drawn uniformly; walks use uniform neighbour steps, which gives
    the uniform distribution on spanning trees of the (unweighted) adjacency.
    Deterministic for a given generator state.
    """
    n = g.n
    root = int(rng.integers(0, n))
    in_tree = np.zeros(n, dtype=bool)
    in_tree[root] = True
    successor = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        if in_tree[start]:
            continue
        v = start
        while not in_tree[v]:
            nbrs = g.neighbors(v)
            v_next = int(nbrs[rng.integers(0, nbrs.shape[0])])
            successor[v] = v_next  # overwriting erases any loop through v
            v = v_next
        v = start
        while not in_tree[v]:
            in_tree[v] = True
            v = int(successor[v])
    parent = np.full(n, -1, dtype=np.int64)
    wpar = np.zeros(n, dtype=np.float64)
    for v in range(n):
        if v != root:
            parent[v] = successor[v]
            wpar[v] = g.edge_weight(v, int(successor[v]))
    return _from_parent_array(root, parent, wpar)
