"""Optimal transport with a tree ground metric.

Closed forms driven by the cumulative imbalance of mu - nu over subtrees:
distance, dual potential, Beckmann flow, the sign-alternating closed-form plan,
and a dynamic-programming construction of an optimal plan for arbitrary
measure pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConditionViolatedError,
    MassMismatchError,
    NegativeMassError,
    NotImprovableError,
    VertexRangeError,
)
from .trees import RootedTree, subtree_aggregate, tree_path

#: Tolerance on total measure mass.
MASS_TOL = 1e-9
#: Residues below this are treated as exact zeros inside the plan construction.
ZERO_SNAP = 1e-14


def as_measure(values, n: int | None = None, normalize: bool = False) -> np.ndarray:
    """Validate (and optionally normalize) a nonnegative unit-mass vector."""
    mu = np.asarray(values, dtype=np.float64).copy()
    if mu.ndim != 1 or (n is not None and mu.shape[0] != n):
        raise VertexRangeError(f"expected a flat vector of length {n}, got shape {mu.shape}")
    if mu.min(initial=0.0) < 0.0:
        raise NegativeMassError("measure has a negative entry")
    total = mu.sum()
    if normalize:
        if total <= 0.0:
            raise MassMismatchError("cannot normalize a zero-mass vector")
        if abs(total - 1.0) > MASS_TOL:  # keep valid measures bit-stable
            mu /= total
    elif abs(total - 1.0) > MASS_TOL:
        raise MassMismatchError(f"measure mass {total!r} is not 1")
    return mu


def imbalance(mu, nu) -> np.ndarray:
    """Signed excess mu - nu; enforces the zero-sum invariant."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise VertexRangeError("measures live on different vertex sets")
    xi = mu - nu
    if abs(xi.sum()) > MASS_TOL:
        raise MassMismatchError(f"imbalance sums to {xi.sum()!r}, not 0")
    return xi


def cumulative_imbalance(t: RootedTree, xi) -> np.ndarray:
    """Subtree sums of the imbalance: out[x] = sum of xi over the subtree at x."""
    return subtree_aggregate(t, xi)


def tree_k_distance(t: RootedTree, mu, nu) -> float:
    """Transport cost between mu and nu under the tree metric.

    Equals the sum over non-root vertices of w(x, parent) * |cumulative
    imbalance at x|; invariant under the choice of root.
    """
    xi_cum = cumulative_imbalance(t, imbalance(mu, nu))
    mask = t.parent >= 0
    return float(np.sum(t.weight_to_parent[mask] * np.abs(xi_cum[mask])))


def tree_potential(t: RootedTree, mu, nu, sign_at_zero: int = +1) -> "Potential":
    """Dual potential for the tree metric, zero at the root.

    Walking root-to-leaves, each vertex adds w(x, parent) * sign(cumulative
    imbalance at x) to its parent's value. ``sign_at_zero`` (+1 or -1) resolves
    vertices with exactly zero cumulative imbalance.
    """
    if sign_at_zero not in (+1, -1):
        raise ValueError("sign_at_zero must be +1 or -1")
    xi_cum = cumulative_imbalance(t, imbalance(mu, nu))
    u = np.zeros(t.n)
    for v in t.order[::-1]:
        p = t.parent[v]
        if p < 0:
            continue
        s = sign_at_zero if xi_cum[v] == 0.0 else (1.0 if xi_cum[v] > 0.0 else -1.0)
        u[v] = u[p] + t.weight_to_parent[v] * s
    u.setflags(write=False)
    return Potential(values=u, anchor=t.root)


@dataclass(frozen=True)
class Potential:
    """Vertex potential with a distinguished anchor where it vanishes."""

    values: np.ndarray
    anchor: int

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Flow:
    """Arc flow on a rooted tree: per non-root vertex, mass moving towards the
    root (``up``) and away from it (``down``) across the parent edge."""

    up: np.ndarray
    down: np.ndarray

    @property
    def n(self) -> int:
        return self.up.shape[0]

    def divergence(self, t: RootedTree) -> np.ndarray:
        """Net outflow per vertex: matches mu - nu for an admissible flow."""
        div = self.up - self.down
        for v in range(self.n):
            p = t.parent[v]
            if p >= 0:
                div[p] += self.down[v] - self.up[v]
        return div


def beckmann_flow(t: RootedTree, mu, nu) -> Flow:
    """Optimal flow on the tree: positive/negative parts of the cumulative imbalance."""
    xi_cum = cumulative_imbalance(t, imbalance(mu, nu))
    up = np.where(t.parent >= 0, np.maximum(xi_cum, 0.0), 0.0)
    down = np.where(t.parent >= 0, np.maximum(-xi_cum, 0.0), 0.0)
    up.setflags(write=False)
    down.setflags(write=False)
    return Flow(up=up, down=down)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: parallel arrays of (row, col, mass) with mass > 0,
    sorted lexicographically."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    @property
    def support_size(self) -> int:
        return self.rows.shape[0]

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.n)
        np.add.at(out, self.rows, self.mass)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(self.n)
        np.add.at(out, self.cols, self.mass)
        return out

    def diagonal(self) -> np.ndarray:
        out = np.zeros(self.n)
        on_diag = self.rows == self.cols
        np.add.at(out, self.rows[on_diag], self.mass[on_diag])
        return out

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.rows, self.cols), self.mass)
        return out

    def entries(self) -> list[tuple[int, int, float]]:
        return [(int(x), int(y), float(m)) for x, y, m in zip(self.rows, self.cols, self.mass)]


def make_plan(n: int, triplets) -> TransportPlan:
    """Build a plan from (x, y, mass) triplets: coalesces duplicates, drops
    zeros, rejects negatives, sorts lexicographically."""
    acc: dict[tuple[int, int], float] = {}
    for x, y, m in triplets:
        x, y, m = int(x), int(y), float(m)
        if not (0 <= x < n and 0 <= y < n):
            raise VertexRangeError(f"plan entry ({x},{y}) out of range")
        if m < 0.0:
            raise NegativeMassError(f"plan entry ({x},{y}) has negative mass {m}")
        if m > 0.0:
            acc[(x, y)] = acc.get((x, y), 0.0) + m
    keys = sorted(acc)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    mass = np.array([acc[k] for k in keys], dtype=np.float64)
    for arr in (rows, cols, mass):
        arr.setflags(write=False)
    return TransportPlan(n=n, rows=rows, cols=cols, mass=mass)


def plan_cost(plan: TransportPlan, dist: np.ndarray) -> float:
    """Total cost of a plan under a dense distance matrix."""
    if dist.shape != (plan.n, plan.n):
        raise VertexRangeError("distance matrix shape does not match plan")
    return float(np.sum(plan.mass * dist[plan.rows, plan.cols]))


def check_alternating_condition(t: RootedTree, mu, nu) -> bool:
    """True iff the cumulative imbalance strictly alternates sign between every
    non-root vertex and each of its children."""
    xi_cum = cumulative_imbalance(t, imbalance(mu, nu))
    for x in range(t.n):
        if x == t.root:
            continue
        for y in t.children[x]:
            if xi_cum[x] * xi_cum[y] >= 0.0:
                return False
    return True


def closed_form_plan(t: RootedTree, mu, nu) -> TransportPlan:
    """Optimal plan in closed form, valid only under the sign-alternating
    condition: each non-root vertex exchanges its cumulative imbalance with its
    parent and the remainder stays on the diagonal."""
    if not check_alternating_condition(t, mu, nu):
        raise ConditionViolatedError("cumulative imbalance does not alternate signs")
    mu = np.asarray(mu, dtype=np.float64)
    xi_cum = cumulative_imbalance(t, imbalance(mu, nu))
    triplets: list[tuple[int, int, float]] = []
    for x in range(t.n):
        p = t.parent[x]
        if p >= 0:
            if xi_cum[x] > 0.0:
                triplets.append((x, int(p), float(xi_cum[x])))
            elif xi_cum[x] < 0.0:
                triplets.append((int(p), x, float(-xi_cum[x])))
        stay = mu[x] - max(xi_cum[x], 0.0) - sum(
            max(-xi_cum[c], 0.0) for c in t.children[x]
        )
        if stay < -MASS_TOL:
            raise ConditionViolatedError(f"negative diagonal mass {stay} at vertex {x}")
        if stay > 0.0:
            triplets.append((x, x, float(stay)))
    return make_plan(t.n, triplets)


def dp_transport_plan(t: RootedTree, mu, nu, zero_tol: float = ZERO_SNAP) -> TransportPlan:
    """Optimal plan under the tree metric for arbitrary measures.

    After pinning the diagonal to min(mu, nu), leaves with leftover supply or
    demand are matched one at a time: climb from the leaf while the cumulative
    imbalance keeps growing in the leaf's direction, then descend to the
    nearest (by hop count, ties to the smallest id) opposite node reachable
    through edges whose cumulative imbalance has the opposite sign. The
    transferred mass is capped so no cumulative imbalance changes sign, hence
    every transfer zeroes a residual and the loop terminates. Residues with
    magnitude below ``zero_tol`` count as zero.
    """
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    n = t.n
    imbalance(mu, nu)  # validates shapes and the zero-sum invariant
    # exact unit sums so supply and demand cancel to rounding noise, not to the
    # 1e-9 ingestion tolerance, which would strand a leaf without a match
    xi = mu / mu.sum() - nu / nu.sum()
    xi[np.abs(xi) <= zero_tol] = 0.0
    xi_cum = subtree_aggregate(t, xi)
    xi_cum[np.abs(xi_cum) <= zero_tol] = 0.0
    xi_cum[t.root] = 0.0

    diag = np.minimum(mu, nu)
    offdiag: dict[tuple[int, int], float] = {}

    alive = np.ones(n, dtype=bool)
    active_children = np.array([len(t.children[v]) for v in range(n)], dtype=np.int64)

    def prune(v: int) -> None:
        # discard balanced leaves so their parents become visible leaves
        while v >= 0 and alive[v] and active_children[v] == 0 and xi[v] == 0.0:
            alive[v] = False
            v = int(t.parent[v])
            if v >= 0:
                active_children[v] -= 1

    for v in range(n):
        prune(v)

    max_steps = 4 * n + 16
    for _ in range(max_steps):
        x = -1
        for v in range(n):
            if alive[v] and active_children[v] == 0 and xi[v] != 0.0:
                x = v
                break
        if x < 0:
            break
        s = 1.0 if xi[x] > 0.0 else -1.0
        m = abs(xi[x])

        # climb while nothing of the opposite sign branches off: stop where the
        # cumulative imbalance vanishes or where the step difference (what the
        # rest of the subtree at u contributes) carries the opposite sign
        below = x
        u = int(t.parent[x])
        while u != t.root and xi_cum[u] != 0.0:
            diff = xi_cum[u] - xi_cum[below]
            if abs(diff) > zero_tol and _sgn(diff) == -s:
                break
            m = min(m, abs(xi_cum[u]))
            below = u
            u = int(t.parent[u])

        y = _find_match(t, u, xi, xi_cum, alive, s)
        # cap by the descent chain and the target's residual
        v = y
        while v != u:
            m = min(m, abs(xi_cum[v]))
            v = int(t.parent[v])
        m = min(m, abs(xi[y]))

        key = (x, y) if s > 0 else (y, x)
        assert key not in offdiag, "off-diagonal entry written twice"
        offdiag[key] = m
        xi[x] -= s * m
        xi[y] += s * m
        for v in (x, y):
            if abs(xi[v]) <= zero_tol:
                xi[v] = 0.0
        v = x
        while v != u:
            xi_cum[v] -= s * m
            if abs(xi_cum[v]) <= zero_tol:
                xi_cum[v] = 0.0
            v = int(t.parent[v])
        v = y
        while v != u:
            xi_cum[v] += s * m
            if abs(xi_cum[v]) <= zero_tol:
                xi_cum[v] = 0.0
            v = int(t.parent[v])
        prune(x)
        prune(y)
    else:
        raise RuntimeError("plan construction did not terminate")

    triplets = [(x, y, m) for (x, y), m in offdiag.items()]
    triplets.extend((v, v, float(diag[v])) for v in range(n) if diag[v] > 0.0)
    return make_plan(n, triplets)


def _sgn(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _find_match(t: RootedTree, u: int, xi, xi_cum, alive, s: float) -> int:
    """Nearest vertex below ``u`` (by hop count, ties to smallest id) with
    residual sign opposite to ``s``, reachable through children whose
    cumulative imbalance has sign -s."""
    frontier = [u]
    seen = {u}
    while frontier:
        hits = [v for v in frontier if xi[v] != 0.0 and _sgn(xi[v]) == -s]
        if hits:
            return min(hits)
        nxt = []
        for v in frontier:
            for c in t.children[v]:
                if alive[c] and c not in seen and _sgn(xi_cum[c]) == -s:
                    seen.add(c)
                    nxt.append(c)
        frontier = sorted(nxt)
    raise RuntimeError(f"no matching vertex below {u}; residuals are inconsistent")


def plan_to_flow(plan: TransportPlan, t: RootedTree) -> Flow:
    """Total plan mass crossing each directed tree edge, accumulated over the
    tree paths of all support pairs."""
    up = np.zeros(t.n)
    down = np.zeros(t.n)
    for x, y, m in zip(plan.rows, plan.cols, plan.mass):
        if x == y:
            continue
        for a, b, direction in tree_path(t, int(x), int(y)):
            if direction == "up":
                up[a] += m
            else:
                down[b] += m
    return Flow(up=up, down=down)


def canonicalize_diagonal(plan: TransportPlan, mu, nu, dist: np.ndarray) -> TransportPlan:
    """Rewrite an optimal plan so every diagonal entry reaches min(mu, nu).

    Repeatedly reroutes a donor pair gamma(x, y1) and gamma(y2, x) into
    gamma(x, x) and gamma(y2, y1); each step strictly increases the diagonal
    and, on an optimal input, keeps the cost unchanged.
    """
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    dense = plan.to_dense()
    target = np.minimum(mu, nu)
    for x in range(plan.n):
        while dense[x, x] < target[x] - MASS_TOL:
            row = [y for y in range(plan.n) if y != x and dense[x, y] > 0.0]
            col = [y for y in range(plan.n) if y != x and dense[y, x] > 0.0]
            if not row or not col:
                raise NotImprovableError(
                    f"vertex {x} lacks a donor pair; the plan is not admissible-optimal"
                )
            y1, y2 = row[0], col[0]
            m = min(dense[x, y1], dense[y2, x], target[x] - dense[x, x])
            dense[x, y1] -= m
            dense[y2, x] -= m
            dense[x, x] += m
            dense[y2, y1] += m
    rows, cols = np.nonzero(dense > 0.0)
    return make_plan(plan.n, zip(rows, cols, dense[rows, cols]))


def line_w1(points, mu, nu) -> float:
    """Wasserstein-1 distance on the real line via the CDF formula:
    sum of gap lengths times |F_mu - F_nu|."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise VertexRangeError("points must be a flat, non-empty array")
    if np.any(np.diff(x) <= 0.0):
        raise VertexRangeError("points must be strictly increasing")
    xi = imbalance(mu, nu)
    cdf_gap = np.cumsum(xi)[:-1]
    return float(np.sum(np.diff(x) * np.abs(cdf_gap)))
