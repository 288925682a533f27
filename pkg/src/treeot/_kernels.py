"""Hot annealing kernel, JIT-compiled unless disabled by environment flag.

Set ``TREEOT_NUMBA=0`` to run the identical function bodies as plain Python
over numpy arrays; traces are bit-identical between the two paths because the
code and the random streams are shared.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _numba_requested() -> bool:
    return os.environ.get("TREEOT_NUMBA", "1").strip().lower() not in ("0", "false", "off")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit

        _jit = njit(cache=True)
        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        _jit = lambda f: f
else:
    _jit = lambda f: f


def numba_enabled() -> bool:
    """Whether the kernels below run JIT-compiled."""
    return NUMBA_ENABLED


@_jit
def recompute_cumulative(parent, xi_node):
    """Fresh subtree sums of xi_node for the tree given by parent links."""
    n = parent.shape[0]
    pending = np.zeros(n, dtype=np.int64)
    for v in range(n):
        p = parent[v]
        if p >= 0:
            pending[p] += 1
    out = xi_node.copy()
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for v in range(n):
        if pending[v] == 0:
            queue[tail] = v
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        p = parent[v]
        if p >= 0:
            out[p] += out[v]
            pending[p] -= 1
            if pending[p] == 0:
                queue[tail] = p
                tail += 1
    return out


@_jit
def tree_cost(parent, wpar, xi_cum):
    """Sum of w(x, parent) * |cumulative imbalance| over non-root vertices."""
    total = 0.0
    for v in range(parent.shape[0]):
        if parent[v] >= 0:
            total += wpar[v] * abs(xi_cum[v])
    return total


@_jit
def anneal_chain(
    parent,
    wpar,
    xi_cum,
    root,
    indptr,
    indices,
    adj_w,
    xi_node,
    max_iters,
    beta0,
    target_accept,
    eta,
    window,
    record_every,
    recompute_every,
    target_cost,
    rng,
    best_parent,
    trace_iter,
    trace_cur,
    trace_best,
    trace_beta,
    trace_acc,
):
    """Run one annealing chain over rooted spanning trees, in place.

    Per iteration: draw a graph-neighbour of the root as candidate root, score
    the edge swap by the cycle-restricted cost difference, accept with
    probability min(1, exp(beta * H)), and adapt beta multiplicatively towards
    the target acceptance rate once the window has filled. Returns
    (best_cost, current_cost, root, best_root, records, iters_done, max_drift).
    """
    n = parent.shape[0]
    current = tree_cost(parent, wpar, xi_cum)
    best = current
    best_root = root
    best_parent[:] = parent

    bits = np.zeros(window, dtype=np.int64)
    bits_sum = 0
    bits_seen = 0
    beta = beta0
    max_drift = 0.0

    records = 0
    trace_iter[records] = 0
    trace_cur[records] = current
    trace_best[records] = best
    trace_beta[records] = beta
    trace_acc[records] = 0.0
    records += 1

    iters_done = 0
    have_target = not math.isnan(target_cost)
    if have_target and best <= target_cost + 1e-9:
        return best, current, root, best_root, records, iters_done, max_drift

    for it in range(1, max_iters + 1):
        lo = indptr[root]
        deg = indptr[root + 1] - lo
        k = rng.integers(0, deg)
        new_root = indices[lo + k]
        w_added = adj_w[lo + k]
        u = rng.random()

        xr = xi_cum[new_root]
        h = (wpar[new_root] - w_added) * abs(xr)
        v = parent[new_root]
        while v != root:
            h += wpar[v] * (abs(xi_cum[v]) - abs(xi_cum[v] - xr))
            v = parent[v]

        accept = h >= 0.0 or u <= math.exp(beta * h)
        if accept:
            v = parent[new_root]
            while v != root:
                xi_cum[v] -= xr
                v = parent[v]
            xi_cum[root] = -xr
            xi_cum[new_root] = 0.0
            parent[root] = new_root
            wpar[root] = w_added
            parent[new_root] = -1
            wpar[new_root] = 0.0
            root = new_root
            current -= h
            if current < best:
                best = current
                best_root = root
                best_parent[:] = parent

        slot = (it - 1) % window
        if bits_seen >= window:
            bits_sum -= bits[slot]
        bits[slot] = 1 if accept else 0
        bits_sum += bits[slot]
        bits_seen += 1
        if bits_seen >= window:
            rate = bits_sum / window
            beta = beta * (1.0 + eta * (rate - target_accept))

        iters_done = it

        if recompute_every > 0 and it % recompute_every == 0:
            fresh = recompute_cumulative(parent, xi_node)
            fresh_cost = tree_cost(parent, wpar, fresh)
            drift = abs(fresh_cost - current)
            if drift > max_drift:
                max_drift = drift
            xi_cum[:] = fresh
            current = fresh_cost
            if current < best:
                best = current
                best_root = root
                best_parent[:] = parent

        stop = have_target and best <= target_cost + 1e-9
        if it % record_every == 0 or it == max_iters or stop:
            rate_now = 0.0
            if bits_seen > 0:
                seen = bits_seen if bits_seen < window else window
                rate_now = bits_sum / seen
            trace_iter[records] = it
            trace_cur[records] = current
            trace_best[records] = best
            trace_beta[records] = beta
            trace_acc[records] = rate_now
            records += 1
        if stop:
            break

    return best, current, root, best_root, records, iters_done, max_drift
