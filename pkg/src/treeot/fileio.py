"""File formats.

Graph (JSON):      {"n": N, "edges": [[u, v, w], ...], "labels": [...]?}
Tree (JSON):       {"root": r, "edges": [[u, v], ...]} - weights live in the graph
Measure:           JSON array of N nonnegative reals, or CSV with one value per line
Plan (CSV):        header "x,y,mass", triplets sorted lexicographically
Potential (CSV):   header "vertex,u"
Trace (CSV):       header "iter,current_cost,best_cost,beta,accept_rate"

Numbers are written in shortest round-trip decimal form and files end with a
newline. Parsers reject trailing garbage.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .annealing import TraceRecord
from .errors import BadDimensionsError, FormatError, NegativePixelError
from .graphs import WeightedGraph, build_graph
from .transport import Potential, TransportPlan, as_measure
from .trees import RootedTree, root_tree


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _parse_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_graph(path, g: WeightedGraph, labels: list[str] | None = None) -> None:
    doc = {"n": g.n, "edges": [[u, v, w] for u, v, w in g.edges]}
    if labels is not None:
        doc["labels"] = list(labels)
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_graph(path) -> WeightedGraph:
    doc = _parse_json(path)
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise FormatError(f"{path}: expected an object with 'n' and 'edges'")
    labels = doc.get("labels")
    if labels is not None and len(labels) != doc["n"]:
        raise BadDimensionsError(f"{path}: {len(labels)} labels for {doc['n']} vertices")
    return build_graph(doc["n"], doc["edges"])


def save_tree(path, t: RootedTree) -> None:
    edges = sorted((int(u), int(v)) for u, v in t.edge_set())
    doc = {"root": int(t.root), "edges": [[u, v] for u, v in edges]}
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_tree(path, g: WeightedGraph) -> RootedTree:
    doc = _parse_json(path)
    if not isinstance(doc, dict) or "root" not in doc or "edges" not in doc:
        raise FormatError(f"{path}: expected an object with 'root' and 'edges'")
    return root_tree(g, [(int(u), int(v)) for u, v in doc["edges"]], int(doc["root"]))


def save_measure(path, values) -> None:
    path = Path(path)
    values = [float(v) for v in values]
    if path.suffix == ".csv":
        path.write_text("".join(f"{v!r}\n" for v in values), encoding="utf-8")
    else:
        path.write_text(json.dumps(values) + "\n", encoding="utf-8")


def load_measure_raw(path, n: int) -> np.ndarray:
    """Values as stored, without measure validation (for checkers)."""
    path = Path(path)
    if path.suffix == ".csv":
        lines = [ln for ln in _read_text(path).splitlines() if ln.strip()]
        try:
            values = [float(ln) for ln in lines]
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    else:
        values = _parse_json(path)
        if not isinstance(values, list):
            raise FormatError(f"{path}: expected a JSON array")
    if len(values) != n:
        raise BadDimensionsError(f"{path}: {len(values)} values for {n} vertices")
    return np.asarray(values, dtype=np.float64)


def load_measure(path, n: int, normalize: bool = True) -> np.ndarray:
    return as_measure(load_measure_raw(path, n), n, normalize=normalize)


def save_plan(path, plan: TransportPlan) -> None:
    lines = ["x,y,mass"]
    lines.extend(f"{x},{y},{m!r}" for x, y, m in plan.entries())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_plan_triplets(path) -> list[tuple[int, int, float]]:
    """Raw triplets, unvalidated, so checkers can report on bad plans."""
    lines = _read_text(path).splitlines()
    if not lines or lines[0].strip() != "x,y,mass":
        raise FormatError(f"{path}: missing 'x,y,mass' header")
    out = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: bad row {ln!r}")
        try:
            out.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return out


def save_potential(path, u: Potential) -> None:
    lines = ["vertex,u"]
    lines.extend(f"{v},{float(val)!r}" for v, val in enumerate(u.values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_potential(path, n: int) -> Potential:
    lines = _read_text(path).splitlines()
    if not lines or lines[0].strip() != "vertex,u":
        raise FormatError(f"{path}: missing 'vertex,u' header")
    values = np.zeros(n)
    seen = np.zeros(n, dtype=bool)
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 2:
            raise FormatError(f"{path}: bad row {ln!r}")
        v = int(parts[0])
        if not (0 <= v < n) or seen[v]:
            raise FormatError(f"{path}: bad or repeated vertex {v}")
        values[v] = float(parts[1])
        seen[v] = True
    if not seen.all():
        raise BadDimensionsError(f"{path}: missing vertices")
    anchored = np.flatnonzero(np.abs(values) == 0.0)
    anchor = int(anchored[0]) if anchored.size else 0
    values.setflags(write=False)
    return Potential(values=values, anchor=anchor)


def save_trace(path, trace: list[TraceRecord]) -> None:
    lines = ["iter,current_cost,best_cost,beta,accept_rate"]
    lines.extend(
        f"{r.iter},{r.current_cost!r},{r.best_cost!r},{r.beta!r},{r.accept_rate!r}"
        for r in trace
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_image_csv(path, p: int) -> np.ndarray:
    """p x p nonnegative pixel grid from comma-separated rows."""
    rows = []
    for ln in _read_text(path).splitlines():
        if not ln.strip():
            continue
        try:
            rows.append([float(tok) for tok in ln.split(",")])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    img = np.array(rows, dtype=np.float64)
    if img.shape != (p, p):
        raise BadDimensionsError(f"{path}: expected {p}x{p}, got {img.shape}")
    if img.min(initial=0.0) < 0.0:
        raise NegativePixelError(f"{path}: negative pixel value")
    return img
