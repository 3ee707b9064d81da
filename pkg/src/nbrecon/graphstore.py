"""Graph data model, file I/O, k-hop queries, and planted-role generators.

Graphs are undirected, unweighted, with float node features and optional
integer role labels. Synthetic benchmarks decorate a cycle with repeated
small shapes (house, fan, star); role labels come from the automorphism
orbits of each standalone shape plus two cycle roles (attachment point
vs. plain cycle node).
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, GraphParseError


class Graph:
    """Immutable undirected graph with features and optional labels.

    Edges are stored canonically as (u, v) with u < v; duplicates are
    merged silently, self-loops rejected.
    """

    def __init__(self, num_nodes, edges, features=None, labels=None):
        num_nodes = int(num_nodes)
        if num_nodes < 0:
            raise ContractError("num_nodes must be non-negative")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ContractError(f"self-loop at node {u}")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ContractError(
                    f"edge ({u}, {v}) references a node outside 0..{num_nodes - 1}"
                )
            canon.add((u, v) if u < v else (v, u))
        self.num_nodes = num_nodes
        self.edges = frozenset(canon)
        if features is None:
            deg = np.zeros(num_nodes)
            for u, v in canon:
                deg[u] += 1.0
                deg[v] += 1.0
            features = deg[:, None]
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[:, None]
        if features.shape[0] != num_nodes:
            raise DimensionError(
                f"features have {features.shape[0]} rows for {num_nodes} nodes"
            )
        self.features = features
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (num_nodes,):
                raise DimensionError(
                    f"labels have shape {labels.shape} for {num_nodes} nodes"
                )
        self.labels = labels
        self._index = None

    def edge_array(self):
        """Edges as a sorted (E, 2) int64 array."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(sorted(self.edges), dtype=np.int64)

    def index(self):
        if self._index is None:
            self._index = NeighborIndex(self)
        return self._index


class NeighborIndex:
    """Per-node sorted adjacency lists plus degrees."""

    def __init__(self, g: Graph):
        nbrs = [[] for _ in range(g.num_nodes)]
        for u, v in g.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.adj = [np.array(sorted(a), dtype=np.int64) for a in nbrs]
        self.degrees = np.array([len(a) for a in self.adj], dtype=np.int64)


def k_hop_neighborhood(g: Graph, v: int, k: int):
    """All nodes u != v with shortest-path distance(v, u) <= k."""
    if not (0 <= v < g.num_nodes):
        raise IndexError(f"node {v} out of range for {g.num_nodes} nodes")
    if k < 0:
        raise ContractError("k must be non-negative")
    idx = g.index()
    seen = {v}
    frontier = [v]
    out = set()
    for _ in range(k):
        nxt = []
        for u in frontier:
            for w in idx.adj[u]:
                w = int(w)
                if w not in seen:
                    seen.add(w)
                    out.add(w)
                    nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    return out


# ---------------------------------------------------------------------------
# file formats: edge list "u v" per line; features/labels headerless CSV


def load_graph(edge_path, feature_path=None, label_path=None) -> Graph:
    """Read a graph from an edge-list file plus optional CSV side files.

    Without a feature file, the single feature column is the node degree.
    """
    edges = []
    max_id = -1
    with open(edge_path) as fh:
        for ln, line in enumerate(fh, 1):
            toks = line.split()
            if not toks:
                continue
            if len(toks) != 2:
                raise GraphParseError(
                    f"{edge_path}:{ln}: expected two node ids, got {line.rstrip()!r}"
                )
            try:
                u, v = int(toks[0]), int(toks[1])
            except ValueError:
                raise GraphParseError(
                    f"{edge_path}:{ln}: non-integer node id in {line.rstrip()!r}"
                ) from None
            if u < 0 or v < 0:
                raise GraphParseError(f"{edge_path}:{ln}: negative node id")
            if u == v:
                raise GraphParseError(f"{edge_path}:{ln}: self-loop at node {u}")
            edges.append((u, v))
            max_id = max(max_id, u, v)
    num_nodes = max_id + 1

    features = None
    if feature_path is not None:
        rows = []
        with open(feature_path) as fh:
            for ln, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rows.append([float(t) for t in line.split(",")])
                except ValueError:
                    raise GraphParseError(
                        f"{feature_path}:{ln}: non-numeric feature value"
                    ) from None
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise GraphParseError(f"{feature_path}: ragged rows")
        if len(rows) < num_nodes:
            raise DimensionError(
                f"{feature_path}: {len(rows)} feature rows but edges reference "
                f"{num_nodes} nodes"
            )
        num_nodes = max(num_nodes, len(rows))
        features = np.array(rows, dtype=np.float64)

    labels = None
    if label_path is not None:
        vals = []
        with open(label_path) as fh:
            for ln, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    vals.append(int(line.strip()))
                except ValueError:
                    raise GraphParseError(
                        f"{label_path}:{ln}: non-integer label"
                    ) from None
        if len(vals) != num_nodes:
            raise DimensionError(
                f"{label_path}: {len(vals)} labels for {num_nodes} nodes"
            )
        labels = np.array(vals, dtype=np.int64)

    return Graph(num_nodes, edges, features=features, labels=labels)


def write_graph(g: Graph, out_dir):
    """Write edges.txt + features.csv (+ labels.csv when present)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "edges.txt"), "w") as fh:
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")
    # %.17g round-trips float64 exactly
    np.savetxt(
        os.path.join(out_dir, "features.csv"), g.features, delimiter=",", fmt="%.17g"
    )
    write_labels(g, out_dir)


def write_labels(g: Graph, out_dir):
    """Write labels.csv; a graph without labels emits nothing."""
    if g.labels is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "labels.csv"), "w") as fh:
        for lab in g.labels:
            fh.write(f"{int(lab)}\n")


# ---------------------------------------------------------------------------
# planted structural equivalence benchmarks


@dataclass(frozen=True)
class ShapeSpec:
    """Recipe for one synthetic graph: shapes planted along a cycle.

    size is the leaf count for fan/star; the house is always 5 nodes.
    kind 'varied' cycles house -> fan -> star across placements.
    """

    kind: str
    count: int
    cycle_len: int
    size: int = 4
    perturb: int = 0
    seed: int = 0

    def validate(self):
        if self.kind not in ("house", "fan", "star", "varied"):
            raise ContractError(f"unknown shape kind {self.kind!r}")
        if self.count < 0 or self.perturb < 0:
            raise ContractError("counts must be non-negative")
        if self.cycle_len < 3:
            raise ContractError("cycle length must be at least 3")
        if self.cycle_len < self.count:
            raise ContractError("cycle length must be >= number of placements")
        if self.kind in ("fan", "star", "varied") and self.size < 2:
            raise ContractError("fan/star need at least 2 leaves")


def orbit_labels(num_nodes, edges):
    """Automorphism-orbit label per node via color refinement.

    Iterated (own color, sorted neighbor colors) refinement reaches a
    fixed point that equals the true orbit partition on the tree-like
    shapes used here; tests check this against a brute-force
    permutation search. Labels are numbered by first appearance.
    """
    adj = [[] for _ in range(num_nodes)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    colors = [len(a) for a in adj]
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in adj[v])))
                for v in range(num_nodes)]
        remap = {}
        nxt = []
        for s in sigs:
            if s not in remap:
                remap[s] = len(remap)
            nxt.append(remap[s])
        if nxt == colors:
            break
        colors = nxt
    return colors


def _house():
    # square 0-1-3-2-0 with roof 4 across the 2-3 edge; node 0 is a base
    # corner and carries the attachment
    edges = [(0, 1), (1, 3), (2, 3), (0, 2), (2, 4), (3, 4)]
    return 5, edges


def _fan(leaves):
    # hub 0 plus a path of leaves, every leaf tied to the hub
    edges = [(0, i) for i in range(1, leaves + 1)]
    edges += [(i, i + 1) for i in range(1, leaves)]
    return leaves + 1, edges


def _star(leaves):
    edges = [(0, i) for i in range(1, leaves + 1)]
    return leaves + 1, edges


_BUILDERS = {"house": _house, "fan": _fan, "star": _star}


def _shape(kind, size):
    if kind == "house":
        n, edges = _house()
    else:
        n, edges = _BUILDERS[kind](size)
    return n, edges, orbit_labels(n, edges)


def generate_planted(spec: ShapeSpec) -> Graph:
    """Cycle + evenly spaced shapes, degree features, structural labels.

    Labels: 0 = plain cycle node, 1 = attachment cycle node, then one id
    per (shape kind, within-shape orbit) in house/fan/star block order.
    Perturbation applies `perturb` events, each a fair coin between
    adding a uniformly random absent edge and deleting a random present
    edge; labels stay those of the clean construction.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    edges = [(i, (i + 1) % spec.cycle_len) for i in range(spec.cycle_len)]
    labels = [0] * spec.cycle_len
    num_nodes = spec.cycle_len

    kinds = ("house", "fan", "star") if spec.kind == "varied" else (spec.kind,)
    offsets = {}
    base = 2
    for kind in ("house", "fan", "star"):
        if kind in kinds:
            n, eds, orbs = _shape(kind, spec.size)
            offsets[kind] = base
            base += max(orbs) + 1

    for j in range(spec.count):
        kind = kinds[j % len(kinds)]
        pos = j * spec.cycle_len // spec.count
        labels[pos] = 1
        n, eds, orbs = _shape(kind, spec.size)
        edges += [(num_nodes + a, num_nodes + b) for a, b in eds]
        edges.append((num_nodes, pos))  # node 0 of every shape attaches
        labels += [offsets[kind] + o for o in orbs]
        num_nodes += n

    present = {(min(u, v), max(u, v)) for u, v in edges}
    for _ in range(spec.perturb):
        if rng.random() < 0.5 and len(present) < num_nodes * (num_nodes - 1) // 2:
            while True:
                u, v = rng.integers(0, num_nodes, size=2)
                u, v = int(u), int(v)
                if u == v:
                    continue
                e = (u, v) if u < v else (v, u)
                if e not in present:
                    present.add(e)
                    break
        elif present:
            ordered = sorted(present)
            present.remove(ordered[int(rng.integers(len(ordered)))])

    return Graph(num_nodes, present, labels=np.array(labels, dtype=np.int64))
