"""Structural-role evaluation: clustering, label metrics, a frozen-embedding
classifier, and the generator approximation diagnostic.

Clustering is agglomerative single linkage on Euclidean distances with a
deterministic tie rule. Homogeneity/completeness follow the standard
entropy (V-measure) definitions with natural logs. The approximation
diagnostic compares generated neighbor samples against the encoder's own
hop representations under an exact minimum matching.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import assignment
from . import autodiff as ad
from . import decoder as dec
from . import encoder as enc
from .errors import ContractError, DimensionError
from .graphstore import Graph

log = logging.getLogger(__name__)


@dataclass
class ClusteringResult:
    assignments: np.ndarray  # dense ids in 0..num_clusters-1
    num_clusters: int


def _pairwise_sq(emb):
    sq = (emb * emb).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (emb @ emb.T)
    return np.maximum(d, 0.0)


def _pairwise_dist(emb, block=256):
    # direct differences: slower than the quadratic expansion but keeps
    # full precision for near-coincident points
    n = emb.shape[0]
    out = np.empty((n, n))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        diff = emb[lo:hi, None, :] - emb[None, :, :]
        out[lo:hi] = np.sqrt((diff * diff).sum(axis=2))
    return out


def agglomerative_cluster(emb: np.ndarray, num_clusters: int) -> ClusteringResult:
    """Single-linkage merge down to num_clusters. Ties on merge distance
    go to the lexicographically smallest pair of cluster representatives
    (minimum member ids). Comparisons use squared distances, which order
    identically."""
    emb = np.asarray(emb, dtype=np.float64)
    if emb.ndim != 2:
        raise DimensionError(f"embedding must be 2-d, got shape {emb.shape}")
    n = emb.shape[0]
    if not 1 <= num_clusters <= n:
        raise ContractError(f"num_clusters must be in [1, {n}], got {num_clusters}")

    d = _pairwise_sq(emb)
    np.fill_diagonal(d, np.inf)
    active = np.ones(n, dtype=bool)
    members = {i: [i] for i in range(n)}
    for _ in range(n - num_clusters):
        sub = d[np.ix_(active, active)]
        reps = np.flatnonzero(active)
        best = sub.min()
        rows, cols = np.nonzero(sub == best)
        pick = min((reps[r], reps[c]) for r, c in zip(rows, cols) if reps[r] < reps[c])
        i, j = pick
        # single linkage: new cluster distance is the elementwise min
        d[i, :] = np.minimum(d[i, :], d[j, :])
        d[:, i] = d[i, :]
        d[i, i] = np.inf
        active[j] = False
        members[i] = sorted(members[i] + members[j])
        del members[j]

    out = np.empty(n, dtype=np.int64)
    for dense, rep in enumerate(sorted(members)):
        out[members[rep]] = dense
    return ClusteringResult(assignments=out, num_clusters=num_clusters)


def _check_paired(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or b.ndim != 1 or len(a) != len(b):
        raise DimensionError(f"label arrays must be 1-d and equal length, got {a.shape} vs {b.shape}")
    if len(a) == 0:
        raise ContractError("empty label arrays")
    return a, b


def _entropy(x):
    counts = np.unique(x, return_counts=True)[1]
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def _conditional_entropy(target, given):
    # H(target | given) from the contingency table
    _, ti = np.unique(target, return_inverse=True)
    _, gi = np.unique(given, return_inverse=True)
    n = len(target)
    table = np.zeros((ti.max() + 1, gi.max() + 1))
    np.add.at(table, (ti, gi), 1.0)
    col = table.sum(axis=0)
    mask = table > 0
    joint = table[mask] / n
    cond = table[mask] / np.broadcast_to(col, table.shape)[mask]
    return float(-(joint * np.log(cond)).sum())


def homogeneity(labels, clusters) -> float:
    """1 - H(labels|clusters)/H(labels); 1.0 when labels are constant."""
    labels, clusters = _check_paired(labels, clusters)
    h = _entropy(labels)
    if h == 0.0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - _conditional_entropy(labels, clusters) / h))


def completeness(labels, clusters) -> float:
    """1 - H(clusters|labels)/H(clusters); the dual of homogeneity."""
    labels, clusters = _check_paired(labels, clusters)
    h = _entropy(clusters)
    if h == 0.0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - _conditional_entropy(clusters, labels) / h))


def silhouette(emb, clusters) -> float:
    """Mean of (b - a)/max(a, b); singletons and all-zero distances score 0."""
    emb = np.asarray(emb, dtype=np.float64)
    clusters = np.asarray(clusters)
    if emb.ndim != 2 or clusters.ndim != 1 or emb.shape[0] != len(clusters):
        raise DimensionError("embedding rows and cluster ids must align")
    ids = np.unique(clusters)
    if len(ids) < 2:
        raise ContractError("silhouette needs at least 2 clusters")

    d = _pairwise_dist(emb)
    n = emb.shape[0]
    sums = np.stack([d[:, clusters == c].sum(axis=1) for c in ids], axis=1)
    sizes = np.array([(clusters == c).sum() for c in ids])
    own = np.searchsorted(ids, clusters)

    scores = np.zeros(n)
    for v in range(n):
        size = sizes[own[v]]
        if size == 1:
            continue
        a = sums[v, own[v]] / (size - 1)
        other = [sums[v, c] / sizes[c] for c in range(len(ids)) if c != own[v]]
        b = min(other)
        m = max(a, b)
        if m > 0:
            scores[v] = (b - a) / m
    return float(scores.mean())


# ---------------------------------------------------------------------------
# frozen-embedding classifier


def _log_softmax_nll(logits, onehot):
    shift = ad.constant(logits.data.max(axis=1, keepdims=True))
    lse = ad.log(ad.tsum(ad.exp(logits - shift), axis=1, keepdims=True)) + shift
    picked = ad.tsum(logits * onehot, axis=1, keepdims=True)
    return ad.tsum(lse - picked) * ad.constant(1.0 / logits.data.shape[0])


def _split_indices(n, split, rng):
    if len(split) != 3 or abs(sum(split) - 1.0) > 1e-9 or min(split) <= 0:
        raise ContractError(f"bad split {split}")
    perm = rng.permutation(n)
    n_tr = int(n * split[0])
    n_val = int(n * split[1])
    return perm[:n_tr], perm[n_tr : n_tr + n_val], perm[n_tr + n_val :]


def classify_frozen(emb, labels, split=(0.6, 0.2, 0.2), seed=0, epochs=200, hidden=64):
    """Train a 4-layer MLP (lr 0.01) on frozen embeddings; returns test
    accuracy at the best validation epoch. Resamples the split with the
    next seed when a class is missing from the training portion."""
    emb = np.asarray(emb, dtype=np.float64)
    labels = np.asarray(labels)
    if emb.ndim != 2 or emb.shape[0] != len(labels):
        raise DimensionError("embedding rows and labels must align")
    classes, y = np.unique(labels, return_inverse=True)
    n_cls = len(classes)

    for attempt in range(25):
        rng = np.random.default_rng(seed + attempt)
        tr_idx, val_idx, te_idx = _split_indices(len(y), split, rng)
        if len(np.unique(y[tr_idx])) == n_cls and len(tr_idx) and len(te_idx):
            break
        log.warning("class missing from training split (seed %d); resampling", seed + attempt)
    else:
        raise ContractError("could not draw a training split covering every class")

    ad.new_tape()
    dims = [emb.shape[1], hidden, hidden, hidden, n_cls]
    mlp = dec.init_fnn(rng, dims)
    opt = ad.Adam(mlp.tensors(), lr=0.01)
    x_tr = ad.constant(emb[tr_idx])
    onehot = np.zeros((len(tr_idx), n_cls))
    onehot[np.arange(len(tr_idx)), y[tr_idx]] = 1.0
    onehot = ad.constant(onehot)

    def _acc(idx):
        z = emb[idx]
        for j, (w, b) in enumerate(mlp.layers):
            z = z @ w.data + b.data
            if j < len(mlp.layers) - 1:
                z = np.maximum(z, 0.0)
        return float((z.argmax(axis=1) == y[idx]).mean())

    best_val, best_test = -1.0, 0.0
    for _ in range(epochs):
        ad.new_tape()
        loss = _log_softmax_nll(mlp(x_tr), onehot)
        ad.backward(loss)
        opt.step()
        val = _acc(val_idx) if len(val_idx) else 1.0
        if val > best_val:
            best_val, best_test = val, _acc(te_idx)
    return best_test


# ---------------------------------------------------------------------------
# approximation-power diagnostic


@dataclass
class ApproxRecord:
    node: int
    x: float  # mean squared norm of generated samples (top hop)
    y: float  # total min-matching error across hops, per sample per hop


def approximation_report(
    g: Graph, eparams, dparams, cfg, quantiles=(5, 25, 50, 75, 95), stack=None
):
    """Per node: x = mean ||generated sample||^2 at the top hop, y = exact
    matching error against the encoder's hop representations summed over
    hops and normalized by q*k. Reports quantiles of y/x; x = 0 nodes and
    isolated nodes are excluded with counts. Pass a precomputed layer
    stack to score against fixed representations."""
    from . import trainer as tr

    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    ad.new_tape()
    if stack is None:
        stack = enc.encode(g, eparams)
    degrees = g.index().degrees

    records = []
    excluded_zero_x = 0
    skipped_isolated = 0
    for v in range(g.num_nodes):
        if degrees[v] == 0:
            skipped_isolated += 1
            continue
        ids = tr.sample_neighbors(g, v, cfg.q, cfg.neighbor_cap, rng)
        eps = rng.standard_normal((cfg.q, cfg.m))
        h = ad.gather_rows(stack[-1], np.array([v]))
        xi = dec.reparameterize(dparams, h, cfg.q, eps=eps)
        y_total = 0.0
        x = 0.0
        for i in range(cfg.k):
            gen = dparams.fnn_p[i](xi).data
            true = stack[i].data[ids]
            _, cost = assignment.solve(
                np.maximum(
                    (true * true).sum(1)[:, None]
                    + (gen * gen).sum(1)[None, :]
                    - 2.0 * true @ gen.T,
                    0.0,
                )
            )
            y_total += cost
            if i == cfg.k - 1:
                x = float((gen * gen).sum(1).mean())
        y = y_total / (cfg.q * cfg.k)
        records.append(ApproxRecord(node=v, x=x, y=y))
        if x == 0.0:
            excluded_zero_x += 1

    ratios = np.array([r.y / r.x for r in records if r.x > 0.0])
    if len(ratios) == 0:
        raise ContractError("no nodes with positive x; nothing to rank")
    q_vals = np.percentile(ratios, list(quantiles))
    return {
        "quantiles": {int(p): float(val) for p, val in zip(quantiles, q_vals)},
        "num_ranked": int(len(ratios)),
        "excluded_zero_x": excluded_zero_x,
        "skipped_isolated": skipped_isolated,
        "records": records,
    }


def metrics_report(emb, labels, num_clusters=None) -> dict:
    """Cluster the embedding and score it against ground-truth labels."""
    labels = np.asarray(labels)
    if num_clusters is None:
        num_clusters = len(np.unique(labels))
    result = agglomerative_cluster(emb, num_clusters)
    return {
        "num_clusters": int(result.num_clusters),
        "homogeneity": homogeneity(labels, result.assignments),
        "completeness": completeness(labels, result.assignments),
        "silhouette": silhouette(emb, result.assignments),
    }
