"""Neighbor sampling, full-loss assembly, and the training loop.

Per node the loss is

    lam_s ||h_v(0) - psi_s(h_v(k))||^2
  + lam_d (d_v - psi_d(h_v(k)))^2
  + sum_{i<k} W2^2(true hop-i neighbor reps, generated hop-i reps)

with the distribution term computed by the configured surrogate. One
neighbor sample and one set of Gaussian draws are taken per node per
epoch and shared across hops. Every epoch trains on all nodes at once;
the per-node cost matrices are stacked and solved in a single batch.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import assignment
from . import autodiff as ad
from . import decoder as dec
from . import encoder as enc
from . import otloss
from .errors import ContractError, NumericError
from .graphstore import Graph

log = logging.getLogger(__name__)

SURROGATES = ("hungarian", "chamfer", "sinkhorn")


@dataclass
class TrainConfig:
    k: int = 3
    m: int = 64
    q: int = 5
    lam_s: float = 1e-2
    lam_d: float = 1e-2
    lr: float = 5e-3
    epochs: int = 300
    seed: int = 0
    surrogate: str = "hungarian"
    sinkhorn_eps: float = 0.1
    sinkhorn_iters: int = 100
    no_degree: bool = False
    no_distribution: bool = False
    no_self: bool = False
    neighbor_cap: int = 10
    encoder_kind: str = "gcn"
    detach_true: bool = True
    normalize_by_q: bool = False

    def validate(self):
        if self.q < 1 or self.k < 1:
            raise ContractError("need q >= 1 and k >= 1")
        if self.lam_s < 0 or self.lam_d < 0:
            raise ContractError("lambda weights must be non-negative")
        if self.epochs < 0 or self.neighbor_cap < 1 or self.lr <= 0:
            raise ContractError("bad epochs / neighbor_cap / lr")
        if self.surrogate not in SURROGATES:
            raise ContractError(f"unknown surrogate {self.surrogate!r}")
        if self.encoder_kind not in enc.ENCODER_KINDS:
            raise ContractError(f"unknown encoder kind {self.encoder_kind!r}")
        if self.no_self and self.no_degree and self.no_distribution:
            raise ContractError("all loss terms ablated; nothing to train")


@dataclass
class EpochReport:
    epoch: int
    total: float
    self_loss: float  # unweighted sums; total applies the lambdas
    degree_loss: float
    dist_losses: list
    wall_time: float = 0.0


def sample_neighbors(g: Graph, v, q, cap, rng):
    """q neighbor ids: uniform without replacement from the capped
    neighbor pool, topped up with replacement when the pool is small."""
    adj = g.index().adj[v]
    if len(adj) == 0:
        raise ContractError(f"node {v} is isolated; nothing to sample")
    pool = adj if len(adj) <= cap else rng.choice(adj, size=cap, replace=False)
    perm = rng.permutation(pool)
    if q <= len(perm):
        return perm[:q]
    extra = rng.choice(pool, size=q - len(perm), replace=True)
    return np.concatenate([perm, extra])


@dataclass
class EpochDraws:
    """One epoch's randomness, drawn up front in node-id order so that
    ablation flags never shift the stream."""

    nbr_ids: np.ndarray  # (V, q) int64; rows of isolated nodes stay -1
    eps: np.ndarray  # (V, q, m)
    active: np.ndarray  # node ids with degree >= 1


def draw_epoch(g: Graph, cfg: TrainConfig, rng) -> EpochDraws:
    degrees = g.index().degrees
    nbr = np.full((g.num_nodes, cfg.q), -1, dtype=np.int64)
    for v in range(g.num_nodes):
        if degrees[v] > 0:
            nbr[v] = sample_neighbors(g, v, cfg.q, cfg.neighbor_cap, rng)
    eps = rng.standard_normal((g.num_nodes, cfg.q, cfg.m))
    return EpochDraws(nbr_ids=nbr, eps=eps, active=np.flatnonzero(degrees > 0))


def _pair_loss(true_set, gen_set, cfg: TrainConfig):
    if cfg.surrogate == "hungarian":
        loss = otloss.wasserstein_loss(true_set, gen_set, detach_true=cfg.detach_true)
    elif cfg.surrogate == "chamfer":
        loss = otloss.chamfer_loss(true_set, gen_set, detach_true=cfg.detach_true)
    else:
        loss = otloss.sinkhorn_loss(
            true_set,
            gen_set,
            cfg.sinkhorn_eps,
            cfg.sinkhorn_iters,
            detach_true=cfg.detach_true,
        )
    if cfg.normalize_by_q:
        loss = loss * ad.constant(1.0 / cfg.q)
    return loss


def node_loss(g: Graph, stack, dparams, v, cfg: TrainConfig, rng=None, draws=None):
    """Differentiable per-node loss; isolated nodes keep only the
    self-feature term. Pass either an rng or precomputed EpochDraws."""
    cfg.validate()
    h = ad.gather_rows(stack[-1], np.array([v]))
    zero = ad.constant(0.0)

    total = zero
    if not cfg.no_self:
        target = ad.detach(ad.gather_rows(stack[0], np.array([v])))
        s = ad.sq_norm(dec.decode_self(dparams, h) - target)
        total = total + s * ad.constant(cfg.lam_s)

    d_v = int(g.index().degrees[v])
    if d_v == 0:
        return total

    if not cfg.no_degree:
        d_hat = dec.decode_degree(dparams, h)
        total = total + ad.sq_norm(d_hat - ad.constant(float(d_v))) * ad.constant(
            cfg.lam_d
        )

    if not cfg.no_distribution:
        if draws is not None:
            ids = draws.nbr_ids[v]
            eps = draws.eps[v]
        else:
            ids = sample_neighbors(g, v, cfg.q, cfg.neighbor_cap, rng)
            eps = rng.standard_normal((cfg.q, cfg.m))
        xi = dec.reparameterize(dparams, h, cfg.q, eps=eps)
        for i in range(cfg.k):
            true_set = ad.gather_rows(stack[i], ids)
            gen_set = dparams.fnn_p[i](xi)
            total = total + _pair_loss(true_set, gen_set, cfg)
    return total


# ---------------------------------------------------------------------------
# vectorized full-graph loss


def _batched_costs(true_data, gen_data, n, q):
    t = true_data.reshape(n, q, -1)
    s = gen_data.reshape(n, q, -1)
    tt = (t * t).sum(axis=2)
    ss = (s * s).sum(axis=2)
    cross = np.einsum("nqm,npm->nqp", t, s)
    return np.maximum(tt[:, :, None] + ss[:, None, :] - 2.0 * cross, 0.0)


def _batched_dist_loss(true_set, gen_set, n, q, cfg: TrainConfig):
    """Distribution loss summed over n stacked q-row blocks."""
    costs = _batched_costs(true_set.data, gen_set.data, n, q)
    if not np.all(np.isfinite(costs)):
        raise NumericError("non-finite pairwise costs in distribution term")
    t = ad.detach(true_set) if cfg.detach_true else true_set
    base = np.arange(n, dtype=np.int64)[:, None] * q

    if cfg.surrogate == "hungarian":
        perms, _ = assignment.solve_batch(costs)
        loss = ad.sq_norm(t - ad.gather_rows(gen_set, (base + perms).reshape(-1)))
    elif cfg.surrogate == "chamfer":
        fwd = (base + costs.argmin(axis=2)).reshape(-1)
        bwd = (base + costs.argmin(axis=1)).reshape(-1)
        loss = ad.sq_norm(t - ad.gather_rows(gen_set, fwd)) + ad.sq_norm(
            ad.gather_rows(t, bwd) - gen_set
        )
    else:
        plans = otloss.sinkhorn_plan(costs, cfg.sinkhorn_eps, cfg.sinkhorn_iters)
        row_marg = plans.sum(axis=2).reshape(-1)
        col_marg = plans.sum(axis=1).reshape(-1)
        loss = ad.tsum(ad.constant(row_marg) * ad.tsum(t * t, axis=1))
        loss = loss + ad.tsum(ad.constant(col_marg) * ad.tsum(gen_set * gen_set, axis=1))
        # cross term sum_n sum_ij T_ij <t_i, g_j>, assembled hop by hop:
        # (T g) rows come from q weighted gathers of the stacked g block
        flat = np.repeat(base, q)  # row (n, i) -> n*q
        mix = None
        for j in range(q):
            w = ad.constant(plans[:, :, j].reshape(-1, 1))
            g_j = ad.gather_rows(gen_set, flat + j)
            term = w * g_j
            mix = term if mix is None else mix + term
        loss = loss - ad.tsum(t * mix) * ad.constant(2.0)

    if cfg.normalize_by_q:
        loss = loss * ad.constant(1.0 / q)
    return loss


def epoch_loss(g: Graph, stack, dparams, cfg: TrainConfig, draws: EpochDraws):
    """Total loss over all nodes plus unweighted component values."""
    n_act = len(draws.active)
    h_k = stack[-1]
    zero = ad.constant(0.0)

    self_sum = zero
    if not cfg.no_self:
        target = ad.detach(stack[0])
        self_sum = ad.sq_norm(dec.decode_self(dparams, h_k) - target)

    deg_sum = zero
    if not cfg.no_degree and n_act:
        d_hat = dec.decode_degree(dparams, h_k)
        d_true = g.index().degrees[draws.active].astype(np.float64)
        deg_sum = ad.sq_norm(
            ad.gather_rows(d_hat, draws.active) - ad.constant(d_true[:, None])
        )

    dist_sums = []
    if not cfg.no_distribution and n_act:
        rep = np.repeat(draws.active, cfg.q)
        mu, logvar = dec.gaussian_heads(dparams, h_k)
        std = ad.exp(logvar * ad.constant(0.5))
        eps = draws.eps[draws.active].reshape(n_act * cfg.q, cfg.m)
        xi = ad.gather_rows(mu, rep) + ad.gather_rows(std, rep) * ad.constant(eps)
        nbr_flat = draws.nbr_ids[draws.active].reshape(-1)
        for i in range(cfg.k):
            true_set = ad.gather_rows(stack[i], nbr_flat)
            gen_set = dparams.fnn_p[i](xi)
            dist_sums.append(_batched_dist_loss(true_set, gen_set, n_act, cfg.q, cfg))

    total = self_sum * ad.constant(cfg.lam_s) + deg_sum * ad.constant(cfg.lam_d)
    for d in dist_sums:
        total = total + d
    components = {
        "self": float(self_sum.data),
        "degree": float(deg_sum.data),
        "dist": [float(d.data) for d in dist_sums],
    }
    return total, components


def init_params(g: Graph, cfg: TrainConfig, rng):
    eparams = enc.init_encoder_params(
        rng, g.features.shape[1], cfg.m, cfg.k, kind=cfg.encoder_kind
    )
    dparams = dec.init_decoder_params(rng, cfg.m, cfg.k)
    return eparams, dparams


def train(g: Graph, cfg: TrainConfig):
    """Full-graph training; returns (encoder params, decoder params,
    per-epoch reports). Deterministic for a given config seed."""
    cfg.validate()
    if g.num_nodes == 0:
        raise ContractError("cannot train on an empty graph")
    rng = np.random.default_rng(cfg.seed)
    eparams, dparams = init_params(g, cfg, rng)

    isolated = int((g.index().degrees == 0).sum())
    if isolated:
        log.warning(
            "%d isolated node(s): degree/distribution terms skipped for them",
            isolated,
        )
    has_edges = isolated < g.num_nodes
    if not has_edges and cfg.no_self:
        raise ContractError("edgeless graph with no_self leaves the loss empty")

    # only heads that appear in the loss receive gradients
    params = list(eparams.tensors())
    if not cfg.no_self:
        params += dparams.fnn_s.tensors()
    if has_edges and not cfg.no_degree:
        params += dparams.fnn_d.tensors()
    if has_edges and not cfg.no_distribution:
        params += dparams.fnn_mu.tensors() + dparams.fnn_sigma.tensors()
        for f in dparams.fnn_p:
            params += f.tensors()
    opt = ad.Adam(params, lr=cfg.lr)
    reports = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        ad.new_tape()
        stack = enc.propagate(g, eparams, enc.init_h0(g, eparams))
        draws = draw_epoch(g, cfg, rng)
        try:
            total, comps = epoch_loss(g, stack, dparams, cfg, draws)
        except NumericError as e:
            raise NumericError(f"non-finite loss at epoch {epoch}: {e}") from None
        if not np.isfinite(total.data):
            raise NumericError(
                f"non-finite loss at epoch {epoch}: self={comps['self']}, "
                f"degree={comps['degree']}, dist={comps['dist']}"
            )
        ad.backward(total)
        opt.step()
        reports.append(
            EpochReport(
                epoch=epoch,
                total=float(total.data),
                self_loss=comps["self"],
                degree_loss=comps["degree"],
                dist_losses=comps["dist"],
                wall_time=time.perf_counter() - t0,
            )
        )
    return eparams, dparams, reports


def embed(g: Graph, eparams) -> np.ndarray:
    """Deterministic H^(k): the final-layer embedding matrix."""
    ad.new_tape()
    stack = enc.encode(g, eparams)
    out = stack[-1].data.copy()
    ad.new_tape()  # drop the forward graph; embedding is plain data
    return out
