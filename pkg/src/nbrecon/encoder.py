"""Message-passing encoder: projected pair-normed input, k GNN layers.

The forward pass keeps every intermediate layer because the decoders
reconstruct neighbor representations hop by hop: encode() returns the
full stack H^(0)..H^(k), not just the final embedding.
"""

import numpy as np

from . import autodiff as ad
from .errors import ContractError, DegenerateInputError, DimensionError
from .graphstore import Graph

ENCODER_KINDS = ("gcn", "sum")


class EncoderParams:
    """Projection matrix plus k layer weights/biases, all m wide."""

    def __init__(self, w, layer_ws, layer_bs, kind="gcn"):
        if kind not in ENCODER_KINDS:
            raise ContractError(f"unknown encoder kind {kind!r}")
        if len(layer_ws) != len(layer_bs) or not layer_ws:
            raise ContractError("need one (weight, bias) pair per layer, k >= 1")
        self.w = w
        self.layer_ws = list(layer_ws)
        self.layer_bs = list(layer_bs)
        self.kind = kind

    @property
    def k(self):
        return len(self.layer_ws)

    @property
    def m(self):
        return self.w.data.shape[1]

    def tensors(self):
        return [self.w] + self.layer_ws + self.layer_bs


def init_encoder_params(rng, feat_dim, m, k, kind="gcn") -> EncoderParams:
    w = ad.parameter(ad.glorot_uniform(rng, feat_dim, m))
    ws = [ad.parameter(ad.glorot_uniform(rng, m, m)) for _ in range(k)]
    bs = [ad.parameter(np.zeros(m)) for _ in range(k)]
    return EncoderParams(w, ws, bs, kind=kind)


def pair_norm(x):
    """Center columns, then scale so the mean squared row norm is 1.

    Accepts and returns a Tensor; the scale is sqrt(|V|) over the
    Frobenius norm of the centered matrix.
    """
    if not isinstance(x, ad.Tensor):
        x = ad.constant(np.asarray(x, dtype=np.float64))
    n = x.data.shape[0]
    if n < 2:
        raise ContractError("pair_norm needs at least 2 rows")
    mean = ad.tsum(x, axis=0, keepdims=True) * ad.constant(1.0 / n)
    centered = x - mean
    fro2 = ad.sq_norm(centered)
    if fro2.data == 0.0:
        raise DegenerateInputError("all rows identical: pair_norm scale undefined")
    return centered * ad.sqrt(ad.constant(float(n)) / fro2)


def init_h0(g: Graph, params: EncoderParams):
    """H^(0) = pair_norm(X W)."""
    f = g.features.shape[1]
    if params.w.data.shape[0] != f:
        raise DimensionError(
            f"feature width {f} does not match projection {params.w.data.shape}"
        )
    return pair_norm(ad.constant(g.features) @ params.w)


def _edge_endpoints(g: Graph):
    e = g.edge_array()
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    return src, dst


def propagate(g: Graph, params: EncoderParams, h0):
    """Run the k layers from a given H^(0); returns [H^(0), ..., H^(k)].

    gcn kind: h_v = act(W_i (sum_{u in N_v + v} h_u / sqrt((d_v+1)(d_u+1))) + b_i)
    sum kind: same with unnormalized sums. The last layer skips relu.
    """
    n, m = g.num_nodes, params.m
    src, dst = _edge_endpoints(g)
    if params.kind == "gcn":
        deg = g.index().degrees.astype(np.float64)
        scale = ad.constant(1.0 / np.sqrt(deg + 1.0)[:, None])
    else:
        scale = None

    stack = [h0]
    h = h0
    for i, (w, b) in enumerate(zip(params.layer_ws, params.layer_bs)):
        hs = h * scale if scale is not None else h
        agg = ad.scatter_add_rows(
            ad.constant(np.zeros((n, m))), dst, ad.gather_rows(hs, src)
        )
        agg = agg + hs  # self-loop term
        if scale is not None:
            agg = agg * scale
        z = agg @ w + b
        h = z if i == params.k - 1 else ad.relu(z)
        stack.append(h)
    return stack


def encode(g: Graph, params: EncoderParams):
    """Full forward pass: projection, pair-norm, k propagation layers."""
    return propagate(g, params, init_h0(g, params))
