"""Decoder bundle: self-feature head, degree head, neighbor generators.

Everything decodes from the final-layer embedding alone. The
distribution side is a Gaussian whose mean/log-variance heads are
shared across hops; a per-hop generator network maps reparameterized
samples xi_j to hop-i neighbor representations.

All functions take row-matrix tensors: a single node is a (1, m) slice.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractError


class FNN:
    """Dense feed-forward stack; relu on hidden layers, linear output."""

    def __init__(self, layers):
        self.layers = list(layers)  # (weight, bias) pairs

    def __call__(self, x):
        for j, (w, b) in enumerate(self.layers):
            x = x @ w + b
            if j < len(self.layers) - 1:
                x = ad.relu(x)
        return x

    def tensors(self):
        out = []
        for w, b in self.layers:
            out += [w, b]
        return out


def init_fnn(rng, dims):
    """Glorot weights / zero biases for consecutive layer widths."""
    layers = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        layers.append(
            (
                ad.parameter(ad.glorot_uniform(rng, fan_in, fan_out)),
                ad.parameter(np.zeros(fan_out)),
            )
        )
    return FNN(layers)


class DecoderParams:
    """fnn_s: m->m (2 layers); fnn_d: m->1 (2 layers, exp on top);
    fnn_mu / fnn_sigma: m->m (1 layer, shared across hops);
    fnn_p[i]: m->m (2 layers), one generator per hop 0..k-1."""

    def __init__(self, fnn_s, fnn_d, fnn_mu, fnn_sigma, fnn_p):
        if not fnn_p:
            raise ContractError("need at least one per-hop generator")
        self.fnn_s = fnn_s
        self.fnn_d = fnn_d
        self.fnn_mu = fnn_mu
        self.fnn_sigma = fnn_sigma
        self.fnn_p = list(fnn_p)

    @property
    def k(self):
        return len(self.fnn_p)

    def tensors(self):
        out = self.fnn_s.tensors() + self.fnn_d.tensors()
        out += self.fnn_mu.tensors() + self.fnn_sigma.tensors()
        for f in self.fnn_p:
            out += f.tensors()
        return out


def init_decoder_params(rng, m, k) -> DecoderParams:
    return DecoderParams(
        fnn_s=init_fnn(rng, [m, m, m]),
        fnn_d=init_fnn(rng, [m, m, 1]),
        fnn_mu=init_fnn(rng, [m, m]),
        fnn_sigma=init_fnn(rng, [m, m]),
        fnn_p=[init_fnn(rng, [m, m, m]) for _ in range(k)],
    )


def decode_self(params: DecoderParams, h):
    """Reconstructed input-layer representation, one row per input row."""
    return params.fnn_s(h)


def decode_degree(params: DecoderParams, h):
    """Strictly positive degree prediction, shape (rows, 1)."""
    return ad.exp(params.fnn_d(h))


def gaussian_heads(params: DecoderParams, h):
    """(mu, logvar) rows for the neighbor-sample distribution."""
    return params.fnn_mu(h), params.fnn_sigma(h)


def reparameterize(params: DecoderParams, h, q, rng=None, eps=None):
    """q Gaussian samples xi_j = mu + exp(logvar/2) * eps_j for one node.

    h is a (1, m) row; gradients flow through mu and logvar, eps stays
    constant. Pass eps (q, m) explicitly to pin the noise.
    """
    mu, logvar = gaussian_heads(params, h)
    m = mu.data.shape[1]
    if eps is None:
        eps = rng.standard_normal((q, m))
    std = ad.exp(logvar * ad.constant(0.5))
    return mu + std * ad.constant(eps)


def sample_generated(params: DecoderParams, h, hop, q, rng=None, eps=None):
    """q generated hop-`hop` neighbor vectors for a single (1, m) row."""
    if not (0 <= hop < params.k):
        raise ContractError(f"hop {hop} outside 0..{params.k - 1}")
    return params.fnn_p[hop](reparameterize(params, h, q, rng=rng, eps=eps))


@dataclass
class DecodedNeighborhood:
    self_feat: object  # (1, m) tensor
    degree: object  # (1, 1) tensor, > 0
    hops: list  # k tensors of shape (q, m)


def decode_all(params: DecoderParams, stack, v, q, rng) -> DecodedNeighborhood:
    """Decode everything for node v from the final layer of `stack`.

    One set of xi draws is shared by all hop generators, mirroring a
    single sampled neighborhood decoded hop by hop.
    """
    h = ad.gather_rows(stack[-1], np.array([v]))
    xi = reparameterize(params, h, q, rng=rng)
    return DecodedNeighborhood(
        self_feat=decode_self(params, h),
        degree=decode_degree(params, h),
        hops=[params.fnn_p[i](xi) for i in range(params.k)],
    )
