"""Distribution-reconstruction losses between two equal-size vector sets.

Three surrogates for the squared 2-Wasserstein distance between the
empirical distribution of q true neighbor representations and q
generated vectors: the exact assignment (Hungarian) loss, the Chamfer
relaxation, and the entropic Sinkhorn relaxation.

The discrete structure (matching, argmins, transport plan) is always
recomputed on the forward pass and held constant in backward; gradients
flow through the selected squared distances only. True-set rows are
detached by default so the generator chases the encoder, not the other
way around; pass detach_true=False to train both sides.
"""

import numpy as np

from . import assignment
from . import autodiff as ad
from .errors import ContractError, DimensionError, NumericError

hungarian = assignment.solve


def pairwise_sq_dists(a, b):
    """Squared Euclidean distances, rows of `a` against rows of `b`."""
    aa = (a * a).sum(axis=1)[:, None]
    bb = (b * b).sum(axis=1)[None, :]
    d = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(d, 0.0)  # clip tiny negative round-off


def _check_sets(true_set, gen_set):
    td, gd = true_set.data, gen_set.data
    if td.ndim != 2 or gd.ndim != 2 or td.shape != gd.shape:
        raise DimensionError(
            f"set shapes must match and be 2-d, got {td.shape} and {gd.shape}"
        )
    if not (np.all(np.isfinite(td)) and np.all(np.isfinite(gd))):
        raise ContractError("input sets contain NaN or infinite values")


def _true_side(true_set, detach_true):
    return ad.detach(true_set) if detach_true else true_set


def wasserstein_loss(true_set, gen_set, detach_true=True):
    """min over bijections pi of sum_j ||t_j - g_pi(j)||^2, exactly."""
    _check_sets(true_set, gen_set)
    cost = pairwise_sq_dists(true_set.data, gen_set.data)
    perm, _ = assignment.solve(cost)
    t = _true_side(true_set, detach_true)
    return ad.sq_norm(t - ad.gather_rows(gen_set, perm))


def chamfer_loss(true_set, gen_set, detach_true=True):
    """sum_j min_l c_jl + sum_l min_j c_jl over squared distances."""
    _check_sets(true_set, gen_set)
    cost = pairwise_sq_dists(true_set.data, gen_set.data)
    t = _true_side(true_set, detach_true)
    fwd = ad.sq_norm(t - ad.gather_rows(gen_set, cost.argmin(axis=1)))
    bwd = ad.sq_norm(ad.gather_rows(t, cost.argmin(axis=0)) - gen_set)
    return fwd + bwd


def sinkhorn_plan(cost, epsilon, iters):
    """Entropic transport plan for uniform 1/q marginals, log-domain.

    cost may be (q, q) or a stacked (..., q, q) batch; iterations run
    vectorized over the leading dimensions. When the target epsilon is
    below 1, the first 80% of the rounds anneal the temperature
    geometrically from 1 down to epsilon (warm-starting the potentials,
    the usual epsilon-scaling trick); small fixed iteration budgets
    would otherwise be far from the marginal polytope at sharp
    temperatures.
    """
    if epsilon <= 0 or iters < 1:
        raise ContractError("need epsilon > 0 and iters >= 1")
    q = cost.shape[-1]
    log_marg = -np.log(q)
    f = np.zeros(cost.shape[:-1])
    g = np.zeros(cost.shape[:-1])

    def lse(x, axis):
        mx = x.max(axis=axis, keepdims=True)
        return (mx + np.log(np.exp(x - mx).sum(axis=axis, keepdims=True))).squeeze(
            axis
        )

    eps0 = max(1.0, epsilon)
    warm = int(0.8 * iters) if eps0 > epsilon else 0
    for it in range(iters):
        if it < warm:
            e = eps0 * (epsilon / eps0) ** ((it + 1) / warm)
        else:
            e = epsilon
        f = e * (log_marg - lse((g[..., None, :] - cost) / e, -1))
        g = e * (log_marg - lse((f[..., :, None] - cost) / e, -2))
    plan = np.exp((f[..., :, None] + g[..., None, :] - cost) / epsilon)
    if not np.all(np.isfinite(plan)):
        raise NumericError(f"sinkhorn scaling diverged at epsilon={epsilon}")
    return plan


def transport_cost(plan, true_set, gen_set, detach_true=True):
    """<plan, C> for squared-distance costs, differentiable in the sets.

    The (q, q) plan is a fixed numpy array; expanding the quadratic
    avoids materializing a differentiable cost matrix:
    <T, C> = sum_i r_i||t_i||^2 + sum_j c_j||g_j||^2 - 2 sum_i <t_i, (T g)_i>
    with r, c the plan's row/column marginals.
    """
    t = _true_side(true_set, detach_true)
    row_sq_t = ad.tsum(t * t, axis=1)
    row_sq_g = ad.tsum(gen_set * gen_set, axis=1)
    cross = ad.tsum(t * (ad.constant(plan) @ gen_set))
    return (
        ad.tsum(ad.constant(plan.sum(axis=1)) * row_sq_t)
        + ad.tsum(ad.constant(plan.sum(axis=0)) * row_sq_g)
        - cross * ad.constant(2.0)
    )


def sinkhorn_loss(true_set, gen_set, epsilon, iters, detach_true=True):
    """<T*, C> with T* from `iters` alternating log-space scalings.

    Marginals are uniform 1/q, so the value approaches (assignment
    total)/q as epsilon shrinks. The plan is a constant in backward.
    """
    _check_sets(true_set, gen_set)
    cost = pairwise_sq_dists(true_set.data, gen_set.data)
    plan = sinkhorn_plan(cost, epsilon, iters)
    return transport_cost(plan, true_set, gen_set, detach_true=detach_true)
