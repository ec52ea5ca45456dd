"""Gibbs sampling over (trees, component assignments, parameters, weights).

One sweep resamples, in order: each row's induced tree (detached sums from
the prior), component assignments for observed cells, every leaf component's
parameters from its conjugate posterior, leaf mixture weights, and sum
weights.  Missing cells are marginalized: they contribute log 1 during tree
sampling, receive no component assignment, and enter no sufficient statistic.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidStructure, NonFiniteLikelihood
from .likelihoods import default_dictionary, initial_model, resample
from .spn import PRODUCT, ParamSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GibbsConfig:
    iterations: int = 1500
    burn_in: int = 1000
    thinning: int = 1
    gamma: float = 10.0
    alpha: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.burn_in < self.iterations):
            raise InvalidStructure("need 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise InvalidStructure("thinning must be >= 1")
        if self.gamma <= 0 or self.alpha <= 0:
            raise InvalidStructure("Dirichlet concentrations must be > 0")


@dataclass
class Trace:
    """Per-sweep mean train log-likelihood (under the parameters entering the
    sweep) and wall-clock seconds."""

    mean_loglik: np.ndarray
    seconds: np.ndarray

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iteration,mean_loglik,seconds\n")
            for i, (ll, s) in enumerate(zip(self.mean_loglik, self.seconds)):
                fh.write("%d,%r,%r\n" % (i + 1, float(ll), float(s)))


@dataclass
class PosteriorSampleSet:
    """Retained posterior draws of all parameters, with the mean train
    log-likelihood each draw achieves."""

    draws: list
    train_loglik: np.ndarray
    iterations: np.ndarray

    def __len__(self):
        return len(self.draws)

    @property
    def best_index(self):
        return int(np.argmax(self.train_loglik))

    @property
    def best(self):
        return self.draws[self.best_index]


@dataclass
class GibbsState:
    specs: tuple                 # per feature: tuple of KindSpec
    params: ParamSet
    jmat: np.ndarray             # (n, d) leaf slot per feature (current trees)
    smat: np.ndarray             # (n, d) component per observed cell, -1 missing
    choices: np.ndarray          # (n, n_sums) chosen child per sum (incl. detached)
    comp_counts: np.ndarray      # observed cells per leaf component
    reach_counts: np.ndarray     # rows whose tree reaches each node
    gamma: float
    alpha: float
    it: int = 0
    entering_ll: float = np.nan


def build_dictionaries(data, priors=None):
    """One likelihood dictionary per feature, shared by all of the feature's
    leaves."""
    return tuple(
        tuple(default_dictionary(data.meta_types[d], data.feature_stats(d),
                                 priors))
        for d in range(data.n_features))


def _mean_root_ll(root_vals, observed):
    vals = np.where(observed.any(axis=1), root_vals, 0.0)
    return float(vals.mean())


def _check_finite(root_vals, leaf_vals, observed, spn):
    bad = ~np.isfinite(root_vals) & observed.any(axis=1)
    if not bad.any():
        return
    row = int(np.flatnonzero(bad)[0])
    node = spn.root
    gl_nodes = spn.gl_node_ids
    for gl in range(spn.n_leaf_slots):
        if not np.isfinite(leaf_vals[row, gl]):
            node = int(gl_nodes[gl])
            break
    raise NonFiniteLikelihood(row, node)


def init_state(spn, data, config, rng, specs=None, priors=None):
    """Initial assignments and parameters: sum weights from the structure
    proportions, uniform leaf weights, trees from the prior, uniform
    component assignments, parameters from their conditional posteriors."""
    if specs is None:
        specs = build_dictionaries(data, priors)
    if len(specs) != spn.n_features:
        raise InvalidStructure("one dictionary per feature required")
    x = data.values
    obs = data.observed
    n = data.n_rows

    comps_sizes = [len(specs[d]) for d in spn.gl_feature]
    comp_off = np.zeros(spn.n_leaf_slots + 1, dtype=np.int64)
    comp_off[1:] = np.cumsum(comps_sizes)
    leaf_logw = np.concatenate(
        [np.full(c, -np.log(c)) for c in comps_sizes]) if comps_sizes else \
        np.zeros(0)
    edge_logw = spn.init_edge_logw.copy()

    # trees from the prior: zero node values make every sum draw from its
    # weights alone
    v = np.zeros((n, spn.n_nodes))
    u_tree = rng.random((n, spn.n_sums))
    choices, jmat, reached = kernels.sample_trees(
        v, spn.kind, spn.ch_off, spn.ch_ids, spn.sum_pos, spn.feat, spn.slot,
        edge_logw, spn.root, spn.n_features, u_tree)

    # uniform component assignments for observed cells
    comp_logp = np.zeros((n, int(comp_off[-1])))
    u_comp = rng.random((n, spn.n_features))
    smat = kernels.sample_components(comp_logp, leaf_logw, comp_off,
                                     spn.feat_off, jmat, obs, u_comp)

    comps = []
    for d in range(spn.n_features):
        rows_d = np.flatnonzero(obs[:, d])
        xd = x[rows_d, d]
        jd = jmat[rows_d, d]
        sd = smat[rows_d, d]
        for slot in range(int(spn.feat_off[d + 1] - spn.feat_off[d])):
            sel = jd == slot
            comps.append(tuple(
                initial_model(spec, xd[sel & (sd == k)], rng)
                for k, spec in enumerate(specs[d])))

    params = ParamSet(edge_logw=edge_logw, comp_off=comp_off,
                      comps=tuple(comps), leaf_logw=leaf_logw)
    comp_counts = _component_counts(spn, params, jmat, smat, obs)
    return GibbsState(specs=tuple(specs), params=params, jmat=jmat, smat=smat,
                      choices=choices, comp_counts=comp_counts,
                      reach_counts=reached.sum(axis=0, dtype=np.int64),
                      gamma=config.gamma, alpha=config.alpha)


def _component_counts(spn, params, jmat, smat, observed):
    gl_cell = spn.feat_off[:-1][None, :] + jmat
    flat = params.comp_off[gl_cell] + smat
    mask = observed & (smat >= 0)
    return np.bincount(flat[mask].ravel(),
                       minlength=int(params.comp_off[-1])).astype(np.int64)


def sweep(state, spn, data, rng):
    """One full Gibbs scan; mutates and returns the state.  Mean train
    log-likelihood under the entering parameters lands in
    state.entering_ll."""
    x = data.values
    obs = data.observed
    n = data.n_rows
    params = state.params

    comp_logp = spn.comp_logpdf_matrix(params, x, obs)
    leaf_vals = spn.leaf_values(params, comp_logp, obs, check=False)
    v = spn.bottom_up(params, leaf_vals)
    root_vals = v[:, spn.root]
    _check_finite(root_vals, leaf_vals, obs, spn)
    state.entering_ll = _mean_root_ll(root_vals, obs)

    # latent variables: induced trees, then component assignments
    u_tree = rng.random((n, spn.n_sums))
    choices, jmat, reached = spn.sample_trees_batch(params, v, u_tree)
    u_comp = rng.random((n, spn.n_features))
    smat = kernels.sample_components(comp_logp, params.leaf_logw,
                                     params.comp_off, spn.feat_off, jmat, obs,
                                     u_comp)

    # component parameters from conjugate posteriors
    comps = []
    for d in range(spn.n_features):
        rows_d = np.flatnonzero(obs[:, d])
        xd = x[rows_d, d]
        jd = jmat[rows_d, d]
        sd = smat[rows_d, d]
        for slot in range(int(spn.feat_off[d + 1] - spn.feat_off[d])):
            gl = int(spn.feat_off[d]) + slot
            sel = jd == slot
            comps.append(tuple(
                resample(spec, params.comps[gl][k], xd[sel & (sd == k)], rng)
                for k, spec in enumerate(state.specs[d])))
    comps = tuple(comps)

    # leaf mixture weights
    counts = _component_counts(spn, params, jmat, smat, obs)
    leaf_logw = np.empty(int(params.comp_off[-1]))
    with np.errstate(divide="ignore"):
        for gl in range(spn.n_leaf_slots):
            c0, c1 = params.comp_slice(gl)
            w = rng.dirichlet(state.alpha + counts[c0:c1])
            leaf_logw[c0:c1] = np.log(w)

    # sum weights; counts include detached traversals, whose latent choices
    # were drawn from the prior in the same pass (product-edge entries stay 0)
    edge_logw = np.zeros_like(params.edge_logw)
    with np.errstate(divide="ignore"):
        for i in range(spn.n_nodes):
            if spn.sum_pos[i] >= 0:
                o0, o1 = int(spn.ch_off[i]), int(spn.ch_off[i + 1])
                cnt = np.bincount(choices[:, spn.sum_pos[i]],
                                  minlength=o1 - o0)
                om = rng.dirichlet(state.gamma + cnt)
                edge_logw[o0:o1] = np.log(om)

    state.params = ParamSet(edge_logw=edge_logw, comp_off=params.comp_off,
                            comps=comps, leaf_logw=leaf_logw)
    state.jmat = jmat
    state.smat = smat
    state.choices = choices
    state.comp_counts = counts
    state.reach_counts = reached.sum(axis=0, dtype=np.int64)
    state.it += 1
    return state


def run(spn, data, config, rng=None, specs=None, priors=None):
    """Execute config.iterations sweeps; returns (PosteriorSampleSet, Trace,
    final state).  Draws are retained after every post-burn-in sweep at the
    thinning stride; each draw's train log-likelihood is evaluated under the
    drawn parameters."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    state = init_state(spn, data, config, rng, specs=specs, priors=priors)
    n_iter = config.iterations
    trace_ll = np.empty(n_iter)
    secs = np.empty(n_iter)
    draws = []
    draw_ll = []
    draw_iter = []
    pending = None
    for it in range(1, n_iter + 1):
        t0 = time.perf_counter()
        sweep(state, spn, data, rng)
        secs[it - 1] = time.perf_counter() - t0
        trace_ll[it - 1] = state.entering_ll
        if pending is not None:
            draw_ll[pending] = state.entering_ll
            pending = None
        if it > config.burn_in and (it - config.burn_in - 1) % config.thinning == 0:
            draws.append(state.params)
            draw_iter.append(it)
            draw_ll.append(np.nan)
            pending = len(draws) - 1
        if it % 200 == 0 or it == n_iter:
            log.info("sweep %d/%d mean_loglik=%.4f", it, n_iter,
                     trace_ll[it - 1])
    if pending is not None:
        ll = spn.log_density_batch(state.params, data.values, data.observed)
        draw_ll[pending] = _mean_root_ll(ll, data.observed)
    samples = PosteriorSampleSet(draws=draws,
                                 train_loglik=np.asarray(draw_ll),
                                 iterations=np.asarray(draw_iter))
    return samples, Trace(mean_loglik=trace_ll, seconds=secs), state


def structure_sparsity(state, spn):
    """Fraction of (product nodes + leaf components) that currently carry at
    least one assigned sample / observed cell."""
    is_product = spn.kind == PRODUCT
    n_products = int(is_product.sum())
    used_products = int((state.reach_counts[is_product] > 0).sum())
    n_comps = int(state.params.comp_off[-1])
    used_comps = int((state.comp_counts > 0).sum())
    total = n_products + n_comps
    if total == 0:
        return 1.0
    return (used_products + used_comps) / total
