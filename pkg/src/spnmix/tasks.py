"""Posterior-averaged analysis on a fitted model: imputation, held-out entry
likelihood, anomaly scoring, statistical-type posteriors, and the evaluation
metrics used throughout."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidData, NoMissing, NoPosterior, SingleClass
from .gibbs import GibbsConfig, build_dictionaries, run, structure_sparsity
from .likelihoods import MetaType, stat_type_of
from .structure import StructureConfig, learn_structure

log = logging.getLogger(__name__)


@dataclass
class FittedModel:
    """Everything a posterior analysis needs: the structure, the retained
    draws, the per-feature likelihood dictionaries, and provenance."""

    spn: object
    samples: object
    specs: tuple
    meta_types: tuple
    names: tuple
    data_hash: str
    structure_config: StructureConfig
    gibbs_config: GibbsConfig
    trace: object = None
    sparsity: float = np.nan

    def _require_draws(self):
        if self.samples is None or len(self.samples) == 0:
            raise NoPosterior("model holds no posterior draws")

    @property
    def best_params(self):
        self._require_draws()
        return self.samples.best


def fit(data, structure_config=None, gibbs_config=None, rng=None):
    """Learn a structure, run the sampler, bundle the result."""
    scfg = structure_config if structure_config is not None else StructureConfig()
    gcfg = gibbs_config if gibbs_config is not None else GibbsConfig()
    if rng is None:
        rng = np.random.default_rng(gcfg.seed)
    spn = learn_structure(data, scfg, rng)
    log.info("learned structure: %d nodes (%d sums, %d products, %d leaf slots)",
             spn.n_nodes, spn.n_sums, spn.n_products, spn.n_leaf_slots)
    specs = build_dictionaries(data)
    samples, trace, state = run(spn, data, gcfg, rng, specs=specs)
    return FittedModel(spn=spn, samples=samples, specs=specs,
                       meta_types=data.meta_types, names=data.names,
                       data_hash=data.content_hash(), structure_config=scfg,
                       gibbs_config=gcfg, trace=trace,
                       sparsity=structure_sparsity(state, spn))


# ----------------------------------------------------------------------
# imputation

def impute_batch(model, values, mode="map_sample"):
    """Complete every missing cell of a (n, d) table.  map_sample decodes
    under the highest-train-likelihood draw; mc_average averages MPE
    completions over all draws (majority vote on discrete features)."""
    model._require_draws()
    values = np.asarray(values, dtype=np.float64)
    observed = ~np.isnan(values)
    if mode == "map_sample":
        return model.spn.mpe_complete_batch(model.best_params, values,
                                            observed)
    if mode != "mc_average":
        raise InvalidData("mode must be map_sample or mc_average")
    stack = np.stack([model.spn.mpe_complete_batch(p, values, observed)
                      for p in model.samples.draws])
    out = values.copy()
    for d in range(values.shape[1]):
        rows = np.flatnonzero(~observed[:, d])
        if rows.size == 0:
            continue
        if model.meta_types[d] is MetaType.DISCRETE:
            for r in rows:
                vals, cnt = np.unique(stack[:, r, d], return_counts=True)
                out[r, d] = vals[np.argmax(cnt)]
        else:
            out[rows, d] = stack[:, rows, d].mean(axis=0)
    return out


def impute(model, row, mode="map_sample"):
    row = np.asarray(row, dtype=np.float64).reshape(1, -1)
    return impute_batch(model, row, mode)[0]


# ----------------------------------------------------------------------
# held-out entry likelihood

def _mc_log_density(model, values, observed=None):
    """log of the posterior-averaged density, per row."""
    model._require_draws()
    lls = np.stack([model.spn.log_density_batch(p, values, observed)
                    for p in model.samples.draws])
    m = lls.max(axis=0)
    with np.errstate(invalid="ignore"):
        out = m + np.log(np.exp(lls - m).mean(axis=0))
    return np.where(np.isneginf(m), -np.inf, out)


def missing_entry_loglik(model, row, true_missing_values):
    """Mean per-entry log-probability of the true values behind a row's
    missing cells, with every other cell marginalized."""
    row = np.asarray(row, dtype=np.float64)
    missing = np.flatnonzero(np.isnan(row))
    if missing.size == 0:
        raise NoMissing("row has no missing cells")
    truth = np.asarray(true_missing_values, dtype=np.float64)
    if truth.shape != (missing.size,):
        raise InvalidData("need one true value per missing cell "
                          "(feature-ascending order)")
    probe = np.full_like(row, np.nan)
    probe[missing] = truth
    ll = _mc_log_density(model, probe.reshape(1, -1))[0]
    return float(ll) / missing.size


# ----------------------------------------------------------------------
# anomaly scoring

@dataclass(frozen=True)
class AnomalyScore:
    row: int
    score: float          # negative posterior-averaged log-likelihood
    path: tuple           # (sum node id, chosen child id) under the MAP draw


def anomaly_scores(model, data):
    """Negative log-likelihood per row, sorted most anomalous first, each
    with its decoded partition path."""
    model._require_draws()
    values = data.values if hasattr(data, "values") else np.asarray(data)
    observed = ~np.isnan(values)
    ll = _mc_log_density(model, values, observed)
    params = model.best_params
    spn = model.spn
    comp_logp = spn.comp_logpdf_matrix(params, values, observed)
    leaf_vals = spn.leaf_values(params, comp_logp, observed, max_mode=True)
    v = spn.bottom_up(params, leaf_vals, max_mode=True)
    choices, _, reached = spn.decode_max_batch(params, v)
    sum_ids = np.flatnonzero(spn.sum_pos >= 0)
    out = []
    for r in range(values.shape[0]):
        path = tuple(
            (int(i), int(spn.ch_ids[spn.ch_off[i] + choices[r, spn.sum_pos[i]]]))
            for i in sum_ids if reached[r, i])
        out.append(AnomalyScore(row=r, score=float(-ll[r]), path=path))
    out.sort(key=lambda a: (-a.score, a.row))
    return out


# ----------------------------------------------------------------------
# statistical-type discovery

@dataclass(frozen=True)
class TypePosterior:
    feature: int
    kinds: tuple
    kind_probs: np.ndarray
    kind_se: np.ndarray
    stat_types: tuple
    stat_probs: np.ndarray
    stat_se: np.ndarray

    def top_kind(self):
        return self.kinds[int(np.argmax(self.kind_probs))]

    def top_stat_type(self):
        return self.stat_types[int(np.argmax(self.stat_probs))]


def type_posterior(model, d):
    """Posterior over the likelihood kinds (and their statistical types) of
    feature d: per draw, evaluate the network with every other feature's
    leaves set to 1 and feature-d leaves set to the weight mass of the kind,
    then Monte-Carlo-average in probability space."""
    model._require_draws()
    spn = model.spn
    kinds = tuple(s.kind for s in model.specs[d])
    g0, g1 = int(spn.feat_off[d]), int(spn.feat_off[d + 1])
    per_draw = np.empty((len(model.samples), len(kinds)))
    base = np.zeros(spn.n_leaf_slots)
    for i, params in enumerate(model.samples.draws):
        for k in range(len(kinds)):
            leaf_row = base.copy()
            for gl in range(g0, g1):
                c0, c1 = params.comp_slice(gl)
                w = np.exp(params.leaf_logw[c0:c1])
                mass = float(w[k])
                with np.errstate(divide="ignore"):
                    leaf_row[gl] = np.log(mass) if mass > 0 else -np.inf
            per_draw[i, k] = np.exp(
                spn.eval_leaf_matrix(params, leaf_row.reshape(1, -1))[0])
    kind_probs = per_draw.mean(axis=0)
    kind_se = per_draw.std(axis=0, ddof=0) / np.sqrt(len(model.samples))

    stypes = sorted({stat_type_of(k) for k in kinds}, key=lambda t: t.name)
    agg = np.zeros((per_draw.shape[0], len(stypes)))
    for k, kind in enumerate(kinds):
        agg[:, stypes.index(stat_type_of(kind))] += per_draw[:, k]
    stat_probs = agg.mean(axis=0)
    stat_se = agg.std(axis=0, ddof=0) / np.sqrt(len(model.samples))
    return TypePosterior(feature=d, kinds=kinds, kind_probs=kind_probs,
                         kind_se=kind_se, stat_types=tuple(stypes),
                         stat_probs=stat_probs, stat_se=stat_se)


# ----------------------------------------------------------------------
# metrics

def nrmse(imputed, truth, ranges):
    """Per-feature RMSE over cells where `truth` is given (non-NaN), divided
    by the feature's observed range.  Zero-range features are skipped with a
    warning and come back as NaN."""
    imputed = np.asarray(imputed, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if imputed.shape != truth.shape:
        raise InvalidData("imputed/truth shape mismatch")
    out = np.full(imputed.shape[1], np.nan)
    for d in range(imputed.shape[1]):
        cells = ~np.isnan(truth[:, d])
        if not cells.any():
            continue
        lo, hi = ranges[d]
        span = hi - lo
        if not np.isfinite(span) or span <= 0:
            log.warning("feature %d skipped in NRMSE: zero range", d)
            continue
        err = imputed[cells, d] - truth[cells, d]
        out[d] = np.sqrt(np.mean(err ** 2)) / span
    return out


def auc_roc(scores, labels):
    """Rank-based AUC (average ranks on ties)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("need both classes for AUC")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def cosine_similarity(vec_a, vec_b):
    a = np.asarray(vec_a, dtype=np.float64)
    b = np.asarray(vec_b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InvalidData("cosine similarity of a zero vector is undefined")
    return float(a @ b / (na * nb))
