import numpy as np
import pytest

from spnmix.likelihoods import (Categorical, Exponential, Gaussian,
                                GammaFixedShape, Poisson)
from spnmix.spn import ParamSet, SpnBuilder


def two_tree_spn():
    """Root sum over two products of Gaussian leaves; exactly 2 induced
    trees.  The workhorse for hand-verifiable inference tests."""
    b = SpnBuilder(2)
    l00 = b.leaf(0)
    l01 = b.leaf(1)
    l10 = b.leaf(0)
    l11 = b.leaf(1)
    p0 = b.product([l00, l01])
    p1 = b.product([l10, l11])
    root = b.sum([p0, p1], [0.3, 0.7])
    spn = b.build(root)
    comps = [None] * spn.n_leaf_slots
    comps[spn.leaf_gl[l00]] = (Gaussian(0.0, 1.0),)
    comps[spn.leaf_gl[l01]] = (Gaussian(0.0, 1.0),)
    comps[spn.leaf_gl[l10]] = (Gaussian(3.0, 1.0),)
    comps[spn.leaf_gl[l11]] = (Gaussian(-3.0, 1.0),)
    params = ParamSet.build(spn, comps)
    return spn, params


def mixed_leaf_spn():
    """One continuous and one discrete feature, multi-component leaves."""
    b = SpnBuilder(2)
    l0 = b.leaf(0)
    l1 = b.leaf(1)
    l2 = b.leaf(0)
    l3 = b.leaf(1)
    p0 = b.product([l0, l1])
    p1 = b.product([l2, l3])
    root = b.sum([p0, p1], [0.6, 0.4])
    spn = b.build(root)
    comps = [None] * spn.n_leaf_slots
    comps[spn.leaf_gl[l0]] = (Gaussian(0.0, 1.0), GammaFixedShape(2.0, 1.0))
    comps[spn.leaf_gl[l1]] = (Poisson(3.0), Categorical((0.2, 0.3, 0.5)))
    comps[spn.leaf_gl[l2]] = (Gaussian(5.0, 2.0), Exponential(0.5))
    comps[spn.leaf_gl[l3]] = (Poisson(8.0),)
    params = ParamSet.build(spn, comps)
    return spn, params


def tree_gl_indices(spn, tree):
    """Global leaf-slot index per feature for one induced tree."""
    return [int(spn.feat_off[d]) + s for d, s in enumerate(tree.leaf_slots)]


def enum_log_density(spn, params, values, observed):
    """Brute-force induced-tree oracle: LSE over every tree of tree weight
    plus its leaf log-values."""
    comp_logp = spn.comp_logpdf_matrix(params, values, observed)
    leaf_vals = spn.leaf_values(params, comp_logp, observed)
    trees = spn.enumerate_induced_trees(params)
    out = np.full(values.shape[0], -np.inf)
    for t in trees:
        tv = t.log_weight + leaf_vals[:, tree_gl_indices(spn, t)].sum(axis=1)
        out = np.logaddexp(out, tv)
    return out


def random_valid_spn(rng, n_features=3, max_trees=64, comp_max=3):
    """Random small SPN with bounded induced-tree count, plus parameters."""
    kinds = [Gaussian, Exponential]
    while True:
        b = SpnBuilder(n_features)
        models = {}

        def leaf(feat):
            nid = b.leaf(feat)
            n_comp = int(rng.integers(1, comp_max + 1))
            ms = []
            for _ in range(n_comp):
                if rng.random() < 0.5:
                    ms.append(Gaussian(float(rng.normal(0, 3)),
                                       float(rng.uniform(0.5, 4.0))))
                else:
                    ms.append(Exponential(float(rng.uniform(0.2, 3.0))))
            models[nid] = tuple(ms)
            return nid

        def branch(feats, depth=0):
            if len(feats) == 1:
                if depth < 3 and rng.random() < 0.4:
                    ch = [branch(feats, depth + 1) for _ in range(2)]
                    return b.sum(ch, rng.dirichlet(np.ones(2)))
                return leaf(feats[0])
            if depth < 4 and rng.random() < 0.4:
                ch = [branch(feats, depth + 1) for _ in range(2)]
                return b.sum(ch, rng.dirichlet(np.ones(2)))
            cut = int(rng.integers(1, len(feats)))
            return b.product([branch(feats[:cut], depth + 1),
                              branch(feats[cut:], depth + 1)])

        root = branch(list(range(n_features)))
        spn = b.build(root)
        if not spn.validate().ok:
            continue
        if spn.count_induced_trees() > max_trees:
            continue
        comps = [None] * spn.n_leaf_slots
        for nid, ms in models.items():
            comps[spn.leaf_gl[nid]] = ms
        weights = [rng.dirichlet(np.ones(len(c))) for c in comps]
        params = ParamSet.build(spn, comps, leaf_w=weights)
        return spn, params


@pytest.fixture(scope="session")
def tiny_fitted_model():
    """A real fit on a small mixed synthetic table, shared by task-level
    tests.  Two clusters, one continuous + one discrete feature."""
    from spnmix.data import Dataset
    from spnmix.gibbs import GibbsConfig
    from spnmix.likelihoods import MetaType
    from spnmix.structure import StructureConfig
    from spnmix.tasks import fit

    rng = np.random.default_rng(42)
    n = 400
    z = rng.random(n) < 0.5
    x = np.where(z, rng.normal(0, 1, n), rng.normal(6, 1, n))
    y = np.where(z, rng.poisson(2.0, n), rng.poisson(9.0, n)).astype(float)
    values = np.column_stack([x, y])
    data = Dataset(values, (MetaType.CONTINUOUS, MetaType.DISCRETE))
    model = fit(data,
                StructureConfig(min_instances_fraction=0.2, seed=1),
                GibbsConfig(iterations=120, burn_in=80, thinning=2, seed=1))
    return model, data
