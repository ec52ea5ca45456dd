"""Dictionaries of parametric likelihood models with conjugate priors.

Each leaf of the network mixes the models listed in its feature's dictionary.
A dictionary entry is a KindSpec (kind + prior hyper-parameters + bookkeeping
such as the Geometric support shift or the Categorical cardinality); concrete
parameter draws are small frozen model objects (Gaussian, Poisson, ...) that
know how to evaluate themselves.

Conjugate updates are carried in an additive sufficient-statistic form so that
a batch update and a chain of one-point updates produce the *same* hyper state
(exactly, in floating point, whenever the partial sums are exact).

Statistical types:
    REAL <- {gaussian}           POS <- {gamma, exponential}
    NUM  <- {poisson, geometric} NOM <- {categorical}
    BIN  <- {bernoulli}
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import EmptyColumn, InvalidData, InvalidInterval

_INTEGER_TOL = 1e-9


class MetaType(enum.Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class StatType(enum.Enum):
    REAL = "real"
    POS = "pos"
    NUM = "num"
    NOM = "nom"
    BIN = "bin"


KIND_STAT_TYPE = {
    "gaussian": StatType.REAL,
    "gamma": StatType.POS,
    "exponential": StatType.POS,
    "poisson": StatType.NUM,
    "geometric": StatType.NUM,
    "categorical": StatType.NOM,
    "bernoulli": StatType.BIN,
}

CONTINUOUS_KINDS = ("gaussian", "gamma", "exponential")
DISCRETE_KINDS = ("poisson", "geometric", "categorical")


def stat_type_of(kind):
    """Map a likelihood kind name to its statistical type."""
    return KIND_STAT_TYPE[kind]


@dataclass(frozen=True)
class FeatureStats:
    """Summary of one column's observed cells."""

    n_observed: int
    minimum: float
    maximum: float
    mean: float
    variance: float
    cardinality: int

    @classmethod
    def from_column(cls, values, observed=None):
        values = np.asarray(values, dtype=float)
        if observed is not None:
            values = values[np.asarray(observed, dtype=bool)]
        values = values[np.isfinite(values)]
        if values.size == 0:
            raise EmptyColumn("no observed cells")
        return cls(
            n_observed=int(values.size),
            minimum=float(values.min()),
            maximum=float(values.max()),
            mean=float(values.mean()),
            variance=float(values.var()),
            cardinality=int(np.unique(values).size),
        )


# ---------------------------------------------------------------------------
# Conjugate hyper-parameter states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NIGState:
    """Normal-Inverse-Gamma hyper state for the Gaussian, in additive form.

    Stored as (kappa, kappa_m, a, t) where kappa = 1/V, kappa_m = kappa * m and
    t = b + kappa * m^2 / 2.  A batch of n points with sums (sx, sxx) updates
    every field by pure addition, which is what makes sequential and batch
    updates coincide.
    """

    kappa: float
    kappa_m: float
    a: float
    t: float

    @classmethod
    def from_mvab(cls, m0, v0, a0, b0):
        if v0 <= 0 or a0 <= 0 or b0 <= 0:
            raise InvalidData("NIG hyper-parameters must be positive")
        kappa = 1.0 / v0
        return cls(kappa=kappa, kappa_m=kappa * m0, a=a0, t=b0 + kappa * m0 * m0 / 2.0)

    @property
    def m(self):
        return self.kappa_m / self.kappa

    @property
    def v(self):
        return 1.0 / self.kappa

    @property
    def b(self):
        return self.t - self.kappa_m * self.kappa_m / (2.0 * self.kappa)

    def updated(self, n, sx, sxx):
        return NIGState(self.kappa + n, self.kappa_m + sx, self.a + n / 2.0, self.t + sxx / 2.0)


@dataclass(frozen=True)
class GammaHyper:
    """Gamma(a, b) prior over a rate; shape/rate convention throughout."""

    a: float
    b: float

    def updated(self, da, db):
        return GammaHyper(self.a + da, self.b + db)


@dataclass(frozen=True)
class BetaHyper:
    a: float
    b: float

    def updated(self, da, db):
        return BetaHyper(self.a + da, self.b + db)


@dataclass(frozen=True)
class DirichletHyper:
    alpha: tuple

    def updated(self, counts):
        return DirichletHyper(tuple(a + c for a, c in zip(self.alpha, counts)))


# ---------------------------------------------------------------------------
# Likelihood models (one frozen dataclass per kind)
# ---------------------------------------------------------------------------


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(arr, scalar):
    return float(arr) if scalar else arr


def _integer_mask(arr):
    return np.abs(arr - np.rint(arr)) <= _INTEGER_TOL


@dataclass(frozen=True)
class Gaussian:
    mu: float
    var: float
    kind = "gaussian"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        out = -0.5 * ((arr - self.mu) ** 2 / self.var) - 0.5 * math.log(2.0 * math.pi * self.var)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        return _maybe_scalar(sp.ndtr((arr - self.mu) / math.sqrt(self.var)), scalar)

    def quantile(self, p):
        return self.mu + math.sqrt(self.var) * float(sp.ndtri(p))

    def mode(self):
        return self.mu

    def mode_log_pdf(self):
        return -0.5 * math.log(2.0 * math.pi * self.var)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, math.sqrt(self.var), size=size)


@dataclass(frozen=True)
class GammaFixedShape:
    """Gamma(shape, rate) with the shape held fixed after initialization."""

    shape: float
    rate: float
    kind = "gamma"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                self.shape * math.log(self.rate)
                + sp.xlogy(self.shape - 1.0, arr)
                - self.rate * arr
                - sp.gammaln(self.shape)
            )
        out = np.where(arr > 0, out, -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = sp.gammainc(self.shape, self.rate * np.maximum(arr, 0.0))
        return _maybe_scalar(out, scalar)

    def quantile(self, p):
        return float(sp.gammaincinv(self.shape, p)) / self.rate

    def mode(self):
        return max(self.shape - 1.0, 0.0) / self.rate

    def mode_log_pdf(self):
        if self.shape < 1.0:
            # density is unbounded at the support boundary; a large finite
            # value keeps max-product arithmetic NaN-free while still winning
            # every comparison against an actual density
            return 700.0
        if self.shape == 1.0:
            return math.log(self.rate)
        return float(self.log_pdf(self.mode()))

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class Exponential:
    rate: float
    kind = "exponential"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        out = np.where(arr >= 0, math.log(self.rate) - self.rate * arr, -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        return _maybe_scalar(-np.expm1(-self.rate * np.maximum(arr, 0.0)), scalar)

    def quantile(self, p):
        return -math.log1p(-p) / self.rate

    def mode(self):
        return 0.0

    def mode_log_pdf(self):
        return math.log(self.rate)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class Poisson:
    rate: float
    kind = "poisson"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        ok = _integer_mask(arr) & (arr >= 0)
        k = np.rint(np.where(ok, arr, 0.0))
        out = sp.xlogy(k, self.rate) - self.rate - sp.gammaln(k + 1.0)
        out = np.where(ok, out, -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        k = np.floor(arr)
        out = np.where(k >= 0, sp.gammaincc(np.maximum(k, 0.0) + 1.0, self.rate), 0.0)
        return _maybe_scalar(out, scalar)

    def quantile(self, p):
        # gallop out, then binary-search the smallest k with CDF(k) >= p
        hi = max(1, int(self.rate))
        while self.cdf(float(hi)) < p:
            hi *= 2
            if hi > 1 << 40:
                break
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if self.cdf(float(mid)) >= p:
                hi = mid
            else:
                lo = mid + 1
        return float(lo)

    def mode(self):
        return float(math.floor(self.rate))

    def mode_log_pdf(self):
        return float(self.log_pdf(self.mode()))

    def sample(self, rng, size=None):
        return rng.poisson(self.rate, size=size).astype(float)


@dataclass(frozen=True)
class Geometric:
    """Geometric on {1, 2, ...}; `shift` maps data x to model support x+shift."""

    theta: float
    shift: int = 0
    kind = "geometric"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        y = arr + self.shift
        ok = _integer_mask(y) & (y >= 1)
        yk = np.rint(np.where(ok, y, 1.0))
        out = math.log(self.theta) + (yk - 1.0) * math.log1p(-self.theta)
        out = np.where(ok, out, -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        y = np.floor(arr + self.shift)
        out = np.where(y >= 1, -np.expm1(np.maximum(y, 1.0) * math.log1p(-self.theta)), 0.0)
        return _maybe_scalar(out, scalar)

    def quantile(self, p):
        if self.theta >= 1.0:
            return float(1 - self.shift)
        y = math.ceil(math.log1p(-p) / math.log1p(-self.theta))
        return float(max(y, 1) - self.shift)

    def mode(self):
        return float(1 - self.shift)

    def mode_log_pdf(self):
        return math.log(self.theta)

    def sample(self, rng, size=None):
        draw = rng.geometric(self.theta, size=size)
        return (draw - self.shift).astype(float) if size is not None else float(draw - self.shift)


@dataclass(frozen=True)
class Categorical:
    probs: tuple
    kind = "categorical"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        k = len(self.probs)
        ok = _integer_mask(arr) & (arr >= 0) & (arr <= k - 1)
        idx = np.rint(np.where(ok, arr, 0.0)).astype(int)
        with np.errstate(divide="ignore"):
            table = np.log(np.asarray(self.probs, dtype=float))
        out = np.where(ok, table[idx], -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        cum = np.cumsum(self.probs)
        k = np.floor(arr).astype(int)
        out = np.where(k >= 0, cum[np.clip(k, 0, len(self.probs) - 1)], 0.0)
        out = np.where(k >= len(self.probs), 1.0, out)
        return _maybe_scalar(out, scalar)

    def quantile(self, p):
        cum = np.cumsum(self.probs)
        return float(np.searchsorted(cum, p, side="left"))

    def mode(self):
        return float(int(np.argmax(self.probs)))

    def mode_log_pdf(self):
        return float(np.log(max(self.probs)))

    def sample(self, rng, size=None):
        cum = np.cumsum(self.probs)
        u = rng.random(size=size) * cum[-1]
        out = np.searchsorted(cum, u, side="right").astype(float)
        return out if size is not None else float(out)


@dataclass(frozen=True)
class Bernoulli:
    theta: float
    kind = "bernoulli"

    def log_pdf(self, x):
        arr, scalar = _as_array(x)
        ok = _integer_mask(arr) & ((np.rint(arr) == 0) | (np.rint(arr) == 1))
        one = np.rint(arr) == 1
        with np.errstate(divide="ignore"):
            out = np.where(one, math.log(self.theta) if self.theta > 0 else -np.inf,
                           math.log1p(-self.theta) if self.theta < 1 else -np.inf)
        out = np.where(ok, out, -np.inf)
        return _maybe_scalar(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.where(arr < 0, 0.0, np.where(arr < 1, 1.0 - self.theta, 1.0))
        return _maybe_scalar(out, scalar)

    def quantile(self, p):
        return 0.0 if p <= 1.0 - self.theta else 1.0

    def mode(self):
        return 1.0 if self.theta > 0.5 else 0.0

    def mode_log_pdf(self):
        return math.log(max(self.theta, 1.0 - self.theta))

    def sample(self, rng, size=None):
        out = (rng.random(size=size) < self.theta).astype(float)
        return out if size is not None else float(out)


MODEL_CLASSES = {
    "gaussian": Gaussian,
    "gamma": GammaFixedShape,
    "exponential": Exponential,
    "poisson": Poisson,
    "geometric": Geometric,
    "categorical": Categorical,
    "bernoulli": Bernoulli,
}


def model_to_dict(model):
    d = {"kind": model.kind}
    if model.kind == "gaussian":
        d.update(mu=model.mu, var=model.var)
    elif model.kind == "gamma":
        d.update(shape=model.shape, rate=model.rate)
    elif model.kind == "exponential":
        d.update(rate=model.rate)
    elif model.kind == "poisson":
        d.update(rate=model.rate)
    elif model.kind == "geometric":
        d.update(theta=model.theta, shift=model.shift)
    elif model.kind == "categorical":
        d.update(probs=list(model.probs))
    elif model.kind == "bernoulli":
        d.update(theta=model.theta)
    return d


def model_from_dict(d):
    kind = d["kind"]
    if kind == "gaussian":
        return Gaussian(d["mu"], d["var"])
    if kind == "gamma":
        return GammaFixedShape(d["shape"], d["rate"])
    if kind == "exponential":
        return Exponential(d["rate"])
    if kind == "poisson":
        return Poisson(d["rate"])
    if kind == "geometric":
        return Geometric(d["theta"], int(d.get("shift", 0)))
    if kind == "categorical":
        return Categorical(tuple(d["probs"]))
    if kind == "bernoulli":
        return Bernoulli(d["theta"])
    raise InvalidData(f"unknown likelihood kind {kind!r}")


# ---------------------------------------------------------------------------
# Kind specifications (dictionary entries)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KindSpec:
    """One dictionary entry: a likelihood kind plus its prior.

    shift: Geometric-only support shift (1 when the column contains zeros).
    n_categories: Categorical/Bernoulli-only domain size.
    fixed_shape: Gamma-only fallback shape used when no data is available to
        set the shape by method of moments.
    """

    kind: str
    prior: object
    shift: int = 0
    n_categories: int = 0
    fixed_shape: float = 2.0

    @property
    def stat_type(self):
        return KIND_STAT_TYPE[self.kind]

    @property
    def n_params(self):
        return self.n_categories if self.kind == "categorical" else 1


def _check_support(spec, xs):
    if xs.size == 0:
        return
    if spec.kind == "gaussian":
        if not np.all(np.isfinite(xs)):
            raise InvalidData("gaussian data must be finite")
    elif spec.kind == "gamma":
        if np.any(xs <= 0):
            raise InvalidData("gamma data must be positive")
    elif spec.kind == "exponential":
        if np.any(xs < 0):
            raise InvalidData("exponential data must be nonnegative")
    elif spec.kind == "poisson":
        if np.any(~_integer_mask(xs)) or np.any(xs < 0):
            raise InvalidData("poisson data must be nonnegative integers")
    elif spec.kind == "geometric":
        if np.any(~_integer_mask(xs)) or np.any(xs + spec.shift < 1):
            raise InvalidData("geometric data must be integers >= 1 after shift")
    elif spec.kind == "categorical":
        if np.any(~_integer_mask(xs)) or np.any(xs < 0) or np.any(xs > spec.n_categories - 1):
            raise InvalidData("categorical data out of range")
    elif spec.kind == "bernoulli":
        if np.any(~_integer_mask(xs)) or np.any((np.rint(xs) != 0) & (np.rint(xs) != 1)):
            raise InvalidData("bernoulli data must be 0/1")


def posterior_hyper(spec, xs, current=None):
    """Exact conjugate update of the prior hyper state for the given data.

    For the fixed-shape Gamma the likelihood shape enters the update, so the
    current model (or the spec's fallback shape) is consulted.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    _check_support(spec, xs)
    n = xs.size
    prior = spec.prior
    if spec.kind == "gaussian":
        return prior.updated(n, float(xs.sum()), float((xs * xs).sum()))
    if spec.kind == "gamma":
        shape = current.shape if current is not None else spec.fixed_shape
        return prior.updated(n * shape, float(xs.sum()))
    if spec.kind == "exponential":
        return prior.updated(n, float(xs.sum()))
    if spec.kind == "poisson":
        return prior.updated(float(xs.sum()), n)
    if spec.kind == "geometric":
        y = xs + spec.shift
        return prior.updated(n, float(y.sum()) - n)
    if spec.kind == "categorical":
        counts = np.bincount(np.rint(xs).astype(int), minlength=spec.n_categories) if n else \
            np.zeros(spec.n_categories)
        return prior.updated(counts)
    if spec.kind == "bernoulli":
        ones = float(np.rint(xs).sum())
        return prior.updated(ones, n - ones)
    raise InvalidData(f"unknown likelihood kind {spec.kind!r}")


def sample_model(spec, hyper, rng, shape=None):
    """Draw a concrete model from a hyper state (prior or posterior)."""
    if spec.kind == "gaussian":
        var = 1.0 / rng.gamma(hyper.a, 1.0 / hyper.b)
        mu = rng.normal(hyper.m, math.sqrt(var / hyper.kappa))
        return Gaussian(float(mu), float(var))
    if spec.kind == "gamma":
        rate = rng.gamma(hyper.a, 1.0 / hyper.b)
        return GammaFixedShape(float(spec.fixed_shape if shape is None else shape), float(rate))
    if spec.kind == "exponential":
        return Exponential(float(rng.gamma(hyper.a, 1.0 / hyper.b)))
    if spec.kind == "poisson":
        return Poisson(float(rng.gamma(hyper.a, 1.0 / hyper.b)))
    if spec.kind == "geometric":
        return Geometric(float(rng.beta(hyper.a, hyper.b)), spec.shift)
    if spec.kind == "categorical":
        return Categorical(tuple(rng.dirichlet(np.asarray(hyper.alpha, dtype=float))))
    if spec.kind == "bernoulli":
        return Bernoulli(float(rng.beta(hyper.a, hyper.b)))
    raise InvalidData(f"unknown likelihood kind {spec.kind!r}")


def posterior_sample(spec, xs, rng, current=None):
    """Sample parameters from the exact conjugate posterior given data.

    Empty data falls back to a prior draw.  The Gamma kind keeps the fixed
    shape of `current` when given one (the per-leaf shape is set at sampler
    initialization and never resampled).
    """
    hyper = posterior_hyper(spec, xs, current=current)
    shape = current.shape if (current is not None and spec.kind == "gamma") else None
    return sample_model(spec, hyper, rng, shape=shape)


def mom_gamma_shape(xs, lo=0.1, hi=100.0, fallback=2.0):
    """Method-of-moments Gamma shape mean^2/var, clamped; fallback for <2 points."""
    xs = np.asarray(xs, dtype=float)
    if xs.size < 2:
        return fallback
    v = float(xs.var())
    if v <= 0:
        return fallback
    return float(min(max(xs.mean() ** 2 / v, lo), hi))


def initial_model(spec, xs, rng):
    """Initialization-time draw; fixes the Gamma shape by method of moments."""
    if spec.kind == "gamma":
        shape = mom_gamma_shape(np.asarray(xs, dtype=float))
        hyper = posterior_hyper(spec, xs, current=GammaFixedShape(shape, 1.0))
        return sample_model(spec, hyper, rng, shape=shape)
    return posterior_sample(spec, xs, rng)


def resample(spec, model, xs, rng):
    """One Gibbs update of a leaf component's parameters."""
    return posterior_sample(spec, xs, rng, current=model)


# ---------------------------------------------------------------------------
# Interval mass and dictionary construction
# ---------------------------------------------------------------------------


def interval_log_mass(model, lo, hi):
    """log P(lo <= X < hi) via CDF differences.

    Discrete supports use the integer convention [lo, hi): the mass of all
    integer support points k with lo <= k < hi.
    """
    if math.isinf(lo) and lo < 0 and math.isinf(hi) and hi > 0:
        return 0.0
    discrete = model.kind in ("poisson", "geometric", "categorical", "bernoulli")
    if discrete:
        if hi < lo:
            raise InvalidInterval(f"empty interval [{lo}, {hi})")
        upper = model.cdf(math.ceil(hi) - 1.0) if not math.isinf(hi) else 1.0
        lower = model.cdf(math.ceil(lo) - 1.0) if not math.isinf(lo) else 0.0
    else:
        if hi <= lo:
            raise InvalidInterval(f"empty interval [{lo}, {hi})")
        upper = model.cdf(hi) if not math.isinf(hi) else 1.0
        lower = model.cdf(lo) if not math.isinf(lo) else 0.0
    mass = max(float(upper) - float(lower), 0.0)
    with np.errstate(divide="ignore"):
        return float(np.log(mass))


def default_priors():
    """Default inference hyper-parameters, overridable via FitConfig."""
    return {
        "gaussian_v0": 10.0,
        "gaussian_a0": 2.0,
        "gamma_a0": 1.0,
        "gamma_b0": 1.0,
        "exponential_a0": 1.0,
        "exponential_b0": 1.0,
        "poisson_a0": 1.0,
        "poisson_b0": 1.0,
        "categorical_alpha": 1.0,
        "beta_a0": 1.0,
        "beta_b0": 1.0,
    }


def default_dictionary(meta_type, stats, priors=None):
    """Build the likelihood dictionary for one feature.

    Continuous -> {gaussian, gamma, exponential}, the positive-support kinds
    included only when the observed minimum is > 0.  Discrete -> {poisson,
    geometric, categorical(K = max+1)}, except that a {0,1}-valued column gets
    a lone Bernoulli.  Priors are weakly informative and scale-aware for the
    Gaussian (m0 = column mean, b0 = column variance).
    """
    p = dict(default_priors())
    if priors:
        p.update(priors)
    if stats.n_observed == 0:
        raise EmptyColumn("no observed cells")
    if meta_type == MetaType.CONTINUOUS:
        b0 = stats.variance if stats.variance > 0 else 1.0
        out = [KindSpec("gaussian",
                        NIGState.from_mvab(stats.mean, p["gaussian_v0"], p["gaussian_a0"], b0))]
        if stats.minimum > 0:
            out.append(KindSpec("gamma", GammaHyper(p["gamma_a0"], p["gamma_b0"])))
            out.append(KindSpec("exponential",
                                GammaHyper(p["exponential_a0"], p["exponential_b0"])))
        return out
    # discrete
    values_binary = stats.minimum >= 0 and stats.maximum <= 1
    if values_binary:
        return [KindSpec("bernoulli", BetaHyper(p["beta_a0"], p["beta_b0"]), n_categories=2)]
    if stats.minimum < 0:
        raise EmptyColumn(
            "discrete columns with negative values have no supported dictionary")
    n_cat = int(stats.maximum) + 1
    shift = 1 if stats.minimum < 1 else 0
    return [
        KindSpec("poisson", GammaHyper(p["poisson_a0"], p["poisson_b0"])),
        KindSpec("geometric", BetaHyper(p["beta_a0"], p["beta_b0"]), shift=shift),
        KindSpec("categorical",
                 DirichletHyper((p["categorical_alpha"],) * n_cat), n_categories=n_cat),
    ]


# --- serialization helpers for KindSpec ------------------------------------


def spec_to_dict(spec):
    d = {"kind": spec.kind, "shift": spec.shift, "n_categories": spec.n_categories,
         "fixed_shape": spec.fixed_shape}
    prior = spec.prior
    if isinstance(prior, NIGState):
        d["prior"] = {"type": "nig", "kappa": prior.kappa, "kappa_m": prior.kappa_m,
                      "a": prior.a, "t": prior.t}
    elif isinstance(prior, GammaHyper):
        d["prior"] = {"type": "gamma", "a": prior.a, "b": prior.b}
    elif isinstance(prior, BetaHyper):
        d["prior"] = {"type": "beta", "a": prior.a, "b": prior.b}
    elif isinstance(prior, DirichletHyper):
        d["prior"] = {"type": "dirichlet", "alpha": list(prior.alpha)}
    else:
        raise InvalidData(f"unknown prior type {type(prior)!r}")
    return d


def spec_from_dict(d):
    pd = d["prior"]
    if pd["type"] == "nig":
        prior = NIGState(pd["kappa"], pd["kappa_m"], pd["a"], pd["t"])
    elif pd["type"] == "gamma":
        prior = GammaHyper(pd["a"], pd["b"])
    elif pd["type"] == "beta":
        prior = BetaHyper(pd["a"], pd["b"])
    elif pd["type"] == "dirichlet":
        prior = DirichletHyper(tuple(pd["alpha"]))
    else:
        raise InvalidData(f"unknown prior type {pd['type']!r}")
    return KindSpec(d["kind"], prior, shift=int(d.get("shift", 0)),
                    n_categories=int(d.get("n_categories", 0)),
                    fixed_shape=float(d.get("fixed_shape", 2.0)))
