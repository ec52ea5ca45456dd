"""Versioned, checksummed model persistence.

The file is JSON: {format, version, checksum, payload}. The checksum is the
SHA-256 of the canonical payload encoding (sorted keys, minimal separators),
so any corruption of the payload is detected on load. Floats go through
Python's shortest-repr encoding, which round-trips every finite double
bitwise; NaN/Infinity use the JSON-extension tokens.
"""

import dataclasses
import hashlib
import json

import numpy as np

from .errors import CorruptFile, VersionMismatch
from .gibbs import GibbsConfig, PosteriorSampleSet, Trace
from .likelihoods import (Bernoulli, BetaHyper, Categorical, DirichletHyper,
                          Exponential, GammaFixedShape, GammaHyper, Gaussian,
                          Geometric, KindSpec, MetaType, NIGState, Poisson)
from .spn import LEAF, PRODUCT, SUM, ParamSet, SpnBuilder
from .structure import StructureConfig
from .tasks import FittedModel

FORMAT_NAME = "spnmix-model"
FORMAT_VERSION = 1

_REGISTRY = {cls.__name__: cls for cls in (
    Gaussian, GammaFixedShape, Exponential, Poisson, Geometric, Categorical,
    Bernoulli, NIGState, GammaHyper, BetaHyper, DirichletHyper, KindSpec)}


def _plain(value):
    """Recursively convert to JSON-encodable builtins."""
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    raise TypeError("cannot encode %r" % (type(value),))


def _obj_doc(obj):
    if isinstance(obj, KindSpec):
        fields = {"kind": obj.kind, "prior": _obj_doc(obj.prior),
                  "shift": obj.shift, "n_categories": obj.n_categories,
                  "fixed_shape": obj.fixed_shape}
        return ["KindSpec", fields]
    fields = {f.name: _plain(getattr(obj, f.name))
              for f in dataclasses.fields(obj)}
    return [type(obj).__name__, fields]


def _doc_obj(doc):
    name, fields = doc
    if name not in _REGISTRY:
        raise CorruptFile("unknown object type %r" % name)
    if name == "KindSpec":
        fields = dict(fields)
        fields["prior"] = _doc_obj(fields["prior"])
    kw = {k: tuple(v) if isinstance(v, list) else v
          for k, v in fields.items()}
    return _REGISTRY[name](**kw)


def _spn_doc(spn):
    nodes = []
    for i in range(spn.n_nodes):
        k = int(spn.kind[i])
        if k == LEAF:
            nodes.append([k, int(spn.feat[i])])
        else:
            nodes.append([k, [int(c) for c in spn.children(i)]])
    return {"n_features": int(spn.n_features), "nodes": nodes,
            "root": int(spn.root)}


def _doc_spn(doc):
    builder = SpnBuilder(doc["n_features"])
    for kind, arg in doc["nodes"]:
        if kind == LEAF:
            builder.leaf(arg)
        elif kind == PRODUCT:
            builder.product(arg)
        elif kind == SUM:
            builder.sum(arg, np.full(len(arg), 1.0 / len(arg)))
        else:
            raise CorruptFile("unknown node kind %r" % kind)
    return builder.build(doc["root"])


def _params_doc(params):
    return {"edge_logw": _plain(params.edge_logw),
            "leaf_logw": _plain(params.leaf_logw),
            "comps": [[_obj_doc(m) for m in group] for group in params.comps]}


def _doc_params(doc):
    comps = tuple(tuple(_doc_obj(m) for m in group)
                  for group in doc["comps"])
    comp_off = np.zeros(len(comps) + 1, dtype=np.int64)
    for gl, group in enumerate(comps):
        comp_off[gl + 1] = comp_off[gl] + len(group)
    return ParamSet(edge_logw=np.asarray(doc["edge_logw"], dtype=np.float64),
                    comp_off=comp_off, comps=comps,
                    leaf_logw=np.asarray(doc["leaf_logw"], dtype=np.float64))


def _payload(model):
    samples = None
    if model.samples is not None:
        samples = {"draws": [_params_doc(p) for p in model.samples.draws],
                   "train_loglik": _plain(model.samples.train_loglik),
                   "iterations": _plain(model.samples.iterations)}
    trace = None
    if model.trace is not None:
        trace = {"mean_loglik": _plain(model.trace.mean_loglik),
                 "seconds": _plain(model.trace.seconds)}
    return {
        "spn": _spn_doc(model.spn),
        "specs": [[_obj_doc(s) for s in feature] for feature in model.specs],
        "meta_types": [mt.name for mt in model.meta_types],
        "names": list(model.names),
        "data_hash": model.data_hash,
        "structure_config": dataclasses.asdict(model.structure_config),
        "gibbs_config": dataclasses.asdict(model.gibbs_config),
        "sparsity": _plain(model.sparsity),
        "samples": samples,
        "trace": trace,
    }


def _canonical(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      allow_nan=True)


def save_model(model, path):
    canon = _canonical(_payload(model))
    doc = {"format": FORMAT_NAME, "version": FORMAT_VERSION,
           "checksum": hashlib.sha256(canon.encode("utf-8")).hexdigest(),
           "payload": json.loads(canon)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, allow_nan=True)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CorruptFile("unreadable model file: %s" % exc)
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptFile("not a model file")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise VersionMismatch("file version %r, loader supports %d"
                              % (version, FORMAT_VERSION))
    payload = doc.get("payload")
    canon = _canonical(payload)
    checksum = hashlib.sha256(canon.encode("utf-8")).hexdigest()
    if checksum != doc.get("checksum"):
        raise CorruptFile("checksum mismatch")
    try:
        return _model_from_payload(payload)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptFile("malformed payload: %s" % exc)


TRUTH_FORMAT = "spnmix-truth"


def save_truth(truth, path):
    """Ground-truth sidecar for a synthetic dataset: the generating network
    and the per-feature kind/stat-type mass vectors."""
    doc = {"format": TRUTH_FORMAT, "version": FORMAT_VERSION,
           "spn": _spn_doc(truth.spn),
           "params": _params_doc(truth.params),
           "meta_types": [mt.name for mt in truth.meta_types],
           "archetypes": list(truth.archetypes),
           "kind_weights": [dict(kw) for kw in truth.kind_weights],
           "stat_weights": [dict(sw) for sw in truth.stat_weights],
           "row_labels": _plain(truth.row_labels)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, allow_nan=True)
        fh.write("\n")


def load_truth(path):
    from .synth import GroundTruth
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CorruptFile("unreadable truth file: %s" % exc)
    if not isinstance(doc, dict) or doc.get("format") != TRUTH_FORMAT:
        raise CorruptFile("not a ground-truth file")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch("file version %r, loader supports %d"
                              % (doc.get("version"), FORMAT_VERSION))
    try:
        return GroundTruth(
            spn=_doc_spn(doc["spn"]), params=_doc_params(doc["params"]),
            meta_types=tuple(MetaType[n] for n in doc["meta_types"]),
            archetypes=tuple(doc["archetypes"]),
            kind_weights=tuple(doc["kind_weights"]),
            stat_weights=tuple(doc["stat_weights"]),
            block_of=None,
            row_labels=np.asarray(doc["row_labels"], dtype=np.int64))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptFile("malformed truth payload: %s" % exc)


def _model_from_payload(payload):
    spn = _doc_spn(payload["spn"])
    specs = tuple(tuple(_doc_obj(s) for s in feature)
                  for feature in payload["specs"])
    samples = None
    if payload["samples"] is not None:
        sd = payload["samples"]
        samples = PosteriorSampleSet(
            draws=[_doc_params(d) for d in sd["draws"]],
            train_loglik=np.asarray(sd["train_loglik"], dtype=np.float64),
            iterations=np.asarray(sd["iterations"], dtype=np.int64))
    trace = None
    if payload["trace"] is not None:
        trace = Trace(
            mean_loglik=np.asarray(payload["trace"]["mean_loglik"],
                                   dtype=np.float64),
            seconds=np.asarray(payload["trace"]["seconds"],
                               dtype=np.float64))
    return FittedModel(
        spn=spn, samples=samples, specs=specs,
        meta_types=tuple(MetaType[n] for n in payload["meta_types"]),
        names=tuple(payload["names"]),
        data_hash=payload["data_hash"],
        structure_config=StructureConfig(**payload["structure_config"]),
        gibbs_config=GibbsConfig(**payload["gibbs_config"]),
        trace=trace, sparsity=float(payload["sparsity"]))
