"""Backend dispatch for the hot evaluation/sampling kernels.

The compiled Cython backend is used when the extension module built, unless
SPNMIX_KERNELS forces a choice ("python" or "compiled").  Both backends share
one contract and consume caller-supplied uniforms in the same (row, slot)
layout.  Each backend is bitwise deterministic; across backends values agree
to floating-point rounding (vectorized and scalar exp/log may differ in the
last ulp), and discrete decisions fed identical node values coincide.
"""

import os

import numpy as np

from . import _kernels_py

_FORCED = os.environ.get("SPNMIX_KERNELS", "").strip().lower()

_compiled = None
if _FORCED != "python":
    try:
        from . import _kernels_cy as _compiled
    except ImportError:
        _compiled = None
        if _FORCED == "compiled":
            raise ImportError(
                "SPNMIX_KERNELS=compiled but the spnmix._kernels_cy extension "
                "is not available; rebuild the package or unset the variable"
            )

_active = _compiled if _compiled is not None else _kernels_py


def backend_name():
    """Name of the kernel backend in use: "compiled" or "python"."""
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def bottom_up(kind, ch_off, ch_ids, leaf_gl, edge_logw, leaf_vals, max_mode=False):
    return _active.bottom_up(kind, ch_off, ch_ids, leaf_gl, _c64(edge_logw),
                             _c64(leaf_vals), bool(max_mode))


def sample_trees(v, kind, ch_off, ch_ids, sum_pos, feat, slot, edge_logw, root,
                 n_feats, uniforms):
    return _active.sample_trees(_c64(v), kind, ch_off, ch_ids, sum_pos, feat,
                                slot, _c64(edge_logw), root, n_feats,
                                _c64(uniforms))


def decode_max(v, kind, ch_off, ch_ids, sum_pos, feat, slot, edge_logw, root,
               n_feats):
    return _active.decode_max(_c64(v), kind, ch_off, ch_ids, sum_pos, feat,
                              slot, _c64(edge_logw), root, n_feats)


def sample_components(comp_logp, leaf_logw, comp_off, feat_off, jmat, observed,
                      uniforms):
    if _active is _kernels_py:
        obs = np.ascontiguousarray(observed, dtype=bool)
    else:
        obs = np.ascontiguousarray(observed, dtype=bool).view(np.uint8)
    return _active.sample_components(_c64(comp_logp), _c64(leaf_logw), comp_off,
                                     feat_off, jmat, obs, _c64(uniforms))
