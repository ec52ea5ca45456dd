"""Tabular dataset container and the CSV dialect.

Columns are declared `name:C` (continuous) or `name:D` (discrete) in the
header; cells are numbers, empty, or `?` for missing.  Lines starting with
`#` are comments (used for provenance).  Everything is stored as float64
with NaN marking missing cells; discrete columns must hold integral values.
"""

import hashlib
import io

import numpy as np

from .errors import InvalidData, MixedTypeColumn, ParseError
from .likelihoods import FeatureStats, MetaType

_META_CODES = {"C": MetaType.CONTINUOUS, "D": MetaType.DISCRETE}
_CODE_OF = {MetaType.CONTINUOUS: "C", MetaType.DISCRETE: "D"}


class Dataset:
    """N x D table with per-feature names and meta-types."""

    def __init__(self, values, meta_types, names=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidData("dataset values must be 2-D")
        self.values = values
        self.meta_types = tuple(meta_types)
        if len(self.meta_types) != values.shape[1]:
            raise InvalidData("one meta-type per column required")
        if names is None:
            names = tuple("x%d" % d for d in range(values.shape[1]))
        self.names = tuple(str(n) for n in names)
        if len(self.names) != values.shape[1]:
            raise InvalidData("one name per column required")
        obs = ~np.isnan(values)
        if np.any(np.isinf(values[obs])):
            raise InvalidData("observed cells must be finite")
        for d, mt in enumerate(self.meta_types):
            if mt is MetaType.DISCRETE:
                col = values[obs[:, d], d]
                if col.size and np.any(col != np.floor(col)):
                    raise MixedTypeColumn(
                        "discrete column %r holds non-integer values"
                        % (self.names[d],))

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def observed(self):
        return ~np.isnan(self.values)

    def column(self, d):
        return self.values[:, d]

    def feature_stats(self, d):
        col = self.values[:, d]
        return FeatureStats.from_column(col, ~np.isnan(col))

    def ranges(self):
        """Observed (min, max) per feature; NaN pair if nothing observed."""
        out = []
        obs = self.observed
        for d in range(self.n_features):
            col = self.values[obs[:, d], d]
            if col.size == 0:
                out.append((np.nan, np.nan))
            else:
                out.append((float(col.min()), float(col.max())))
        return out

    def replace_values(self, values):
        return Dataset(values, self.meta_types, self.names)

    def take_rows(self, idx):
        return Dataset(self.values[idx], self.meta_types, self.names)

    # ------------------------------------------------------------------

    def to_csv_text(self, comments=()):
        buf = io.StringIO()
        for c in comments:
            buf.write("# %s\n" % c)
        buf.write(",".join("%s:%s" % (n, _CODE_OF[mt])
                           for n, mt in zip(self.names, self.meta_types)))
        buf.write("\n")
        for row in self.values:
            cells = []
            for d, v in enumerate(row):
                if np.isnan(v):
                    cells.append("?")
                elif self.meta_types[d] is MetaType.DISCRETE:
                    cells.append(str(int(v)))
                else:
                    cells.append(repr(float(v)))
            buf.write(",".join(cells))
            buf.write("\n")
        return buf.getvalue()

    def content_hash(self):
        """Hash of the canonical (comment-free) CSV serialization."""
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()


def save_csv(path, dataset, comments=()):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset.to_csv_text(comments))


def _parse_header(fields, schema, line_no):
    names, metas = [], []
    for col, raw in enumerate(fields):
        tok = raw.strip()
        if ":" in tok:
            name, _, code = tok.rpartition(":")
            code = code.strip().upper()
            if not name or code not in _META_CODES:
                raise ParseError(line_no, col,
                                 "header field %r is not name:C or name:D" % tok)
            names.append(name.strip())
            metas.append(_META_CODES[code])
        elif schema is not None:
            names.append(tok)
            metas.append(None)
        else:
            raise ParseError(line_no, col,
                             "header field %r lacks a :C/:D meta-type "
                             "and no schema was given" % tok)
    if schema is not None:
        schema = list(schema)
        if len(schema) != len(names):
            raise ParseError(line_no, 0, "schema length != column count")
        for col, s in enumerate(schema):
            if metas[col] is None:
                code = s.upper() if isinstance(s, str) else s
                if isinstance(code, str):
                    if code not in _META_CODES:
                        raise ParseError(line_no, col,
                                         "schema code %r is not C or D" % s)
                    metas[col] = _META_CODES[code]
                else:
                    metas[col] = code
    return names, metas


def load_csv(path, schema=None):
    """Read the CSV dialect.  `schema` optionally supplies meta-types
    ("C"/"D" per column) for headers with bare names."""
    names = None
    metas = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split(",")
            if names is None:
                names, metas = _parse_header(fields, schema, line_no)
                continue
            if len(fields) != len(names):
                raise ParseError(line_no, 0,
                                 "expected %d cells, found %d"
                                 % (len(names), len(fields)))
            row = np.empty(len(names))
            for col, raw in enumerate(fields):
                tok = raw.strip()
                if tok == "" or tok == "?":
                    row[col] = np.nan
                    continue
                try:
                    v = float(tok)
                except ValueError:
                    raise ParseError(line_no, col,
                                     "cell %r is not a number" % tok) from None
                if not np.isfinite(v):
                    raise ParseError(line_no, col, "cell %r is not finite" % tok)
                if metas[col] is MetaType.DISCRETE and v != np.floor(v):
                    raise MixedTypeColumn(
                        "line %d, column %d (%s): %r is not an integer"
                        % (line_no, col, names[col], tok))
                row[col] = v
            rows.append(row)
    if names is None:
        raise ParseError(0, 0, "file has no header row")
    values = np.array(rows) if rows else np.empty((0, len(names)))
    return Dataset(values, metas, names)
