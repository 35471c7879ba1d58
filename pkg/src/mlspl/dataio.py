"""Multi-label dataset loading, splitting and scaling.

Labels are always stored as a ``{-1, +1}`` matrix; source files may use
``{0, 1}`` (MULAN convention), with 0 mapped to -1.
"""

from __future__ import annotations

import csv
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list = field(default_factory=list)
    label_names: list = field(default_factory=list)

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        Y = np.array(self.labels, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("features and labels must be 2-d")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"row mismatch: {X.shape[0]} feature rows, {Y.shape[0]} label rows")
        if X.shape[0] < 1:
            raise ValueError("dataset needs at least one instance")
        if X.shape[1] < 1:
            raise ValueError("dataset needs at least one feature")
        if Y.shape[1] < 2:
            raise ValueError("dataset needs at least two labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all((Y == 1) | (Y == -1)):
            raise ValueError("labels must be -1 or +1")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)
        fn = list(self.feature_names) or [f"x{j}" for j in range(X.shape[1])]
        ln = list(self.label_names) or [f"y{j}" for j in range(Y.shape[1])]
        if len(fn) != X.shape[1] or len(ln) != Y.shape[1]:
            raise ValueError("name lists do not match matrix widths")
        object.__setattr__(self, "feature_names", fn)
        object.__setattr__(self, "label_names", ln)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.labels[rows],
                       self.feature_names, self.label_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.label_names)


def _to_pm1(value, *, line=None, path=None):
    if value in (1.0, 1):
        return 1.0
    if value in (0.0, -1.0, 0, -1):
        return -1.0
    raise ParseError(f"non-binary label value {value!r}", line, path)


# ---------------------------------------------------------------------------
# ARFF
# ---------------------------------------------------------------------------

_NUMERIC_TYPES = {"numeric", "real", "integer"}


@dataclass
class _Attribute:
    name: str
    kind: str  # "numeric" or "nominal"
    values: tuple = ()


def _split_arff_values(text):
    """Split a comma separated ARFF fragment, honouring single/double quotes."""
    reader = csv.reader([text], skipinitialspace=True, quotechar="'")
    out = []
    for tok in next(reader):
        tok = tok.strip()
        if len(tok) >= 2 and tok[0] == tok[-1] == '"':
            tok = tok[1:-1]
        out.append(tok)
    return out


def _parse_attribute(rest, lineno, path):
    rest = rest.strip()
    if rest[:1] in ("'", '"'):
        q = rest[0]
        chars, end = [], 1
        while end < len(rest) and rest[end] != q:
            if rest[end] == "\\" and end + 1 < len(rest):
                end += 1
            chars.append(rest[end])
            end += 1
        if end >= len(rest):
            raise ParseError("unterminated quoted attribute name", lineno, path)
        name, tail = "".join(chars), rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) != 2:
            raise ParseError("malformed @attribute line", lineno, path)
        name, tail = parts
        if "{" in name:
            name, brace = name.split("{", 1)
            tail = "{" + brace + " " + tail
    if not tail:
        raise ParseError(f"attribute {name!r} has no type", lineno, path)
    if tail.startswith("{"):
        if not tail.rstrip().endswith("}"):
            raise ParseError(f"malformed nominal type for {name!r}", lineno, path)
        values = tuple(_split_arff_values(tail.strip()[1:-1]))
        return _Attribute(name, "nominal", values)
    tname = tail.split()[0].lower()
    if tname in _NUMERIC_TYPES:
        return _Attribute(name, "numeric")
    raise ParseError(f"unknown attribute type {tail.split()[0]!r} for {name!r}", lineno, path)


def _resolve_label_spec(names, spec, path=None):
    """Return indices of label attributes from an int count or a name list."""
    if isinstance(spec, (int, np.integer)):
        k = int(spec)
        if k < 1 or k >= len(names):
            raise ParseError(f"label count {k} invalid for {len(names)} attributes", path=path)
        return list(range(len(names) - k, len(names)))
    pos = {nm: i for i, nm in enumerate(names)}
    missing = [nm for nm in spec if nm not in pos]
    if missing:
        raise ParseError(f"label attributes not declared: {missing}", path=path)
    return [pos[nm] for nm in spec]


def read_label_names_xml(path) -> list:
    """Label names from a MULAN XML label file (hierarchy is flattened)."""
    root = ET.parse(path).getroot()
    return [el.attrib["name"] for el in root.iter() if el.tag.split("}")[-1] == "label"]


def parse_label_spec(text: str):
    """CLI helper: ``"6"`` -> 6, ``"a,b"`` -> ["a", "b"], ``"x.xml"`` -> names."""
    text = text.strip()
    if re.fullmatch(r"\d+", text):
        return int(text)
    if text.lower().endswith(".xml"):
        return read_label_names_xml(text)
    return [t.strip() for t in text.split(",") if t.strip()]


def load_arff(path, labels) -> Dataset:
    """Load a MULAN-style ARFF file.

    Parameters
    ----------
    path : str or Path
    labels : int or list of str
        Either the number of trailing attributes that are labels, or the
        explicit label attribute names.

    Numeric attributes become feature columns.  Two-valued nominal features
    become a 0/1 column, wider nominal features are one-hot encoded.
    Dense (``v1,v2,...``) and sparse (``{i v, ...}``) data lines are both
    accepted.
    """
    path = Path(path)
    attrs = []
    rows = []
    in_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if not in_data:
                low = line.lower()
                if low.startswith("@relation"):
                    continue
                if low.startswith("@attribute"):
                    attrs.append(_parse_attribute(line[len("@attribute"):], lineno, path))
                    continue
                if low.startswith("@data"):
                    if not attrs:
                        raise ParseError("@data before any @attribute", lineno, path)
                    in_data = True
                    continue
                raise ParseError(f"unexpected header line {line[:40]!r}", lineno, path)
            rows.append((lineno, line))
    if not in_data:
        raise ParseError("missing @data section", path=path)
    if not rows:
        raise ParseError("no instances in @data section", path=path)

    names = [a.name for a in attrs]
    label_idx = _resolve_label_spec(names, labels, path)
    label_set = set(label_idx)
    for j in label_idx:
        a = attrs[j]
        if a.kind == "nominal" and not set(a.values) <= {"0", "1", "-1"}:
            raise ParseError(f"label attribute {a.name!r} is not binary: {a.values}", path=path)

    table = []
    for lineno, line in rows:
        table.append(_parse_row(line, attrs, lineno, path))

    feat_cols, feat_names = [], []
    for j, a in enumerate(attrs):
        if j in label_set:
            continue
        col = [r[j] for r in table]
        if a.kind == "numeric":
            feat_cols.append(np.asarray(col, dtype=float))
            feat_names.append(a.name)
        elif len(a.values) <= 2:
            feat_cols.append(np.asarray([a.values.index(c) for c in col], dtype=float))
            feat_names.append(a.name)
        else:
            for val in a.values:
                feat_cols.append(np.asarray([c == val for c in col], dtype=float))
                feat_names.append(f"{a.name}={val}")
    if not feat_cols:
        raise ParseError("no feature attributes", path=path)

    Y = np.empty((len(table), len(label_idx)))
    for i, ((lineno, _), r) in enumerate(zip(rows, table)):
        for k, j in enumerate(label_idx):
            try:
                Y[i, k] = _to_pm1(float(r[j]), line=lineno, path=path)
            except ValueError as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(f"non-binary label value {r[j]!r}", lineno, path) from None
    return Dataset(np.column_stack(feat_cols), Y, feat_names, [names[j] for j in label_idx])


def _parse_row(line, attrs, lineno, path):
    n_attr = len(attrs)
    if line.startswith("{"):
        if not line.endswith("}"):
            raise ParseError("unterminated sparse instance", lineno, path)
        # omitted entries: 0 for numeric, first declared value for nominal
        row = [0.0 if a.kind == "numeric" else a.values[0] for a in attrs]
        body = line[1:-1].strip()
        for tok in (_split_arff_values(body) if body else []):
            parts = tok.split(None, 1)
            if len(parts) != 2:
                raise ParseError(f"malformed sparse entry {tok!r}", lineno, path)
            try:
                j = int(parts[0])
            except ValueError:
                raise ParseError(f"bad sparse index {parts[0]!r}", lineno, path) from None
            if not 0 <= j < n_attr:
                raise ParseError(f"sparse index {j} out of range", lineno, path)
            row[j] = _convert(parts[1].strip().strip("'\""), attrs[j], lineno, path)
        return row
    toks = _split_arff_values(line)
    if len(toks) != n_attr:
        raise ParseError(f"expected {n_attr} values, found {len(toks)}", lineno, path)
    return [_convert(t, a, lineno, path) for t, a in zip(toks, attrs)]


def _convert(tok, attr, lineno, path):
    if tok == "?":
        raise ParseError(f"missing value for {attr.name!r} is not supported", lineno, path)
    if attr.kind == "numeric":
        try:
            val = float(tok)
        except ValueError:
            raise ParseError(f"non-numeric value {tok!r} for {attr.name!r}", lineno, path) from None
        if not math.isfinite(val):
            raise ParseError(f"non-finite value for {attr.name!r}", lineno, path)
        return val
    if tok not in attr.values:
        raise ParseError(f"value {tok!r} not in domain of {attr.name!r}", lineno, path)
    return tok


def _arff_name(name):
    if re.fullmatch(r"[A-Za-z_][\w.\-=]*", name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def write_arff(ds: Dataset, path, relation="mlspl") -> None:
    """Write features as numeric and labels as ``{0,1}`` nominal attributes (last)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"@relation {relation}\n\n")
        for nm in ds.feature_names:
            fh.write(f"@attribute {_arff_name(nm)} numeric\n")
        for nm in ds.label_names:
            fh.write(f"@attribute {_arff_name(nm)} {{0,1}}\n")
        fh.write("\n@data\n")
        for x, y in zip(ds.features, ds.labels):
            vals = [repr(float(v)) for v in x] + ["1" if v > 0 else "0" for v in y]
            fh.write(",".join(vals) + "\n")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _read_numeric_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty file", path=path)
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise ParseError("no data rows", path=path)
    width = len(rows[0])
    out = np.empty((len(rows), width))
    first = 2 if header else 1
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ParseError(f"expected {width} columns, found {len(r)}", first + i, path)
        try:
            out[i] = [float(c) for c in r]
        except ValueError:
            raise ParseError("non-numeric value", first + i, path) from None
    return out, header


def load_csv(features_path, labels_path) -> Dataset:
    X, fnames = _read_numeric_csv(features_path)
    Yraw, lnames = _read_numeric_csv(labels_path)
    if X.shape[0] != Yraw.shape[0]:
        raise ParseError(
            f"row mismatch: {X.shape[0]} feature rows vs {Yraw.shape[0]} label rows",
            path=labels_path)
    bad = ~np.isin(Yraw, (-1.0, 0.0, 1.0))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ParseError(f"non-binary label value {Yraw[i, j]:g}", int(i) + (2 if lnames else 1),
                         labels_path)
    Y = np.where(Yraw > 0, 1.0, -1.0)
    return Dataset(X, Y, fnames or [], lnames or [])


# ---------------------------------------------------------------------------
# splitting and scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def split_indices(n: int, spec: SplitSpec):
    n_train = int(math.floor(n * spec.train_fraction + 0.5))
    if n_train < 1 or n - n_train < 1:
        raise ValueError(f"split of {n} instances at {spec.train_fraction} leaves an empty side")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(ds: Dataset, spec: SplitSpec):
    """Random train/test partition; train size is ``round(n * fraction)``."""
    tr, te = split_indices(ds.n, spec)
    return ds.subset(tr), ds.subset(te)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    @classmethod
    def identity(cls, d):
        return cls(np.zeros(d), np.ones(d))

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)  # population convention
        const = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
        return cls(np.where(const, 0.0, mean), np.where(const, 1.0, std))


def standardize(train_features, test_features):
    """Z-score both matrices with the training statistics."""
    train_features = np.asarray(train_features, dtype=float)
    test_features = np.asarray(test_features, dtype=float)
    if train_features.shape[1] != test_features.shape[1]:
        raise ValueError("train and test feature widths differ")
    sc = Scaler.fit(train_features)
    return sc.transform(train_features), sc.transform(test_features), sc
