"""CSV and JSON files read and written by the command line tools."""
import json
import logging

import numpy as np
import pandas as pd

from dogss.model import DimensionError, Grouping, ParseError
from dogss.utils import dumps, file_digest
from dogss.version import VERSION

log = logging.getLogger("dogss")

SCHEMA_VERSION = 1


def read_table(path):
    try:
        return pd.read_csv(path)
    except FileNotFoundError:
        raise ParseError("no such file: {0}".format(path))
    except OSError as e:
        raise ParseError("cannot read {0}: {1}".format(path, e.strerror or e))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError("cannot parse {0}: {1}".format(path, e))


def _numeric(frame, path):
    try:
        values = frame.to_numpy(dtype=float)
    except (TypeError, ValueError):
        raise ParseError("{0} holds non-numeric values".format(path))
    if not np.all(np.isfinite(values)):
        raise ParseError("{0} holds missing or non-finite values".format(path))
    return values


def read_regression(path, response="y"):
    """(X, y, feature names) from a CSV with one column per feature plus the response column."""
    frame = read_table(path)
    if response not in frame.columns:
        raise ParseError("{0} has no response column {1!r}".format(path, response))
    features = [str(c) for c in frame.columns if c != response]
    if not features:
        raise ParseError("{0} has no feature columns".format(path))
    X = _numeric(frame[features], path)
    y = _numeric(frame[[response]], path)[:, 0]
    return X, y, features


def read_matrix(path):
    """A purely numeric CSV as a matrix plus its column names."""
    frame = read_table(path)
    return _numeric(frame, path), [str(c) for c in frame.columns]


def read_grouping(path, feature_names):
    """Grouping of `feature_names` from a CSV with columns feature, group."""
    frame = read_table(path)
    for column in ("feature", "group"):
        if column not in frame.columns:
            raise ParseError("{0} has no {1!r} column".format(path, column))
    if len(frame) != len(feature_names):
        raise DimensionError("{0} groups {1} features, the data has {2}".format(path, len(frame), len(feature_names)))
    labels = dict(zip(frame["feature"].astype(str), frame["group"].tolist()))
    missing = [name for name in feature_names if name not in labels]
    if missing:
        raise ParseError("{0} does not group features {1}".format(path, ", ".join(missing[:5])))
    return Grouping.from_labels([labels[name] for name in feature_names])


def write_grouping(path, feature_names, grouping: Grouping):
    labels = [grouping.labels[g] for g in grouping.assignments]
    pd.DataFrame({"feature": list(feature_names), "group": labels}).to_csv(path, index=False)


def write_regression(path, X, y, feature_names, response="y"):
    frame = pd.DataFrame(np.asarray(X), columns=list(feature_names))
    frame[response] = np.asarray(y)
    frame.to_csv(path, index=False)


def write_matrix(path, X, names):
    pd.DataFrame(np.asarray(X), columns=list(names)).to_csv(path, index=False)


def read_edges(path):
    """Undirected edges (a < b) from a CSV with columns node_a, node_b."""
    frame = read_table(path)
    for column in ("node_a", "node_b"):
        if column not in frame.columns:
            raise ParseError("{0} has no {1!r} column".format(path, column))
    try:
        pairs = zip(frame["node_a"].astype(int), frame["node_b"].astype(int))
        return {(min(a, b), max(a, b)) for a, b in pairs}
    except (TypeError, ValueError):
        raise ParseError("{0} holds non-integer node indices".format(path))


def write_edges(path, edges):
    pd.DataFrame(sorted(edges), columns=["node_a", "node_b"]).to_csv(path, index=False)


def read_ranking(path):
    frame = read_table(path)
    for column in ("node_a", "node_b", "score"):
        if column not in frame.columns:
            raise ParseError("{0} has no {1!r} column".format(path, column))
    return list(zip(frame["node_a"].astype(int), frame["node_b"].astype(int), frame["score"].astype(float)))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ParseError("no such file: {0}".format(path))
    except OSError as e:
        raise ParseError("cannot read {0}: {1}".format(path, e.strerror or e))
    except ValueError as e:
        raise ParseError("cannot parse {0}: {1}".format(path, e))


def write_json(path, payload):
    with open(path, "w") as fh:
        fh.write(dumps(payload))


def manifest(command, config, inputs=(), **extra):
    """Replayable record of a run: the parsed configuration and a content hash of every input file."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "dogss_version": VERSION,
        "command": command,
        "config": config,
        "inputs": {path: file_digest(path) for path in inputs if path},
    }
    payload.update(extra)
    return payload
