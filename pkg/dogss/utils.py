import hashlib
import json
import logging
import math
import numbers
from typing import Any

import numpy as np

log = logging.getLogger("dogss")


def require(name, field, data_type):
    """Require that the named `field` has the right `data_type`"""
    if not isinstance(field, data_type):
        msg = "{0} must have {1}, got: {2}".format(name, data_type, field)
        raise AssertionError(msg)


def derive_seed(seed, index):
    """Seed of the `index`-th sub-stream of a run seeded with `seed`.

    Sub-streams are plain offsets (seed + index) so that replicate seeds can be read off a manifest by hand.
    """
    return int(seed) + int(index)


def file_digest(path):
    """Hex sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def clean(item):
    if isinstance(item, np.ndarray):
        return _clean_list(item.tolist())
    if isinstance(item, np.bool_):
        return bool(item)
    if isinstance(item, np.integer):
        return int(item)
    if isinstance(item, (float, np.floating)):
        # JSON has no NaN; undefined metrics are written as null
        return float(item) if math.isfinite(item) else None
    elif isinstance(item, (str, bool, numbers.Number, type(None))):
        return item
    elif isinstance(item, (set, frozenset)):
        return _clean_list(sorted(item))
    elif isinstance(item, (list, tuple)):
        return _clean_list(item)
    elif isinstance(item, dict):
        return _clean_dict(item)
    else:
        log.warning("Cannot serialize value %r of type %s, dropping it.", item, type(item))
        return None


def _clean_list(list_):
    return [clean(item) for item in list_]


def _clean_dict(dict_):
    data = {}
    for k, v in dict_.items():
        try:
            data[str(k)] = clean(v)
        except TypeError:
            log.warning(
                'Dictionary values must be serializeable to JSON "%s" value %s of type %s is unsupported.',
                k,
                v,
                type(v),
            )
    return data


def dumps(payload):
    """Deterministic JSON text: sorted keys, repr-precision floats, trailing newline."""
    return json.dumps(clean(payload), cls=NumpySerializer, sort_keys=True, indent=2) + "\n"


class NumpySerializer(json.JSONEncoder):
    def default(self, obj: Any):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()

        return json.JSONEncoder.default(self, obj)
