import json
import re
from pathlib import Path

import numpy as np

BUNDLE_SCHEMA = "clusterpath.bundle/1"
_NAME = re.compile(r"^[A-Za-z0-9_.\-]+$")


def write_bundle(out_dir, layers, labels=None, predictions=None, meta=None):
    """Write `layers` (ordered name -> (N, d) array) as a bundle directory.

    Activations are stored as little-endian float32, labels and predictions as
    little-endian int64. Multi-dimensional activations are flattened per sample
    in C order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not layers:
        raise ValueError("at least one layer is required")
    n = None
    entries = []
    for i, (name, acts) in enumerate(layers.items()):
        if not _NAME.match(name):
            raise ValueError(f"layer name {name!r} must use [A-Za-z0-9_.-]")
        a = np.asarray(acts)
        a = a.reshape(a.shape[0], -1).astype("<f4")
        if not np.isfinite(a).all():
            raise ValueError(f"layer {name!r} contains non-finite values")
        if n is None:
            n = a.shape[0]
        elif a.shape[0] != n:
            raise ValueError(f"layer {name!r} has {a.shape[0]} rows, expected {n}")
        file = f"layer_{i}_{name}.npy"
        np.save(out / file, np.ascontiguousarray(a))
        entries.append({"name": name, "dim": int(a.shape[1]), "file": file})

    def ints(values, file):
        if values is None:
            return None
        v = np.asarray(values).astype("<i8").reshape(-1)
        if v.shape[0] != n:
            raise ValueError(f"{file} has {v.shape[0]} entries, expected {n}")
        np.save(out / file, v)
        return file

    manifest = {
        "schema": BUNDLE_SCHEMA,
        "n_samples": n,
        "layers": entries,
        "labels": ints(labels, "labels.npy"),
        "predictions": ints(predictions, "predictions.npy"),
        "meta": {str(k): str(v) for k, v in sorted((meta or {}).items())},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out
