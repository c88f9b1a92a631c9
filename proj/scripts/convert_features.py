#!/usr/bin/env python3
"""Write a metazsl dataset directory from in-memory arrays.

The on-disk layout consumed by `metazsl validate-data` / `train` is:

    meta.json        name, feature_dim, attr_dim, classes, seen, unseen,
                     test_seen_rows, test_unseen_rows
    features.csv     row_id,label,f0..f{D-1}
    attributes.csv   class_id,a0..a{d_a-1}

`write_bundle` below produces that layout from numpy arrays. Loading the
usual benchmark feature exports (e.g. the .mat files with `features`,
`labels` and `att` arrays plus the proposed-split index files) is left to
you — shapes and conventions vary between releases. Sketch:

    import scipy.io as sio
    res = sio.loadmat("res101.mat")          # features: (2048, N), labels: (N, 1)
    att = sio.loadmat("att_splits.mat")      # att: (d_a, C), trainval_loc, test_seen_loc, ...
    x = res["features"].T                    # (N, 2048)
    labels = res["labels"].ravel() - 1       # 0-based class ids
    attrs = att["att"].T                     # (C, d_a)
    test_seen = att["test_seen_loc"].ravel() - 1
    test_unseen = att["test_unseen_loc"].ravel() - 1
    seen = sorted(set(labels) - set(labels[test_unseen]))
    unseen = sorted(set(labels[test_unseen]))
    write_bundle("data/awa2", "awa2", x, labels, attrs, seen, unseen,
                 test_seen, test_unseen)

Values are printed with 9 significant digits, matching the native writer.
"""

import argparse
import json
from pathlib import Path


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_bundle(out_dir, name, features, labels, attributes, seen, unseen,
                 test_seen_rows, test_unseen_rows):
    """Write the dataset directory. features: (N, D); attributes: (C, d_a);
    labels: length-N class ids; attribute row i belongs to class id i unless
    you pass a different `classes` order by reordering `attributes`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, d = len(features), len(features[0])
    c, da = len(attributes), len(attributes[0])

    meta = {
        "name": str(name),
        "feature_dim": int(d),
        "attr_dim": int(da),
        "classes": [int(i) for i in range(c)],
        "seen": [int(s) for s in seen],
        "unseen": [int(u) for u in unseen],
        "test_seen_rows": [int(r) for r in test_seen_rows],
        "test_unseen_rows": [int(r) for r in test_unseen_rows],
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    with open(out / "features.csv", "w") as f:
        f.write("row_id,label," + ",".join(f"f{j}" for j in range(d)) + "\n")
        for r in range(n):
            f.write(f"{r},{int(labels[r])}," +
                    ",".join(_fmt(float(v)) for v in features[r]) + "\n")

    with open(out / "attributes.csv", "w") as f:
        f.write("class_id," + ",".join(f"a{j}" for j in range(da)) + "\n")
        for i in range(c):
            f.write(f"{i}," + ",".join(_fmt(float(v)) for v in attributes[i]) + "\n")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.parse_args()
    raise SystemExit("import write_bundle and feed it your arrays; see the docstring")
