"""Matrix and family files.

A matrix is a headerless CSV of doubles, one row per line. A family is either
a directory of such CSVs (read in sorted filename order) or a JSON file
``{"kind": "self_adjoint" | "rectangular", "members": [[[...]]], "label": ...}``.
"""

import json
from pathlib import Path

import numpy as np

from .errors import SpecInvalid
from .linalg import MatrixFamily


def load_matrix(path):
    M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if not np.all(np.isfinite(M)):
        raise SpecInvalid(f"{path}: non-finite entries")
    return M


def save_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def family_to_dict(fam: MatrixFamily):
    return {"kind": fam.kind, "label": fam.label, "members": fam.members.tolist()}


def family_from_dict(data):
    try:
        kind = data["kind"]
        members = np.asarray(data["members"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"malformed family: {exc}") from exc
    return MatrixFamily(kind, members, data.get("label", ""))


def load_family(path, kind="self_adjoint"):
    """Read a family from a JSON file or a directory of CSVs.

    ``kind`` applies to the directory form only; JSON files carry their own.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise SpecInvalid(f"{path}: no CSV files")
        return MatrixFamily(kind, np.stack([load_matrix(f) for f in files]), path.name)
    with open(path) as fh:
        return family_from_dict(json.load(fh))


def save_family(path, fam: MatrixFamily):
    with open(path, "w") as fh:
        json.dump(family_to_dict(fam), fh)
