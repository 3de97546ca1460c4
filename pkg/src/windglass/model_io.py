"""Versioned model persistence.

Every forecaster serializes to a self-describing JSON document with a
``format_version``, a ``kind`` tag, its lookup tables or coefficients in
full-precision decimal, and a SHA-256 integrity checksum over the
payload. Loading verifies the checksum and rejects unknown versions, so
a truncated or tampered file fails loudly instead of predicting garbage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict

import numpy as np

from .baselines import LinearModel, PersistenceModel, RTBaseline
from .data import BinningMap, NormParams
from .glassbox import GlassBoxModel, PairShapeFunction, ShapeFunction, TrainConfig
from .trees import RegressionTree, TreeNode, TreeParams

__all__ = ["save_model", "load_model", "ModelFormatError", "FORMAT_VERSION"]

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable, tampered, or unsupported model files."""


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def _norm_to_doc(p: NormParams | None):
    if p is None:
        return None
    return {
        "feature_min": p.feature_min.tolist(),
        "feature_max": p.feature_max.tolist(),
        "target_min": p.target_min,
        "target_max": p.target_max,
    }


def _norm_from_doc(d) -> NormParams | None:
    if d is None:
        return None
    return NormParams(
        feature_min=np.asarray(d["feature_min"], dtype=np.float64),
        feature_max=np.asarray(d["feature_max"], dtype=np.float64),
        target_min=float(d["target_min"]),
        target_max=float(d["target_max"]),
    )


def _bins_to_doc(b: BinningMap):
    """Flat binning fields, spliced into the document top level."""
    return {
        "bin_edges": [e.tolist() for e in b.edges],
        "bin_vmin": b.vmin.tolist(),
        "bin_vmax": b.vmax.tolist(),
        "bin_populations": [p.tolist() for p in b.populations],
        "max_bins": b.max_bins,
    }


def _bins_from_doc(d) -> BinningMap:
    return BinningMap(
        edges=tuple(np.asarray(e, dtype=np.float64) for e in d["bin_edges"]),
        vmin=np.asarray(d["bin_vmin"], dtype=np.float64),
        vmax=np.asarray(d["bin_vmax"], dtype=np.float64),
        populations=tuple(np.asarray(p, dtype=np.int64)
                          for p in d["bin_populations"]),
        max_bins=int(d["max_bins"]),
    )


def _tree_to_doc(t: RegressionTree):
    return {
        "feature": [nd.feature for nd in t.nodes],
        "threshold": [nd.threshold for nd in t.nodes],
        "left": [nd.left for nd in t.nodes],
        "right": [nd.right for nd in t.nodes],
        "value": [nd.value for nd in t.nodes],
        "count": [nd.count for nd in t.nodes],
        "params": asdict(t.params),
    }


def _tree_from_doc(d) -> RegressionTree:
    nodes = tuple(
        TreeNode(int(f), int(t), int(l), int(r), float(v), int(c))
        for f, t, l, r, v, c in zip(d["feature"], d["threshold"], d["left"],
                                    d["right"], d["value"], d["count"])
    )
    return RegressionTree(nodes=nodes, params=TreeParams(**d["params"]))


# ---------------------------------------------------------------------------
# Kind-specific payloads
# ---------------------------------------------------------------------------

def _glassbox_doc(m: GlassBoxModel) -> dict:
    return {
        "kind": "glassbox",
        "metadata": {
            "config": asdict(m.config),
            "rounds_main": m.rounds_main,
            "rounds_pairs": m.rounds_pairs,
            "val_curve_main": list(m.val_curve_main),
            "val_curve_pairs": list(m.val_curve_pairs),
        },
        "intercept": m.intercept,
        "feature_names": list(m.feature_names),
        "normalization": _norm_to_doc(m.norm_params),
        **_bins_to_doc(m.bins),
        "shape_functions": [
            {"feature": sf.feature, "values": sf.values.tolist()} for sf in m.shapes
        ],
        "pair_terms": [
            {"i": pt.i, "j": pt.j, "grid": pt.grid.tolist()} for pt in m.pairs
        ],
        "coarse_maps": {str(f): cm.tolist() for f, cm in m.coarse_maps.items()},
    }


def _glassbox_from(doc) -> GlassBoxModel:
    meta = doc["metadata"]
    return GlassBoxModel(
        intercept=float(doc["intercept"]),
        shapes=tuple(
            ShapeFunction(int(s["feature"]), np.asarray(s["values"], dtype=np.float64))
            for s in doc["shape_functions"]
        ),
        pairs=tuple(
            PairShapeFunction(int(p["i"]), int(p["j"]),
                              np.asarray(p["grid"], dtype=np.float64))
            for p in doc["pair_terms"]
        ),
        coarse_maps={
            int(f): np.asarray(cm, dtype=np.int64)
            for f, cm in doc["coarse_maps"].items()
        },
        bins=_bins_from_doc(doc),
        feature_names=tuple(doc["feature_names"]),
        norm_params=_norm_from_doc(doc["normalization"]),
        config=TrainConfig(**meta["config"]),
        rounds_main=int(meta["rounds_main"]),
        rounds_pairs=int(meta["rounds_pairs"]),
        val_curve_main=tuple(meta["val_curve_main"]),
        val_curve_pairs=tuple(meta["val_curve_pairs"]),
    )


def _linear_doc(m: LinearModel) -> dict:
    return {
        "kind": "linear",
        "metadata": {},
        "intercept": m.intercept,
        "weights": m.weights.tolist(),
        "feature_names": list(m.feature_names),
        "normalization": _norm_to_doc(m.norm_params),
    }


def _linear_from(doc) -> LinearModel:
    return LinearModel(
        intercept=float(doc["intercept"]),
        weights=np.asarray(doc["weights"], dtype=np.float64),
        feature_names=tuple(doc["feature_names"]),
        norm_params=_norm_from_doc(doc["normalization"]),
    )


def _persistence_doc(m: PersistenceModel) -> dict:
    return {
        "kind": "persistence",
        "metadata": {},
        "lag_column": m.lag_column,
        "feature_names": list(m.feature_names),
        "normalization": _norm_to_doc(m.norm_params),
    }


def _persistence_from(doc) -> PersistenceModel:
    return PersistenceModel(
        lag_column=int(doc["lag_column"]),
        feature_names=tuple(doc["feature_names"]),
        norm_params=_norm_from_doc(doc["normalization"]),
    )


def _rt_doc(m: RTBaseline) -> dict:
    return {
        "kind": "rt",
        "metadata": {},
        "tree": _tree_to_doc(m.tree),
        **_bins_to_doc(m.bins),
        "feature_names": list(m.feature_names),
        "normalization": _norm_to_doc(m.norm_params),
    }


def _rt_from(doc) -> RTBaseline:
    return RTBaseline(
        tree=_tree_from_doc(doc["tree"]),
        bins=_bins_from_doc(doc),
        feature_names=tuple(doc["feature_names"]),
        norm_params=_norm_from_doc(doc["normalization"]),
    )


_WRITERS = [
    (GlassBoxModel, _glassbox_doc),
    (LinearModel, _linear_doc),
    (PersistenceModel, _persistence_doc),
    (RTBaseline, _rt_doc),
]
_READERS = {
    "glassbox": _glassbox_from,
    "linear": _linear_from,
    "persistence": _persistence_from,
    "rt": _rt_from,
}


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def _checksum(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def save_model(model, path) -> None:
    """Write any supported forecaster to a versioned model file."""
    doc = None
    for cls, writer in _WRITERS:
        if isinstance(model, cls):
            doc = writer(model)
            break
    if doc is None:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    doc["format_version"] = FORMAT_VERSION
    doc["checksum"] = _checksum({k: v for k, v in doc.items() if k != "checksum"})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Read a model file back; predictions round-trip bit-identically.

    Raises :class:`ModelFormatError` for corrupt files, checksum
    mismatches, unsupported versions, and unknown model kinds.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {path} ({exc})") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file: {path} ({exc})") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"corrupt model file: {path} (no format_version)")
    version = doc["format_version"]
    if not isinstance(version, int) or version < 1 or version > FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version!r} "
            f"(this build reads up to {FORMAT_VERSION})"
        )
    stored = doc.pop("checksum", None)
    if stored != _checksum(doc):
        raise ModelFormatError(f"model file checksum mismatch: {path}")
    kind = doc.get("kind")
    reader = _READERS.get(kind)
    if reader is None:
        raise ModelFormatError(f"unknown model kind {kind!r} in {path}")
    return reader(doc)
