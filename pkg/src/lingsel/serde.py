"""Model persistence: one JSON document per trained model.

Every model file carries a "type" key ("ocsvm", "iforest", "dsvdd") that
load_model dispatches on. Float arrays are embedded as base64 of their
little-endian float64 row-major bytes; scalar floats ride as JSON numbers
(repr round-trips exactly). Files written by save_model are byte-stable:
same model object, same bytes.
"""

import base64
import binascii
import json

import numpy as np

from .dsvdd import DsvddConfig, DsvddModel, EncoderNet, encoder_lengths
from .errors import DataError
from .iforest import IForestModel, IsolationTree
from .ocsvm import OcSvmModel


def encode_f64(arr):
    """Base64 of little-endian float64 row-major bytes."""
    data = np.ascontiguousarray(arr, dtype="<f8")
    return base64.b64encode(data.tobytes()).decode("ascii")


def decode_f64(text, count=None):
    """Inverse of encode_f64; validates the element count when given."""
    try:
        raw = base64.b64decode(text, validate=True)
    except (binascii.Error, TypeError, ValueError):
        raise DataError("invalid base64 array payload") from None
    if len(raw) % 8 != 0:
        raise DataError(f"array payload of {len(raw)} bytes is not float64-aligned")
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if count is not None and arr.size != count:
        raise DataError(f"array payload has {arr.size} values, expected {count}")
    return arr


def _require(obj, key, what):
    if key not in obj:
        raise DataError(f"{what}: missing key {key!r}")
    return obj[key]


def _ocsvm_to_obj(model):
    return {
        "type": "ocsvm",
        "gamma": float(model.gamma),
        "rho": float(model.rho),
        "alphas": [float(a) for a in model.alphas],
        "support_vectors": encode_f64(model.support_vectors),
        "dim": int(model.dim),
        "converged": bool(model.converged),
        "nu": float(model.nu),
        "tol": float(model.tol),
        "normalized": bool(model.normalized),
    }


def _ocsvm_from_obj(obj):
    what = "ocsvm model"
    dim = int(_require(obj, "dim", what))
    alphas = np.asarray(_require(obj, "alphas", what), dtype=np.float64)
    n_sv = int(np.count_nonzero(alphas > 0.0))
    sv = decode_f64(_require(obj, "support_vectors", what), n_sv * dim)
    model = OcSvmModel(
        alphas=alphas,
        rho=float(_require(obj, "rho", what)),
        gamma=float(_require(obj, "gamma", what)),
        support_vectors=sv.reshape(n_sv, dim),
        dim=dim,
        nu=float(_require(obj, "nu", what)),
        converged=bool(_require(obj, "converged", what)),
        tol=float(obj.get("tol", 1e-6)),
        normalized=bool(obj.get("normalized", False)),
    )
    return model


def _iforest_to_obj(model):
    trees = []
    for tree in model.trees:
        trees.append(
            {
                "split_dim": tree.split_dim.tolist(),
                "split_val": tree.split_val.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "size": tree.size.tolist(),
            }
        )
    return {
        "type": "iforest",
        "dim": int(model.dim),
        "psi": int(model.psi),
        "height_limit": int(model.height_limit),
        "n_trees": int(model.n_trees),
        "seed": int(model.seed),
        "normalized": bool(model.normalized),
        "trees": trees,
    }


def _iforest_from_obj(obj):
    what = "iforest model"
    raw_trees = _require(obj, "trees", what)
    trees = []
    for idx, entry in enumerate(raw_trees):
        try:
            tree = IsolationTree(
                np.asarray(entry["split_dim"], dtype=np.int32),
                np.asarray(entry["split_val"], dtype=np.float64),
                np.asarray(entry["left"], dtype=np.int32),
                np.asarray(entry["right"], dtype=np.int32),
                np.asarray(entry["size"], dtype=np.int32),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{what}: tree {idx} is malformed ({exc})") from None
        trees.append(tree)
    model = IForestModel(
        trees=trees,
        psi=int(_require(obj, "psi", what)),
        height_limit=int(_require(obj, "height_limit", what)),
        dim=int(_require(obj, "dim", what)),
        n_trees=int(_require(obj, "n_trees", what)),
        seed=int(_require(obj, "seed", what)),
        normalized=bool(obj.get("normalized", False)),
    )
    if model.n_trees != len(trees):
        raise DataError(
            f"{what}: n_trees={model.n_trees} but {len(trees)} trees present"
        )
    return model


def _dsvdd_to_obj(model):
    enc = model.encoder
    cfg = model.config
    layers = {}
    for name, arr in (
        ("conv1", enc.conv1.w),
        ("conv2", enc.conv2.w),
        ("dense", enc.dense.w),
    ):
        layers[name] = {"shape": list(arr.shape), "data": encode_f64(arr)}
    return {
        "type": "dsvdd",
        "dim": int(enc.dim),
        "latent_dim": int(enc.latent_dim),
        "normalized": bool(model.normalized),
        "config": {
            "ae_epochs": cfg.ae_epochs,
            "ae_lr": cfg.ae_lr,
            "enc_epochs": cfg.enc_epochs,
            "enc_lr": cfg.enc_lr,
            "weight_decay": cfg.weight_decay,
            "batch_size": cfg.batch_size,
            "latent_dim": cfg.latent_dim,
            "seed": cfg.seed,
        },
        "layers": layers,
        "center": encode_f64(model.center),
        "train_distances": encode_f64(model.train_distances),
        "train_summary": {
            "initial_mean_distance": float(model.initial_mean_distance),
            "final_mean_distance": float(model.final_mean_distance),
            "contracted": bool(model.contracted),
        },
    }


def _dsvdd_from_obj(obj):
    what = "dsvdd model"
    dim = int(_require(obj, "dim", what))
    latent = int(_require(obj, "latent_dim", what))
    layers = _require(obj, "layers", what)
    weights = {}
    for name in ("conv1", "conv2", "dense"):
        if name not in layers:
            raise DataError(f"{what}: missing layer {name!r}")
        entry = layers[name]
        shape = tuple(int(s) for s in _require(entry, "shape", f"layer {name}"))
        count = 1
        for s in shape:
            count *= s
        weights[name] = decode_f64(
            _require(entry, "data", f"layer {name}"), count
        ).reshape(shape)
    encoder = EncoderNet(dim, latent, weights["conv1"], weights["conv2"], weights["dense"])
    center = decode_f64(_require(obj, "center", what), latent)
    center.flags.writeable = False
    cfg_obj = _require(obj, "config", what)
    try:
        config = DsvddConfig(**cfg_obj)
    except TypeError as exc:
        raise DataError(f"{what}: bad config block ({exc})") from None
    summary = _require(obj, "train_summary", what)
    distances = decode_f64(_require(obj, "train_distances", what))
    return DsvddModel(
        encoder=encoder,
        center=center,
        config=config,
        train_distances=distances,
        initial_mean_distance=float(
            _require(summary, "initial_mean_distance", what)
        ),
        final_mean_distance=float(_require(summary, "final_mean_distance", what)),
        contracted=bool(_require(summary, "contracted", what)),
        normalized=bool(obj.get("normalized", False)),
    )


def model_to_obj(model):
    if isinstance(model, OcSvmModel):
        return _ocsvm_to_obj(model)
    if isinstance(model, IForestModel):
        return _iforest_to_obj(model)
    if isinstance(model, DsvddModel):
        return _dsvdd_to_obj(model)
    raise DataError(f"cannot serialize object of type {type(model).__name__}")


def model_from_obj(obj):
    if not isinstance(obj, dict):
        raise DataError("model document must be a JSON object")
    kind = obj.get("type")
    if kind == "ocsvm":
        return _ocsvm_from_obj(obj)
    if kind == "iforest":
        return _iforest_from_obj(obj)
    if kind == "dsvdd":
        return _dsvdd_from_obj(obj)
    raise DataError(f"unknown model type {kind!r}")


def save_model(model, path):
    """Write a model as one compact JSON document (plus trailing newline)."""
    text = json.dumps(model_to_obj(model), separators=(",", ":"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def load_model(path):
    """Read any model file back; dispatches on its "type" key."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON ({exc.msg})") from None
    return model_from_obj(obj)
