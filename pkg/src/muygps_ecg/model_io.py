"""Self-contained model files.

Layout::

    MUYGPS-ECG-MODEL\\n
    <header length in bytes, ASCII>\\n
    <JSON header, sorted keys>
    <raw little-endian arrays, in header order>

The header carries the kernel parameters (one set per binary output), the
neighbor count, class names and the training matrix/label descriptors.
Writing the same model twice gives byte-identical files.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .kernel import KernelParams

MAGIC = b"MUYGPS-ECG-MODEL\n"
FORMAT_VERSION = 1
KINDS = ("muygps", "gp", "knn")


class ModelFormatError(ValueError):
    pass


@dataclass
class StoredModel:
    kind: str
    kernels: list
    nn_count: int
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple
    positive_class: int = 0
    train_info: list = field(default_factory=list)

    @property
    def n_train(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def header(self):
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "kernel": [{"nu": p.nu, "l": p.length_scale, "noise": p.noise, "sigma2": p.sigma2}
                       for p in self.kernels],
            "nn_count": int(self.nn_count),
            "n_train": int(self.n_train),
            "n_features": int(self.n_features),
            "class_names": list(self.class_names),
            "positive_class": int(self.positive_class),
            "train_info": self.train_info,
            "arrays": [
                {"name": "features", "dtype": "<f8", "shape": list(self.features.shape)},
                {"name": "labels", "dtype": "<i8", "shape": list(self.labels.shape)},
            ],
        }


def to_bytes(model):
    if model.kind not in KINDS:
        raise ModelFormatError(f"unknown model kind {model.kind!r}")
    header = json.dumps(model.header(), sort_keys=True, separators=(",", ":")).encode()
    X = np.ascontiguousarray(model.features, dtype="<f8")
    y = np.ascontiguousarray(model.labels, dtype="<i8")
    return b"".join([MAGIC, b"%d\n" % len(header), header, X.tobytes(), y.tobytes()])


def from_bytes(blob):
    if not blob.startswith(MAGIC):
        raise ModelFormatError("not a model file (bad magic)")
    pos = len(MAGIC)
    nl = blob.find(b"\n", pos)
    try:
        hlen = int(blob[pos:nl])
        header = json.loads(blob[nl + 1: nl + 1 + hlen])
    except ValueError as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {header.get('format_version')!r}")
    pos = nl + 1 + hlen
    arrays = {}
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"]))
        nbytes = count * dt.itemsize
        if pos + nbytes > len(blob):
            raise ModelFormatError("model file truncated")
        arrays[spec["name"]] = np.frombuffer(blob, dtype=dt, count=count, offset=pos).reshape(spec["shape"]).copy()
        pos += nbytes
    if pos != len(blob):
        raise ModelFormatError("trailing bytes after model arrays")
    kernels = [KernelParams(nu=k["nu"], length_scale=k["l"], noise=k["noise"], sigma2=k["sigma2"])
               for k in header["kernel"]]
    return StoredModel(header["kind"], kernels, header["nn_count"], arrays["features"],
                       arrays["labels"], tuple(header["class_names"]), header["positive_class"],
                       header.get("train_info", []))


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(to_bytes(model))


def load_model(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def from_classifier(clf):
    """:class:`StoredModel` for a fitted :class:`~muygps_ecg.muygps.MuyGpsClassifier`."""
    return StoredModel("muygps", clf.kernel_params(), clf.nn_count, clf.index.train, clf.labels,
                       clf.class_names, clf.positive_class,
                       [m.train_info for m in clf.models])


def to_classifier(stored, threads=None):
    from .muygps import MuyGpsClassifier
    from .nn_index import NnIndex

    if stored.kind != "muygps":
        raise ModelFormatError(f"expected a muygps model, got {stored.kind!r}")
    return MuyGpsClassifier.from_parts(NnIndex(stored.features), stored.labels, stored.class_names,
                                       stored.kernels, stored.nn_count, stored.positive_class,
                                       threads=threads)
