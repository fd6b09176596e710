"""
Rotascan - Model File Parser
Trained perception bundle (MNF transform, pixel classifier, background signature) as a
versioned binary file with a JSON header, plus a human-readable manifest beside it
"""

import json
import logging
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from rotascan.errors import FileFormatError, MagicMismatchError, TruncatedStreamError, VersionMismatchError
from rotascan.models.perception import ClassifierSpec, MnfModel
from rotascan.models.scene import SpectralSignature
from rotascan.perception.pixel_classifier import PixelClassifier
from rotascan.perception.training import PerceptionBundle

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"RSCNMDL\x00"
MODEL_MAJOR = 1
MODEL_MINOR = 0
PREAMBLE = struct.Struct("<8sHHI")
ARRAY_DTYPE = "<f8"

MNF_ARRAYS = ("mean", "noise_covariance", "signal_covariance", "components", "eigenvalues")

PathLike = Union[str, Path]


def _bundle_arrays(bundle: PerceptionBundle) -> Dict[str, np.ndarray]:
    arrays = {f"mnf.{name}": getattr(bundle.mnf, name) for name in MNF_ARRAYS}
    arrays.update({f"classifier.{k}": v for k, v in bundle.classifier.state_arrays().items()})
    arrays["background.reflectance"] = bundle.background.reflectance
    arrays["background.band_centers"] = bundle.background.band_centers
    return arrays


def manifest_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.txt")


def write_model(path: PathLike, bundle: PerceptionBundle) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    classifier = bundle.classifier

    entries: List[Dict[str, object]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, array in _bundle_arrays(bundle).items():
        raw = np.ascontiguousarray(array, dtype=ARRAY_DTYPE).tobytes()
        entries.append({"name": name, "shape": list(np.shape(array)), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)

    header = {
        "spec": classifier.spec.to_dict(),
        "input_length": classifier.input_length,
        "class_ids": [int(i) for i in classifier.class_ids],
        "class_names": list(bundle.class_names),
        "train_accuracy": float(classifier.train_accuracy),
        "epochs_run": int(classifier.epochs_run),
        "mnf_retained_k": int(bundle.mnf.retained_k),
        "background_name": bundle.background.class_name,
        "dtype": ARRAY_DTYPE,
        "arrays": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with path.open("wb") as f:
        f.write(PREAMBLE.pack(MODEL_MAGIC, MODEL_MAJOR, MODEL_MINOR, len(header_bytes)))
        f.write(header_bytes)
        for chunk in chunks:
            f.write(chunk)

    lines = [
        f"rotascan model {MODEL_MAJOR}.{MODEL_MINOR}",
        f"classes: {', '.join(bundle.class_names)}",
        f"mnf: {bundle.mnf.n_bands} bands -> {bundle.mnf.retained_k} components",
        f"classifier: {json.dumps(classifier.spec.to_dict(), sort_keys=True)}",
        f"train accuracy: {classifier.train_accuracy:.6f}",
        "arrays:",
    ]
    lines += [f"  {e['name']} shape={tuple(e['shape'])} offset={e['offset']}" for e in entries]
    manifest_path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"✅ Model written to {path} ({len(entries)} arrays, {offset} payload bytes)")
    return path


def _read_header(raw: bytes, path: Path) -> Tuple[dict, int]:
    if len(raw) < PREAMBLE.size:
        raise TruncatedStreamError(f"model file {path.name} shorter than its preamble", len(raw))
    magic, major, minor, header_length = PREAMBLE.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise MagicMismatchError(f"{path.name} is not a rotascan model file (magic {magic!r})")
    if major > MODEL_MAJOR:
        raise VersionMismatchError(f"model format {major}.{minor} is newer than supported {MODEL_MAJOR}.x")
    end = PREAMBLE.size + header_length
    if len(raw) < end:
        raise TruncatedStreamError(f"model file {path.name} ends inside its header", len(raw))
    try:
        header = json.loads(raw[PREAMBLE.size:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FileFormatError(f"model file {path.name} has a malformed header: {e}") from e
    return header, end


def read_model(path: PathLike) -> PerceptionBundle:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"model file not found: {path}")
    raw = path.read_bytes()
    header, payload_start = _read_header(raw, path)

    arrays: Dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        start = payload_start + entry["offset"]
        stop = start + entry["nbytes"]
        if stop > len(raw):
            raise TruncatedStreamError(f"model file {path.name} ends inside array '{entry['name']}'", len(raw))
        arrays[entry["name"]] = np.frombuffer(raw[start:stop], dtype=header["dtype"]).reshape(entry["shape"]).copy()

    mnf = MnfModel(**{name: arrays[f"mnf.{name}"] for name in MNF_ARRAYS}, retained_k=header["mnf_retained_k"])
    spec = ClassifierSpec.from_dict(header["spec"])
    classifier = PixelClassifier(spec, header["input_length"], header["class_ids"], header["class_names"])
    prefix = "classifier."
    classifier.load_state_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
    classifier.train_accuracy = header["train_accuracy"]
    classifier.epochs_run = header["epochs_run"]
    background = SpectralSignature(header["background_name"], arrays["background.reflectance"],
                                   arrays["background.band_centers"])
    logger.info(f"📊 Loaded model {path.name}: {len(header['class_names'])} classes, "
                f"{mnf.retained_k}/{mnf.n_bands} MNF components")
    return PerceptionBundle(mnf=mnf, classifier=classifier, background=background,
                            class_names=list(header["class_names"]))
