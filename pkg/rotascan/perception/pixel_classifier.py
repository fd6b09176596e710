"""
Rotascan - Pixel Classifier
Stage one of recognition: a small 1-D convolutional network over MNF-reduced spectra
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from rotascan.errors import SpectralModelError
from rotascan.models.cube import HyperspectralCube
from rotascan.models.perception import ClassifierSpec, MnfModel, PixelLabelMap, SegmentationMask
from rotascan.perception.layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Flatten,
    Layer,
    MaxPool1d,
    ReLU,
    cross_entropy,
    softmax,
)
from rotascan.perception.mnf import mnf_transform

logger = logging.getLogger(__name__)

_INFERENCE_BATCH = 4096

MaskLike = Union[np.ndarray, SegmentationMask, Sequence[SegmentationMask]]


class PixelClassifier:
    """
    PIXEL CLASSIFIER
    - inputs are standardised with the training mean/std before the network
    - output index i predicts class_ids[i]
    - forward in inference mode is read-only and deterministic
    """

    def __init__(self, spec: ClassifierSpec, input_length: int, class_ids: Sequence[int],
                 class_names: Optional[Sequence[str]] = None, rng: Optional[np.random.Generator] = None):
        spec.validate_input(input_length)
        if len(class_ids) != spec.class_count:
            raise SpectralModelError(f"spec declares {spec.class_count} classes, got {len(class_ids)} class ids")
        self.spec = spec
        self.input_length = int(input_length)
        self.class_ids = np.asarray(class_ids, dtype=np.int64)
        self.class_names: List[str] = list(class_names) if class_names is not None else []
        self.input_mean = np.zeros(self.input_length)
        self.input_std = np.ones(self.input_length)
        self.train_accuracy = 0.0
        self.epochs_run = 0
        self.layers = self._build(rng if rng is not None else np.random.default_rng(spec.seed))

    def _build(self, rng: np.random.Generator) -> List[Layer]:
        layers: List[Layer] = []
        channels = 1
        for block in self.spec.blocks:
            layers.append(Conv1d(channels, block.channels, block.kernel_size, rng))
            layers.append(MaxPool1d(block.pool_stride))
            layers.append(ReLU())
            layers.append(BatchNorm1d(block.channels, self.spec.bn_epsilon, self.spec.bn_momentum))
            channels = block.channels
        layers.append(Flatten())
        width = self.spec.flattened_length(self.input_length)
        for hidden in self.spec.hidden_widths:
            layers.append(Dense(width, hidden, rng))
            layers.append(ReLU())
            width = hidden
        layers.append(Dense(width, self.spec.class_count, rng))
        return layers

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_length:
            raise SpectralModelError(f"classifier expects spectra of length {self.input_length}, got shape {x.shape}")
        return (x - self.input_mean) / self.input_std

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Logits for a batch of reduced spectra (B x input_length)"""
        out = self._standardize(x)[:, None, :]
        for layer in self.layers:
            out = layer.forward(out, training)
        return out

    def backward(self, dlogits: np.ndarray) -> None:
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def sgd_step(self, learning_rate: float) -> None:
        for layer in self.layers:
            for name, grad in layer.grads.items():
                layer.params[name] -= learning_rate * grad

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] == 0:
            return np.zeros((0, self.spec.class_count))
        parts = [softmax(self.forward(x[i:i + _INFERENCE_BATCH])) for i in range(0, x.shape[0], _INFERENCE_BATCH)]
        return np.vstack(parts)

    def predict(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(class ids, softmax confidence) per spectrum"""
        probs = self.predict_proba(x)
        best = probs.argmax(axis=1) if probs.size else np.zeros(0, dtype=np.int64)
        return self.class_ids[best], probs.max(axis=1) if probs.size else np.zeros(0)

    def accuracy(self, x: np.ndarray, labels: np.ndarray) -> float:
        predicted, _ = self.predict(x)
        return float(np.mean(predicted == np.asarray(labels))) if len(labels) else 0.0

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Flat name -> array view of every weight and statistic"""
        arrays = {"input_mean": self.input_mean, "input_std": self.input_std}
        for index, layer in enumerate(self.layers):
            for name, value in layer.arrays().items():
                arrays[f"layer{index}.{name}"] = value
        return arrays

    def load_state_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        self.input_mean = np.array(arrays["input_mean"], dtype=np.float64)
        self.input_std = np.array(arrays["input_std"], dtype=np.float64)
        for index, layer in enumerate(self.layers):
            prefix = f"layer{index}."
            layer.load_arrays({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})


def train_pixel_classifier(spec: ClassifierSpec, spectra: np.ndarray, labels: np.ndarray,
                           class_names: Optional[Sequence[str]] = None) -> Tuple[PixelClassifier, float]:
    """
    Mini-batch SGD on cross-entropy.
    Stops early once the whole training set is classified correctly.
    Returns the model and its final training accuracy.
    """
    spectra = np.asarray(spectra, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if spectra.ndim != 2 or spectra.shape[0] != labels.shape[0] or spectra.shape[0] == 0:
        raise SpectralModelError(f"need matching spectra/labels, got {spectra.shape} and {labels.shape}")

    class_ids, counts = np.unique(labels, return_counts=True)
    for class_id, count in zip(class_ids, counts):
        if count < spec.batch_size:
            logger.warning(f"⚠️ Class {class_id} has only {count} samples (< batch size {spec.batch_size})")

    rng = np.random.default_rng(spec.seed)
    model = PixelClassifier(spec, spectra.shape[1], class_ids, class_names, rng)
    model.input_mean = spectra.mean(axis=0)
    std = spectra.std(axis=0)
    model.input_std = np.where(std > 0, std, 1.0)
    targets = np.searchsorted(class_ids, labels)

    for epoch in range(spec.epochs):
        order = rng.permutation(spectra.shape[0])
        losses = []
        for start in range(0, order.size, spec.batch_size):
            batch = order[start:start + spec.batch_size]
            if batch.size < 2 and order.size >= 2:
                continue
            logits = model.forward(spectra[batch], training=True)
            loss, dlogits = cross_entropy(logits, targets[batch])
            model.backward(dlogits)
            model.sgd_step(spec.learning_rate)
            losses.append(loss)
        model.epochs_run = epoch + 1
        model.train_accuracy = model.accuracy(spectra, labels)
        logger.debug(f"Epoch {epoch + 1}: loss {np.mean(losses):.4f}, train accuracy {model.train_accuracy:.4f}")
        if model.train_accuracy >= 1.0:
            break

    logger.info(f"✅ Pixel classifier trained: {model.epochs_run} epochs, "
                f"train accuracy {model.train_accuracy:.4f} on {spectra.shape[0]} spectra")
    return model, model.train_accuracy


def mask_array(mask: MaskLike, shape: Tuple[int, int]) -> np.ndarray:
    """Union of one or more segmentation masks as a boolean image"""
    if isinstance(mask, SegmentationMask):
        combined = mask.mask.astype(bool)
    elif isinstance(mask, np.ndarray):
        combined = mask.astype(bool)
    else:
        combined = np.zeros(shape, dtype=bool)
        for item in mask:
            combined |= item.mask.astype(bool)
    if combined.shape != shape:
        raise SpectralModelError(f"mask shape {combined.shape} != cube {shape}")
    return combined


def predict_pixel_labels(cube: HyperspectralCube, mask: MaskLike, model: PixelClassifier,
                         mnf: MnfModel) -> PixelLabelMap:
    """Classify masked pixels only; everything else stays background with confidence 1"""
    if model.input_length != mnf.retained_k:
        raise SpectralModelError(
            f"classifier input length {model.input_length} != MNF retained components {mnf.retained_k}"
        )
    if cube.n_bands != mnf.n_bands:
        raise SpectralModelError(f"cube has {cube.n_bands} bands, MNF model expects {mnf.n_bands}")
    region = mask_array(mask, cube.spatial_shape)
    labels = np.zeros(cube.spatial_shape, dtype=np.int64)
    confidence = np.ones(cube.spatial_shape, dtype=np.float64)
    if region.any():
        reduced = mnf_transform(cube.data[region], mnf)
        predicted, conf = model.predict(reduced)
        labels[region] = predicted
        confidence[region] = conf
    logger.debug(f"Classified {int(region.sum())} pixels")
    return PixelLabelMap(labels=labels, confidence=confidence, class_names=list(model.class_names))
