import numpy as np
import pytest

from rotascan.errors import SpectralModelError
from rotascan.imaging.scene_simulator import DISCRETE, generate_scene, ground_truth_label_map
from rotascan.models.perception import ClassifierSpec, ConvBlockSpec
from rotascan.perception.layers import BatchNorm1d, Conv1d, Dense, Flatten, MaxPool1d, ReLU, cross_entropy, softmax
from rotascan.perception.mnf import mnf_transform
from rotascan.perception.pixel_classifier import PixelClassifier, predict_pixel_labels, train_pixel_classifier
from rotascan.perception.spectral_angle import SpectralAngleMatcher, angles_to, spectral_angle_map
from rotascan.perception.training import labelled_training_pixels

SMALL_SPEC = ClassifierSpec(blocks=(ConvBlockSpec(3, 4, 2),), hidden_widths=(6,), class_count=3, seed=3)


DEEP_SPEC = ClassifierSpec(blocks=(ConvBlockSpec(3, 4, 2), ConvBlockSpec(3, 4, 2)), hidden_widths=(6,),
                           class_count=3, seed=3)
EPS = 1e-6


def _loss(model, x, targets):
    return cross_entropy(model.forward(x, training=True), targets)[0]


def _numeric_gradient(f, array):
    """Central differences over every entry; entries sitting on a ReLU or max-pool kink come back as nan"""
    grad = np.empty(array.size)
    flat = array.reshape(-1)
    for index in range(flat.size):
        saved = flat[index]
        base = f()
        flat[index] = saved + EPS
        plus = f()
        flat[index] = saved - EPS
        minus = f()
        flat[index] = saved
        forward, backward = (plus - base) / EPS, (base - minus) / EPS
        grad[index] = (plus - minus) / (2 * EPS) if abs(forward - backward) < 1e-4 else np.nan
    return grad.reshape(array.shape)


def _assert_gradient_matches(analytic, numeric):
    smooth = ~np.isnan(numeric)
    assert smooth.sum() >= numeric.size - 1
    assert analytic[smooth] == pytest.approx(numeric[smooth], rel=1e-4, abs=1e-6)


def test_network_gradients_match_central_differences():
    rng = np.random.default_rng(0)
    model = PixelClassifier(DEEP_SPEC, 8, [1, 2, 3])
    x = rng.normal(size=(10, 8))
    targets = rng.integers(0, 3, size=10)

    _, dlogits = cross_entropy(model.forward(x, training=True), targets)
    model.backward(dlogits)
    checked = 0
    for layer in model.layers:
        for name, param in layer.params.items():
            analytic = layer.grads[name].copy()
            _assert_gradient_matches(analytic, _numeric_gradient(lambda: _loss(model, x, targets), param))
            checked += param.size
    assert checked == sum(p.size for layer in model.layers for p in layer.params.values())
    assert checked > 150


@pytest.mark.parametrize("make_layer, shape", [
    (lambda rng: Conv1d(2, 3, 3, rng), (10, 2, 7)),
    (lambda rng: MaxPool1d(2), (10, 3, 7)),
    (lambda rng: ReLU(), (10, 3, 5)),
    (lambda rng: BatchNorm1d(3), (10, 3, 5)),
    (lambda rng: BatchNorm1d(4), (10, 4)),
    (lambda rng: Flatten(), (10, 3, 4)),
    (lambda rng: Dense(6, 4, rng), (10, 6)),
])
def test_layer_gradients_match_central_differences(make_layer, shape):
    rng = np.random.default_rng(1)
    layer = make_layer(rng)
    for param in layer.params.values():
        param += rng.normal(scale=0.3, size=param.shape)
    x = rng.normal(size=shape)
    weights = rng.normal(size=layer.forward(x, training=True).shape)

    def objective():
        return float((weights * layer.forward(x, training=True)).sum())

    layer.forward(x, training=True)
    dx = layer.backward(weights)
    analytic = {name: grad.copy() for name, grad in layer.grads.items()}
    _assert_gradient_matches(dx, _numeric_gradient(objective, x))
    for name, param in layer.params.items():
        _assert_gradient_matches(analytic[name], _numeric_gradient(objective, param))


def test_cross_entropy_gradient_is_softmax_minus_onehot():
    logits = np.array([[2.0, 0.5, -1.0], [0.0, 0.0, 0.0]])
    loss, grad = cross_entropy(logits, np.array([0, 2]))
    probs = softmax(logits)
    expected = probs.copy()
    expected[0, 0] -= 1
    expected[1, 2] -= 1
    assert np.allclose(grad, expected / 2)
    assert loss == pytest.approx(-(np.log(probs[0, 0]) + np.log(probs[1, 2])) / 2)


def test_inference_is_read_only():
    model = PixelClassifier(SMALL_SPEC, 8, [1, 2, 3])
    x = np.random.default_rng(1).normal(size=(10, 8))
    before = {k: v.copy() for k, v in model.state_arrays().items()}
    first = model.predict_proba(x)
    second = model.predict_proba(x)
    assert np.array_equal(first, second)
    assert np.allclose(first.sum(axis=1), 1.0)
    for name, value in model.state_arrays().items():
        assert np.array_equal(value, before[name])


def test_state_arrays_restore_predictions():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(60, 8))
    labels = np.where(x[:, 0] > 0, 2, 1)
    spec = ClassifierSpec(blocks=(ConvBlockSpec(3, 4, 2),), class_count=2, epochs=3, batch_size=16)
    model, _ = train_pixel_classifier(spec, x, labels)
    clone = PixelClassifier(spec, 8, [1, 2])
    clone.load_state_arrays({k: v.copy() for k, v in model.state_arrays().items()})
    assert np.array_equal(clone.predict_proba(x), model.predict_proba(x))


def test_training_separates_easy_classes():
    rng = np.random.default_rng(4)
    centres = rng.normal(size=(3, 8)) * 3
    labels = np.repeat([1, 2, 3], 100)
    x = centres[labels - 1] + rng.normal(scale=0.3, size=(300, 8))
    spec = ClassifierSpec(blocks=(ConvBlockSpec(3, 8, 2),), class_count=3, epochs=40, batch_size=32)
    model, accuracy = train_pixel_classifier(spec, x, labels, class_names=["a", "b", "c"])
    assert accuracy >= 0.98
    assert model.class_names == ["a", "b", "c"]
    assert list(model.class_ids) == [1, 2, 3]
    assert 1 <= model.epochs_run <= 40


def test_single_class_training_is_allowed():
    x = np.random.default_rng(5).normal(size=(20, 8))
    spec = ClassifierSpec(blocks=(ConvBlockSpec(3, 4, 2),), class_count=1, epochs=2, batch_size=8)
    model, accuracy = train_pixel_classifier(spec, x, np.full(20, 4))
    assert accuracy == 1.0
    assert set(model.predict(x)[0]) == {4}


def test_spec_validation():
    with pytest.raises(SpectralModelError):
        ClassifierSpec(blocks=(ConvBlockSpec(4, 8, 2),))
    with pytest.raises(SpectralModelError):
        ClassifierSpec(blocks=(ConvBlockSpec(3, 8, 0),))
    with pytest.raises(SpectralModelError, match="pools an input"):
        PixelClassifier(ClassifierSpec(class_count=2), 3, [1, 2])
    with pytest.raises(SpectralModelError):
        PixelClassifier(ClassifierSpec(class_count=2), 16, [1, 2, 3])
    spec = ClassifierSpec(blocks=(ConvBlockSpec(5, 16, 2), ConvBlockSpec(3, 32, 2)))
    assert spec.flattened_length(11) == 64
    assert ClassifierSpec.from_dict(spec.to_dict()) == spec


def test_spectral_angles():
    reference = np.array([1.0, 0.0])
    data = np.array([[2.0, 0.0], [0.0, 3.0], [1.0, 1.0], [0.0, 0.0]])
    angles = spectral_angle_map(data, reference)
    assert angles == pytest.approx([0.0, np.pi / 2, np.pi / 4, np.pi / 2])
    assert angles_to(data[:2], np.eye(2)).shape == (2, 2)
    with pytest.raises(SpectralModelError):
        angles_to(data, np.ones((1, 3)))


def test_matcher_from_training_means():
    spectra = np.array([[1.0, 0.1], [0.9, 0.0], [0.1, 1.0], [0.0, 0.8]])
    labels = np.array([3, 3, 7, 7])
    matcher = SpectralAngleMatcher.from_spectra(spectra, labels)
    ids, angles = matcher.predict(np.array([[5.0, 0.2], [0.3, 4.0]]))
    assert list(ids) == [3, 7]
    assert np.all(angles < 0.2)


def test_held_out_accuracy_tracks_spectral_angle(perception_bundle, signatures, background, geom, scan_cube):
    scene = generate_scene(DISCRETE, signatures, 8, seed=21, background=background, noise_sigma=0.02)
    cube = scan_cube(scene)
    truth = ground_truth_label_map(scene, geom)
    rows, cols, labels = labelled_training_pixels(truth, cube.valid_mask, len(signatures), 10 ** 6,
                                                  np.random.default_rng(0))
    spectra = cube.data[rows, cols]
    network = perception_bundle.classifier.accuracy(mnf_transform(spectra, perception_bundle.mnf), labels)
    ids, _ = SpectralAngleMatcher(signatures, [1, 2, 3, 4]).predict(spectra)
    reference = float(np.mean(ids == labels))
    assert network >= 0.95
    assert abs(network - reference) <= 0.03


def test_predict_pixel_labels_touches_only_the_mask(perception_bundle, signatures, background, scan_cube):
    scene = generate_scene(DISCRETE, signatures, 4, seed=22, background=background)
    cube = scan_cube(scene)
    mask = np.zeros(cube.spatial_shape, dtype=bool)
    mask[10:20, 10:20] = True
    result = predict_pixel_labels(cube, mask, perception_bundle.classifier, perception_bundle.mnf)
    assert np.all(result.labels[~mask] == 0)
    assert np.all(result.confidence[~mask] == 1.0)
    assert set(np.unique(result.labels[mask])) <= {1, 2, 3, 4}
    with pytest.raises(SpectralModelError):
        predict_pixel_labels(cube, np.zeros((3, 3), dtype=bool), perception_bundle.classifier,
                             perception_bundle.mnf)
