import math

import numpy as np
import pytest
from sklearn.base import clone

from pam4qpsk.constellation import ShapedConstellation, unshaped_qpsk
from pam4qpsk.demappers import (
    HardDemapper,
    LinearEqualizerDemapper,
    NeuralDemapper,
    fit_linear_equalizer,
    hard_decide,
    saturated_llrs,
)
from pam4qpsk.demappers.mlp import (
    Adam,
    MlpModel,
    NonFiniteActivationError,
    TrainConfig,
    TrainingDivergedError,
    bit_cross_entropy,
    gradient_check,
    mlp_train,
)
from pam4qpsk.metrics import gmi_from_llrs

QPSK = unshaped_qpsk()


def noisy_qpsk(n, snr_db, seed=0, rot=0.0, scale=1.0):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, 4, n)
    sigma = math.sqrt(10 ** (-snr_db / 10) / 2)
    y = QPSK.points[idx] + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return scale * np.exp(1j * rot) * y, QPSK.bits_of(idx)


# -- hard decision --------------------------------------------------------

def test_hard_decision_examples():
    pts = QPSK.points
    assert list(hard_decide([pts[0] * 1.3], QPSK)) == list(QPSK.labels[0])
    assert list(hard_decide([pts[2] * 0.2 + 0.01], QPSK)) == list(QPSK.labels[2])
    # the origin is equidistant from all four points -> lowest index
    assert list(hard_decide([0j], QPSK)) == list(QPSK.labels[0])
    exact = ShapedConstellation([1, 1j, -1, -1j])
    assert list(hard_decide([(1 + 1j) / 2], exact)) == list(exact.labels[0])
    # real (n, 2) features are accepted too
    iq = np.column_stack([pts.real, pts.imag])
    np.testing.assert_array_equal(hard_decide(iq, QPSK).reshape(-1, 2), QPSK.labels)


def test_hard_ber_matches_q_function():
    """Oracle: Gray QPSK in AWGN has BER = Q(sqrt(Es/N0)); at 10 dB Q(sqrt(10))."""
    n = 500_000  # 1e6 bits
    y, bits = noisy_qpsk(n, 10.0, seed=42)
    ber = np.mean(hard_decide(y, QPSK) != bits.ravel())
    p = 0.5 * math.erfc(math.sqrt(10) / math.sqrt(2))
    assert p == pytest.approx(7.83e-4, rel=1e-3)
    sd = math.sqrt(p * (1 - p) / (2 * n))
    assert abs(ber - p) < 3 * sd


def test_hard_demapper_estimator():
    shaped = ShapedConstellation(np.exp(1j * np.pi * np.array([0, 0.35, 0.7, 1.05])))
    dem = HardDemapper(shaped).fit()
    y = shaped.points[[3, 0, 2]]
    np.testing.assert_array_equal(dem.predict(y), shaped.labels[[3, 0, 2]])
    np.testing.assert_array_equal(dem.predict_llr(y[:1]), saturated_llrs(shaped.labels[[3]]))
    assert saturated_llrs([0, 1]).tolist() == [20.0, -20.0]
    assert clone(dem).get_params()["llr_max"] == 20.0


# -- linear baseline -------------------------------------------------------

def test_linear_equalizer_recovers_inverse_channel():
    y, bits = noisy_qpsk(4096, 40.0, seed=1)
    tx = QPSK.points[QPSK.index_of_bits(bits)]
    rx = 0.5 * np.exp(1j * np.pi / 8) * tx
    a, b = fit_linear_equalizer(rx, tx)
    assert a == pytest.approx(2 * np.exp(-1j * np.pi / 8), abs=1e-12)
    assert b == 0
    a, b = fit_linear_equalizer(rx + (0.1 - 0.2j), tx, bias=True)
    assert a == pytest.approx(2 * np.exp(-1j * np.pi / 8), abs=1e-9)
    assert a * (0.1 - 0.2j) + b == pytest.approx(0, abs=1e-9)


def test_linear_equalizer_errors():
    with pytest.raises(ValueError, match="64"):
        fit_linear_equalizer(np.ones(10, complex), np.ones(10, complex))
    with pytest.raises(np.linalg.LinAlgError):
        fit_linear_equalizer(np.zeros(100, complex), np.ones(100, complex))
    with pytest.raises(np.linalg.LinAlgError):
        # constant rx makes the affine design matrix rank one
        fit_linear_equalizer(np.full(100, 1 + 1j), np.ones(100, complex), bias=True)


def test_linear_demapper_estimator():
    y, bits = noisy_qpsk(8192, 15.0, seed=2, rot=0.3, scale=0.7)
    dem = LinearEqualizerDemapper().fit(y[:4096], bits[:4096])
    # LS with noise in the regressor shrinks the gain by 1 / (1 + sigma^2)
    assert abs(dem.a_) == pytest.approx(1 / 0.7 / (1 + 10**-1.5), rel=0.02)
    assert np.angle(dem.a_) == pytest.approx(-0.3, abs=0.01)
    assert dem.score(y[4096:], bits[4096:]) > 0.99
    llr = dem.predict_llr(y[4096:])
    assert set(np.unique(llr)) <= {-20.0, 20.0}
    g = clone(dem).set_params(llr="gaussian").fit(y[:4096], bits[:4096])
    soft = g.predict_llr(y[4096:])
    np.testing.assert_array_equal(soft < 0, g.predict(y[4096:]).astype(bool))
    assert clone(dem).get_params() == dem.get_params()
    with pytest.raises(ValueError):
        dem.fit(y[:100], bits[:99])


# -- MLP internals -----------------------------------------------------------

def test_zero_weight_model_gives_zero_llrs():
    m = MlpModel(seed=0)
    for v in m.params.values():
        v[...] = 0.0
    m.set_standardization(np.random.default_rng(0).standard_normal((50, 2)))
    assert np.all(m.predict_llr(np.ones((7, 2))) == 0.0)


def test_degenerate_batch_stays_finite():
    m = MlpModel(seed=1)
    X = np.ones((16, 2))
    out, cache = m.forward(X, train=True, rng=np.random.default_rng(0))
    assert np.all(np.isfinite(out))
    loss, dout = bit_cross_entropy(out, np.zeros((16, 2)))
    g = m.backward(cache, dout)
    assert all(np.all(np.isfinite(v)) for v in g.values())


def _check_batch(seed=0, n=24):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 2)), rng.integers(0, 2, (n, 2)).astype(float)


def test_gradient_check_linear_only():
    X, b = _check_batch()
    assert gradient_check(MlpModel(n_blocks=0, width=8, seed=3), X, b) < 1e-7


def test_gradient_check_full_model():
    X, b = _check_batch(1)
    assert gradient_check(MlpModel(seed=4), X, b) < 1e-4


@pytest.mark.parametrize("step", [1e-4, 1e-5, 1e-6])
def test_gradient_check_step_sweep(step):
    X, b = _check_batch(2)
    assert gradient_check(MlpModel(n_blocks=1, width=8, seed=5), X, b, step=step) < 1e-4


def test_non_finite_activation_names_layer():
    m = MlpModel(seed=0)
    m.params["block1.gamma"][0] = np.nan
    with pytest.raises(NonFiniteActivationError) as exc:
        m.forward(np.ones((4, 2)))
    assert exc.value.layer == "block1"
    assert "block1" in str(exc.value)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_divergence_is_reported():
    rng = np.random.default_rng(0)
    X, bits = rng.standard_normal((512, 2)), rng.integers(0, 2, (512, 2))
    m = MlpModel(seed=0)
    m.params["out.W"][...] = np.inf
    with pytest.raises(TrainingDivergedError) as exc:
        mlp_train(m, X, bits, TrainConfig(epochs=2))
    assert exc.value.epoch == 0
    assert isinstance(exc.value.last_state, MlpModel)


def test_adam_invariant_to_loss_scale():
    rng = np.random.default_rng(0)
    X, bits = rng.standard_normal((2560, 2)), rng.integers(0, 2, (2560, 2))
    cfg = TrainConfig(epochs=1, batch_size=256, epsilon=1e-12, seed=3)
    a, _ = mlp_train(MlpModel(seed=2), X, bits, cfg)
    b, _ = mlp_train(MlpModel(seed=2), X, bits, cfg, loss_scale=10.0)
    for k in a.params:
        np.testing.assert_allclose(a.params[k], b.params[k], rtol=0, atol=1e-6)


def test_adam_bias_corrected_first_step():
    p = {"w": np.array([1.0, -2.0])}
    opt = Adam(p, lr=0.1)
    opt.step(p, {"w": np.array([3.0, -0.5])})
    # the first bias-corrected step is lr * sign(g) up to eps
    np.testing.assert_allclose(p["w"], [0.9, -1.9], atol=1e-7)


def test_save_load_bit_exact(tmp_path):
    y, bits = noisy_qpsk(4096, 12.0, seed=3)
    dem = NeuralDemapper(epochs=2, batch_size=512, seed=1).fit(y, bits)
    path = tmp_path / "m.mlp"
    dem.model_.save(path)
    m2 = MlpModel.load(path)
    assert m2.config() == dem.model_.config()
    np.testing.assert_array_equal(m2.predict_llr(np.column_stack([y.real, y.imag])),
                                  dem.predict_llr(y))
    (tmp_path / "bad.mlp").write_bytes(b"nonsense")
    with pytest.raises(ValueError):
        MlpModel.load(tmp_path / "bad.mlp")


# -- NeuralDemapper ----------------------------------------------------------

def test_neural_demapper_separable_toy():
    y, bits = noisy_qpsk(8192, 30.0, seed=5)
    dem = NeuralDemapper(epochs=5, batch_size=256, learning_rate=3e-3, seed=0).fit(y, bits)
    yt, bt = noisy_qpsk(4096, 30.0, seed=6)
    assert np.mean(dem.predict(yt) != bt) == 0.0
    assert dem.loss_curve_[-1] < dem.loss_curve_[0]
    p = dem.predict_proba(yt)
    assert np.all((p >= 0) & (p <= 1))


def test_neural_demapper_random_labels_give_no_information():
    rng = np.random.default_rng(7)
    y, _ = noisy_qpsk(8192, 20.0, seed=7)
    bits = rng.integers(0, 2, (8192, 2))
    dem = NeuralDemapper(epochs=3, batch_size=256, seed=0).fit(y, bits)
    yt, _ = noisy_qpsk(8192, 20.0, seed=8)
    bt = rng.integers(0, 2, (8192, 2))
    assert gmi_from_llrs(dem.predict_llr(yt), bt).gmi_per_bit < 0.02


def test_neural_inference_deterministic_and_clonable():
    y, bits = noisy_qpsk(2048, 15.0, seed=9)
    dem = NeuralDemapper(epochs=2, batch_size=256, seed=4)
    a = clone(dem).fit(y, bits).predict_llr(y)
    b = clone(dem).fit(y, bits)
    np.testing.assert_array_equal(a, b.predict_llr(y))
    np.testing.assert_array_equal(b.predict_llr(y), b.predict_llr(y))
    assert clone(dem).get_params()["seed"] == 4
    assert b.model_.n_params > 3000
