"""sklearn-style wrapper around the residual MLP soft demapper."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_iq, check_bit_targets
from .mlp import MlpModel, TrainConfig, mlp_train


class NeuralDemapper(ClassifierMixin, BaseEstimator):
    """Per-symbol (I, Q) -> 2 bit LLRs, ``L > 0`` meaning bit 0.

    Examples
    --------
    >>> dem = NeuralDemapper(epochs=5).fit(X_train, bits_train)   # doctest: +SKIP
    >>> llr = dem.predict_llr(X_test)                              # doctest: +SKIP
    """

    def __init__(self, n_blocks=3, width=32, dropout=0.1, learning_rate=1e-3,
                 beta1=0.9, beta2=0.999, epsilon=1e-8, batch_size=256, epochs=50,
                 seed=0):
        self.n_blocks = n_blocks
        self.width = width
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def _train_config(self):
        return TrainConfig(
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, epsilon=self.epsilon,
            epochs=self.epochs, seed=self.seed,
        )

    def fit(self, X, y, eval_set=None):
        Xf = as_iq(X)
        bits = check_bit_targets(y, Xf.shape[0])
        model = MlpModel(self.n_blocks, self.width, self.dropout, seed=self.seed)
        ev = None
        if eval_set is not None:
            Xt = as_iq(eval_set[0])
            ev = (Xt, check_bit_targets(eval_set[1], Xt.shape[0]))
        self.model_, hist = mlp_train(model, Xf, bits, self._train_config(), ev)
        self.loss_curve_ = hist["train_loss"]
        self.test_loss_curve_ = hist["test_loss"]
        return self

    @classmethod
    def from_model(cls, model):
        dem = cls(n_blocks=model.n_blocks, width=model.width, dropout=model.dropout)
        dem.model_ = model
        return dem

    def predict_llr(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict_llr(as_iq(X))

    def decision_function(self, X):
        return self.predict_llr(X)

    def predict_proba(self, X):
        """P(bit = 1) per bit position."""
        return 0.5 * (1.0 - np.tanh(0.5 * self.predict_llr(X)))

    def predict(self, X):
        return (self.predict_llr(X) < 0).astype(np.uint8)

    def score(self, X, y, sample_weight=None):
        return float(np.mean(self.predict(X) == np.asarray(y).reshape(-1, 2)))
