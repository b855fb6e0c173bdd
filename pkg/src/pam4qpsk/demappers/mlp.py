"""Residual MLP with batch-norm and dropout, written out in numpy.

Layout::

    x (2) -> Linear(2, W) -> B x [h + Dropout(ReLU(BN(Linear(W, W)(h))))] -> Linear(W, 2)

The two outputs are bit LLRs with ``L > 0`` meaning "bit is 0".  Training
minimises ``mean softplus((2b - 1) * L)``, the sigmoid cross-entropy under
that sign convention.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"PQMLP001"


class NonFiniteActivationError(FloatingPointError):
    def __init__(self, layer):
        super().__init__(f"non-finite activation in layer {layer!r}")
        self.layer = layer


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch, last_state):
        super().__init__(f"training diverged (non-finite loss) in epoch {epoch}")
        self.epoch = epoch
        self.last_state = last_state


@dataclass(frozen=True)
class TrainConfig:
    train_bits: int = 120600
    test_bits: int = 13400
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 50
    seed: int = 0


class MlpModel:
    """Parameters, running statistics and the forward/backward passes."""

    def __init__(self, n_blocks=3, width=32, dropout=0.1, bn_eps=1e-5,
                 bn_momentum=0.1, n_in=2, n_out=2, seed=0):
        self.n_blocks = int(n_blocks)
        self.width = int(width)
        self.dropout = float(dropout)
        self.bn_eps = float(bn_eps)
        self.bn_momentum = float(bn_momentum)
        self.n_in = int(n_in)
        self.n_out = int(n_out)
        self.params = {}
        self.buffers = {}
        self.feature_mean = np.zeros(self.n_in)
        self.feature_std = np.ones(self.n_in)
        self._init_params(np.random.default_rng(seed))

    # -- construction -------------------------------------------------
    def _init_params(self, rng):
        W = self.width
        p = self.params
        p["in.W"] = rng.standard_normal((self.n_in, W)) * np.sqrt(1.0 / self.n_in)
        p["in.b"] = np.zeros(W)
        for i in range(self.n_blocks):
            p[f"block{i}.W"] = rng.standard_normal((W, W)) * np.sqrt(2.0 / W)
            p[f"block{i}.gamma"] = np.ones(W)
            p[f"block{i}.beta"] = np.zeros(W)
            self.buffers[f"block{i}.running_mean"] = np.zeros(W)
            self.buffers[f"block{i}.running_var"] = np.ones(W)
        p["out.W"] = rng.standard_normal((W, self.n_out)) * np.sqrt(1.0 / W)
        p["out.b"] = np.zeros(self.n_out)

    def config(self):
        return {
            "n_blocks": self.n_blocks, "width": self.width, "dropout": self.dropout,
            "bn_eps": self.bn_eps, "bn_momentum": self.bn_momentum,
            "n_in": self.n_in, "n_out": self.n_out,
        }

    @property
    def n_params(self):
        return int(sum(v.size for v in self.params.values()))

    def copy(self):
        m = MlpModel.__new__(MlpModel)
        m.__dict__.update(self.config())
        m.params = {k: v.copy() for k, v in self.params.items()}
        m.buffers = {k: v.copy() for k, v in self.buffers.items()}
        m.feature_mean = self.feature_mean.copy()
        m.feature_std = self.feature_std.copy()
        return m

    def set_standardization(self, X):
        self.feature_mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.feature_std = np.where(std > 0, std, 1.0)

    def standardize(self, X):
        return (X - self.feature_mean) / self.feature_std

    # -- passes ---------------------------------------------------------
    def forward(self, X, train=False, rng=None, update_stats=True, dropout=None):
        """Logits for standardised features ``X`` of shape (n, n_in).

        In train mode batch statistics are used and dropout masks are drawn
        from ``rng``; the returned cache feeds :meth:`backward`.
        """
        p = self.params
        p_drop = self.dropout if dropout is None else dropout
        cache = {"x": X}
        h = X @ p["in.W"] + p["in.b"]
        cache["h0"] = h
        for i in range(self.n_blocks):
            pre = h @ p[f"block{i}.W"]  # bias is redundant before BN
            if train:
                mu = pre.mean(axis=0)
                var = pre.var(axis=0)
                if update_stats:
                    m = self.bn_momentum
                    rm = self.buffers[f"block{i}.running_mean"]
                    rv = self.buffers[f"block{i}.running_var"]
                    n = pre.shape[0]
                    rm *= 1 - m
                    rm += m * mu
                    rv *= 1 - m
                    rv += m * var * (n / max(n - 1, 1))
            else:
                mu = self.buffers[f"block{i}.running_mean"]
                var = self.buffers[f"block{i}.running_var"]
            inv_std = 1.0 / np.sqrt(var + self.bn_eps)
            xhat = (pre - mu) * inv_std
            z = xhat * p[f"block{i}.gamma"] + p[f"block{i}.beta"]
            a = np.maximum(z, 0.0)
            if train and p_drop > 0:
                mask = (rng.random(a.shape) >= p_drop) / (1.0 - p_drop)
                a = a * mask
            else:
                mask = None
            cache[f"block{i}"] = (h, xhat, inv_std, z, mask)
            h = h + a
        out = h @ p["out.W"] + p["out.b"]
        cache["h_last"] = h
        if not np.all(np.isfinite(out)):
            raise NonFiniteActivationError(self._first_bad_layer(cache, out))
        return out, cache

    def _first_bad_layer(self, cache, out):
        if not np.all(np.isfinite(cache["h0"])):
            return "in"
        for i in range(self.n_blocks):
            _, xhat, _, z, _ = cache[f"block{i}"]
            if not (np.all(np.isfinite(xhat)) and np.all(np.isfinite(z))):
                return f"block{i}"
        return "out"

    def backward(self, cache, dout):
        """Parameter gradients given dLoss/dLogits."""
        p = self.params
        g = {}
        h = cache["h_last"]
        g["out.W"] = h.T @ dout
        g["out.b"] = dout.sum(axis=0)
        dh = dout @ p["out.W"].T
        for i in reversed(range(self.n_blocks)):
            h_in, xhat, inv_std, z, mask = cache[f"block{i}"]
            da = dh if mask is None else dh * mask
            dz = da * (z > 0)
            gamma = p[f"block{i}.gamma"]
            g[f"block{i}.gamma"] = (dz * xhat).sum(axis=0)
            g[f"block{i}.beta"] = dz.sum(axis=0)
            dxhat = dz * gamma
            n = dxhat.shape[0]
            dpre = (inv_std / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
            g[f"block{i}.W"] = h_in.T @ dpre
            dh = dh + dpre @ p[f"block{i}.W"].T
        g["in.W"] = cache["x"].T @ dh
        g["in.b"] = dh.sum(axis=0)
        return g

    def predict_llr(self, X):
        """Inference-mode LLRs for raw (unstandardised) features."""
        out, _ = self.forward(self.standardize(np.asarray(X, dtype=float)), train=False)
        return out

    # -- serialization ----------------------------------------------------
    def _arrays(self):
        arrays = [(k, self.params[k]) for k in sorted(self.params)]
        arrays += [(k, self.buffers[k]) for k in sorted(self.buffers)]
        arrays += [("feature_mean", self.feature_mean), ("feature_std", self.feature_std)]
        return arrays

    def save(self, path):
        """Write ``MAGIC``, a length-prefixed JSON header, then raw float64 arrays.

        The header lists ``config`` and ``arrays`` as ``[name, shape]`` in the
        order they follow; each array is little-endian float64, row-major.
        """
        arrays = self._arrays()
        header = json.dumps(
            {"config": self.config(), "arrays": [[k, list(v.shape)] for k, v in arrays]},
            sort_keys=True,
        ).encode("utf-8")
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<Q", len(header)))
        buf.write(header)
        for _, v in arrays:
            buf.write(np.ascontiguousarray(v, dtype="<f8").tobytes())
        data = buf.getvalue()
        if hasattr(path, "write"):
            path.write(data)
        else:
            with open(path, "wb") as fh:
                fh.write(data)

    @classmethod
    def load(cls, path):
        if hasattr(path, "read"):
            data = path.read()
        else:
            with open(path, "rb") as fh:
                data = fh.read()
        if data[:8] != MAGIC:
            raise ValueError("not a pam4qpsk MLP model file")
        (hlen,) = struct.unpack("<Q", data[8:16])
        header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
        model = cls(**header["config"])
        off = 16 + hlen
        for name, shape in header["arrays"]:
            n = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(shape).copy()
            off += 8 * n
            if name in model.params:
                model.params[name] = arr
            elif name in model.buffers:
                model.buffers[name] = arr
            elif name in ("feature_mean", "feature_std"):
                setattr(model, name, arr)
            else:
                raise ValueError(f"unexpected array {name!r} in model file")
        return model


def bit_cross_entropy(llr, bits):
    """Mean sigmoid cross-entropy (nats) and its gradient w.r.t. ``llr``."""
    s = 2.0 * bits - 1.0
    t = s * llr
    loss = float(np.mean(np.logaddexp(0.0, t)))
    # d softplus(t)/dt = sigmoid(t)
    grad = s * 0.5 * (1.0 + np.tanh(0.5 * t)) / llr.size
    return loss, grad


class Adam:
    """Adaptive-moment optimizer with bias correction."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def mlp_train(model, X, bits, cfg=None, eval_set=None, loss_scale=1.0):
    """Mini-batch Adam on the bit cross-entropy.

    ``X`` are raw (I, Q) features; standardisation statistics are taken
    from ``X``.  Returns ``(model, history)`` where ``history`` holds the
    per-epoch ``train_loss`` and, with ``eval_set``, ``test_loss``.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=float)
    bits = np.asarray(bits, dtype=float).reshape(X.shape[0], model.n_out)
    model.set_standardization(X)
    Xs = model.standardize(X)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = {"train_loss": [], "test_loss": []}
    n = X.shape[0]
    bs = max(1, int(cfg.batch_size))
    last_good = model.copy()
    for epoch in range(int(cfg.epochs)):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            if idx.size < 2:
                continue
            try:
                out, cache = model.forward(Xs[idx], train=True, rng=rng)
            except NonFiniteActivationError:
                raise TrainingDivergedError(epoch, last_good) from None
            loss, dout = bit_cross_entropy(out, bits[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, last_good)
            grads = model.backward(cache, dout * loss_scale)
            opt.step(model.params, grads)
            total += loss * idx.size
        history["train_loss"].append(total / n)
        if not np.isfinite(history["train_loss"][-1]):
            raise TrainingDivergedError(epoch, last_good)
        if eval_set is not None:
            Xt, bt = eval_set
            llr = model.predict_llr(Xt)
            history["test_loss"].append(
                bit_cross_entropy(llr, np.asarray(bt, dtype=float).reshape(llr.shape))[0]
            )
        last_good = model.copy()
    return model, history


def _loss_for_check(model, X, bits):
    out, cache = model.forward(X, train=True, update_stats=False, dropout=0.0)
    return bit_cross_entropy(out, bits), cache


def gradient_check(model, X, bits, step=1e-5):
    """Max relative error between backprop and central finite differences.

    Dropout is disabled and batch-norm runs on batch statistics of the fixed
    batch ``X`` (already standardised).
    """
    X = np.asarray(X, dtype=float)
    bits = np.asarray(bits, dtype=float).reshape(X.shape[0], model.n_out)
    (_, dout), cache = _loss_for_check(model, X, bits)
    analytic = model.backward(cache, dout)
    worst = 0.0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        ga = analytic[name].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            lp = _loss_for_check(model, X, bits)[0][0]
            flat[j] = orig - step
            lm = _loss_for_check(model, X, bits)[0][0]
            flat[j] = orig
            gfd = (lp - lm) / (2 * step)
            err = abs(gfd - ga[j]) / max(abs(gfd), abs(ga[j]), 1e-8)
            worst = max(worst, err)
    return worst


