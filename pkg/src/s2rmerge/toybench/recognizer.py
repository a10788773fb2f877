"""Tiny frame-level recognizer: tanh hidden layer, softmax output.

Each frame of a sequence is classified independently; decoding is greedy
per-frame argmax, which is enough to exercise the full merge-and-evaluate
pipeline without sequence alignment. Parameters live in a ParameterSet
(tensors W1, b1, W2, b2) so trained models plug directly into the
task-vector algebra. Training is plain mini-batch gradient descent on
per-frame cross-entropy with manually derived gradients.
"""

from __future__ import annotations

import numpy as np

from ..checkpoint import ParameterSet
from ..metrics import RateFragment, cer, wer
from .languages import ALPHABET, ToyDataset, stable_seed


class DivergedLoss(Exception):
    """Training encountered a non-finite loss."""


def init_recognizer(
    seed: int,
    feature_dim: int = 32,
    hidden_dim: int = 24,
    alphabet_size: int = 16,
    metadata: dict | None = None,
) -> ParameterSet:
    """Fresh recognizer with scaled-Gaussian weights and zero biases."""
    rng = np.random.default_rng(stable_seed(seed, "init"))
    entries = {
        "W1": rng.normal(0.0, 1.0 / np.sqrt(feature_dim), size=(feature_dim, hidden_dim)),
        "b1": np.zeros(hidden_dim),
        "W2": rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), size=(hidden_dim, alphabet_size)),
        "b2": np.zeros(alphabet_size),
    }
    return ParameterSet(entries, dtype="f64", metadata=metadata or {"role": "ancestor"})


def _forward(params: dict[str, np.ndarray], x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hidden = np.tanh(x @ params["W1"] + params["b1"])
    logits = hidden @ params["W2"] + params["b2"]
    return hidden, logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _loss_and_gradients(
    params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    hidden, logits = _forward(params, x)
    logp = _log_softmax(logits)
    n = x.shape[0]
    loss = float(-logp[np.arange(n), y].mean())

    dlogits = np.exp(logp)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {
        "W2": hidden.T @ dlogits,
        "b2": dlogits.sum(axis=0),
    }
    dhidden = dlogits @ params["W2"].T
    dpre = dhidden * (1.0 - hidden**2)
    grads["W1"] = x.T @ dpre
    grads["b1"] = dpre.sum(axis=0)
    return loss, grads


def loss_and_gradients(
    model: ParameterSet, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean per-frame cross-entropy and its gradients for one batch."""
    return _loss_and_gradients(model.entries, x, y)


def batch_loss(model: ParameterSet, x: np.ndarray, y: np.ndarray) -> float:
    """Loss only; used by the finite-difference gradient check."""
    _, logits = _forward(model.entries, x)
    logp = _log_softmax(logits)
    return float(-logp[np.arange(x.shape[0]), y].mean())


def train(
    model: ParameterSet,
    data: ToyDataset,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 256,
    freeze_features: bool = False,
) -> ParameterSet:
    """Mini-batch gradient descent; returns a new model, input untouched.

    With ``freeze_features`` the hidden layer (W1, b1) is returned bitwise
    unchanged and only the output layer is updated.
    """
    if len(data) == 0:
        raise ValueError("training data is empty")
    params = {name: arr.copy() for name, arr in model.entries.items()}
    x, y = data.frames()
    rng = np.random.default_rng(stable_seed(seed, "train"))
    n = x.shape[0]
    updated = ("W2", "b2") if freeze_features else ("W1", "b1", "W2", "b2")
    for _ in range(max(0, epochs)):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = _loss_and_gradients(params, x[idx], y[idx])
            if not np.isfinite(loss):
                raise DivergedLoss(f"non-finite loss {loss} during training")
            for name in updated:
                params[name] = params[name] - lr * grads[name]
    meta = dict(model.metadata)
    meta["role"] = "trained"
    return ParameterSet(params, dtype=model.dtype, metadata=meta)


def linear_probe(
    model: ParameterSet,
    data: ToyDataset,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 256,
) -> ParameterSet:
    """Retrain only the output layer on frozen hidden-layer features."""
    return train(model, data, epochs, lr, seed, batch_size=batch_size, freeze_features=True)


def predict_labels(model: ParameterSet, features: np.ndarray) -> list[str]:
    """Greedy per-frame decoding of (n, seq_len, D) feature sequences."""
    n, seq_len, d = features.shape
    _, logits = _forward(model.entries, features.reshape(n * seq_len, d))
    picks = logits.argmax(axis=1).reshape(n, seq_len)
    return ["".join(ALPHABET[c] for c in row) for row in picks]


def evaluate_rates(model: ParameterSet, data: ToyDataset) -> tuple[RateFragment, RateFragment]:
    """(CER, WER) fragments of greedy decodes against the true labels."""
    hyps = predict_labels(model, data.features)
    return cer(hyps, data.labels), wer(hyps, data.labels)
