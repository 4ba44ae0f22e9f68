"""The learned metric: a 5-layer scoring network trained with a Wasserstein loss.

The critic maps a dataset embedding to one real number.  It is trained to
widen the expected score gap between embeddings of ground-truth clusterings
and embeddings of clusterings produced by the search, with every weight
clipped into [-c, c] after each step so the score stays smooth in its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import NonFiniteError, ShapeMismatchError
from .numerics import (ParameterSet, RmspropState, clip_parameters, leaky_relu,
                       leaky_relu_slope, rmsprop_step)

HIDDEN_WIDTHS = (256, 256, 512, 512)
LEAKY_ALPHA = 0.2


@dataclass
class CriticModel:
    """Weights and biases of the scoring network plus its clip constant.

    Layers are w1..w5 / b1..b5; every layer except the last is followed by
    LeakyReLU(0.2), the last is linear with a single output.
    """

    params: ParameterSet
    clip: float = 0.01

    def __post_init__(self):
        if self.clip <= 0:
            raise ValueError(f"clip constant must be positive, got {self.clip}")
        for name, v in self.params.items():
            numerics.require_finite(v, f"critic parameter {name}")

    @property
    def input_dim(self) -> int:
        return self.params["w1"].shape[0]

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2


def init_critic(input_dim: int, clip: float = 0.01, seed=None,
                widths: tuple[int, ...] = HIDDEN_WIDTHS) -> CriticModel:
    """Fresh critic with weights drawn uniformly inside the clip box."""
    rng = np.random.default_rng(seed)
    params: ParameterSet = {}
    sizes = (input_dim,) + widths + (1,)
    for i in range(len(sizes) - 1):
        params[f"w{i + 1}"] = rng.uniform(-clip, clip, size=(sizes[i], sizes[i + 1]))
        params[f"b{i + 1}"] = rng.uniform(-clip, clip, size=(1, sizes[i + 1]))
    return CriticModel(params=params, clip=clip)


def forward(model: CriticModel, z: np.ndarray) -> np.ndarray:
    """Scores for a batch of embeddings, shape (batch,)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if z.shape[1] != model.input_dim:
        raise ShapeMismatchError(
            f"embedding length {z.shape[1]} does not match critic input {model.input_dim}")
    h = z
    n = model.n_layers
    for i in range(1, n):
        h = leaky_relu(h @ model.params[f"w{i}"] + model.params[f"b{i}"], LEAKY_ALPHA)
    out = h @ model.params[f"w{n}"] + model.params[f"b{n}"]
    return out[:, 0]


def score(model: CriticModel, z: np.ndarray) -> float:
    """Score of a single embedding."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise ShapeMismatchError(f"expected a flat embedding, got shape {z.shape}")
    return float(forward(model, z[None, :])[0])


def _forward_trace(model: CriticModel, z: np.ndarray):
    """Forward pass keeping pre-activations for the backward sweep."""
    acts = [z]
    pres = []
    h = z
    n = model.n_layers
    for i in range(1, n + 1):
        pre = h @ model.params[f"w{i}"] + model.params[f"b{i}"]
        pres.append(pre)
        h = leaky_relu(pre, LEAKY_ALPHA) if i < n else pre
        acts.append(h)
    return acts, pres


def backward(model: CriticModel, z: np.ndarray, upstream: np.ndarray) -> ParameterSet:
    """Gradients of sum_b upstream[b] * score(z[b]) for every weight and bias."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    upstream = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    acts, pres = _forward_trace(model, z)
    grads: ParameterSet = {}
    delta = upstream
    for i in range(model.n_layers, 0, -1):
        if i < model.n_layers:
            delta = delta * leaky_relu_slope(pres[i - 1], LEAKY_ALPHA)
        grads[f"w{i}"] = acts[i - 1].T @ delta
        grads[f"b{i}"] = delta.sum(axis=0, keepdims=True)
        if i > 1:
            delta = delta @ model.params[f"w{i}"].T
    return grads


def wasserstein_loss_and_grads(model: CriticModel, real: np.ndarray,
                               fake: np.ndarray) -> tuple[float, ParameterSet]:
    """Objective mean(score(real)) - mean(score(fake)) and its gradients."""
    real = np.atleast_2d(real)
    fake = np.atleast_2d(fake)
    loss = float(forward(model, real).mean() - forward(model, fake).mean())
    g_real = backward(model, real, np.full(real.shape[0], 1.0 / real.shape[0]))
    g_fake = backward(model, fake, np.full(fake.shape[0], -1.0 / fake.shape[0]))
    return loss, {name: g_real[name] + g_fake[name] for name in g_real}


def wgan_step(model: CriticModel, real: np.ndarray, fake: np.ndarray,
              opt: RmspropState) -> float:
    """One ascent step on the score gap, then weight clipping.

    Mutates ``model.params`` and ``opt``; returns the pre-step loss estimate.
    A non-finite loss rejects the step and leaves both untouched.
    """
    if np.size(real) == 0 or np.size(fake) == 0:
        raise ShapeMismatchError("wgan_step needs non-empty real and fake batches")
    loss, grads = wasserstein_loss_and_grads(model, real, fake)
    if not np.isfinite(loss):
        raise NonFiniteError("non-finite critic loss; step rejected")
    descent = {name: -g for name, g in grads.items()}
    model.params = clip_parameters(rmsprop_step(model.params, descent, opt), model.clip)
    return loss


def input_gradient_bound(model: CriticModel) -> np.ndarray:
    """Coordinatewise bound on |d score / d z_i| from the clipped weights.

    Activation slopes are at most 1, so the bound is the product of the
    absolute weight matrices along the network.
    """
    bound = np.abs(model.params["w1"])
    for i in range(2, model.n_layers + 1):
        bound = bound @ np.abs(model.params[f"w{i}"])
    return bound[:, 0]
