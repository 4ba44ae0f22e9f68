"""Dense numeric kernels: activations, parameter-set updates and gradient checking.

Matrices are plain float64 ``numpy`` arrays.  A :data:`ParameterSet` is an
insertion-ordered dict mapping a unique name to one weight array; the shapes
are fixed once a network is initialised.  All functions here are pure except
:func:`rmsprop_step`, which mutates the optimizer state it is given (and only
that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError, ShapeMismatchError

ParameterSet = dict[str, np.ndarray]


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, rejecting NaN/Inf."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatchError(f"{name}: expected 2 dimensions, got shape {a.shape}")
    require_finite(a, name)
    return a


def require_finite(a: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains non-finite values")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def transpose(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).T


def elementwise_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot add shapes {a.shape} and {b.shape}")
    return a + b


def elementwise_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot multiply shapes {a.shape} and {b.shape} elementwise")
    return a * b


def row_sums(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).sum(axis=1)


# --- activations -----------------------------------------------------------

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_slope(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, 1.0, 0.0)


def leaky_relu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0.0, x, alpha * x)


def leaky_relu_slope(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0.0, 1.0, alpha)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(np.asarray(x, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax; each output row is non-negative and sums to 1."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# --- parameter sets and optimisation ---------------------------------------

def clip_parameters(params: ParameterSet, c: float) -> ParameterSet:
    """Clamp every scalar into [-c, c]; idempotent."""
    if c <= 0:
        raise ValueError(f"clip constant must be positive, got {c}")
    return {name: np.clip(v, -c, c) for name, v in params.items()}


@dataclass
class RmspropState:
    """Per-parameter squared-gradient accumulators plus the step-size schedule.

    The accumulator update is ``acc <- rho*acc + (1-rho)*g**2`` and the
    parameter update ``p <- p - lr*g/(sqrt(acc)+eps)``.  Call
    :meth:`decay_lr` at epoch boundaries to apply the multiplicative
    learning-rate schedule.
    """

    learning_rate: float = 0.01
    rho: float = 0.9
    eps: float = 1e-8
    acc: ParameterSet = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")

    @classmethod
    def for_params(cls, params: ParameterSet, learning_rate: float = 0.01,
                   rho: float = 0.9, eps: float = 1e-8) -> "RmspropState":
        acc = {name: np.zeros_like(v) for name, v in params.items()}
        return cls(learning_rate=learning_rate, rho=rho, eps=eps, acc=acc)

    def decay_lr(self, factor: float = 0.95) -> None:
        self.learning_rate *= factor


def rmsprop_step(params: ParameterSet, grads: ParameterSet, state: RmspropState) -> ParameterSet:
    """One RMSprop update.  Returns new parameters; mutates only ``state``.

    A non-finite gradient rejects the whole step (state untouched) so a bad
    batch can never poison the model.
    """
    for name, p in params.items():
        g = grads.get(name)
        if g is None or g.shape != p.shape:
            got = None if g is None else g.shape
            raise ShapeMismatchError(f"gradient for '{name}': expected shape {p.shape}, got {got}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for '{name}'; step rejected")
    if not state.acc:
        state.acc = {name: np.zeros_like(p) for name, p in params.items()}
    out: ParameterSet = {}
    for name, p in params.items():
        g = grads[name]
        acc = state.acc[name]
        acc *= state.rho
        acc += (1.0 - state.rho) * g * g
        out[name] = p - state.learning_rate * g / (np.sqrt(acc) + state.eps)
    return out


# --- finite-difference gradient checking -----------------------------------

@dataclass
class FiniteDiffReport:
    """Worst observed deviation between analytic and central-difference grads."""

    max_rel_deviation: float
    worst_param: str
    worst_index: tuple
    checked: int

    def __str__(self):
        return (f"max relative deviation {self.max_rel_deviation:.3e} at "
                f"{self.worst_param}{list(self.worst_index)} over {self.checked} coordinates")


def finite_diff_check(loss_fn, params: ParameterSet, grads: ParameterSet,
                      h: float = 1e-5, coords_per_param: int = 20,
                      rng: np.random.Generator | None = None) -> FiniteDiffReport:
    """Compare analytic gradients against central differences.

    ``loss_fn`` maps a ParameterSet to a scalar.  For each parameter array a
    random subset of coordinates is perturbed one at a time by ``+-h`` and the
    central-difference estimate is compared with the analytic value.  The
    relative deviation uses an absolute floor of 1e-6 so near-zero gradients
    do not produce spurious blow-ups.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    worst_param = ""
    worst_index: tuple = ()
    checked = 0
    work = {name: v.copy() for name, v in params.items()}
    for name, p in work.items():
        n_coords = min(coords_per_param, p.size)
        flat_idx = rng.choice(p.size, size=n_coords, replace=False)
        for fi in flat_idx:
            idx = np.unravel_index(fi, p.shape)
            orig = p[idx]
            p[idx] = orig + h
            up = loss_fn(work)
            p[idx] = orig - h
            down = loss_fn(work)
            p[idx] = orig
            fd = (up - down) / (2.0 * h)
            an = grads[name][idx]
            dev = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
            checked += 1
            if dev > worst:
                worst, worst_param, worst_index = dev, name, idx
    return FiniteDiffReport(worst, worst_param, worst_index, checked)


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))
