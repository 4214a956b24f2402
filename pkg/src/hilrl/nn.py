"""Minimal feed-forward approximator shared by the Q and H value functions.

One hidden tanh layer, identity output, hand-written gradients for the
squared-error loss, RMSProp updates.  Everything is plain float64 numpy;
networks are values with a single owner, nothing here is thread-aware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation

__all__ = [
    "Network",
    "Gradient",
    "RmsPropState",
    "init_network",
    "forward",
    "forward_batch",
    "grad_squared_error",
    "grad_squared_error_batch",
    "rmsprop_step",
    "network_copy",
    "network_to_json",
    "network_from_json",
]


@dataclass
class Network:
    """Two affine layers: y = w2 @ tanh(w1 @ x + b1) + b2."""

    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (output, hidden)
    b2: np.ndarray  # (output,)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size


@dataclass
class Gradient:
    """Per-parameter gradient, same shapes as the network it was taken from."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros_like(cls, net: Network) -> "Gradient":
        return cls(
            np.zeros_like(net.w1),
            np.zeros_like(net.b1),
            np.zeros_like(net.w2),
            np.zeros_like(net.b2),
        )


@dataclass
class RmsPropState:
    """Squared-gradient accumulators plus the optimizer hyperparameters.

    acc stays nonnegative by construction.  rho and eps_stab are the usual
    defaults; learning_rate 1e-3 matches the rest of the training setup.
    """

    acc: Gradient
    learning_rate: float = 1e-3
    rho: float = 0.9
    eps_stab: float = 1e-8

    @classmethod
    def for_network(cls, net: Network, learning_rate: float = 1e-3,
                    rho: float = 0.9, eps_stab: float = 1e-8) -> "RmsPropState":
        if learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {learning_rate}")
        if not 0.0 < rho < 1.0:
            raise ConfigError(f"rho must be in (0,1), got {rho}")
        return cls(Gradient.zeros_like(net), learning_rate, rho, eps_stab)


def init_network(input_dim: int, hidden_dim: int, output_dim: int, seed) -> Network:
    """Build a network with uniform +-1/sqrt(fan_in) weights and zero biases.

    `seed` may be an int, a SeedSequence or a Generator; identical seeds give
    bit-identical parameters.
    """
    for name, dim in (("input_dim", input_dim), ("hidden_dim", hidden_dim),
                      ("output_dim", output_dim)):
        if dim <= 0:
            raise ConfigError(f"{name} must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    lim1 = 1.0 / np.sqrt(input_dim)
    lim2 = 1.0 / np.sqrt(hidden_dim)
    return Network(
        w1=rng.uniform(-lim1, lim1, size=(hidden_dim, input_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(output_dim, hidden_dim)),
        b2=np.zeros(output_dim),
    )


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Action values for one input vector; pure, returns a fresh array."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ContractViolation(
            f"input shape {x.shape} does not match input_dim {net.input_dim}")
    hidden = np.tanh(net.w1 @ x + net.b1)
    return net.w2 @ hidden + net.b2


def forward_batch(net: Network, xs: np.ndarray) -> np.ndarray:
    """Row-wise forward pass for a (batch, input_dim) matrix."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != net.input_dim:
        raise ContractViolation(
            f"batch shape {xs.shape} does not match input_dim {net.input_dim}")
    hidden = np.tanh(xs @ net.w1.T + net.b1)
    return hidden @ net.w2.T + net.b2


def grad_squared_error(net: Network, x: np.ndarray, target_index: int,
                       target_value: float) -> Gradient:
    """Gradient of (forward(net, x)[target_index] - target_value)^2.

    The loss carries no 1/2 factor, so the residual enters with factor 2.
    Rows of w2/b2 off the target index are analytically zero.
    """
    if not 0 <= target_index < net.output_dim:
        raise ContractViolation(
            f"target_index {target_index} out of range for output_dim {net.output_dim}")
    x = np.asarray(x, dtype=float)
    hidden = np.tanh(net.w1 @ x + net.b1)
    y = net.w2[target_index] @ hidden + net.b2[target_index]
    dy = 2.0 * (y - target_value)

    grad = Gradient.zeros_like(net)
    grad.w2[target_index] = dy * hidden
    grad.b2[target_index] = dy
    dhidden = dy * net.w2[target_index]
    dz = dhidden * (1.0 - hidden * hidden)
    grad.w1[:] = np.outer(dz, x)
    grad.b1[:] = dz
    return grad


def grad_squared_error_batch(net: Network, xs: np.ndarray,
                             target_indices: np.ndarray,
                             target_values: np.ndarray,
                             reduce: str = "mean",
                             weights: np.ndarray | None = None) -> Gradient:
    """Vectorized sum or mean of per-sample grad_squared_error gradients.

    Numerically equal (up to summation order) to accumulating
    grad_squared_error over the batch; tests pin that equivalence.
    Optional per-sample weights scale each sample's loss term.
    """
    xs = np.asarray(xs, dtype=float)
    idx = np.asarray(target_indices, dtype=int)
    vals = np.asarray(target_values, dtype=float)
    n = xs.shape[0]
    if reduce not in ("mean", "sum"):
        raise ContractViolation(f"unknown reduce mode {reduce!r}")

    hidden = np.tanh(xs @ net.w1.T + net.b1)           # (n, hidden)
    y = hidden @ net.w2.T + net.b2                     # (n, output)
    picked = y[np.arange(n), idx]
    dy = 2.0 * (picked - vals)
    if weights is not None:
        dy = dy * np.asarray(weights, dtype=float)
    if reduce == "mean":
        dy = dy / n

    # scatter residuals into (n, output), then everything is matmuls
    r = np.zeros((n, net.output_dim))
    r[np.arange(n), idx] = dy
    grad = Gradient(
        w1=np.empty_like(net.w1),
        b1=np.empty_like(net.b1),
        w2=r.T @ hidden,
        b2=r.sum(axis=0),
    )
    dhidden = r @ net.w2                               # (n, hidden)
    dz = dhidden * (1.0 - hidden * hidden)
    grad.w1[:] = dz.T @ xs
    grad.b1[:] = dz.sum(axis=0)
    return grad


def rmsprop_step(net: Network, state: RmsPropState, grad: Gradient) -> Network:
    """In-place RMSProp update; returns the same network for chaining.

    acc <- rho*acc + (1-rho)*g^2, theta <- theta - lr*g/(sqrt(acc)+eps).
    """
    rho, lr, eps = state.rho, state.learning_rate, state.eps_stab
    for p, a, g in ((net.w1, state.acc.w1, grad.w1),
                    (net.b1, state.acc.b1, grad.b1),
                    (net.w2, state.acc.w2, grad.w2),
                    (net.b2, state.acc.b2, grad.b2)):
        a *= rho
        a += (1.0 - rho) * g * g
        p -= lr * g / (np.sqrt(a) + eps)
    return net


def network_copy(net: Network) -> Network:
    return Network(net.w1.copy(), net.b1.copy(), net.w2.copy(), net.b2.copy())


def copy_params(dst: Network, src: Network) -> None:
    """Overwrite dst's parameters with src's (target-network sync)."""
    dst.w1[:] = src.w1
    dst.b1[:] = src.b1
    dst.w2[:] = src.w2
    dst.b2[:] = src.b2


def network_to_json(net: Network) -> str:
    """Flat JSON checkpoint: dims plus the four parameter arrays."""
    payload = {
        "dims": [net.input_dim, net.hidden_dim, net.output_dim],
        "W1": net.w1.tolist(),
        "b1": net.b1.tolist(),
        "W2": net.w2.tolist(),
        "b2": net.b2.tolist(),
    }
    return json.dumps(payload)


def network_from_json(text: str) -> Network:
    payload = json.loads(text)
    input_dim, hidden_dim, output_dim = payload["dims"]
    net = Network(
        w1=np.asarray(payload["W1"], dtype=float),
        b1=np.asarray(payload["b1"], dtype=float),
        w2=np.asarray(payload["W2"], dtype=float),
        b2=np.asarray(payload["b2"], dtype=float),
    )
    if net.w1.shape != (hidden_dim, input_dim) or net.w2.shape != (output_dim, hidden_dim):
        raise ConfigError("checkpoint dims do not match parameter shapes")
    return net
