"""Single-hidden-layer tanh networks with hand-written backprop and RMSProp."""

from __future__ import annotations

from typing import Callable

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2")
HIDDEN_SIZE = 80


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z):
    """log(sigmoid(z)) without overflow."""
    z = np.asarray(z, dtype=np.float64)
    return -np.logaddexp(0.0, -z)


class DenseNet:
    """output = W2 @ tanh(W1 @ x + b1) + b2, evaluated row-wise on a batch."""

    def __init__(self, input_dim: int, output_dim: int, hidden_size: int = HIDDEN_SIZE,
                 rng: np.random.Generator | None = None, zero: bool = False):
        self.input_dim = int(input_dim)
        self.hidden_size = int(hidden_size)
        self.output_dim = int(output_dim)
        self.params = {
            "W1": np.zeros((self.hidden_size, self.input_dim)),
            "b1": np.zeros(self.hidden_size),
            "W2": np.zeros((self.output_dim, self.hidden_size)),
            "b2": np.zeros(self.output_dim),
        }
        if not zero:
            rng = rng if rng is not None else np.random.default_rng()
            for w, (fan_out, fan_in) in (("W1", self.params["W1"].shape), ("W2", self.params["W2"].shape)):
                if fan_in + fan_out:
                    lim = np.sqrt(6.0 / (fan_in + fan_out))
                    self.params[w] = rng.uniform(-lim, lim, size=(fan_out, fan_in))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.input_dim, self.hidden_size, self.output_dim

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"expected input of width {self.input_dim}, got {x.shape[-1]}")
        p = self.params
        h = np.tanh(x @ p["W1"].T + p["b1"])
        return h @ p["W2"].T + p["b2"], (x, h)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache: tuple[np.ndarray, np.ndarray], output_grad: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of sum(output * output_grad), summed over the batch."""
        x, h = cache
        g = np.asarray(output_grad, dtype=np.float64)
        if g.shape[-1] != self.output_dim or g.shape[:-1] != h.shape[:-1]:
            raise ValueError("output_grad does not match the cached forward pass")
        if x.ndim == 1:
            x, h, g = x[None], h[None], g[None]
        p = self.params
        dh = (g @ p["W2"]) * (1.0 - h * h)
        return {"W1": dh.T @ x, "b1": dh.sum(0), "W2": g.T @ h, "b2": g.sum(0)}

    def copy(self) -> "DenseNet":
        net = DenseNet(self.input_dim, self.output_dim, self.hidden_size, zero=True)
        net.params = {k: v.copy() for k, v in self.params.items()}
        return net

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())

    def equals(self, other: "DenseNet") -> bool:
        return self.shape == other.shape and all(
            np.array_equal(self.params[k], other.params[k]) for k in PARAM_NAMES
        )


class RMSProp:
    """acc <- rho*acc + (1-rho)*g^2 ;  p <- p - lr * g / sqrt(acc + eps)."""

    def __init__(self, lr: float, rho: float = 0.9, eps: float = 1e-8):
        if not 0.0 < rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if eps <= 0.0:
            raise ValueError("eps must be positive")
        self.lr, self.rho, self.eps = lr, rho, eps
        self.acc: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        for k, g in grads.items():
            p = params[k]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {k}")
            acc = self.acc.get(k)
            if acc is None:
                acc = self.acc[k] = np.zeros_like(p)
            acc *= self.rho
            acc += (1.0 - self.rho) * g * g
            p -= self.lr * g / np.sqrt(acc + self.eps)
        return params


def rmsprop_step(params, grads, state: RMSProp):
    return state.step(params, grads)


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    if not np.isfinite(max_norm):
        return grads
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        return {k: g * scale for k, g in grads.items()}
    return grads


# --- loss heads: f(output) -> (loss, d loss / d output) -----------------------

def logprob_head(action: int, weight: float) -> Callable:
    """Surrogate -weight * log softmax(output)[action]."""
    def head(out):
        lp = log_softmax(out)
        g = np.exp(lp)
        g[..., action] -= 1.0
        return -weight * float(lp[..., action].sum()), weight * g
    return head


def squared_td_head(target: float) -> Callable:
    """0.5 * (target - V)^2 with the target held fixed."""
    def head(out):
        diff = out - target
        return 0.5 * float(np.sum(diff * diff)), diff
    return head


def bce_head(label: float) -> Callable:
    """Binary cross-entropy on a logit."""
    def head(out):
        loss = -(label * log_sigmoid(out) + (1.0 - label) * log_sigmoid(-out))
        return float(np.sum(loss)), sigmoid(out) - label
    return head


def grad_check(net: DenseNet, x: np.ndarray, loss: Callable, eps: float = 1e-5,
               analytic: dict[str, np.ndarray] | None = None, floor: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps
    entries that are zero up to round-off from dominating.
    """
    out, cache = net.forward(x)
    if analytic is None:
        analytic = net.backward(cache, loss(out)[1])
    worst = 0.0
    for k in PARAM_NAMES:
        p = net.params[k]
        flat = p.reshape(-1)
        a = analytic[k].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = loss(net(x))[0]
            flat[i] = orig - eps
            fm = loss(net(x))[0]
            flat[i] = orig
            num = (fp - fm) / (2.0 * eps)
            err = abs(a[i] - num) / max(abs(a[i]), abs(num), floor)
            worst = max(worst, err)
    return worst
