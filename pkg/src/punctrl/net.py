"""Dense-network engine with hand-written backpropagation.

Fixed topology: affine layers with penalized-tanh hidden activations and a
linear output. The output is read either as one value-estimate per action
or, for stochastic heads, as (mean, log-std) pairs sampled through the
reparameterization q = mu + exp(log_sigma) * noise. Gradients are exact
reverse-mode rules for this stack, so no autodiff framework is needed.
"""

import math
from dataclasses import dataclass

import numpy as np

PTANH_NEG_SLOPE = 0.25
LOG_2PI = math.log(2.0 * math.pi)

DETERMINISTIC = "deterministic"
GAUSSIAN = "gaussian"


def head_output_dim(mode: str, n_actions: int) -> int:
    """Output width: one estimate per action, twice that for a Gaussian head."""
    if mode == DETERMINISTIC:
        return n_actions
    if mode == GAUSSIAN:
        return 2 * n_actions
    raise ValueError(f"unknown head mode {mode!r}")


def penalized_tanh(x):
    """tanh with the negative half-line scaled down by PTANH_NEG_SLOPE."""
    t = np.tanh(x)
    return np.where(np.asarray(x) > 0.0, t, PTANH_NEG_SLOPE * t)


def penalized_tanh_grad(x):
    t = np.tanh(x)
    return (1.0 - t * t) * np.where(np.asarray(x) > 0.0, 1.0, PTANH_NEG_SLOPE)


class NetworkParams:
    """Weights (out x in) and biases of every layer, in forward order.

    All values live in one flat float64 buffer; the per-layer arrays are
    views into it, so whole-network updates (Adam, Polyak averaging) run as
    single vector operations.
    """

    __slots__ = ("flat", "shapes", "weights", "biases")

    def __init__(self, weights, biases):
        shapes = [np.asarray(w).shape for w in weights]
        self._allocate(shapes)
        for view, src in zip(self.weights, weights):
            view[:] = src
        for view, src in zip(self.biases, biases):
            view[:] = src

    def _allocate(self, shapes):
        self.shapes = list(shapes)
        total = sum(rows * cols + rows for rows, cols in shapes)
        self.flat = np.zeros(total)
        self.weights, self.biases = [], []
        offset = 0
        for rows, cols in shapes:
            self.weights.append(self.flat[offset : offset + rows * cols].reshape(rows, cols))
            offset += rows * cols
            self.biases.append(self.flat[offset : offset + rows])
            offset += rows

    @classmethod
    def _from_shapes(cls, shapes) -> "NetworkParams":
        params = cls.__new__(cls)
        params._allocate(shapes)
        return params

    @classmethod
    def init(
        cls,
        input_dim: int,
        hidden_dims,
        output_dim: int,
        rng: np.random.Generator,
    ) -> "NetworkParams":
        """Uniform weights on [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
        dims = [input_dim, *hidden_dims, output_dim]
        params = cls._from_shapes([(o, i) for i, o in zip(dims[:-1], dims[1:])])
        for w in params.weights:
            bound = 1.0 / math.sqrt(w.shape[1])
            w[:] = rng.uniform(-bound, bound, size=w.shape)
        return params

    @classmethod
    def zeros(cls, input_dim: int, hidden_dims, output_dim: int) -> "NetworkParams":
        dims = [input_dim, *hidden_dims, output_dim]
        return cls._from_shapes([(o, i) for i, o in zip(dims[:-1], dims[1:])])

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    def arrays(self):
        """All parameter arrays, weights interleaved with biases."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def copy(self) -> "NetworkParams":
        params = NetworkParams._from_shapes(self.shapes)
        params.flat[:] = self.flat
        return params

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams._from_shapes(self.shapes)

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.flat).all())

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.shapes == other.shapes and np.array_equal(self.flat, other.flat)

    def __getstate__(self):
        return {"shapes": self.shapes, "flat": self.flat}

    def __setstate__(self, state):
        self._allocate(state["shapes"])
        self.flat[:] = state["flat"]


def forward_cached(params: NetworkParams, s: np.ndarray):
    """Forward pass returning the output and the cache backward() needs."""
    s = np.asarray(s, dtype=float)
    if s.shape != (params.input_dim,):
        raise ValueError(f"input of shape {s.shape} does not match input_dim {params.input_dim}")
    acts = [s]
    pre, tanhs = [], []
    a = s
    n_hidden = len(params.weights) - 1
    for i in range(n_hidden):
        z = params.weights[i] @ a + params.biases[i]
        t = np.tanh(z)
        a = np.where(z > 0.0, t, PTANH_NEG_SLOPE * t)
        pre.append(z)
        tanhs.append(t)
        acts.append(a)
    out = params.weights[-1] @ a + params.biases[-1]
    return out, (acts, pre, tanhs)


def forward(params: NetworkParams, s: np.ndarray) -> np.ndarray:
    out, _ = forward_cached(params, s)
    return out


def backward(params: NetworkParams, cache, grad_out: np.ndarray) -> NetworkParams:
    """Exact gradients of (grad_out . output) w.r.t. every parameter."""
    acts, pre, tanhs = cache
    n_layers = len(params.weights)
    grads = params.zeros_like()
    g = np.asarray(grad_out, dtype=float)
    np.outer(g, acts[-1], out=grads.weights[-1])
    grads.biases[-1][:] = g
    g = params.weights[-1].T @ g
    for i in range(n_layers - 2, -1, -1):
        dact = (1.0 - tanhs[i] * tanhs[i]) * np.where(pre[i] > 0.0, 1.0, PTANH_NEG_SLOPE)
        g = g * dact
        np.outer(g, acts[i], out=grads.weights[i])
        grads.biases[i][:] = g
        if i > 0:
            g = params.weights[i].T @ g
    return grads


def split_gaussian(out: np.ndarray):
    """Read a Gaussian-head output as (mu, log_sigma) halves."""
    n = out.shape[0]
    if n % 2 != 0:
        raise ValueError(f"Gaussian head needs an even output width, got {n}")
    half = n // 2
    return out[:half], out[half:]


def reparameterize(mu: np.ndarray, log_sigma: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """q = mu + exp(log_sigma) * noise; differentiable in mu and log_sigma."""
    return mu + np.exp(log_sigma) * noise


def sample_gaussian_head(mu: np.ndarray, log_sigma: np.ndarray, rng: np.random.Generator):
    """Sample per-action estimates; returns (q, noise) so gradients can replay."""
    noise = rng.standard_normal(mu.shape[0])
    return reparameterize(mu, log_sigma, noise), noise


def gaussian_log_density(q, mu, log_sigma):
    """Log density of q under Normal(mu, exp(log_sigma)); elementwise."""
    q = np.asarray(q, dtype=float)
    mu = np.asarray(mu, dtype=float)
    log_sigma = np.asarray(log_sigma, dtype=float)
    # standardize before squaring so huge log_sigma cannot overflow
    z = (q - mu) * np.exp(-log_sigma)
    return -log_sigma - 0.5 * LOG_2PI - z * z / 2.0


class Adam:
    """Bias-corrected Adam over a NetworkParams instance, updated in place."""

    def __init__(self, params: NetworkParams, learning_rate: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.first_moment = np.zeros_like(params.flat)
        self.second_moment = np.zeros_like(params.flat)
        self._scratch = np.zeros_like(params.flat)

    def step(self, params: NetworkParams, grads: NetworkParams) -> None:
        self.step_count += 1
        bc1 = 1.0 - self.beta1**self.step_count
        bc2 = 1.0 - self.beta2**self.step_count
        scale = self.learning_rate / bc1
        root_bc2 = math.sqrt(bc2)
        g = grads.flat
        m = self.first_moment
        v = self.second_moment
        buf = self._scratch
        m *= self.beta1
        m += (1.0 - self.beta1) * g
        v *= self.beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - self.beta2
        v += buf
        # update = scale * m / (sqrt(v) / root_bc2 + eps), assembled in place
        np.sqrt(v, out=buf)
        buf /= root_bc2
        buf += self.epsilon
        np.divide(m, buf, out=buf)
        buf *= scale
        params.flat -= buf


@dataclass
class TargetPair:
    """Online parameters and their slowly tracking target copy."""

    online: NetworkParams
    target: NetworkParams = None
    tau: float = 1e-4

    def __post_init__(self):
        if self.target is None:
            self.target = self.online.copy()

    def polyak_update(self) -> None:
        """target <- (1 - tau) * target + tau * online, elementwise."""
        self.target.flat *= 1.0 - self.tau
        self.target.flat += self.tau * self.online.flat


def params_to_bytes(params: NetworkParams) -> bytes:
    """Snapshot: little-endian u32 shape header, then f64 weight/bias data."""
    header = [np.array([len(params.weights)], dtype="<u4").tobytes()]
    for w in params.weights:
        header.append(np.array(w.shape, dtype="<u4").tobytes())
    body = []
    for w, b in zip(params.weights, params.biases):
        body.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        body.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(header + body)


def params_from_bytes(buf: bytes) -> NetworkParams:
    n_layers = int(np.frombuffer(buf, dtype="<u4", count=1)[0])
    shapes = np.frombuffer(buf, dtype="<u4", count=2 * n_layers, offset=4).reshape(n_layers, 2)
    offset = 4 + 8 * n_layers
    weights, biases = [], []
    for rows, cols in shapes:
        rows, cols = int(rows), int(cols)
        w = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += 8 * rows * cols
        b = np.frombuffer(buf, dtype="<f8", count=rows, offset=offset)
        offset += 8 * rows
        weights.append(w.astype(float))
        biases.append(b.astype(float))
    if offset != len(buf):
        raise ValueError("trailing bytes after parameter snapshot")
    return NetworkParams(weights, biases)


def save_params(params: NetworkParams, path) -> None:
    with open(path, "wb") as fh:
        fh.write(params_to_bytes(params))


def load_params(path) -> NetworkParams:
    with open(path, "rb") as fh:
        return params_from_bytes(fh.read())
