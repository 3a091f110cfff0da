"""Dense/convolutional actor-critic networks with hand-written gradients.

Everything runs in float64 numpy.  Two trunk families cover the needs of
the environments: a plain MLP (tanh) for low-dimensional observations and
a small CNN (2x2 kernels, stride 1, ReLU) over an image block with extra
flat features concatenated before the dense layers.  Actor and critic
heads share the full trunk.  Reverse-mode gradients are exact and are
checked against central finite differences in the test suite.

Checkpoint format (little-endian): 8-byte magic ``GRLNET01``, uint32
version, uint32 length of a JSON network spec, the spec bytes, then every
parameter array in declaration order as raw float64.
"""

from __future__ import annotations

import json
import struct
from typing import Optional

import numpy as np

CHECKPOINT_MAGIC = b"GRLNET01"
CHECKPOINT_VERSION = 1


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "identity":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(kind: str, out: np.ndarray) -> np.ndarray:
    """Derivative expressed through the activation output."""
    if kind == "tanh":
        return 1.0 - out * out
    if kind == "relu":
        return (out > 0.0).astype(np.float64)
    return np.ones_like(out)


def _uniform_init(rng: Optional[np.random.Generator], shape, fan_in: int, gain: float):
    if rng is None:
        return np.zeros(shape, dtype=np.float64)
    limit = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """Fully connected layer with a fused activation."""

    def __init__(self, in_size: int, out_size: int, activation: str = "identity",
                 rng: Optional[np.random.Generator] = None, gain: float = np.sqrt(2.0)):
        self.in_size = in_size
        self.out_size = out_size
        self.activation = activation
        self.weight = _uniform_init(rng, (in_size, out_size), in_size, gain)
        self.bias = np.zeros(out_size, dtype=np.float64)
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)
        self._x: Optional[np.ndarray] = None
        self._out: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.in_size:
            raise ValueError(f"expected input width {self.in_size}, got {x.shape[1]}")
        self._x = x
        self._out = _activate(self.activation, x @ self.weight + self.bias)
        return self._out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward() before forward()")
        dz = d_out * _activation_grad(self.activation, self._out)
        self.d_weight += self._x.T @ dz
        self.d_bias += dz.sum(axis=0)
        return dz @ self.weight.T

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.d_weight, self.d_bias]


class Conv2d:
    """2x2-kernel, stride-1, valid-padding convolution with a fused activation.

    Input and output are channels-last (N, H, W, C), matching the flat
    observation layout, so no axis permutation happens anywhere on the
    hot path.  The patch matrix (im2col) is materialized once per forward
    and reused by backward; each direction costs a single matmul.
    """

    KERNEL = 2

    def __init__(self, in_channels: int, out_channels: int, activation: str = "relu",
                 rng: Optional[np.random.Generator] = None, gain: float = np.sqrt(2.0)):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.activation = activation
        k = self.KERNEL
        fan_in = in_channels * k * k
        self.weight = _uniform_init(rng, (in_channels, out_channels, k, k), fan_in, gain)
        self.bias = np.zeros(out_channels, dtype=np.float64)
        self.d_weight = np.zeros_like(self.weight)
        self.d_bias = np.zeros_like(self.bias)
        self._in_shape: Optional[tuple] = None
        self._scratch: dict = {}  # per-batch-shape work buffers, reused across passes
        self._cols: Optional[np.ndarray] = None
        self._out: Optional[np.ndarray] = None

    def _weight_matrix(self) -> np.ndarray:
        # (C, O, 2, 2) -> (4C, O) with patch order k = di * 2 + dj.
        return self.weight.transpose(2, 3, 0, 1).reshape(-1, self.out_channels)

    def _buffers(self, in_shape: tuple) -> dict:
        buf = self._scratch.get(in_shape)
        if buf is None:
            n, h, w, c = in_shape
            hs, ws = h - 1, w - 1
            buf = {
                "cols": np.empty((n, hs, ws, 4 * c), dtype=np.float64),
                "z": np.empty((n * hs * ws, self.out_channels), dtype=np.float64),
                "dz": np.empty((n * hs * ws, self.out_channels), dtype=np.float64),
                "d_cols": np.empty((n * hs * ws, 4 * c), dtype=np.float64),
                "dx": np.empty(in_shape, dtype=np.float64),
            }
            self._scratch[in_shape] = buf
        return buf

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ValueError(f"expected (N, H, W, {self.in_channels}) input, got {x.shape}")
        n, h, w, c = x.shape
        hs, ws = h - 1, w - 1
        buf = self._buffers(x.shape)
        cols = buf["cols"]
        for di in range(2):
            for dj in range(2):
                k = di * 2 + dj
                cols[..., k * c : (k + 1) * c] = x[:, di : di + hs, dj : dj + ws, :]
        self._cols = cols
        self._in_shape = x.shape
        z = np.matmul(cols.reshape(-1, 4 * c), self._weight_matrix(), out=buf["z"])
        z += self.bias
        if self.activation == "tanh":
            np.tanh(z, out=z)
        elif self.activation == "relu":
            np.maximum(z, 0.0, out=z)
        self._out = z.reshape(n, hs, ws, self.out_channels)
        return self._out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._cols is None:
            raise RuntimeError("backward() before forward()")
        n, h, w, c = self._in_shape
        hs, ws = h - 1, w - 1
        buf = self._buffers(self._in_shape)
        flat_out = self._out.reshape(-1, self.out_channels)
        dz = np.multiply(
            d_out.reshape(-1, self.out_channels),
            _activation_grad(self.activation, flat_out),
            out=buf["dz"],
        )
        self.d_bias += dz.sum(axis=0)
        d_wmat = self._cols.reshape(-1, 4 * c).T @ dz
        self.d_weight += d_wmat.reshape(2, 2, c, self.out_channels).transpose(2, 3, 0, 1)
        d_cols = np.matmul(dz, self._weight_matrix().T, out=buf["d_cols"]).reshape(
            n, hs, ws, 4 * c
        )
        dx = buf["dx"]
        dx[:] = 0.0
        for di in range(2):
            for dj in range(2):
                k = di * 2 + dj
                dx[:, di : di + hs, dj : dj + ws, :] += d_cols[..., k * c : (k + 1) * c]
        return dx

    def params(self):
        return [self.weight, self.bias]

    def grads(self):
        return [self.d_weight, self.d_bias]


class MlpTrunk:
    """Stack of dense layers over a flat observation."""

    def __init__(self, obs_size: int, hidden, activation: str = "tanh",
                 rng: Optional[np.random.Generator] = None):
        self.obs_size = obs_size
        self.layers = []
        width = obs_size
        for size in hidden:
            self.layers.append(Dense(width, size, activation, rng))
            width = size
        self.out_size = width

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, d_feat: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            d_feat = layer.backward(d_feat)
        return d_feat

    def layers_in_order(self):
        return list(self.layers)


class ConvTrunk:
    """CNN over an image block concatenated with extra flat features.

    The observation is a flat vector: first the image as (H, W, C)
    row-major, then ``extra_size`` additional features appended to the
    flattened convolution output before the dense layers.
    """

    def __init__(self, image_shape, extra_size: int, channels, dense,
                 activation: str = "relu", rng: Optional[np.random.Generator] = None):
        self.image_shape = tuple(image_shape)  # (C, H, W)
        self.extra_size = extra_size
        c, h, w = self.image_shape
        self.obs_size = c * h * w + extra_size
        self.convs = []
        in_ch = c
        for out_ch in channels:
            self.convs.append(Conv2d(in_ch, out_ch, activation, rng))
            in_ch = out_ch
            h, w = h - 1, w - 1
            if h < 1 or w < 1:
                raise ValueError("too many conv layers for the image extent")
        self._flat_size = in_ch * h * w
        self._conv_out_shape = (h, w, in_ch)
        self.dense = []
        width = self._flat_size + extra_size
        for size in dense:
            self.dense.append(Dense(width, size, activation, rng))
            width = size
        self.out_size = width

    def forward(self, x: np.ndarray) -> np.ndarray:
        c, h, w = self.image_shape
        image_len = c * h * w
        n = x.shape[0]
        # The flat observation is (H, W, C) row-major, so this is a view.
        img = x[:, :image_len].reshape(n, h, w, c)
        for conv in self.convs:
            img = conv.forward(img)
        feat = np.concatenate([img.reshape(n, -1), x[:, image_len:]], axis=1)
        for layer in self.dense:
            feat = layer.forward(feat)
        return feat

    def backward(self, d_feat: np.ndarray) -> np.ndarray:
        for layer in reversed(self.dense):
            d_feat = layer.backward(d_feat)
        n = d_feat.shape[0]
        d_img = d_feat[:, : self._flat_size].reshape((n,) + self._conv_out_shape)
        d_extra = d_feat[:, self._flat_size :]
        for conv in reversed(self.convs):
            d_img = conv.backward(d_img)
        d_obs = np.empty((n, self.obs_size), dtype=np.float64)
        image_len = self.obs_size - self.extra_size
        d_obs[:, :image_len] = d_img.reshape(n, -1)
        d_obs[:, image_len:] = d_extra
        return d_obs

    def layers_in_order(self):
        return list(self.convs) + list(self.dense)


class ActorCritic:
    """Shared trunk with a logits head and a scalar value head."""

    def __init__(self, trunk, action_count: int, rng: Optional[np.random.Generator] = None,
                 spec: Optional[dict] = None):
        self.trunk = trunk
        self.action_count = action_count
        self.obs_size = trunk.obs_size
        self.actor_head = Dense(trunk.out_size, action_count, "identity", rng, gain=0.01)
        self.critic_head = Dense(trunk.out_size, 1, "identity", rng, gain=1.0)
        self.spec = dict(spec) if spec else {}

    def forward(self, obs: np.ndarray):
        """Logits and value; accepts one observation or a batch."""
        single = obs.ndim == 1
        x = obs[None, :] if single else obs
        if x.shape[1] != self.obs_size:
            raise ValueError(f"expected observation size {self.obs_size}, got {x.shape[1]}")
        feat = self.trunk.forward(np.asarray(x, dtype=np.float64))
        logits = self.actor_head.forward(feat)
        values = self.critic_head.forward(feat)[:, 0]
        if single:
            return logits[0], float(values[0])
        return logits, values

    def backward(self, d_logits: np.ndarray, d_values: np.ndarray) -> None:
        """Accumulate parameter gradients for the most recent forward pass."""
        if d_logits.ndim == 1:
            d_logits = d_logits[None, :]
        d_values = np.atleast_1d(np.asarray(d_values, dtype=np.float64))
        d_feat = self.actor_head.backward(d_logits)
        d_feat += self.critic_head.backward(d_values[:, None])
        self.trunk.backward(d_feat)

    def _layers(self):
        return self.trunk.layers_in_order() + [self.actor_head, self.critic_head]

    def params(self) -> list[np.ndarray]:
        return [p for layer in self._layers() for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self._layers() for g in layer.grads()]

    def zero_grads(self) -> None:
        for g in self.grads():
            g[:] = 0.0

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params())


def mlp_actor_critic(obs_size: int, action_count: int, hidden=(32, 32, 32),
                     activation: str = "tanh",
                     rng: Optional[np.random.Generator] = None) -> ActorCritic:
    spec = {
        "kind": "mlp",
        "obs_size": obs_size,
        "action_count": action_count,
        "hidden": list(hidden),
        "activation": activation,
    }
    return ActorCritic(MlpTrunk(obs_size, hidden, activation, rng), action_count, rng, spec)


def conv_actor_critic(image_shape, extra_size: int, action_count: int,
                      channels=(16, 32, 64), dense=(64, 64), activation: str = "relu",
                      rng: Optional[np.random.Generator] = None) -> ActorCritic:
    spec = {
        "kind": "conv",
        "image_shape": list(image_shape),
        "extra_size": extra_size,
        "action_count": action_count,
        "channels": list(channels),
        "dense": list(dense),
        "activation": activation,
    }
    trunk = ConvTrunk(image_shape, extra_size, channels, dense, activation, rng)
    return ActorCritic(trunk, action_count, rng, spec)


def build_network(spec: dict, rng: Optional[np.random.Generator] = None) -> ActorCritic:
    """Instantiate a network from its checkpoint spec (zero weights when rng is None)."""
    extra = {k: v for k, v in spec.items() if k in ("env",)}
    if spec["kind"] == "mlp":
        net = mlp_actor_critic(
            spec["obs_size"], spec["action_count"], spec["hidden"], spec["activation"], rng
        )
    elif spec["kind"] == "conv":
        net = conv_actor_critic(
            spec["image_shape"], spec["extra_size"], spec["action_count"],
            spec["channels"], spec["dense"], spec["activation"], rng,
        )
    else:
        raise ValueError(f"unknown network kind {spec['kind']!r}")
    net.spec.update(extra)
    return net


class Adam:
    """Standard Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


def adam_step(params, grads, state: Adam, lr: float) -> None:
    """Functional entry point over the Adam state object."""
    state.lr = lr
    state.step(grads)


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most max_norm."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm > 0.0 and total > max_norm:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


def save_checkpoint(net: ActorCritic, path) -> None:
    spec_bytes = json.dumps(net.spec, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(spec_bytes)))
        fh.write(spec_bytes)
        for p in net.params():
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path) -> ActorCritic:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a network checkpoint (bad magic)")
    version, spec_len = struct.unpack_from("<II", blob, 8)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    spec = json.loads(blob[16 : 16 + spec_len].decode("utf-8"))
    net = build_network(spec, rng=None)
    offset = 16 + spec_len
    for p in net.params():
        nbytes = p.size * 8
        if offset + nbytes > len(blob):
            raise ValueError(f"{path}: checkpoint truncated")
        p[:] = np.frombuffer(blob, dtype="<f8", count=p.size, offset=offset).reshape(p.shape)
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return net
