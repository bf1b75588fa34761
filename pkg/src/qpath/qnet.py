"""Q-value network: two E2E layers, one E2N layer, two dense layers.

Forward evaluation maps a (3, m, m) moving state to m Q-values. Gradients
are computed analytically (the finite-difference tests in the suite pin them
down), and training uses an adaptive-moment gradient step. All parameters are
float64; every output channel of a convolution layer owns one m x m weight
grid shared across its input channels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .backend import kernels as _default_kernels
from .errors import ArgumentError, TrainingDivergenceError

MAGIC = b"QPATHNET"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    """Layer widths; m is the state dimension, the rest are config-exposed."""

    m: int
    e2e1_channels: int = 8
    e2e2_channels: int = 16
    e2n_channels: int = 16
    hidden: int = 256

    def __post_init__(self):
        for name, val in (("m", self.m), ("e2e1_channels", self.e2e1_channels),
                          ("e2e2_channels", self.e2e2_channels),
                          ("e2n_channels", self.e2n_channels),
                          ("hidden", self.hidden)):
            if val <= 0:
                raise ArgumentError(f"{name} must be positive")


PARAM_FIELDS = (
    "e2e1_w", "e2e1_b", "e2e2_w", "e2e2_b",
    "e2n_w", "e2n_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b",
)


class QNetwork:
    """Parameter container plus forward/backward passes."""

    def __init__(self, cfg: NetConfig, params: dict[str, np.ndarray],
                 kernels=None):
        self.cfg = cfg
        self.kernels = kernels if kernels is not None else _default_kernels
        expected = self._shapes(cfg)
        for name in PARAM_FIELDS:
            arr = np.ascontiguousarray(params[name], dtype=float)
            if arr.shape != expected[name]:
                raise ArgumentError(
                    f"parameter {name} has shape {arr.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(arr)):
                raise ArgumentError(f"parameter {name} contains non-finite values")
            setattr(self, name, arr)

    @staticmethod
    def _shapes(cfg: NetConfig) -> dict[str, tuple]:
        m, c1, c2, c3, h = (cfg.m, cfg.e2e1_channels, cfg.e2e2_channels,
                            cfg.e2n_channels, cfg.hidden)
        return {
            "e2e1_w": (c1, m, m), "e2e1_b": (c1,),
            "e2e2_w": (c2, m, m), "e2e2_b": (c2,),
            "e2n_w": (c3, m, m), "e2n_b": (c3,),
            "fc1_w": (h, c3 * m), "fc1_b": (h,),
            "fc2_w": (m, h), "fc2_b": (m,),
        }

    @classmethod
    def initialize(cls, cfg: NetConfig, rng: np.random.Generator,
                   kernels=None) -> "QNetwork":
        """Fan-in scaled uniform weights, zero biases."""
        m = cfg.m
        fans = {
            "e2e1_w": 2 * m * 3,
            "e2e2_w": 2 * m * cfg.e2e1_channels,
            "e2n_w": 2 * m * cfg.e2e2_channels,
            "fc1_w": cfg.e2n_channels * m,
            "fc2_w": cfg.hidden,
        }
        params = {}
        for name, shape in cls._shapes(cfg).items():
            if name.endswith("_b"):
                params[name] = np.zeros(shape)
            else:
                s = 1.0 / np.sqrt(fans[name])
                params[name] = rng.uniform(-s, s, size=shape)
        return cls(cfg, params, kernels=kernels)

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_FIELDS}

    def copy(self) -> "QNetwork":
        return QNetwork(self.cfg, {k: v.copy() for k, v in self.params().items()},
                        kernels=self.kernels)

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(getattr(self, name)) for name in PARAM_FIELDS}

    # -- forward / backward --------------------------------------------------

    def forward(self, channels: np.ndarray):
        """Return (q_values, cache); cache feeds :meth:`backward`."""
        k = self.kernels
        s = np.asarray(channels, dtype=float)
        if s.shape != (3, self.cfg.m, self.cfg.m):
            raise ArgumentError(
                f"state shape {s.shape} does not match m={self.cfg.m}")
        m0 = s.sum(axis=0)
        pre1 = k.e2e_forward(m0, self.e2e1_w, self.e2e1_b)
        h1 = np.maximum(pre1, 0.0)
        m1 = h1.sum(axis=0)
        pre2 = k.e2e_forward(m1, self.e2e2_w, self.e2e2_b)
        h2 = np.maximum(pre2, 0.0)
        m2 = h2.sum(axis=0)
        pre3 = k.e2n_forward(m2, self.e2n_w, self.e2n_b)
        h3 = np.maximum(pre3, 0.0)
        x = h3.reshape(-1)
        pre4 = self.fc1_w @ x + self.fc1_b
        h4 = np.maximum(pre4, 0.0)
        q = self.fc2_w @ h4 + self.fc2_b
        cache = _ForwardCache(m0, pre1, m1, pre2, m2, pre3, x, pre4, h4)
        return q, cache

    def q_values(self, state) -> np.ndarray:
        channels = state.channels if hasattr(state, "channels") else state
        q, _ = self.forward(channels)
        return q

    def backward(self, cache, dq: np.ndarray) -> dict[str, np.ndarray]:
        """Exact gradients of a scalar loss given dLoss/dq."""
        if cache is None:
            raise ArgumentError("backward requires the cache from forward()")
        k = self.kernels
        dq = np.asarray(dq, dtype=float)
        g = {}
        g["fc2_w"] = np.outer(dq, cache.h4)
        g["fc2_b"] = dq.copy()
        dh4 = self.fc2_w.T @ dq
        dpre4 = dh4 * (cache.pre4 > 0.0)
        g["fc1_w"] = np.outer(dpre4, cache.x)
        g["fc1_b"] = dpre4
        dx = self.fc1_w.T @ dpre4
        dpre3 = dx.reshape(self.cfg.e2n_channels, self.cfg.m) * (cache.pre3 > 0.0)
        g["e2n_w"], g["e2n_b"], dm2 = k.e2n_backward(cache.m2, self.e2n_w, dpre3)
        dpre2 = dm2[None, :, :] * (cache.pre2 > 0.0)
        g["e2e2_w"], g["e2e2_b"], dm1 = k.e2e_backward(cache.m1, self.e2e2_w,
                                                       np.ascontiguousarray(dpre2))
        dpre1 = dm1[None, :, :] * (cache.pre1 > 0.0)
        g["e2e1_w"], g["e2e1_b"], _ = k.e2e_backward(cache.m0, self.e2e1_w,
                                                     np.ascontiguousarray(dpre1))
        return g

    # -- serialization ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        cfg = self.cfg
        head = MAGIC + struct.pack(
            "<6I", FORMAT_VERSION, cfg.m, cfg.e2e1_channels, cfg.e2e2_channels,
            cfg.e2n_channels, cfg.hidden)
        body = b"".join(getattr(self, name).astype("<f8").tobytes()
                        for name in PARAM_FIELDS)
        return head + body

    @classmethod
    def from_bytes(cls, blob: bytes, kernels=None) -> "QNetwork":
        if blob[:len(MAGIC)] != MAGIC:
            raise ArgumentError("not a serialized network (bad magic)")
        off = len(MAGIC)
        version, m, c1, c2, c3, h = struct.unpack_from("<6I", blob, off)
        if version != FORMAT_VERSION:
            raise ArgumentError(f"unsupported network format version {version}")
        off += struct.calcsize("<6I")
        cfg = NetConfig(m, c1, c2, c3, h)
        params = {}
        for name, shape in cls._shapes(cfg).items():
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
            params[name] = arr.astype(float).reshape(shape)
            off += count * 8
        return cls(cfg, params, kernels=kernels)


class _ForwardCache:
    __slots__ = ("m0", "pre1", "m1", "pre2", "m2", "pre3", "x", "pre4", "h4")

    def __init__(self, m0, pre1, m1, pre2, m2, pre3, x, pre4, h4):
        self.m0 = m0
        self.pre1 = pre1
        self.m1 = m1
        self.pre2 = pre2
        self.m2 = m2
        self.pre3 = pre3
        self.x = x
        self.pre4 = pre4
        self.h4 = h4


def accumulate_grads(total: dict[str, np.ndarray], part: dict[str, np.ndarray]):
    for name in PARAM_FIELDS:
        total[name] += part[name]


class Adam:
    """Adaptive-moment gradient descent over a QNetwork's parameters."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[str, np.ndarray] | None = None
        self._v: dict[str, np.ndarray] | None = None

    def step(self, net: QNetwork, grads: dict[str, np.ndarray]) -> QNetwork:
        if self._m is None:
            self._m = {k: np.zeros_like(getattr(net, k)) for k in PARAM_FIELDS}
            self._v = {k: np.zeros_like(getattr(net, k)) for k in PARAM_FIELDS}
        for name in PARAM_FIELDS:
            if not np.all(np.isfinite(grads[name])):
                raise TrainingDivergenceError(f"non-finite gradient in {name}")
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name in PARAM_FIELDS:
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            getattr(net, name)[...] = getattr(net, name) - self.lr * update
        return net


def copy_to_target(net: QNetwork) -> QNetwork:
    """Deep value copy used as the frozen Bellman-target network."""
    return net.copy()
