"""Small dense networks with hand-written reverse-mode gradients, a
first-order adaptive optimizer, target-network tracking, and a versioned
checkpoint container.

Parameters live in flat float64 vectors so snapshots, Polyak mixing, and
finite-difference verification are all plain array operations. Everything
is deterministic given the seeds in the specs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, PoisonError

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    """Architecture and initialization recipe for one network."""

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activation: str = "relu"
    init_seed: int = 0
    # Multiplier on the final layer's init; 0 gives an initially constant
    # (all-zero) output head, which for a softmax actor means uniform rows.
    out_scale: float = 1.0

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden, self.output_dim)
        if any(d < 1 for d in dims):
            raise InvalidInputError(f"all layer dims must be >= 1, got {dims}")
        if self.activation not in ("relu", "tanh"):
            raise InvalidInputError(f"unknown activation {self.activation!r}")

    @property
    def layer_dims(self) -> tuple[tuple[int, int], ...]:
        dims = (self.input_dim, *self.hidden, self.output_dim)
        return tuple(zip(dims[:-1], dims[1:]))

    @property
    def n_params(self) -> int:
        return sum(fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_dims)


class Mlp:
    """Stateless forward/backward engine for one MlpSpec; parameters are
    always passed in as a flat vector."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        self._offsets = []
        pos = 0
        for fan_in, fan_out in spec.layer_dims:
            w_end = pos + fan_in * fan_out
            b_end = w_end + fan_out
            self._offsets.append((pos, w_end, b_end, fan_in, fan_out))
            pos = b_end
        self.n_params = pos

    def init_params(self) -> np.ndarray:
        """Fan-in scaled uniform initialization, seeded from the spec."""
        rng = np.random.default_rng(self.spec.init_seed)
        params = np.empty(self.n_params, dtype=np.float64)
        last = len(self._offsets) - 1
        for li, (pos, w_end, b_end, fan_in, _) in enumerate(self._offsets):
            bound = 1.0 / np.sqrt(fan_in)
            if li == last:
                bound *= self.spec.out_scale
            params[pos:b_end] = rng.uniform(-bound, bound, b_end - pos)
        return params

    def _layers(self, params: np.ndarray):
        if params.shape != (self.n_params,):
            raise InvalidInputError(
                f"parameter vector length {params.shape} != ({self.n_params},)"
            )
        for pos, w_end, b_end, fan_in, fan_out in self._offsets:
            yield params[pos:w_end].reshape(fan_in, fan_out), params[w_end:b_end]

    def _activate(self, z: np.ndarray) -> np.ndarray:
        return np.maximum(z, 0.0) if self.spec.activation == "relu" else np.tanh(z)

    def forward(self, params: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Apply the network. x is (input_dim,) or (batch, input_dim); the
        output keeps the batch shape."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        if h.shape[1] != self.spec.input_dim:
            raise InvalidInputError(
                f"input width {h.shape[1]} != {self.spec.input_dim}"
            )
        n_layers = len(self._offsets)
        for li, (w, b) in enumerate(self._layers(params)):
            h = h @ w + b
            if li < n_layers - 1:
                h = self._activate(h)
        return h[0] if squeeze else h

    def backward(
        self, params: np.ndarray, x: np.ndarray, output_grad: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Exact reverse-mode gradients of `forward`.

        Returns (parameter gradient summed over the batch, input gradient
        with the batch shape preserved).
        """
        x = np.asarray(x, dtype=np.float64)
        output_grad = np.asarray(output_grad, dtype=np.float64)
        squeeze = x.ndim == 1
        h = x[None, :] if squeeze else x
        g = output_grad[None, :] if squeeze else output_grad
        if g.shape[-1] != self.spec.output_dim or g.shape[0] != h.shape[0]:
            raise InvalidInputError("output_grad shape does not match forward")

        n_layers = len(self._offsets)
        layers = list(self._layers(params))
        pre_acts = []
        inputs = [h]
        for li, (w, b) in enumerate(layers):
            z = inputs[-1] @ w + b
            pre_acts.append(z)
            inputs.append(self._activate(z) if li < n_layers - 1 else z)

        gparams = np.zeros(self.n_params, dtype=np.float64)
        for li in range(n_layers - 1, -1, -1):
            w, _ = layers[li]
            pos, w_end, b_end, fan_in, fan_out = self._offsets[li]
            if li < n_layers - 1:
                z = pre_acts[li]
                if self.spec.activation == "relu":
                    g = g * (z > 0.0)
                else:
                    g = g * (1.0 - np.tanh(z) ** 2)
            gparams[pos:w_end] = (inputs[li].T @ g).ravel()
            gparams[w_end:b_end] = g.sum(axis=0)
            g = g @ w.T
        return gparams, (g[0] if squeeze else g)


@dataclass
class Adam:
    """First-order adaptive optimizer over a flat parameter vector."""

    n_params: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None)  # type: ignore[assignment]
    v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.n_params, dtype=np.float64)
        if self.v is None:
            self.v = np.zeros(self.n_params, dtype=np.float64)

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        if grads.shape != (self.n_params,):
            raise InvalidInputError("gradient length does not match optimizer")
        if not np.all(np.isfinite(grads)):
            raise PoisonError("non-finite gradient reached the optimizer")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads**2
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {"m": self.m, "v": self.v, "t": np.array([self.t], dtype=np.int64)}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]):
        self.m = np.asarray(arrays["m"], dtype=np.float64).copy()
        self.v = np.asarray(arrays["v"], dtype=np.float64).copy()
        self.t = int(arrays["t"][0])


def polyak_update(
    target: np.ndarray, online: np.ndarray, tau: float
) -> np.ndarray:
    """Geometric tracking of the online parameters: (1 - tau) * target +
    tau * online. tau = 1 is a hard copy."""
    if target.shape != online.shape:
        raise InvalidInputError("parameter shapes differ")
    if not (0.0 < tau <= 1.0):
        raise InvalidInputError(f"tau {tau} outside (0, 1]")
    if tau == 1.0:
        return online.copy()
    return (1.0 - tau) * target + tau * online


def save_bundle(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]):
    """Write a checkpoint: one .npz holding a JSON metadata document (with
    a format version) plus named float64/int64 payload arrays."""
    meta = dict(meta)
    meta["format_version"] = CHECKPOINT_FORMAT_VERSION
    payload = {"__meta__": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for name, arr in arrays.items():
        if name.startswith("__"):
            raise InvalidInputError(f"reserved array name {name!r}")
        payload[name] = np.asarray(arr)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_bundle(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a checkpoint written by save_bundle, enforcing the format
    version."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        arrays = {k: data[k].copy() for k in data.files if k != "__meta__"}
    version = meta.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise InvalidInputError(
            f"checkpoint format version {version} is not supported "
            f"(this build reads version {CHECKPOINT_FORMAT_VERSION})"
        )
    return meta, arrays
