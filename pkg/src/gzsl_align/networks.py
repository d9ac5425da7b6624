"""Trainable feedforward networks with exact analytic gradients.

Three nets make up the model: an optional feature encoder, a visual
mapping net, and a semantic mapping net. Both mapping nets project into
a shared latent space where cosine similarity scores class relevance.
Forward passes record a tape of layer inputs and pre-activations;
backward passes replay the tape for exact parameter and input gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateVectorError


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths of a feedforward net: ``(in, h1, ..., out)``.

    ReLU is applied after every affine layer except the last, so a
    single-layer spec is a pure affine map.
    """

    layer_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ValueError(f"need at least [in, out] layer dims, got {dims}")
        if any(d <= 0 for d in dims):
            raise ValueError(f"layer widths must be positive, got {dims}")

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass
class MlpParams:
    """Weights and biases of one net; ``weights[k]`` has shape (in_k, out_k)."""

    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def validate(self) -> None:
        dims = self.spec.layer_dims
        if len(self.weights) != self.spec.n_layers or len(self.biases) != self.spec.n_layers:
            raise ValueError("layer count does not match spec")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (dims[k], dims[k + 1])
            if w.shape != want:
                raise ValueError(f"layer {k} weight shape {w.shape}, expected {want}")
            if b.shape != (dims[k + 1],):
                raise ValueError(f"layer {k} bias shape {b.shape}, expected ({dims[k + 1]},)")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k} contains non-finite parameters")

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in declared order: W1, b1, W2, b2, ..."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.spec,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class MlpTape:
    """Cached forward state: per-layer inputs and pre-activations."""

    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    single: bool


def init_params(spec: MlpSpec, seed) -> MlpParams:
    """Initialize weights uniformly in +/- 1/sqrt(fan_in), biases to zero.

    ``seed`` may be an int or a ``np.random.SeedSequence``; the result is
    deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_dims[:-1], spec.layer_dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(spec, weights, biases)


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, MlpTape]:
    """Evaluate the net on a vector or a batch of row vectors.

    Returns the output (same rank as the input) and the tape needed by
    :func:`mlp_backward`.
    """
    a = np.asarray(x, dtype=np.float64)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != params.spec.in_dim:
        raise ValueError(
            f"input width {a.shape[-1] if a.ndim else '?'} does not match "
            f"net input width {params.spec.in_dim}"
        )
    n = params.spec.n_layers
    inputs: list[np.ndarray] = []
    preacts: list[np.ndarray] = []
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w + b
        preacts.append(z)
        a = np.maximum(z, 0.0) if k < n - 1 else z
    out = a[0] if single else a
    return out, MlpTape(inputs, preacts, single)


def mlp_backward(
    params: MlpParams, tape: MlpTape, grad_out: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Backpropagate ``grad_out`` through a recorded forward pass.

    Returns gradients in the same order as :meth:`MlpParams.arrays`
    (dW1, db1, ...) plus the gradient with respect to the input. The
    ReLU subgradient at 0 is taken as 0.
    """
    g = np.asarray(grad_out, dtype=np.float64)
    if tape.single:
        g = g[None, :]
    n = params.spec.n_layers
    if g.shape != tape.preacts[-1].shape:
        raise ValueError(f"grad_out shape {g.shape} != output shape {tape.preacts[-1].shape}")
    grads: list[np.ndarray] = [np.empty(0)] * (2 * n)
    for k in reversed(range(n)):
        dz = g if k == n - 1 else g * (tape.preacts[k] > 0.0)
        grads[2 * k] = tape.inputs[k].T @ dz
        grads[2 * k + 1] = dz.sum(axis=0)
        g = dz @ params.weights[k].T
    grad_in = g[0] if tape.single else g
    return grads, grad_in


def row_norms(m: np.ndarray, what: str = "vector") -> np.ndarray:
    """Euclidean norms of matrix rows, raising on any zero-norm row."""
    norms = np.linalg.norm(m, axis=-1)
    if np.any(norms == 0.0):
        idx = int(np.argwhere(norms == 0.0)[0][0])
        raise DegenerateVectorError(f"{what} {idx} has zero norm")
    return norms


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero-norm vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def pairwise_cosine(a: np.ndarray, b: np.ndarray, what: str = "row") -> np.ndarray:
    """Cosine similarities between all rows of ``a`` and all rows of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    an = row_norms(a, what)
    bn = row_norms(b, what)
    return np.clip((a / an[:, None]) @ (b / bn[:, None]).T, -1.0, 1.0)


@dataclass
class ModelParams:
    """Parameters of the full model.

    ``encoder`` is optional; when absent, precomputed features feed the
    visual mapping net directly (frozen-feature operation). Both mapping
    nets share the latent output width.
    """

    visual_map: MlpParams
    semantic_map: MlpParams
    encoder: MlpParams | None = None

    def validate(self) -> None:
        self.visual_map.validate()
        self.semantic_map.validate()
        if self.visual_map.spec.out_dim != self.semantic_map.spec.out_dim:
            raise ValueError(
                "visual and semantic mapping nets must share the latent width: "
                f"{self.visual_map.spec.out_dim} != {self.semantic_map.spec.out_dim}"
            )
        if self.encoder is not None:
            self.encoder.validate()
            if self.encoder.spec.out_dim != self.visual_map.spec.in_dim:
                raise ValueError(
                    "encoder output width must match visual mapping input: "
                    f"{self.encoder.spec.out_dim} != {self.visual_map.spec.in_dim}"
                )

    @property
    def latent_dim(self) -> int:
        return self.visual_map.spec.out_dim

    @property
    def feature_dim(self) -> int:
        return self.encoder.spec.in_dim if self.encoder else self.visual_map.spec.in_dim

    @property
    def semantic_dim(self) -> int:
        return self.semantic_map.spec.in_dim

    def nets(self) -> list[tuple[str, MlpParams]]:
        out = []
        if self.encoder is not None:
            out.append(("encoder", self.encoder))
        out.append(("visual_map", self.visual_map))
        out.append(("semantic_map", self.semantic_map))
        return out

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays: encoder (if any), then visual, then semantic."""
        out: list[np.ndarray] = []
        for _, net in self.nets():
            out.extend(net.arrays())
        return out

    def array_names(self) -> list[str]:
        names = []
        for label, net in self.nets():
            for k in range(net.spec.n_layers):
                names.append(f"{label}.layer{k}.weight")
                names.append(f"{label}.layer{k}.bias")
        return names

    def copy(self) -> "ModelParams":
        return ModelParams(
            visual_map=self.visual_map.copy(),
            semantic_map=self.semantic_map.copy(),
            encoder=self.encoder.copy() if self.encoder else None,
        )


@dataclass
class ModelGrads:
    """Gradients mirroring :class:`ModelParams`, in the same array order."""

    visual_map: list[np.ndarray]
    semantic_map: list[np.ndarray]
    encoder: list[np.ndarray] | None = None

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        if self.encoder is not None:
            out.extend(self.encoder)
        out.extend(self.visual_map)
        out.extend(self.semantic_map)
        return out


def zero_grads_like(net: MlpParams) -> list[np.ndarray]:
    out = []
    for w, b in zip(net.weights, net.biases):
        out.extend((np.zeros_like(w), np.zeros_like(b)))
    return out


def add_into(acc: list[np.ndarray], extra: list[np.ndarray]) -> None:
    for a, e in zip(acc, extra):
        a += e


def init_model_params(
    visual_spec: MlpSpec,
    semantic_spec: MlpSpec,
    encoder_spec: MlpSpec | None,
    seed: int,
) -> ModelParams:
    """Initialize all nets from one seed, each on an independent stream."""
    enc_seq, vis_seq, sem_seq = np.random.SeedSequence(seed).spawn(3)
    params = ModelParams(
        visual_map=init_params(visual_spec, vis_seq),
        semantic_map=init_params(semantic_spec, sem_seq),
        encoder=init_params(encoder_spec, enc_seq) if encoder_spec else None,
    )
    params.validate()
    return params
