"""Jacobians of the autoencoder assembled by the chain rule.

Each affine layer contributes its weight matrix; each ReLU contributes a
diagonal Heaviside matrix of its cached pre-activation (entry 1 when the
pre-activation is > 0, else 0); the final tanh contributes the diagonal
1 - tanh^2 factor. Four Jacobians are exposed:

  encoder_jacobian  d x 784   derivative of the encoder at x
  decoder_jacobian  784 x d   derivative of the decoder at z
  input_jacobian    784 x 784 derivative of decoder o encoder at x
  latent_jacobian   d x d     derivative of encoder o decoder at z

The latent Jacobian evaluates the decoder factors on the cached z -> y
pass and the encoder factors on a fresh forward pass at the
reconstruction y, which is what the chain rule requires; when the
reconstruction error is zero the two large/small Jacobians share their
nonzero eigenvalues exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import ActivationCache, AutoencoderParams, forward


@dataclass(frozen=True)
class JacobianRequest:
    """Which Jacobian to compute and at which point.

    `which` is one of "latent", "input", "encoder", "decoder"; `point` is
    a 784-vector (or a d-vector for "decoder").
    """

    which: str
    point: np.ndarray

    def __post_init__(self):
        if self.which not in ("latent", "input", "encoder", "decoder"):
            raise ValueError(f"unknown jacobian kind {self.which!r}")
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))


def _heaviside(pre: np.ndarray) -> np.ndarray:
    return (pre > 0.0).astype(np.float64)


def encoder_jacobian(params: AutoencoderParams, cache: ActivationCache) -> np.ndarray:
    """d x 784 derivative of the encoder at the cached input."""
    j = params.weights[0]
    for i in (1, 2, 3):
        j = params.weights[i] @ (_heaviside(cache.pre[i - 1])[:, None] * j)
    return j


def _decoder_preacts(params: AutoencoderParams, z: np.ndarray):
    """Pre-activations of the four decoder layers evaluated at z."""
    pre = []
    h = z
    for i in range(4, 8):
        p = params.weights[i] @ h + params.biases[i]
        pre.append(p)
        h = np.tanh(p) if i == 7 else np.maximum(p, 0.0)
    return pre


def decoder_jacobian(params: AutoencoderParams, cache_or_z) -> np.ndarray:
    """784 x d derivative of the decoder at z.

    Accepts either an ActivationCache (decoder factors read from the
    cached pass) or a bare latent vector (a decoder-only pass is run).
    """
    if isinstance(cache_or_z, ActivationCache):
        pre = cache_or_z.pre[4:8]
    else:
        z = np.asarray(cache_or_z, dtype=np.float64)
        if z.shape != (params.latent_dim,):
            raise ValueError(
                f"expected a length-{params.latent_dim} latent vector, got {z.shape}")
        pre = _decoder_preacts(params, z)
    j = params.weights[4]
    for i in (5, 6, 7):
        j = params.weights[i] @ (_heaviside(pre[i - 5])[:, None] * j)
    t = 1.0 - np.tanh(pre[3]) ** 2
    return t[:, None] * j


def input_jacobian(params: AutoencoderParams, cache: ActivationCache) -> np.ndarray:
    """784 x 784 derivative of the reconstruction map; rank at most d."""
    return decoder_jacobian(params, cache) @ encoder_jacobian(params, cache)


def latent_jacobian(params: AutoencoderParams, cache: ActivationCache) -> np.ndarray:
    """d x d derivative of encoder o decoder at z = f_enc(x)."""
    jd = decoder_jacobian(params, cache)
    cache_at_y = forward(params, cache.y)
    return encoder_jacobian(params, cache_at_y) @ jd


def compute(params: AutoencoderParams, request: JacobianRequest) -> np.ndarray:
    """Dispatch a JacobianRequest to the matching assembly."""
    if request.which == "decoder":
        return decoder_jacobian(params, request.point)
    cache = forward(params, request.point)
    if request.which == "encoder":
        return encoder_jacobian(params, cache)
    if request.which == "input":
        return input_jacobian(params, cache)
    return latent_jacobian(params, cache)
