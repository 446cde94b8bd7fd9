from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, ContractError, DimensionError
from ..tensor import (
    ArrayLike,
    GaussianSampler,
    Tensor,
    add,
    as_tensor,
    gather,
    gelu,
    layer_norm,
    linear,
    matmul,
    mul,
    reshape,
    softmax_rows,
    sum as tensor_sum,
    tanh,
    transpose,
)
from .config import ModelConfig

_FRAME2_STREAM = 4
_LEAD_SCALE_HOURS = 24.0

Params = Mapping[str, ArrayLike]


@dataclass(frozen=True)
class TokenSequence:
    """N tokens of width D plus one mask flag per token."""

    tokens: Tensor
    masked: np.ndarray = field(default=None)

    def __post_init__(self):
        tokens = as_tensor(self.tokens)
        if tokens.ndim != 2:
            raise DimensionError(f"token sequence must be N x D, got {tokens.shape}")
        masked = np.zeros(tokens.shape[0], dtype=bool) if self.masked is None else np.asarray(self.masked, dtype=bool)
        if masked.shape != (tokens.shape[0],):
            raise DimensionError(f"{tokens.shape[0]} tokens but {masked.shape} mask flags")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "masked", masked)

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]


def _tensors(params: Params) -> Mapping[str, Tensor]:
    return {name: as_tensor(value) for name, value in params.items()}


def _field_values(x) -> ArrayLike:
    return x.values if hasattr(x, "values") and not isinstance(x, Tensor) else x


# --- variable aggregation and tokenization -------------------------------------------------

def aggregate_variables(params: Params, cfg: ModelConfig, x) -> Tensor:
    """
    Per grid point, a learnable query attends over the V variable embeddings.

    Returns a 1 x H x W x D embedding.
    """
    P = _tensors(params)
    values = as_tensor(_field_values(x))
    V, H, W, D = cfg.n_vars, cfg.height, cfg.width, cfg.dim
    if values.shape != (V, H, W):
        raise DimensionError(f"aggregate_variables: field {values.shape} does not match config {(V, H, W)}")

    cells = reshape(transpose(values, (1, 2, 0)), (H, W, V, 1))
    embeddings = add(mul(cells, P["var_w"]), P["var_b"])
    keys = matmul(embeddings, P["agg_wk"])
    vals = matmul(embeddings, P["agg_wv"])
    query = reshape(P["agg_q"], (H, W, 1, D))
    scores = mul(tensor_sum(mul(keys, query), axis=-1), 1.0 / math.sqrt(D))
    weights = softmax_rows(scores)
    out = tensor_sum(mul(reshape(weights, (H, W, V, 1)), vals), axis=2)
    return reshape(out, (1, H, W, D))


def _pad_rows(cfg: ModelConfig) -> List[int]:
    return list(range(cfg.height)) + [cfg.height - 1] * (cfg.padded_height - cfg.height)


def patchify(grid_tensor: ArrayLike, cfg: ModelConfig) -> Tensor:
    """H x W x C -> N x (p*p*C), padding latitude rows by replicating the last one."""
    t = as_tensor(grid_tensor)
    if t.ndim != 3 or t.shape[:2] != (cfg.height, cfg.width):
        raise DimensionError(f"patchify: expected {(cfg.height, cfg.width)} x C, got {t.shape}")
    if cfg.width % cfg.patch != 0:
        raise ConfigurationError(f"grid width {cfg.width} is not divisible by patch size {cfg.patch}")
    p, C = cfg.patch, t.shape[2]
    padded = gather(t, _pad_rows(cfg), axis=0)
    blocks = reshape(padded, (cfg.token_rows, p, cfg.token_cols, p, C))
    return reshape(transpose(blocks, (0, 2, 1, 3, 4)), (cfg.n_tokens, p * p * C))


def unpatchify(patches: ArrayLike, cfg: ModelConfig, channels: int) -> Tensor:
    """N x (p*p*C) -> C x H x W, cropping the pad rows."""
    t = as_tensor(patches)
    p = cfg.patch
    if t.shape != (cfg.n_tokens, p * p * channels):
        raise DimensionError(f"unpatchify: expected {(cfg.n_tokens, p * p * channels)}, got {t.shape}")
    blocks = reshape(t, (cfg.token_rows, cfg.token_cols, p, p, channels))
    grid = reshape(transpose(blocks, (4, 0, 2, 1, 3)), (channels, cfg.padded_height, cfg.width))
    return gather(grid, list(range(cfg.height)), axis=1)


def tokenize(params: Params, cfg: ModelConfig, embedding: ArrayLike) -> TokenSequence:
    P = _tensors(params)
    embedding = as_tensor(embedding)
    if embedding.shape != (1, cfg.height, cfg.width, cfg.dim):
        raise DimensionError(f"tokenize: embedding {embedding.shape} is not 1 x H x W x D")
    patches = patchify(reshape(embedding, embedding.shape[1:]), cfg)
    return TokenSequence(linear(patches, P["patch_w"], P["patch_b"]))


def detokenize(cfg: ModelConfig, head_outputs: ArrayLike) -> Tensor:
    """Head outputs (N x p*p*V) back to a V x H x W field."""
    return unpatchify(head_outputs, cfg, cfg.n_vars)


def embed_frame(params: Params, cfg: ModelConfig, x) -> TokenSequence:
    return tokenize(params, cfg, aggregate_variables(params, cfg, x))


def token_cell_mask(cfg: ModelConfig, masked: np.ndarray) -> np.ndarray:
    """V x H x W boolean mask of the cells covered by masked tokens."""
    masked = np.asarray(masked, dtype=bool)
    if masked.shape != (cfg.n_tokens,):
        raise DimensionError(f"{masked.shape} mask flags for {cfg.n_tokens} tokens")
    rows = np.kron(masked.reshape(cfg.token_rows, cfg.token_cols), np.ones((cfg.patch, cfg.patch), dtype=bool))
    return np.broadcast_to(rows[: cfg.height].astype(bool), (cfg.n_vars, cfg.height, cfg.width)).copy()


# --- lead-time conditioning ----------------------------------------------------------------

def lead_embedding(params: Params, lead_hours: float) -> Tensor:
    """Small learned map from the lead time (in days) to a 1 x D conditioning vector."""
    P = _tensors(params)
    features = np.array([[lead_hours / _LEAD_SCALE_HOURS]])
    hidden = tanh(linear(features, P["lead_w1"], P["lead_b1"]))
    return linear(hidden, P["lead_w2"], P["lead_b2"])


class AdaLNModulation(NamedTuple):
    shift1: Tensor
    scale1: Tensor
    gate1: Tensor
    shift2: Tensor
    scale2: Tensor
    gate2: Tensor


def adaln_parameters(cond: Tensor, weight: ArrayLike, bias: ArrayLike) -> AdaLNModulation:
    """Six 1 x D modulation vectors produced from the conditioning vector."""
    D = cond.shape[-1]
    chunks = reshape(linear(cond, weight, bias), (6, D))
    return AdaLNModulation(*(gather(chunks, [i], axis=0) for i in range(6)))


def adaln_modulate(h: Tensor, shift: Tensor, scale: Tensor) -> Tensor:
    D = h.shape[-1]
    normalized = layer_norm(h, np.ones(D), np.zeros(D))
    return add(mul(normalized, add(scale, 1.0)), shift)


# --- attention ----------------------------------------------------------------------------

def multi_head_attention(
    q: Tensor, k: Tensor, v: Tensor, heads: int, capture: Optional[List[np.ndarray]] = None
) -> Tensor:
    """Scaled dot-product attention over `heads` heads; no output projection."""
    N, D = q.shape
    M = k.shape[0]
    if k.shape != (M, D) or v.shape != (M, D):
        raise DimensionError(f"attention: queries {q.shape}, keys {k.shape}, values {v.shape}")
    dh = D // heads
    qh = transpose(reshape(q, (N, heads, dh)), (1, 0, 2))
    kh = transpose(reshape(k, (M, heads, dh)), (1, 2, 0))
    vh = transpose(reshape(v, (M, heads, dh)), (1, 0, 2))
    probs = softmax_rows(mul(matmul(qh, kh), 1.0 / math.sqrt(dh)))
    if capture is not None:
        capture.append(probs.data.mean(axis=0))
    out = matmul(probs, vh)
    return reshape(transpose(out, (1, 0, 2)), (N, D))


def _ffn(P: Mapping[str, Tensor], prefix: str, h: Tensor) -> Tensor:
    hidden = gelu(linear(h, P[f"{prefix}.ff_w1"], P[f"{prefix}.ff_b1"]))
    return linear(hidden, P[f"{prefix}.ff_w2"], P[f"{prefix}.ff_b2"])


def encoder_block(
    P: Mapping[str, Tensor],
    index: int,
    z: Tensor,
    cond: Tensor,
    heads: int,
    capture: Optional[List[np.ndarray]] = None,
) -> Tensor:
    prefix = f"enc{index}"
    mod = adaln_parameters(cond, P[f"{prefix}.mod_w"], P[f"{prefix}.mod_b"])
    h = adaln_modulate(z, mod.shift1, mod.scale1)
    attended = multi_head_attention(
        matmul(h, P[f"{prefix}.wq"]), matmul(h, P[f"{prefix}.wk"]), matmul(h, P[f"{prefix}.wv"]), heads, capture
    )
    z = add(z, mul(mod.gate1, matmul(attended, P[f"{prefix}.wo"])))
    h = adaln_modulate(z, mod.shift2, mod.scale2)
    return add(z, mul(mod.gate2, _ffn(P, prefix, h)))


def _encode_frame(P, cfg: ModelConfig, tokens: Tensor, cond: Tensor, stop_after: Optional[int] = None,
                  capture: Optional[List[np.ndarray]] = None) -> Tensor:
    z = add(tokens, P["pos"])
    last = cfg.enc_depth if stop_after is None else stop_after + 1
    for i in range(last):
        z = encoder_block(P, i, z, cond, cfg.heads, capture if i == stop_after else None)
    return z


def encode(
    params: Params, cfg: ModelConfig, frame1: TokenSequence, frame2: TokenSequence, lead_hours: float
) -> Tuple[Tensor, Tensor]:
    """Both frames go through the same encoder blocks with the same lead-time conditioning."""
    if frame1.n_tokens != frame2.n_tokens:
        raise DimensionError(f"frames carry {frame1.n_tokens} and {frame2.n_tokens} tokens")
    if frame1.n_tokens != cfg.n_tokens:
        raise DimensionError(f"expected {cfg.n_tokens} tokens, got {frame1.n_tokens}")
    P = _tensors(params)
    cond = lead_embedding(P, lead_hours)
    return _encode_frame(P, cfg, frame1.tokens, cond), _encode_frame(P, cfg, frame2.tokens, cond)


def decoder_block(P: Mapping[str, Tensor], index: int, z1: Tensor, z2: Tensor, heads: int) -> Tensor:
    prefix = f"dec{index}"
    z2 = add(z2, multi_head_attention(
        matmul(z2, P[f"{prefix}.wq1"]), matmul(z1, P[f"{prefix}.wk1"]), matmul(z1, P[f"{prefix}.wv1"]), heads
    ))
    z2 = add(z2, multi_head_attention(
        matmul(z2, P[f"{prefix}.wq2"]), matmul(z2, P[f"{prefix}.wk2"]), matmul(z2, P[f"{prefix}.wv2"]), heads
    ))
    return add(z2, _ffn(P, prefix, z2))


def decode(params: Params, cfg: ModelConfig, z1: Tensor, z2: Tensor) -> Tensor:
    """Cross-attention from frame 2 onto frame 1, then self-attention, then the FFN, each residual."""
    z1, z2 = as_tensor(z1), as_tensor(z2)
    if z1.shape != z2.shape:
        raise DimensionError(f"decode: Z1 {z1.shape} and Z2 {z2.shape} differ")
    P = _tensors(params)
    for i in range(cfg.dec_depth):
        z2 = decoder_block(P, i, z1, z2, cfg.heads)
    return z2


# --- full model -----------------------------------------------------------------------------

def build_frame2(params: Params, cfg: ModelConfig, lead_hours: float, seed: int) -> TokenSequence:
    """
    Fully masked second frame used at fine-tuning and inference: Gaussian noise
    (or zeros) plus the lead-time embedding on every token.
    """
    shape = (cfg.n_tokens, cfg.dim)
    if cfg.frame2 == "noise":
        base = GaussianSampler(seed, _FRAME2_STREAM).normal(shape, cfg.noise_std)
    else:
        base = np.zeros(shape)
    tokens = add(base, lead_embedding(params, lead_hours))
    return TokenSequence(tokens, np.ones(cfg.n_tokens, dtype=bool))


def reconstruct(
    params: Params, cfg: ModelConfig, frame1: TokenSequence, frame2: TokenSequence, lead_hours: float
) -> Tensor:
    """Encode both token frames, decode, and map frame-2 tokens back to a V x H x W field."""
    P = _tensors(params)
    z1, z2 = encode(P, cfg, frame1, frame2, lead_hours)
    z2 = decode(P, cfg, z1, z2)
    return detokenize(cfg, linear(z2, P["head_w"], P["head_b"]))


def forward(params: Params, cfg: ModelConfig, x_t0, frame2: TokenSequence, lead_hours: float) -> Tensor:
    """aggregate -> tokenize -> encode both frames -> decode -> head -> detokenize."""
    P = _tensors(params)
    return reconstruct(P, cfg, embed_frame(P, cfg, x_t0), frame2, lead_hours)


def attention_row(params: Params, cfg: ModelConfig, layer: int, token: int, x, lead_hours: float) -> np.ndarray:
    """Head-averaged post-softmax attention row of `token` in encoder block `layer` (frame 1)."""
    if not 0 <= layer < cfg.enc_depth:
        raise ContractError(f"layer {layer} outside encoder depth {cfg.enc_depth}")
    if not 0 <= token < cfg.n_tokens:
        raise ContractError(f"token {token} outside [0, {cfg.n_tokens})")
    P = _tensors(params)
    frame1 = embed_frame(P, cfg, x)
    captured: List[np.ndarray] = []
    _encode_frame(P, cfg, frame1.tokens, lead_embedding(P, lead_hours), stop_after=layer, capture=captured)
    return np.array(captured[0][token])
