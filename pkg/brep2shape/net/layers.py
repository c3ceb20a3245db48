"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 15, 2026

Transformer building blocks with an additive attention bias.

"""

from __future__ import annotations

import math
from typing import Optional

import torch
from torch import Tensor, nn

from ..core.errors import IntegrityError, NumericError

#: Standard deviation of the truncated normal weight init
INIT_STD = 0.02


def trunc_normal_(tensor: Tensor) -> Tensor:
    return nn.init.trunc_normal_(tensor, std=INIT_STD, a=-2 * INIT_STD, b=2 * INIT_STD)


def init_weights(module: nn.Module):
    """Truncated normal weights and zero biases for linear layers."""
    if isinstance(module, nn.Linear):
        trunc_normal_(module.weight)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.LayerNorm):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)


def check_finite(name: str, tensor: Tensor) -> Tensor:
    if not torch.isfinite(tensor).all():
        raise NumericError("Non-finite values", tensor=name)
    return tensor


class MultiHeadAttention(nn.Module):
    """Scaled dot product attention over (..., N, C) tokens.

    `bias` broadcasts against the (..., H, N, N) logits; `allowed` is a
    boolean (..., N, N) or (..., 1, N) mask of the keys each query may see.

    """

    def __init__(self, width: int, heads: int):
        super().__init__()
        if width % heads:
            raise IntegrityError(f"Width {width} is not divisible by {heads} heads")
        self.heads = heads
        self.head_dim = width // heads
        self.q = nn.Linear(width, width)
        self.k = nn.Linear(width, width)
        self.v = nn.Linear(width, width)
        self.out = nn.Linear(width, width)

    def _split(self, x: Tensor) -> Tensor:
        *lead, n, _ = x.shape
        return x.reshape(*lead, n, self.heads, self.head_dim).transpose(-3, -2)

    def forward(
        self, x: Tensor, bias: Optional[Tensor] = None, allowed: Optional[Tensor] = None
    ) -> Tensor:
        q, k, v = self._split(self.q(x)), self._split(self.k(x)), self._split(self.v(x))
        logits = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        if bias is not None:
            logits = logits + bias
        if allowed is not None:
            logits = logits.masked_fill(~allowed.unsqueeze(-3), float("-inf"))
        attn = torch.softmax(logits, dim=-1)
        y = (attn @ v).transpose(-3, -2)
        return self.out(y.reshape(*x.shape[:-1], -1))


class FeedForward(nn.Module):
    def __init__(self, width: int, expansion: int):
        super().__init__()
        self.fc1 = nn.Linear(width, width * expansion)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(width * expansion, width)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(self.act(self.fc1(x)))


class EncoderBlock(nn.Module):
    """Pre-norm residual self attention and feed forward."""

    def __init__(self, width: int, heads: int, expansion: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(width)
        self.attn = MultiHeadAttention(width, heads)
        self.norm2 = nn.LayerNorm(width)
        self.ffn = FeedForward(width, expansion)

    def forward(
        self, x: Tensor, bias: Optional[Tensor] = None, allowed: Optional[Tensor] = None
    ) -> Tensor:
        x = x + self.attn(self.norm1(x), bias, allowed)
        return x + self.ffn(self.norm2(x))


class TopologyBias(nn.Module):
    """Per head attention bias projected from shared complementary tokens.

    For an adjacent pair (a, b) sharing entities S the bias of head h is
    sum_{s in S} <w_h, c_s> + b_h, symmetric in (a, b). Other pairs, self
    pairs included, get no bias. The projection starts at zero.

    """

    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.proj = nn.Linear(width, heads)

    def reset_parameters(self):
        nn.init.zeros_(self.proj.weight)
        nn.init.zeros_(self.proj.bias)

    def forward(self, complement: Tensor, triples: Tensor, n: int) -> Tensor:
        """Dense (H, n, n) bias from (a, b, shared) index triples."""
        bias = complement.new_zeros(n, n, self.heads)
        if len(triples):
            a, b, s = triples[:, 0], triples[:, 1], triples[:, 2]
            values = complement[s] @ self.proj.weight.T
            bias = bias.index_put((a, b), values, accumulate=True)
            bias = bias.index_put((b, a), values, accumulate=True)
            pairs = torch.unique(triples[:, :2], dim=0)
            pb = self.proj.bias.expand(len(pairs), -1)
            bias = bias.index_put((pairs[:, 0], pairs[:, 1]), pb, accumulate=True)
            bias = bias.index_put((pairs[:, 1], pairs[:, 0]), pb, accumulate=True)
        return bias.permute(2, 0, 1)


class TopologyAttentionBlock(nn.Module):
    """One stream of a dual layer.

    x' = x + TopoAttn(LN(x), complement) and then x' + FFN(LN(x')).

    """

    def __init__(self, width: int, heads: int, expansion: int):
        super().__init__()
        self.block = EncoderBlock(width, heads, expansion)
        self.bias = TopologyBias(width, heads)

    def forward(
        self,
        x: Tensor,
        complement: Optional[Tensor],
        triples: Optional[Tensor],
        allowed: Optional[Tensor],
    ) -> Tensor:
        bias = None
        if complement is not None and triples is not None:
            bias = self.bias(complement, triples, x.shape[-2])
        return self.block(x, bias, allowed)
