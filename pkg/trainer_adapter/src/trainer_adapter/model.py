"""Tiny transformer text classifier and its word-level vocabulary.

The default "local-tiny" model is a small randomly-initialized multilingual
encoder trained from scratch per stage chain; it exists for desk-scale runs
of the trainer protocol, not to reproduce full-scale benchmark scores.
Full-size pretrained model directories (Transformers format) can be passed
via the manifest's model_id for users with the weights on disk.
"""

from __future__ import annotations

from collections import Counter

import torch
from torch import nn

PAD, UNK = 0, 1


def build_vocab(texts: list[str], max_size: int = 8000) -> dict[str, int]:
    counts = Counter(tok for text in texts for tok in text.lower().split())
    vocab = {"<pad>": PAD, "<unk>": UNK}
    for tok, _ in counts.most_common(max_size - 2):
        vocab[tok] = len(vocab)
    return vocab


def encode(text: str, vocab: dict[str, int], max_len: int) -> list[int]:
    ids = [vocab.get(tok, UNK) for tok in text.lower().split()][:max_len]
    return ids + [PAD] * (max_len - len(ids))


class TinyEncoderClassifier(nn.Module):
    def __init__(self, vocab_size: int, n_classes: int, dim: int = 64,
                 heads: int = 4, layers: int = 2, max_len: int = 40):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, dim, padding_idx=PAD)
        self.pos = nn.Embedding(max_len, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim, nhead=heads, dim_feedforward=dim * 4,
            batch_first=True, dropout=0.1,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers)
        self.head = nn.Linear(dim, n_classes)
        self.max_len = max_len

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.size(1), device=ids.device)
        x = self.embed(ids) + self.pos(positions)
        mask = ids.eq(PAD)
        x = self.encoder(x, src_key_padding_mask=mask)
        # mean over non-pad positions
        keep = (~mask).unsqueeze(-1).float()
        pooled = (x * keep).sum(1) / keep.sum(1).clamp(min=1.0)
        return self.head(pooled)
