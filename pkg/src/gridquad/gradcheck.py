"""Central finite-difference checks of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .config import TrainConfig
from .model import (Inputs, ModelParams, Vocab, backward, forward, init_params, random_syntax,
                    raw_tape_loss)

# Tensors checked by default, one per stage of the network.
DEFAULT_TENSORS = ("W_gcn", "pos_embedding", "token_embedding", "ent_bilinear", "ent_mlp1_W",
                   "W_e", "rel_bilinear", "rel_mlp2_W", "tri_U", "tri_mlp3_W", "tri_mlp4_b",
                   "tri_mlp5_W", "W_r", "b_r")


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def numeric_gradient(f: Callable[[], float], x: np.ndarray, step: float = 1e-5,
                     index: Optional[np.ndarray] = None) -> np.ndarray:
    """Central differences of ``f`` w.r.t. ``x`` (perturbed in place, then restored)."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in (range(flat.size) if index is None else index):
        orig = flat[k]
        flat[k] = orig + step
        up = f()
        flat[k] = orig - step
        down = f()
        flat[k] = orig
        gflat[k] = (up - down) / (2 * step)
    return grad


@dataclass
class CheckResult:
    tensor: str
    max_rel_error: float
    checked: int


def grad_check(params: ModelParams, inputs: Inputs, gold_entity, gold_relation,
               tensors=DEFAULT_TENSORS, step: float = 1e-5, max_entries: int = 0,
               seed: int = 0) -> list[CheckResult]:
    """Compare analytic gradients with central differences, one result per tensor.

    The analytic side runs in float64.  The difference quotients are taken on
    an extended-precision copy of the network so that rounding in the loss
    (about eps * |loss| / step) stays far below the smallest gradient entries.
    ``max_entries`` > 0 samples that many entries per tensor instead of all.
    """
    _, grads = backward(forward(params, inputs), gold_entity, gold_relation, params)

    wide = ModelParams({k: v.astype(np.longdouble) for k, v in params.tensors.items()},
                       params.config, params.vocab)
    wide_inputs = Inputs(inputs.token_ids, inputs.pos_ids, inputs.adj.astype(np.longdouble))

    def loss():
        return raw_tape_loss(forward(wide, wide_inputs), gold_entity, gold_relation)

    rng = np.random.default_rng(seed)
    results = []
    for name in tensors:
        x = wide.tensors[name]
        index = None
        if max_entries and x.size > max_entries:
            index = rng.choice(x.size, size=max_entries, replace=False)
        numeric = numeric_gradient(loss, x, step, index)
        sel = slice(None) if index is None else index
        err = relative_error(grads[name].reshape(-1)[sel], numeric.reshape(-1)[sel].astype(np.float64))
        results.append(CheckResult(name, float(err.max()) if err.size else 0.0,
                                   x.size if index is None else len(index)))
    return results


def toy_problem(n: int = 4, dim: int = 6, seed: int = 0, config: Optional[TrainConfig] = None):
    """Small double-precision problem with random gold grids for gradient checks."""
    rng = np.random.default_rng(seed)
    cfg = config or TrainConfig(h_x=dim, h_p=dim, h_s=dim, h_e=dim, h_r=dim, dropout=0.0, seed=seed)
    vocab = Vocab(["<unk>"] + [f"w{k}" for k in range(7)], ["<unk>", "NOUN", "ADJ", "VERB", "X"])
    params = init_params(cfg, seed, vocab)
    # Larger-than-Glorot weights keep the loss away from its flat regions.
    for name, t in params.tensors.items():
        params.tensors[name] = t + rng.normal(0, 0.3, size=t.shape)
    token_ids = rng.integers(0, len(vocab.tokens), size=n)
    pos_ids, A = random_syntax(n, max(n - 1, 0), len(vocab.pos), rng)
    gold_e = rng.integers(0, 4, size=(n, n))
    gold_r = rng.integers(0, 4, size=(n, n))
    return params, Inputs(token_ids, pos_ids, A), gold_e, gold_r
