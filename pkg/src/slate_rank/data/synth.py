"""Synthetic slate logs with a controllable within-slate redundancy effect.

Click probability for a slate member is

    sigmoid(click_scale * (<u, v_i> + b_u + b_i)
            - gamma * mean_cos(v_i, other members) + intercept)

so with gamma > 0 an item is less likely to be clicked when the slate
already contains similar items, and with gamma = 0 the probability of a
member does not depend on its slate mates at all.  Items cluster around
category prototypes, which ties redundancy to repeated categories.
Watch time is emitted only for clicked samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..seeds import rng_for
from .slates import SlateSample

_INTERCEPT = -0.5
_ACTIVITY_EDGES = (0.5, 1.0, 2.0, 4.0, 8.0)


@dataclass
class SynthConfig:
    n_users: int = 2000
    n_items: int = 500
    n_categories: int = 20
    latent_dim: int = 8
    k: int = 10
    slates_per_user: int = 5
    click_scale: float = 1.0
    gamma: float = 1.0
    watch_noise: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "n_items", "n_categories", "latent_dim",
                     "k", "slates_per_user"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.k > self.n_items:
            raise ConfigError(f"k={self.k} exceeds n_items={self.n_items}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.watch_noise < 0:
            raise ConfigError(f"watch_noise must be >= 0, got {self.watch_noise}")


@dataclass
class SynthLatents:
    user_vecs: np.ndarray    # [n_users, latent_dim]
    item_vecs: np.ndarray    # [n_items, latent_dim]
    item_unit: np.ndarray    # item_vecs normalized to unit length
    item_cats: np.ndarray    # [n_items] category of each item
    user_bias: np.ndarray    # [n_users]
    item_bias: np.ndarray    # [n_items]
    user_ctx: np.ndarray     # [n_users] bucketized activity id
    intercept: float


def make_latents(cfg: SynthConfig) -> SynthLatents:
    rng = rng_for(cfg.seed, "synth-latents")
    scale = cfg.latent_dim ** -0.25
    protos = rng.normal(0.0, scale, size=(cfg.n_categories, cfg.latent_dim))
    cats = rng.integers(0, cfg.n_categories, size=cfg.n_items)
    # Tight clusters (same-category cosine near 0.9) keep the redundancy
    # penalty predictable from category ids rather than pure item noise.
    item_vecs = 0.95 * protos[cats] + 0.3 * rng.normal(0.0, scale, size=(cfg.n_items, cfg.latent_dim))
    user_vecs = rng.normal(0.0, scale, size=(cfg.n_users, cfg.latent_dim))
    user_bias = rng.normal(0.0, 0.3, size=cfg.n_users)
    item_bias = rng.normal(0.0, 0.3, size=cfg.n_items)
    activity = rng.lognormal(0.5, 1.0, size=cfg.n_users)
    user_ctx = np.digitize(activity, _ACTIVITY_EDGES)
    norms = np.linalg.norm(item_vecs, axis=1, keepdims=True)
    item_unit = item_vecs / np.maximum(norms, 1e-12)
    return SynthLatents(user_vecs, item_vecs, item_unit, cats,
                        user_bias, item_bias, user_ctx, _INTERCEPT)


def click_probabilities(lat: SynthLatents, cfg: SynthConfig,
                        user_id: int, slate_items) -> np.ndarray:
    """True click probability of every member of one slate.

    With cfg.gamma == 0 the result for an item is unchanged under any
    permutation or replacement of the other members.
    """
    items = np.asarray(slate_items)
    v = lat.item_vecs[items]
    aff = v @ lat.user_vecs[user_id]
    k = len(items)
    if k > 1 and cfg.gamma != 0.0:
        vn = lat.item_unit[items]
        red = (vn @ vn.sum(axis=0) - 1.0) / (k - 1)
    else:
        red = np.zeros(k)
    logit = (cfg.click_scale * (aff + lat.user_bias[user_id] + lat.item_bias[items])
             - cfg.gamma * red + lat.intercept)
    return 1.0 / (1.0 + np.exp(-logit))


def _sample_slate(rng, probs, k):
    return rng.choice(len(probs), size=k, replace=False, p=probs)


def synth_generate(cfg: SynthConfig):
    """Generate slates plus labels; returns (samples, latents).

    Slate members are drawn per user without replacement, biased toward
    the user's affinity, so every user mostly sees items it tends to
    like.  The whole dataset is a pure function of cfg.seed.
    """
    lat = make_latents(cfg)
    rng_slates = rng_for(cfg.seed, "synth-slates")
    rng_labels = rng_for(cfg.seed, "synth-labels")
    samples: list[SlateSample] = []
    slate_id = 0
    for user_id in range(cfg.n_users):
        aff = lat.item_vecs @ lat.user_vecs[user_id]
        w = np.exp(2.0 * (aff - aff.max()))
        item_probs = w / w.sum()
        ctx = (int(lat.user_ctx[user_id]),)
        for _ in range(cfg.slates_per_user):
            items = _sample_slate(rng_slates, item_probs, cfg.k)
            p = click_probabilities(lat, cfg, user_id, items)
            clicks = rng_labels.binomial(1, p)
            base_watch = 10.0 * np.logaddexp(0.0, lat.item_vecs[items] @ lat.user_vecs[user_id])
            noise = rng_labels.normal(0.0, cfg.watch_noise, size=cfg.k)
            watch = np.maximum(base_watch + noise, 0.0)
            slate_items = tuple(int(i) for i in items)
            slate_cats = tuple(int(lat.item_cats[i]) for i in items)
            for pos in range(cfg.k):
                clicked = int(clicks[pos])
                samples.append(SlateSample(
                    slate_id=slate_id,
                    user_id=user_id,
                    item_id=slate_items[pos],
                    category_ids=(slate_cats[pos],),
                    slate_item_ids=slate_items,
                    slate_category_ids=slate_cats,
                    click=clicked,
                    watch_time=float(watch[pos]) if clicked else None,
                    user_ctx_ids=ctx,
                ))
            slate_id += 1
    return samples, lat
