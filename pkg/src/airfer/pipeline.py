"""One inference round, end to end, for every transmission scheme.

The batched engine (:func:`simulate_rounds`) processes a block of rounds at
once; the single-round functions are thin wrappers over a batch of one.
Randomness is split into named streams so that participation and gains line up
across arms that share a seed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import channel as ch
from .fusion import FusionMethod, argmax_lowest, decision_payload, fuse_mv, mean_center
from .privacy import PrivacySpec, rr_perturb_many
from .projection import (
    ProjectionKind,
    ProjectionMatrix,
    ProjectionSpec,
    decode,
    project,
    sample_projection,
)

CHUNK_ROUNDS = 1024

_STREAMS = ("participation", "gains", "privacy", "awgn", "rr")


class Scheme(str, enum.Enum):
    OAC = "oac"
    ORTHOGONAL = "orthogonal"
    BEST_CLIENT = "best_client"
    RR_ORTHOGONAL = "rr_orthogonal"
    RR_OAC = "rr_oac"


class NoisePlacement(str, enum.Enum):
    BEFORE_PROJECTION = "before_projection"
    AFTER_PROJECTION = "after_projection"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float = 0.0
    sigma_h: float = 1.0
    h_min: float = 0.2
    power: float = 1.0

    @property
    def fading(self) -> ch.FadingModel:
        return ch.FadingModel(self.sigma_h, self.h_min)

    @property
    def power_constraint(self) -> ch.PowerConstraint:
        return ch.PowerConstraint(self.power, self.snr_db)

    @property
    def noise_std(self) -> float:
        return ch.snr_to_noise_std(self.snr_db, self.power)


@dataclass(frozen=True)
class RoundConfig:
    n: int
    p: float
    k: int
    d: int
    method: FusionMethod = FusionMethod.BA
    scheme: Scheme = Scheme.OAC
    noise_placement: NoisePlacement = NoisePlacement.BEFORE_PROJECTION
    privacy: PrivacySpec | None = None
    projection: ProjectionSpec | None = None
    channel: ChannelConfig = ChannelConfig()
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", FusionMethod(self.method))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "noise_placement", NoisePlacement(self.noise_placement))
        if self.projection is None:
            object.__setattr__(self, "projection", ProjectionSpec(ProjectionKind.ORTHOGONAL, self.d, self.k))
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must be in (0, 1], got {self.p}")
        if self.n < 1 or self.k < 2 or self.d < 1:
            raise ConfigError("need n >= 1, k >= 2, d >= 1")
        if self.scheme in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL) and self.method is not FusionMethod.MV:
            raise ConfigError("randomized-response schemes require method = mv")
        if (self.projection.d, self.projection.k) != (self.d, self.k):
            raise ConfigError("projection spec dimensions disagree with d, k")

    @property
    def sigma_total(self) -> float:
        return 0.0 if self.privacy is None else self.privacy.sigma_total


@dataclass(frozen=True)
class ParticipationOutcome:
    participants: tuple[int, ...]

    def __post_init__(self):
        if not self.participants:
            raise ValueError("a round needs at least one participant")

    def __len__(self):
        return len(self.participants)


@dataclass
class RoundTrace:
    decoded: np.ndarray
    decision: int
    participants: ParticipationOutcome
    diagnostics: dict = field(default_factory=dict)


@dataclass
class BatchTrace:
    decoded: np.ndarray  # (T, k)
    decisions: np.ndarray  # (T,)
    mask: np.ndarray  # (T, n) participation
    gamma: np.ndarray  # (T,)
    tx_power: np.ndarray  # (T, n), ||y_i||^2, 0 for idle clients
    channel_uses: np.ndarray  # (T,)
    privacy_var: np.ndarray  # (T,), per-coordinate privacy variance at the decoder

    def round(self, t: int) -> RoundTrace:
        parts = tuple(int(i) for i in np.flatnonzero(self.mask[t]))
        return RoundTrace(
            decoded=self.decoded[t].copy(),
            decision=int(self.decisions[t]),
            participants=ParticipationOutcome(parts),
            diagnostics={
                "gamma": float(self.gamma[t]),
                "channel_uses": int(self.channel_uses[t]),
                "tx_power": {i: float(self.tx_power[t, i]) for i in parts},
                "privacy_var": float(self.privacy_var[t]),
            },
        )


class Streams:
    """Named generators for one block of rounds."""

    def __init__(self, generators: Mapping[str, np.random.Generator]):
        self._g = dict(generators)

    def __getattr__(self, name):
        try:
            return self._g[name]
        except KeyError:
            raise AttributeError(name) from None

    @classmethod
    def single(cls, rng: np.random.Generator) -> "Streams":
        return cls({name: rng for name in _STREAMS})

    @classmethod
    def derived(cls, master_seed: int, seed: int, block: int) -> "Streams":
        return cls(
            {
                name: np.random.default_rng(
                    np.random.SeedSequence(master_seed, spawn_key=(seed, block, i))
                )
                for i, name in enumerate(_STREAMS)
            }
        )


def sample_participation_mask(n: int, p: float, rounds: int, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(p) participation per client, rows redrawn whole until non-empty."""
    if n < 1 or not 0.0 < p <= 1.0:
        raise ValueError("need n >= 1 and 0 < p <= 1")
    if p == 1.0:
        return np.ones((rounds, n), dtype=bool)
    mask = rng.random((rounds, n)) < p
    empty = ~mask.any(axis=1)
    while empty.any():
        mask[empty] = rng.random((int(empty.sum()), n)) < p
        empty = ~mask.any(axis=1)
    return mask


def sample_participants(n: int, p: float, rng: np.random.Generator) -> ParticipationOutcome:
    mask = sample_participation_mask(n, p, 1, rng)[0]
    return ParticipationOutcome(tuple(int(i) for i in np.flatnonzero(mask)))


def _gamma_terms(P: ProjectionMatrix, placement: NoisePlacement) -> tuple[float, float]:
    """(signal_gain, noise_dims) for the power budget.

    noise_dims is the expected energy of the projected unit-variance noise:
    tr(P^T P) when noise precedes the projection, d after it. For orthogonal
    P this is min(d, k) before and d after.
    """
    d = P.d
    exact = P.spec.kind in (ProjectionKind.ORTHOGONAL, ProjectionKind.IDENTITY)
    s2 = 1.0 if exact else P.op_norm_sq
    if placement is NoisePlacement.AFTER_PROJECTION:
        return s2, d * s2
    return s2, float(min(d, P.k)) if exact else P.frobenius_sq


def observes_participation(scheme: Scheme) -> bool:
    """Dedicated per-client blocks reveal who transmitted, so no subsampling amplification."""
    return scheme in (Scheme.ORTHOGONAL, Scheme.BEST_CLIENT, Scheme.RR_ORTHOGONAL)


def _encode(F, sigma_c, P, placement, rng):
    """Noisy projected payloads P g_i, shape (T, n, d), before gamma and inversion."""
    T, n, k = F.shape
    if placement is NoisePlacement.BEFORE_PROJECTION:
        noise = rng.standard_normal((T, n, k))
        return project(P, F + sigma_c[:, None, None] * noise)
    noise = rng.standard_normal((T, n, P.d))
    scale = sigma_c * math.sqrt(_gamma_terms(P, placement)[0])
    return project(P, F) + scale[:, None, None] * noise


def simulate_rounds(
    F: np.ndarray,
    cfg: RoundConfig,
    P: ProjectionMatrix,
    streams: Streams,
    *,
    best_client: int | None = None,
    mask: np.ndarray | None = None,
) -> BatchTrace:
    """Run a block of rounds on precomputed centered payloads ``F[t, i, :]``.

    For RR schemes ``F`` must already hold the perturbed, centered votes.
    """
    T, n, k = F.shape
    if n != cfg.n or k != cfg.k:
        raise ConfigError(f"payloads are {n} clients x {k} classes, config says {cfg.n} x {cfg.k}")
    fading = cfg.channel.fading
    mu = ch.mu_inv_h(fading)
    power = cfg.channel.power
    sigma_n = cfg.channel.noise_std
    scheme = cfg.scheme

    if scheme is Scheme.BEST_CLIENT:
        if best_client is None:
            raise ConfigError("best-client scheme needs the selected client")
        mask = np.zeros((T, n), dtype=bool)
        mask[:, best_client] = True
    elif mask is None:
        mask = sample_participation_mask(n, cfg.p, T, streams.participation)
    gains = ch.sample_gains(fading, (T, n), streams.gains)
    m = mask.sum(axis=1).astype(float)

    sigma = 0.0 if scheme in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL) else cfg.sigma_total
    signal_gain, noise_dims = _gamma_terms(P, cfg.noise_placement)
    superposed = scheme in (Scheme.OAC, Scheme.RR_OAC)

    if superposed:
        sigma_c = sigma / np.sqrt(m)
        gamma = ch.gamma_array(m, power, mu, k, P.d, sigma_c, signal_gain=signal_gain, noise_dims=noise_dims)
        X = _encode(F, sigma_c, P, cfg.noise_placement, streams.privacy)
        scale = np.where(mask, gamma[:, None] / (m[:, None] * gains), 0.0)
        Y = scale[:, :, None] * X
        z = np.einsum("tn,tnd->td", gains, Y) + sigma_n * streams.awgn.standard_normal((T, P.d))
        decoded = decode(P, z, gamma)
        uses = np.full(T, P.d)
        privacy_var = sigma**2 / m**2
    else:
        # one dedicated block per participant, each decoded on its own, then averaged
        sigma_c = np.full(T, sigma)
        gamma = ch.gamma_array(np.ones(T), power, mu, k, P.d, sigma_c, signal_gain=signal_gain, noise_dims=noise_dims)
        X = _encode(F, sigma_c, P, cfg.noise_placement, streams.privacy)
        scale = np.where(mask, gamma[:, None] / gains, 0.0)
        Y = scale[:, :, None] * X
        Z = gains[:, :, None] * Y + sigma_n * streams.awgn.standard_normal((T, n, P.d))
        blocks = decode(P, Z, gamma[:, None])
        decoded = np.einsum("tn,tnk->tk", mask.astype(float), blocks) / m[:, None]
        uses = (m * P.d).astype(int)
        privacy_var = sigma**2 / m

    tx_power = np.einsum("tnd,tnd->tn", Y, Y)
    return BatchTrace(
        decoded=decoded,
        decisions=argmax_lowest(decoded),
        mask=mask,
        gamma=gamma,
        tx_power=tx_power,
        channel_uses=uses,
        privacy_var=np.asarray(privacy_var, dtype=float),
    )


def payloads(beliefs: np.ndarray, method: FusionMethod | str, weights: np.ndarray | None = None) -> np.ndarray:
    """Centered payloads from beliefs shaped (..., n, k); weights shaped (n, k)."""
    return decision_payload(method, beliefs, weights)


def rr_payloads(beliefs: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    k = beliefs.shape[-1]
    votes = np.argmax(beliefs, axis=-1)
    if math.isfinite(epsilon):
        votes = rr_perturb_many(votes, epsilon, k, rng)
    return mean_center(np.eye(k)[votes])


# single-round API


def _belief_stack(beliefs: Mapping[int, np.ndarray], cfg: RoundConfig, participants) -> np.ndarray:
    stack = np.full((cfg.n, cfg.k), 1.0 / cfg.k)
    for i in participants:
        if i not in beliefs:
            raise KeyError(f"no belief supplied for participating client {i}")
        stack[i] = np.asarray(beliefs[i], dtype=float)
    return stack


def _one_round(beliefs, weights, cfg, rng, *, best_client=None) -> RoundTrace:
    streams = Streams.single(rng)
    P = sample_projection(cfg.projection)
    if cfg.scheme is Scheme.BEST_CLIENT:
        mask = None
        parts = (best_client,)
    else:
        mask = sample_participation_mask(cfg.n, cfg.p, 1, streams.participation)
        parts = tuple(int(i) for i in np.flatnonzero(mask[0]))
    B = _belief_stack(beliefs, cfg, parts)
    if cfg.scheme in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL):
        eps = math.inf if cfg.privacy is None else cfg.privacy.base_epsilon
        F = rr_payloads(B, eps, streams.rr)
    else:
        F = payloads(B, cfg.method, weights)
    trace = simulate_rounds(F[None], cfg, P, streams, best_client=best_client, mask=mask)
    return trace.round(0)


def oac_round(beliefs: Mapping[int, np.ndarray], weights, cfg: RoundConfig, rng) -> RoundTrace:
    if cfg.scheme is not Scheme.OAC:
        cfg = replace(cfg, scheme=Scheme.OAC)
    return _one_round(beliefs, weights, cfg, rng)


def orthogonal_round(beliefs: Mapping[int, np.ndarray], weights, cfg: RoundConfig, rng) -> RoundTrace:
    if cfg.scheme is not Scheme.ORTHOGONAL:
        cfg = replace(cfg, scheme=Scheme.ORTHOGONAL)
    return _one_round(beliefs, weights, cfg, rng)


def select_best_client(val_scores) -> int:
    """Index of the client with the highest validation Macro-F1 (lowest index on ties)."""
    scores = np.asarray(val_scores, dtype=float)
    if scores.size == 0:
        raise ValueError("no validation scores")
    return int(np.argmax(scores))


def best_client_round(beliefs: Mapping[int, np.ndarray], val_scores, cfg: RoundConfig, rng, weights=None) -> RoundTrace:
    best = select_best_client(val_scores)
    cfg = replace(cfg, scheme=Scheme.BEST_CLIENT)
    return _one_round(beliefs, weights, cfg, rng, best_client=best)


def rr_round(labels: Mapping[int, int], cfg: RoundConfig, rng) -> RoundTrace:
    """Randomized-response round from hard client votes."""
    if cfg.method is not FusionMethod.MV:
        raise ConfigError("randomized response works on votes; set method = mv")
    if cfg.scheme not in (Scheme.RR_OAC, Scheme.RR_ORTHOGONAL):
        cfg = replace(cfg, scheme=Scheme.RR_ORTHOGONAL)
    onehots = {i: np.eye(cfg.k)[int(lab)] for i, lab in labels.items()}
    return _one_round(onehots, None, cfg, rng)
