"""Client reliability machinery: beta-distributed success probabilities,
power-of-two rank tags, per-round Bernoulli availability, and named RNG
substreams so every component of a run is reproducible in isolation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

# Scenario presets: name -> (alpha, beta) of the success-probability prior.
SCENARIOS = {
    "beta_8_2": (8.0, 2.0),
    "beta_10_6": (10.0, 6.0),
}

# Sampled probabilities below this are clamped up to avoid degenerate
# all-absent runs; clamp events are surfaced in the run manifest.
MIN_RELIABILITY = 0.01


@dataclass(frozen=True)
class ReliabilityProfile:
    """One client's success probability and its rank tag (a power of two,
    ascending in reliability across the cohort)."""

    client_id: int
    p: float
    tag: int


@dataclass(frozen=True)
class AvailabilityPattern:
    draws: np.ndarray  # bool, length K
    round_index: int


def _encode(component) -> int:
    if isinstance(component, (int, np.integer)):
        return int(component) & 0xFFFFFFFF
    digest = hashlib.sha256(str(component).encode()).digest()
    return int.from_bytes(digest[:4], "big")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Independent generator for a named position under the master seed.

    Components may be ints or strings; e.g. substream(seed, "train-avail", 3)
    is the training-phase availability stream of run 3. Streams with distinct
    paths are statistically independent, so changing how much one phase draws
    never shifts another phase's randomness.
    """
    entropy = [int(master_seed) & 0xFFFFFFFF] + [_encode(c) for c in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(master_seed: int, *path) -> int:
    """Stable integer seed for APIs that take a plain seed."""
    entropy = [int(master_seed) & 0xFFFFFFFF] + [_encode(c) for c in path]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def sample_beta(alpha: float, beta: float, rng: np.random.Generator) -> float:
    """One Beta(alpha, beta) variate via the two-Gamma construction
    X/(X+Y), X~Gamma(alpha), Y~Gamma(beta)."""
    if alpha <= 0 or beta <= 0:
        raise ValueError(f"beta shape parameters must be > 0, got ({alpha}, {beta})")
    x = rng.standard_gamma(alpha)
    y = rng.standard_gamma(beta)
    return float(x / (x + y))


def sample_reliabilities(
    n_clients: int, alpha: float, beta: float, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """Draw one success probability per client; returns (p, n_clamped)."""
    if n_clients < 1:
        raise ValueError("need at least one client")
    p = np.array([sample_beta(alpha, beta, rng) for _ in range(n_clients)])
    clamped = int((p < MIN_RELIABILITY).sum())
    return np.maximum(p, MIN_RELIABILITY), clamped


def assign_tags(p: np.ndarray) -> list[ReliabilityProfile]:
    """Tag clients 2^rank in ascending order of p, ties by client index."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("p must be a non-empty 1D vector")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("success probabilities must lie in (0, 1]")
    order = sorted(range(p.size), key=lambda k: (p[k], k))
    profiles: list[ReliabilityProfile] = [None] * p.size  # type: ignore[list-item]
    for rank, client in enumerate(order):
        profiles[client] = ReliabilityProfile(
            client_id=client, p=float(p[client]), tag=2**rank
        )
    return profiles


def draw_availability(
    profiles: list[ReliabilityProfile], round_index: int, rng: np.random.Generator
) -> AvailabilityPattern:
    """Independent Bernoulli(p_k) per client for one communication round."""
    if not profiles:
        raise ValueError("profiles must be non-empty")
    p = np.array([prof.p for prof in profiles])
    return AvailabilityPattern(draws=rng.random(p.size) < p, round_index=round_index)
