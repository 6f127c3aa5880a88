"""Observation encoders. All values are scaled into [0, 1].

Priorities are divided by the scenario's maximum priority, burst counters by
the maximum burst. Empty positions are zero-filled and carry a validity flag
of 0, so every layout has a fixed length that depends only on the config.
"""

from __future__ import annotations

import numpy as np

from .env import SchedulingEnv


def acceptor_obs_len(num_agents: int, num_slots: int) -> int:
    return 3 + 4 * num_agents * num_slots


def offer_obs_len(num_cores: int, num_slots: int, single_slot: bool) -> int:
    return 3 * num_cores + (3 if single_slot else 3 * num_slots)


PRICE_OBS_LEN = 4


def encode_acceptor_obs(env: SchedulingEnv, agent: int, core: int) -> np.ndarray:
    """Core job state, an ownership flag, and the offer grid for this core.

    Layout: [running priority, remaining burst, owned-by-me flag] followed by
    one [validity, price, time to payment, offered priority] block per
    (source agent, source slot) grid cell.
    """
    cfg = env.config
    vec = np.zeros(acceptor_obs_len(cfg.num_agents, cfg.num_slots))
    c = env.cores[core]
    if c.job is not None:
        vec[0] = c.job.priority / cfg.max_prio
        vec[1] = c.job.remaining_burst / cfg.max_burst
    vec[2] = 1.0 if c.owner == agent else 0.0
    for offer in env.pending_offers(core):
        base = 3 + 4 * (offer.agent * cfg.num_slots + offer.slot)
        vec[base] = 1.0
        vec[base + 1] = offer.price / cfg.max_prio
        vec[base + 2] = offer.time_to_payment / cfg.max_burst
        vec[base + 3] = offer.job_priority / cfg.max_prio
    return vec


def encode_offer_obs(env: SchedulingEnv, agent: int, slot: int | None) -> np.ndarray:
    """Per-core job states plus the agent's slot state(s).

    With a slot index the vector covers that single slot (distributed
    layout); with ``slot=None`` all of the agent's slots are concatenated
    (aggregated layouts).
    """
    cfg = env.config
    single = slot is not None
    vec = np.zeros(offer_obs_len(cfg.num_cores, cfg.num_slots, single))
    for m, core in enumerate(env.cores):
        base = 3 * m
        if core.job is not None:
            vec[base] = core.job.priority / cfg.max_prio
            vec[base + 1] = core.job.remaining_burst / cfg.max_burst
        vec[base + 2] = 1.0 if core.owner == agent else 0.0
    slots = [slot] if single else range(cfg.num_slots)
    offset = 3 * cfg.num_cores
    for i, k in enumerate(slots):
        job = env.slots[agent][k]
        base = offset + 3 * i
        if job is not None:
            vec[base] = 1.0
            vec[base + 1] = job.priority / cfg.max_prio
            vec[base + 2] = job.remaining_burst / cfg.max_burst
    return vec


def encode_price_obs(env: SchedulingEnv, agent: int, slot: int, target_core: int) -> np.ndarray:
    """What a price setter sees: its job and the targeted core's job."""
    cfg = env.config
    job = env.slots[agent][slot]
    if job is None:
        raise ValueError(f"agent {agent} slot {slot} holds no job to price")
    vec = np.zeros(PRICE_OBS_LEN)
    vec[0] = job.priority / cfg.max_prio
    vec[1] = job.remaining_burst / cfg.max_burst
    running = env.cores[target_core].job
    if running is not None:
        vec[2] = running.priority / cfg.max_prio
        vec[3] = running.remaining_burst / cfg.max_burst
    return vec
