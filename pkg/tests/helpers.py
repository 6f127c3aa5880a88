"""Shared builders for environment-level tests."""

from marketsched.config import EnvConfig, JobType
from marketsched.env import AUCTIONEER, Job, JointActions


def make_config(**kwargs):
    defaults = dict(
        num_agents=2,
        num_cores=2,
        num_slots=3,
        job_types=(JobType(0, 1, 10, 0.9), JobType(1, 5, 2, 0.1)),
        trading_enabled=True,
    )
    defaults.update(kwargs)
    return EnvConfig(**defaults)


def manual_config(job_types=(JobType(0, 5, 5, 0.0),), **kwargs):
    """Config whose slots never refill; tests place jobs by hand."""
    return make_config(job_types=job_types, **kwargs)


def place_job(env, agent, slot, type_id=0, arrival=None):
    jt = env.config.type_by_id(type_id)
    job = Job(
        uid=env._next_job_uid,
        type_id=jt.id,
        priority=jt.priority,
        burst=jt.burst,
        arrival_time=env.time if arrival is None else arrival,
        remaining_burst=jt.burst,
        owner_agent=agent,
    )
    env._next_job_uid += 1
    env.slots[agent][slot] = job
    return job


def offer(agent, slot, core):
    return {(agent, slot): core + 1}


def random_actions(env, rng):
    """Uniformly random valid actions for every acting position."""
    cfg = env.config
    actions = JointActions()
    for m in range(cfg.num_cores):
        if env.cores[m].owner != AUCTIONEER:
            actions.accepts[(env.cores[m].owner, m)] = int(
                rng.integers(0, cfg.num_agents * cfg.num_slots + 1))
    for agent in range(cfg.num_agents):
        for slot in range(cfg.num_slots):
            actions.offers[(agent, slot)] = int(rng.integers(0, cfg.num_cores + 1))
            if cfg.pricing_mode.is_free:
                actions.prices[(agent, slot)] = int(rng.integers(0, cfg.max_prio + 1))
    return actions
