import numpy as np
import pytest

from drawmark.model import Block, DbsCondition, Session, Trace, Trial


def make_trace(n=40, speed=100.0, rng=None, template=None, t0=0.0):
    """Simple noisy diagonal trace for structural tests."""
    if rng is None:
        rng = np.random.default_rng(0)
    t = t0 + np.arange(n) / 60.0
    x = speed * (t - t0) + rng.normal(0, 0.5, n)
    y = 0.3 * speed * (t - t0) + rng.normal(0, 0.5, n)
    if template is None:
        template = np.stack([np.linspace(0, speed * n / 60.0, 25),
                             np.linspace(0, 0.3 * speed * n / 60.0, 25)], axis=1)
    return Trace(np.column_stack([t, x, y]), template, duration_limit=10.0)


def make_session(n_blocks=4, trials_per_block=3, seed=0, speed_on=1.0):
    rng = np.random.default_rng(seed)
    blocks = []
    for b in range(n_blocks):
        cond = DbsCondition.ON if b % 2 else DbsCondition.OFF
        speed = 100.0 * (speed_on if cond is DbsCondition.ON else 1.0)
        trials = [
            Trial(make_trace(rng=rng, speed=speed * float(np.exp(0.05 * rng.standard_normal()))))
            for _ in range(trials_per_block)
        ]
        blocks.append(Block(b, cond, trials))
    return Session("test", blocks)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
