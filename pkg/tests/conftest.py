from __future__ import annotations

import numpy as np
import pytest

from situwatch.situation import ChannelSpec, Sample, SituationWindow, build_situation


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def make_samples(channel_id: str, points) -> list[Sample]:
    return [Sample(timestamp=float(t), channel_id=channel_id, value=float(v)) for t, v in points]


def random_situation(rng, m: int, n: int, t_start: float = 0.0, duration: float = 900.0):
    """A well-formed random situation whose raw samples sit exactly on the grid."""
    window = SituationWindow(t_start=t_start, t_end=t_start + duration, n_samples=n)
    grid = window.grid()
    specs = [ChannelSpec(channel_id=f"ch{i}") for i in range(m)]
    samples = []
    for spec in specs:
        values = rng.normal(size=n) * rng.uniform(0.5, 5.0) + rng.uniform(-10, 10)
        samples.extend(
            Sample(timestamp=float(t), channel_id=spec.channel_id, value=float(v))
            for t, v in zip(grid, values)
        )
    return build_situation(samples, specs, window), specs
