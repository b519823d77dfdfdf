from __future__ import annotations

import os
import random

import pytest
from hypothesis import settings

settings.register_profile("slow-ok", deadline=None, max_examples=60)
settings.load_profile("slow-ok")


def _seed() -> int:
    raw = os.environ.get("SIGMAFORGE_SEED")
    if raw is None:
        return 20240913
    return int(raw)


@pytest.fixture
def rng() -> random.Random:
    """Seeded generator for hand-rolled randomized tests.  SIGMAFORGE_SEED
    overrides the default so failures can be replayed."""
    return random.Random(_seed())
