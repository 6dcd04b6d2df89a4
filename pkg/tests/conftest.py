import numpy as np
import pytest

from whitneyflow import arc, field, verify


@pytest.fixture(scope="session")
def cfg4():
    return arc.ArcConfig(depth=4)


@pytest.fixture(scope="session")
def cfg8():
    return arc.ArcConfig(depth=8)


@pytest.fixture(scope="session")
def jets4(cfg4):
    return arc.sample_jets(cfg4)


@pytest.fixture(scope="session")
def jets8(cfg8):
    return arc.sample_jets(cfg8)


@pytest.fixture(scope="session")
def field4(jets4):
    return field.build_field(jets4)


@pytest.fixture(scope="session")
def field6():
    return field.build_field(arc.sample_jets(arc.ArcConfig(depth=6)))


@pytest.fixture(scope="session")
def field8(jets8):
    return field.build_field(jets8)


@pytest.fixture(scope="session")
def lab_cache(jets4, jets8, field4, field6, field8):
    """Acceptance cache pre-seeded with the session fields."""
    cache = verify.LabCache()
    lam = 1.0 / 3.0
    cache._jets[(lam, 4, 0.01)] = jets4
    cache._jets[(lam, 8, 0.01)] = jets8
    cache._fields[(lam, 4, 0.01)] = field4
    cache._fields[(lam, 6, 0.01)] = field6
    cache._fields[(lam, 8, 0.01)] = field8
    return cache


@pytest.fixture(scope="session")
def acceptance(lab_cache):
    return verify.run_acceptance(verify.default_config(), cache=lab_cache)
