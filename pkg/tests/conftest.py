import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rdpriv.model import EncodedSet, SourceModel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_source(seed: int, sizes=(2, 2, 2), revealed=(0,), hidden=(1, 2), alpha=1.0,
                  recon_size=None) -> SourceModel:
    rng = np.random.default_rng(seed)
    joint = rng.dirichlet(np.full(int(np.prod(sizes)), alpha))
    return SourceModel.build(sizes, revealed, hidden, joint, recon_size=recon_size)


def independent_hidden_source(seed: int) -> SourceModel:
    rng = np.random.default_rng(seed)
    p_r = rng.dirichlet(np.ones(2))
    p_h = rng.dirichlet(np.ones(4)).reshape(2, 2)
    return SourceModel.build((2, 2, 2), (0,), (1, 2), np.einsum("a,bc->abc", p_r, p_h))


# filled by test_acceptance, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)


CASES = {"R": EncodedSet((0,)), "R+1": EncodedSet((0, 1)), "K": EncodedSet((0, 1, 2))}


@pytest.fixture
def binary3():
    return random_source(3)
