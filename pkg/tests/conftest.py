import pytest

from steerkit import ghz_assemblage, ghz_wired_assemblage, noisy_w_assemblage


@pytest.fixture(scope="session")
def ghz():
    asm, model = ghz_assemblage()
    return asm, model


@pytest.fixture(scope="session")
def wired_target():
    return ghz_wired_assemblage()


@pytest.fixture(scope="session")
def noisy_w_064():
    return noisy_w_assemblage(0.64)
