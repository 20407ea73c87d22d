"""Shared fixtures: heavy eigendecompositions are built once per session."""

import pytest

from szegolab.experiments import Frame, build_frame


@pytest.fixture(scope="session")
def frame_d1_L100() -> Frame:
    """d=1, k=2 workhorse frame; trust window 0.5 * 100^2 = 5000."""
    return build_frame(1, 2.0, 100, 0.5)


@pytest.fixture(scope="session")
def frame_d1_L64() -> Frame:
    """Smaller d=1 frame for the resolvent-ratio experiments (trust 2048)."""
    return build_frame(1, 2.0, 64, 0.5)


@pytest.fixture(scope="session")
def frame_d2_L20() -> Frame:
    """d=2 smoke-test frame (1681 sites, trust 200)."""
    return build_frame(2, 2.0, 20, 0.5)
