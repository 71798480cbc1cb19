import numpy as np
import pytest

from shapemarks.curves import Curve, SrvCurve, to_srv


def star_curve(seed: int, n: int = 100, wobble: float = 0.3) -> Curve:
    """Smooth star-shaped closed curve with reproducible random harmonics."""
    rng = np.random.default_rng(seed)
    t = 2.0 * np.pi * np.arange(n) / n
    radius = (1.0
              + wobble * np.sin(2 * t + rng.uniform(0, 2 * np.pi))
              + 0.5 * wobble * np.cos(3 * t + rng.uniform(0, 2 * np.pi))
              + 0.3 * wobble * np.sin(4 * t + rng.uniform(0, 2 * np.pi)))
    return Curve(np.column_stack([radius * np.cos(t), radius * np.sin(t)]))


def circle_curve(radius: float = 1.0, n: int = 100, center=(0.0, 0.0)) -> Curve:
    t = 2.0 * np.pi * np.arange(n) / n
    return Curve(np.column_stack([center[0] + radius * np.cos(t),
                                  center[1] + radius * np.sin(t)]))


def circle_srv(radius: float = 1.0, n: int = 100) -> SrvCurve:
    """Analytic SRV of an arc-length parameterized circle."""
    t = 2.0 * np.pi * np.arange(n) / n
    return SrvCurve(np.sqrt(radius) * np.column_stack([-np.sin(t), np.cos(t)]))


def star_srv(seed: int, n: int = 100, wobble: float = 0.3) -> SrvCurve:
    return to_srv(star_curve(seed, n, wobble))


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
