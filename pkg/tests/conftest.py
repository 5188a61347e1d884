import numpy as np
import pytest
from hypothesis import settings

from asymbell import MeasurementSettings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Q-maximizing settings for the maximally entangled state, in multiples of pi
CHSH_OPT = MeasurementSettings.planar([0, 0.5], [0.25, -0.25], in_pi=True)
I3322_OPT = MeasurementSettings.planar([0, -1 / 3, 1 / 3], [0, -1 / 3, 1 / 3], in_pi=True)
# angles printed for theta = pi/100
PRINTED_ALPHA = [-0.0012, 0.1331, 0.5494]
PRINTED_BETA = [0.0101, -0.0038, -0.0924]


@pytest.fixture
def rng():
    return np.random.default_rng(20061015)


def statevector_p00(psi, alpha, beta):
    """Independent route to p(00): overlap with +1 eigenvectors (cos(a/2), sin(a/2))."""
    ea = np.stack([np.cos(np.asarray(alpha) / 2), np.sin(np.asarray(alpha) / 2)], -1)
    eb = np.stack([np.cos(np.asarray(beta) / 2), np.sin(np.asarray(beta) / 2)], -1)
    amp = (psi[0] * ea[..., 0] * eb[..., 0] + psi[1] * ea[..., 0] * eb[..., 1]
           + psi[2] * ea[..., 1] * eb[..., 0] + psi[3] * ea[..., 1] * eb[..., 1])
    return np.abs(amp) ** 2
