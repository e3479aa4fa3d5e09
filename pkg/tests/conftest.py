import numpy as np
import pytest

from homdelay import PhotonPairModel

# Reference hardware values: tau = 0.98 ps <=> sigma = 0.5102 rad/ps (81 GHz).
TAU = 0.98
SIGMA = 1.0 / (2.0 * TAU)
QFI_REF = 2.0 * SIGMA**2  # 0.5206 ps^-2


@pytest.fixture
def model_ideal():
    return PhotonPairModel(sigma=SIGMA)


@pytest.fixture
def model_098():
    return PhotonPairModel(sigma=SIGMA, eta=0.98)


@pytest.fixture
def model_09():
    return PhotonPairModel(sigma=SIGMA, eta=0.9)


def gauss_diff_cdf(x, sigma=SIGMA):
    """CDF of the frequency-difference marginal (variance 2 sigma^2)."""
    from scipy.stats import norm

    return norm.cdf(x, scale=np.sqrt(2.0) * sigma)
