import numpy as np
import pytest

from vqdyn.model import BasisSet, LaserPulse


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20211010)


@pytest.fixture
def h4_basis():
    return BasisSet.preset("h4")


@pytest.fixture
def hcp_pulse():
    return LaserPulse(omega=0.06)


# externally tabulated final transition probabilities at t = 200 (reference
# fixtures: HCP = omega 0.06 pulse, HF = omega 0.222 pulse)
REF_FINALS_HCP = {
    "h2": [0.99955483, 0.00044517],
    "h4": [0.96819325, 0.01571505, 0.00074915, 0.01534255],
    "h8": [0.46528127, 0.19188919, 0.23518301, 0.06336444,
           0.02816392, 0.01412010, 0.00008123, 0.00191683],
    "h16": [0.47167423, 0.17376639, 0.21398703, 0.06559239, 0.04349100,
            0.01784057, 0.00359375, 0.00130138, 0.00103995, 0.00203183,
            0.00195571, 0.00115603, 0.00043734, 0.00174622, 0.00025562,
            0.00013056],
}

REF_FINALS_HF = {
    "h4": [0.15894029, 0.14928599, 0.03220548, 0.65956825],
    "h8": [0.07001227, 0.24131801, 0.24968068, 0.25150509,
           0.06442210, 0.10446710, 0.00575194, 0.01284282],
    "h16": [0.07461280, 0.25160038, 0.27168428, 0.22341135, 0.04831312,
            0.06802595, 0.01118176, 0.01117909, 0.00285904, 0.00066586,
            0.00917148, 0.00066253, 0.01077185, 0.00012968, 0.01563733,
            0.00009350],
}

# Fourier coefficients of the peak-shifted half-cycle pulse, L = 100
REF_FOURIER_AN = [0.0311156, 0.0605599, 0.0546881, 0.0438827, 0.0300882,
               0.0171955, 0.0080835, 0.0031056, 0.0009722]
