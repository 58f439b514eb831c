import numpy as np
import pytest

from polardecomp.channel import ChannelSpec

SNR_GRID = np.linspace(-10.0, 15.0, 51)
COARSE_GRID = (-10.0, -3.0, 0.0, 2.0, 5.0, 10.0, 15.0)


@pytest.fixture
def spec2():
    return ChannelSpec.from_snr_db(2.0)


@pytest.fixture(params=COARSE_GRID, ids=lambda s: f"{s:+.0f}dB")
def grid_spec(request):
    return ChannelSpec.from_snr_db(request.param)
