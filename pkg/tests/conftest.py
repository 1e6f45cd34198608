import numpy as np
import pytest

from mimonoma.config import preset
from mimonoma.geometry import half_wavelength_radius
from mimonoma.simulator import RunConfig, build_system

FIG2_POWER = (5 / 8, 2 / 8, 1 / 8)
FIG2_RATES = (0.5, 0.5, 3.0)
FIG3_POWER = (3 / 4, 1 / 4)
FIG3_RATES = (0.5, 0.5)


def desk_config(**overrides) -> RunConfig:
    """M=5, K=2, r=3, M_eff=2 system used wherever full scale is too slow."""
    base = dict(
        antennas=5,
        radius_wavelengths=half_wavelength_radius(5),
        clusters=((0.0, 30.0), (180.0, 30.0)),
        user_antennas=2,
        groups=2,
        power=FIG2_POWER,
        rates=FIG2_RATES,
        rho_db=(0.0, 10.0, 20.0, 30.0),
        trials=4096,
        seed=7,
        protocols=("perfect",),
        eig_threshold=1e-2,
    )
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture(scope="session")
def desk_cfg():
    return desk_config()


@pytest.fixture(scope="session")
def desk_system(desk_cfg):
    return build_system(desk_cfg)


@pytest.fixture(scope="session")
def full_cfg():
    return preset("fig2")


@pytest.fixture(scope="session")
def full_system(full_cfg):
    return build_system(full_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
