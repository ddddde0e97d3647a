import numpy as np
import pytest

from fogplan import ScenarioSpec, TaskSet, Topology, generate_channels, generate_scenario, uplink_rates


@pytest.fixture
def make_topology():
    """Factory for hand-built topologies with convenient defaults."""

    def _make(
        num_users=1,
        num_rus=1,
        num_dus=1,
        user_to_ru=None,
        ru_to_du=None,
        uplink_bandwidth_hz=10e6,
        fronthaul_capacity_hz=300e6,
        midhaul_capacity_hz=500e6,
        fronthaul_se=3.0,
        midhaul_se=3.0,
        mecl_capacity_hz=2e9,
        mech_capacity_hz=25e9,
        cloud_capacity_hz=5e12,
    ):
        def per(value, n):
            arr = np.asarray(value, dtype=np.float64)
            return np.full(n, float(arr)) if arr.ndim == 0 else arr

        return Topology(
            num_dus=num_dus,
            num_rus=num_rus,
            num_users=num_users,
            ru_to_du=np.zeros(num_rus, dtype=int) if ru_to_du is None else np.asarray(ru_to_du),
            user_to_ru=np.zeros(num_users, dtype=int) if user_to_ru is None else np.asarray(user_to_ru),
            uplink_bandwidth_hz=per(uplink_bandwidth_hz, num_rus),
            fronthaul_capacity_hz=per(fronthaul_capacity_hz, num_rus),
            midhaul_capacity_hz=per(midhaul_capacity_hz, num_dus),
            fronthaul_se=per(fronthaul_se, num_rus),
            midhaul_se=per(midhaul_se, num_dus),
            mecl_capacity_hz=per(mecl_capacity_hz, num_rus),
            mech_capacity_hz=per(mech_capacity_hz, num_dus),
            cloud_capacity_hz=cloud_capacity_hz,
        )

    return _make


@pytest.fixture
def make_tasks():
    def _make(data_bits, cycles_per_bit):
        return TaskSet(data_bits=np.atleast_1d(data_bits), cycles_per_bit=np.atleast_1d(cycles_per_bit))

    return _make


@pytest.fixture
def random_instance():
    """Factory for a full random (scenario, rates) pair at desk scale."""

    def _make(seed, num_users=5, num_rus=2, num_dus=1, **spec_kw):
        spec = ScenarioSpec(num_users=num_users, num_rus=num_rus, num_dus=num_dus, seed=seed, **spec_kw)
        scenario = generate_scenario(spec)
        channels = generate_channels(
            scenario.topology,
            scenario.ru_positions_m,
            scenario.user_positions_m,
            seed=seed + 99991,
        )
        rates = uplink_rates(scenario.topology, channels)
        return scenario, rates

    return _make
