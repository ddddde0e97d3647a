import math

import numpy as np
import pytest

from fogplan import Allocation, Decision, check_feasibility, task_delay, total_delay


def test_h_tier_example(make_topology, make_tasks):
    # every leg contributes exactly one second
    topo = make_topology(fronthaul_se=3.0)
    tasks = make_tasks(30e6, 1.0)
    alloc = Allocation(fronthaul_bw={0: 10e6}, mech_speed={0: 30e6})
    out = task_delay(topo, tasks, 0, "H", alloc, access_rate_bps=30e6)
    assert out.access_s == pytest.approx(1.0)
    assert out.fronthaul_s == pytest.approx(1.0)
    assert out.midhaul_s == 0.0
    assert out.compute_s == pytest.approx(1.0)
    assert out.total_s == pytest.approx(3.0)


def test_l_tier_example(make_topology, make_tasks):
    topo = make_topology(mecl_capacity_hz=2e9)
    tasks = make_tasks(2e8, 10.0)  # 2 Gcycles
    alloc = Allocation(mecl_speed={0: 2e9})
    out = task_delay(topo, tasks, 0, "L", alloc, access_rate_bps=4e8)
    assert out.access_s == pytest.approx(0.5)
    assert out.fronthaul_s == 0.0 and out.midhaul_s == 0.0
    assert out.compute_s == pytest.approx(1.0)
    assert out.total_s == pytest.approx(1.5)


def test_c_tier_matches_independent_recompute(make_topology, make_tasks):
    rng = np.random.default_rng(7)
    for _ in range(50):
        bits = rng.uniform(5e6, 30e6)
        density = rng.uniform(0.1, 10.0)
        se_fh, se_mh = rng.uniform(1, 6, size=2)
        bw_fh, bw_mh = rng.uniform(1e6, 1e8, size=2)
        speed = rng.uniform(1e8, 1e12)
        rate = rng.uniform(1e6, 1e9)
        topo = make_topology(fronthaul_se=se_fh, midhaul_se=se_mh)
        tasks = make_tasks(bits, density)
        alloc = Allocation(fronthaul_bw={0: bw_fh}, midhaul_bw={0: bw_mh}, cloud_speed={0: speed})
        out = task_delay(topo, tasks, 0, "C", alloc, access_rate_bps=rate)
        # second, independently written evaluation of the cloud path
        expected = (
            bits / rate
            + bits / (bw_fh * se_fh)
            + bits / (bw_mh * se_mh)
            + (density * bits) / speed
        )
        assert out.total_s == pytest.approx(expected, rel=1e-12)
        assert out.total_s == pytest.approx(
            out.access_s + out.fronthaul_s + out.midhaul_s + out.compute_s, rel=1e-12
        )


@pytest.mark.parametrize(
    "tier,alloc,missing",
    [
        ("L", Allocation(), "mecl_speed"),
        ("H", Allocation(fronthaul_bw={0: 1e6}), "mech_speed"),
        ("H", Allocation(mech_speed={0: 1e9}), "fronthaul_bw"),
        ("C", Allocation(fronthaul_bw={0: 1e6}, midhaul_bw={0: 1e6}), "cloud_speed"),
        ("C", Allocation(fronthaul_bw={0: 1e6}, cloud_speed={0: 1e9}), "midhaul_bw"),
    ],
)
def test_missing_allocation_component_is_named(make_topology, make_tasks, tier, alloc, missing):
    topo = make_topology()
    tasks = make_tasks(1e7, 1.0)
    with pytest.raises(ValueError, match=missing):
        task_delay(topo, tasks, 0, tier, alloc, access_rate_bps=1e7)


def test_zero_rate_marks_infeasible(make_topology, make_tasks):
    topo = make_topology()
    tasks = make_tasks(1e7, 1.0)
    out = task_delay(topo, tasks, 0, "L", Allocation(mecl_speed={0: 1e9}), access_rate_bps=0.0)
    assert out.access_s == math.inf and out.total_s == math.inf


def test_feasible_at_exact_capacity(make_topology, make_tasks):
    # boundary is admitted: the constraints are <=
    topo = make_topology(num_users=2, cloud_capacity_hz=5e9)
    tasks = make_tasks([1e7, 2e7], [1.0, 1.0])
    decision = Decision(("C", "C"))
    alloc = Allocation(
        cloud_speed={0: 2e9, 1: 3e9},
        fronthaul_bw={0: 1e8, 1: 2e8},
        midhaul_bw={0: 2e8, 1: 3e8},
    )
    assert check_feasibility(topo, tasks, decision, alloc) == []


@pytest.mark.parametrize(
    "constraint,decision,alloc",
    [
        ("C3", ("L",), Allocation(mecl_speed={0: 2e9 + 1e3})),
        ("C4", ("H",), Allocation(mech_speed={0: 25e9 * 1.01}, fronthaul_bw={0: 1e6})),
        ("C5", ("C",), Allocation(cloud_speed={0: 5e12 * 1.001}, fronthaul_bw={0: 1e6}, midhaul_bw={0: 1e6})),
        ("C6", ("H",), Allocation(mech_speed={0: 1e9}, fronthaul_bw={0: 300e6 * 1.01})),
        ("C7", ("C",), Allocation(cloud_speed={0: 1e9}, fronthaul_bw={0: 1e6}, midhaul_bw={0: 500e6 * 1.01})),
    ],
)
def test_each_constraint_individually_violated(make_topology, make_tasks, constraint, decision, alloc):
    topo = make_topology()
    tasks = make_tasks(1e7, 1.0)
    violations = check_feasibility(topo, tasks, Decision(decision), alloc)
    assert len(violations) == 1
    v = violations[0]
    assert v.constraint == constraint
    assert constraint in str(v)
    if constraint in ("C3", "C6"):
        assert v.index == 0  # the RU
    elif constraint == "C5":
        assert v.index is None


def test_violation_names_the_ru(make_topology, make_tasks):
    # capacity small enough that a one-cycle excess exceeds the 1e-9 slack
    topo = make_topology(num_users=2, num_rus=2, user_to_ru=[0, 1], ru_to_du=[0, 0], mecl_capacity_hz=1e3)
    tasks = make_tasks([1e7, 1e7], [1.0, 1.0])
    alloc = Allocation(mecl_speed={0: 1e3, 1: 1e3 + 1.0})
    violations = check_feasibility(topo, tasks, Decision(("L", "L")), alloc)
    assert [(v.constraint, v.index) for v in violations] == [("C3", 1)]


def test_tolerance_admits_closed_form_roundoff(make_topology, make_tasks):
    topo = make_topology(mecl_capacity_hz=3e9)
    tasks = make_tasks(1e7, 1.0)
    alloc = Allocation(mecl_speed={0: 3e9 * (1 + 1e-10)})
    assert check_feasibility(topo, tasks, Decision(("L",)), alloc) == []


def test_total_delay_is_additive(make_topology, make_tasks):
    topo = make_topology(num_users=2)
    tasks = make_tasks([1e7, 2e7], [1.0, 2.0])
    decision = Decision(("L", "H"))
    alloc = Allocation(mecl_speed={0: 1e9}, mech_speed={1: 2e9}, fronthaul_bw={1: 1e7})
    rates = [1e7, 2e7]
    one = task_delay(topo, tasks, 0, "L", alloc, rates[0]).total_s
    two = task_delay(topo, tasks, 1, "H", alloc, rates[1]).total_s
    assert total_delay(topo, tasks, decision, alloc, rates) == pytest.approx(one + two, rel=1e-12)
    solo = total_delay(
        make_topology(num_users=1),
        make_tasks(1e7, 1.0),
        Decision(("L",)),
        Allocation(mecl_speed={0: 1e9}),
        [1e7],
    )
    assert solo == pytest.approx(one, rel=1e-12)


def test_more_resource_never_hurts(make_topology, make_tasks):
    rng = np.random.default_rng(13)
    topo = make_topology()
    tasks = make_tasks(2e7, 2.0)
    for _ in range(50):
        bw_fh, bw_mh = rng.uniform(1e6, 1e8, size=2)
        speed = rng.uniform(1e8, 1e11)
        boost = rng.uniform(1.0, 3.0)
        base = task_delay(
            topo, tasks, 0, "C",
            Allocation(fronthaul_bw={0: bw_fh}, midhaul_bw={0: bw_mh}, cloud_speed={0: speed}),
            1e7,
        ).total_s
        for kwargs in (
            {"fronthaul_bw": {0: bw_fh * boost}, "midhaul_bw": {0: bw_mh}, "cloud_speed": {0: speed}},
            {"fronthaul_bw": {0: bw_fh}, "midhaul_bw": {0: bw_mh * boost}, "cloud_speed": {0: speed}},
            {"fronthaul_bw": {0: bw_fh}, "midhaul_bw": {0: bw_mh}, "cloud_speed": {0: speed * boost}},
        ):
            assert task_delay(topo, tasks, 0, "C", Allocation(**kwargs), 1e7).total_s <= base + 1e-15


def test_decision_and_allocation_validation():
    with pytest.raises(ValueError, match="tier"):
        Decision(("L", "X"))
    with pytest.raises(ValueError, match="mecl_speed"):
        Allocation(mecl_speed={0: 0.0})
    with pytest.raises(ValueError, match="fronthaul_bw"):
        Allocation(fronthaul_bw={2: -1.0})
    assert Decision(("L", "H", "C")).codes.tolist() == [0, 1, 2]
