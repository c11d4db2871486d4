import math

import numpy as np
import pytest

from copeplan.dda import DdaParams, q_value
from copeplan.dist import DiscreteDistribution, KnownDeadline
from copeplan.planner import (
    DispatchParams,
    DurativeAction,
    Task,
    TimedLiteral,
    deadline_steps,
    discretized_lognormal,
    estimate_completion,
    expand,
    latest_start,
    make_root,
    q_known,
    run_search,
    validate_plan,
)
from copeplan.planner.engine import _apply_dispatch, _auto_advance
from copeplan.planner.search import SearchStats, make_child


def fs(*names):
    return frozenset(names)


def micro_task(window=20.0):
    # prep then finish, both inside a window that a timed literal closes
    return Task(
        propositions=fs("free", "window", "prepped", "done"),
        actions=(
            DurativeAction(
                name="prep", duration=2.0,
                cond_start=fs("free"), cond_over=fs("window"),
                del_start=fs("free"), add_end=fs("prepped", "free"),
            ),
            DurativeAction(
                name="finish", duration=3.0,
                cond_start=fs("prepped", "free"), cond_over=fs("window"),
                del_start=fs("free"), add_end=fs("done", "free"),
            ),
        ),
        init=fs("free", "window"),
        goal=fs("done"),
        tils=(TimedLiteral(time=window, prop="window", add=False),),
    )


def pair_task():
    # two independent one-step goals, achievable in either order
    return Task(
        propositions=fs("free", "pa", "pb"),
        actions=(
            DurativeAction(name="a", duration=1.0, cond_start=fs("free"),
                           del_start=fs("free"), add_end=fs("pa", "free")),
            DurativeAction(name="b", duration=1.0, cond_start=fs("free"),
                           del_start=fs("free"), add_end=fs("pb", "free")),
        ),
        init=fs("free"),
        goal=fs("pa", "pb"),
    )


def test_root_expansion_prunes_dead_and_inapplicable_steps():
    task = micro_task()
    root = make_root(task)
    assert root is not None
    assert root.h == 4.0
    children = expand(task, root, tick=1)
    # finish lacks its start condition; applying the literal kills the goal
    assert [c.prefix for c in children] == [(("start", "prep"),)]


def test_chain_tightening_caps_latest_start():
    task = micro_task(window=20.0)
    root = make_root(task)
    child = make_child(task, root, ("start", "prep"), tick=1)
    assert child.h == 3.0
    # finish must start by 17 to end before the window closes, and prep
    # must precede it by the separation epsilon
    assert latest_start(child, 0) == pytest.approx(16.999)
    assert latest_start(child, 1) == math.inf


def test_latest_start_never_decreases_as_steps_commit():
    task = micro_task()
    root = make_root(task)
    frontier = [root]
    seen = 0
    for _ in range(30):
        if not frontier:
            break
        node = frontier.pop(0)
        for c in range(len(node.prefix) + 1):
            assert latest_start(node, c) <= latest_start(node, c + 1)
        seen += 1
        frontier.extend(expand(task, node, tick=seen))
    assert seen >= 10


def test_discretized_lognormal_matches_moments():
    dist = discretized_lognormal(6.0, 0.5)
    assert abs(dist.mean() - 6.0) / 6.0 < 0.05
    assert dist.probs.sum() == pytest.approx(1.0)
    assert dist.pmf(0) == 0.0
    assert discretized_lognormal(6.0, 0.0).pairs() == [(6, 1.0)]


def test_estimate_completion_uses_delay_and_dispersion():
    stats = SearchStats()
    stats.delay_sum, stats.delay_count = 20.0, 10
    root = make_root(micro_task())
    root.h = 3.0
    est = estimate_completion(root, stats)
    assert est.pairs() == [(6, 1.0)]
    root.h = 0.0
    assert estimate_completion(root, stats).pairs() == [(0, 1.0)]


def test_deadline_steps_grid():
    assert deadline_steps(2.0, 0.0, 10.0) == 21
    assert deadline_steps(2.0, 1.95, 10.0) == 1
    assert deadline_steps(2.0, 2.5, 10.0) == 0
    assert deadline_steps(math.inf, 5.0, 10.0) >= 10**8


def test_q_known_matches_reference_scoring():
    rng = np.random.default_rng(7)
    params = DdaParams(t_u=4, gamma=0.9)
    for _ in range(60):
        size = int(rng.integers(1, 12))
        w = rng.random(size) + 1e-3
        probs = np.concatenate([[0.0], w / w.sum()])
        profile = DiscreteDistribution(probs)
        d = int(rng.integers(1, 20))
        assert q_known(profile, d, params) == pytest.approx(
            q_value(profile, KnownDeadline(d), params), abs=1e-9)


def test_nodisp_solves_micro_and_validates():
    task = micro_task()
    res = run_search(task, mode="nodisp", speed=100.0)
    assert res.solved
    ok, msg = validate_plan(task, res.happenings)
    assert ok, msg
    for decided, _, scheduled in res.records:
        assert decided <= scheduled + 1e-9
    assert res.completion_time < 20.0
    assert res.dispatches == 0


def test_nodisp_is_deterministic():
    a = run_search(micro_task(), mode="nodisp", speed=100.0)
    b = run_search(micro_task(), mode="nodisp", speed=100.0)
    assert a.records == b.records
    assert a.expansions == b.expansions
    assert a.happenings == b.happenings


def test_nodisp_fails_when_search_time_eats_the_window():
    task = micro_task(window=7.0)
    res = run_search(task, mode="nodisp", speed=2.0, max_expansions=500)
    assert not res.solved


def test_disp_commits_early_and_beats_nodisp():
    # same window and speed the pure searcher just failed under
    task = micro_task(window=7.0)
    params = DispatchParams(dt=0.05, min_subtree_expansions=1, min_sim_open=1,
                            t_wait=2)
    res = run_search(task, mode="disp", speed=2.0, dispatch_params=params,
                     max_expansions=500)
    assert res.solved
    assert res.dispatches >= 1
    ok, msg = validate_plan(task, res.happenings)
    assert ok, msg
    for decided, _, scheduled in res.records:
        assert decided <= scheduled + 1e-9


def test_disp_records_decision_before_start():
    task = micro_task(window=8.0)
    params = DispatchParams(dt=0.05, min_subtree_expansions=2, min_sim_open=1)
    res = run_search(task, mode="disp", speed=4.0, dispatch_params=params,
                     max_expansions=2000)
    assert res.solved
    assert res.first_dispatch_time == min(t for t, k, _ in res.happenings if k == "start")


def _drive_to_closures(task):
    """Expand a;b-then-ends and b;a-then-ends orders by hand, b-first owning
    the shared memo entry so the a-first closure lands in pruned_dups."""
    root = make_root(task)
    memo = {root.key(): root.prefix}
    pruned = {}
    order_b = root
    for step in (("start", "b"), ("end", "b", 0), ("start", "a"), ("end", "a", 2)):
        order_b = make_child(task, order_b, step, tick=1)
        memo[order_b.key()] = order_b.prefix
    order_a = root
    for step in (("start", "a"), ("end", "a", 0), ("start", "b")):
        order_a = make_child(task, order_a, step, tick=1)
        memo.setdefault(order_a.key(), order_a.prefix)
    closure_a = make_child(task, order_a, ("end", "b", 2), tick=1)
    assert closure_a.key() in memo
    assert memo[closure_a.key()] == order_b.prefix
    pruned.setdefault(closure_a.key(), []).append(closure_a)
    return memo, pruned, [order_b, order_a], closure_a


def test_apply_dispatch_revives_pruned_duplicate():
    task = pair_task()
    memo, pruned, open_list, closure_a = _drive_to_closures(task)
    executed, records = [], []
    _apply_dispatch(task, ("start", "a"), executed, open_list, memo, pruned,
                    t_now=0.0, records=records)
    assert executed[0][0] == ("start", "a")
    assert records == [(0.0, "a", 0.0)]
    # the b-first branch is gone and the a-first closure is searchable again
    assert all(nd.prefix[0] == ("start", "a") for nd in open_list)
    assert any(nd.prefix == closure_a.prefix for nd in open_list)
    assert memo[closure_a.key()] == closure_a.prefix


def test_auto_advance_absorbs_committed_end():
    task = pair_task()
    root = make_root(task)
    child = make_child(task, root, ("start", "a"), tick=1)
    open_list = [child]
    executed, records = [], []
    memo = {child.key(): child.prefix}
    _apply_dispatch(task, ("start", "a"), executed, open_list, memo, {},
                    t_now=0.0, records=records)
    grand = make_child(task, open_list[0], ("end", "a", 0), tick=2)
    open_list = [grand]
    _auto_advance(task, executed, open_list, t_now=0.5)
    assert len(executed) == 1  # end at t=1.0 has not happened yet
    _auto_advance(task, executed, open_list, t_now=2.0)
    assert [s for s, _ in executed] == [("start", "a"), ("end", "a", 0)]
    assert executed[1][1] == pytest.approx(1.0)


def test_validator_rejects_broken_plans():
    task = micro_task()
    good = [(0.0, "start", "prep"), (2.0, "end", "prep"),
            (2.5, "start", "finish"), (5.5, "end", "finish")]
    assert validate_plan(task, good)[0]
    missing_end = good[:3]
    assert not validate_plan(task, missing_end)[0]
    too_late = [(t + 16.0, k, n) for t, k, n in good]
    assert not validate_plan(task, too_late)[0]
    unseparated = [(0.0, "start", "prep"), (2.0, "end", "prep"),
                   (2.0, "start", "finish"), (5.0, "end", "finish")]
    assert not validate_plan(task, unseparated)[0]
