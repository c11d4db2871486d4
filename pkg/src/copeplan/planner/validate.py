"""Standalone plan checker working directly from happening semantics.

Deliberately shares no code with the search: it replays a timed action
sequence against the task definition from first principles, injecting the
task's own timed literals, so a search bug cannot hide inside the checker.
"""

TIME_TOL = 1e-6


def validate_plan(task, happenings):
    """Check a list of (time, "start"/"end", action_name) records.

    Returns (ok, message). Timed literals up to the plan's makespan are
    injected automatically; the goal must hold after the final happening.
    """
    events = []
    for time, kind, name in happenings:
        if kind not in ("start", "end"):
            return False, f"unknown happening kind {kind!r}"
        if name not in task.by_name:
            return False, f"unknown action {name!r}"
        events.append((float(time), 1 if kind == "end" else 2, kind, name))
    makespan = max((t for t, _, _, _ in events), default=0.0)
    for idx, lit in enumerate(task.tils):
        if lit.time <= makespan + TIME_TOL:
            events.append((lit.time, 0, "til", idx))
    events.sort(key=lambda e: (e[0], e[1]))
    for (t1, *_), (t2, *_) in zip(events, events[1:]):
        if t2 - t1 < TIME_TOL:
            return False, f"happenings at {t1} and {t2} are not separated"

    state = set(task.init)
    open_intervals = []

    def invariants_hold():
        for action, _, _ in open_intervals:
            if not action.cond_over <= state:
                return False, action.name
        return True, None

    for time, _, kind, name in events:
        if kind == "til":
            lit = task.tils[name]
            if lit.add:
                state.add(lit.prop)
            else:
                state.discard(lit.prop)
        elif kind == "start":
            action = task.by_name[name]
            if not action.cond_start <= state:
                missing = sorted(action.cond_start - state)
                return False, f"start {name} at {time}: missing {missing}"
            state -= action.del_start
            state |= action.add_start
            open_intervals.append((action, name, time))
        else:
            action = task.by_name[name]
            match = None
            for entry in open_intervals:
                if entry[1] == name and abs(entry[2] + action.duration - time) <= TIME_TOL:
                    match = entry
                    break
            if match is None:
                return False, f"end {name} at {time} matches no open interval"
            if not action.cond_end <= state:
                missing = sorted(action.cond_end - state)
                return False, f"end {name} at {time}: missing {missing}"
            open_intervals.remove(match)
            state -= action.del_end
            state |= action.add_end
        ok, violator = invariants_hold()
        if not ok:
            return False, f"invariant of {violator} broken at {time}"

    if open_intervals:
        return False, f"unfinished actions: {sorted(e[1] for e in open_intervals)}"
    if not task.goal <= state:
        return False, f"goal not reached, missing {sorted(task.goal - state)}"
    return True, "ok"
