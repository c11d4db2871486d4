"""Tagged JSON document formats for instances, tasks, and benchmark configs.

Every document carries a format tag and version so files identify their own
kind. Distributions serialize as sparse [time, probability] pairs. Parsing
raises FormatError with the offending field named; parse -> serialize ->
parse is the identity for every shipped file.
"""

import json

from .cope import CopeInstance, CopeProcess, PrefixAction
from .copem import CopemInstance
from .dist import DiscreteDistribution
from .harness import BenchmarkConfig
from .kds import KdsInstance, KdsProcess
from .planner.task import DurativeAction, Task, TimedLiteral

VERSION = 1


class FormatError(ValueError):
    pass


def _require(doc, key, where):
    if key not in doc:
        raise FormatError(f"{where}: missing field {key!r}")
    return doc[key]


def _pmf_to_json(dist):
    return [[t, p] for t, p in dist.pairs()]


def _pmf_from_json(pairs, where):
    try:
        return DiscreteDistribution.from_pairs(pairs)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{where}: bad pmf ({exc})") from exc


# -- abstract instances ------------------------------------------------------

def kds_to_dict(inst: KdsInstance) -> dict:
    return {
        "format": "kds",
        "version": VERSION,
        "horizon": inst.horizon,
        "processes": [
            {"pmf": _pmf_to_json(p.profile), "deadline": p.deadline}
            for p in inst.processes
        ],
    }


def _kds_from_dict(doc) -> KdsInstance:
    procs = []
    for k, p in enumerate(_require(doc, "processes", "kds")):
        where = f"kds process {k}"
        procs.append(KdsProcess(
            profile=_pmf_from_json(_require(p, "pmf", where), where),
            deadline=int(_require(p, "deadline", where)),
        ))
    return KdsInstance(procs, horizon=int(_require(doc, "horizon", "kds")))


def _cope_processes_to_json(processes):
    out = []
    for p in processes:
        out.append({
            "pmf": _pmf_to_json(p.profile),
            "prefix": [[a.action_id, a.duration] for a in p.prefix],
            "induced_deadline": p.induced_deadline,
        })
    return out


def _cope_processes_from_json(items, where):
    procs = []
    for k, p in enumerate(items):
        loc = f"{where} process {k}"
        prefix = tuple(
            PrefixAction(str(aid), int(dur))
            for aid, dur in _require(p, "prefix", loc)
        )
        procs.append(CopeProcess(
            profile=_pmf_from_json(_require(p, "pmf", loc), loc),
            prefix=prefix,
            induced_deadline=int(_require(p, "induced_deadline", loc)),
        ))
    return procs


def cope_to_dict(inst: CopeInstance) -> dict:
    return {
        "format": "cope",
        "version": VERSION,
        "horizon": inst.horizon,
        "processes": _cope_processes_to_json(inst.processes),
    }


def _cope_from_dict(doc) -> CopeInstance:
    return CopeInstance(
        _cope_processes_from_json(_require(doc, "processes", "cope"), "cope"),
        horizon=int(_require(doc, "horizon", "cope")),
    )


def copem_to_dict(inst: CopemInstance) -> dict:
    return {
        "format": "copem",
        "version": VERSION,
        "horizon": inst.horizon,
        "dispatch_budget": inst.dispatch_budget,
        "observation_budget": inst.observation_budget,
        "measurement_model": inst.measurement_model,
        "processes": _cope_processes_to_json(inst.processes),
    }


def _copem_from_dict(doc) -> CopemInstance:
    return CopemInstance(
        _cope_processes_from_json(_require(doc, "processes", "copem"), "copem"),
        dispatch_budget=int(_require(doc, "dispatch_budget", "copem")),
        observation_budget=int(_require(doc, "observation_budget", "copem")),
        measurement_model=str(doc.get("measurement_model", "perfect")),
        horizon=int(_require(doc, "horizon", "copem")),
    )


# -- planning tasks ----------------------------------------------------------

def task_to_dict(task: Task) -> dict:
    def sets(a):
        return {
            "cond_start": sorted(a.cond_start),
            "cond_over": sorted(a.cond_over),
            "cond_end": sorted(a.cond_end),
            "add_start": sorted(a.add_start),
            "del_start": sorted(a.del_start),
            "add_end": sorted(a.add_end),
            "del_end": sorted(a.del_end),
        }

    return {
        "format": "task",
        "version": VERSION,
        "propositions": sorted(task.propositions),
        "actions": [
            {"name": a.name, "duration": a.duration, **sets(a)}
            for a in task.actions
        ],
        "init": sorted(task.init),
        "goal": sorted(task.goal),
        "tils": [[lit.time, lit.prop, lit.add] for lit in task.tils],
    }


_ACTION_SETS = ("cond_start", "cond_over", "cond_end",
                "add_start", "del_start", "add_end", "del_end")


def _task_from_dict(doc) -> Task:
    actions = []
    for k, a in enumerate(_require(doc, "actions", "task")):
        where = f"task action {k}"
        kwargs = {key: frozenset(a.get(key, ())) for key in _ACTION_SETS}
        actions.append(DurativeAction(
            name=str(_require(a, "name", where)),
            duration=float(_require(a, "duration", where)),
            **kwargs,
        ))
    tils = tuple(
        TimedLiteral(time=float(t), prop=str(p), add=bool(add))
        for t, p, add in doc.get("tils", ())
    )
    try:
        return Task(
            propositions=frozenset(_require(doc, "propositions", "task")),
            actions=tuple(actions),
            init=frozenset(_require(doc, "init", "task")),
            goal=frozenset(doc.get("goal", ())),
            tils=tils,
        )
    except ValueError as exc:
        raise FormatError(f"task: {exc}") from exc


# -- dispatch ----------------------------------------------------------------

_WRITERS = {
    KdsInstance: kds_to_dict,
    CopeInstance: cope_to_dict,
    CopemInstance: copem_to_dict,
    Task: task_to_dict,
    BenchmarkConfig: BenchmarkConfig.to_dict,
}

_READERS = {
    "kds": _kds_from_dict,
    "cope": _cope_from_dict,
    "copem": _copem_from_dict,
    "task": _task_from_dict,
    "bench": BenchmarkConfig.from_dict,
}


def to_dict(obj) -> dict:
    writer = _WRITERS.get(type(obj))
    if writer is None:
        raise FormatError(f"cannot serialize {type(obj).__name__}")
    return writer(obj)


def from_dict(doc):
    if not isinstance(doc, dict):
        raise FormatError("document is not a JSON object")
    tag = _require(doc, "format", "document")
    version = int(doc.get("version", 0))
    if version != VERSION:
        raise FormatError(f"document: unsupported version {version}")
    reader = _READERS.get(tag)
    if reader is None:
        raise FormatError(f"document: unknown format {tag!r}")
    try:
        return reader(doc)
    except FormatError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise FormatError(f"{tag}: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(to_dict(obj), indent=2, sort_keys=True) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return from_dict(doc)


def save(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


# -- plan streams ------------------------------------------------------------

def happenings_to_text(happenings) -> str:
    """One `time kind action` line per happening, times at full precision."""
    lines = [f"{float(t)!r} {kind} {name}" for t, kind, name in happenings]
    return "\n".join(lines) + ("\n" if lines else "")


def happenings_from_text(text):
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"plan line {ln}: expected `time kind action`")
        t, kind, name = parts
        try:
            out.append((float(t), kind, name))
        except ValueError as exc:
            raise FormatError(f"plan line {ln}: bad time {t!r}") from exc
    return out
