"""Bundled example germs with expected verdicts, curve pairs and direction annotations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .variety import SemialgebraicSet, load_set_json
from .witness import WitnessCurve

CORPUS_VERSION = "v1"


@dataclass(frozen=True)
class WitnessPair:
    name: str
    alpha: WitnessCurve
    beta: WitnessCurve
    grid: str
    n: int
    expected_slope: float
    lower_bound: str | None
    set_json: dict | None = None  # None: the entry's own set
    branch: str | None = None

    def germ(self, entry: "CorpusEntry") -> list[SemialgebraicSet]:
        sets = load_set_json(self.set_json) if self.set_json is not None else list(entry.set)
        if self.branch is not None:
            sets = [s for s in sets if s.name.endswith(f"[{self.branch}]")]
            if not sets:
                raise KeyError(f"no branch {self.branch!r}")
        return sets


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    set: tuple  # branches
    set_json: dict
    expected: dict
    provenance: dict
    simple_directions: tuple
    non_simple_directions: tuple
    scale_window: dict
    witnesses: tuple = ()
    tags: tuple = ()
    notes: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def slow(self) -> bool:
        return "slow" in self.tags


def _files():
    return resources.files("lnecone").joinpath("corpus_data", CORPUS_VERSION)


@lru_cache(maxsize=None)
def _raw() -> dict:
    out = {}
    for f in _files().iterdir():
        if f.name.endswith(".json"):
            obj = json.loads(f.read_text())
            out[obj["name"]] = obj
    return out


def list_entries() -> list[str]:
    raw = _raw()
    return sorted(raw, key=lambda k: raw[k]["order"])


def _witness(obj: dict) -> WitnessPair:
    return WitnessPair(
        name=obj["name"],
        alpha=WitnessCurve.from_json(obj["alpha"]),
        beta=WitnessCurve.from_json(obj["beta"]),
        grid=obj["grid"],
        n=int(obj.get("n", 8000)),
        expected_slope=float(obj["expected_slope"]),
        lower_bound=obj.get("lower_bound"),
        set_json=obj.get("set"),
        branch=obj.get("branch"),
    )


@lru_cache(maxsize=None)
def get(name: str) -> CorpusEntry:
    raw = _raw()
    if name not in raw:
        raise KeyError(f"unknown corpus entry {name!r}; known: {', '.join(list_entries())}")
    obj = raw[name]
    return CorpusEntry(
        name=name,
        set=tuple(load_set_json(obj["set"])),
        set_json=obj["set"],
        expected=dict(obj["expected"]),
        provenance=dict(obj.get("provenance", {})),
        simple_directions=tuple(tuple(v) for v in obj.get("simple_directions", [])),
        non_simple_directions=tuple(tuple(v) for v in obj.get("non_simple_directions", [])),
        scale_window=dict(obj["scale_window"]),
        witnesses=tuple(_witness(w) for w in obj.get("witnesses", [])),
        tags=tuple(obj.get("tags", [])),
        notes=obj.get("notes", ""),
        raw=obj,
    )


def export(name: str) -> str:
    """The entry's JSON exactly as shipped."""
    get(name)
    return json.dumps(_raw()[name], indent=2) + "\n"
