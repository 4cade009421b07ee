"""The bundled benchmark programs and their expected fusion statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .trees import TreeSpec


def _data(*parts) -> Path:
    return Path(str(resources.files(__package__).joinpath("corpus", *parts)))


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    generator: str  # tree generator family
    params: tuple = ()  # default generator parameters, as (name, value) pairs

    @property
    def program_file(self) -> Path:
        return _data(f"{self.name}.tg")

    @property
    def golden_file(self) -> Path:
        return _data("golden", f"{self.name}.json")

    def golden(self) -> dict:
        return json.loads(self.golden_file.read_text(encoding="utf-8"))

    def spec(self, seed: int, **params) -> TreeSpec:
        return TreeSpec(generator=self.generator, params={**dict(self.params), **params}, seed=seed)


ENTRIES = {
    "fig2": CorpusEntry("fig2", "random"),
    "render": CorpusEntry("render", "render"),
    "ast": CorpusEntry("ast", "ast", (("body", "random"),)),
    "partial": CorpusEntry("partial", "random"),
}


def entry(name: str) -> CorpusEntry:
    if name not in ENTRIES:
        raise KeyError(f"no corpus program {name!r}")
    return ENTRIES[name]


def same_stats(a: dict, b: dict) -> list:
    """Structural differences between two fusion statistics objects.

    Unit names are digests of their keys, so units are matched by constituents.
    """
    out = []
    for k in ("sequencesFound", "unitsCreated", "unitsReused", "cutoffSplits"):
        if a.get(k) != b.get(k):
            out.append(f"{k}: {a.get(k)} != {b.get(k)}")
    ua = {tuple(u["constituents"]): u for u in a.get("perUnit", [])}
    ub = {tuple(u["constituents"]): u for u in b.get("perUnit", [])}
    for key in sorted(set(ua) ^ set(ub)):
        out.append(f"unit {'+'.join(key)} only in {'first' if key in ua else 'second'}")
    for key in sorted(set(ua) & set(ub)):
        for k in ("groupedCalls", "splitEvents"):
            if ua[key][k] != ub[key][k]:
                out.append(f"unit {'+'.join(key)} {k}: {ua[key][k]} != {ub[key][k]}")
    return out
