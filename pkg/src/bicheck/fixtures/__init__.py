"""Bundled ``.bi`` specifications."""

from importlib.resources import files
from pathlib import Path

NAMES = ("queues.bi", "queues_global_rbq.bi", "queues_global_bq.bi", "counters.bi")


def path(name: str) -> Path:
    return Path(str(files(__name__) / name))


def source(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    from bicheck.dsl import parse

    return parse(source(name), name)
