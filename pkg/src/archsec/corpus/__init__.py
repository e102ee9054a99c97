"""Bundled example workspace: a municipal smart-lighting deployment.

The corpus is both documentation and a regression anchor. `golden/` holds
frozen renderings of the derived artifacts; `verify_golden` re-derives
everything from the inputs and reports any drift.
"""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path

from .. import pipeline
from ..errors import Code, fail
from ..workspace import Workspace, load_workspace

GOLDEN_DIR = "golden"
_SKIP = {"__init__.py", "__pycache__", GOLDEN_DIR}


def corpus_path() -> Path:
    """Directory of the bundled workspace (the corpus ships as plain files)."""
    return Path(str(resources.files(__package__)))


def load_corpus(lax: bool = False) -> Workspace:
    return load_workspace(corpus_path(), lax=lax)


def copy_corpus(destination: Path) -> None:
    """Copy the workspace inputs (not the goldens) to a writable directory."""
    if destination.exists() and any(destination.iterdir()):
        raise fail(Code.E_CORPUS, f"destination is not empty: {destination}")
    shutil.copytree(
        corpus_path(),
        destination,
        dirs_exist_ok=True,
        ignore=shutil.ignore_patterns(*_SKIP, "*.pyc"),
    )


def golden_path() -> Path:
    return corpus_path() / GOLDEN_DIR


def _normalize(text: str) -> str:
    lines = text.replace("\r\n", "\n").split("\n")
    return "\n".join(line.rstrip() for line in lines).rstrip() + "\n"


def verify_golden(artifacts: dict[str, str] | None = None) -> list[str]:
    """Compare rendered artifacts against the frozen goldens.

    Returns one message per drifted or missing artifact; an empty list means
    the corpus still reproduces its goldens byte-for-byte (modulo trailing
    whitespace and line endings).
    """
    if artifacts is None:
        derivation = pipeline.derive(load_corpus())
        artifacts = pipeline.render_artifacts(derivation)
    problems: list[str] = []
    root = golden_path()
    for golden_file in sorted(root.rglob("*")):
        if not golden_file.is_file():
            continue
        relpath = golden_file.relative_to(root).as_posix()
        if relpath not in artifacts:
            problems.append(f"no rendered artifact for golden '{relpath}'")
            continue
        expected = _normalize(golden_file.read_text(encoding="utf-8"))
        actual = _normalize(artifacts[relpath])
        if expected != actual:
            problems.append(f"artifact '{relpath}' drifted from its golden")
    return problems
