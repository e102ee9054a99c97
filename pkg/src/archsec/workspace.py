"""Workspace manifest loading and output management.

A workspace is a directory with a `workspace.json` manifest naming the
input documents. Outputs are written atomically (temp file, then rename)
and guarded by a content-hash cache so an unchanged workspace never
rewrites identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import loaders
from .attack_tree import SourceTree
from .errors import Code, fail
from .model import (
    AliasDeclaration,
    Architecture,
    AttackDefinition,
    BindingSet,
    CategoryAssignment,
    ReferenceModel,
    Vulnerability,
)

MANIFEST_NAME = "workspace.json"
CACHE_NAME = ".archsec-cache.json"


@dataclass
class Workspace:
    root: Path
    manifest: dict
    models: dict[str, ReferenceModel]  # declaration order preserved
    architecture: Architecture
    bindings: BindingSet
    attacks: list[AttackDefinition]  # concatenated in catalog declaration order
    aliases: list[AliasDeclaration] = field(default_factory=list)
    vulnerabilities: list[Vulnerability] = field(default_factory=list)
    assignments: list[CategoryAssignment] = field(default_factory=list)
    source_tree: SourceTree | None = None
    verdicts_path: Path | None = None

    @property
    def name(self) -> str:
        return self.manifest.get("name", self.root.name)

    def input_files(self) -> list[Path]:
        files = [self.root / MANIFEST_NAME]
        for key in ("models", "catalogs"):
            for rel in self.manifest.get(key, []):
                files.append(self.root / rel)
        for key in ("architecture", "bindings", "aliases", "vulnerabilities",
                    "assignments", "source_tree", "verdicts"):
            rel = self.manifest.get(key)
            if rel:
                files.append(self.root / rel)
        return files

    def input_hash(self) -> str:
        digest = hashlib.sha256()
        for path in self.input_files():
            digest.update(path.name.encode())
            if path.exists():
                digest.update(path.read_bytes())
            else:
                digest.update(b"<missing>")
        return digest.hexdigest()

    def read_verdict_lines(self) -> str:
        if self.verdicts_path is None or not self.verdicts_path.exists():
            return ""
        return self.verdicts_path.read_text(encoding="utf-8")


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise fail(Code.E_IO, f"missing input document: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise fail(Code.E_IO, f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise fail(Code.E_SYNTAX, f"{path.name}: {exc}") from None


def load_workspace(root: str | os.PathLike[str], lax: bool = False) -> Workspace:
    root_path = Path(root)
    manifest_path = root_path / MANIFEST_NAME
    if not root_path.is_dir():
        raise fail(Code.E_IO, f"workspace directory not found: {root_path}")
    manifest = _read_json(manifest_path)
    if not isinstance(manifest, dict):
        raise fail(Code.E_SYNTAX, f"{MANIFEST_NAME}: manifest must be an object")
    for key in ("models", "architecture", "bindings", "catalogs"):
        if key not in manifest:
            raise fail(Code.E_SYNTAX, f"{MANIFEST_NAME}: missing required key '{key}'")
    if not isinstance(manifest["models"], list) or not manifest["models"]:
        raise fail(Code.E_SYNTAX, f"{MANIFEST_NAME}: 'models' must be a non-empty list")
    if not isinstance(manifest["catalogs"], list):
        raise fail(Code.E_SYNTAX, f"{MANIFEST_NAME}: 'catalogs' must be a list")

    models: dict[str, ReferenceModel] = {}
    for rel in manifest["models"]:
        model = loaders.load_reference_model(_read_json(root_path / rel), lax=lax)
        if model.id in models:
            raise fail(Code.E_SYNTAX, f"duplicate reference model id '{model.id}'")
        models[model.id] = model

    architecture = loaders.load_architecture(
        _read_json(root_path / manifest["architecture"]), lax=lax
    )
    bindings = loaders.load_bindings(
        _read_json(root_path / manifest["bindings"]), models, lax=lax
    )

    attacks: list[AttackDefinition] = []
    seen_ids: set[str] = set()
    for rel in manifest["catalogs"]:
        catalog = loaders.load_attack_catalog(_read_json(root_path / rel), models, lax=lax)
        for attack in catalog:
            if attack.id in seen_ids:
                raise fail(
                    Code.E_DUP_ATTACK,
                    f"attack id '{attack.id}' appears in more than one catalog",
                )
            seen_ids.add(attack.id)
        attacks.extend(catalog)

    aliases: list[AliasDeclaration] = []
    if manifest.get("aliases"):
        aliases = loaders.load_aliases(_read_json(root_path / manifest["aliases"]), lax=lax)

    vulnerabilities: list[Vulnerability] = []
    if manifest.get("vulnerabilities"):
        vulnerabilities = loaders.load_vulnerabilities(
            _read_json(root_path / manifest["vulnerabilities"]), lax=lax
        )

    assignments: list[CategoryAssignment] = []
    if manifest.get("assignments"):
        assignments = loaders.load_assignments(
            _read_json(root_path / manifest["assignments"]), lax=lax
        )

    source_tree: SourceTree | None = None
    if manifest.get("source_tree"):
        source_tree = loaders.load_source_tree(
            _read_json(root_path / manifest["source_tree"]), lax=lax
        )

    verdicts_path: Path | None = None
    if manifest.get("verdicts"):
        verdicts_path = root_path / manifest["verdicts"]

    return Workspace(
        root=root_path,
        manifest=manifest,
        models=models,
        architecture=architecture,
        bindings=bindings,
        attacks=attacks,
        aliases=aliases,
        vulnerabilities=vulnerabilities,
        assignments=assignments,
        source_tree=source_tree,
        verdicts_path=verdicts_path,
    )


# ---------------------------------------------------------------------------
# output handling


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        mode="w",
        encoding="utf-8",
        dir=path.parent,
        prefix=f".{path.name}.",
        suffix=".tmp",
        delete=False,
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except BaseException:
        try:
            os.unlink(handle.name)
        except OSError:
            pass
        raise


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class OutputCache:
    """Skips rewriting artifacts whose inputs and content are unchanged."""

    def __init__(self, out_dir: Path, input_hash: str):
        self.out_dir = out_dir
        self.input_hash = input_hash
        self.path = out_dir / CACHE_NAME
        self._entries: dict[str, str] = {}
        if self.path.exists():
            try:
                payload = json.loads(self.path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                payload = {}
            if payload.get("input_hash") == input_hash:
                entries = payload.get("outputs", {})
                if isinstance(entries, dict):
                    self._entries = {str(k): str(v) for k, v in entries.items()}

    def write(self, relpath: str, text: str) -> bool:
        """Write one artifact; returns False when the cache made it a no-op."""
        target = self.out_dir / relpath
        digest = _sha256(text)
        if self._entries.get(relpath) == digest and target.exists():
            return False
        atomic_write(target, text)
        self._entries[relpath] = digest
        return True

    def save(self) -> None:
        payload = {"input_hash": self.input_hash, "outputs": dict(sorted(self._entries.items()))}
        atomic_write(self.path, json.dumps(payload, indent=2) + "\n")
