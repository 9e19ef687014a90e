"""Project directories: one manifest plus the asset files it references.

A project is a plain directory — ``manifest.json`` at the root and assets at
the relative paths the manifest's ``assets`` list names (conventionally
``meshes/``, ``grids/``, ``renders/``). The manifest is carried verbatim:
fields this package does not understand (a studio's bookkeeping, future
versions') survive a load/save cycle untouched, so projects can be shared
across tools without being bleached down to the known schema.
"""

from __future__ import annotations

import json
from pathlib import Path, PurePosixPath

__all__ = ["Project", "ProjectError", "load_project", "save_project"]


class ProjectError(ValueError):
    """A project failed to validate, resolve, or round-trip."""


class Project:
    """Immutable manifest + asset-bytes pair."""

    __slots__ = ("manifest", "assets")

    def __init__(self, manifest, assets):
        if not isinstance(manifest, dict):
            raise ProjectError(
                f"manifest must be a mapping, got {type(manifest).__name__}")
        declared = manifest.get("assets", [])
        if not isinstance(declared, list) or not all(
            isinstance(p, str) for p in declared
        ):
            raise ProjectError("manifest 'assets' must be a list of path strings")
        if set(assets) != set(declared):
            stray = sorted(set(assets) ^ set(declared))
            raise ProjectError(
                f"assets do not match the manifest's list: {stray}")
        object.__setattr__(self, "manifest", manifest)
        object.__setattr__(self, "assets", dict(assets))

    def __setattr__(self, name, value):
        raise AttributeError("Project is immutable")

    def __repr__(self):
        return (
            f"Project(units={self.manifest.get('units')!r}, "
            f"{len(self.assets)} assets)"
        )


def _checked_relpath(rel):
    pure = PurePosixPath(rel)
    if pure.is_absolute() or ".." in pure.parts or not pure.parts:
        raise ProjectError(f"asset path {rel!r} escapes the project directory")
    return pure


def save_project(project, directory):
    """Write ``manifest.json`` and every asset under ``directory``."""
    directory = Path(directory)
    for rel in project.assets:
        _checked_relpath(rel)
    directory.mkdir(parents=True, exist_ok=True)
    for rel, blob in project.assets.items():
        path = directory / PurePosixPath(rel)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    (directory / "manifest.json").write_text(
        json.dumps(project.manifest, indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )


def load_project(directory) -> Project:
    """Read a project directory back; every declared asset must resolve."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise ProjectError(f"no manifest.json under {directory}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProjectError(f"manifest.json does not parse: {exc}") from exc
    if not isinstance(manifest, dict):
        raise ProjectError("manifest.json must hold a JSON object")
    declared = manifest.get("assets", [])
    if not isinstance(declared, list):
        raise ProjectError("manifest 'assets' must be a list")
    assets = {}
    for rel in declared:
        if not isinstance(rel, str):
            raise ProjectError(f"asset path must be a string, got {rel!r}")
        path = directory / _checked_relpath(rel)
        if not path.is_file():
            raise ProjectError(f"asset {rel!r} is missing from the project")
        assets[rel] = path.read_bytes()
    return Project(manifest, assets)
