"""Bundled input files: example DAGs and a ready-to-run sweep config."""

from importlib.resources import files
from pathlib import Path

__all__ = ["fixture_path", "fixture_text"]


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture (the package installs unzipped)."""
    path = Path(str(files(__package__).joinpath(name)))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return path


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()
