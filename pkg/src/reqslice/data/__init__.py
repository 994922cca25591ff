"""Bundled fixture models, requirements and training examples."""

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent


def data_path(name: str) -> Path:
    """Absolute path of a bundled data file such as ``"tustin.json"``."""
    p = DATA_DIR / name
    if not p.exists():
        raise FileNotFoundError(f"no bundled data file {name!r}")
    return p
