"""Bundled model files."""
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent


def textile_path() -> Path:
    """The three-state textile waste-treatment model."""
    return DATA_DIR / "textile.json"
