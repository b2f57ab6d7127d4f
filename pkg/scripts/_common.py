"""Small helpers shared by the experiment scripts."""

import argparse
import dataclasses
import json
from pathlib import Path


def parse_config(cls, description: str):
    """Build an argparse CLI from a dataclass: every field becomes ``--name``."""
    p = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        default = f.default
        if isinstance(default, (list, tuple)):
            p.add_argument(f"--{f.name.replace('_', '-')}", type=type(default[0]), nargs="+", default=list(default))
        else:
            p.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    return cls(**vars(p.parse_args()))


def save(out_dir: str, name: str, payload: dict) -> Path:
    path = Path(out_dir) / f"{name}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=float) + "\n")
    return path
