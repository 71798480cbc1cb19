"""File formats shared by the CLI and service: curves, patterns, run manifests.

Curves travel as JSON arrays of [x, y] pairs (closure implicit) or as
two-column CSV with an ``x,y`` header.  Patterns are JSON objects
``{"window": [xmin, xmax, ymin, ymax], "points": [{"x": .., "y": .., "curve":
[[x, y], ...]}, ...]}``.  Every CLI run that writes files also records a
manifest with the command, flags, seed, library version, input digests and
timing, so outputs are reproducible from the manifest alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

from .errors import InvalidInputError


def read_curve_file(path: str | Path) -> list[list[float]]:
    """Vertex list from a curve file; format sniffed from the extension."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"curve file not found: {path}")
    if path.suffix.lower() == ".csv":
        return _read_curve_csv(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return _vertices_from_json(data, path)


def _vertices_from_json(data, path) -> list[list[float]]:
    if not isinstance(data, list) or not data:
        raise InvalidInputError(f"{path}: expected a non-empty JSON array of [x, y] pairs")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise InvalidInputError(f"{path}: entry {i} is not an [x, y] pair")
        out.append([float(item[0]), float(item[1])])
    return out


def _read_curve_csv(path: Path) -> list[list[float]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty CSV file") from None
        if [c.strip().lower() for c in header[:2]] != ["x", "y"]:
            raise InvalidInputError(f"{path}: CSV curve files need an 'x,y' header")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append([float(row[0]), float(row[1])])
            except (ValueError, IndexError) as exc:
                raise InvalidInputError(f"{path}: bad row at line {lineno}: {row}") from exc
    if not out:
        raise InvalidInputError(f"{path}: no vertex rows")
    return out


def dedupe_vertices(vertices: list[list[float]]) -> list[list[float]]:
    """Drop consecutive duplicate vertices and a repeated closing vertex."""
    out = [vertices[0]]
    for v in vertices[1:]:
        if v != out[-1]:
            out.append(v)
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    return out


def write_curve_json(path: str | Path, vertices) -> None:
    Path(path).write_text(json.dumps([[float(x), float(y)] for x, y in vertices]))


def read_pattern_file(path: str | Path) -> dict:
    """Pattern JSON as a plain dict; structural validation happens downstream."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"pattern file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict) or "window" not in data or "points" not in data:
        raise InvalidInputError(f"{path}: pattern files need 'window' and 'points' keys")
    return data


def write_pattern_file(path: str | Path, pattern: dict) -> None:
    Path(path).write_text(json.dumps(pattern))


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


class ManifestTimer:
    """Collects the fields of a run manifest while a command executes."""

    def __init__(self, command: str, flags: dict, seed=None, version: str = ""):
        self.command = command
        self.flags = flags
        self.seed = seed
        self.version = version
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self._start = time.time()

    def record_input(self, path: str | Path) -> None:
        p = Path(path)
        if p.exists() and p.is_file():
            self.inputs[str(p)] = file_digest(p)

    def record_output(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def write(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "flags": self.flags,
            "seed": self.seed,
            "version": self.version,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_seconds": round(time.time() - self._start, 3),
        }
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, default=str))
        return path
