"""Table serialization (CSV/JSON) and run manifests.

Numbers are written in shortest round-trip form (``repr`` for floats), so a
table re-read from disk compares equal to the one written and identical
inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

SCHEMA_VERSION = 1


def format_number(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if hasattr(x, "item"):  # numpy scalar
        return format_number(x.item())
    return repr(float(x))


def parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


@dataclass
class Table:
    """Rows of numbers under named columns, plus optional footer records."""

    columns: list
    rows: list
    footer: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (
            isinstance(other, Table)
            and list(self.columns) == list(other.columns)
            and [tuple(r) for r in self.rows] == [tuple(r) for r in other.rows]
            and self.footer == other.footer
        )


def table_to_csv(table: Table) -> bytes:
    lines = [",".join(table.columns)]
    lines += [",".join(format_number(v) for v in row) for row in table.rows]
    lines += [f"# {key},{format_number(val)}" for key, val in table.footer.items()]
    return ("\n".join(lines) + "\n").encode("utf-8")


def table_from_csv(data: bytes | str) -> Table:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = [ln for ln in text.split("\n") if ln]
    columns = lines[0].split(",")
    rows, footer = [], {}
    for ln in lines[1:]:
        if ln.startswith("# "):
            key, _, val = ln[2:].partition(",")
            footer[key] = parse_number(val)
        else:
            rows.append(tuple(parse_number(v) for v in ln.split(",")))
    return Table(columns, rows, footer)


def table_to_json(table: Table, manifest: dict | None = None) -> bytes:
    doc = {
        "manifest": manifest or {},
        "schema_version": SCHEMA_VERSION,
        "columns": list(table.columns),
        "rows": [dict(zip(table.columns, _plain(row))) for row in table.rows],
    }
    if table.footer:
        doc["footer"] = {k: _plain([v])[0] for k, v in table.footer.items()}
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")


def table_from_json(data: bytes | str) -> Table:
    doc = json.loads(data)
    columns = doc["columns"]
    rows = [tuple(r[c] for c in columns) for r in doc["rows"]]
    return Table(columns, rows, dict(doc.get("footer", {})))


def _plain(values):
    return [v.item() if hasattr(v, "item") else v for v in values]


def dump_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode("utf-8")


def atomic_write(path, data: bytes) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    return digest(Path(path).read_bytes())


@dataclass
class RunManifest:
    """Provenance for one CLI invocation.

    ``outputs`` maps each data file to its sha256.  The timestamp lives only
    here, never inside a data file.
    """

    command: list
    params: dict
    seed: int | None
    version: str
    timestamp: str = ""
    outputs: dict = field(default_factory=dict)

    def core(self) -> dict:
        """The deterministic part, safe to embed in data files."""
        return {"command": self.command, "params": self.params, "seed": self.seed, "version": self.version}

    def to_json(self) -> bytes:
        return dump_json(asdict(self))

    @classmethod
    def from_json(cls, data: bytes | str) -> "RunManifest":
        return cls(**json.loads(data))

    def write(self, path) -> None:
        self.timestamp = datetime.now(timezone.utc).isoformat()
        atomic_write(path, self.to_json())


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")
