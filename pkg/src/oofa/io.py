"""File formats: design CSV, reference-row CSV, candidate spec JSON, and the
JSON report envelope.

Design CSV: one run per line, m comma-separated component labels; optional
``# m=<m>`` header. Process-augmented designs append the level codes after
the labels and declare ``# process=<s1>,<s2>,...``. Reference-row files hold
1-based lexicographic indices under an ``m=<m>`` header.
"""
from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .candidates import CandidateSet, Constraint, ProcessFactorSpec, build
from .errors import ValidationError
from .perm import Design, design_from_rows


def read_design(path: str | Path) -> Design:
    """Load a design CSV; accepts reference-row files too (sniffed by header)."""
    text = Path(path).read_text()
    if _looks_like_rows(text):
        m, rows = _parse_rows(text, path)
        return design_from_rows(m, rows)
    return _parse_design(text, path)


def _looks_like_rows(text: str) -> bool:
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        return line.replace(" ", "").startswith("m=")
    return False


def _parse_design(text: str, path) -> Design:
    m = None
    levels: tuple[int, ...] = ()
    runs: list[list[int]] = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("m="):
                m = int(body[2:])
            elif body.startswith("process="):
                levels = tuple(int(x) for x in body[len("process="):].split(","))
            continue
        try:
            runs.append([int(x) for x in line.split(",")])
        except ValueError:
            raise ValidationError(f"{path}:{ln}: malformed CSV line {raw!r}")
    if not runs:
        raise ValidationError(f"{path}: no runs found")
    width = len(runs[0])
    if any(len(r) != width for r in runs):
        raise ValidationError(f"{path}: ragged rows")
    if m is None:
        m = width - len(levels)
    if width != m + len(levels):
        raise ValidationError(
            f"{path}: rows have {width} fields, expected m={m} plus {len(levels)} process columns"
        )
    arr = np.asarray(runs, dtype=np.int64)
    proc = arr[:, m:] if levels else None
    return Design(arr[:, :m], m=m, process=proc, process_levels=levels)


def _parse_rows(text: str, path) -> tuple[int, list[int]]:
    m = None
    rows: list[int] = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.replace(" ", "").startswith("m="):
            m = int(line.split("=", 1)[1])
            continue
        try:
            rows.extend(int(x) for x in line.replace(" ", "").split(",") if x)
        except ValueError:
            raise ValidationError(f"{path}:{ln}: malformed row-index line {raw!r}")
    if m is None:
        raise ValidationError(f"{path}: reference-row file needs an m= header")
    if not rows:
        raise ValidationError(f"{path}: no row indices found")
    return m, rows


def design_text(design: Design) -> str:
    """Canonical CSV text; load/save round-trips byte for byte."""
    lines = [f"# m={design.m}"]
    if design.process_levels:
        lines.append("# process=" + ",".join(str(s) for s in design.process_levels))
    for i in range(design.n_runs):
        fields = [str(int(x)) for x in design.runs[i]]
        if design.process is not None:
            fields += [str(int(x)) for x in design.process[i]]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def write_design(design: Design, path: str | Path) -> None:
    Path(path).write_text(design_text(design))


def load_design_arg(spec: str, m: int | None = None) -> Design:
    """Design from a file path or an inline 1-based row-index list (needs m)."""
    p = Path(spec)
    if p.exists():
        return read_design(p)
    if all(ch.isdigit() or ch in ", " for ch in spec) and any(ch.isdigit() for ch in spec):
        if m is None:
            raise ValidationError("inline row indices need --m")
        rows = [int(x) for x in spec.replace(" ", "").split(",") if x]
        return design_from_rows(m, rows)
    raise ValidationError(f"no such design file: {spec}")


def read_candidate_spec(path: str | Path, base: Design | None = None) -> CandidateSet:
    """Candidate spec JSON: {m, constraints, process, base_design}."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})")
    if "m" not in obj:
        raise ValidationError(f"{path}: candidate spec needs m")
    constraints = tuple(Constraint.parse(c) for c in obj.get("constraints", []))
    process = None
    if obj.get("process") is not None:
        process = ProcessFactorSpec.parse(obj["process"])
    if base is None and obj.get("base_design"):
        base_path = Path(obj["base_design"])
        if not base_path.is_absolute():
            base_path = Path(path).parent / base_path
        base = read_design(base_path)
    return build(int(obj["m"]), constraints=constraints, process=process, base=base)


def sha256_path(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def envelope(
    payload: dict,
    command: Sequence[str] | None = None,
    seed: int | None = None,
    inputs: dict[str, str] | None = None,
) -> dict:
    """Stable report wrapper: version, command echo, seed, input digests."""
    return {
        "tool": "oofa",
        "version": __version__,
        "command": list(command if command is not None else sys.argv),
        "seed": seed,
        "inputs": inputs or {},
        "payload": payload,
    }


def dump_json(obj: dict, path: str | Path | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
