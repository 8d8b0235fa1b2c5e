"""Checkpoint and CSV serialization."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .net import MlpParams


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def checkpoint_text(params: MlpParams) -> str:
    header = "layers: " + " ".join(str(s) for s in params.layer_sizes)
    header += f"; activation: {params.activation}"
    if params.periods is not None:
        header += "; periods: " + " ".join(fmt(p) for p in params.periods)
    lines = [header]
    for w, b in zip(params.weights, params.biases):
        lines.extend(fmt(v) for v in w.ravel())
        lines.extend(fmt(v) for v in b)
    return "\n".join(lines) + "\n"


def save_checkpoint(params: MlpParams, path) -> Path:
    path = Path(path)
    path.write_text(checkpoint_text(params), encoding="utf-8")
    return path


def parse_checkpoint(text: str) -> MlpParams:
    lines = text.strip().splitlines()
    if not lines:
        raise InvalidInputError("empty checkpoint")
    meta = {}
    for part in lines[0].split(";"):
        key, _, val = part.partition(":")
        meta[key.strip()] = val.strip()
    try:
        sizes = [int(s) for s in meta["layers"].split()]
        activation = meta["activation"]
    except (KeyError, ValueError):
        raise InvalidInputError("malformed checkpoint header") from None
    periods = tuple(float(p) for p in meta["periods"].split()) if "periods" in meta else None
    values = np.array([float(v) for v in lines[1:]])
    expected = sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))
    if values.size != expected:
        raise InvalidInputError(f"checkpoint holds {values.size} values, expected {expected}")
    ws, bs, k = [], [], 0
    for i, o in zip(sizes[:-1], sizes[1:]):
        ws.append(values[k:k + o * i].reshape(o, i))
        k += o * i
        bs.append(values[k:k + o])
        k += o
    return MlpParams(ws, bs, activation, periods)


def load_checkpoint(path) -> MlpParams:
    return parse_checkpoint(Path(path).read_text(encoding="utf-8"))
