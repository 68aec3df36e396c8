"""Point-cloud (xyz / ply / csv) and model (json) serialization."""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyCloud,
    MalformedHeader,
    SchemaViolation,
    UnsupportedPlyEncoding,
)
from .geometry import Bend, SuperquadricModel, Taper


@dataclass
class LoadReport:
    n_points: int
    n_rejected: int  # non-finite rows dropped at ingestion


_PLY_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4,
    "double": 8, "float64": 8,
}
_PLY_STRUCT = {"float": "f", "float32": "f", "double": "d", "float64": "d"}


def _detect_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".ply":
        return "ply"
    if suffix == ".csv":
        return "csv"
    return "xyz"


def read_cloud(path, fmt: str = "auto") -> tuple[np.ndarray, LoadReport]:
    """Load an (M, 3) float64 cloud; non-finite rows are dropped and counted."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if fmt == "auto":
        fmt = _detect_format(path)
    if fmt == "xyz":
        rows = _read_xyz(path)
    elif fmt == "csv":
        rows = _read_csv(path)
    elif fmt == "ply":
        rows = _read_ply(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    pts = np.asarray(rows, dtype=float).reshape(-1, 3)
    finite = np.all(np.isfinite(pts), axis=1)
    report = LoadReport(n_points=int(finite.sum()), n_rejected=int((~finite).sum()))
    if report.n_points == 0:
        raise EmptyCloud(f"no finite points in {path}")
    return pts[finite], report


def _read_xyz(path: Path) -> list:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise MalformedHeader(f"xyz line with fewer than 3 columns: {line!r}")
            rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
    return rows


def _read_csv(path: Path) -> list:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            try:
                rows.append([float(record[0]), float(record[1]), float(record[2])])
            except (ValueError, IndexError):
                if rows:
                    raise MalformedHeader(f"unparseable csv row: {record!r}")
                # header row: skip
    return rows


def _read_ply(path: Path) -> list:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MalformedHeader("missing 'ply' magic line")
        encoding = None
        elements = []  # (name, count, [(type, prop_name), ...])
        while True:
            line = fh.readline()
            if not line:
                raise MalformedHeader("unterminated ply header")
            tokens = line.decode("ascii", "replace").split()
            if not tokens or tokens[0] == "comment":
                continue
            if tokens[0] == "format":
                encoding = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if not elements:
                    raise MalformedHeader("property before any element")
                if tokens[1] == "list":
                    elements[-1][2].append(("list", tokens[-1]))
                else:
                    elements[-1][2].append((tokens[1], tokens[2]))
            elif tokens[0] == "end_header":
                break
        if encoding == "binary_big_endian":
            raise UnsupportedPlyEncoding("big-endian ply is not supported")
        if encoding not in ("ascii", "binary_little_endian"):
            raise MalformedHeader(f"unknown ply format {encoding!r}")

        rows = []
        for name, count, props in elements:
            is_vertex = name == "vertex"
            if is_vertex:
                names = [p[1] for p in props]
                try:
                    xyz_idx = [names.index(c) for c in ("x", "y", "z")]
                except ValueError:
                    raise MalformedHeader("vertex element lacks x/y/z properties")
            if any(p[0] == "list" for p in props):
                if is_vertex:
                    raise MalformedHeader("list properties in vertex element unsupported")
                break  # cannot skip variable-length data; vertices already read
            if encoding == "ascii":
                for _ in range(count):
                    vals = fh.readline().split()
                    if is_vertex:
                        rows.append([float(vals[i]) for i in xyz_idx])
            else:
                fmt = "<" + "".join(
                    _PLY_STRUCT.get(t, str(_PLY_SIZES[t]) + "x") for t, _ in props
                )
                rec = struct.Struct(fmt)
                data = fh.read(rec.size * count)
                if len(data) < rec.size * count:
                    raise MalformedHeader("truncated ply body")
                if is_vertex:
                    numeric = [i for i, (t, _) in enumerate(props) if t in _PLY_STRUCT]
                    for vals in rec.iter_unpack(data):
                        row = dict(zip(numeric, vals))
                        rows.append([row[i] for i in xyz_idx])
            if is_vertex:
                break  # anything after the vertex element is irrelevant
        if not rows and not any(e[0] == "vertex" for e in elements):
            raise MalformedHeader("no vertex element")
    return rows


def write_cloud(path, points, fmt: str = "auto") -> None:
    path = Path(path)
    if path.is_dir():
        raise OSError(f"{path} is a directory")
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if fmt == "auto":
        fmt = _detect_format(path)
    if fmt == "xyz":
        with open(path, "w", encoding="utf-8") as fh:
            for x, y, z in pts:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y,z\n")
            for x, y, z in pts:
                fh.write(f"{x:.17g},{y:.17g},{z:.17g}\n")
    elif fmt == "ply":
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {len(pts)}\n"
            "property double x\nproperty double y\nproperty double z\n"
            "end_header\n"
        )
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(np.ascontiguousarray(pts, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def model_to_dict(model: SuperquadricModel) -> dict:
    d = model.deformation
    if d is None:
        deformation = {"type": "none"}
    elif isinstance(d, Taper):
        deformation = {"type": "taper", "kx": d.kx, "ky": d.ky}
    else:
        deformation = {"type": "bend", "kappa": d.kappa, "alpha": d.alpha}
    return {
        "eps": [model.eps1, model.eps2],
        "size": list(model.size),
        "euler": list(model.rotation),
        "translation": list(model.translation),
        "deformation": deformation,
    }


def _require(obj: dict, key: str, length: int | None = None):
    if key not in obj:
        raise SchemaViolation(key, "missing field")
    value = obj[key]
    if length is not None:
        if not isinstance(value, (list, tuple)) or len(value) != length:
            raise SchemaViolation(key, f"expected a list of {length} numbers")
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise SchemaViolation(key, "non-numeric entry")
    return value


def model_from_dict(data: dict) -> SuperquadricModel:
    eps = _require(data, "eps", 2)
    size = _require(data, "size", 3)
    euler = _require(data, "euler", 3)
    translation = _require(data, "translation", 3)
    dd = _require(data, "deformation")
    if not isinstance(dd, dict) or "type" not in dd:
        raise SchemaViolation("deformation", "expected an object with a 'type'")
    kind = dd["type"]
    if kind == "none":
        deformation = None
    elif kind == "taper":
        deformation = Taper(
            kx=float(_require(dd, "kx")), ky=float(_require(dd, "ky"))
        )
    elif kind == "bend":
        deformation = Bend(
            kappa=float(_require(dd, "kappa")), alpha=float(_require(dd, "alpha"))
        )
    else:
        raise SchemaViolation("deformation.type", f"unknown deformation {kind!r}")
    return SuperquadricModel(
        eps1=eps[0],
        eps2=eps[1],
        size=tuple(size),
        rotation=tuple(euler),
        translation=tuple(translation),
        deformation=deformation,
    )


def read_model(path) -> SuperquadricModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def write_model(path, model: SuperquadricModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, indent=1)
        fh.write("\n")
