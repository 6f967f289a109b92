"""Minimal ASCII DXF reader/writer for rectilinear floor plans.

Supports LINE, LWPOLYLINE and the layer table. Anything else is counted and
skipped. The writer emits the same subset so parse -> serialize -> parse is a
fixpoint on supported entities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import MalformedDxf, UnsupportedVersion

_BINARY_SENTINEL = b"AutoCAD Binary DXF"


@dataclass
class DxfEntity:
    kind: str                       # "LINE" or "LWPOLYLINE"
    layer: str
    points: List[Tuple[float, float]]
    closed: bool = False
    handle: int = 0                 # ordinal within the file, used in error reports


@dataclass
class DxfDocument:
    entities: List[DxfEntity] = field(default_factory=list)
    layers: List[str] = field(default_factory=list)
    skipped: Dict[str, int] = field(default_factory=dict)


def _pairs(text: str):
    """Yield (code, value) group pairs; raise MalformedDxf on broken structure."""
    lines = text.splitlines()
    # trailing blank lines are tolerated
    while lines and lines[-1].strip() == "":
        lines.pop()
    if len(lines) % 2 != 0:
        raise MalformedDxf("odd number of lines; truncated group pair")
    for i in range(0, len(lines), 2):
        code_str = lines[i].strip()
        try:
            code = int(code_str)
        except ValueError:
            raise MalformedDxf(f"line {i + 1}: group code {code_str!r} is not an integer")
        yield code, lines[i + 1].strip()


def parse_dxf(data: bytes) -> DxfDocument:
    """Parse ASCII DXF bytes into a DxfDocument.

    Raises MalformedDxf for structural damage and UnsupportedVersion for
    binary DXF input.
    """
    if data[:22].startswith(_BINARY_SENTINEL):
        raise UnsupportedVersion("binary DXF is not supported")
    try:
        text = data.decode("ascii", errors="strict")
    except UnicodeDecodeError:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedDxf("input is neither ASCII nor UTF-8 text")

    doc = DxfDocument()
    pairs = list(_pairs(text))
    if not pairs:
        raise MalformedDxf("empty input")
    if pairs[-1] != (0, "EOF"):
        raise MalformedDxf("missing EOF marker")

    section: Optional[str] = None
    in_layer_table = False
    i = 0
    n = len(pairs)
    handle = 0
    while i < n:
        code, value = pairs[i]
        if code == 0 and value == "SECTION":
            if i + 1 < n and pairs[i + 1][0] == 2:
                section = pairs[i + 1][1]
                i += 2
                continue
            raise MalformedDxf("SECTION without name")
        if code == 0 and value == "ENDSEC":
            section = None
            in_layer_table = False
            i += 1
            continue
        if section == "TABLES":
            if code == 0 and value == "TABLE":
                if i + 1 < n and pairs[i + 1] == (2, "LAYER"):
                    in_layer_table = True
                    i += 2
                    continue
                in_layer_table = False
            elif code == 0 and value == "ENDTAB":
                in_layer_table = False
            elif in_layer_table and code == 0 and value == "LAYER":
                # layer name is the following group 2
                j = i + 1
                while j < n and pairs[j][0] != 0:
                    if pairs[j][0] == 2:
                        doc.layers.append(pairs[j][1])
                        break
                    j += 1
            i += 1
            continue
        if section == "ENTITIES" and code == 0 and value not in ("ENDSEC",):
            entity, i = _parse_entity(pairs, i, handle)
            if entity is None:
                kind = value
                doc.skipped[kind] = doc.skipped.get(kind, 0) + 1
            else:
                doc.entities.append(entity)
                handle += 1
            continue
        i += 1

    # layers referenced by entities but absent from the table still count
    for e in doc.entities:
        if e.layer not in doc.layers:
            doc.layers.append(e.layer)
    return doc


def _parse_entity(pairs, i: int, handle: int):
    """Parse one entity starting at pairs[i] == (0, kind). Returns (entity|None, next_i)."""
    kind = pairs[i][1]
    fields: List[Tuple[int, str]] = []
    j = i + 1
    while j < len(pairs) and pairs[j][0] != 0:
        fields.append(pairs[j])
        j += 1
    if kind not in ("LINE", "LWPOLYLINE"):
        return None, j

    layer = "0"
    for code, value in fields:
        if code == 8:
            layer = value

    def _floats(code: int) -> List[float]:
        out = []
        for c, v in fields:
            if c == code:
                try:
                    out.append(float(v))
                except ValueError:
                    raise MalformedDxf(f"non-numeric value {v!r} for group {code}")
        return out

    if kind == "LINE":
        xs, ys = _floats(10), _floats(20)
        xe, ye = _floats(11), _floats(21)
        if not (xs and ys and xe and ye):
            raise MalformedDxf(f"LINE #{handle} missing endpoint groups")
        pts = [(xs[0], ys[0]), (xe[0], ye[0])]
        return DxfEntity("LINE", layer, pts, False, handle), j

    # LWPOLYLINE
    xs, ys = _floats(10), _floats(20)
    if len(xs) != len(ys) or len(xs) < 2:
        raise MalformedDxf(f"LWPOLYLINE #{handle} has unpaired or missing vertices")
    closed = False
    for code, value in fields:
        if code == 70:
            try:
                closed = bool(int(value) & 1)
            except ValueError:
                raise MalformedDxf(f"bad flags value {value!r}")
    return DxfEntity("LWPOLYLINE", layer, list(zip(xs, ys)), closed, handle), j


def _fmt(v: float) -> str:
    """Format a coordinate without float noise (integers stay integral)."""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def serialize_dxf(doc: DxfDocument) -> bytes:
    """Emit the supported subset back as ASCII DXF."""
    out: List[str] = []

    def put(code: int, value: str):
        out.append(str(code))
        out.append(value)

    put(0, "SECTION")
    put(2, "TABLES")
    put(0, "TABLE")
    put(2, "LAYER")
    for name in doc.layers:
        put(0, "LAYER")
        put(2, name)
        put(70, "0")
    put(0, "ENDTAB")
    put(0, "ENDSEC")

    put(0, "SECTION")
    put(2, "ENTITIES")
    for e in doc.entities:
        if e.kind == "LINE":
            put(0, "LINE")
            put(8, e.layer)
            put(10, _fmt(e.points[0][0]))
            put(20, _fmt(e.points[0][1]))
            put(11, _fmt(e.points[1][0]))
            put(21, _fmt(e.points[1][1]))
        elif e.kind == "LWPOLYLINE":
            put(0, "LWPOLYLINE")
            put(8, e.layer)
            put(90, str(len(e.points)))
            put(70, "1" if e.closed else "0")
            for x, y in e.points:
                put(10, _fmt(x))
                put(20, _fmt(y))
    put(0, "ENDSEC")
    put(0, "EOF")
    return ("\n".join(out) + "\n").encode("ascii")
