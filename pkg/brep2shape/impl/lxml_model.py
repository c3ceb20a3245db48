"""
Copyright (c) 2026, CodeLV.

Distributed under the terms of the MIT License.

The full license is in the file LICENSE.txt, distributed with this software.

Created on Sep 12, 2026

XML documents: the B-rep interchange format, decomposed primitives, model
configurations and run reports.

"""

from __future__ import annotations

from functools import lru_cache
from typing import Any, Callable, Iterable, Optional, Type, TypeVar

import numpy as np
from atom.api import Atom, Bool, Enum, Float, Int, Member, Str
from lxml import etree
from lxml.etree import Element, SubElement, _Element, tostring

from ..components.boundary import BoundaryErrorReport
from ..components.brep import BrepModel, Edge, Face
from ..components.primitives import (
    DecomposedModel,
    DecomposeSettings,
    EdgePrimitives,
    FacePrimitives,
)
from ..components.quadtree import QuadCell
from ..core.bezier import BezierSegment, BezierTriangle
from ..core.errors import Brep2ShapeError, IntegrityError, ParseError
from ..core.geom import NurbsCurve, NurbsSurface, TrimLoop, dehomogenize
from .files import PathType, atomic_write

#: Interchange and primitives format version
VERSION = "1"

A = TypeVar("A", bound=Atom)


# -----------------------------------------------------------------------------
# Numbers
# -----------------------------------------------------------------------------
def format_numbers(values: Iterable[float]) -> str:
    """Shortest round trip text of every value."""
    return " ".join(repr(float(v)) for v in values)


def format_points(pw: np.ndarray) -> str:
    """Homogeneous points as x y z w, euclidean plus weight."""
    pw = np.asarray(pw, dtype=float).reshape(-1, 4)
    xyz = dehomogenize(pw)
    return format_numbers(np.concatenate([xyz, pw[:, 3:]], axis=1).ravel())


def _path(node: _Element) -> str:
    return node.getroottree().getpath(node)


def parse_numbers(node: _Element, text: Optional[str] = None) -> np.ndarray:
    text = node.text if text is None else text
    try:
        return np.array([float(v) for v in (text or "").split()], dtype=float)
    except ValueError as e:
        raise ParseError(f"Invalid number: {e}", _path(node)) from e


def parse_points(node: _Element, count: Optional[int] = None) -> np.ndarray:
    values = parse_numbers(node)
    if len(values) % 4 or (count is not None and len(values) != 4 * count):
        n = "n" if count is None else count
        raise ParseError(f"Expected {n} x y z w tuples", _path(node))
    xyzw = values.reshape(-1, 4)
    w = xyzw[:, 3:]
    if np.any(~(w > 0)):
        raise ParseError("Weights must be strictly positive", _path(node))
    return np.concatenate([xyzw[:, :3] * w, w], axis=1)


def _int(node: _Element, name: str) -> int:
    value = node.get(name)
    if value is None:
        raise ParseError(f"Missing attribute '{name}'", _path(node))
    try:
        return int(value)
    except ValueError as e:
        raise ParseError(f"Attribute '{name}' is not an integer", _path(node)) from e


def _ints(node: _Element, name: str) -> list[int]:
    try:
        return [int(v) for v in (node.get(name) or "").split()]
    except ValueError as e:
        message = f"Attribute '{name}' is not a list of integers"
        raise ParseError(message, _path(node)) from e


def _check_schema(node: _Element, attrs: Iterable[str], children: Iterable[str] = ()):
    allowed = set(attrs)
    for name in node.attrib:
        if name not in allowed:
            raise ParseError(f"Unknown attribute '{name}'", _path(node))
    tags = set(children)
    for child in node:
        if not isinstance(child.tag, str):
            continue
        if child.tag not in tags:
            raise ParseError(f"Unknown element '{child.tag}'", _path(child))


def _child(node: _Element, tag: str) -> _Element:
    child = node.find(tag)
    if child is None:
        raise ParseError(f"Missing element '{tag}'", _path(node))
    return child


def _build(node: _Element, factory: Callable[[], Any]) -> Any:
    """Run a geometry constructor, reporting its errors at `node`."""
    try:
        return factory()
    except IntegrityError:
        raise
    except Brep2ShapeError as e:
        raise ParseError(str(e), _path(node)) from e


def _parser() -> etree.XMLParser:
    return etree.XMLParser(resolve_entities=False, no_network=True)


def parse_document(data: bytes, root_tag: str) -> _Element:
    try:
        root = etree.fromstring(data, parser=_parser())
    except etree.XMLSyntaxError as e:
        raise ParseError(f"Malformed document: {e}") from e
    if root.tag != root_tag:
        message = f"Expected a <{root_tag}> document, got <{root.tag}>"
        raise ParseError(message, _path(root))
    version = root.get("version")
    if version != VERSION:
        raise ParseError(f"Unsupported or missing version '{version}'", _path(root))
    return root


def read_file(path: PathType) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e.strerror}") from e


def to_bytes(root: _Element) -> bytes:
    return tostring(root, pretty_print=True, xml_declaration=True, encoding="utf-8")


# -----------------------------------------------------------------------------
# Curves and surfaces
# -----------------------------------------------------------------------------
def curve_element(tag: str, curve: NurbsCurve, **attrs: str) -> _Element:
    node = Element(tag, degree=str(curve.degree), **attrs)
    SubElement(node, "knots").text = format_numbers(curve.knots)
    SubElement(node, "points").text = format_points(curve.control_points)
    return node


def parse_curve(node: _Element, extra_attrs: Iterable[str] = ()) -> NurbsCurve:
    _check_schema(node, ["degree", *extra_attrs], ["knots", "points"])
    degree = _int(node, "degree")
    knots = parse_numbers(_child(node, "knots"))
    points = parse_points(_child(node, "points"))
    return _build(node, lambda: NurbsCurve(degree, knots, points))


def face_element(face: Face) -> _Element:
    s = face.surface
    node = Element(
        "face", id=str(face.id), degree_u=str(s.degree_u), degree_v=str(s.degree_v)
    )
    SubElement(node, "knots-u").text = format_numbers(s.knots_u.knots)
    SubElement(node, "knots-v").text = format_numbers(s.knots_v.knots)
    nu, nv = s.control_net.shape[:2]
    net = SubElement(node, "net", rows=str(nu), cols=str(nv))
    net.text = format_points(s.control_net)
    for loop in s.trim_loops:
        loop_node = SubElement(node, "loop", orientation=loop.orientation)
        for pcurve in loop.pcurves:
            loop_node.append(curve_element("pcurve", pcurve))
    return node


def parse_face(node: _Element) -> Face:
    _check_schema(
        node, ["id", "degree_u", "degree_v"], ["knots-u", "knots-v", "net", "loop"]
    )
    fid = _int(node, "id")
    p, q = _int(node, "degree_u"), _int(node, "degree_v")
    ku = parse_numbers(_child(node, "knots-u"))
    kv = parse_numbers(_child(node, "knots-v"))
    net_node = _child(node, "net")
    _check_schema(net_node, ["rows", "cols"])
    rows, cols = _int(net_node, "rows"), _int(net_node, "cols")
    net = parse_points(net_node, rows * cols).reshape(rows, cols, 4)
    loops = []
    for loop_node in node.iterfind("loop"):
        _check_schema(loop_node, ["orientation"], ["pcurve"])
        orientation = loop_node.get("orientation", "outer")
        if orientation not in ("outer", "inner"):
            raise ParseError(
                f"Invalid loop orientation '{orientation}'", _path(loop_node)
            )
        pcurves = [parse_curve(c) for c in loop_node.iterfind("pcurve")]
        if not pcurves:
            raise ParseError("Empty trim loop", _path(loop_node))
        loops.append(TrimLoop(pcurves=pcurves, orientation=orientation))
    surface = _build(node, lambda: NurbsSurface(p, q, ku, kv, net, loops))
    return Face(id=fid, surface=surface)


# -----------------------------------------------------------------------------
# Interchange documents
# -----------------------------------------------------------------------------
def model_to_xml(model: BrepModel) -> _Element:
    root = Element("brep", version=VERSION)
    if model.label >= 0:
        root.set("label", str(model.label))
    if model.name:
        root.set("name", model.name)
    for face in sorted(model.faces, key=lambda f: f.id):
        root.append(face_element(face))
    for edge in sorted(model.edges, key=lambda e: e.id):
        faces = " ".join(str(f) for f in edge.bounds_faces)
        node = curve_element("edge", edge.curve, id=str(edge.id), bounds_faces=faces)
        root.append(node)
    return root


def model_from_xml(root: _Element) -> BrepModel:
    _check_schema(root, ["version", "label", "name"], ["face", "edge"])
    label = _int(root, "label") if root.get("label") is not None else -1
    faces = [parse_face(node) for node in root.iterfind("face")]
    edges = []
    for node in root.iterfind("edge"):
        curve = parse_curve(node, ["id", "bounds_faces"])
        faces_of = tuple(_ints(node, "bounds_faces"))
        edges.append(Edge(id=_int(node, "id"), curve=curve, bounds_faces=faces_of))
    faces.sort(key=lambda f: f.id)
    edges.sort(key=lambda e: e.id)
    model = BrepModel(faces=faces, edges=edges, label=label, name=root.get("name", ""))
    return model.validate()


def write_model(model: BrepModel, path: PathType):
    atomic_write(path, to_bytes(model_to_xml(model)))


def read_model(path: PathType) -> BrepModel:
    """Read an interchange document, validating the model."""
    return model_from_xml(parse_document(read_file(path), "brep"))


# -----------------------------------------------------------------------------
# Configuration
# -----------------------------------------------------------------------------
@lru_cache(1024)
def get_fields(cls: Type[Atom]) -> tuple[Member, ...]:
    """Members tagged with config=True, the ones persisted in documents."""
    return tuple(
        member
        for member in cls.members().values()
        if (member.metadata or {}).get("config", False)
    )


def _attr_name(member: Member) -> str:
    return member.name.replace("_", "-")


def config_to_xml(obj: Atom, tag: str) -> _Element:
    node = Element(tag)
    for member in get_fields(type(obj)):
        value = getattr(obj, member.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        node.set(_attr_name(member), text)
    return node


def _coerce(member: Member, text: str, node: _Element) -> Any:
    try:
        if isinstance(member, Bool):
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if isinstance(member, Int):
            return int(text)
        if isinstance(member, Float):
            return float(text)
        if isinstance(member, (Enum, Str)):
            return text
    except ValueError as e:
        message = f"Invalid value '{text}' for '{member.name}'"
        raise ParseError(message, _path(node)) from e
    raise ParseError(f"Unsupported config member '{member.name}'", _path(node))


def config_from_xml(cls: Type[A], node: _Element) -> A:
    """Build `cls` from the attributes of `node`; unknown attributes are rejected."""
    fields = {_attr_name(m): m for m in get_fields(cls)}
    _check_schema(node, fields)
    kwargs = {
        m.name: _coerce(m, node.get(name), node)
        for name, m in fields.items()
        if name in node.attrib
    }
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ParseError(f"Invalid configuration: {e}", _path(node)) from e


def config_to_string(obj: Atom, tag: str) -> bytes:
    return tostring(config_to_xml(obj, tag), encoding="utf-8")


def config_from_string(cls: Type[A], data: bytes, tag: str) -> A:
    try:
        node = etree.fromstring(data, parser=_parser())
    except etree.XMLSyntaxError as e:
        raise ParseError(f"Malformed configuration: {e}") from e
    if node.tag != tag:
        raise ParseError(f"Expected <{tag}>, got <{node.tag}>", _path(node))
    return config_from_xml(cls, node)


def read_config(cls: Type[A], path: PathType, tag: str) -> A:
    return config_from_string(cls, read_file(path), tag)


# -----------------------------------------------------------------------------
# Primitives documents
# -----------------------------------------------------------------------------
def _cell_text(cell) -> str:
    (u0, u1), (v0, v1) = cell
    return format_numbers((u0, u1, v0, v1))


def _parse_cell(node: _Element, name: str = "cell"):
    values = parse_numbers(node, node.get(name))
    if len(values) != 4:
        raise ParseError(f"Attribute '{name}' needs 4 numbers", _path(node))
    return (values[0], values[1]), (values[2], values[3])


def primitives_to_xml(decomposed: DecomposedModel) -> _Element:
    root = Element("primitives", version=VERSION)
    root.append(config_to_xml(decomposed.settings, "settings"))
    for fp in decomposed.faces:
        face = SubElement(root, "face", id=str(fp.entity))
        for tri in fp.triangles:
            node = SubElement(
                face,
                "triangle",
                degree=str(tri.degree),
                half=tri.half,
                cell=_cell_text(tri.cell),
            )
            node.text = format_points(tri.control_points)
        for c in fp.cells:
            SubElement(
                face,
                "cell",
                root=f"{c.root[0]} {c.root[1]}",
                depth=str(c.depth),
                i=str(c.i),
                j=str(c.j),
                bounds=_cell_text(c.bounds),
                classification=c.classification,
                min_ratio=repr(c.min_ratio),
                converged="true" if c.converged else "false",
            )
        r = fp.report
        report = SubElement(
            face,
            "report",
            h=repr(r.h),
            length=repr(r.length),
            rmse=repr(r.rmse),
            unconverged=str(r.unconverged),
        )
        SubElement(report, "ratios").text = format_numbers(r.ratios)
        SubElement(report, "curvatures").text = format_numbers(r.curvatures)
    for ep in decomposed.edges:
        edge = SubElement(root, "edge", id=str(ep.entity))
        for seg in ep.segments:
            span = format_numbers(seg.span)
            node = SubElement(edge, "segment", degree=str(seg.degree), span=span)
            node.text = format_points(seg.control_points)
    return root


CELL_ATTRS = (
    "root",
    "depth",
    "i",
    "j",
    "bounds",
    "classification",
    "min_ratio",
    "converged",
)


def _float_attr(node: _Element, name: str) -> float:
    try:
        return float(node.get(name, ""))
    except ValueError as e:
        raise ParseError(f"Attribute '{name}' is not a number", _path(node)) from e


def _parse_face_primitives(node: _Element) -> FacePrimitives:
    _check_schema(node, ["id"], ["triangle", "cell", "report"])
    fid = _int(node, "id")
    triangles = []
    for t in node.iterfind("triangle"):
        _check_schema(t, ["degree", "half", "cell"])
        d = _int(t, "degree")
        pw = parse_points(t, (d + 1) * (d + 2) // 2)
        half = t.get("half", "lower")
        cell = _parse_cell(t)
        tri = _build(t, lambda: BezierTriangle(pw, entity=fid, cell=cell, half=half))
        triangles.append(tri)
    cells = []
    for c in node.iterfind("cell"):
        _check_schema(c, CELL_ATTRS)
        root = _ints(c, "root")
        if len(root) != 2:
            raise ParseError("Attribute 'root' needs 2 integers", _path(c))
        cells.append(
            _build(
                c,
                lambda: QuadCell(
                    root=tuple(root),
                    depth=_int(c, "depth"),
                    i=_int(c, "i"),
                    j=_int(c, "j"),
                    bounds=_parse_cell(c, "bounds"),
                    classification=c.get("classification", "interior"),
                    min_ratio=_float_attr(c, "min_ratio"),
                    converged=c.get("converged") != "false",
                ),
            )
        )
    r = node.find("report")
    report = BoundaryErrorReport()
    if r is not None:
        _check_schema(
            r, ["h", "length", "rmse", "unconverged"], ["ratios", "curvatures"]
        )
        report = BoundaryErrorReport(
            h=_float_attr(r, "h"),
            length=_float_attr(r, "length"),
            rmse=_float_attr(r, "rmse"),
            unconverged=_int(r, "unconverged"),
            ratios=parse_numbers(_child(r, "ratios")),
            curvatures=parse_numbers(_child(r, "curvatures")),
        )
    return FacePrimitives(entity=fid, triangles=triangles, cells=cells, report=report)


def _parse_edge_primitives(node: _Element) -> EdgePrimitives:
    _check_schema(node, ["id"], ["segment"])
    eid = _int(node, "id")
    segments = []
    for s in node.iterfind("segment"):
        _check_schema(s, ["degree", "span"])
        pw = parse_points(s, _int(s, "degree") + 1)
        span = parse_numbers(s, s.get("span"))
        if len(span) != 2:
            raise ParseError("Attribute 'span' needs 2 numbers", _path(s))
        seg = _build(s, lambda: BezierSegment(pw, entity=eid, span=tuple(span)))
        segments.append(seg)
    return EdgePrimitives(entity=eid, segments=segments)


def primitives_from_xml(root: _Element) -> DecomposedModel:
    _check_schema(root, ["version"], ["settings", "face", "edge"])
    settings = config_from_xml(DecomposeSettings, _child(root, "settings"))
    faces = [_parse_face_primitives(n) for n in root.iterfind("face")]
    edges = [_parse_edge_primitives(n) for n in root.iterfind("edge")]
    faces.sort(key=lambda f: f.entity)
    edges.sort(key=lambda e: e.entity)
    return DecomposedModel(faces=faces, edges=edges, settings=settings)


def write_primitives(decomposed: DecomposedModel, path: PathType):
    atomic_write(path, to_bytes(primitives_to_xml(decomposed)))


def read_primitives(path: PathType) -> DecomposedModel:
    return primitives_from_xml(parse_document(read_file(path), "primitives"))


# -----------------------------------------------------------------------------
# Run reports
# -----------------------------------------------------------------------------
def _value_text(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_to_xml(report) -> _Element:
    """Serialize a run report: command, inputs, config echo, metrics, errors."""
    root = Element(
        "report", version=VERSION, command=report.command, status=str(report.exit_code)
    )
    if report.timed:
        root.set("wall-time", repr(report.wall_time))
    inputs = SubElement(root, "inputs")
    for path, sha in report.inputs.items():
        SubElement(inputs, "input", path=str(path), sha256=sha)
    config = SubElement(root, "config")
    for key, value in report.config.items():
        SubElement(config, "option", name=key, value=_value_text(value))
    metrics = SubElement(root, "metrics")
    for key, value in report.metrics.items():
        SubElement(metrics, "metric", name=key, value=_value_text(value))
    errors = SubElement(root, "errors")
    for kind, message in report.errors:
        SubElement(errors, "error", kind=kind).text = message
    return root


def write_report(report, path: PathType):
    atomic_write(path, to_bytes(report_to_xml(report)))
