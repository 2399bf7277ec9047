"""Optional ingestion of public network datasets into the graph format.

Two sources are supported, both producing ordinary graph files so the
rest of the pipeline never depends on third-party formats:

* TSPLIB EUC_2D instances: city coordinates are triangulated (Delaunay)
  and the triangulation edges become the network, with Euclidean
  lengths.  Exactly duplicated coordinate pairs are collapsed to one
  vertex before triangulating.
* Topology Zoo GraphML: nodes with Latitude/Longitude attributes; edge
  lengths are great-circle distances (unit sphere scaled to km), with
  parallel edges collapsed and coordinate-free nodes given unit length
  on their edges.

Lengths are normalized by the Graph constructor so the longest edge has
length 1.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

import numpy as np

from .errors import GraphFormatError
from .graphs import Graph


def parse_tsplib_coords(text: str) -> np.ndarray:
    """Coordinates of an EUC_2D TSPLIB instance."""
    coords = []
    in_section = False
    weight_type = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("EDGE_WEIGHT_TYPE"):
            weight_type = upper.split(":")[-1].strip()
        if upper.startswith("NODE_COORD_SECTION"):
            in_section = True
            continue
        if upper == "EOF":
            break
        if in_section:
            parts = line.split()
            if len(parts) < 3:
                raise GraphFormatError(f"bad coordinate line: {line!r}")
            coords.append((float(parts[1]), float(parts[2])))
    if weight_type not in (None, "EUC_2D"):
        raise GraphFormatError(f"unsupported edge weight type {weight_type}")
    if not coords:
        raise GraphFormatError("no NODE_COORD_SECTION found")
    return np.array(coords)


def delaunay_graph(coords: np.ndarray, designation=None) -> Graph:
    """Graph whose edges are the Delaunay triangulation of the points."""
    from scipy.spatial import Delaunay

    coords = np.asarray(coords, dtype=float)
    unique = np.unique(coords, axis=0)
    tri = Delaunay(unique)
    edge_set = set()
    for simplex in tri.simplices:
        for a in range(3):
            u, v = int(simplex[a]), int(simplex[(a + 1) % 3])
            if u != v:
                edge_set.add((min(u, v), max(u, v)))
    edges = sorted(edge_set)
    lengths = [float(np.hypot(*(unique[u] - unique[v]))) for u, v in edges]
    return Graph(len(unique), edges, np.array(lengths), designation)


def tsplib_graph(text: str, designation=None) -> Graph:
    return delaunay_graph(parse_tsplib_coords(text), designation)


def _great_circle_km(lat1, lon1, lat2, lon2) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + \
        math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 6371.0 * 2 * math.asin(min(1.0, math.sqrt(a)))


def graphml_graph(text: str, designation=None) -> Graph:
    """Graph from a Topology Zoo GraphML document."""
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise GraphFormatError(f"bad GraphML: {exc}") from exc
    lat_key = lon_key = None
    for key in root.findall("g:key", ns):
        if key.get("for") == "node":
            if key.get("attr.name") == "Latitude":
                lat_key = key.get("id")
            elif key.get("attr.name") == "Longitude":
                lon_key = key.get("id")
    graph_el = root.find("g:graph", ns)
    if graph_el is None:
        raise GraphFormatError("GraphML document has no graph element")
    index = {}
    coords = {}
    for node in graph_el.findall("g:node", ns):
        nid = node.get("id")
        index[nid] = len(index)
        lat = lon = None
        for data in node.findall("g:data", ns):
            if data.get("key") == lat_key:
                lat = float(data.text)
            elif data.get("key") == lon_key:
                lon = float(data.text)
        if lat is not None and lon is not None:
            coords[nid] = (lat, lon)
    edge_set = {}
    for edge in graph_el.findall("g:edge", ns):
        su, sv = edge.get("source"), edge.get("target")
        u, v = index[su], index[sv]
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in edge_set:
            continue
        if su in coords and sv in coords:
            length = _great_circle_km(*coords[su], *coords[sv])
            if length <= 0.0:
                length = 1.0
        else:
            length = 1.0
        edge_set[key] = length
    edges = sorted(edge_set)
    lengths = [edge_set[e] for e in edges]
    if not edges:
        raise GraphFormatError("GraphML document has no usable edges")
    return Graph(len(index), edges, np.array(lengths), designation)
