"""JSON instance schema shared by the library and every CLI command.

Layout::

    {"substrate": {...}, "requests": [...]}

Maps keyed by edges or resources are stored as triple lists
(``[[u, v, value], ...]``) since JSON keys must be strings.  Serialization
is deterministic: fixed key order, sorted collections.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any, Mapping

from .model import (
    ConvexDecomposition,
    DecompositionEntry,
    Edge,
    Instance,
    Request,
    SubstrateNetwork,
    ValidMapping,
)


class InstanceFormatError(ValueError):
    """Schema violation; the message names the offending key."""


def _get(obj: Mapping, key: str, kind, path: str):
    if not isinstance(obj, Mapping):
        raise InstanceFormatError(f"{path}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"{path}.{key}: missing")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InstanceFormatError(f"{path}.{key}: expected a number")
        return float(value)
    if not isinstance(value, kind):
        raise InstanceFormatError(f"{path}.{key}: expected {kind.__name__}")
    return value


def _edge(item, path: str) -> Edge:
    if not isinstance(item, (list, tuple)) or len(item) != 2 or not all(
            isinstance(x, str) for x in item):
        raise InstanceFormatError(f"{path}: expected a [tail, head] pair")
    return (item[0], item[1])


def _triples(items, path: str) -> dict:
    out = {}
    if not isinstance(items, list):
        raise InstanceFormatError(f"{path}: expected a list of triples")
    for k, item in enumerate(items):
        if not isinstance(item, list) or len(item) != 3:
            raise InstanceFormatError(f"{path}[{k}]: expected [a, b, value]")
        a, b, value = item
        if not isinstance(a, str) or not isinstance(b, str):
            raise InstanceFormatError(f"{path}[{k}]: keys must be strings")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InstanceFormatError(f"{path}[{k}]: value must be a number")
        out[(a, b)] = float(value)
    return out


# ---------------------------------------------------------------------------
# substrate


def substrate_to_obj(s: SubstrateNetwork) -> dict:
    return {
        "name": s.name,
        "nodes": list(s.nodes),
        "edges": [list(e) for e in s.edges],
        "types": sorted(s.types),
        "supported_types": {u: sorted(ts) for u, ts in sorted(s.supported_types.items())},
        "capacity_node": [[t, u, s.capacity_node[(t, u)]]
                          for (t, u) in sorted(s.capacity_node)],
        "capacity_edge": [[u, v, s.capacity_edge[(u, v)]]
                          for (u, v) in sorted(s.capacity_edge)],
        "cost_node": [[t, u, s.cost_node[(t, u)]] for (t, u) in sorted(s.cost_node)],
        "cost_edge": [[u, v, s.cost_edge[(u, v)]] for (u, v) in sorted(s.cost_edge)],
        "coordinates": {u: list(xy) for u, xy in sorted(s.coordinates.items())},
    }


def substrate_from_obj(obj: Mapping, path: str = "substrate") -> SubstrateNetwork:
    nodes = _get(obj, "nodes", list, path)
    edges = [_edge(e, f"{path}.edges[{k}]")
             for k, e in enumerate(_get(obj, "edges", list, path))]
    types = _get(obj, "types", list, path)
    supported_raw = _get(obj, "supported_types", dict, path)
    supported = {}
    for u, ts in supported_raw.items():
        if not isinstance(ts, list):
            raise InstanceFormatError(f"{path}.supported_types.{u}: expected a list")
        supported[u] = frozenset(ts)
    coordinates = {}
    for u, xy in obj.get("coordinates", {}).items():
        if not isinstance(xy, list) or len(xy) != 2:
            raise InstanceFormatError(f"{path}.coordinates.{u}: expected [x, y]")
        coordinates[u] = (float(xy[0]), float(xy[1]))
    try:
        return SubstrateNetwork(
            nodes=tuple(nodes),
            edges=tuple(edges),
            types=frozenset(types),
            supported_types=supported,
            capacity_node=_triples(_get(obj, "capacity_node", list, path),
                                   f"{path}.capacity_node"),
            capacity_edge=_triples(_get(obj, "capacity_edge", list, path),
                                   f"{path}.capacity_edge"),
            cost_node=_triples(obj.get("cost_node", []), f"{path}.cost_node"),
            cost_edge=_triples(obj.get("cost_edge", []), f"{path}.cost_edge"),
            coordinates=coordinates,
            name=obj.get("name", "substrate"),
        )
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# requests


def request_to_obj(r: Request) -> dict:
    return {
        "id": r.id,
        "nodes": list(r.nodes),
        "edges": [list(e) for e in r.edges],
        "profit": r.profit,
        "node_type": dict(sorted(r.node_type.items())),
        "demand_node": dict(sorted(r.demand_node.items())),
        "demand_edge": [[i, j, r.demand_edge[(i, j)]] for (i, j) in r.edges],
        "allowed_nodes": {i: sorted(us) for i, us in sorted(r.allowed_nodes.items())},
        "allowed_edges": [[i, j, [list(se) for se in sorted(r.allowed_edges[(i, j)])]]
                          for (i, j) in r.edges],
    }


def request_from_obj(obj: Mapping, path: str) -> Request:
    rid = _get(obj, "id", str, path)
    nodes = _get(obj, "nodes", list, path)
    edges = [_edge(e, f"{path}.edges[{k}]")
             for k, e in enumerate(_get(obj, "edges", list, path))]
    allowed_nodes = {}
    for i, us in _get(obj, "allowed_nodes", dict, path).items():
        if not isinstance(us, list):
            raise InstanceFormatError(f"{path}.allowed_nodes.{i}: expected a list")
        allowed_nodes[i] = tuple(us)
    allowed_edges = {}
    raw_allowed = _get(obj, "allowed_edges", list, path)
    for k, item in enumerate(raw_allowed):
        if not isinstance(item, list) or len(item) != 3:
            raise InstanceFormatError(
                f"{path}.allowed_edges[{k}]: expected [i, j, edge list]")
        i, j, ses = item
        allowed_edges[(i, j)] = tuple(
            _edge(se, f"{path}.allowed_edges[{k}][{m}]")
            for m, se in enumerate(ses))
    demand_node = {i: float(v)
                   for i, v in _get(obj, "demand_node", dict, path).items()}
    try:
        return Request(
            id=rid,
            nodes=tuple(nodes),
            edges=tuple(edges),
            profit=_get(obj, "profit", float, path),
            node_type=dict(_get(obj, "node_type", dict, path)),
            demand_node=demand_node,
            demand_edge=_triples(_get(obj, "demand_edge", list, path),
                                 f"{path}.demand_edge"),
            allowed_nodes=allowed_nodes,
            allowed_edges=allowed_edges,
        )
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# instances, mappings, decompositions


def instance_to_obj(instance: Instance) -> dict:
    return {
        "name": instance.name,
        "substrate": substrate_to_obj(instance.substrate),
        "requests": [request_to_obj(r) for r in instance.requests],
    }


def instance_from_obj(obj: Mapping) -> Instance:
    substrate = substrate_from_obj(_get(obj, "substrate", dict, "instance"))
    requests = tuple(
        request_from_obj(r, f"requests[{k}]")
        for k, r in enumerate(_get(obj, "requests", list, "instance")))
    try:
        return Instance(substrate, requests, name=obj.get("name", "instance"))
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(instance_to_obj(instance)) + "\n")


def _parse_file(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON at line {exc.lineno}, "
                                  f"column {exc.colno}") from exc


def load_instance(path) -> Instance:
    return instance_from_obj(_parse_file(path))


def load_substrate_file(path) -> SubstrateNetwork:
    obj = _parse_file(path)
    if isinstance(obj, Mapping) and "substrate" in obj:
        return substrate_from_obj(obj["substrate"])
    return substrate_from_obj(obj)


def load_bundled_substrate(name: str) -> SubstrateNetwork:
    data = resources.files("vnelp").joinpath(f"data/{name}.json").read_text()
    return substrate_from_obj(json.loads(data))


def mapping_to_obj(mapping: ValidMapping) -> dict:
    return {
        "node_map": dict(sorted(mapping.node_map.items())),
        "edge_map": [[i, j, [list(se) for se in mapping.edge_map[(i, j)]]]
                     for (i, j) in sorted(mapping.edge_map)],
    }


def mapping_from_obj(obj: Mapping, path: str = "mapping") -> ValidMapping:
    node_map = dict(_get(obj, "node_map", dict, path))
    edge_map = {}
    for k, item in enumerate(_get(obj, "edge_map", list, path)):
        if not isinstance(item, list) or len(item) != 3:
            raise InstanceFormatError(f"{path}.edge_map[{k}]: expected [i, j, path]")
        i, j, ses = item
        edge_map[(i, j)] = tuple(_edge(se, f"{path}.edge_map[{k}][{m}]")
                                 for m, se in enumerate(ses))
    return ValidMapping(node_map=node_map, edge_map=edge_map)


def decomposition_to_obj(dec: ConvexDecomposition) -> dict:
    return {
        "request": dec.request_id,
        "residual": dec.residual,
        "entries": [{"weight": e.weight, "mapping": mapping_to_obj(e.mapping)}
                    for e in dec.entries],
    }


def decomposition_from_obj(obj: Mapping) -> ConvexDecomposition:
    entries = tuple(
        DecompositionEntry(
            weight=_get(e, "weight", float, f"entries[{k}]"),
            mapping=mapping_from_obj(_get(e, "mapping", dict, f"entries[{k}]")))
        for k, e in enumerate(_get(obj, "entries", list, "decomposition")))
    return ConvexDecomposition(
        request_id=_get(obj, "request", str, "decomposition"),
        entries=entries,
        residual=float(obj.get("residual", 0.0)),
    )
