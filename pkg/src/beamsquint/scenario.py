"""Urban-grid scenario: block layout, sidewalk graph, placement, mobility.

The map is a 3x3 grid of square blocks separated by streets.  Pedestrian
UEs live on sidewalk centerlines that ring each block; rings of adjacent
blocks are joined corner-to-corner by crosswalk segments, so the whole
walkable area is one graph and street crossing happens only at corners.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .channel import RadioNode
from .config import RunConfig
from .geometry import ula_geometry
from .patterns import OMNI, SECTOR

__all__ = [
    "GridLayout",
    "SidewalkGraph",
    "Walker",
    "Scenario",
    "build_grid",
    "build_scenario",
    "move_ues",
    "write_node_table",
]


@dataclass(frozen=True)
class GridLayout:
    n_rows: int = 3
    n_cols: int = 3
    block_m: float = 120.0
    street_m: float = 14.0
    sidewalk_m: float = 3.0

    @property
    def pitch_m(self) -> float:
        return self.block_m + self.street_m

    def block_origin(self, col: int, row: int) -> Tuple[float, float]:
        return col * self.pitch_m, row * self.pitch_m

    @property
    def inset_m(self) -> float:
        # sidewalk centerline sits half a sidewalk width outside the facade
        return self.sidewalk_m / 2.0


@dataclass
class SidewalkGraph:
    vertices: np.ndarray                      # (V, 2)
    edges: List[Tuple[int, int, str]]         # (va, vb, kind: side|crosswalk)
    adjacency: Dict[int, List[int]]           # vertex -> edge ids

    def edge_vector(self, edge_id: int) -> np.ndarray:
        a, b, _ = self.edges[edge_id]
        return self.vertices[b] - self.vertices[a]

    def edge_length(self, edge_id: int) -> float:
        return float(np.linalg.norm(self.edge_vector(edge_id)))

    def point_on_edge(self, edge_id: int, offset_m: float) -> np.ndarray:
        a, b, _ = self.edges[edge_id]
        v = self.vertices[b] - self.vertices[a]
        return self.vertices[a] + v * (offset_m / np.linalg.norm(v))

    def locate(self, xy: np.ndarray, tol_m: float = 1e-6) -> Tuple[int, float]:
        """Edge id and offset of a point that lies on the graph."""
        for eid, (a, b, _) in enumerate(self.edges):
            pa, pb = self.vertices[a], self.vertices[b]
            v = pb - pa
            length = np.linalg.norm(v)
            t = float(np.dot(xy - pa, v) / (length * length))
            if -tol_m / length <= t <= 1.0 + tol_m / length:
                perp = np.linalg.norm(xy - (pa + np.clip(t, 0.0, 1.0) * v))
                if perp <= tol_m:
                    return eid, float(np.clip(t, 0.0, 1.0) * length)
        raise ValueError(f"point {xy} does not lie on the sidewalk graph")


def build_grid(layout: GridLayout = GridLayout()) -> SidewalkGraph:
    verts: List[Tuple[float, float]] = []
    index: Dict[Tuple[float, float], int] = {}

    def vid(p: Tuple[float, float]) -> int:
        key = (round(p[0], 6), round(p[1], 6))
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    edges: List[Tuple[int, int, str]] = []

    def add_edge(pa, pb, kind):
        edges.append((vid(pa), vid(pb), kind))

    s = layout.inset_m
    for row in range(layout.n_rows):
        for col in range(layout.n_cols):
            ox, oy = layout.block_origin(col, row)
            lo_x, hi_x = ox - s, ox + layout.block_m + s
            lo_y, hi_y = oy - s, oy + layout.block_m + s
            add_edge((lo_x, lo_y), (hi_x, lo_y), "side")
            add_edge((hi_x, lo_y), (hi_x, hi_y), "side")
            add_edge((hi_x, hi_y), (lo_x, hi_y), "side")
            add_edge((lo_x, hi_y), (lo_x, lo_y), "side")

    # corner-to-corner crosswalks between horizontally adjacent rings
    for row in range(layout.n_rows):
        for col in range(layout.n_cols - 1):
            ox, oy = layout.block_origin(col, row)
            nx, _ = layout.block_origin(col + 1, row)
            for y in (oy - s, oy + layout.block_m + s):
                add_edge((ox + layout.block_m + s, y), (nx - s, y), "crosswalk")
    # and between vertically adjacent rings
    for row in range(layout.n_rows - 1):
        for col in range(layout.n_cols):
            ox, oy = layout.block_origin(col, row)
            _, ny = layout.block_origin(col, row + 1)
            for x in (ox - s, ox + layout.block_m + s):
                add_edge((x, oy + layout.block_m + s), (x, ny - s), "crosswalk")

    adjacency: Dict[int, List[int]] = {i: [] for i in range(len(verts))}
    for eid, (a, b, _) in enumerate(edges):
        adjacency[a].append(eid)
        adjacency[b].append(eid)
    return SidewalkGraph(np.array(verts, dtype=float), edges, adjacency)


@dataclass
class Walker:
    edge_id: int
    offset_m: float
    forward: bool  # traveling from edge vertex a toward b

    def position_xy(self, graph: SidewalkGraph) -> np.ndarray:
        length = graph.edge_length(self.edge_id)
        off = self.offset_m if self.forward else length - self.offset_m
        return graph.point_on_edge(self.edge_id, off)


@dataclass
class Scenario:
    layout: GridLayout
    graph: SidewalkGraph
    gnb: RadioNode
    ncr_access: RadioNode
    ncr_backhaul: RadioNode
    ues: List[RadioNode]
    walkers: List[Walker]
    ue_speed_mps: float
    turn_probs: Tuple[float, float, float]  # continue, turn, cross


def _street_sidewalk_x(layout: GridLayout, street: int, side: str) -> float:
    if not 0 <= street <= layout.n_cols - 2:
        raise ValueError(f"ue street index {street} out of range")
    if side == "west":
        ox, _ = layout.block_origin(street, 0)
        return ox + layout.block_m + layout.inset_m
    ox, _ = layout.block_origin(street + 1, 0)
    return ox - layout.inset_m


def _default_gnb_position(cfg: RunConfig, layout: GridLayout) -> np.ndarray:
    sc = cfg.scenario
    mid_y = 0.5 * (sc.ue_span_m[0] + sc.ue_span_m[1])
    anchor_row = min(
        layout.n_rows - 1, max(0, int(mid_y // layout.pitch_m))
    )
    row = max(0, anchor_row - sc.gnb_block_offset)
    facade_x = layout.block_origin(sc.ue_street, 0)[0] + layout.block_m
    y = layout.block_origin(0, row)[1] + 10.0
    return np.array([facade_x, y, 25.0])


def build_scenario(cfg: RunConfig, gnb_elements: int, layout: GridLayout = GridLayout()) -> Scenario:
    """Position all nodes for one drop; array sizes fixed per run."""
    sc = cfg.scenario
    graph = build_grid(layout)
    f1 = cfg.rf.f1_hz

    if sc.gnb_position is not None:
        gnb_pos = np.array(sc.gnb_position, dtype=float)
    else:
        gnb_pos = _default_gnb_position(cfg, layout)
    gnb = RadioNode(
        "gnb", "gnb", gnb_pos, SECTOR,
        ula_geometry(gnb_elements, f1), sc.gnb_boresight_deg,
    )

    ncr_pos = np.array(sc.ncr_position, dtype=float)
    ncr_access = RadioNode(
        "ncr", "ncr", ncr_pos, SECTOR,
        ula_geometry(gnb_elements, f1), sc.ncr_access_boresight_deg,
    )
    ncr_backhaul = RadioNode(
        "ncr", "ncr", ncr_pos, SECTOR,
        ula_geometry(cfg.arrays.ncr_backhaul_elements, f1),
        sc.ncr_backhaul_boresight_deg,
    )

    x = _street_sidewalk_x(layout, sc.ue_street, sc.ue_side)
    ys = np.linspace(sc.ue_span_m[0], sc.ue_span_m[1], sc.n_ues)
    ues, walkers = [], []
    for i, y in enumerate(ys):
        pos = np.array([x, float(y), 1.5])
        ues.append(RadioNode(f"ue{i}", "ue", pos, OMNI, None, 0.0))
        eid, off = graph.locate(pos[:2])
        a, b, _ = graph.edges[eid]
        # start heading toward the edge endpoint with larger y (northbound)
        forward = graph.vertices[b][1] >= graph.vertices[a][1]
        walkers.append(Walker(eid, off if forward else graph.edge_length(eid) - off, forward))

    return Scenario(
        layout=layout,
        graph=graph,
        gnb=gnb,
        ncr_access=ncr_access,
        ncr_backhaul=ncr_backhaul,
        ues=ues,
        walkers=walkers,
        ue_speed_mps=sc.ue_speed_kmh / 3.6,
        turn_probs=(sc.p_continue, sc.p_turn, sc.p_cross),
    )


def _step_weights(
    graph: SidewalkGraph, vertex: int, heading: np.ndarray,
    arrival_edge: int, probs: Tuple[float, float, float],
) -> Tuple[List[Tuple[int, bool]], List[float]]:
    p_cont, p_turn, p_cross = probs
    options: List[Tuple[int, bool]] = []
    weights: List[float] = []
    for eid in graph.adjacency[vertex]:
        if eid == arrival_edge:
            continue
        a, b, kind = graph.edges[eid]
        forward = a == vertex
        d = graph.edge_vector(eid) / graph.edge_length(eid)
        if not forward:
            d = -d
        dot = float(np.dot(heading, d))
        if dot > 0.5:
            w = p_cont
        elif kind == "crosswalk":
            w = p_cross
        else:
            w = p_turn
        options.append((eid, forward))
        weights.append(w)
    return options, weights


def move_ues(scenario: Scenario, dt_s: float, rng: np.random.Generator) -> Scenario:
    """Advance every walker by speed*dt along the graph, in place.

    Intersection choices draw from ``rng``; straight ahead is favored,
    crossing the street is rarest, and missing options renormalize.
    """
    if dt_s <= 0.0:
        raise ValueError("dt must be positive")
    graph = scenario.graph
    for ue, walker in zip(scenario.ues, scenario.walkers):
        remaining = scenario.ue_speed_mps * dt_s
        while remaining > 0.0:
            length = graph.edge_length(walker.edge_id)
            room = length - walker.offset_m
            if remaining < room:
                walker.offset_m += remaining
                remaining = 0.0
                break
            remaining -= room
            a, b, _ = graph.edges[walker.edge_id]
            vertex = b if walker.forward else a
            into = graph.edge_vector(walker.edge_id) / length
            heading = into if walker.forward else -into
            options, weights = _step_weights(
                graph, vertex, heading, walker.edge_id, scenario.turn_probs
            )
            if not options:
                walker.forward = not walker.forward
                walker.offset_m = 0.0
                continue
            total = sum(weights)
            if total <= 0.0:
                pick = int(rng.integers(len(options)))
            else:
                pick = int(rng.choice(len(options), p=np.array(weights) / total))
            walker.edge_id, walker.forward = options[pick]
            walker.offset_m = 0.0
        ue.position[:2] = walker.position_xy(graph)
    return scenario


def write_node_table(scenario: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "role", "x", "y", "z"])
        rows = [scenario.gnb, scenario.ncr_access] + scenario.ues
        for node in rows:
            w.writerow(
                [node.name, node.role]
                + [f"{v:.6f}" for v in node.position.tolist()]
            )
