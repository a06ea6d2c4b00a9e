"""
Graph Module for DroopPlan
Builds the drooping manipulation graph, expands it with regrasp and connecting
nodes, and searches for minimum-cost critical-pose sequences
"""

import heapq
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from app.constants import (
    EDGE_CHECK_SAMPLES,
    EDGE_COSTS,
    MAX_REPROJECTION,
    REQUIRE_DROOP_ON_TRANSITIONS,
    RETREAT_CLEARANCE,
)
from app.core.errors import NoPath, UnresolvedSelector, ValidationError
from app.core.geometry import PoseKey, Transform, pose_key
from app.core.interpolation import (
    PosePath,
    command_for,
    grasp_state,
    retreat_pose,
    transition_angle,
    transition_sample,
    translation_track,
)
from app.core.mechanics import TransitionCommand, droop_occurs
from app.core.sampling import CandidateNode, NodeKind, gripper_collides
from app.core.scene import PoseSpec, Scene

logger = logging.getLogger(__name__)


class EdgeKind(str, Enum):
    GRASP_TRANSITION = "grasp_transition"
    TRANSLATION = "translation"
    REGRASP = "regrasp"


@dataclass(frozen=True)
class GraphNode:
    id: int
    candidate: CandidateNode
    kind: NodeKind

    def __post_init__(self):
        if not self.candidate.feasible:
            raise ValidationError(f"node {self.id} wraps an infeasible candidate")

    @property
    def pose_key(self) -> PoseKey:
        return self.candidate.pose_key

    @property
    def grasp_id(self) -> int:
        return self.candidate.grasp.id

    @property
    def drooping_side(self) -> bool:
        return self.kind in (NodeKind.DROOPING, NodeKind.CONNECTING)

    @property
    def regrasp_side(self) -> bool:
        return self.kind in (NodeKind.REGRASP, NodeKind.CONNECTING)


@dataclass(frozen=True)
class GraphEdge:
    source: int
    target: int
    kind: EdgeKind
    cost: float
    command: Optional[TransitionCommand] = None

    def __post_init__(self):
        if self.cost < 0:
            raise ValidationError("edge cost must be >= 0")
        if (self.command is not None) != (self.kind is EdgeKind.GRASP_TRANSITION):
            raise ValidationError("a command is carried by grasp transitions only")


@dataclass(frozen=True)
class GraphSettings:
    costs: Dict[str, float] = field(default_factory=lambda: dict(EDGE_COSTS))
    edge_check_samples: int = EDGE_CHECK_SAMPLES
    require_droop_on_transitions: bool = REQUIRE_DROOP_ON_TRANSITIONS
    retreat_clearance: float = RETREAT_CLEARANCE
    max_reprojection: float = MAX_REPROJECTION

    def __post_init__(self):
        merged = dict(EDGE_COSTS)
        for key, value in self.costs.items():
            if key not in EDGE_COSTS:
                raise ValidationError(f"unknown edge kind '{key}'", field="costs")
            if not value >= 0:
                raise ValidationError("must be >= 0", field=f"costs.{key}")
            merged[key] = float(value)
        object.__setattr__(self, "costs", merged)
        if self.edge_check_samples < 1:
            raise ValidationError("must be >= 1", field="graph.edge_check_samples")
        if not self.retreat_clearance >= 0:
            raise ValidationError("must be >= 0", field="graph.retreat_clearance")

    def cost(self, kind: EdgeKind) -> float:
        return self.costs[kind.value]

    def to_dict(self) -> dict:
        return {
            "costs": dict(sorted(self.costs.items())),
            "edge_check_samples": self.edge_check_samples,
            "require_droop_on_transitions": self.require_droop_on_transitions,
            "retreat_clearance": self.retreat_clearance,
            "max_reprojection": self.max_reprojection,
        }


class ManipulationGraph:
    """Nodes and edges over a networkx DiGraph; treat a built graph as immutable"""

    def __init__(self, nodes: Sequence[GraphNode], digraph: Optional[nx.DiGraph] = None, blocked: Iterable[Tuple[int, int]] = ()):
        self.nodes: List[GraphNode] = list(nodes)
        if digraph is None:
            digraph = nx.DiGraph()
            digraph.add_nodes_from(n.id for n in self.nodes)
        self.digraph = digraph
        self.blocked: FrozenSet[Tuple[int, int]] = frozenset(blocked)
        self._by_pose: Dict[PoseKey, List[int]] = defaultdict(list)
        for node in self.nodes:
            self._by_pose[node.pose_key].append(node.id)

    def node(self, node_id: int) -> GraphNode:
        return self.nodes[node_id]

    def add_edge(self, edge: GraphEdge):
        self.digraph.add_edge(edge.source, edge.target, edge=edge)

    def has_edge(self, source: int, target: int) -> bool:
        return self.digraph.has_edge(source, target)

    def edge(self, source: int, target: int) -> GraphEdge:
        return self.digraph.edges[source, target]["edge"]

    def edges(self) -> List[GraphEdge]:
        return [data["edge"] for _, _, data in self.digraph.edges(data=True)]

    def out_edges(self, node_id: int) -> List[GraphEdge]:
        return [data["edge"] for _, _, data in self.digraph.out_edges(node_id, data=True)]

    def is_blocked(self, source: int, target: int) -> bool:
        return (source, target) in self.blocked

    def nodes_at(self, key: PoseKey) -> List[int]:
        return list(self._by_pose.get(key, []))

    def copy(self, blocked: Optional[Iterable[Tuple[int, int]]] = None) -> "ManipulationGraph":
        return ManipulationGraph(
            self.nodes,
            self.digraph.copy(),
            self.blocked if blocked is None else blocked,
        )

    def node_counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in NodeKind}
        for node in self.nodes:
            counts[node.kind.value] += 1
        return counts

    def edge_counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in EdgeKind}
        for edge in self.edges():
            counts[edge.kind.value] += 1
        return counts

    def components(self) -> int:
        return nx.number_weakly_connected_components(self.digraph)


@dataclass(frozen=True)
class PlanPath:
    nodes: Tuple[GraphNode, ...]
    edges: Tuple[GraphEdge, ...]
    cost: float

    @property
    def counts(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in EdgeKind}
        for edge in self.edges:
            counts[edge.kind.value] += 1
        return counts

    @property
    def kinds(self) -> List[EdgeKind]:
        return [edge.kind for edge in self.edges]


# Edge checks along the motion each edge stands for


def _samples(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


def transition_clear(scene: Scene, a: CandidateNode, delta: float, settings: GraphSettings) -> bool:
    for s in _samples(settings.edge_check_samples):
        sample = transition_sample(a, delta, float(s))
        if not scene.robot.in_reach(sample.gripper_world.translation):
            return False
        if settings.require_droop_on_transitions:
            state = grasp_state(scene, sample.object_pose, sample.grasp_in_object, a.grasp)
            if not droop_occurs(scene, state):
                return False
    return True


def translation_clear(scene: Scene, a: CandidateNode, b: CandidateNode, settings: GraphSettings) -> bool:
    corrections, grippers = translation_track(scene, a, b, _samples(settings.edge_check_samples))
    if np.any(np.abs(corrections) > settings.max_reprojection):
        return False
    return scene.robot.all_in_reach(grippers)


def _gripper_pose_clear(scene: Scene, pose: Transform) -> bool:
    return scene.robot.in_reach(pose.translation) and not gripper_collides(scene, pose)


def regrasp_clear(scene: Scene, a: CandidateNode, b: CandidateNode, settings: GraphSettings) -> bool:
    clearance = settings.retreat_clearance
    up_a = retreat_pose(a.gripper_world, clearance)
    up_b = retreat_pose(b.gripper_world, clearance)
    samples = _samples(settings.edge_check_samples)
    for s, transit in zip(samples, PosePath(up_a, up_b).sample(samples)):
        s = float(s)
        for pose in (
            retreat_pose(a.gripper_world, clearance * s),
            transit,
            retreat_pose(b.gripper_world, clearance * s),
        ):
            if not _gripper_pose_clear(scene, pose):
                return False
    return True


# Construction


def _pairs(buckets: Dict) -> List[Tuple[int, int]]:
    pairs = set()
    for members in buckets.values():
        for u, v in itertools.combinations(sorted(members), 2):
            pairs.add((u, v))
    return sorted(pairs)


def _step_key(angle: float) -> float:
    return round(float(angle), 9)


def _ranks(values: Iterable) -> Dict:
    return {v: i for i, v in enumerate(sorted(set(values)))}


def _translation_pairs(scene: Scene, nodes: Sequence[GraphNode]) -> List[Tuple[int, int]]:
    """Same grasp and neighbouring samples: the next Z or X step about the same
    pivot, or the next grid point in a row or column at the same orientation"""
    samples = []
    for node in nodes:
        c = node.candidate
        local = scene.surface.to_local(c.object_pose.translation)
        u, v = (int(k) for k in np.rint(local[:2] / 1e-4))
        samples.append((node, _step_key(c.x_rotation), _step_key(c.z_rotation), u, v))
    x_rank = _ranks(s[1] for s in samples)
    z_rank = _ranks(s[2] for s in samples)
    u_rank = _ranks(s[3] for s in samples)
    v_rank = _ranks(s[4] for s in samples)

    turns: Dict = defaultdict(list)
    chains: Dict = defaultdict(list)
    for node, x, z, u, v in samples:
        key, grasp = node.pose_key, node.grasp_id
        turns[(grasp, key[:3], x)].append((z_rank[z], node.id))
        chains[("tilt", grasp, key[:3], z)].append((x_rank[x], node.id))
        chains[("row", grasp, key[3:], v)].append((u_rank[u], node.id))
        chains[("column", grasp, key[3:], u)].append((v_rank[v], node.id))

    last_z = len(z_rank) - 1
    pairs = set()
    for members in itertools.chain(turns.values(), chains.values()):
        members.sort()
        for (i, a), (j, b) in zip(members, members[1:]):
            if j - i == 1:
                pairs.add((min(a, b), max(a, b)))
    # turn steps close the circle once there are more than two of them
    if last_z > 1:
        for members in turns.values():
            (first, a), (last, b) = members[0], members[-1]
            if first == 0 and last == last_z:
                pairs.add((min(a, b), max(a, b)))
    return sorted(pairs)


def _add_symmetric(graph: ManipulationGraph, u: int, v: int, kind: EdgeKind, cost: float):
    graph.add_edge(GraphEdge(u, v, kind, cost))
    graph.add_edge(GraphEdge(v, u, kind, cost))


def _add_translations(scene: Scene, graph: ManipulationGraph, members: Sequence[GraphNode], settings: GraphSettings) -> int:
    added = 0
    cost = settings.cost(EdgeKind.TRANSLATION)
    for u, v in _translation_pairs(scene, members):
        if graph.has_edge(u, v):
            continue
        a, b = graph.node(u).candidate, graph.node(v).candidate
        if a.pose_key == b.pose_key:
            continue
        if translation_clear(scene, a, b, settings):
            _add_symmetric(graph, u, v, EdgeKind.TRANSLATION, cost)
            added += 1
    return added


def build_drooping_graph(scene: Scene, nodes: Sequence[GraphNode], settings: Optional[GraphSettings] = None) -> ManipulationGraph:
    """Grasp-transition and translation edges between feasible bouquet nodes"""
    settings = settings or GraphSettings()
    for node in nodes:
        if not node.drooping_side:
            raise ValidationError(f"node {node.id} is not a drooping node")
    graph = ManipulationGraph(nodes)

    # transitions keep the pivot, the TCP on the object and the gripper orientation
    buckets: Dict = defaultdict(list)
    for node in nodes:
        c = node.candidate
        if not c.grasp.in_plane:
            continue
        rotation_key = tuple(int(v) for v in np.rint(c.gripper_world.rotation.reshape(-1) / 1e-3))
        tcp_key = tuple(int(v) for v in np.rint(np.array(c.grasp.tcp) / 1e-4))
        buckets[(node.pose_key[:3], rotation_key, tcp_key)].append(node.id)
    transitions = 0
    cost = settings.cost(EdgeKind.GRASP_TRANSITION)
    for u, v in _pairs(buckets):
        a, b = graph.node(u).candidate, graph.node(v).candidate
        delta = transition_angle(a, b)
        if delta is None or not transition_clear(scene, a, delta, settings):
            continue
        command = command_for(a, b)
        graph.add_edge(GraphEdge(u, v, EdgeKind.GRASP_TRANSITION, cost, command))
        graph.add_edge(GraphEdge(v, u, EdgeKind.GRASP_TRANSITION, cost, command.mirrored()))
        transitions += 1

    translations = _add_translations(scene, graph, nodes, settings)
    logger.info(
        "drooping graph: %d nodes, %d transition pairs, %d translation pairs",
        len(nodes),
        transitions,
        translations,
    )
    return graph


def expand_with_regrasp(
    scene: Scene,
    graph: ManipulationGraph,
    stable_nodes: Sequence[CandidateNode],
    settings: Optional[GraphSettings] = None,
) -> ManipulationGraph:
    """Add regrasp nodes at stable placements; matching bouquet nodes become connecting"""
    settings = settings or GraphSettings()
    nodes = list(graph.nodes)
    index = {(n.pose_key, n.grasp_id): n.id for n in nodes}
    for candidate in stable_nodes:
        if not candidate.feasible:
            raise ValidationError("stable nodes must be feasible")
        match = index.get((candidate.pose_key, candidate.grasp.id))
        if match is not None:
            if nodes[match].kind is NodeKind.DROOPING:
                nodes[match] = replace(nodes[match], kind=NodeKind.CONNECTING)
            continue
        node = GraphNode(len(nodes), replace(candidate, kind=NodeKind.REGRASP), NodeKind.REGRASP)
        index[(node.pose_key, node.grasp_id)] = node.id
        nodes.append(node)

    expanded = ManipulationGraph(nodes, graph.digraph.copy(), graph.blocked)
    expanded.digraph.add_nodes_from(n.id for n in nodes)
    members = [n for n in nodes if n.regrasp_side]

    by_pose: Dict[PoseKey, List[int]] = defaultdict(list)
    for node in members:
        by_pose[node.pose_key].append(node.id)
    regrasps = 0
    cost = settings.cost(EdgeKind.REGRASP)
    for u, v in _pairs(by_pose):
        a, b = expanded.node(u).candidate, expanded.node(v).candidate
        if a.grasp.id == b.grasp.id:
            continue
        if regrasp_clear(scene, a, b, settings):
            _add_symmetric(expanded, u, v, EdgeKind.REGRASP, cost)
            regrasps += 1

    slides = _add_translations(scene, expanded, members, settings)
    logger.info(
        "regrasp expansion: %d connecting, %d regrasp nodes, %d regrasp pairs, %d slide pairs",
        sum(1 for n in nodes if n.kind is NodeKind.CONNECTING),
        sum(1 for n in nodes if n.kind is NodeKind.REGRASP),
        regrasps,
        slides,
    )
    return expanded


# Selectors and search

PoseSelector = Union[Transform, PoseSpec, PoseKey]


def selector_key(scene: Scene, selector: PoseSelector) -> PoseKey:
    if isinstance(selector, PoseSpec):
        return pose_key(selector.to_transform(scene))
    if isinstance(selector, Transform):
        return pose_key(selector)
    return tuple(selector)


def resolve_selector(graph: ManipulationGraph, key: PoseKey, what: str = "pose") -> List[int]:
    ids = graph.nodes_at(key)
    if not ids:
        raise UnresolvedSelector(f"no feasible node at the {what}")
    return ids


def block_edges(
    graph: ManipulationGraph,
    pairs: Sequence[Tuple[PoseKey, PoseKey]],
) -> ManipulationGraph:
    """Mark every edge between the two poses of each pair (both directions) as blocked"""
    if not pairs:
        return graph
    blocked = set(graph.blocked)
    for first, second in pairs:
        a = set(resolve_selector(graph, first, "first blocked pose"))
        b = set(resolve_selector(graph, second, "second blocked pose"))
        for edge in graph.edges():
            if (edge.source in a and edge.target in b) or (edge.source in b and edge.target in a):
                blocked.add((edge.source, edge.target))
    result = graph.copy(blocked=blocked)
    logger.info("blocked %d directed edges", len(result.blocked) - len(graph.blocked))
    return result


def search_path(graph: ManipulationGraph, start: PoseKey, goal: PoseKey) -> PlanPath:
    """Multi-source Dijkstra; ties resolve to the smallest node id"""
    sources = resolve_selector(graph, start, "start pose")
    targets = set(resolve_selector(graph, goal, "goal pose"))

    dist: Dict[int, float] = {}
    pred: Dict[int, Optional[int]] = {}
    done = set()
    heap: List[Tuple[float, int]] = []
    for s in sources:
        dist[s] = 0.0
        pred[s] = None
        heapq.heappush(heap, (0.0, s))

    while heap:
        d, u = heapq.heappop(heap)
        if u in done or d > dist[u]:
            continue
        done.add(u)
        for edge in graph.out_edges(u):
            v = edge.target
            if v in done or graph.is_blocked(u, v):
                continue
            nd = d + edge.cost
            old = dist.get(v, math.inf)
            if nd < old - 1e-12:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif abs(nd - old) <= 1e-12 and pred[v] is not None and u < pred[v]:
                pred[v] = u

    reached = [t for t in targets if t in done]
    if not reached:
        raise NoPath("goal is unreachable from the start")
    best = min(reached, key=lambda t: (dist[t], t))

    chain = [best]
    while pred[chain[-1]] is not None:
        chain.append(pred[chain[-1]])
    chain.reverse()
    edges = tuple(graph.edge(u, v) for u, v in zip(chain, chain[1:]))
    return PlanPath(
        nodes=tuple(graph.node(i) for i in chain),
        edges=edges,
        cost=float(sum(e.cost for e in edges)),
    )


# Inspection


def query_nodes(
    graph: ManipulationGraph,
    kind: Optional[NodeKind] = None,
    grasp_id: Optional[int] = None,
    pose: Optional[PoseKey] = None,
) -> List[GraphNode]:
    nodes = graph.nodes
    if pose is not None:
        nodes = [graph.node(i) for i in resolve_selector(graph, pose)]
    selected = [
        n
        for n in nodes
        if (kind is None or n.kind is kind) and (grasp_id is None or n.grasp_id == grasp_id)
    ]
    return selected


def query_edges(graph: ManipulationGraph, node_ids: Iterable[int], kind: Optional[EdgeKind] = None) -> List[GraphEdge]:
    wanted = set(node_ids)
    return [
        e
        for e in graph.edges()
        if (e.source in wanted or e.target in wanted) and (kind is None or e.kind is kind)
    ]
