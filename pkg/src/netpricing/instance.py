"""Instance data model, validation, JSON I/O, and the random grid generator.

An instance is a directed graph whose arcs are split into tolled arcs
(the leader prices them on top of a fixed cost) and toll-free arcs, plus
a set of commodities, each a single origin-destination follower.  Every
commodity must be able to route toll-free, otherwise the leader could
extract unbounded revenue.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field

from .errors import FormatError, GenerationError, ValidationError


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    cost: float
    tolled: bool


@dataclass(frozen=True)
class Commodity:
    id: int
    origin: int
    destination: int
    demand: float = 1.0


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the grid generator; defaults give nondegenerate instances."""

    tolled_fraction: float = 0.2
    cost_min: int = 2
    cost_max: int = 20
    toll_cost_min: int = 0
    toll_cost_max: int = 5

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise FormatError(f"unknown generator-config fields: {sorted(extra)}")
        return cls(**known)


@dataclass(frozen=True)
class Instance:
    node_count: int
    arcs: tuple[Arc, ...]
    commodities: tuple[Commodity, ...]
    # Derived lookups; populated in __post_init__.
    tolled_ids: tuple[int, ...] = field(init=False, compare=False, repr=False)
    tolled_pos: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        tolled = tuple(a.id for a in self.arcs if a.tolled)
        object.__setattr__(self, "tolled_ids", tolled)
        object.__setattr__(self, "tolled_pos", {a: i for i, a in enumerate(tolled)})

    @property
    def n_tolled(self) -> int:
        return len(self.tolled_ids)

    def toll_cap(self) -> float:
        """Finite stand-in for an unbounded toll.

        One more than the total toll-free cost: no follower ever pays a
        toll that beats its toll-free fallback, so capping toll variables
        here never cuts off a revenue-relevant optimum.
        """
        return sum(a.cost for a in self.arcs if not a.tolled) + 1.0

    def out_arcs(self) -> list[list[Arc]]:
        adj: list[list[Arc]] = [[] for _ in range(self.node_count)]
        for a in self.arcs:
            adj[a.tail].append(a)
        return adj


def _tollfree_reachable(inst_arcs, node_count: int, source: int) -> list[bool]:
    adj = [[] for _ in range(node_count)]
    for a in inst_arcs:
        if not a.tolled:
            adj[a.tail].append(a.head)
    seen = [False] * node_count
    seen[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def validate(inst: Instance) -> None:
    """Check every structural invariant; raise ValidationError naming the first violation."""
    if inst.node_count < 1:
        raise ValidationError("node count must be positive")
    for i, a in enumerate(inst.arcs):
        if a.id != i:
            raise ValidationError(f"arc {i} has inconsistent id {a.id}")
        if not (0 <= a.tail < inst.node_count and 0 <= a.head < inst.node_count):
            raise ValidationError(f"arc {i} endpoints out of range")
        if a.tail == a.head:
            raise ValidationError(f"arc {i} is a self-loop")
        if not (a.cost >= 0):
            raise ValidationError(f"arc {i} has negative cost {a.cost}")
    if inst.arcs and len(inst.tolled_ids) == len(inst.arcs):
        raise ValidationError("tolled arcs must form a strict subset of the arcs")
    reach_cache: dict[int, list[bool]] = {}
    for i, k in enumerate(inst.commodities):
        if k.id != i:
            raise ValidationError(f"commodity {i} has inconsistent id {k.id}")
        if not (0 <= k.origin < inst.node_count and 0 <= k.destination < inst.node_count):
            raise ValidationError(f"commodity {i} endpoints out of range")
        if k.origin == k.destination:
            raise ValidationError(f"commodity {i} has identical origin and destination")
        if not (k.demand > 0):
            raise ValidationError(f"commodity {i} has non-positive demand {k.demand}")
        if k.origin not in reach_cache:
            reach_cache[k.origin] = _tollfree_reachable(inst.arcs, inst.node_count, k.origin)
        if not reach_cache[k.origin][k.destination]:
            raise ValidationError(f"commodity {i} has no toll-free path")


def build_instance(node_count: int, arcs, commodities) -> Instance:
    """Assemble and validate an Instance from plain (tail, head, cost, tolled) data."""
    arc_objs = tuple(
        Arc(i, int(t), int(h), float(c), bool(f)) for i, (t, h, c, f) in enumerate(arcs)
    )
    comm_objs = tuple(
        Commodity(i, int(o), int(d), float(dem))
        for i, (o, d, dem) in enumerate(commodities)
    )
    inst = Instance(int(node_count), arc_objs, comm_objs)
    validate(inst)
    return inst


def parse(text: str) -> Instance:
    """Parse an instance document (UTF-8 JSON); validate all invariants."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise FormatError("instance document must be a JSON object")
    for key in ("nodes", "arcs", "commodities"):
        if key not in data:
            raise FormatError(f"missing required field '{key}'")
    try:
        arcs = [(a["tail"], a["head"], a["cost"], a["tolled"]) for a in data["arcs"]]
        comms = [
            (k["origin"], k["destination"], k.get("demand", 1.0))
            for k in data["commodities"]
        ]
        return build_instance(data["nodes"], arcs, comms)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed instance document: {exc!r}") from exc


def serialize(inst: Instance) -> str:
    """Render an instance document; parse(serialize(inst)) equals inst."""
    doc = {
        "nodes": inst.node_count,
        "arcs": [
            {"tail": a.tail, "head": a.head, "cost": a.cost, "tolled": a.tolled}
            for a in inst.arcs
        ],
        "commodities": [
            {"origin": k.origin, "destination": k.destination, "demand": k.demand}
            for k in inst.commodities
        ],
    }
    return json.dumps(doc, indent=2)


def generate_grid(
    L: int,
    k_count: int,
    seed: int,
    params: GeneratorConfig | None = None,
    max_attempts: int = 1000,
) -> Instance:
    """Generate a bidirectional L x L grid instance.

    |V| = L^2 and |A| = 4 L (L-1).  A configurable fraction of the arcs
    is tolled, costs are uniform integers, and origin-destination pairs
    are redrawn until each commodity can route toll-free.  Deterministic
    under (L, k_count, seed, params).
    """
    if L < 2:
        raise ValidationError("grid side must be at least 2")
    if k_count < 1:
        raise ValidationError("need at least one commodity")
    cfg = params or GeneratorConfig()
    rng = random.Random(seed)

    pairs = []
    for r in range(L):
        for c in range(L):
            n = r * L + c
            if c + 1 < L:
                pairs.append((n, n + 1))
                pairs.append((n + 1, n))
            if r + 1 < L:
                pairs.append((n, n + L))
                pairs.append((n + L, n))
    m = len(pairs)
    n_tolled = int(round(cfg.tolled_fraction * m))
    if n_tolled >= m:
        raise GenerationError("tolled fraction leaves no toll-free arcs")
    tolled_set = set(rng.sample(range(m), n_tolled)) if n_tolled else set()

    arcs = []
    for i, (t, h) in enumerate(pairs):
        if i in tolled_set:
            cost = rng.randint(cfg.toll_cost_min, cfg.toll_cost_max)
        else:
            cost = rng.randint(cfg.cost_min, cfg.cost_max)
        arcs.append((t, h, float(cost), i in tolled_set))

    arc_objs = [Arc(i, t, h, c, f) for i, (t, h, c, f) in enumerate(arcs)]
    reach: dict[int, list[bool]] = {}
    comms = []
    nodes = L * L
    for _ in range(k_count):
        for _attempt in range(max_attempts):
            o = rng.randrange(nodes)
            d = rng.randrange(nodes)
            if o == d:
                continue
            if o not in reach:
                reach[o] = _tollfree_reachable(arc_objs, nodes, o)
            if reach[o][d]:
                comms.append((o, d, 1.0))
                break
        else:
            raise GenerationError(
                "could not draw a toll-free-connected O-D pair; "
                "tolled fraction likely disconnects the grid"
            )
    return build_instance(nodes, arcs, comms)
