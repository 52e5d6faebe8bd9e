"""Radial distribution network data model.

Buses, branches and DERs are loaded from a JSON document, validated
(radial topology, single grid tie, contiguous 1-based ids) and frozen.
All queries here are pure topology; electrical behavior lives in
:mod:`gridrestore.powerflow`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class NetworkError(Exception):
    """Malformed or invalid network document."""


@dataclass(frozen=True)
class Bus:
    id: int
    load_p: float  # kW
    load_q: float = 0.0  # kVAr
    is_grid_tie: bool = False


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    resistance: float  # ohms on the system base (pu when base is 1/1)
    reactance: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)


@dataclass(frozen=True)
class Der:
    id: int
    bus: int
    capacity_p: float  # kW


@dataclass(frozen=True)
class SystemBase:
    """Per-unit base. Default 1 MVA / 1 kV makes ohms == pu."""

    mva: float = 1.0
    kv: float = 1.0

    @property
    def z_base(self) -> float:
        return self.kv * self.kv / self.mva

    @property
    def p_base_kw(self) -> float:
        return self.mva * 1000.0


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    ders: tuple[Der, ...]
    base: SystemBase = field(default=SystemBase(), compare=False)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def n_ders(self) -> int:
        return len(self.ders)

    @property
    def grid_tie_bus(self) -> int:
        for b in self.buses:
            if b.is_grid_tie:
                return b.id
        raise NetworkError("no grid tie")

    def bus(self, bus_id: int) -> Bus:
        try:
            return self._bus_index[bus_id]
        except KeyError:
            raise NetworkError(f"unknown bus id {bus_id}") from None

    def branch(self, branch_id: int) -> Branch:
        try:
            return self._branch_index[branch_id]
        except KeyError:
            raise NetworkError(f"unknown branch id {branch_id}") from None

    def der(self, der_id: int) -> Der:
        for d in self.ders:
            if d.id == der_id:
                return d
        raise NetworkError(f"unknown DER id {der_id}")

    def der_at_bus(self, bus_id: int) -> Der | None:
        return self._der_by_bus.get(bus_id)

    def branches_at_bus(self, bus_id: int) -> tuple[int, ...]:
        """Ids of branches incident to a bus."""
        return self._incidence.get(bus_id, ())

    # Lazy caches; the dataclass is frozen so they are built via __dict__.
    @property
    def _bus_index(self) -> dict[int, Bus]:
        if "_bus_index_c" not in self.__dict__:
            self.__dict__["_bus_index_c"] = {b.id: b for b in self.buses}
        return self.__dict__["_bus_index_c"]

    @property
    def _branch_index(self) -> dict[int, Branch]:
        if "_branch_index_c" not in self.__dict__:
            self.__dict__["_branch_index_c"] = {b.id: b for b in self.branches}
        return self.__dict__["_branch_index_c"]

    @property
    def _der_by_bus(self) -> dict[int, Der]:
        if "_der_by_bus_c" not in self.__dict__:
            self.__dict__["_der_by_bus_c"] = {d.bus: d for d in self.ders}
        return self.__dict__["_der_by_bus_c"]

    @property
    def _incidence(self) -> dict[int, tuple[int, ...]]:
        if "_incidence_c" not in self.__dict__:
            inc: dict[int, list[int]] = {}
            for br in self.branches:
                inc.setdefault(br.from_bus, []).append(br.id)
                inc.setdefault(br.to_bus, []).append(br.id)
            self.__dict__["_incidence_c"] = {k: tuple(v) for k, v in inc.items()}
        return self.__dict__["_incidence_c"]


def validate(net: Network) -> None:
    """Check every structural invariant; raise NetworkError naming the first violation."""
    n, l = net.n_buses, net.n_branches
    if n < 2:
        raise NetworkError("network needs at least 2 buses")
    bus_ids = [b.id for b in net.buses]
    if sorted(bus_ids) != list(range(1, n + 1)):
        raise NetworkError("bus ids must be contiguous 1..N")
    branch_ids = [b.id for b in net.branches]
    if sorted(branch_ids) != list(range(1, l + 1)):
        raise NetworkError("branch ids must be contiguous 1..L")
    ties = [b.id for b in net.buses if b.is_grid_tie]
    if len(ties) != 1:
        raise NetworkError("no grid tie" if not ties else "multiple grid ties")
    for b in net.buses:
        if b.load_p < 0:
            raise NetworkError(f"bus {b.id}: negative load")
    seen_pairs: set[frozenset[int]] = set()
    for br in net.branches:
        if br.from_bus == br.to_bus:
            raise NetworkError(f"branch {br.id}: self loop")
        for end in br.endpoints:
            if end not in net._bus_index:
                raise NetworkError(f"branch {br.id}: unknown bus {end}")
        if br.resistance < 0 or br.reactance < 0:
            raise NetworkError(f"branch {br.id}: negative impedance")
        pair = frozenset(br.endpoints)
        if pair in seen_pairs:
            raise NetworkError(f"branch {br.id}: parallel branch between same buses")
        seen_pairs.add(pair)
    der_buses = set()
    der_ids = [d.id for d in net.ders]
    if sorted(der_ids) != list(range(1, len(der_ids) + 1)):
        raise NetworkError("DER ids must be contiguous 1..M")
    for d in net.ders:
        if d.bus not in net._bus_index:
            raise NetworkError(f"DER {d.id}: unknown bus {d.bus}")
        if d.capacity_p <= 0:
            raise NetworkError(f"DER {d.id}: capacity must be positive")
        if d.bus in der_buses:
            raise NetworkError(f"DER {d.id}: bus {d.bus} already hosts a DER")
        der_buses.add(d.bus)
    if l != n - 1:
        raise NetworkError("graph contains a cycle" if l > n - 1 else "graph is disconnected")
    # Traversal check: L = N - 1 plus connectivity implies a tree.
    adj: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for br in net.branches:
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    seen = {net.buses[0].id}
    stack = [net.buses[0].id]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n:
        raise NetworkError("graph is disconnected")


def load_network(source) -> Network:
    """Parse and validate a network JSON document.

    ``source`` is a byte/str stream or an already-decoded dict.
    """
    doc = _read_json(source)
    if not isinstance(doc, dict):
        raise NetworkError("document root must be an object")
    allowed = {"buses", "branches", "ders", "base", "uniform_load"}
    unknown = set(doc) - allowed
    if unknown:
        raise NetworkError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("buses", "branches"):
        if key not in doc:
            raise NetworkError(f"missing required key '{key}'")

    uniform = doc.get("uniform_load")
    if uniform is not None and uniform < 0:
        raise NetworkError("uniform_load must be non-negative")

    base = SystemBase()
    if "base" in doc:
        b = _require_keys(doc["base"], {"mva", "kv"}, set(), "base")
        base = SystemBase(mva=float(b.get("mva", 1.0)), kv=float(b.get("kv", 1.0)))

    buses = []
    for raw in doc["buses"]:
        r = _require_keys(raw, {"id", "load_p", "load_q", "grid_tie"}, {"id"}, "bus")
        load_p = float(uniform) if uniform is not None else float(r.get("load_p", 0.0))
        buses.append(
            Bus(
                id=int(r["id"]),
                load_p=load_p,
                load_q=float(r.get("load_q", 0.0)),
                is_grid_tie=bool(r.get("grid_tie", False)),
            )
        )

    branches = []
    for raw in doc["branches"]:
        r = _require_keys(raw, {"id", "from", "to", "r", "x"}, {"id", "from", "to"}, "branch")
        branches.append(
            Branch(
                id=int(r["id"]),
                from_bus=int(r["from"]),
                to_bus=int(r["to"]),
                resistance=float(r.get("r", 0.0)),
                reactance=float(r.get("x", 0.0)),
            )
        )

    ders = []
    for raw in doc.get("ders", []):
        r = _require_keys(
            raw, {"id", "bus", "capacity", "capacity_unit"}, {"id", "bus", "capacity"}, "der"
        )
        unit = r.get("capacity_unit", "kw")
        cap = float(r["capacity"])
        if unit == "kw":
            capacity_p = cap
        elif unit == "buses":
            if uniform is None:
                raise NetworkError("capacity_unit 'buses' requires uniform_load")
            capacity_p = cap * float(uniform)
        else:
            raise NetworkError(f"unknown capacity_unit {unit!r}")
        ders.append(Der(id=int(r["id"]), bus=int(r["bus"]), capacity_p=capacity_p))

    net = Network(buses=tuple(buses), branches=tuple(branches), ders=tuple(ders), base=base)
    validate(net)
    return net


def serialize(net: Network) -> str:
    """Inverse of load_network: emit the canonical JSON document."""
    doc = {
        "buses": [
            {
                "id": b.id,
                "load_p": b.load_p,
                "load_q": b.load_q,
                "grid_tie": b.is_grid_tie,
            }
            for b in net.buses
        ],
        "branches": [
            {"id": b.id, "from": b.from_bus, "to": b.to_bus, "r": b.resistance, "x": b.reactance}
            for b in net.branches
        ],
        "ders": [
            {"id": d.id, "bus": d.bus, "capacity": d.capacity_p, "capacity_unit": "kw"}
            for d in net.ders
        ],
        "base": {"mva": net.base.mva, "kv": net.base.kv},
    }
    return json.dumps(doc, indent=2)


def branch_neighbors(net: Network, i: int) -> set[int]:
    """Branches sharing an endpoint with branch i, excluding i itself."""
    br = net.branch(i)
    out: set[int] = set()
    for bus in br.endpoints:
        out.update(net.branches_at_bus(bus))
    out.discard(i)
    return out


def source_branches(net: Network) -> set[int]:
    """Branches incident to the grid tie bus or any DER bus."""
    out: set[int] = set(net.branches_at_bus(net.grid_tie_bus))
    for d in net.ders:
        out.update(net.branches_at_bus(d.bus))
    return out


def _read_json(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"malformed JSON: {exc}") from exc


def _require_keys(raw, allowed: set[str], required: set[str], kind: str) -> dict:
    if not isinstance(raw, dict):
        raise NetworkError(f"{kind} entry must be an object")
    unknown = set(raw) - allowed
    if unknown:
        raise NetworkError(f"{kind} entry has unknown keys: {sorted(unknown)}")
    missing = required - set(raw)
    if missing:
        raise NetworkError(f"{kind} entry missing keys: {sorted(missing)}")
    return raw
