"""Energy-optimal service placement.

Each service is assigned to exactly one processing site on its uplink
(its own device, its ONU, the micro-DC at the OLT, or the cloud DC). Cost
is the total power of every network element and server the placement
touches. Because the topology is a tree the routing is fixed by the site
choice, so the model is a generalized assignment problem with fixed
charges (idle power) and integer server activation.

Two exact methods are provided: a depth-first branch-and-bound used in
production and an exhaustive enumerator used as a test oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import Placement, PowerBreakdown, Scenario, ServiceRequest, Topology
from .power import (
    CAPACITY_RTOL,
    DEFAULT_WIRELESS,
    CapacityError,
    IdleRule,
    WirelessModel,
    energy_per_bit,
    energy_per_instruction,
    exceeds,
    idle_network_power,
    idle_processing_power,
    replicas_needed,
    server_processing_power,
    wireless_tx_power,
)
from .profiles import CLOUD_SERVER_KEYS, PROCESSING_PROFILES, LayerId

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"

# objective differences below this many watts are treated as ties
TIE_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10


class NoCandidateError(ValueError):
    pass


@dataclass(frozen=True)
class Candidate:
    """One admissible site for one service, with its precomputed cost terms."""

    site: str
    layer: LayerId
    route: tuple  # network element ids
    linear: float  # W, separable part: proportional draw + shared idle
    fixed: tuple  # route elements whose idle is charged in full once used
    fits_alone: bool


@dataclass
class PlacementModel:
    topology: Topology
    requests: list
    scenario: Scenario
    wireless: WirelessModel
    candidates: list  # per service, list[Candidate] ordered by (layer, site id)
    element_capacity: dict  # element id -> bit/s
    element_idle: dict  # element id -> W charged once when carrying traffic (FULL rule only)
    pools: dict  # processing node id -> Pool

    @property
    def n_services(self) -> int:
        return len(self.requests)


@dataclass(frozen=True)
class Pool:
    cpu_capacity: float  # MIPS per server
    max_replicas: int | None
    p_idle: float
    rule: IdleRule

    @property
    def max_load(self) -> float:
        return float("inf") if self.max_replicas is None else self.max_replicas * self.cpu_capacity


@dataclass
class SolveReport:
    placement: Placement | None
    breakdown: PowerBreakdown | None
    objective: float | None
    status: str
    node_count: int = 0
    wall_time: float = 0.0
    method: str = "bnb"

    def to_dict(self, topology: Topology | None = None) -> dict:
        d = {
            "status": self.status,
            "objective": self.objective,
            "node_count": self.node_count,
            "wall_time": self.wall_time,
            "method": self.method,
            "placement": self.placement.to_dict() if self.placement else None,
            "breakdown": self.breakdown.to_dict() if self.breakdown else None,
        }
        if topology is not None and self.placement is not None:
            d["layers"] = {s: topology[n].layer.name for s, n in self.placement.assignment.items()}
        return d


def _is_wireless(topology: Topology, element: str) -> bool:
    return element in topology.wireless_links


def _cloud_pools(topology: Topology, source: str, server: str) -> list[str]:
    wanted = PROCESSING_PROFILES[CLOUD_SERVER_KEYS[server]].name
    return [n for n in topology.sites(source, LayerId.CloudDC) if topology[n].processing.name == wanted]


def build_model(
    topology: Topology,
    requests: list[ServiceRequest],
    scenario: Scenario,
    wireless: WirelessModel = DEFAULT_WIRELESS,
) -> PlacementModel:
    policy = scenario.idle_policy
    layers = scenario.processing_layers
    candidates = []
    elements_cap: dict = {}
    elements_idle: dict = {}
    pools: dict = {}
    for req in requests:
        sites = []
        for layer in sorted(layers):
            if layer is LayerId.CloudDC:
                sites.extend(_cloud_pools(topology, req.source, scenario.cloud_server))
            else:
                sites.extend(topology.sites(req.source, layer))
        cands = []
        for site in sites:
            node = topology[site]
            route = tuple(topology.route(req.source, site))
            linear = 0.0
            fixed = []
            for el in route:
                el_node = topology[el]
                prof = el_node.network
                rule = policy.rule_for(el_node.layer)
                elements_cap[el] = prof.max_bitrate
                if _is_wireless(topology, el):
                    linear += wireless_tx_power(wireless, req.rate, topology.wireless_links[el])
                else:
                    linear += energy_per_bit(prof) * req.rate
                if rule is IdleRule.SHARED:
                    linear += prof.p_idle * req.rate / prof.max_bitrate
                elif rule is IdleRule.FULL and prof.p_idle > 0:
                    fixed.append(el)
                    elements_idle[el] = prof.p_idle
            proc = node.processing
            pool = Pool(proc.cpu_capacity, node.replica_count, proc.p_idle, policy.processing)
            pools[site] = pool
            linear += energy_per_instruction(proc) * req.proc_demand * 1e6
            if pool.rule is IdleRule.SHARED:
                linear += proc.p_idle * req.proc_demand / proc.cpu_capacity
            fits = not exceeds(req.proc_demand, pool.max_load) and not any(
                exceeds(req.rate, topology[el].network.max_bitrate) for el in route
            )
            cands.append(Candidate(site, node.layer, route, linear, tuple(fixed), fits))
        if not cands:
            raise NoCandidateError(f"scenario {scenario.name} admits no processing site for {req.id} from {req.source}")
        cands.sort(key=lambda c: (c.layer, c.site))
        candidates.append(cands)
    return PlacementModel(topology, list(requests), scenario, wireless, candidates, elements_cap, elements_idle, pools)


# branch and bound --------------------------------------------------------


class _Search:
    """Depth-first branch-and-bound over services in request order.

    Candidates are tried in (layer, site id) order and only strictly better
    leaves replace the incumbent, so among tied optima the search keeps the
    lexicographically smallest assignment: lowest layer first, then lowest
    node id, service by service.

    Lower bound, for every unassigned service: its cheapest candidate's
    separable cost plus a share of the fixed charges it could trigger. A
    fixed charge F not yet paid is split evenly over the U unassigned
    services that could trigger it, so the shares of the services that
    actually trigger it never exceed F. Pools with more than one replica are
    charged idle per MIPS instead, less the spare capacity of their active
    replicas. When the services preferring a capacity-limited pool cannot
    all fit, the cheapest fractional displacement to their second choice is
    added.

    Interchangeable services (see ``_symmetry_rules``) are forced to take
    non-decreasing sites in service order. Swapping two of them never changes
    the cost and the lexicographically smallest optimum already satisfies the
    ordering, so this prunes only redundant ties.
    """

    def __init__(self, model: PlacementModel):
        self.m = model
        self.n = model.n_services
        self.rates = [r.rate for r in model.requests]
        self.demands = [r.proc_demand for r in model.requests]
        self.users = {e: 0 for e in model.element_capacity}
        self.carried = {e: 0.0 for e in model.element_capacity}
        self.load = {p: 0.0 for p in model.pools}
        self.choice = [None] * self.n
        self.best_cost = float("inf")
        self.best_choice = None
        self.nodes = 0
        self.multi = {p for p, pool in model.pools.items() if pool.rule is IdleRule.FULL and pool.max_replicas != 1}
        # suffix counts of services that could trigger each fixed charge
        self.el_potential = {e: [0] * (self.n + 1) for e in model.element_idle}
        self.pool_potential = {p: [0] * (self.n + 1) for p in model.pools}
        for i in range(self.n - 1, -1, -1):
            els = {el for c in model.candidates[i] for el in c.fixed}
            sites = {c.site for c in model.candidates[i]}
            for e, counts in self.el_potential.items():
                counts[i] = counts[i + 1] + (e in els)
            for p, counts in self.pool_potential.items():
                counts[i] = counts[i + 1] + (p in sites)
        self.rules = [self._symmetry_rules(k) for k in range(self.n)]
        self.floors = {key: [] for rules in self.rules for key, _ in rules}

    def _symmetry_rules(self, i: int) -> list:
        """Interchangeability classes of service ``i`` with the sites they cover.

        Two offloaded services with equal rate and demand can swap sites
        without changing any element's load when, for each site, their routes
        agree outside the elements each of them traverses anyway. Two such
        classes are used: all offload sites of services behind the same access
        node, and the sites beyond the access node for every service.
        """
        req = self.m.requests[i]
        offload = [c for c in self.m.candidates[i] if c.site != req.source]
        if not offload:
            return []
        common = set(offload[0].route)
        for c in offload[1:]:
            common &= set(c.route)
        access = self.m.topology[req.source].parent
        rules = [((access, req.rate, req.proc_demand, tuple(c.site for c in offload)), {c.site: k for k, c in enumerate(offload)})]
        deep = [(c.site, tuple(e for e in c.route if e not in common)) for c in offload]
        deep = [(site, tail) for site, tail in deep if tail]
        if deep:
            rules.append((("deep", req.rate, req.proc_demand, tuple(deep)), {site: k for k, (site, _) in enumerate(deep)}))
        return rules

    def allowed(self, i: int, c: Candidate) -> bool:
        for key, rank in self.rules[i]:
            k = rank.get(c.site)
            floor = self.floors[key]
            if k is not None and floor and k < floor[-1]:
                return False
        return True

    def feasible(self, i: int, c: Candidate) -> bool:
        if not c.fits_alone:
            return False
        rate = self.rates[i]
        for el in c.route:
            if exceeds(self.carried[el] + rate, self.m.element_capacity[el]):
                return False
        return not exceeds(self.load[c.site] + self.demands[i], self.m.pools[c.site].max_load)

    def delta(self, i: int, c: Candidate) -> float:
        d = c.linear
        for el in c.fixed:
            if self.users[el] == 0:
                d += self.m.element_idle[el]
        pool = self.m.pools[c.site]
        if pool.rule is IdleRule.FULL:
            before = replicas_needed(self.load[c.site], pool.cpu_capacity)
            after = replicas_needed(self.load[c.site] + self.demands[i], pool.cpu_capacity)
            d += (after - before) * pool.p_idle
        return d

    def apply(self, i: int, c: Candidate, sign: int) -> None:
        rate = self.rates[i] * sign
        for el in c.route:
            self.carried[el] += rate
            self.users[el] += sign
        self.load[c.site] += self.demands[i] * sign
        if sign < 0:
            # avoid drift leaving -0.0 or 1e-13 residues on emptied elements
            for el in c.route:
                if self.users[el] == 0:
                    self.carried[el] = 0.0
            if self.load[c.site] < 1e-9:
                self.load[c.site] = 0.0

    def bound(self, i: int, refund_slack: bool) -> float:
        """Lower bound on the cost of placing services ``i..n-1``.

        Extra replica idle at an active multi-replica pool is at least zero
        and at least the amortized idle of the added load minus the spare
        capacity already powered on. ``refund_slack`` picks the second form.
        """
        inf = float("inf")
        total = 0.0
        pools = self.m.pools
        if refund_slack:
            for p in self.multi:
                pool = pools[p]
                load = self.load[p]
                if load > 0:
                    slack = replicas_needed(load, pool.cpu_capacity) * pool.cpu_capacity - load
                    total -= pool.p_idle * slack / pool.cpu_capacity
        crowded: dict = {}
        for j in range(i, self.n):
            best = second = inf
            best_site = None
            for c in self.m.candidates[j]:
                if not self.allowed(j, c):
                    continue
                if not self.feasible(j, c):
                    continue
                v = c.linear
                for el in c.fixed:
                    if self.users[el] == 0:
                        v += self.m.element_idle[el] / self.el_potential[el][i]
                pool = pools[c.site]
                if pool.rule is IdleRule.FULL:
                    if c.site in self.multi:
                        if refund_slack or self.load[c.site] == 0:
                            v += pool.p_idle * self.demands[j] / pool.cpu_capacity
                    elif self.load[c.site] == 0:
                        v += pool.p_idle / self.pool_potential[c.site][i]
                if v < best:
                    best, second, best_site = v, best, c.site
                elif v < second:
                    second = v
            if best == inf:
                return inf
            total += best
            if pools[best_site].max_load != inf:
                crowded.setdefault(best_site, []).append((self.demands[j], second - best))
        for site, items in crowded.items():
            excess = sum(d for d, _ in items) - (pools[site].max_load - self.load[site])
            if excess <= pools[site].max_load * CAPACITY_RTOL:
                continue
            for d, regret in sorted(items, key=lambda t: t[1] / t[0]):
                moved = min(d, excess)
                total += regret * moved / d
                excess -= moved
                if excess <= 0:
                    break
        return total

    def run(self) -> None:
        self._dfs(0, 0.0)

    def _dfs(self, i: int, cost: float) -> None:
        self.nodes += 1
        if i == self.n:
            if cost < self.best_cost - TIE_TOL:
                self.best_cost = cost
                self.best_choice = list(self.choice)
            return
        cutoff = self.best_cost - TIE_TOL
        if cost + self.bound(i, False) >= cutoff or cost + self.bound(i, True) >= cutoff:
            return
        for c in self.m.candidates[i]:
            if not self.allowed(i, c) or not self.feasible(i, c):
                continue
            d = self.delta(i, c)
            self.apply(i, c, +1)
            self.choice[i] = c
            pushed = [key for key, rank in self.rules[i] if c.site in rank]
            for key in pushed:
                self.floors[key].append(dict(self.rules[i])[key][c.site])
            self._dfs(i + 1, cost + d)
            for key in pushed:
                self.floors[key].pop()
            self.apply(i, c, -1)
        self.choice[i] = None


def _placement_from(model: PlacementModel, sites: list[str]) -> Placement:
    assignment = {r.id: s for r, s in zip(model.requests, sites)}
    loads: dict = {}
    for r, s in zip(model.requests, sites):
        loads[s] = loads.get(s, 0.0) + r.proc_demand
    replicas = {s: replicas_needed(load, model.pools[s].cpu_capacity) for s, load in loads.items()}
    return Placement(assignment, replicas)


def solve_bnb(model: PlacementModel) -> SolveReport:
    t0 = time.perf_counter()
    if model.n_services == 0:
        return SolveReport(Placement({}, {}), PowerBreakdown({}, 0.0, 0.0, 0.0, 0.0), 0.0, OPTIMAL, 1, time.perf_counter() - t0)
    search = _Search(model)
    search.run()
    if search.best_choice is None:
        return SolveReport(None, None, None, INFEASIBLE, search.nodes, time.perf_counter() - t0)
    placement = _placement_from(model, [c.site for c in search.best_choice])
    breakdown = evaluate(model.topology, model.requests, placement, model.scenario, model.wireless)
    return SolveReport(placement, breakdown, breakdown.grand_total, OPTIMAL, search.nodes, time.perf_counter() - t0)


# exhaustive oracle -------------------------------------------------------


def brute_force(model: PlacementModel, block: int = 1 << 15) -> SolveReport:
    """Enumerate every assignment and price it directly from the device profiles.

    Independent of the branch-and-bound cost coefficients: power is recomputed
    per element from carried traffic and per pool from assigned load, with the
    minimal replica count for each load. Intended for instances of at most
    ``BRUTE_FORCE_LIMIT`` services.
    """
    if model.n_services > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} services, got {model.n_services}")
    t0 = time.perf_counter()
    if model.n_services == 0:
        return SolveReport(Placement({}, {}), PowerBreakdown({}, 0.0, 0.0, 0.0, 0.0), 0.0, OPTIMAL, 1, 0.0, "brute")
    topo = model.topology
    policy = model.scenario.idle_policy
    wl = model.wireless
    reqs = model.requests
    site_lists = [[c.site for c in cands] for cands in model.candidates]

    elements = sorted({el for s, sites in zip(reqs, site_lists) for site in sites for el in topo.route(s.source, site)})
    pools = sorted({site for sites in site_lists for site in sites})
    e_idx = {e: k for k, e in enumerate(elements)}
    p_idx = {p: k for k, p in enumerate(pools)}

    # per service: (K_s, E) traffic and (K_s, P) load contributions
    traffic = []
    loading = []
    for s, sites in zip(reqs, site_lists):
        t = np.zeros((len(sites), len(elements)))
        ld = np.zeros((len(sites), len(pools)))
        for k, site in enumerate(sites):
            for el in topo.route(s.source, site):
                t[k, e_idx[el]] = s.rate
            ld[k, p_idx[site]] = s.proc_demand
        traffic.append(t)
        loading.append(ld)

    e_cap = np.array([topo[e].network.max_bitrate for e in elements])
    e_idle = np.array([topo[e].network.p_idle for e in elements])
    e_rule = [policy.rule_for(topo[e].layer) for e in elements]
    # proportional J/bit per element, wireless interfaces at their own link distance
    e_slope = np.array(
        [
            wl.e_elec + wl.eps_amp * topo.wireless_links[e] ** wl.alpha
            if e in topo.wireless_links
            else (topo[e].network.p_max - topo[e].network.p_idle) / topo[e].network.max_bitrate
            for e in elements
        ]
    )
    full_e = np.array([r is IdleRule.FULL for r in e_rule])
    shared_e = np.array([r is IdleRule.SHARED for r in e_rule])
    p_cap = np.array([topo[p].processing.cpu_capacity for p in pools])
    p_max_rep = np.array([np.inf if topo[p].replica_count is None else topo[p].replica_count for p in pools])
    p_idle = np.array([topo[p].processing.p_idle for p in pools])
    p_slope = np.array([(topo[p].processing.p_max - topo[p].processing.p_idle) / (topo[p].processing.cpu_capacity * 1e6) for p in pools])
    rule = policy.processing

    shape = tuple(len(s) for s in site_lists)
    total = int(np.prod(shape))
    best_val = np.inf
    best_idx = -1
    for start in range(0, total, block):
        idx = np.arange(start, min(total, start + block))
        choice = np.stack(np.unravel_index(idx, shape), axis=1)
        carried = np.zeros((len(idx), len(elements)))
        load = np.zeros((len(idx), len(pools)))
        for s in range(len(reqs)):
            carried += traffic[s][choice[:, s]]
            load += loading[s][choice[:, s]]
        ok = np.all(carried <= e_cap * (1 + CAPACITY_RTOL), axis=1)
        reps = np.where(load > 0, np.maximum(1, np.ceil(load / p_cap - CAPACITY_RTOL)), 0)
        ok &= np.all(reps <= p_max_rep, axis=1)
        net = e_slope * carried
        net = net + np.where(full_e, np.where(carried > 0, e_idle, 0.0), 0.0)
        net = net + np.where(shared_e, e_idle * carried / e_cap, 0.0)
        proc = p_slope * load * 1e6
        if rule is IdleRule.FULL:
            proc = proc + reps * p_idle
        elif rule is IdleRule.SHARED:
            proc = proc + p_idle * load / p_cap
        cost = np.where(ok, net.sum(axis=1) + proc.sum(axis=1), np.inf)
        k = int(np.argmin(cost))
        if cost[k] < best_val:
            best_val = float(cost[k])
            best_idx = start + k
    elapsed = time.perf_counter() - t0
    if best_idx < 0:
        return SolveReport(None, None, None, INFEASIBLE, total, elapsed, "brute")
    choice = np.unravel_index(best_idx, shape)
    placement = _placement_from(model, [site_lists[s][int(k)] for s, k in enumerate(choice)])
    breakdown = evaluate(topo, reqs, placement, model.scenario, wl)
    return SolveReport(placement, breakdown, best_val, OPTIMAL, total, elapsed, "brute")


SOLVERS: dict[str, Callable[[PlacementModel], SolveReport]] = {"bnb": solve_bnb, "brute": brute_force}


def solve(model: PlacementModel, method: str = "bnb") -> SolveReport:
    """Solve ``model`` to optimality with a registered backend."""
    try:
        backend = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown solver {method!r}; registered: {sorted(SOLVERS)}") from None
    return backend(model)


# evaluation --------------------------------------------------------------


def evaluate(
    topology: Topology,
    requests: list[ServiceRequest],
    placement: Placement,
    scenario: Scenario,
    wireless: WirelessModel = DEFAULT_WIRELESS,
) -> PowerBreakdown:
    """Total power of ``placement``, itemised per node and split two ways."""
    policy = scenario.idle_policy
    carried: dict = {}
    loads: dict = {}
    for r in requests:
        try:
            site = placement.assignment[r.id]
        except KeyError:
            raise ValueError(f"placement does not assign {r.id}") from None
        node = topology[site]
        if node.processing is None:
            raise ValueError(f"{r.id}: {site} cannot process")
        if node.layer not in scenario.processing_layers:
            raise ValueError(f"{r.id}: layer {node.layer.name} not allowed in scenario {scenario.name}")
        if node.layer is LayerId.IoT and site != r.source:
            raise ValueError(f"{r.id}: IoT device {site} can only process its own service")
        for el in topology.route(r.source, site):
            carried[el] = carried.get(el, 0.0) + r.rate
        loads[site] = loads.get(site, 0.0) + r.proc_demand

    per_element: dict = {}
    net_total = proc_total = idle_total = prop_total = 0.0
    for el, bits in carried.items():
        node = topology[el]
        prof = node.network
        rule = policy.rule_for(node.layer)
        if exceeds(bits, prof.max_bitrate):
            raise CapacityError(el, bits, prof.max_bitrate, "bit/s")
        idle = idle_network_power(prof, bits, rule)
        if el in topology.wireless_links:
            prop = wireless_tx_power(wireless, bits, topology.wireless_links[el])
        else:
            prop = energy_per_bit(prof) * bits
        per_element[el] = per_element.get(el, 0.0) + idle + prop
        net_total += idle + prop
        idle_total += idle
        prop_total += prop
    for site, load in loads.items():
        node = topology[site]
        prof = node.processing
        reps = placement.active_replicas.get(site, replicas_needed(load, prof.cpu_capacity))
        if node.replica_count is not None and reps > node.replica_count:
            raise CapacityError(site, reps, node.replica_count, "servers")
        total = server_processing_power(prof, load, reps, policy.processing, element=site)
        idle = idle_processing_power(prof, load, reps, policy.processing)
        per_element[site] = per_element.get(site, 0.0) + total
        proc_total += total
        idle_total += idle
        prop_total += total - idle
    return PowerBreakdown(per_element, proc_total, net_total, idle_total, prop_total)


def layer_counts(topology: Topology, placement: Placement) -> dict:
    counts = {layer: 0 for layer in (LayerId.IoT, LayerId.AccessFog, LayerId.EdgeFog, LayerId.CloudDC)}
    for site in placement.assignment.values():
        counts[topology[site].layer] += 1
    return counts
