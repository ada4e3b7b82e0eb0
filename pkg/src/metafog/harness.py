"""Experiment driver: scenario assembly, execution, aggregation and sweeps.

A scenario wires the engine, world, topology, workload generators and ledger
together for one (config, policy, seed) triple and runs to the horizon. Every
task flows through three events: uplink transfer-complete, service-complete,
downlink transfer-complete; its latency record is emitted when the downlink
lands back at the device. Sweeps run one independent scenario per
(value, policy, replication) and order results deterministically, so serial
and parallel execution produce identical output.
"""

from __future__ import annotations

import json
from array import array
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import infrastructure as infra
from .config import config_digest, resolve_config
from .engine import (
    EV_BLOCK_FORMED,
    EV_MESSAGE_SEND,
    EV_MOVEMENT_TICK,
    EV_SERVICE_COMPLETE,
    EV_TASK_ARRIVAL,
    EV_TRANSFER_COMPLETE,
    EV_TX_SUBMIT,
    US_PER_S,
    Engine,
    RngStream,
    STREAM_MESSAGING,
    STREAM_MOVEMENT,
    STREAM_SERVICE,
    STREAM_TRANSACTIONS,
    ceil_div,
    ms_to_us,
)
from .errors import ConfigError
from .infrastructure import ComputeQueue, LatencyRecord, TierParams, LinkParams
from .ledger import Chain, Transaction, validate_transaction
from .stats import percentile
from .workload import (
    KIND_LABELS,
    Policy,
    SYSTEM_OWNER,
    Task,
    TaskKind,
    place,
)
from .world import World, WorldGrid


class KindStats(NamedTuple):
    count: int
    mean_us: int | None
    p50_us: int | None
    p95_us: int | None
    p99_us: int | None


@dataclass
class ScenarioResult:
    """Aggregated outcome of one scenario run.

    stats maps 'overall' and each task-kind label to its KindStats; extras
    carries the reconciliation counters (conservation, skips, ledger state)
    that go into the run metadata file rather than the CSV.
    """

    scenario_id: str
    policy: str
    param: str
    value: float
    replication: int
    seed: int
    config_digest: str
    stats: dict[str, KindStats]
    extras: dict = field(default_factory=dict)


class TaskPipeline:
    """Stages placed tasks through the three-event lifecycle and records latency."""

    __slots__ = (
        "engine", "topo", "policy", "warmup_us", "record_sink", "on_validated",
        "node_index", "node_ids", "queues", "capacities",
        "totals", "generated", "completed",
        "records_emitted", "tasks_generated",
    )

    def __init__(self, engine: Engine, topo: infra.Topology, policy: Policy,
                 warmup_us: int = 0, record_sink: Callable | None = None):
        self.engine = engine
        self.topo = topo
        self.policy = policy
        self.warmup_us = warmup_us
        self.record_sink = record_sink
        self.on_validated = None  # set by the runner: called (tx, now_us) after validation
        self.node_ids = sorted(topo.nodes_by_id)
        self.node_index = {nid: i for i, nid in enumerate(self.node_ids)}
        self.queues = [ComputeQueue(nid, topo.nodes_by_id[nid].capacity_mips)
                       for nid in self.node_ids]
        self.capacities = [q.capacity_mips for q in self.queues]
        self.totals = [array("q") for _ in TaskKind]
        self.generated = [0] * len(TaskKind)
        self.completed = [0] * len(TaskKind)
        self.records_emitted = 0
        self.tasks_generated = 0
        engine.on(EV_TRANSFER_COMPLETE, self._on_transfer_complete)
        engine.on(EV_SERVICE_COMPLETE, self._on_service_complete)

    def submit(self, task_id: int, kind: int, owner: int, server_idx: int,
               created_us: int, uplink_us: int, service_us: int, downlink_us: int,
               tx: Transaction | None = None) -> None:
        """Dispatch a placed task: the uplink transfer starts at created_us."""
        self.tasks_generated += 1
        self.generated[kind] += 1
        self.engine.schedule(
            created_us + uplink_us, EV_TRANSFER_COMPLETE,
            (0, task_id, kind, owner, server_idx, created_us, uplink_us,
             service_us, downlink_us, tx),
        )

    def dispatch_task(self, task: Task, device_id: str, home_fog: str | None = None,
                      tx: Transaction | None = None) -> str:
        """Place and submit a fully described task; returns the serving node id."""
        server = place(task, self.policy, self.topo, home_fog)
        sidx = self.node_index[server]
        uplink = self.topo.transfer_us(device_id, server, task.upload_bytes)
        downlink = self.topo.transfer_us(server, device_id, task.download_bytes)
        service = infra.service_time_us(task.length_mi, self.capacities[sidx])
        self.submit(task.task_id, int(task.kind), task.owner, sidx,
                    task.created_us, uplink, service, downlink, tx)
        return server

    # Event payload layout (tuples keep the hot path cheap):
    #   stage 0, uplink done:  (0, tid, kind, owner, sidx, created, uplink, service, downlink, tx)
    #   stage 1, downlink done: (1, tid, kind, owner, sidx, created, uplink, wait, service, downlink, tx)

    def _on_transfer_complete(self, now: int, p) -> None:
        if p[0] == 0:
            queue = self.queues[p[4]]
            service = p[7]
            start = queue.busy_until_us
            if now > start:
                start = now
            completion = start + service
            queue.busy_until_us = completion
            self.engine.schedule(
                completion, EV_SERVICE_COMPLETE,
                (1, p[1], p[2], p[3], p[4], p[5], p[6], start - now, service, p[8], p[9]),
            )
        else:
            self._finish(now, p)

    def _on_service_complete(self, now: int, p) -> None:
        # service done; start the downlink transfer
        self.engine.schedule(now + p[9], EV_TRANSFER_COMPLETE, p)

    def _finish(self, now: int, p) -> None:
        kind = p[2]
        created = p[5]
        total = p[6] + p[7] + p[8] + p[9]
        self.completed[kind] += 1
        self.records_emitted += 1
        if created >= self.warmup_us:
            self.totals[kind].append(total)
        if self.record_sink is not None:
            self.record_sink(LatencyRecord(
                p[1], kind, p[3], self.policy.value, self.node_ids[p[4]],
                created, p[6], p[7], p[8], p[9], total,
            ))
        tx = p[10]
        if tx is not None and self.on_validated is not None:
            self.on_validated(tx, now)

    def in_flight(self) -> int:
        return self.tasks_generated - self.records_emitted

    def pending_task_events(self) -> int:
        """Independent in-flight measurement: task-stage events still queued."""
        return sum(1 for e in self.engine._heap
                   if e[2] == EV_TRANSFER_COMPLETE or e[2] == EV_SERVICE_COMPLETE)


def _tier_params(cfg: dict) -> TierParams:
    topo_cfg = cfg["topology"]
    links = topo_cfg["links"]
    return TierParams(
        device_mips=topo_cfg["device_mips"],
        fog_mips=topo_cfg["fog_mips"],
        edge_mips=topo_cfg["edge_mips"],
        cloud_mips=topo_cfg["cloud_mips"],
        device_fog=LinkParams(**links["device_fog"]),
        fog_edge=LinkParams(**links["fog_edge"]),
        edge_cloud=LinkParams(**links["edge_cloud"]),
    )


class ScenarioRunner:
    """One simulation run: builds world, topology and workload, then executes."""

    def __init__(self, cfg: dict, policy: Policy, seed: int,
                 record_sink: Callable | None = None):
        self.cfg = cfg
        self.policy = policy
        self.seed = seed

        world_cfg = cfg["world"]
        wl = cfg["workload"]
        exp = cfg["experiment"]
        self.n_users = wl["user_count"]
        self.horizon_us = ms_to_us(exp["horizon_ms"])
        self.warmup_us = ms_to_us(exp["warmup_ms"])
        self.tick_us = ms_to_us(world_cfg["movement_tick_ms"])
        self.dt_s = self.tick_us / US_PER_S
        self.radius = world_cfg["proximity_radius"]

        self.streams = {
            name: RngStream(seed, name)
            for name in (STREAM_MOVEMENT, STREAM_MESSAGING, STREAM_TRANSACTIONS, STREAM_SERVICE)
        }

        self.grid = WorldGrid(world_cfg["width"], world_cfg["height"],
                              world_cfg["regions_x"], world_cfg["regions_y"],
                              world_cfg["cell"])
        self.world = World(self.grid, self.n_users, world_cfg["avatar_speed"],
                           self.streams[STREAM_MOVEMENT])

        topo, devices, fogs = infra.build_user_topology(
            self.world.regions_of_users(), self.grid.all_regions(), _tier_params(cfg),
            edges_per_region=cfg["topology"]["edges_per_region"],
            devices_per_fog=cfg["topology"]["devices_per_fog"],
        )
        self.topo = topo
        self.device_of_user = devices
        self.home_fog_of_user = fogs
        for user, avatar in enumerate(self.world.avatars):
            avatar.home_fog = fogs[user]

        self.engine = Engine()
        self.pipeline = TaskPipeline(self.engine, topo, policy, self.warmup_us, record_sink)
        self.pipeline.on_validated = self._tx_validated

        self.chain = Chain()
        self.batch_size = cfg["ledger"]["batch_size"]
        self.tx_amount_max = cfg["ledger"]["tx_amount_max"]
        self.messages_sent = 0
        self.messages_skipped = 0
        self.tx_submitted = 0
        self._next_task_id = 0
        self._next_asset_id = 0

        self._precompute()
        self._register_handlers()
        self._prime_events()

    # -- setup ------------------------------------------------------------

    def _precompute(self) -> None:
        """Resolve per-user servers, transfer times and service times up front.

        Navigation and collision tasks always go to the same node for a given
        user and policy, so the movement-tick handler only does integer work.
        """
        wl = self.cfg["workload"]
        profiles = wl["profiles"]
        topo = self.topo
        index = self.pipeline.node_index
        caps = self.pipeline.capacities
        cloud_idx = index[topo.cloud_id]

        nav = profiles["spatial_navigation"]
        coll = profiles["collision_detection"]
        self._nav_len = nav["length_mi"]
        self._coll_base_num = coll["base_length_mi"] * 1_000_000
        self._coll_per_num = coll["per_neighbor_mi"] * 1_000_000

        # Navigation and collision tasks of a user always land on the same
        # node, so resolve that node through place() once and cache the rest.
        self._nav_server = [0] * self.n_users
        self._nav_service = [0] * self.n_users
        self._nav_up = [0] * self.n_users
        self._nav_down = [0] * self.n_users
        self._coll_up = [0] * self.n_users
        self._coll_down = [0] * self.n_users
        for u in range(self.n_users):
            dev = self.device_of_user[u]
            probe = Task(-1, TaskKind.SPATIAL_NAVIGATION, u, nav["length_mi"],
                         nav["upload_bytes"], nav["download_bytes"], 0)
            server = place(probe, self.policy, topo, self.home_fog_of_user[u])
            sidx = index[server]
            self._nav_server[u] = sidx
            self._nav_service[u] = infra.service_time_us(nav["length_mi"], caps[sidx])
            self._nav_up[u] = topo.transfer_us(dev, server, nav["upload_bytes"])
            self._nav_down[u] = topo.transfer_us(server, dev, nav["download_bytes"])
            self._coll_up[u] = topo.transfer_us(dev, server, coll["upload_bytes"])
            self._coll_down[u] = topo.transfer_us(server, dev, coll["download_bytes"])

        social = profiles["social_interaction"]
        txv = profiles["transaction_validation"]
        self._social_profile = (social["length_mi"], social["upload_bytes"], social["download_bytes"])
        self._txv_profile = (txv["length_mi"], txv["upload_bytes"], txv["download_bytes"])

        uni = profiles["universe_simulation"]
        self._universe_period_us = ms_to_us(uni["period_ms"])
        self._universe_profile = (uni["length_mi"], uni["upload_bytes"], uni["download_bytes"])
        self._cloud_idx = cloud_idx

        self._msg_rate_per_ms = wl["message_rate_per_user_per_s"] / 1000.0
        self._tx_rate_per_ms = wl["tx_rate_per_user_per_s"] / 1000.0

    def _register_handlers(self) -> None:
        eng = self.engine
        eng.on(EV_MOVEMENT_TICK, self._on_movement_tick)
        eng.on(EV_MESSAGE_SEND, self._on_message_send)
        eng.on(EV_TX_SUBMIT, self._on_tx_submit)
        eng.on(EV_TASK_ARRIVAL, self._on_task_arrival)
        eng.on(EV_BLOCK_FORMED, self._on_block_formed)

    def _prime_events(self) -> None:
        n = self.n_users
        tick = self.tick_us
        for u in range(n):
            # stagger tick phases across users so arrivals are not lockstep bursts
            phase = (u * tick) // n
            self.engine.schedule(phase + tick, EV_MOVEMENT_TICK, u)
        if self._msg_rate_per_ms > 0:
            msg_stream = self.streams[STREAM_MESSAGING]
            for u in range(n):
                self.engine.schedule(msg_stream.exponential_us(self._msg_rate_per_ms),
                                     EV_MESSAGE_SEND, u)
        if self._tx_rate_per_ms > 0 and n >= 2:
            tx_stream = self.streams[STREAM_TRANSACTIONS]
            for u in range(n):
                self.engine.schedule(tx_stream.exponential_us(self._tx_rate_per_ms),
                                     EV_TX_SUBMIT, u)
        self.engine.schedule(self._universe_period_us, EV_TASK_ARRIVAL, None)

    # -- event handlers ----------------------------------------------------

    def _on_movement_tick(self, now: int, user: int) -> None:
        world = self.world
        world.tick_avatar(user, self.dt_s)
        candidates = world.collision_candidates(user)
        pipeline = self.pipeline
        tid = self._next_task_id
        self._next_task_id = tid + 2
        sidx = self._nav_server[user]
        pipeline.submit(tid, 0, user, sidx, now,
                        self._nav_up[user], self._nav_service[user], self._nav_down[user])
        coll_service = ceil_div(self._coll_base_num + self._coll_per_num * candidates,
                                pipeline.capacities[sidx])
        pipeline.submit(tid + 1, 1, user, sidx, now,
                        self._coll_up[user], coll_service, self._coll_down[user])
        self.engine.schedule(now + self.tick_us, EV_MOVEMENT_TICK, user)

    def _on_message_send(self, now: int, user: int) -> None:
        stream = self.streams[STREAM_MESSAGING]
        neighbors = self.world.nearby_users(user, self.radius)
        if neighbors:
            stream.randrange(len(neighbors))  # pick the recipient
            self.messages_sent += 1
            length, up_bytes, down_bytes = self._social_profile
            self._submit_region_task(TaskKind.SOCIAL_INTERACTION, user, now,
                                     length, up_bytes, down_bytes)
        else:
            self.messages_skipped += 1
        self.engine.schedule(now + stream.exponential_us(self._msg_rate_per_ms),
                             EV_MESSAGE_SEND, user)

    def _on_tx_submit(self, now: int, user: int) -> None:
        stream = self.streams[STREAM_TRANSACTIONS]
        seller = stream.randrange(self.n_users - 1)
        if seller >= user:
            seller += 1
        amount = 1 + stream.randrange(self.tx_amount_max)
        tx = Transaction(self.tx_submitted, user, seller, self._next_asset_id, amount, now)
        self._next_asset_id += 1
        self.tx_submitted += 1
        validate_transaction(tx)
        length, up_bytes, down_bytes = self._txv_profile
        self._submit_region_task(TaskKind.TRANSACTION_VALIDATION, user, now,
                                 length, up_bytes, down_bytes, tx)
        self.engine.schedule(now + stream.exponential_us(self._tx_rate_per_ms),
                             EV_TX_SUBMIT, user)

    def _submit_region_task(self, kind: TaskKind, user: int, now: int,
                            length_mi: int, up_bytes: int, down_bytes: int,
                            tx: Transaction | None = None) -> None:
        tid = self._next_task_id
        self._next_task_id = tid + 1
        task = Task(tid, kind, user, length_mi, up_bytes, down_bytes, now,
                    region=self.world.avatars[user].region)
        self.pipeline.dispatch_task(task, self.device_of_user[user], tx=tx)

    def _on_task_arrival(self, now: int, payload) -> None:
        # periodic universe-simulation task, originating at the cloud itself
        tid = self._next_task_id
        self._next_task_id = tid + 1
        length, up_bytes, down_bytes = self._universe_profile
        task = Task(tid, TaskKind.UNIVERSE_SIMULATION, SYSTEM_OWNER,
                    length, up_bytes, down_bytes, now)
        self.pipeline.dispatch_task(task, self.topo.cloud_id)
        self.engine.schedule(now + self._universe_period_us, EV_TASK_ARRIVAL, None)

    def _tx_validated(self, tx: Transaction, now: int) -> None:
        self.chain.add_validated(tx)
        if len(self.chain.pending) >= self.batch_size:
            self.engine.schedule(now, EV_BLOCK_FORMED, None)

    def _on_block_formed(self, now: int, _payload) -> None:
        while self.chain.form_block(self.batch_size, now) is not None:
            pass

    # -- execution ----------------------------------------------------------

    def run(self) -> None:
        self.engine.run_until(self.horizon_us)
        self.chain.flush(self.horizon_us)

    def collect(self, scenario_id: str, param: str, value, replication: int) -> ScenarioResult:
        pipeline = self.pipeline
        pending = pipeline.pending_task_events()
        in_flight = pipeline.in_flight()
        if pending != in_flight:
            raise AssertionError(
                f"conservation violated: {in_flight} tasks unaccounted but "
                f"{pending} task events queued"
            )
        stats: dict[str, KindStats] = {"overall": _kind_stats(_concat(pipeline.totals))}
        for kind in TaskKind:
            stats[KIND_LABELS[kind]] = _kind_stats(
                np.sort(np.frombuffer(pipeline.totals[kind], dtype=np.int64))
                if len(pipeline.totals[kind]) else np.empty(0, dtype=np.int64)
            )
        extras = {
            "tasks_generated": pipeline.tasks_generated,
            "records_emitted": pipeline.records_emitted,
            "in_flight_at_horizon": in_flight,
            "generated_by_kind": {KIND_LABELS[k]: pipeline.generated[k] for k in TaskKind},
            "completed_by_kind": {KIND_LABELS[k]: pipeline.completed[k] for k in TaskKind},
            "messages_sent": self.messages_sent,
            "messages_skipped_no_neighbor": self.messages_skipped,
            "tx_submitted": self.tx_submitted,
            "blocks_formed": len(self.chain.blocks),
            "chain_tx_count": sum(len(b.txs) for b in self.chain.blocks),
            "chain_valid": self.chain.verify(),
            "events_scheduled": self.engine.scheduled_count,
            "events_dispatched": self.engine.dispatched_count,
            "horizon_ms": self.cfg["experiment"]["horizon_ms"],
            "warmup_ms": self.cfg["experiment"]["warmup_ms"],
            "user_count": self.n_users,
        }
        return ScenarioResult(
            scenario_id=scenario_id,
            policy=self.policy.value,
            param=param,
            value=value,
            replication=replication,
            seed=self.seed,
            config_digest=config_digest(self.cfg),
            stats=stats,
            extras=extras,
        )


def _concat(totals: list[array]) -> np.ndarray:
    parts = [np.frombuffer(a, dtype=np.int64) for a in totals if len(a)]
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(parts))


def _kind_stats(sorted_totals: np.ndarray) -> KindStats:
    n = int(sorted_totals.size)
    if n == 0:
        return KindStats(0, None, None, None, None)
    total = int(sorted_totals.sum())
    mean_us = (total + n // 2) // n
    return KindStats(
        n, mean_us,
        int(percentile(sorted_totals, 50)),
        int(percentile(sorted_totals, 95)),
        int(percentile(sorted_totals, 99)),
    )


def run_scenario(config: dict | None, policy: Policy | str, seed: int, *,
                 record_sink: Callable | None = None, param: str = "none",
                 value: float | None = None, replication: int = 0) -> ScenarioResult:
    """Run one scenario and aggregate its latency records.

    config may be a partial override dict (merged into the defaults) or None
    for the defaults themselves. The record_sink, when given, receives every
    LatencyRecord as it is emitted.
    """
    cfg = resolve_config(config)
    pol = Policy.parse(policy) if isinstance(policy, str) else policy
    runner = ScenarioRunner(cfg, pol, seed, record_sink)
    runner.run()
    if value is None:
        value = cfg["workload"]["user_count"]
    scenario_id = f"{param}={_fmt_value(value)}/{pol.value}/rep{replication}"
    return runner.collect(scenario_id, param, value, replication)


def _fmt_value(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


SWEEP_PARAMS = ("user_count", "tx_rate")


def _scenario_overrides(cfg: dict, param: str, value) -> dict:
    """Per-scenario config with the swept parameter applied."""
    scenario_cfg = json.loads(json.dumps(cfg))  # deep copy, JSON-typed by construction
    if param == "user_count":
        scenario_cfg["workload"]["user_count"] = int(value)
    elif param == "tx_rate":
        # swept value is the aggregate transaction arrival rate per second,
        # spread uniformly over the fixed user population
        users = scenario_cfg["workload"]["user_count"]
        scenario_cfg["workload"]["tx_rate_per_user_per_s"] = value / users
    else:
        raise ConfigError(f"unknown sweep parameter {param!r} (expected one of {SWEEP_PARAMS})")
    return scenario_cfg


def _sweep_worker(args: tuple) -> ScenarioResult:
    scenario_cfg, policy_value, seed, param, value, replication = args
    return run_scenario(scenario_cfg, Policy(policy_value), seed,
                        param=param, value=value, replication=replication)


def sweep(config: dict | None, param: str, values: list | None = None,
          replications: int | None = None, *, parallel: bool = False,
          max_workers: int | None = None) -> list[ScenarioResult]:
    """Run both policies over every swept value, replications times each.

    Scenario seeds are base_seed + replication index. Results are ordered by
    (value, policy, replication) no matter how execution was scheduled, and a
    parallel run returns exactly what a serial run returns.
    """
    cfg = resolve_config(config)
    exp = cfg["experiment"]
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {param!r} (expected one of {SWEEP_PARAMS})")
    if values is None:
        values = exp["user_count_sweep"] if param == "user_count" else exp["tx_rate_sweep"]
    if replications is None:
        replications = exp["replications"]
    if replications < 1:
        raise ConfigError("replications must be >= 1")

    jobs = []
    for value in values:
        scenario_cfg = _scenario_overrides(cfg, param, value)
        for policy in (Policy.CLOUD_ONLY, Policy.FOG_EDGE):
            for rep in range(replications):
                jobs.append((scenario_cfg, policy.value, exp["base_seed"] + rep,
                             param, value, rep))

    if parallel:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    results.sort(key=lambda r: (r.value, r.policy, r.replication))
    return results
