"""Discrete-event simulation core.

One heap-ordered event loop per run drives traffic generation, per-node queue
service, the contention MAC draws, hello exchange, periodic reclustering, and
metric sampling. Everything stochastic flows from named child generators of
the run seed, so a run replays bit-identically.

Protocols: "qqmr" learns per-class Q-policies online (one Bellman update per
acknowledged or failed hop, plus one backup retry on main-path failure),
"greedy" forwards to the neighbor strictly closest to the sink and drops at
dead ends.
"""

from __future__ import annotations

import heapq
from dataclasses import replace
from random import Random

import numpy as np

from .channel import ChannelModel, airtime
from .clustering import normalize_features, run_wfcm
from .config import SimConfig
from .energy import EnergyLedger, rx_energy, tx_energy
from .hello import HelloState, NeighborTable, build_hello
from .metrics import MetricsReport, compute_metrics, track_convergence
from .packets import DataPacket, PacketClass, frame_packet, verify_checksum
from .queues import ACCEPTED, MultiQueueBuffer
from .routing import (PolicyTable, decide_route, eligible_actions,
                      epsilon_for_episode, error_rate, immediate_reward,
                      normalize_context, q_update)
from .topology import build_topology

# Fixed processing order for simultaneous events.
EV_KILL = 0
EV_HELLO = 1
EV_GENERATE = 2
EV_SERVICE = 3
EV_RX = 4
EV_ACK = 5
EV_TIMEOUT = 6
EV_REFRESH = 7
EV_RECLUSTER = 8
EV_SAMPLE = 9

DROP_OVERFLOW = "overflow"
DROP_NO_ROUTE = "no_route"
DROP_CORRUPT = "corrupt"
DROP_LINK = "link_loss"
DROP_TTL = "ttl"
DROP_ENERGY = "energy"

FAIL_TO_CAUSE = {"collision": DROP_LINK, "corrupt": DROP_CORRUPT,
                 "overflow": DROP_OVERFLOW, "dead": DROP_LINK,
                 "ack_lost": DROP_LINK}


class InvariantError(RuntimeError):
    """A run violated an accounting or conservation invariant."""


class PacketRec:
    """Runtime state of one generated packet (one episode)."""

    __slots__ = ("pid", "cls", "penum", "src", "t_gen", "hops", "visited",
                 "reward_sum", "done", "frame")

    def __init__(self, pid, cls, src, t_gen):
        self.pid = pid
        self.cls = cls
        self.penum = PacketClass(cls)
        self.src = src
        self.t_gen = t_gen
        self.hops = 0
        self.visited = {src}
        self.reward_sum = 0.0
        self.done = False
        self.frame = None


class TxRec:
    """One transmission attempt awaiting its ACK."""

    __slots__ = ("pkt", "sender", "target", "backup", "main_target", "attempt",
                 "t_start", "ctx", "collided", "corrupt_bit", "acked", "fail")

    def __init__(self, pkt, sender, target, backup, main_target, attempt,
                 t_start, ctx):
        self.pkt = pkt
        self.sender = sender
        self.target = target
        self.backup = backup
        self.main_target = main_target
        self.attempt = attempt
        self.t_start = t_start
        self.ctx = ctx
        self.collided = False
        self.corrupt_bit = None
        self.acked = False
        self.fail = "collision"


class NodeState:
    __slots__ = ("nid", "is_sink", "alive", "queue", "table", "hello",
                 "memberships", "busy_until", "service_pending",
                 "backlogged_nbrs", "p_sent", "p_lost", "p_received",
                 "p_corrupt")

    def __init__(self, nid, is_sink, cfg):
        self.nid = nid
        self.is_sink = is_sink
        self.alive = True
        self.queue = None if is_sink else MultiQueueBuffer(cfg)
        self.table = NeighborTable(nid, cfg.expiry_factor * cfg.hello_interval,
                                   cfg.link_delay_smoothing)
        self.hello = HelloState()
        self.memberships = (1.0, 1.0, 1.0) if is_sink else (1 / 3, 1 / 3, 1 / 3)
        self.busy_until = 0.0
        self.service_pending = False
        self.backlogged_nbrs = 0
        self.p_sent = 0
        self.p_lost = 0
        self.p_received = 0
        self.p_corrupt = 0


class SimEngine:
    """One simulation run. Construct, then call run() exactly once."""

    def __init__(self, cfg: SimConfig, protocol: str,
                 fixed_source: int | None = None,
                 fixed_class: int | None = None,
                 max_episodes: int | None = None):
        if protocol not in ("qqmr", "greedy"):
            raise ValueError(f"unknown protocol {protocol!r}")
        cfg.validate()
        self.cfg = cfg
        self.protocol = protocol
        self.fixed_source = fixed_source
        self.fixed_class = fixed_class
        self.max_episodes = max_episodes

        self.topo = build_topology(cfg)
        self.sink_id = self.topo.sink_id
        self.positions = {site.id: site.position for site in self.topo.sites}
        sensor_ids = [s.id for s in self.topo.sites if not s.is_sink]
        self.ledger = EnergyLedger(sensor_ids, cfg.initial_energy)

        master = Random(f"{cfg.rng_seed}|{protocol}|engine")
        self.rng_traffic = Random(master.getrandbits(63))
        self.rng_channel = Random(master.getrandbits(63))
        self.rng_policy = Random(master.getrandbits(63))
        self.rng_cluster = Random(master.getrandbits(63))
        self.rng_hello = Random(master.getrandbits(63))
        self.channel = ChannelModel(cfg, self.rng_channel)

        self.nodes = {site.id: NodeState(site.id, site.is_sink, cfg)
                      for site in self.topo.sites}
        self.tables = {1: PolicyTable(1), 2: PolicyTable(2), 3: PolicyTable(3)}

        self.heap = []
        self._seq = 0
        self._now = 0.0
        self.event_log = []
        self.samples = []
        self.packets = []
        self.generated = 0
        self.delivered = 0
        self.live_count = 0
        self.drops = {}
        self.hello_tx = 0
        self.hello_rx = 0
        self.ack_tx = 0
        self.data_tx = 0
        self._episode_base = 0
        self._deaths = 0
        self._localmin_cache = {}
        self._ran = False

        self.air_data = airtime(cfg.packet_size, cfg.bit_rate)
        self.air_ack = airtime(cfg.ack_size, cfg.bit_rate)
        self.frame_bits = (cfg.packet_size + 13) * 8
        self._mix_cum = (cfg.traffic_mix[0],
                         cfg.traffic_mix[0] + cfg.traffic_mix[1])

    # -- scheduling ------------------------------------------------------------

    def _push(self, t, rank, payload):
        self._seq += 1
        heapq.heappush(self.heap, (t, rank, self._seq, payload))

    def schedule_kill(self, t: float, nid: int):
        """Script a node failure at time t (test and scenario hook)."""
        self._push(t, EV_KILL, nid)

    # -- node helpers ----------------------------------------------------------

    def _mark_backlog_transition(self, node, before, after):
        if (before > 0) == (after > 0):
            return
        delta = 1 if after > 0 else -1
        nodes = self.nodes
        for j, _d in self.topo.adjacency[node.nid]:
            nodes[j].backlogged_nbrs += delta

    def _enqueue(self, node, pkt) -> bool:
        before = node.queue.backlog()
        ok = node.queue.enqueue(pkt, pkt.penum) == ACCEPTED
        if ok:
            self._mark_backlog_transition(node, before, before + 1)
            if not node.service_pending:
                node.service_pending = True
                self._push(max(self._now, node.busy_until), EV_SERVICE,
                           node.nid)
        return ok

    def _debit(self, node, amount, kind, t) -> bool:
        """Spend energy at a sensor; a node hitting zero dies in place."""
        if node.is_sink:
            return True
        ok = self.ledger.debit(node.nid, amount, kind, t)
        if not ok and node.alive:
            self._kill(node, t)
        return ok

    def _kill(self, node, t):
        node.alive = False
        self._deaths += 1
        if node.queue is not None:
            before = node.queue.backlog()
            while True:
                pkt = node.queue.dequeue_next()
                if pkt is None:
                    break
                self._drop(pkt, DROP_ENERGY, t)
            self._mark_backlog_transition(node, before, 0)

    def _drop(self, pkt, cause, t):
        if pkt.done:
            return
        pkt.done = True
        self.live_count -= 1
        self.drops[cause] = self.drops.get(cause, 0) + 1
        self.event_log.append((t, "drop", pkt.pid, (cause, pkt.cls)))

    def _is_local_min(self, j) -> bool:
        if self._deaths:
            nodes = self.nodes
            return self.topo.is_local_minimum(j, lambda k: nodes[k].alive)
        v = self._localmin_cache.get(j)
        if v is None:
            v = self.topo.is_local_minimum(j, lambda k: True)
            self._localmin_cache[j] = v
        return v

    def node_xi(self, node) -> float:
        return error_rate(node.p_sent, node.p_lost, node.p_received,
                          node.p_corrupt)

    def node_delay(self, node) -> float:
        """Analytic per-hop delay through this node right now: queue drain
        plus expected contention, ACK turnaround, and serialization."""
        contention = self.cfg.contention_base * (1.0 + node.backlogged_nbrs)
        unit = contention + self.air_data
        occ = 0 if node.queue is None else node.queue.backlog()
        return occ * unit + contention + self.cfg.ack_turnaround + self.air_data

    def link_delay(self, sender_id: int, receiver_id: int,
                   measured_l2: float | None = None) -> float:
        """Forwarding delay estimate through receiver. measured_l2 substitutes
        an observed send-to-ack gap for the analytic contention term."""
        if not self.topo.link_exists(sender_id, receiver_id):
            raise KeyError(f"no link {sender_id}->{receiver_id}")
        node = self.nodes[receiver_id]
        if measured_l2 is None:
            return self.node_delay(node)
        unit = (self.cfg.contention_base * (1.0 + node.backlogged_nbrs)
                + self.air_data)
        occ = 0 if node.queue is None else node.queue.backlog()
        return occ * unit + measured_l2 + self.air_data

    def _raw_context(self, candidate_ids):
        cfg = self.cfg
        out = {}
        for j in candidate_ids:
            nj = self.nodes[j]
            if nj.is_sink:
                e = cfg.initial_energy
                f = float(cfg.buffer_capacity)
            else:
                e = self.ledger.residual[j]
                f = float(nj.queue.free_space())
            out[j] = (self.node_delay(nj), self.node_xi(nj), e, f)
        return out

    # -- run -------------------------------------------------------------------

    def run(self) -> MetricsReport:
        if self._ran:
            raise RuntimeError("engine already ran")
        self._ran = True
        cfg = self.cfg
        self._now = 0.0

        if self.protocol == "qqmr" and cfg.warmup_episodes > 0:
            self._warmup()

        for site in self.topo.sites:
            # Bootstrap discovery round: every node announces itself at t=0
            # so the first data packets do not find empty neighbor tables.
            # The periodic cycle keeps per-node jitter.
            self._push(0.0, EV_HELLO, site.id)
            jitter = max(self.rng_hello.random(), 1e-9) * cfg.hello_interval
            self._push(jitter, EV_HELLO, site.id)
            if site.is_sink:
                continue
            if self.fixed_source is None or site.id == self.fixed_source:
                gap = self.rng_traffic.expovariate(cfg.send_rate)
                self._push(gap, EV_GENERATE, site.id)
            self._push(cfg.queue_update_interval, EV_REFRESH, site.id)
        if self.protocol == "qqmr":
            self._push(cfg.cluster_interval, EV_RECLUSTER, None)
        self._push(cfg.metric_interval, EV_SAMPLE, None)

        heap = self.heap
        duration = cfg.sim_duration
        while heap:
            t, rank, _seq, payload = heapq.heappop(heap)
            if t > duration:
                break
            self._now = t
            if rank == EV_SERVICE:
                self._on_service(t, payload)
            elif rank == EV_RX:
                self._on_rx(t, payload)
            elif rank == EV_ACK:
                self._on_ack(t, payload)
            elif rank == EV_TIMEOUT:
                self._on_timeout(t, payload)
            elif rank == EV_GENERATE:
                self._on_generate(t, payload)
            elif rank == EV_HELLO:
                self._on_hello(t, payload)
            elif rank == EV_REFRESH:
                self._on_refresh(t, payload)
            elif rank == EV_RECLUSTER:
                self._on_recluster(t)
            elif rank == EV_SAMPLE:
                self._on_sample(t)
            elif rank == EV_KILL:
                self._on_kill(t, payload)

        self.event_log.append((duration, "energy_total", "net",
                               (self.ledger.total_consumed(),)))
        self._check_invariants(duration)
        return self._build_report()

    def _warmup(self):
        """Pre-train each class policy to its fixed point on the initial
        static context snapshot.

        Sampled episodes converge far too slowly on a few hundred states to
        be a usable starting policy, so the warm start solves the Bellman
        recursion directly by synchronous value iteration over the same
        static rewards. The warmup_episodes count still offsets the epsilon
        schedule, so the live run starts at the exploration level a policy
        trained for that many episodes would use.
        """
        cfg = self.cfg
        adjacency = {i: sorted(j for j, _d in adj)
                     for i, adj in self.topo.adjacency.items()}
        ctx_cache = {}

        def reward_fn(p, s, a):
            if s not in ctx_cache:
                ctx_cache[s] = normalize_context(
                    self._raw_context(adjacency[s]))
            ctx = ctx_cache[s][a]
            at_sink = a == self.sink_id
            local_min = (not at_sink) and self._is_local_min(a)
            u = self.nodes[s].memberships[p - 1]
            return immediate_reward(p, u, ctx, at_sink, local_min)

        src_ids, tgt_ids, seg_starts = [], [], []
        states = sorted(s for s in adjacency if s != self.sink_id
                        and adjacency[s])
        for s in states:
            seg_starts.append(len(src_ids))
            for a in adjacency[s]:
                src_ids.append(s)
                tgt_ids.append(a)
        if not src_ids:
            self._episode_base = cfg.warmup_episodes
            return
        tgt = np.array(tgt_ids, dtype=np.int64)
        seg = np.array(seg_starts, dtype=np.int64)
        state_arr = np.array(states, dtype=np.int64)
        n_ids = self.sink_id + 1
        terminal = tgt == self.sink_id

        for p in (1, 2, 3):
            r = np.array([reward_fn(p, s, a)
                          for s, a in zip(src_ids, tgt_ids)])
            q = np.zeros(len(src_ids))
            best = np.zeros(n_ids)
            for _sweep in range(200):
                q_new = r + cfg.gamma * np.where(terminal, 0.0, best[tgt])
                best_new = np.zeros(n_ids)
                best_new[state_arr] = np.maximum.reduceat(q_new, seg)
                delta = float(np.max(np.abs(q_new - q)))
                q, best = q_new, best_new
                if delta < 1e-9:
                    break
            table = self.tables[p]
            for idx, (s, a) in enumerate(zip(src_ids, tgt_ids)):
                table.set(s, a, float(q[idx]))
        self._episode_base = cfg.warmup_episodes

    # -- event handlers --------------------------------------------------------

    def _on_kill(self, t, nid):
        node = self.nodes[nid]
        if node.alive and not node.is_sink:
            self.ledger.debit(nid, self.ledger.residual[nid], "scripted", t)
            self._kill(node, t)

    def _on_generate(self, t, nid):
        node = self.nodes[nid]
        if not node.alive:
            return
        if self.max_episodes is not None and self.generated >= self.max_episodes:
            return
        if self.fixed_class is not None:
            cls = self.fixed_class
        else:
            u = self.rng_traffic.random()
            cls = 1 if u < self._mix_cum[0] else (
                2 if u < self._mix_cum[1] else 3)
        pkt = PacketRec(self.generated, cls, nid, t)
        self.generated += 1
        self.live_count += 1
        self.packets.append(pkt)
        self.event_log.append((t, "gen", pkt.pid, (cls,)))
        if not self._enqueue(node, pkt):
            self._drop(pkt, DROP_OVERFLOW, t)
        gap = self.rng_traffic.expovariate(self.cfg.send_rate)
        self._push(t + gap, EV_GENERATE, nid)

    def _on_service(self, t, nid):
        node = self.nodes[nid]
        node.service_pending = False
        if not node.alive:
            return
        cfg = self.cfg
        while True:
            before = node.queue.backlog()
            pkt = node.queue.dequeue_next()
            if pkt is None:
                return
            self._mark_backlog_transition(node, before, before - 1)
            if pkt.done:
                continue
            if pkt.hops >= cfg.max_hops:
                self._drop(pkt, DROP_TTL, t)
                continue
            node.table.purge_expired(t)
            candidates = node.table.ids()
            if self.protocol == "greedy":
                nxt = self._greedy_pick(node, candidates)
                if nxt is None:
                    self._drop(pkt, DROP_NO_ROUTE, t)
                    continue
                self._transmit(node, pkt, nxt, None, nxt, 0, t, None)
                return
            member_view = {j: node.table.get(j).memberships
                           for j in candidates}
            elig = eligible_actions(candidates, member_view, pkt.cls,
                                    cfg.membership_threshold,
                                    exclude=pkt.visited)
            if not elig:
                # Nowhere to go: dead-end penalty recorded on the episode.
                pkt.reward_sum -= 100.0
                self._drop(pkt, DROP_NO_ROUTE, t)
                continue
            raw = self._raw_context(elig)
            eps = epsilon_for_episode(self._episode_base + pkt.pid, cfg)
            decision = decide_route(self.tables, pkt.cls, nid, elig, eps,
                                    self.rng_policy, raw, node.memberships,
                                    cfg.initial_energy)
            ctx = normalize_context(raw)
            self._transmit(node, pkt, decision.main_action,
                           decision.backup_action, decision.main_action,
                           0, t, ctx)
            return

    def _greedy_pick(self, node, candidates):
        dts = self.topo.distance_to_sink
        best = None
        best_d = dts[node.nid]
        for j in sorted(candidates):
            dj = dts[j]
            if dj < best_d:
                best, best_d = j, dj
        return best

    def _local_load(self, node, t) -> int:
        """Neighbors transmitting right now. Queued-but-silent neighbors do
        not interfere; they enter this count only once they key the medium,
        so the loss processes stay bounded by duty cycle when queues grow.
        Queue pressure still costs delay through serial service."""
        busy = 0
        nodes = self.nodes
        for j, _d in self.topo.adjacency[node.nid]:
            other = nodes[j]
            if other.alive and other.busy_until > t:
                busy += 1
        return busy

    def _transmit(self, node, pkt, target, backup, main_target, attempt, t,
                  ctx):
        cfg = self.cfg
        start = max(t, node.busy_until)
        busy = self._local_load(node, start)
        contention = self.channel.contention_delay(busy)
        done_t = start + contention + self.air_data
        node.busy_until = done_t
        self.data_tx += 1
        node.p_sent += 1

        d = self._link_distance(node.nid, target)
        self._debit(node, tx_energy(cfg.packet_size * 8, d, cfg), "tx", t)

        rec = TxRec(pkt, node.nid, target, backup, main_target, attempt,
                    start, ctx)
        rec.collided = self.channel.collided(busy)
        if not rec.collided and self.channel.corrupted(self.frame_bits, busy):
            rec.corrupt_bit = self.channel.pick_flip_bit(self.frame_bits)
        self._push(done_t, EV_RX, rec)
        self._push(done_t + cfg.ack_timeout, EV_TIMEOUT, rec)

        if node.alive and node.queue.backlog() > 0 and not node.service_pending:
            node.service_pending = True
            self._push(done_t, EV_SERVICE, node.nid)

    def _link_distance(self, i, j):
        for k, d in self.topo.adjacency[i]:
            if k == j:
                return d
        return self.topo.comm_range

    def _on_rx(self, t, rec):
        if rec.collided:
            return
        node = self.nodes[rec.target]
        if not node.alive:
            rec.fail = "dead"
            return
        cfg = self.cfg
        self._debit(node, rx_energy(cfg.packet_size * 8, cfg), "rx", t)
        if not node.alive:
            rec.fail = "dead"
            return
        node.p_received += 1
        pkt = rec.pkt
        if rec.corrupt_bit is not None:
            frame = self._frame_for(pkt)
            damaged = bytearray(frame)
            k = rec.corrupt_bit % (len(frame) * 8)
            damaged[k >> 3] ^= 0x80 >> (k & 7)
            if verify_checksum(bytes(damaged)):
                raise InvariantError("bit flip escaped the frame checksum")
            node.p_corrupt += 1
            rec.fail = "corrupt"
            return
        if pkt.done:
            return
        if node.is_sink:
            pkt.done = True
            self.live_count -= 1
            self.delivered += 1
            pkt.hops += 1
            self.event_log.append(
                (t, "deliver", pkt.pid, (pkt.t_gen, pkt.hops, pkt.cls)))
            self._send_ack(node, rec, t)
            return
        before = node.queue.backlog()
        if node.queue.enqueue(pkt, pkt.penum) == ACCEPTED:
            self._mark_backlog_transition(node, before, before + 1)
            pkt.hops += 1
            pkt.visited.add(node.nid)
            if not node.service_pending:
                node.service_pending = True
                self._push(max(t, node.busy_until), EV_SERVICE, node.nid)
            self._send_ack(node, rec, t)
        else:
            rec.fail = "overflow"

    def _frame_for(self, pkt):
        if pkt.frame is None:
            dp = DataPacket(header=pkt.pid & 0xFFFF, packet_type=pkt.penum,
                            source_id=pkt.src, destination_id=self.sink_id,
                            timestamp=pkt.t_gen,
                            payload=bytes(self.cfg.packet_size))
            pkt.frame = frame_packet(dp)
        return pkt.frame

    def _send_ack(self, node, rec, t):
        cfg = self.cfg
        self.ack_tx += 1
        self.event_log.append((t, "ctrl", "ack", (1,)))
        d = self._link_distance(node.nid, rec.sender)
        self._debit(node, tx_energy(cfg.ack_size * 8, d, cfg), "tx", t)
        if self.channel.ack_lost():
            rec.fail = "ack_lost"
            return
        self._push(t + cfg.ack_turnaround + self.air_ack, EV_ACK, rec)

    def _on_ack(self, t, rec):
        rec.acked = True
        sender = self.nodes[rec.sender]
        if not sender.alive:
            return
        cfg = self.cfg
        self._debit(sender, rx_energy(cfg.ack_size * 8, cfg), "rx", t)
        if not sender.alive:
            return
        if sender.table.get(rec.target) is not None:
            sender.table.record_delay(rec.target, t - rec.t_start)
            sender.table.record_attempt(rec.target, True)
        if self.protocol != "qqmr":
            return
        pkt = rec.pkt
        p = pkt.cls
        j = rec.target
        if j == self.sink_id:
            r = 100.0
            next_max = 0.0
        else:
            ctx = rec.ctx[j]
            r = immediate_reward(p, sender.memberships[p - 1], ctx,
                                 False, self._is_local_min(j))
            target = self.nodes[j]
            target.table.purge_expired(t)
            next_max = self.tables[p].max_over(j, target.table.ids())
        q_update(self.tables[p], rec.sender, j, r, next_max,
                 cfg.alpha, cfg.gamma)
        pkt.reward_sum += r

    def _on_timeout(self, t, rec):
        if rec.acked:
            return
        sender = self.nodes[rec.sender]
        sender.p_lost += 1
        if sender.alive and sender.table.get(rec.target) is not None:
            sender.table.record_attempt(rec.target, False)
            sender.table.record_delay(rec.target,
                                      self.air_data + self.cfg.ack_timeout)
        pkt = rec.pkt
        if pkt.done:
            return
        if rec.attempt == 0 and sender.alive:
            # Second attempt per hop for every protocol: the backup next hop
            # when one exists, the same link otherwise. A symmetric link
            # layer keeps route choice as the only compared variable.
            retry = rec.backup if rec.backup is not None else rec.target
            self._transmit(sender, pkt, retry, None, rec.main_target,
                           1, t, rec.ctx)
            return
        self._drop(pkt, FAIL_TO_CAUSE.get(rec.fail, DROP_LINK), t)

    def _on_hello(self, t, nid):
        node = self.nodes[nid]
        if not node.alive:
            return
        cfg = self.cfg
        if t > 0.0:
            # Halve the loss bookkeeping once per hello period so the error
            # rate is a recency-weighted estimate rather than a lifetime
            # average. An isolated early loss would otherwise pin a tiny
            # fraction on a node for minutes at low traffic, and the ratio
            # scaling in the reward turns whoever holds the set maximum into
            # a full-scale penalty no matter how small the absolute numbers.
            node.p_sent *= 0.5
            node.p_lost *= 0.5
            node.p_received *= 0.5
            node.p_corrupt *= 0.5
        if node.is_sink:
            residual = cfg.initial_energy
            free = cfg.buffer_capacity
        else:
            residual = self.ledger.residual[nid]
            free = node.queue.free_space()
        msg = build_hello(nid, node.hello, self.positions[nid],
                          cfg.hello_interval, residual, free,
                          node.memberships, t)
        self.hello_tx += 1
        self._debit(node, tx_energy(cfg.hello_size * 8, self.topo.comm_range,
                                    cfg), "tx", t)
        delivered = 0
        nodes = self.nodes
        for j, _d in self.topo.adjacency[nid]:
            peer = nodes[j]
            if not peer.alive:
                continue
            self._debit(peer, rx_energy(cfg.hello_size * 8, cfg), "rx", t)
            if not peer.alive:
                continue
            peer.table.process_hello(msg, t)
            delivered += 1
        self.hello_rx += delivered
        self.event_log.append((t, "ctrl", "hello", (1 + delivered,)))
        if node.alive and t > 0.0:
            self._push(t + cfg.hello_interval, EV_HELLO, nid)

    def _on_refresh(self, t, nid):
        node = self.nodes[nid]
        if not node.alive:
            return
        node.queue.refresh_rates(self.cfg.queue_update_interval)
        node.queue.rebalance()
        self._push(t + self.cfg.queue_update_interval, EV_REFRESH, nid)

    def _feature_spans(self):
        """Physical [lo, hi] per clustering feature. Delay spans an idle hop
        up to draining a full buffer, the rest are direct capacity ranges.
        Fixed spans keep a homogeneous population homogeneous after scaling;
        per-snapshot min-max would stretch noise to full range and the
        clusters would then encode noise as sharp memberships."""
        cfg = self.cfg
        unit = cfg.contention_base + self.air_data
        delay_hi = (cfg.buffer_capacity * unit + cfg.contention_base
                    + cfg.ack_turnaround + self.air_data)
        return [(0.0, delay_hi),
                (0.0, float(cfg.buffer_capacity)),
                (0.0, 1.0),
                (0.0, cfg.initial_energy)]

    def _on_recluster(self, t):
        alive = [n for n in self.nodes.values() if n.alive and not n.is_sink]
        if len(alive) >= 3:
            feats = np.array([[self.node_delay(n),
                               float(n.queue.free_space()),
                               self.node_xi(n),
                               self.ledger.residual[n.nid]] for n in alive])
            model = run_wfcm(normalize_features(feats, spans=self._feature_spans()),
                             self.cfg, self.rng_cluster)
            for row, n in zip(model.memberships, alive):
                n.memberships = (float(row[0]), float(row[1]), float(row[2]))
        self._push(t + self.cfg.cluster_interval, EV_RECLUSTER, None)

    def _on_sample(self, t):
        self.event_log.append((t, "energy_total", "net",
                               (self.ledger.total_consumed(),)))
        self._check_invariants(t)
        self.samples.append((t, self.generated, self.delivered,
                             self.ledger.total_consumed()))
        self._push(t + self.cfg.metric_interval, EV_SAMPLE, None)

    # -- invariants and reporting ----------------------------------------------

    def _check_invariants(self, t):
        gap = self.ledger.conservation_gap()
        if gap > 1e-6:
            raise InvariantError(f"energy books off by {gap} J at t={t}")
        dropped = sum(self.drops.values())
        if self.generated != self.delivered + dropped + self.live_count:
            raise InvariantError(
                f"packet accounting broken at t={t}: generated="
                f"{self.generated} delivered={self.delivered} "
                f"dropped={dropped} live={self.live_count}")

    def _build_report(self) -> MetricsReport:
        rep = compute_metrics(self.event_log)
        rep.protocol = self.protocol
        rep.in_flight = self.live_count
        rep.residual_energy = self.ledger.total_residual()
        rep.samples = self.samples
        if self.protocol == "qqmr":
            rep.reward_trace = [p.reward_sum for p in self.packets]
            if len(rep.reward_trace) >= 20:
                rep.converged_episode = track_convergence(rep.reward_trace)
        if rep.drops != self.drops:
            raise InvariantError("event log and drop counters disagree")
        return rep

    # -- optional exports ------------------------------------------------------

    def export_event_log(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for time, kind, subject, detail in self.event_log:
                fh.write(f"{time!r}\t{kind}\t{subject}\t{detail!r}\n")

    def dump_q_tables(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("node,class,state,action,q\n")
            for p in (1, 2, 3):
                for (s, a), q in sorted(self.tables[p].entries.items()):
                    fh.write(f"{s},{p},{s},{a},{q!r}\n")


def run_scenario(cfg: SimConfig, protocol: str) -> MetricsReport:
    """One full simulation run; deterministic per (config, protocol)."""
    return SimEngine(cfg, protocol).run()


def run_convergence_trial(seed: int, episodes: int = 500,
                          node_count: int = 30):
    """Reward-stability trial: a single source far from the sink sends
    `episodes` emergency packets through a small static network. Returns
    (per-episode cumulative rewards, full report).

    The channel is noise-free, epsilon anneals all the way to zero on a
    faster schedule than the protocol default, and memberships stay at
    their uniform starting point, so the trace measures the learning
    dynamics alone: any residual episode variance comes from the tables,
    not from lost frames, forced exploration, or recluster jumps."""
    cfg = replace(SimConfig(), node_count=node_count, area_side=200.0,
                  comm_range=50.0, send_rate=10.0,
                  sim_duration=episodes / 10.0 + 25.0,
                  cluster_interval=10.0 * episodes,
                  rng_seed=seed, metric_interval=5.0,
                  per_bit_error_prob=0.0, epsilon_min=0.0,
                  epsilon_decay=0.98)
    topo = build_topology(cfg)
    source = max((i for i in topo.distance_to_sink if i != topo.sink_id),
                 key=lambda i: (topo.distance_to_sink[i], i))
    eng = SimEngine(cfg, "qqmr", fixed_source=source, fixed_class=1,
                    max_episodes=episodes)
    rep = eng.run()
    return rep.reward_trace, rep
