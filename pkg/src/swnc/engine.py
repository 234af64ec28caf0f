"""Slotted simulation loop, experiences, datapoints and sweeps.

One transmission opportunity per slot. Within a slot the order is: packets
arriving at the receiver are decoded and acknowledged, feedback due at the
sender is delivered, then the sender emits at most one packet.

The in-order delay of source ``j`` runs from the first slot in which ``j``
appears in a transmitted combination to the slot at which the receiver's
decoded prefix first covers ``j``.
"""
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analysis import summarize
from .channel import (DEFAULT_RTT_SLOTS, DEFAULT_SLOT_US, Channel, Delivered,
                      GEParams, ProfileExhausted, ge_generate)
from .gf import EliminationState
from .schemes import (ArqSender, ASWSender, FeedbackMsg, FSWSender,
                      RRLNCSender)

log = logging.getLogger(__name__)

METRICS = ("throughput", "mean_delay", "max_delay")


@dataclass(frozen=True)
class SimConfig:
    scheme: str = "aswrlnc"
    n_packets: int = 100
    packet_bytes: int = 1000
    # channel: a GE model or a trace (ChannelProfile or path, resolved by the caller)
    ge: GEParams = None
    trace: object = None
    rtt_slots: int = DEFAULT_RTT_SLOTS
    slot_us: int = DEFAULT_SLOT_US
    timeout_slots: int = None
    forward_slots: int = 1
    feedback_loss: float = 0.0
    max_slots: int = 20000
    seed: int = 0
    experiences: int = 10
    label: str = ""
    # scheme parameters
    arq_mode: str = "restart"
    rrlnc_n: int = 10
    rrlnc_m: int = None
    fsw_k: int = 4
    asw_th: float = 0.0
    asw_alpha: float = 2.0
    asw_max_window: int = None
    asw_m: int = None

    def __post_init__(self):
        if self.n_packets < 1 or self.packet_bytes < 1:
            raise ValueError("n_packets and packet_bytes must be >= 1")
        if self.scheme not in SENDERS:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(SENDERS)}")
        if self.experiences < 1:
            raise ValueError("experiences must be >= 1")
        if self.ge is None and self.trace is None:
            raise ValueError("config needs a channel: GE parameters or a trace")

    @property
    def mode(self):
        if self.label:
            return self.label
        if self.trace is not None:
            return getattr(self.trace, "label", "") or "trace"
        return f"GE(s={self.ge.s:g};q={self.ge.q:g})"


SENDERS = {
    "arq": lambda cfg, src, rng, to, rtt: ArqSender(src, rng, to, mode=cfg.arq_mode),
    "rrlnc": lambda cfg, src, rng, to, rtt: RRLNCSender(src, rng, to, n=cfg.rrlnc_n, m=cfg.rrlnc_m),
    "fswrlnc": lambda cfg, src, rng, to, rtt: FSWSender(src, rng, to, k=cfg.fsw_k),
    "aswrlnc": lambda cfg, src, rng, to, rtt: ASWSender(
        src, rng, to, rtt_slots=rtt, th=cfg.asw_th, alpha=cfg.asw_alpha,
        max_window=cfg.asw_max_window, m=cfg.asw_m),
}


@dataclass
class ExperienceResult:
    normalized_throughput: float
    mean_inorder_delay_slots: float
    max_inorder_delay_slots: float
    per_packet_delays: list
    slots_consumed: int
    transmissions: int
    complete: bool = True
    seed: int = 0
    start_slot: int = 0
    kinds: dict = field(default_factory=dict)

    def metric(self, name):
        return {"throughput": self.normalized_throughput,
                "mean_delay": self.mean_inorder_delay_slots,
                "max_delay": self.max_inorder_delay_slots}[name]

    def to_record(self, slot_us=DEFAULT_SLOT_US):
        rec = asdict(self)
        rec["mean_inorder_delay_ms"] = self.mean_inorder_delay_slots * slot_us / 1000
        rec["max_inorder_delay_ms"] = self.max_inorder_delay_slots * slot_us / 1000
        return rec


@dataclass
class Datapoint:
    throughput: float
    mean_delay: float
    max_delay: float
    experiences: list
    incomplete: int = 0

    def metric_values(self, name):
        return [e.metric(name) for e in self.experiences]


def _rngs(seed):
    ss = np.random.SeedSequence(int(seed))
    chan, coef, payload = ss.spawn(3)
    return chan, np.random.default_rng(coef), np.random.default_rng(payload)


def default_timeout(max_rtt_slots):
    return 2 * int(max_rtt_slots)


def make_channel(config, seed, start=0):
    """Channel for one experience: a fresh GE realization or a trace segment."""
    chan_seed, _, _ = _rngs(seed)
    fb_rng = np.random.default_rng(chan_seed.spawn(1)[0])
    if config.trace is not None:
        profile = config.trace
    else:
        profile = ge_generate(config.ge, config.max_slots,
                              rtt_us=config.rtt_slots * config.slot_us,
                              seed=chan_seed, slot_us=config.slot_us, label=config.mode)
    return Channel(profile, start=start, forward_slots=config.forward_slots,
                   feedback_loss=config.feedback_loss, rng=fb_rng)


def run_experience(config, channel=None, seed=None):
    """Transfer ``n_packets`` sources over ``channel`` with the configured scheme."""
    seed = config.seed if seed is None else seed
    if channel is None:
        channel = make_channel(config, seed)
    _, coef_rng, payload_rng = _rngs(seed)
    n = config.n_packets
    sources = payload_rng.integers(0, 256, size=(n, config.packet_bytes), dtype=np.uint8)
    prof = channel.profile
    seg_rtt = prof.rtt_slots[channel.start:channel.start + config.max_slots]
    if seg_rtt.size == 0:
        raise ProfileExhausted("channel has no slots left")
    timeout = config.timeout_slots or default_timeout(seg_rtt.max())
    rtt_est = int(np.median(seg_rtt))
    sender = SENDERS[config.scheme](config, sources, coef_rng, timeout, rtt_est)
    decoder = EliminationState(n, config.packet_bytes)
    in_order_only = sender.in_order_receiver

    first_tx = np.full(n, -1, dtype=np.int64)
    decoded_at = np.full(n, -1, dtype=np.int64)
    stamped = 0
    upto = 0
    arrivals = defaultdict(list)
    acks = defaultdict(list)
    nacks = defaultdict(list)
    acked = set()
    kinds = defaultdict(int)
    sent = 0
    limit = min(len(channel), config.max_slots)
    t = 0
    complete = True
    while not sender.done:
        if t >= limit:
            complete = False
            break
        for pkt, fb_slot in arrivals.pop(t, ()):
            if not (in_order_only and pkt.w_min != upto):
                decoder.insert(pkt.coeffs, pkt.payload)
            new_upto = decoder.decoded_upto()
            if new_upto > upto:
                decoded_at[upto:new_upto] = t
                upto = new_upto
            if fb_slot >= 0:
                acks[fb_slot].append(FeedbackMsg(pkt.tx_slot, decoder.rank, upto, True))
        for fb in acks.pop(t, ()):
            acked.add(fb.tx_slot_echo)
            sender.on_feedback(fb, t)
        for tx in nacks.pop(t, ()):
            if tx not in acked:
                sender.on_feedback(FeedbackMsg(tx, is_ack=False), t)
        if sender.done:
            break
        pkt = sender.step(t)
        if pkt is not None:
            outcome = channel.transmit(t)
            sent += 1
            kinds[pkt.kind.value] += 1
            if pkt.w_max >= stamped:
                first_tx[stamped:pkt.w_max + 1] = t
                stamped = pkt.w_max + 1
            nack_at = t + 1 + timeout
            if isinstance(outcome, Delivered):
                arrivals[outcome.arrival_slot].append((pkt, outcome.feedback_slot))
                if outcome.feedback_slot < 0 or outcome.feedback_slot > nack_at:
                    nacks[nack_at].append(t)
            else:
                nacks[nack_at].append(t)
        t += 1

    done_mask = decoded_at >= 0
    delays = (decoded_at - first_tx)[done_mask]
    delays_list = [int(d) for d in delays]
    if upto < n:
        complete = False
    return ExperienceResult(
        normalized_throughput=(n / sent) if sent and complete else 0.0,
        mean_inorder_delay_slots=float(delays.mean()) if delays.size else 0.0,
        max_inorder_delay_slots=float(delays.max()) if delays.size else 0.0,
        per_packet_delays=delays_list,
        slots_consumed=t,
        transmissions=sent,
        complete=complete,
        seed=int(seed),
        start_slot=channel.start,
        kinds=dict(sorted(kinds.items())),
    )


def run_datapoint(config, seeds=None):
    """Mean of the three metrics over ``config.experiences`` experiences.

    GE channels draw a fresh realization per seed. Trace channels are consumed
    in consecutive segments: each experience starts where the previous one
    stopped, until the trace is exhausted.
    """
    if seeds is None:
        seeds = [config.seed + i for i in range(config.experiences)]
    done = []
    incomplete = 0
    start = 0
    for sd in seeds:
        if config.trace is not None:
            if start >= len(config.trace):
                log.warning("trace exhausted after %d experiences", len(done) + incomplete)
                break
            channel = make_channel(config, sd, start=start)
        else:
            channel = make_channel(config, sd)
        res = run_experience(config, channel, sd)
        start += res.slots_consumed
        if res.complete:
            done.append(res)
        else:
            incomplete += 1
            log.warning("experience seed=%d incomplete after %d slots", sd, res.slots_consumed)
    if not done:
        raise RuntimeError(f"no completed experiences for {config.scheme} on {config.mode}")
    return Datapoint(
        throughput=float(np.mean([e.normalized_throughput for e in done])),
        mean_delay=float(np.mean([e.mean_inorder_delay_slots for e in done])),
        max_delay=float(np.mean([e.max_inorder_delay_slots for e in done])),
        experiences=done,
        incomplete=incomplete,
    )


@dataclass
class SweepRow:
    config: SimConfig
    datapoint: Datapoint = None
    summary: dict = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def _sweep_one(config):
    try:
        dp = run_datapoint(config)
    except Exception as exc:  # reported per row, the sweep continues
        return SweepRow(config, error=f"{type(exc).__name__}: {exc}")
    summary = {m: summarize(dp.metric_values(m)) for m in METRICS}
    return SweepRow(config, dp, summary)


def sweep(configs, workers=1):
    """Run one datapoint per config; rows come back in input order."""
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one config")
    if workers <= 1 or len(configs) == 1:
        return [_sweep_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, configs))


def with_scheme(config, scheme, **kw):
    return replace(config, scheme=scheme, **kw)
