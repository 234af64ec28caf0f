"""Sender-side schedulers for the four transport schemes.

* ``ArqSender``: uncoded baseline. On a NACK it goes back to the oldest
  unacknowledged packet and resends the rest of the file (``mode="restart"``),
  or resends only the NACKed packet (``mode="selective"``).
* ``RRLNCSender``: rateless batch RLNC. Rounds of coded packets per batch until
  the receiver acknowledges that the batch decodes.
* ``FSWSender``: sliding-window RLNC with one FEC after every ``k`` new packets.
* ``ASWSender``: adaptive causal sliding-window RLNC with a-priori FEC sized
  from the estimated erasure rate and a-posteriori FEC driven by the
  DoF-rate retransmission test.

Source indices are 0-based. Feedback is cumulative: each ACK carries the
receiver rank and the length of its in-order decoded prefix.
"""
import bisect
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gf import CoeffVector, gf_combine


class PacketKind(str, Enum):
    NEW_INFO = "new"
    REPEAT = "repeat"
    APRIORI_FEC = "apriori_fec"
    APOSTERIORI_FEC = "aposteriori_fec"
    UNCODED = "uncoded"


@dataclass(frozen=True)
class SourcePacket:
    index: int
    payload: bytes


@dataclass
class CodedPacket:
    coeffs: CoeffVector
    payload: np.ndarray
    kind: PacketKind
    tx_slot: int = -1

    @property
    def w_min(self):
        return self.coeffs.offset

    @property
    def w_max(self):
        return self.coeffs.last


@dataclass(frozen=True)
class FeedbackMsg:
    tx_slot_echo: int
    seen_dof: int = 0
    decoded_upto: int = 0
    is_ack: bool = True


def encode(window, coeffs, kind=PacketKind.NEW_INFO, tx_slot=-1):
    """Linear combination of the payloads in ``window`` (a list of SourcePacket)."""
    if not window:
        raise ValueError("cannot encode an empty window")
    if not isinstance(coeffs, CoeffVector):
        coeffs = CoeffVector(np.asarray(coeffs, dtype=np.uint8), window[0].index)
    if len(coeffs) != len(window):
        raise ValueError(f"{len(coeffs)} coefficients for a window of {len(window)} packets")
    sizes = {len(p.payload) for p in window}
    if len(sizes) != 1:
        raise ValueError("source packets in one window must share a payload length")
    rows = np.stack([np.frombuffer(bytes(p.payload), dtype=np.uint8) for p in window])
    cv = CoeffVector(coeffs.elems, window[0].index)
    return CodedPacket(cv, gf_combine(cv.elems, rows), kind, tx_slot)


# ------------------------------------------------------------------ senders

class Sender:
    """Shared plumbing: source buffer, coefficient draws, completion flag."""

    name = "base"
    # Receiver drops packets that are not the next in-order source (go-back-N).
    in_order_receiver = False

    def __init__(self, sources, rng, timeout_slots):
        self.sources = sources
        self.n = sources.shape[0]
        self.rng = rng
        self.timeout = timeout_slots
        self.done = False
        self.acked_upto = 0
        self.seen_dof = 0

    def coded(self, lo, hi, kind, now):
        """Random combination over sources ``lo..hi``; coefficients are nonzero."""
        k = hi - lo + 1
        elems = self.rng.integers(1, 256, size=k, dtype=np.uint8)
        cv = CoeffVector(elems, lo)
        return CodedPacket(cv, gf_combine(elems, self.sources[lo:hi + 1]), kind, now)

    def uncoded(self, j, now):
        cv = CoeffVector(np.ones(1, dtype=np.uint8), j)
        return CodedPacket(cv, self.sources[j].copy(), PacketKind.UNCODED, now)

    def on_feedback(self, fb, now):
        if fb.is_ack:
            self.acked_upto = max(self.acked_upto, fb.decoded_upto)
            self.seen_dof = max(self.seen_dof, fb.seen_dof)
            if self.acked_upto >= self.n:
                self.done = True

    def step(self, now):
        raise NotImplementedError


class ArqSender(Sender):
    name = "arq"

    def __init__(self, sources, rng, timeout_slots, mode="restart"):
        super().__init__(sources, rng, timeout_slots)
        if mode not in ("restart", "selective"):
            raise ValueError(f"unknown ARQ mode {mode!r}")
        self.mode = mode
        self.in_order_receiver = mode == "restart"
        self.next_seq = 0
        self.restart_slot = 0
        self.sent_index = {}
        self.resend = []

    def on_feedback(self, fb, now):
        super().on_feedback(fb, now)
        if fb.is_ack:
            self.next_seq = max(self.next_seq, self.acked_upto)
            return
        j = self.sent_index.get(fb.tx_slot_echo)
        if j is None or j < self.acked_upto:
            return
        if self.mode == "restart":
            # NACKs for packets sent before the last restart are stale.
            if fb.tx_slot_echo >= self.restart_slot:
                self.next_seq = self.acked_upto
                self.restart_slot = now
        elif j not in self.resend:
            self.resend.append(j)

    def step(self, now):
        if self.mode == "selective":
            self.resend = [j for j in self.resend if j >= self.acked_upto]
            if self.resend:
                self.resend.sort()
                j = self.resend.pop(0)
                self.sent_index[now] = j
                return self.uncoded(j, now)
        if self.next_seq >= self.n:
            return None
        j = self.next_seq
        self.next_seq += 1
        self.sent_index[now] = j
        return self.uncoded(j, now)


class RRLNCSender(Sender):
    name = "rrlnc"

    def __init__(self, sources, rng, timeout_slots, n=10, m=None):
        super().__init__(sources, rng, timeout_slots)
        m = n if m is None else m
        if n < 1 or m < n:
            raise ValueError("R-RLNC needs n >= 1 and m >= n")
        self.batch_size = n
        self.round_first = m
        self.batch = 0
        self._start_batch(0)

    def _start_batch(self, b):
        self.batch = b
        self.lo = b * self.batch_size
        self.hi = min(self.lo + self.batch_size, self.n) - 1
        self.round_left = self.round_first - self.batch_size + (self.hi - self.lo + 1)
        self.round_no = 0
        self.round_end = None

    def step(self, now):
        while self.acked_upto > self.hi and self.hi < self.n - 1:
            self._start_batch(self.batch + 1)
        if self.acked_upto > self.hi:
            return None
        if self.round_left == 0:
            if now < self.round_end + 1 + self.timeout:
                return None
            self.round_left = self.hi - self.lo + 1
            self.round_no += 1
        kind = PacketKind.NEW_INFO if self.round_no == 0 else PacketKind.REPEAT
        self.round_left -= 1
        if self.round_left == 0:
            self.round_end = now
        return self.coded(self.lo, self.hi, kind, now)


class _WindowSender(Sender):
    """Window bookkeeping and the missing/added DoF counts.

    ``dof_needed`` is the number of sources included up to the newest
    transmission whose fate is known, minus the receiver rank reported so far.
    ``dof_added`` counts repair packets sent after that transmission, i.e.
    still in flight.
    """

    def __init__(self, sources, rng, timeout_slots):
        super().__init__(sources, rng, timeout_slots)
        self.w_max = -1
        self.tx_slots = []
        self.tx_hi = {}
        self.repair_slots = []
        self.known_slot = -1

    @property
    def w_min(self):
        return self.acked_upto

    def window_size(self):
        return max(0, self.w_max - self.w_min + 1)

    def on_feedback(self, fb, now):
        super().on_feedback(fb, now)
        self._mark_known(fb.tx_slot_echo)

    def _mark_known(self, slot):
        if slot > self.known_slot:
            self.known_slot = slot
            self.repair_slots = [s for s in self.repair_slots if s > slot]

    def assume_due(self, horizon):
        """Treat every transmission up to slot ``horizon`` as having reported back."""
        i = bisect.bisect_right(self.tx_slots, horizon)
        if i:
            self._mark_known(self.tx_slots[i - 1])

    @property
    def dof_needed(self):
        if self.known_slot < 0:
            return 0
        return max(0, self.tx_hi[self.known_slot] + 1 - self.seen_dof)

    @property
    def dof_added(self):
        return len(self.repair_slots)

    def send_new(self, now):
        self.w_max += 1
        return self._send(self.w_min, self.w_max, PacketKind.NEW_INFO, now)

    def send_repair(self, kind, now):
        self.repair_slots.append(now)
        return self._send(self.w_min, self.w_max, kind, now)

    def _send(self, lo, hi, kind, now):
        self.tx_slots.append(now)
        self.tx_hi[now] = hi
        return self.coded(lo, hi, kind, now)


class FSWSender(_WindowSender):
    name = "fswrlnc"

    def __init__(self, sources, rng, timeout_slots, k=4):
        super().__init__(sources, rng, timeout_slots)
        if k is not None and k < 1:
            raise ValueError("F-SW-RLNC redundancy period k must be >= 1")
        self.k = k
        self.since_fec = 0

    def step(self, now):
        if self.window_size() > 0 and self.k is not None and self.since_fec >= self.k:
            self.since_fec = 0
            return self.send_repair(PacketKind.APRIORI_FEC, now)
        if self.w_max < self.n - 1:
            self.since_fec += 1
            return self.send_new(now)
        # All sources sent: repair only what feedback says is missing.
        if self.window_size() > 0 and self.dof_needed > self.dof_added:
            return self.send_repair(PacketKind.REPEAT, now)
        return None


# ------------------------------------------------------------------ A-SW-RLNC

def eps_max_alpha(eps_mean, nu, rtt_slots, alpha):
    if rtt_slots <= 0:
        raise ValueError("rtt_slots must be positive")
    return min(1.0, max(0.0, eps_mean + alpha * math.sqrt(max(nu, 0.0)) / rtt_slots))


def update_channel_estimate(acks, t, rtt, alpha=0.0):
    """Channel estimate from binary feedback.

    ``acks[j]`` is 1 if the j-th transmission was acknowledged. Only the first
    ``t - rtt`` entries are due by slot ``t``. Returns
    ``(eps_mean, nu, eps_max)`` where ``nu`` is the variance of the erasure
    count over one RTT: the empirical variance across sliding RTT windows once
    two RTTs of history exist, otherwise the Bernoulli value
    ``eps (1 - eps) RTT``.
    """
    due = int(t - rtt)
    if due <= 0:
        return 0.0, 0.0, 0.0
    u = np.asarray(acks[:due], dtype=np.float64)
    if u.size == 0:
        return 0.0, 0.0, 0.0
    eps = 1.0 - u.sum() / u.size
    if u.size >= 2 * rtt:
        c = np.concatenate(([0.0], np.cumsum(1.0 - u)))
        counts = c[rtt:] - c[:-rtt]
        nu = float(counts.var())
    else:
        nu = eps * (1.0 - eps) * rtt
    return float(eps), nu, eps_max_alpha(eps, nu, rtt, alpha)


class Decision(str, Enum):
    SEND_NEW = "new"
    SEND_SAME = "same"


@dataclass
class SchedulerState:
    w_min: int = 0
    w_max: int = -1
    dof_needed: float = 0
    dof_added: float = 0
    eps_mean: float = 0.0
    eps_var: float = 0.0
    eps_max: float = 0.0
    th: float = 0.0
    alpha: float = 2.0
    max_window: int = 32
    apriori_period: int = 16
    apriori_counter: int = 0
    new_remaining: int = 0

    @property
    def d(self):
        return self.dof_needed / max(self.dof_added, 1)

    def margin(self):
        return 1.0 - self.d - self.eps_max


def aswrlnc_decide(state):
    """Retransmission test: new packet iff ``1 - d - eps_max > th`` and room remains."""
    ok = state.margin() > state.th
    room = (state.w_max - state.w_min + 1) < state.max_window
    if ok and room and state.new_remaining > 0:
        return Decision.SEND_NEW
    return Decision.SEND_SAME


def apriori_fec_count(period, eps_mean):
    if eps_mean <= 0.0:
        return 0
    if eps_mean >= 1.0:
        return period
    # Guard against 0.2 * 10 / 0.8 landing a hair above an integer.
    return math.ceil(round(period * eps_mean / (1.0 - eps_mean), 9))


class ASWSender(_WindowSender):
    name = "aswrlnc"

    def __init__(self, sources, rng, timeout_slots, rtt_slots=16, th=0.0, alpha=2.0,
                 max_window=None, m=None):
        super().__init__(sources, rng, timeout_slots)
        self.rtt = max(1, int(rtt_slots))
        self.state = SchedulerState(
            th=th, alpha=alpha,
            max_window=max_window if max_window is not None else 2 * self.rtt,
            apriori_period=m if m is not None else self.rtt,
            new_remaining=self.n)
        self.tx_order = []
        self.acked = {}
        self._due = []
        self._n_due = 0
        self.pending_apriori = 0

    def on_feedback(self, fb, now):
        super().on_feedback(fb, now)
        if fb.is_ack:
            self.acked[fb.tx_slot_echo] = 1

    def _refresh(self, now):
        st = self.state
        # Same convention as the erasure estimate: feedback not back within
        # one RTT counts as an erasure.
        horizon = now - self.rtt
        self.assume_due(horizon)
        # A transmission's bit is frozen once it falls past the horizon.
        while self._n_due < len(self.tx_order) and self.tx_order[self._n_due] <= horizon:
            self._due.append(self.acked.pop(self.tx_order[self._n_due], 0))
            self._n_due += 1
        # Index by transmissions, not slots: idle slots carry no feedback.
        st.eps_mean, st.eps_var, st.eps_max = update_channel_estimate(
            self._due, len(self._due) + self.rtt, self.rtt, st.alpha)
        st.w_min = self.w_min
        st.w_max = self.w_max
        st.dof_needed = self.dof_needed
        st.dof_added = self.dof_added
        st.new_remaining = self.n - 1 - self.w_max

    @property
    def dof_needed(self):
        # Known losses plus the expected losses among new packets still in flight.
        known = super().dof_needed
        if not self.tx_slots:
            return known
        last = self.tx_hi[self.tx_slots[-1]]
        seen = self.tx_hi[self.known_slot] if self.known_slot >= 0 else -1
        return known + self.state.eps_max * (last - seen)

    @property
    def dof_added(self):
        # In-flight repairs, discounted by the pessimistic erasure rate.
        return len(self.repair_slots) * (1.0 - self.state.eps_max)

    def step(self, now):
        self._refresh(now)
        pkt = self._choose(now)
        if pkt is not None:
            self.tx_order.append(now)
        return pkt

    def _choose(self, now):
        st = self.state
        if self.pending_apriori > 0 and self.window_size() > 0:
            self.pending_apriori -= 1
            return self.send_repair(PacketKind.APRIORI_FEC, now)
        decision = aswrlnc_decide(st)
        if decision is Decision.SEND_SAME and self.window_size() == 0 and st.new_remaining > 0:
            # Nothing left to repeat; a saturated estimate must not stall the flow.
            decision = Decision.SEND_NEW
        if decision is Decision.SEND_NEW:
            st.apriori_counter += 1
            if st.apriori_counter >= st.apriori_period:
                st.apriori_counter = 0
                self.pending_apriori = apriori_fec_count(st.apriori_period, st.eps_mean)
            return self.send_new(now)
        if self.window_size() == 0:
            return None
        if st.new_remaining <= 0 and st.margin() > st.th:
            return None
        return self.send_repair(PacketKind.APOSTERIORI_FEC, now)


SCHEMES = {
    "arq": ArqSender,
    "rrlnc": RRLNCSender,
    "fswrlnc": FSWSender,
    "aswrlnc": ASWSender,
}
