"""Slotted erasure channels: recorded profiles, Gilbert-Elliott synthesis and fitting.

GE convention: ``q`` is the per-slot probability of leaving the good state
(burst starts) and ``s`` the probability of leaving the bad state (burst
ends), so ``pi_G = s / (s + q)`` and the mean burst length is ``1 / s``.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels

DEFAULT_SLOT_US = 450
DEFAULT_RTT_SLOTS = 16


class ChannelError(ValueError):
    pass


class FitError(ChannelError):
    pass


class ProfileExhausted(Exception):
    """Raised when a transmission is attempted past the end of a profile."""


@dataclass(frozen=True)
class SlotRecord:
    rtt_us: int
    lost: bool


@dataclass(frozen=True, eq=False)
class ChannelProfile:
    rtt_us: np.ndarray
    lost: np.ndarray
    slot_us: int = DEFAULT_SLOT_US
    label: str = ""

    def __post_init__(self):
        rtt = np.array(self.rtt_us, dtype=np.int64)
        lost = np.array(self.lost, dtype=np.bool_)
        if rtt.ndim != 1 or rtt.shape != lost.shape:
            raise ChannelError("rtt_us and lost must be 1-D arrays of equal length")
        if rtt.size == 0:
            raise ChannelError("channel profile is empty")
        if self.slot_us <= 0:
            raise ChannelError("slot duration must be positive")
        if (rtt <= 0).any():
            raise ChannelError("every slot needs a positive RTT")
        rtt.setflags(write=False)
        lost.setflags(write=False)
        object.__setattr__(self, "rtt_us", rtt)
        object.__setattr__(self, "lost", lost)
        object.__setattr__(self, "_rtt_slots", _to_slots(rtt, self.slot_us))

    def __len__(self):
        return int(self.lost.size)

    def __getitem__(self, i):
        return SlotRecord(int(self.rtt_us[i]), bool(self.lost[i]))

    def __eq__(self, other):
        if not isinstance(other, ChannelProfile):
            return NotImplemented
        return (self.slot_us == other.slot_us and self.label == other.label
                and np.array_equal(self.rtt_us, other.rtt_us)
                and np.array_equal(self.lost, other.lost))

    @property
    def rtt_slots(self):
        return self._rtt_slots

    @property
    def loss_rate(self):
        return float(self.lost.mean())

    def segment(self, start, stop=None):
        return ChannelProfile(self.rtt_us[start:stop], self.lost[start:stop],
                              self.slot_us, self.label)


def _to_slots(rtt_us, slot_us):
    # Python's round() is banker's rounding; use half-up for slot counts.
    return np.maximum(1, np.floor(rtt_us / slot_us + 0.5).astype(np.int64))


@dataclass(frozen=True)
class GEParams:
    s: float
    q: float
    eps_G: float = 0.0
    eps_B: float = 1.0

    def __post_init__(self):
        for name in ("s", "q", "eps_G", "eps_B"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ChannelError(f"GE parameter {name}={v} outside [0, 1]")

    @property
    def pi_G(self):
        return ge_stationary(self)[0]

    @property
    def pi_B(self):
        return ge_stationary(self)[1]

    @property
    def eps_mean(self):
        return ge_stationary(self)[2]

    @property
    def mean_burst(self):
        return float("inf") if self.s == 0 else 1.0 / self.s

    @classmethod
    def from_loss(cls, eps_mean, s):
        """GE channel with erasure-free good state and given mean loss and burst end rate."""
        if not 0.0 <= eps_mean < 1.0:
            raise ChannelError("eps_mean must be in [0, 1)")
        return cls(s=s, q=s * eps_mean / (1.0 - eps_mean))


def ge_stationary(p):
    """Return ``(pi_G, pi_B, eps_mean)``."""
    total = p.s + p.q
    if total == 0:
        raise ChannelError("degenerate GE chain: s = q = 0 has no unique stationary law")
    pi_g = p.s / total
    pi_b = 1.0 - pi_g
    return pi_g, pi_b, pi_g * p.eps_G + pi_b * p.eps_B


def ge_generate(p, n_slots, rtt_us=DEFAULT_RTT_SLOTS * DEFAULT_SLOT_US, seed=0,
                slot_us=DEFAULT_SLOT_US, label="GE"):
    """Sample a constant-RTT profile from the GE chain started in its stationary law."""
    if n_slots <= 0:
        raise ChannelError("n_slots must be positive")
    pi_b = ge_stationary(p)[1]
    rng = np.random.default_rng(seed)
    start_bad = bool(rng.random() < pi_b)
    u_state = rng.random(n_slots)
    u_loss = rng.random(n_slots)
    _, lost = kernels.ge_chain(u_state, u_loss, start_bad,
                               float(p.s), float(p.q), float(p.eps_G), float(p.eps_B))
    rtt = np.full(n_slots, int(rtt_us), dtype=np.int64)
    return ChannelProfile(rtt, lost, slot_us, label)


def loss_runs(lost):
    """Lengths of maximal runs of consecutive lost slots."""
    x = np.concatenate(([0], np.asarray(lost, dtype=np.int8), [0]))
    d = np.diff(x)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return ends - starts


def fit_ge(profile):
    lost = profile.lost if isinstance(profile, ChannelProfile) else np.asarray(profile, bool)
    n_lost = int(np.count_nonzero(lost))
    if n_lost == 0:
        raise FitError("cannot fit GE parameters: profile has no lost slots")
    if n_lost == lost.size:
        raise FitError("cannot fit GE parameters: every slot is lost")
    eps = n_lost / lost.size
    s = 1.0 / float(loss_runs(lost).mean())
    return GEParams(s=s, q=s * eps / (1.0 - eps))


class Delivered(NamedTuple):
    arrival_slot: int
    feedback_slot: int


class Erased(NamedTuple):
    pass


ERASED = Erased()


@dataclass
class Channel:
    """Forward channel over a profile, starting at profile slot ``start``.

    ``forward_slots`` is the sender-to-receiver latency; the acknowledgement
    comes back ``rtt_slots`` after transmission. A packet lost on the
    forward link never produces feedback. Feedback itself is dropped with
    probability ``feedback_loss``.
    """
    profile: ChannelProfile
    start: int = 0
    forward_slots: int = 1
    feedback_loss: float = 0.0
    rng: np.random.Generator = field(default=None, repr=False)

    def __len__(self):
        return len(self.profile) - self.start

    def transmit(self, slot):
        i = self.start + slot
        if slot < 0 or i >= len(self.profile):
            raise ProfileExhausted(f"slot {slot} is past the end of the channel profile")
        if self.profile.lost[i]:
            return ERASED
        rtt = int(self.profile.rtt_slots[i])
        arrival = slot + max(1, min(self.forward_slots, rtt))
        if self.feedback_loss > 0 and self.rng is not None \
                and self.rng.random() < self.feedback_loss:
            return Delivered(arrival, -1)
        return Delivered(arrival, slot + rtt)


def channel_transmit(profile, slot_index, packet=None, forward_slots=1):
    return Channel(profile, forward_slots=forward_slots).transmit(slot_index)
