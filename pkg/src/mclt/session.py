"""Multi-stream broadcast sessions with receiver-side configuration switching.

The sender runs one output-symbol stream per configuration; packet j of
stream c is a pure function of (session seed, c, j) and never depends on
receiver behavior, so there is no feedback channel. A receiver selects which
stream to consume from its own unsolved count u through the scheme's
piecewise-constant switch rule, pulling the next packet of the selected
stream. Erased packets advance the stream but are never seen by the decoder
and do not count as received.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import DecoderState, SourceBlock, draw_structure, encode, packet_seed
from .distributions import DegreeDistribution, SolitonParams, closer, robust_soliton, starter
from .prng import CounterRng, derive_seed

_TAG_STREAM = 0x5EED
_TAG_CHANNEL = 0xCAB1E

SCHEME_LABELS = ("robust", "starter", "starter+closer")


@dataclass(frozen=True)
class Configuration:
    """One encoding configuration: an id and the degree distribution it uses."""

    config_id: int
    dist: DegreeDistribution


class MCScheme:
    """Ordered configurations plus strictly decreasing switch thresholds.

    Configuration i+1 becomes active once u <= thresholds[i] (inclusive);
    configuration 0 is active above the first threshold. With no thresholds
    this degenerates to a pure single-stream code.
    """

    def __init__(self, configs, thresholds=()):
        configs = tuple(configs)
        thresholds = tuple(int(t) for t in thresholds)
        if not configs:
            raise ValueError("a scheme needs at least one configuration")
        if len(thresholds) != len(configs) - 1:
            raise ValueError(
                f"{len(configs)} configurations require {len(configs) - 1} thresholds, "
                f"got {len(thresholds)}"
            )
        ids = [c.config_id for c in configs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"config_ids must be unique, got {ids}")
        ks = {c.dist.k for c in configs}
        if len(ks) != 1:
            raise ValueError(f"all configurations must share one k, got {sorted(ks)}")
        if any(t2 >= t1 for t1, t2 in zip(thresholds, thresholds[1:])):
            raise ValueError(f"thresholds must be strictly decreasing, got {thresholds}")
        if thresholds and thresholds[-1] < 0:
            raise ValueError(f"thresholds must be nonnegative, got {thresholds}")
        self.configs = configs
        self.thresholds = thresholds
        self.k = configs[0].dist.k

    def active_index(self, u: int) -> int:
        idx = 0
        for i, t in enumerate(self.thresholds):
            if u <= t:
                idx = i + 1
        return idx

    def active(self, u: int) -> Configuration:
        return self.configs[self.active_index(u)]


def single_scheme(dist: DegreeDistribution, config_id: int = 1) -> MCScheme:
    """Pure LT baseline: one configuration, no switching."""
    return MCScheme([Configuration(config_id, dist)])


def standard_scheme(params: SolitonParams) -> MCScheme:
    """The two-configuration starter/closer scheme with switch point ceil(R)."""
    from .analysis import switch_threshold

    return MCScheme(
        [Configuration(1, starter(params)), Configuration(2, closer(params))],
        thresholds=[switch_threshold(params)],
    )


def scheme_for(label: str, params: SolitonParams) -> MCScheme:
    """Scheme from an experiment label: robust | starter | starter+closer."""
    if label == "robust":
        return single_scheme(robust_soliton(params))
    if label == "starter":
        return single_scheme(starter(params))
    if label == "starter+closer":
        return standard_scheme(params)
    raise ValueError(f"unknown scheme label {label!r}; expected one of {SCHEME_LABELS}")


def select_stream(scheme: MCScheme, state: DecoderState) -> int:
    """config_id the receiver tunes to; a pure function of state.unsolved."""
    return scheme.active(state.unsolved).config_id


@dataclass(frozen=True)
class ErasureChannel:
    """Memoryless erasure: packet j of the stream is dropped with probability rate.

    The decision is keyed by the packet index so it is independent of when
    (or whether) any receiver consumes the stream.
    """

    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.rate < 1:
            raise ValueError(f"erasure rate must be in [0, 1), got {self.rate}")

    def erased(self, index: int) -> bool:
        if self.rate == 0.0:
            return False
        return CounterRng(derive_seed(self.seed, index)).uniform() < self.rate


@dataclass
class SessionReport:
    """Outcome of one receive session."""

    k: int
    received: int
    per_config: dict[int, int]
    generated: dict[int, int]
    final_unsolved: int
    success: bool
    capped: bool
    u_trajectory: list[int] | None = None
    stream_seeds: dict[int, list[int]] | None = None

    def to_dict(self) -> dict:
        out = {
            "k": self.k,
            "received": self.received,
            "per_config": {str(c): n for c, n in sorted(self.per_config.items())},
            "generated": {str(c): n for c, n in sorted(self.generated.items())},
            "final_unsolved": self.final_unsolved,
            "success": self.success,
            "capped": self.capped,
        }
        if self.received > 0:
            out["overhead"] = self.received / self.k - 1.0
        return out


def stream_packet_seed(session_seed: int, config_id: int, index: int) -> int:
    """Seed of packet ``index`` of configuration ``config_id``'s stream."""
    return packet_seed(derive_seed(session_seed, _TAG_STREAM, config_id), index)


def channel_seed(session_seed: int, config_id: int) -> int:
    return derive_seed(session_seed, _TAG_CHANNEL, config_id)


def run_session(
    scheme: MCScheme,
    seed: int,
    block: SourceBlock | None = None,
    erasure: float | dict[int, float] = 0.0,
    max_received: int | None = None,
    record_u: bool = False,
    record_streams: bool = False,
) -> SessionReport:
    """Pull-based receive loop until full recovery or the reception cap.

    With ``block`` the full payload path runs (encode, erase, ingest); without
    it only neighbor structure is simulated, which is what the Monte-Carlo
    harness uses. ``max_received`` caps RECEIVED symbols (erasures cost
    transmissions, not receptions).
    """
    k = scheme.k
    if block is not None and block.k != k:
        raise ValueError(f"block k={block.k} does not match scheme k={k}")

    def rate_for(config_id: int) -> float:
        if isinstance(erasure, dict):
            return erasure.get(config_id, 0.0)
        return erasure

    channels = {
        c.config_id: ErasureChannel(rate_for(c.config_id), channel_seed(seed, c.config_id))
        for c in scheme.configs
    }
    stream_seeds = {c.config_id: derive_seed(seed, _TAG_STREAM, c.config_id) for c in scheme.configs}
    positions = {c.config_id: 0 for c in scheme.configs}
    seed_log: dict[int, list[int]] = {c.config_id: [] for c in scheme.configs} if record_streams else None

    state = DecoderState(k=k)
    trajectory: list[int] | None = [] if record_u else None
    capped = False

    while state.unsolved > 0:
        if max_received is not None and state.received_count >= max_received:
            capped = True
            break
        cfg = scheme.active(state.unsolved)
        cid = cfg.config_id
        j = positions[cid]
        positions[cid] = j + 1
        pseed = packet_seed(stream_seeds[cid], j)
        if seed_log is not None:
            seed_log[cid].append(pseed)
        if channels[cid].erased(j):
            continue
        if block is None:
            _, nbrs = draw_structure(cfg.dist, cid, pseed)
            state.ingest_structure(nbrs, cid)
        else:
            pkt = encode(block, cfg.dist, cid, pseed, carry_neighbors=True)
            state.ingest(pkt)
        if trajectory is not None:
            trajectory.append(state.unsolved)

    return SessionReport(
        k=k,
        received=state.received_count,
        per_config=dict(state.per_config_received),
        generated=dict(positions),
        final_unsolved=state.unsolved,
        success=state.unsolved == 0,
        capped=capped and state.unsolved > 0,
        u_trajectory=trajectory,
        stream_seeds=seed_log,
    )
