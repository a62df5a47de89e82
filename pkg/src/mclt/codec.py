"""LT encoder, packet wire format, and incremental peeling decoder.

An output symbol is the XOR of d input symbols ("neighbors"), where d is
sampled from a degree distribution and the neighbor indices are drawn
uniformly without replacement. Both draws come from a counter RNG seeded by
the packet seed, so a receiver regenerates the exact neighbor set from
(seed, config_id, k) alone.

Wire format, little-endian, version 1:

    magic "MCLT" | version u8 | config_id u8 | reserved u16 = 0 |
    k u32 | symbol_size u32 | seed u64 | payload | crc32c u32

crc32c (Castagnoli polynomial) covers all preceding bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .distributions import DegreeDistribution
from .prng import CounterRng, derive_seed, splitmix64

WIRE_MAGIC = b"MCLT"
WIRE_VERSION = 1
_HEADER = struct.Struct("<4sBBHIIQ")
_CRC = struct.Struct("<I")

_CRC32C_POLY = 0x82F63B78  # reflected Castagnoli polynomial


def _crc32c_table():
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC32C_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC_TABLE = _crc32c_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC-32C (Castagnoli) checksum."""
    crc ^= 0xFFFFFFFF
    table = _CRC_TABLE
    for b in data:
        crc = (crc >> 8) ^ table[(crc ^ b) & 0xFF]
    return crc ^ 0xFFFFFFFF


class WireFormatError(ValueError):
    """Malformed, truncated, or corrupted packet bytes."""


@dataclass(frozen=True)
class SourceBlock:
    """k input symbols of symbol_size bytes each (last symbol zero-padded)."""

    k: int
    symbol_size: int
    data: bytes

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.symbol_size < 1:
            raise ValueError(f"symbol_size must be >= 1, got {self.symbol_size}")
        if len(self.data) != self.k * self.symbol_size:
            raise ValueError(
                f"data length {len(self.data)} != k*symbol_size = {self.k * self.symbol_size}"
            )

    @classmethod
    def from_bytes(cls, raw: bytes, k: int) -> "SourceBlock":
        """Split raw bytes into k symbols, zero-padding the tail."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if len(raw) == 0:
            raise ValueError("cannot build a source block from empty data")
        symbol_size = -(-len(raw) // k)
        padded = raw + bytes(k * symbol_size - len(raw))
        return cls(k=k, symbol_size=symbol_size, data=padded)

    def symbol(self, i: int) -> bytes:
        return self.data[i * self.symbol_size : (i + 1) * self.symbol_size]


@dataclass(frozen=True)
class EncodedPacket:
    """One output symbol on the wire.

    ``neighbors`` is populated in simulation mode to skip regeneration; on
    the wire only (config_id, seed, k) travel and the receiver recomputes it.
    """

    config_id: int
    seed: int
    k: int
    payload: bytes | None
    neighbors: tuple[int, ...] | None = None

    @property
    def symbol_size(self) -> int:
        if self.payload is None:
            raise ValueError("structure-only packet has no payload")
        return len(self.payload)


def packet_seed(stream_seed: int, index: int) -> int:
    """Seed of the index-th packet of a stream."""
    return derive_seed(stream_seed, index)


def draw_structure(dist: DegreeDistribution, config_id: int, seed: int) -> tuple[int, set[int]]:
    """(degree, neighbor set) generated by a packet: pure in (seed, config_id, k).

    Degree by inverse-transform sampling, then d distinct indices in [0, k)
    by Floyd's algorithm, all from one counter stream.
    """
    rng = CounterRng(splitmix64(seed ^ splitmix64(config_id)))
    d = dist.sample(rng.uniform())
    k = dist.k
    chosen: set[int] = set()
    for j in range(k - d, k):
        t = rng.randbelow(j + 1)
        if t in chosen:
            chosen.add(j)
        else:
            chosen.add(t)
    return d, chosen


def _xor_into(acc: bytearray, chunk: bytes):
    for i, b in enumerate(chunk):
        acc[i] ^= b


def encode(block: SourceBlock, dist: DegreeDistribution, config_id: int, seed: int,
           carry_neighbors: bool = False) -> EncodedPacket:
    """Generate the output symbol determined by (seed, config_id)."""
    if dist.k != block.k:
        raise ValueError(f"distribution k={dist.k} does not match block k={block.k}")
    _, neighbors = draw_structure(dist, config_id, seed)
    payload = bytearray(block.symbol_size)
    for i in neighbors:
        _xor_into(payload, block.symbol(i))
    return EncodedPacket(
        config_id=config_id,
        seed=seed,
        k=block.k,
        payload=bytes(payload),
        neighbors=tuple(sorted(neighbors)) if carry_neighbors else None,
    )


def neighbors_of(packet: EncodedPacket, dist: DegreeDistribution) -> frozenset[int]:
    """Reconstruct the exact neighbor set the encoder used."""
    if dist.k != packet.k:
        raise ValueError(f"distribution k={dist.k} does not match packet k={packet.k}")
    _, neighbors = draw_structure(dist, packet.config_id, packet.seed)
    return frozenset(neighbors)


def pack_packet(packet: EncodedPacket) -> bytes:
    """Serialize to the version-1 wire format."""
    if packet.payload is None:
        raise ValueError("cannot serialize a structure-only packet")
    if not 0 <= packet.config_id <= 0xFF:
        raise ValueError(f"config_id must fit in u8, got {packet.config_id}")
    head = _HEADER.pack(
        WIRE_MAGIC, WIRE_VERSION, packet.config_id, 0,
        packet.k, len(packet.payload), packet.seed,
    )
    body = head + packet.payload
    return body + _CRC.pack(crc32c(body))


def unpack_packet(buf: bytes) -> EncodedPacket:
    """Parse and verify one wire packet."""
    if len(buf) < _HEADER.size + _CRC.size:
        raise WireFormatError(f"packet too short: {len(buf)} bytes")
    magic, version, config_id, reserved, k, symbol_size, seed = _HEADER.unpack_from(buf)
    if magic != WIRE_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != WIRE_VERSION:
        raise WireFormatError(f"unsupported version {version}")
    if reserved != 0:
        raise WireFormatError(f"reserved field must be 0, got {reserved}")
    expected = _HEADER.size + symbol_size + _CRC.size
    if len(buf) != expected:
        raise WireFormatError(f"packet length {len(buf)} != expected {expected}")
    (crc,) = _CRC.unpack_from(buf, len(buf) - _CRC.size)
    if crc != crc32c(buf[: -_CRC.size]):
        raise WireFormatError("crc32c mismatch")
    payload = buf[_HEADER.size : -_CRC.size]
    return EncodedPacket(config_id=config_id, seed=seed, k=k, payload=payload)


class _Buffered:
    __slots__ = ("neighbors", "payload")

    def __init__(self, neighbors: set[int], payload: int | None):
        self.neighbors = neighbors
        self.payload = payload


@dataclass
class DecoderState:
    """Incremental peeling decoder state.

    Buffered output symbols keep only their reduced neighbor sets (indices
    not yet recovered); a symbol reduced to degree one enters the ripple and
    is processed to exhaustion, cascading through the buffer. Payloads are
    tracked as integers when present; structure-only ingestion (payload None)
    drives the Monte-Carlo harness.
    """

    k: int
    symbol_size: int | None = None
    received_count: int = 0
    per_config_received: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        self._recovered: list[int | None] = [None] * self.k
        self._have = bytearray(self.k)
        self._u = self.k
        self._index: list[list[_Buffered]] = [[] for _ in range(self.k)]

    @property
    def unsolved(self) -> int:
        return self._u

    def is_complete(self) -> bool:
        return self._u == 0

    def is_recovered(self, i: int) -> bool:
        return bool(self._have[i])

    def recovered_symbol(self, i: int) -> bytes:
        if not self._have[i]:
            raise ValueError(f"input symbol {i} not recovered yet")
        if self.symbol_size is None:
            raise ValueError("structure-only decode carries no payloads")
        return int(self._recovered[i]).to_bytes(self.symbol_size, "little")

    def recovered_data(self) -> bytes:
        if not self.is_complete():
            raise ValueError(f"decoding incomplete: {self._u} symbols unsolved")
        return b"".join(self.recovered_symbol(i) for i in range(self.k))

    def ingest(self, packet: EncodedPacket, neighbors=None) -> int:
        """Feed one received packet; returns how many input symbols it recovered.

        ``neighbors`` may be passed explicitly (simulation mode), taken from
        the packet, or it must have been regenerated by the caller via
        :func:`neighbors_of`. Duplicate and useless packets are legal and
        still counted as received.
        """
        if packet.k != self.k:
            raise ValueError(f"packet k={packet.k} does not match decoder k={self.k}")
        if neighbors is None:
            neighbors = packet.neighbors
        if neighbors is None:
            raise ValueError("no neighbor set: pass neighbors= or use a simulation-mode packet")
        payload = None
        if packet.payload is not None:
            if self.symbol_size is None:
                self.symbol_size = len(packet.payload)
            elif self.symbol_size != len(packet.payload):
                raise ValueError("payload size differs from earlier packets")
            payload = int.from_bytes(packet.payload, "little")
        self.received_count += 1
        cid = packet.config_id
        self.per_config_received[cid] = self.per_config_received.get(cid, 0) + 1
        return self._reduce_and_peel(set(neighbors), payload)

    def ingest_structure(self, neighbors: set[int], config_id: int | None = None) -> int:
        """Fast path for simulation: neighbor set only, no packet object.

        The set is consumed (mutated and retained) by the decoder.
        """
        self.received_count += 1
        if config_id is not None:
            self.per_config_received[config_id] = self.per_config_received.get(config_id, 0) + 1
        return self._reduce_and_peel(neighbors, None)

    def _reduce_and_peel(self, nbrs: set[int], payload: int | None) -> int:
        have = self._have
        recovered = self._recovered
        if payload is not None:
            for i in tuple(nbrs):
                if have[i]:
                    payload ^= recovered[i]
                    nbrs.discard(i)
        else:
            nbrs = {i for i in nbrs if not have[i]}
        if not nbrs:
            return 0
        if len(nbrs) > 1:
            entry = _Buffered(nbrs, payload)
            index = self._index
            for i in nbrs:
                index[i].append(entry)
            return 0
        # reduced degree one: release, then cascade through the buffer
        newly = 0
        index = self._index
        ripple = [(nbrs.pop(), payload)]
        while ripple:
            i, value = ripple.pop()
            if have[i]:
                continue
            have[i] = 1
            recovered[i] = value
            self._u -= 1
            newly += 1
            for entry in index[i]:
                s = entry.neighbors
                s.discard(i)
                if entry.payload is not None:
                    entry.payload ^= value
                if len(s) == 1:
                    ripple.append((next(iter(s)), entry.payload))
            index[i] = []
        return newly


def unsolved(state: DecoderState) -> int:
    return state.unsolved


def is_complete(state: DecoderState) -> bool:
    return state.is_complete()


def decode_block(packets, dist: DegreeDistribution, k: int | None = None) -> DecoderState:
    """Run the peeling decoder over an iterable of wire packets."""
    state = None
    for packet in packets:
        if state is None:
            state = DecoderState(k=k if k is not None else packet.k)
        nbrs = packet.neighbors or neighbors_of(packet, dist)
        state.ingest(packet, nbrs)
    if state is None:
        raise ValueError("no packets supplied")
    return state
