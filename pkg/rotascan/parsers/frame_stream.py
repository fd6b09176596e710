"""
Rotascan - Frame Stream Parser
Binary (theta, timestamp, W x N samples) records with a versioned preamble and a
trailing CRC32, read and written asynchronously
"""

import asyncio
import logging
import struct
import zlib
from pathlib import Path
from typing import Any, AsyncIterator, Dict, Iterable, List, Union

import aiofiles
import aiofiles.os
import numpy as np

from rotascan.errors import (
    ChecksumError,
    FileFormatError,
    MagicMismatchError,
    TruncatedStreamError,
    VersionMismatchError,
)
from rotascan.models.scene import FramePacket

logger = logging.getLogger(__name__)

FRAME_MAGIC = b"RSCNFRM\x00"
FORMAT_MAJOR = 1
FORMAT_MINOR = 0

PREAMBLE = struct.Struct("<8sHHHH")
RECORD_HEAD = struct.Struct("<dd")
TRAILER = struct.Struct("<I")

PathLike = Union[str, Path]


def record_size(width: int, n_bands: int) -> int:
    return RECORD_HEAD.size + 4 * width * n_bands


def pack_preamble(width: int, n_bands: int, major: int = FORMAT_MAJOR, minor: int = FORMAT_MINOR) -> bytes:
    if not (0 < width < 65536 and 0 < n_bands < 65536):
        raise FileFormatError(f"frame shape {width}x{n_bands} does not fit the stream preamble")
    return PREAMBLE.pack(FRAME_MAGIC, major, minor, width, n_bands)


def unpack_preamble(raw: bytes):
    """(width, n_bands, major, minor) of a stream preamble"""
    if len(raw) < PREAMBLE.size:
        raise TruncatedStreamError("frame stream shorter than its preamble", len(raw))
    magic, major, minor, width, n_bands = PREAMBLE.unpack(raw[:PREAMBLE.size])
    if magic != FRAME_MAGIC:
        raise MagicMismatchError(f"not a frame stream (magic {magic!r})")
    if major > FORMAT_MAJOR:
        raise VersionMismatchError(f"frame stream version {major}.{minor} is newer than supported {FORMAT_MAJOR}.x")
    return width, n_bands, major, minor


def pack_record(frame: FramePacket) -> bytes:
    samples = np.ascontiguousarray(frame.samples, dtype="<f4")
    return RECORD_HEAD.pack(frame.theta, frame.timestamp) + samples.tobytes()


def unpack_record(raw: bytes, width: int, n_bands: int) -> FramePacket:
    theta, timestamp = RECORD_HEAD.unpack_from(raw)
    samples = np.frombuffer(raw, dtype="<f4", offset=RECORD_HEAD.size).reshape(width, n_bands)
    return FramePacket(theta=theta, timestamp=timestamp, samples=samples.astype(np.float32))


class FrameStreamWriter:
    """
    FRAME STREAM WRITER
    - frames are queued and written to disk in batches
    - the running CRC covers preamble and every record
    - close() flushes the queue and appends the CRC trailer
    """

    def __init__(self, path: PathLike, width: int, n_bands: int, batch_size: int = 32):
        self.path = Path(path)
        self.width = width
        self.n_bands = n_bands
        self.batch_size = batch_size
        self.queue: List[FramePacket] = []
        self.crc = 0
        self.frames_written = 0
        self.bytes_written = 0
        self._file = None

    async def __aenter__(self) -> "FrameStreamWriter":
        await self.open()
        return self

    async def __aexit__(self, exc_type, exc, tb):
        if exc_type is None:
            await self.close()
        elif self._file is not None:
            await self._file.close()
            self._file = None

    async def open(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = await aiofiles.open(self.path, "wb")
        await self._write(pack_preamble(self.width, self.n_bands))

    async def _write(self, chunk: bytes):
        self.crc = zlib.crc32(chunk, self.crc)
        self.bytes_written += len(chunk)
        await self._file.write(chunk)

    async def queue_frame(self, frame: FramePacket):
        """Queue one frame; a full batch is written immediately"""
        if frame.samples.shape != (self.width, self.n_bands):
            raise FileFormatError(f"frame of shape {frame.samples.shape} does not match stream "
                                  f"{self.width}x{self.n_bands}")
        self.queue.append(frame)
        if len(self.queue) >= self.batch_size:
            await self._write_batch()

    async def _write_batch(self):
        batch, self.queue = self.queue, []
        if not batch:
            return
        await self._write(b"".join(pack_record(frame) for frame in batch))
        self.frames_written += len(batch)
        logger.debug(f"Wrote {len(batch)} frames to {self.path.name} ({self.frames_written} total)")

    async def flush(self):
        await self._write_batch()

    async def close(self):
        await self.flush()
        trailer = TRAILER.pack(self.crc & 0xFFFFFFFF)
        await self._file.write(trailer)
        self.bytes_written += len(trailer)
        await self._file.close()
        self._file = None
        logger.info(f"✅ Frame stream {self.path} written: {self.frames_written} frames, {self.bytes_written} bytes")

    def get_queue_stats(self) -> Dict[str, Any]:
        return {
            "queued_frames": len(self.queue),
            "frames_written": self.frames_written,
            "bytes_written": self.bytes_written,
        }


async def write_frame_stream(path: PathLike, frames: Iterable[FramePacket], batch_size: int = 32) -> int:
    """Write every frame; returns the number written"""
    iterator = iter(frames)
    try:
        first = next(iterator)
    except StopIteration:
        raise FileFormatError("cannot write an empty frame stream")
    writer = FrameStreamWriter(path, first.width, first.n_bands, batch_size=batch_size)
    async with writer:
        await writer.queue_frame(first)
        for frame in iterator:
            await writer.queue_frame(frame)
    return writer.frames_written


async def stream_frames(path: PathLike) -> AsyncIterator[FramePacket]:
    """
    Yield frames in file order.
    The CRC is verified after the last record, so a consumer sees every frame before a
    checksum failure is raised.
    """
    path = Path(path)
    total = (await aiofiles.os.stat(path)).st_size
    async with aiofiles.open(path, "rb") as f:
        preamble = await f.read(PREAMBLE.size)
        width, n_bands, _, _ = unpack_preamble(preamble)
        size = record_size(width, n_bands)
        payload = total - PREAMBLE.size - TRAILER.size
        if payload < 0 or payload % size:
            complete = max(payload, 0) // size
            raise TruncatedStreamError(f"frame stream {path.name} is truncated after {complete} records",
                                       PREAMBLE.size + complete * size)

        crc = zlib.crc32(preamble)
        offset = PREAMBLE.size
        for _ in range(payload // size):
            raw = await f.read(size)
            if len(raw) != size:
                raise TruncatedStreamError(f"frame stream {path.name} ended inside a record", offset + len(raw))
            crc = zlib.crc32(raw, crc)
            offset += size
            yield unpack_record(raw, width, n_bands)

        trailer = await f.read(TRAILER.size)
        if len(trailer) != TRAILER.size:
            raise TruncatedStreamError(f"frame stream {path.name} is missing its checksum", offset)
        (stored,) = TRAILER.unpack(trailer)
        if stored != crc & 0xFFFFFFFF:
            raise ChecksumError(f"frame stream {path.name} CRC32 mismatch "
                                f"(stored {stored:08x}, computed {crc & 0xFFFFFFFF:08x})", offset)


async def read_frame_stream(path: PathLike) -> List[FramePacket]:
    frames = [frame async for frame in stream_frames(path)]
    logger.info(f"📊 Read {len(frames)} frames from {Path(path).name}")
    return frames


def load_frames(path: PathLike) -> List[FramePacket]:
    return asyncio.run(read_frame_stream(path))


def save_frames(path: PathLike, frames: Iterable[FramePacket]) -> int:
    return asyncio.run(write_frame_stream(path, frames))
