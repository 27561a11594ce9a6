"""Reading and writing the XML serialization of SensorStream logs."""

from .reader import (
    Dialect,
    ReadOptions,
    StreamSummary,
    XesReader,
    XesReadError,
    XesSyntaxError,
    read_log,
    read_log_streaming,
)
from .writer import (
    WriteOptions,
    XesWriteError,
    serialize_points,
    write_log,
    write_log_to,
    write_traces_to,
)

__all__ = [
    "Dialect",
    "ReadOptions",
    "StreamSummary",
    "WriteOptions",
    "XesReadError",
    "XesReader",
    "XesSyntaxError",
    "XesWriteError",
    "read_log",
    "read_log_streaming",
    "serialize_points",
    "write_log",
    "write_log_to",
    "write_traces_to",
]
