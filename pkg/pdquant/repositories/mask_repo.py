import csv
import io
import logging
import re
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, List, Optional, Tuple, Union

import numpy as np

from ..core.exceptions import MaskFormatError, NotFoundError
from ..models.mask import BinaryMask

logger = logging.getLogger(__name__)

MaskSource = Union[bytes, bytearray, BinaryIO, str, Path]

_WHITESPACE = b" \t\r\n\v\f"
_RESOLUTION_RE = re.compile(r"^\s*resolution\s*[:=]\s*(\S+)\s*$", re.IGNORECASE)
CANONICAL_MAXVAL = 255


class MaskFormat(str, Enum):
    """Supported mask file encodings."""

    PGM = "pgm"
    CSV = "csv"

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "MaskFormat":
        suffix = Path(path).suffix.lower().lstrip(".")
        try:
            return cls(suffix)
        except ValueError:
            raise MaskFormatError(f"Unsupported mask file extension '{Path(path).suffix}'", source=str(path))


def _read_source(source: MaskSource) -> Tuple[bytes, Optional[str]]:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source), None
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise NotFoundError("Mask file", str(path))
        return path.read_bytes(), str(path)
    return source.read(), getattr(source, "name", None)


def _parse_resolution(comment: str, offset: int, source: Optional[str]) -> Optional[float]:
    match = _RESOLUTION_RE.match(comment)
    if not match:
        return None
    try:
        value = float(match.group(1))
    except ValueError:
        raise MaskFormatError(f"Invalid resolution comment {comment.strip()!r}", offset=offset, source=source)
    if not np.isfinite(value) or value <= 0:
        raise MaskFormatError(f"Resolution must be strictly positive, got {value}", offset=offset, source=source)
    return value


class _PgmReader:
    """Token reader over a PGM byte string that tracks header comments."""

    def __init__(self, data: bytes, source: Optional[str]):
        self.data = data
        self.pos = 0
        self.source = source
        self.resolution: Optional[float] = None

    def error(self, message: str, offset: Optional[int] = None) -> MaskFormatError:
        return MaskFormatError(message, offset=self.pos if offset is None else offset, source=self.source)

    def skip_separators(self):
        data = self.data
        while self.pos < len(data):
            byte = data[self.pos:self.pos + 1]
            if byte in _WHITESPACE:
                self.pos += 1
            elif byte == b"#":
                start = self.pos
                end = data.find(b"\n", start)
                end = len(data) if end < 0 else end
                comment = data[start + 1:end].decode("ascii", errors="replace")
                resolution = _parse_resolution(comment, start, self.source)
                if resolution is not None:
                    self.resolution = resolution
                self.pos = end
            else:
                return

    def next_token(self, what: str) -> Tuple[bytes, int]:
        self.skip_separators()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise self.error(f"Unexpected end of data while reading {what}", offset=start)
        return self.data[start:self.pos], start

    def next_int(self, what: str) -> Tuple[int, int]:
        token, start = self.next_token(what)
        if not token.isdigit():
            raise self.error(f"Expected integer {what}, got {token[:16]!r}", offset=start)
        return int(token), start


def _load_pgm(data: bytes, source: Optional[str]) -> BinaryMask:
    reader = _PgmReader(data, source)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise reader.error(f"Not a PGM file (magic {magic!r})", offset=0)
    reader.pos = 2
    if reader.pos < len(data) and data[reader.pos:reader.pos + 1] not in _WHITESPACE + b"#":
        raise reader.error("Missing separator after PGM magic")

    width, width_at = reader.next_int("width")
    height, height_at = reader.next_int("height")
    maxval, maxval_at = reader.next_int("maxval")
    if width == 0:
        raise reader.error("PGM width must be positive", offset=width_at)
    if height == 0:
        raise reader.error("PGM height must be positive", offset=height_at)
    if not 1 <= maxval <= CANONICAL_MAXVAL:
        raise reader.error(f"PGM maxval must be in 1..{CANONICAL_MAXVAL}, got {maxval}", offset=maxval_at)

    count = width * height
    if magic == b"P5":
        if reader.pos >= len(data) or data[reader.pos:reader.pos + 1] not in _WHITESPACE:
            raise reader.error("Expected a single whitespace byte before the PGM raster")
        raster_at = reader.pos + 1
        raster = data[raster_at:raster_at + count]
        if len(raster) < count:
            raise reader.error(f"PGM raster truncated: expected {count} bytes, got {len(raster)}", offset=len(data))
        if raster_at + count != len(data):
            raise reader.error("Trailing data after PGM raster", offset=raster_at + count)
        values = np.frombuffer(raster, dtype=np.uint8)
        too_large = np.flatnonzero(values > maxval)
        if too_large.size:
            raise reader.error(f"Pixel value exceeds maxval {maxval}", offset=raster_at + int(too_large[0]))
    else:
        values = np.empty(count, dtype=np.int64)
        for k in range(count):
            value, value_at = reader.next_int("pixel value")
            if value > maxval:
                raise reader.error(f"Pixel value {value} exceeds maxval {maxval}", offset=value_at)
            values[k] = value
        reader.skip_separators()
        if reader.pos != len(data):
            raise reader.error("Trailing data after PGM raster")

    return BinaryMask(values.reshape(height, width) > 0, resolution=reader.resolution)


def _load_csv(data: bytes, source: Optional[str]) -> BinaryMask:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MaskFormatError(f"CSV mask is not UTF-8 text ({e.reason})", offset=e.start, source=source)

    resolution: Optional[float] = None
    rows: List[List[int]] = []
    offset = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        line_at = offset
        offset += len(line.encode("utf-8")) + 1
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if rows:
                raise MaskFormatError("Comment inside CSV raster", line=line_no, source=source)
            parsed = _parse_resolution(stripped[1:], line_at, source)
            if parsed is not None:
                resolution = parsed
            continue
        cells = next(csv.reader([stripped]))
        row: List[int] = []
        for cell in cells:
            cell = cell.strip()
            if not (cell.isascii() and cell.isdigit()):
                raise MaskFormatError(f"Expected non-negative integer, got {cell!r}", line=line_no, source=source)
            row.append(int(cell))
        if rows and len(row) != len(rows[0]):
            raise MaskFormatError(
                f"Ragged CSV row: expected {len(rows[0])} values, got {len(row)}",
                line=line_no,
                source=source,
            )
        rows.append(row)

    if not rows:
        raise MaskFormatError("CSV mask has no rows", line=1, source=source)
    return BinaryMask(np.array(rows, dtype=np.int64) > 0, resolution=resolution)


def load_mask(source: MaskSource, fmt: Optional[Union[MaskFormat, str]] = None) -> BinaryMask:
    """Decode a PGM (P2/P5) or integer CSV mask; any value > 0 is DRY."""
    data, name = _read_source(source)
    if fmt is None:
        if name is not None:
            fmt = MaskFormat.from_path(name)
        else:
            fmt = MaskFormat.PGM if data[:2] in (b"P2", b"P5") else MaskFormat.CSV
    fmt = MaskFormat(fmt)
    if fmt is MaskFormat.PGM:
        return _load_pgm(data, name)
    return _load_csv(data, name)


def _resolution_comment(mask: BinaryMask) -> str:
    return f"# resolution: {mask.resolution!r}\n" if mask.resolution is not None else ""


def save_mask(mask: BinaryMask, fmt: Union[MaskFormat, str] = MaskFormat.PGM, plain: bool = False) -> bytes:
    """Encode a mask canonically: DRY as 255 in PGM, 1 in CSV."""
    fmt = MaskFormat(fmt)
    if fmt is MaskFormat.CSV:
        buffer = io.StringIO()
        buffer.write(_resolution_comment(mask))
        for row in mask.pixels.astype(np.uint8):
            buffer.write(",".join(str(v) for v in row) + "\n")
        return buffer.getvalue().encode("utf-8")

    raster = mask.pixels.astype(np.uint8) * CANONICAL_MAXVAL
    magic = "P2" if plain else "P5"
    header = f"{magic}\n{_resolution_comment(mask)}{mask.width} {mask.height}\n{CANONICAL_MAXVAL}\n".encode("ascii")
    if not plain:
        return header + raster.tobytes()
    body = "".join(" ".join(str(v) for v in row) + "\n" for row in raster)
    return header + body.encode("ascii")


class MaskRepository:
    """File-system access to mask frames."""

    SUFFIXES = (".pgm", ".csv")

    def get(self, path: Union[str, Path]) -> BinaryMask:
        """Load one mask file, format chosen by extension."""
        path = Path(path)
        logger.debug(f"Loading mask {path}")
        return load_mask(path, MaskFormat.from_path(path))

    def save(self, mask: BinaryMask, path: Union[str, Path], plain: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(save_mask(mask, MaskFormat.from_path(path), plain=plain))
        return path

    def discover(self, paths: Iterable[Union[str, Path]]) -> List[Path]:
        """Expand directories into their mask files, sorted by file name.

        Missing paths are kept so that callers can report them per file.
        """
        found: List[Path] = []
        for entry in paths:
            entry = Path(entry)
            if entry.is_dir():
                members = sorted(
                    (p for p in entry.iterdir() if p.is_file() and p.suffix.lower() in self.SUFFIXES),
                    key=lambda p: p.name,
                )
                logger.debug(f"Directory {entry}: {len(members)} mask files")
                found.extend(members)
            else:
                found.append(entry)
        return found
