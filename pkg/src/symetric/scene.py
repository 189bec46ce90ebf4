"""Raster scenes: fixed-size boolean bitmaps packed into Python ints.

A scene stores one bit per pixel, row-major, with bit index ``v * width + u``
for pixel ``(u, v)``. Pixel (0, 0) is the top-left corner of the text format.
Packing into a single int makes union/difference/translation single bitwise
operations and makes population counts cheap via ``int.bit_count``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator


@dataclass(frozen=True, slots=True)
class Canvas:
    """Raster dimensions. All evaluation happens on a fixed canvas."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas dimensions must be >= 1, got {self.width}x{self.height}")

    @property
    def npixels(self) -> int:
        return self.width * self.height

    def full_mask(self) -> int:
        return (1 << self.npixels) - 1

    def __str__(self) -> str:
        return f"{self.width}x{self.height}"


@lru_cache(maxsize=None)
def _column_band(width: int, height: int, lo: int, hi: int) -> int:
    """Mask of all pixels with lo <= u < hi, every row."""
    if lo >= hi:
        return 0
    row = ((1 << (hi - lo)) - 1) << lo
    band = 0
    for v in range(height):
        band |= row << (v * width)
    return band


def translate_mask(bits: int, width: int, height: int, dx: int, dy: int) -> int:
    """Translate a packed bitmap by (dx, dy); pixels leaving the canvas are dropped.

    The shift must not let row contents wrap into neighbouring rows, so the
    source is pre-masked to the columns that stay in range.
    """
    if dx > 0:
        bits = (bits & _column_band(width, height, 0, width - dx)) << dx
    elif dx < 0:
        bits = (bits & _column_band(width, height, -dx, width)) >> -dx
    if dy > 0:
        bits = (bits << (dy * width)) & ((1 << (width * height)) - 1)
    elif dy < 0:
        bits >>= -dy * width
    return bits


@dataclass(frozen=True, slots=True)
class Scene:
    """An immutable boolean raster. Equality and hashing are bitwise."""

    width: int
    height: int
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits >> (self.width * self.height):
            raise ValueError("scene bits out of range for canvas")

    @classmethod
    def empty(cls, canvas: Canvas) -> "Scene":
        return cls(canvas.width, canvas.height, 0)

    @classmethod
    def full(cls, canvas: Canvas) -> "Scene":
        return cls(canvas.width, canvas.height, canvas.full_mask())

    @classmethod
    def from_pixels(cls, canvas: Canvas, pixels) -> "Scene":
        bits = 0
        for u, v in pixels:
            if not (0 <= u < canvas.width and 0 <= v < canvas.height):
                raise ValueError(f"pixel ({u}, {v}) outside {canvas}")
            bits |= 1 << (v * canvas.width + u)
        return cls(canvas.width, canvas.height, bits)

    @property
    def canvas(self) -> Canvas:
        return Canvas(self.width, self.height)

    def get(self, u: int, v: int) -> bool:
        """Pixel lookup; reads outside the canvas are False."""
        if not (0 <= u < self.width and 0 <= v < self.height):
            return False
        return bool(self.bits >> (v * self.width + u) & 1)

    def popcount(self) -> int:
        return self.bits.bit_count()

    def pixels(self) -> Iterator[tuple[int, int]]:
        """Iterate filled pixels as (u, v) pairs."""
        bits = self.bits
        while bits:
            low = bits & -bits
            idx = low.bit_length() - 1
            yield idx % self.width, idx // self.width
            bits ^= low

    def translate(self, dx: int, dy: int) -> "Scene":
        return Scene(self.width, self.height, translate_mask(self.bits, self.width, self.height, dx, dy))

    def union(self, other: "Scene") -> "Scene":
        self._check_dims(other)
        return Scene(self.width, self.height, self.bits | other.bits)

    def difference(self, other: "Scene") -> "Scene":
        self._check_dims(other)
        return Scene(self.width, self.height, self.bits & ~other.bits)

    def _check_dims(self, other: "Scene") -> None:
        if (self.width, self.height) != (other.width, other.height):
            raise ValueError(f"scene dimension mismatch: {self.width}x{self.height} vs {other.width}x{other.height}")

    def to_text(self) -> str:
        """Serialize to the scene text format (header line plus 0/1 rows)."""
        lines = [f"scene {self.width} {self.height}"]
        for v in range(self.height):
            row = self.bits >> (v * self.width)
            lines.append("".join("1" if row >> u & 1 else "0" for u in range(self.width)))
        return "\n".join(lines) + "\n"

    def to_ascii(self, filled: str = "#", blank: str = ".") -> str:
        """Human-readable rendering for logs."""
        rows = []
        for v in range(self.height):
            row = self.bits >> (v * self.width)
            rows.append("".join(filled if row >> u & 1 else blank for u in range(self.width)))
        return "\n".join(rows)

    def to_rle(self) -> str:
        """Run-length encoding of the bit string, e.g. ``0x5 1x3`` (row-major)."""
        n = self.width * self.height
        runs = []
        pos = 0
        while pos < n:
            bit = self.bits >> pos & 1
            length = 1
            while pos + length < n and (self.bits >> (pos + length) & 1) == bit:
                length += 1
            runs.append(f"{bit}x{length}")
            pos += length
        return " ".join(runs)

    @classmethod
    def from_rle(cls, canvas: Canvas, rle: str) -> "Scene":
        bits = 0
        pos = 0
        for run in rle.split():
            bit_s, _, len_s = run.partition("x")
            length = int(len_s)
            if bit_s == "1":
                bits |= ((1 << length) - 1) << pos
            pos += length
        if pos != canvas.npixels:
            raise ValueError(f"RLE covers {pos} pixels, expected {canvas.npixels}")
        return cls(canvas.width, canvas.height, bits)


class SceneFormatError(ValueError):
    """Malformed scene text."""


def parse_scene(text: str) -> Scene:
    """Parse the scene text format produced by :meth:`Scene.to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SceneFormatError("empty scene text")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "scene":
        raise SceneFormatError(f"bad header {lines[0]!r}: expected 'scene <width> <height>'")
    try:
        width, height = int(header[1]), int(header[2])
    except ValueError as exc:
        raise SceneFormatError(f"bad header dimensions in {lines[0]!r}") from exc
    if width < 1 or height < 1:
        raise SceneFormatError(f"bad dimensions {width}x{height}")
    if len(lines) - 1 != height:
        raise SceneFormatError(f"expected {height} rows, got {len(lines) - 1}")
    bits = 0
    for v, line in enumerate(lines[1:]):
        row = line.strip()
        if len(row) != width:
            raise SceneFormatError(f"row {v}: expected {width} characters, got {len(row)}")
        for u, ch in enumerate(row):
            if ch == "1":
                bits |= 1 << (v * width + u)
            elif ch != "0":
                raise SceneFormatError(f"row {v}: invalid character {ch!r}")
    return Scene(width, height, bits)


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scene.to_text())
