"""Binary masks and their run-length serialization.

RLE format: space-separated run lengths over the row-major flattened mask,
alternating background/foreground and always starting with background (a
leading 0 when the first pixel is foreground).  Runs must sum to
width*height; decode rejects anything else.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MaskFormatError


@dataclass(frozen=True)
class Mask:
    width: int
    height: int
    bits: np.ndarray  # bool, shape (height, width)
    pixel_count: int

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=bool)
        if arr.ndim != 2:
            raise MaskFormatError(f"mask array must be 2-D, got shape {arr.shape}")
        h, w = arr.shape
        return cls(width=w, height=h, bits=arr, pixel_count=int(arr.sum()))

    @classmethod
    def empty(cls, width, height):
        return cls.from_array(np.zeros((height, width), dtype=bool))

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __and__(self, other):
        return Mask.from_array(self.bits & other.bits)

    def __or__(self, other):
        return Mask.from_array(self.bits | other.bits)

    def validate(self):
        if self.bits.shape != (self.height, self.width):
            raise MaskFormatError("mask bits shape does not match declared size")
        if int(self.bits.sum()) != self.pixel_count:
            raise MaskFormatError("mask pixel_count does not match popcount")


def encode_rle(mask):
    flat = mask.bits.ravel()
    if flat.size == 0:
        raise MaskFormatError("cannot encode empty-dimension mask")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    runs = (ends - starts).tolist()
    if flat[0]:
        runs.insert(0, 0)  # leading zero-length background run
    return " ".join(str(r) for r in runs)


def decode_rle(text, dims):
    """Decode an RLE string into a Mask; dims is (width, height)."""
    width, height = dims
    if width <= 0 or height <= 0:
        raise MaskFormatError(f"bad mask dims: {dims}")
    try:
        runs = [int(tok) for tok in text.split()]
    except ValueError as e:
        raise MaskFormatError(f"non-integer run length: {e}") from None
    if any(r < 0 for r in runs):
        raise MaskFormatError("negative run length")
    total = sum(runs)
    if total != width * height:
        raise MaskFormatError(
            f"run lengths sum to {total}, expected {width * height}"
        )
    values = np.zeros(len(runs), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, runs)
    return Mask.from_array(flat.reshape(height, width))


def to_p1(mask):
    """Plain-text bitmap (P1) for eyeballing masks during debugging."""
    rows = ["P1", f"{mask.width} {mask.height}"]
    for row in mask.bits:
        rows.append(" ".join("1" if v else "0" for v in row))
    return "\n".join(rows) + "\n"


def from_p1(text):
    lines = [ln for ln in text.strip().splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0].strip() != "P1":
        raise MaskFormatError("not a P1 bitmap")
    w, h = (int(t) for t in lines[1].split())
    tokens = " ".join(lines[2:]).split()
    if len(tokens) != w * h:
        raise MaskFormatError("P1 pixel count mismatch")
    arr = np.array([t == "1" for t in tokens], dtype=bool).reshape(h, w)
    return Mask.from_array(arr)
