"""Binary PGM (P5) reading and writing.

Images are plain 2D float64 numpy arrays in row-major order. Intensities are
kept unclamped everywhere in the library; clamping to [0, 255] happens only
here, at save time.
"""

import numpy as np

__all__ = ["PgmParseError", "load_pgm", "save_pgm"]


class PgmParseError(ValueError):
    """Raised on malformed PGM input. Carries the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _read_token(buf, pos):
    # Skip whitespace and '#' comments between header tokens.
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PgmParseError("truncated header", start)
    return buf[start:pos], pos


def load_pgm(data: bytes) -> np.ndarray:
    """Decode binary PGM bytes into a float64 image of shape (height, width)."""
    if data[:2] != b"P5":
        raise PgmParseError("unsupported magic (expected P5)", 0)
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PgmParseError(f"malformed header token {tok!r}", pos - len(tok)) from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmParseError("non-positive image dimensions", 2)
    if maxval > 255 or maxval <= 0:
        raise PgmParseError(f"unsupported maxval {maxval}", 2)
    # Exactly one whitespace byte separates the header from the payload.
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PgmParseError("missing whitespace before payload", pos)
    pos += 1
    expected = width * height
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise PgmParseError("truncated payload", pos + len(payload))
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return pixels.reshape(height, width)


def save_pgm(img: np.ndarray) -> bytes:
    """Encode a 2D image as binary PGM (maxval 255).

    Intensities are clamped to [0, 255], then rounded half-away-from-zero.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2D image")
    height, width = img.shape
    clamped = np.clip(img, 0.0, 255.0)
    # Round half away from zero (values are non-negative after the clamp).
    rounded = np.floor(clamped + 0.5).astype(np.uint8)
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + rounded.tobytes()
