"""PGM images, CSV tables and key=value config files."""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import numpy as np

__all__ = ["PgmError", "read_image_pgm", "write_image_pgm", "write_csv", "read_matrix_csv",
           "read_config", "format_float"]


class PgmError(ValueError):
    pass


def _header_tokens(data: bytes, count: int):
    """Return ``count`` whitespace-separated header tokens and the offset after them."""
    tokens, pos, n = [], 0, len(data)
    while len(tokens) < count:
        while pos < n and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise PgmError(f"truncated PGM header at byte offset {pos}")
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def read_image_pgm(path, square: bool = True) -> np.ndarray:
    """Read a P2 or P5 PGM file into floats in ``[0, 1]`` (divided by maxval)."""
    data = Path(path).read_bytes()
    if len(data) < 2:
        raise PgmError("truncated PGM file at byte offset 0")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic {magic!r} at byte offset 0 (expected P2 or P5)")
    toks, pos = _header_tokens(data[2:], 3)
    vals = []
    for tok, off in toks:
        try:
            vals.append(int(tok))
        except ValueError:
            raise PgmError(f"malformed header field {tok!r} at byte offset {off + 2}") from None
    width, height, maxval = vals
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PgmError(f"invalid PGM dimensions or maxval at byte offset {toks[0][1] + 2}")
    npx = width * height
    body_start = pos + 2
    if magic == b"P5":
        body_start += 1  # single whitespace after maxval
        bpp = 1 if maxval < 256 else 2
        body = data[body_start:]
        if len(body) < npx * bpp:
            raise PgmError(f"truncated pixel data at byte offset {body_start + len(body)}: "
                           f"expected {npx * bpp} bytes, found {len(body)}")
        pix = np.frombuffer(body[:npx * bpp], dtype=">u2" if bpp == 2 else np.uint8)
    else:
        parts = data[body_start:].split()
        if len(parts) < npx:
            raise PgmError(f"truncated pixel data at byte offset {len(data)}: "
                           f"expected {npx} samples, found {len(parts)}")
        try:
            pix = np.array([int(x) for x in parts[:npx]])
        except ValueError:
            raise PgmError(f"non-integer sample in P2 body after byte offset {body_start}") from None
    if np.any(pix > maxval):
        raise PgmError("sample exceeds maxval")
    img = pix.reshape(height, width).astype(float) / maxval
    if square and width != height:
        raise PgmError(f"image is {width}x{height}; the grid operator needs a square image")
    return img


def write_image_pgm(matrix, path, ascii: bool = False) -> None:
    """Write ``matrix`` (values in ``[0, 1]``) as an 8-bit PGM, rounding half up."""
    img = np.asarray(matrix, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be a 2-D array")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.min() < 0 or img.max() > 1:
        warnings.warn("image values outside [0, 1] were clamped", RuntimeWarning, stacklevel=2)
        img = np.clip(img, 0.0, 1.0)
    q = np.floor(img * 255 + 0.5).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as fh:
        if ascii:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in q:
                fh.write((" ".join(str(int(x)) for x in row) + "\n").encode())
        else:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(q.tobytes())


def format_float(x) -> str:
    """Shortest round-trip repr, so CSVs are reproducible bit for bit."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(x) if not isinstance(x, str) else x for x in row])


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV (no header) into a 2-D float array."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    try:
        out = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if out.ndim != 2:
        raise ValueError(f"{path}: rows have unequal lengths")
    return out


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys use dashes or underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out
