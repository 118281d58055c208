"""Image type, PPM/PNG codecs, and the preprocessing chain.

Images are 8-bit RGB held as (height, width, 3) uint8 arrays. The codecs are
self-contained: binary PPM (P6, maxval 255) both ways, and PNG restricted to
what the pipeline needs (8-bit RGB/RGBA in, RGB out, alpha composited over
white). PNG compression rides on zlib; everything else is explicit so decode
failures can report a byte offset.

Preprocessing follows the acquisition story: crop a scan down to one shrimp,
flood-fill the near-uniform scanner background to black, optionally mirror
for augmentation, then letterbox onto a fixed square tensor in [0, 1].
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BoundsError, DecodeError, ParameterError, UnsupportedFormatError

# Default per-channel Chebyshev tolerance for background removal; scanner
# backgrounds are near-uniform, water stains push a little past this.
DEFAULT_BACKGROUND_TOLERANCE = 28

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class Image:
    """8-bit RGB image; `pixels` has shape (height, width, 3), dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ParameterError(f"pixels must be (h, w, 3) uint8, got {p.shape} {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ParameterError("image dimensions must be positive")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class CropRect:
    """Pixel rectangle: offset (x, y), extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise BoundsError(f"rect offset must be nonnegative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise BoundsError(f"rect extent must be positive, got {self.w}x{self.h}")


# ---------------------------------------------------------------------------
# PPM (P6, 8-bit)

class _Cursor:
    """Byte cursor with PNM token parsing (whitespace and # comments)."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip_space(self):
        d, n = self.data, len(self.data)
        while self.pos < n:
            b = d[self.pos]
            if b in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif b == ord("#"):
                while self.pos < n and d[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def token(self, what):
        self._skip_space()
        start = self.pos
        d, n = self.data, len(self.data)
        while self.pos < n and d[self.pos] not in b" \t\r\n\x0b\x0c#":
            self.pos += 1
        if self.pos == start:
            raise DecodeError(f"expected {what}", offset=start)
        return d[start:self.pos], start

    def int_token(self, what):
        tok, start = self.token(what)
        try:
            return int(tok), start
        except ValueError:
            raise DecodeError(f"expected integer {what}, got {tok!r}", offset=start) from None


def _decode_ppm(data: bytes) -> Image:
    cur = _Cursor(data)
    magic, off = cur.token("magic number")
    if magic in (b"P1", b"P2", b"P3", b"P4", b"P5"):
        raise UnsupportedFormatError(f"only binary P6 is supported, got {magic.decode()}",
                                     offset=off)
    if magic != b"P6":
        raise DecodeError(f"not a PPM file (magic {magic!r})", offset=off)
    width, off = cur.int_token("width")
    if width < 1:
        raise DecodeError(f"invalid width {width}", offset=off)
    height, off = cur.int_token("height")
    if height < 1:
        raise DecodeError(f"invalid height {height}", offset=off)
    maxval, off = cur.int_token("maxval")
    if maxval != 255:
        raise UnsupportedFormatError(
            f"only 8-bit PPM (maxval 255) is supported, got maxval {maxval}", offset=off)
    if cur.pos >= len(data):
        raise DecodeError("missing raster", offset=cur.pos)
    cur.pos += 1  # exactly one whitespace byte separates header and raster
    need = width * height * 3
    raster = data[cur.pos:cur.pos + need]
    if len(raster) < need:
        raise DecodeError(f"raster truncated: need {need} bytes, have {len(raster)}",
                          offset=len(data))
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return Image(pixels=pixels.copy())


def _encode_ppm(img: Image) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


# ---------------------------------------------------------------------------
# PNG (8-bit RGB / RGBA, non-interlaced)

def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    take_a = (pa <= pb) & (pa <= pc)
    take_b = (~take_a) & (pb <= pc)
    return np.where(take_a, a, np.where(take_b, b, c))


def _unfilter(raw: bytes, width: int, height: int, bpp: int) -> np.ndarray:
    stride = width * bpp
    if len(raw) != height * (stride + 1):
        raise DecodeError(f"decompressed image data has {len(raw)} bytes, "
                          f"expected {height * (stride + 1)}")
    buf = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride + 1)
    out = np.empty((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(height):
        ftype = int(buf[y, 0])
        line = buf[y, 1:]
        if ftype == 0:
            recon = line.copy()
        elif ftype == 1:  # Sub: per-channel running sum along the row
            recon = (line.reshape(width, bpp).astype(np.int64).cumsum(axis=0)
                     % 256).astype(np.uint8).reshape(stride)
        elif ftype == 2:  # Up
            recon = line + prev
        elif ftype == 3:  # Average
            recon = np.empty(stride, dtype=np.uint8)
            left = np.zeros(bpp, dtype=np.int32)
            up = prev.reshape(width, bpp).astype(np.int32)
            rl = line.reshape(width, bpp).astype(np.int32)
            for x in range(width):
                left = (rl[x] + ((left + up[x]) >> 1)) & 255
                recon[x * bpp:(x + 1) * bpp] = left
        elif ftype == 4:  # Paeth
            recon = np.empty(stride, dtype=np.uint8)
            left = np.zeros(bpp, dtype=np.int32)
            upleft = np.zeros(bpp, dtype=np.int32)
            up = prev.reshape(width, bpp).astype(np.int32)
            rl = line.reshape(width, bpp).astype(np.int32)
            for x in range(width):
                left = (rl[x] + _paeth(left, up[x], upleft)) & 255
                recon[x * bpp:(x + 1) * bpp] = left
                upleft = up[x]
        else:
            raise DecodeError(f"unknown scanline filter {ftype} on row {y}")
        out[y] = recon
        prev = recon
    return out.reshape(height, width, bpp)


def _decode_png(data: bytes) -> Image:
    if not data.startswith(_PNG_SIGNATURE):
        raise DecodeError("bad PNG signature", offset=0)
    pos = len(_PNG_SIGNATURE)
    header = None
    idat = []
    seen_iend = False
    while pos < len(data):
        if pos + 8 > len(data):
            raise DecodeError("truncated chunk header", offset=pos)
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        chunk_start = pos
        pos += 8
        if pos + length + 4 > len(data):
            raise DecodeError(f"truncated {ctype.decode('latin1')} chunk", offset=chunk_start)
        body = data[pos:pos + length]
        pos += length
        (crc,) = struct.unpack(">I", data[pos:pos + 4])
        pos += 4
        if zlib.crc32(ctype + body) & 0xFFFFFFFF != crc:
            raise DecodeError(f"CRC mismatch in {ctype.decode('latin1')} chunk",
                              offset=chunk_start)
        if ctype == b"IHDR":
            if length != 13:
                raise DecodeError("IHDR must be 13 bytes", offset=chunk_start)
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat.append(body)
        elif ctype == b"IEND":
            seen_iend = True
            break
    if header is None:
        raise DecodeError("missing IHDR chunk")
    if not seen_iend:
        raise DecodeError("missing IEND chunk", offset=len(data))
    width, height, depth, color, compression, filt, interlace = header
    if width < 1 or height < 1:
        raise DecodeError(f"invalid dimensions {width}x{height}")
    if depth != 8:
        raise UnsupportedFormatError(f"only 8-bit PNG is supported, got depth {depth}")
    if color not in (2, 6):
        raise UnsupportedFormatError(f"only RGB/RGBA PNG is supported, got color type {color}")
    if compression != 0 or filt != 0:
        raise UnsupportedFormatError("nonstandard PNG compression/filter method")
    if interlace != 0:
        raise UnsupportedFormatError("interlaced PNG is not supported")
    if not idat:
        raise DecodeError("missing IDAT data")
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise DecodeError(f"corrupt IDAT stream: {exc}") from None
    bpp = 4 if color == 6 else 3
    pixels = _unfilter(raw, width, height, bpp)
    if color == 6:
        rgb = pixels[:, :, :3].astype(np.uint32)
        a = pixels[:, :, 3:4].astype(np.uint32)
        # composite over white, rounding to nearest
        pixels = ((rgb * a + 255 * (255 - a) + 127) // 255).astype(np.uint8)
    return Image(pixels=pixels)


def _png_chunk(ctype: bytes, body: bytes) -> bytes:
    return (struct.pack(">I", len(body)) + ctype + body
            + struct.pack(">I", zlib.crc32(ctype + body) & 0xFFFFFFFF))


def _encode_png(img: Image) -> bytes:
    h, w = img.height, img.width
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    rows = np.zeros((h, w * 3 + 1), dtype=np.uint8)
    rows[:, 1:] = img.pixels.reshape(h, w * 3)  # filter byte 0 on every row
    idat = zlib.compress(rows.tobytes(), 6)
    return (_PNG_SIGNATURE + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", idat) + _png_chunk(b"IEND", b""))


# ---------------------------------------------------------------------------
# Public codec entry points

def decode_image(data: bytes) -> Image:
    """Decode PPM (P6) or PNG bytes into an Image."""
    if len(data) == 0:
        raise DecodeError("empty input", offset=0)
    if data.startswith(_PNG_SIGNATURE[:4]):
        return _decode_png(data)
    if data[:1] == b"P":
        return _decode_ppm(data)
    raise DecodeError("unrecognized image format", offset=0)


def encode_image(img: Image, format: str = "ppm") -> bytes:
    """Encode an Image as "ppm" (P6) or "png" bytes."""
    if format == "ppm":
        return _encode_ppm(img)
    if format == "png":
        return _encode_png(img)
    raise ParameterError(f"unknown format {format!r} (use 'ppm' or 'png')")


def read_image(path) -> Image:
    with open(path, "rb") as f:
        return decode_image(f.read())


def write_image(img: Image, path) -> None:
    """Write by extension (.ppm or .png)."""
    name = str(path).lower()
    fmt = "png" if name.endswith(".png") else "ppm"
    with open(path, "wb") as f:
        f.write(encode_image(img, fmt))


# ---------------------------------------------------------------------------
# Geometry and preprocessing

def crop(img: Image, rect: CropRect) -> Image:
    """Copy of the rectangle; raises BoundsError if it leaves the image."""
    if rect.x + rect.w > img.width or rect.y + rect.h > img.height:
        raise BoundsError(f"rect {rect} exceeds image {img.width}x{img.height}")
    return Image(pixels=img.pixels[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w].copy())


def mirror_horizontal(img: Image) -> Image:
    """Flip left-right: pixel (x, y) moves to (width-1-x, y)."""
    return Image(pixels=img.pixels[:, ::-1].copy())


def remove_background(img: Image, tolerance: int = DEFAULT_BACKGROUND_TOLERANCE) -> Image:
    """Blacken every pixel 4-connected to a corner through pixels within
    `tolerance` (per-channel Chebyshev distance) of that corner's color.

    Pixels not connected to any corner are left untouched, so interior
    regions that happen to match the background color survive.
    """
    if not 0 <= tolerance <= 255:
        raise ParameterError(f"tolerance must lie in [0, 255], got {tolerance}")
    arr = img.pixels.astype(np.int16)
    h, w = arr.shape[:2]
    corners = [(0, 0), (0, w - 1), (h - 1, 0), (h - 1, w - 1)]
    background = np.zeros((h, w), dtype=bool)
    labeled = {}
    for r, c in corners:
        seed = tuple(int(v) for v in arr[r, c])
        if seed not in labeled:
            mask = np.abs(arr - np.array(seed, dtype=np.int16)).max(axis=2) <= tolerance
            labeled[seed] = ndimage.label(mask)[0]
        labels = labeled[seed]
        background |= labels == labels[r, c]
    out = img.pixels.copy()
    out[background] = 0
    return Image(pixels=out)


def _bilinear_resize(pixels: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Bilinear resample to (new_h, new_w, 3), float64 in [0, 255].

    Uses pixel-center alignment, so an identity resize reproduces the source
    exactly."""
    h, w = pixels.shape[:2]
    src = pixels.astype(np.float64)
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    p00 = src[y0c[:, None], x0c[None, :]]
    p01 = src[y0c[:, None], x1c[None, :]]
    p10 = src[y1c[:, None], x0c[None, :]]
    p11 = src[y1c[:, None], x1c[None, :]]
    top = p00 * (1.0 - fx) + p01 * fx
    bot = p10 * (1.0 - fx) + p11 * fx
    return top * (1.0 - fy) + bot * fy


def letterbox_to_tensor(img: Image, target: int, dtype=np.float32) -> np.ndarray:
    """Aspect-preserving resize onto a black target x target canvas, scaled
    to [0, 1], returned as a (3, target, target) tensor."""
    if target < 8:
        raise ParameterError(f"target side must be >= 8, got {target}")
    scale = min(target / img.width, target / img.height)
    new_w = min(target, max(1, round(img.width * scale)))
    new_h = min(target, max(1, round(img.height * scale)))
    content = _bilinear_resize(img.pixels, new_h, new_w)
    canvas = np.zeros((target, target, 3), dtype=np.float64)
    oy = (target - new_h) // 2
    ox = (target - new_w) // 2
    canvas[oy:oy + new_h, ox:ox + new_w] = content
    return (canvas.transpose(2, 0, 1) / 255.0).astype(dtype)


# ---------------------------------------------------------------------------
# Crop manifest (one line per source image)

@dataclass(frozen=True)
class CropJob:
    source: str
    rect: CropRect
    output: str


def parse_crop_manifest(text: str) -> list[CropJob]:
    """Parse `source-path x y w h output-path` lines (whitespace-separated;
    blank lines and #-comments ignored)."""
    jobs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 6:
            raise ParameterError(f"crop manifest line {lineno}: expected "
                                 f"'source x y w h output', got {len(parts)} fields")
        source, sx, sy, sw, sh, output = parts
        try:
            rect = CropRect(x=int(sx), y=int(sy), w=int(sw), h=int(sh))
        except ValueError:
            raise ParameterError(f"crop manifest line {lineno}: non-integer rectangle") from None
        jobs.append(CropJob(source=source, rect=rect, output=output))
    return jobs
