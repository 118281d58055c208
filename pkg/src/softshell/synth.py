"""Synthetic shrimp-scan generator.

Stands in for the private scanner dataset so the full training regime can be
reproduced on any machine. Both classes render an elongated light-pink body
on a near-uniform scanner-like background with a regular segment pattern;
the soft-shell class additionally gets a sinusoidally dented outline and
dark crease lines, the wrinkled look of a shell that has not re-hardened.

Everything is drawn from one seeded PCG32 stream in a fixed order, so a given
(counts, seed) pair always produces byte-identical files.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .dataset import LABEL_NAMES, ORDINARY_LABEL, SOFT_SHELL_LABEL
from .errors import ParameterError
from .imaging import Image, encode_image
from .rng import Rng

_SYNTH_STREAM = 0x53484D50


def _render_shrimp(rng: Rng, soft: bool) -> Image:
    # Fixed draw order keeps the stream layout identical for both classes.
    u = rng.uniforms(24)
    w = int(160 + u[0] * 64)
    h = int(112 + u[1] * 48)
    bg = 216.0 + u[2:5] * 20.0

    cx = w * (0.5 + (u[5] - 0.5) * 0.14)
    cy = h * (0.5 + (u[6] - 0.5) * 0.14)
    angle = (u[7] - 0.5) * math.radians(50.0)
    a = w * (0.30 + u[8] * 0.10)  # body semi-axes
    b = h * (0.16 + u[9] * 0.07)
    body = np.array([222.0 + u[10] * 22.0, 162.0 + u[11] * 30.0, 148.0 + u[12] * 28.0])

    seg_cycles = 3.5 + u[13] * 2.0
    seg_phase = u[14] * 2.0 * math.pi
    seg_amp = 0.10 + u[15] * 0.06

    dent_lobes = 7 + int(u[16] * 5.0)
    dent_amp = 0.05 + u[17] * 0.06
    dent_phase = u[18] * 2.0 * math.pi
    crease_freq = 6.0 + u[19] * 5.0
    crease_skew = 1.5 + u[20] * 2.0
    crease_amp = 0.30 + u[21] * 0.15
    crease_phase = u[22] * 2.0 * math.pi
    crease2_phase = u[23] * 2.0 * math.pi

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    ca, sa = math.cos(angle), math.sin(angle)
    ub = ((xx - cx) * ca + (yy - cy) * sa) / a   # body frame, unit ellipse
    vb = (-(xx - cx) * sa + (yy - cy) * ca) / b
    rho = np.sqrt(ub * ub + vb * vb)
    phi = np.arctan2(vb, ub)

    limit = 1.0
    if soft:
        limit = 1.0 + dent_amp * np.sin(dent_lobes * phi + dent_phase)
    alpha = np.clip((limit - rho) * 18.0, 0.0, 1.0)  # ~1px soft edge

    shading = 1.0 - 0.28 * np.clip(rho / np.maximum(limit, 1e-9), 0.0, 1.0) ** 2
    seg = np.clip((np.sin(2.0 * math.pi * seg_cycles * ub + seg_phase) - 0.55) / 0.45,
                  0.0, 1.0)
    factor = shading * (1.0 - seg_amp * seg)
    if soft:
        c1 = np.clip(np.sin(2.0 * math.pi * (crease_freq * ub + 0.6 * vb) + crease_phase),
                     0.0, 1.0) ** 8
        c2 = np.clip(np.sin(2.0 * math.pi * (crease_freq * 0.7 * ub - crease_skew * vb)
                            + crease2_phase), 0.0, 1.0) ** 8
        factor = factor * (1.0 - crease_amp * c1) * (1.0 - 0.8 * crease_amp * c2)

    # scanner-like background: constant color with a faint vertical gradient
    canvas = np.empty((h, w, 3), dtype=np.float64)
    grad = (yy / h - 0.5) * 6.0
    for ch in range(3):
        canvas[:, :, ch] = bg[ch] + grad
    body_field = body[None, None, :] * factor[:, :, None]
    canvas = canvas * (1.0 - alpha[:, :, None]) + body_field * alpha[:, :, None]

    noise = rng.uniforms(h * w * 3).reshape(h, w, 3) * 9.0 - 4.5
    canvas += noise
    return Image(pixels=np.clip(np.rint(canvas), 0, 255).astype(np.uint8))


def synth_generate(n_ordinary: int, n_soft: int, seed: int, out) -> str:
    """Write `n_ordinary` + `n_soft` synthetic scans into the two class
    folders under `out`; returns the dataset root path."""
    if n_ordinary < 0 or n_soft < 0:
        raise ParameterError("sample counts must be nonnegative")
    root = str(out)
    for name in LABEL_NAMES:
        os.makedirs(os.path.join(root, name), exist_ok=True)
    rng = Rng(seed, stream=_SYNTH_STREAM)
    jobs = [(LABEL_NAMES[ORDINARY_LABEL], "ordinary", False, n_ordinary),
            (LABEL_NAMES[SOFT_SHELL_LABEL], "soft", True, n_soft)]
    for folder, stem, soft, count in jobs:
        for i in range(count):
            img = _render_shrimp(rng, soft=soft)
            path = os.path.join(root, folder, f"{stem}-{i:04d}.ppm")
            with open(path, "wb") as f:
                f.write(encode_image(img, "ppm"))
    return root
