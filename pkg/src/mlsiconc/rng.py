"""Counter-based uniforms: draw ``k`` of stream ``seed`` depends only on ``(seed, k)``."""

from __future__ import annotations

import numpy as np


def uniform_rows(seed: int, start: int, count: int, width: int, stream: int = 0) -> np.ndarray:
    """Rows ``start .. start+count-1`` of an infinite ``(*, width)`` uniform matrix.

    Row ``k`` occupies a fixed block of Philox outputs, so any chunking of the
    rows reproduces the same numbers.
    """
    stride = -(-width // 4) * 4
    bg = np.random.Philox(key=[int(seed) & (2**64 - 1), int(stream)])
    bg.advance(start * stride // 4)
    raw = np.random.Generator(bg).random(count * stride)
    return raw.reshape(count, stride)[:, :width]
