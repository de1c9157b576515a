"""Root-raised-cosine pulse shaping filters."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def rrc_taps(sps: int, span: int, rolloff: float) -> np.ndarray:
    """Unit-energy root-raised-cosine taps.

    Parameters
    ----------
    sps : samples per symbol.
    span : filter length in symbols (tap count is ``span * sps + 1``).
    rolloff : excess-bandwidth factor in (0, 1].

    The taps are normalised to unit energy (``sum h**2 == 1``) so that a
    matched pair has unit noise gain.
    """
    if sps < 1 or span < 1:
        raise ValueError("sps and span must be >= 1")
    if not 0.0 < rolloff <= 1.0:
        raise ValueError("rolloff must be in (0, 1]")
    beta = rolloff
    n = np.arange(-span * sps // 2, span * sps // 2 + 1)
    t = n / sps  # time in symbol periods
    h = np.empty_like(t)

    # Regular samples; singular points handled below.
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(np.pi * t * (1 - beta)) + 4 * beta * t * np.cos(
            np.pi * t * (1 + beta)
        )
        den = np.pi * t * (1 - (4 * beta * t) ** 2)
        h = num / den

    h[t == 0] = 1 - beta + 4 * beta / np.pi
    sing = np.abs(np.abs(4 * beta * t) - 1.0) < 1e-12
    if np.any(sing):
        h[sing] = (beta / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
            + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
        )
    h = h / np.sqrt(np.sum(h**2))
    h.flags.writeable = False
    return h
