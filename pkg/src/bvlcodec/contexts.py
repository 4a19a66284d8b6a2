"""Rotation-normalized context labels for 3x3 neighborhood patches.

Section coding looks at two 3x3 crops around the cell being coded: a ternary
patch from the current section (0 unknown, 1 known-empty, 2 known-occupied)
and a binary patch from the previous section's reconstruction. Rows index the
z offset (-1, 0, +1), columns the x offset.

Patches that differ only by a quarter-turn rotation carry the same geometric
information, so the ternary patch is mapped to a canonical orientation before
it selects a probability model: the turn count that maximizes an injective
base-3 score is applied to the patch, and the same turn is applied to the
binary patch. The canonical turn and the canonical patch index are
precomputed for all 3^9 ternary patches and kept in lookup tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PATCH_COUNT = 3**9  # 19683 ternary patches
BINARY_PATCH_COUNT = 2**9

_POW2 = (2 ** np.arange(9)).astype(np.int64)
_POW3 = (3 ** np.arange(9)).astype(np.int64)

# Cell (i, j) contributes digit position i + 3*j (column-major scan).
_DIGIT_GRID = np.arange(9).reshape(3, 3, order="F")

# Anti-diagonal scan used by the rotation score: cells near (0, 0) first.
_SCORE_CELLS = ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0), (1, 2), (2, 1), (2, 2))
_SCORE_DIGITS = np.array([i + 3 * j for i, j in _SCORE_CELLS])


def ternary_index(patch) -> int:
    """Bijective base-3 column-scan index of a {0,1,2} 3x3 patch."""
    a = np.asarray(patch, dtype=np.int64)
    return int(a.ravel(order="F") @ _POW3)


def binary_index(patch) -> int:
    """Bijective base-2 column-scan index of a {0,1} 3x3 patch."""
    a = np.asarray(patch, dtype=np.int64)
    return int(a.ravel(order="F") @ _POW2)


def rotation_score(patch) -> int:
    """Injective score ranking the four rotations of a ternary patch.

    Base-3 expansion over a fixed anti-diagonal cell order; distinct patches
    always get distinct scores, so ties only happen between identical
    rotations.
    """
    a = np.asarray(patch, dtype=np.int64)
    return int(a.ravel(order="F")[_SCORE_DIGITS] @ _POW3)


def rot90(patch, turns: int) -> np.ndarray:
    """Rotate a 3x3 patch by quarter turns, counterclockwise in (z, x)."""
    return np.rot90(np.asarray(patch), turns % 4)


@dataclass(frozen=True)
class NormTables:
    """Canonicalization tables over all 19683 ternary patches.

    alpha_star[i] is the smallest turn count whose rotation of patch i has
    the maximal rotation score; i_star[i] is the index of that rotated patch.
    """

    alpha_star: np.ndarray
    i_star: np.ndarray


def build_norm_tables() -> NormTables:
    indices = np.arange(PATCH_COUNT, dtype=np.int64)
    digits = (indices[:, None] // _POW3[None, :]) % 3
    rotated_index = np.empty((4, PATCH_COUNT), dtype=np.int64)
    scores = np.empty((4, PATCH_COUNT), dtype=np.int64)
    for k in range(4):
        # Rotating the digit grid gives, per target digit, the source digit.
        perm = np.rot90(_DIGIT_GRID, k).ravel(order="F")
        rotated = digits[:, perm]
        rotated_index[k] = rotated @ _POW3
        scores[k] = rotated[:, _SCORE_DIGITS] @ _POW3
    alpha = np.argmax(scores, axis=0)  # first (smallest) turn wins ties
    i_star = rotated_index[alpha, indices]
    return NormTables(alpha.astype(np.uint8), i_star.astype(np.int32))


@lru_cache(maxsize=1)
def get_norm_tables() -> NormTables:
    return build_norm_tables()


@lru_cache(maxsize=1)
def get_norm_lists() -> tuple[list[int], list[int]]:
    """Tables as plain lists for the per-cell coding loop. Do not mutate."""
    tables = get_norm_tables()
    return tables.alpha_star.tolist(), tables.i_star.tolist()


def _rotated_binary_weights() -> tuple[tuple[int, ...], ...]:
    # weight[turns][digit] = 2^(digit position after rotating by `turns`),
    # so the rotated binary index is a plain weighted sum over the unrotated
    # patch, cell by cell.
    out = []
    for turns in range(4):
        weights = []
        for digit in range(9):
            i, j = digit % 3, digit // 3
            for _ in range(turns):
                i, j = 2 - j, i
            weights.append(1 << (i + 3 * j))
        out.append(tuple(weights))
    return tuple(out)


BINARY_WEIGHTS_BY_TURN = _rotated_binary_weights()


def normalized_context(current_patch, previous_patch, tables: NormTables) -> tuple[int, int]:
    """Context label: canonical ternary index plus co-rotated binary index."""
    ia = ternary_index(current_patch)
    turns = int(tables.alpha_star[ia])
    return int(tables.i_star[ia]), binary_index(rot90(previous_patch, turns))
