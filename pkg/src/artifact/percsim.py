"""Monte Carlo estimate of bond-percolation crossing in a rectangle.

The lattice has ``width + 1`` columns and ``height + 1`` rows of sites.
``width`` counts the bonds along the bottom side and ``height`` the bonds
along the left side, so the aspect ratio is ``width / height``. A
configuration crosses when an open cluster joins the top row to the bottom
row. Both rows are wired to virtual nodes, so bonds lying inside them play
no role and are not sampled.

Bond states come from a counter-based SplitMix64 stream. Trials are split
into fixed blocks of :data:`BLOCK`; block ``b`` takes its 64-bit key from
``numpy.random.SeedSequence(seed, spawn_key=(b,))``. Bond ``k`` of trial
``t`` in the block has global index ``g = t * n_bonds + k`` and uses
counter ``g // 2``, the high 32 bits for even ``g`` and the low 32 bits
for odd ``g``; it is open when that word is below ``floor(p * 2^32)``. Results therefore depend only on
``seed``, never on how the blocks are scheduled. The union-find kernels
are compiled with numba.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .errors import DomainError

__all__ = [
    "BLOCK",
    "CrossingEstimate",
    "LatticeSpec",
    "dual_horizontal_crossing",
    "estimate_crossing",
    "sample_bonds",
    "sample_crossing",
    "vertical_crossing",
]

BLOCK = 1000
MIN_TRIALS = 100
_THRESH_SCALE = 2 ** 32


@dataclass(frozen=True)
class LatticeSpec:
    """Rectangle geometry, bond probability and seed."""

    width: int
    height: int
    p: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.width) != self.width or self.width < 2:
            raise DomainError("width must be an integer >= 2")
        if int(self.height) != self.height or self.height < 2:
            raise DomainError("height must be an integer >= 2")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("p must lie in [0, 1]")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an integer in [0, 2^64)")

    @property
    def aspect(self) -> float:
        return self.width / self.height

    @property
    def n_vertical(self) -> int:
        return (self.width + 1) * self.height

    @property
    def n_horizontal(self) -> int:
        # Rows 1 .. height - 1 only; the wired top and bottom rows are skipped.
        return self.width * (self.height - 1)

    @property
    def n_bonds(self) -> int:
        return self.n_vertical + self.n_horizontal


@dataclass(frozen=True)
class CrossingEstimate:
    """Sample mean and binomial standard error of the crossing indicator."""

    width: int
    height: int
    p: float
    trials: int
    p_hat: float
    stderr: float
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _threshold(p: float) -> int:
    return min(int(math.floor(p * _THRESH_SCALE)), _THRESH_SCALE)


def _block_key(seed: int, block: int) -> np.uint64:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return ss.generate_state(1, dtype=np.uint64)[0]


@njit(cache=True)
def _splitmix(z):
    z = z * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _fill_bonds(key, t, nb, thr, out):
    # Pairing follows the global index, so odd ``nb`` never reuses a word.
    base = np.uint64(t) * np.uint64(nb)
    z = np.uint64(0)
    for k in range(nb):
        g = base + np.uint64(k)
        if k == 0 or (g & np.uint64(1)) == 0:
            z = _splitmix(key + (g >> np.uint64(1)))
        if (g & np.uint64(1)) == 0:
            out[k] = np.int64(z >> np.uint64(32)) < thr
        else:
            out[k] = np.int64(z & np.uint64(0xFFFFFFFF)) < thr


@njit(cache=True)
def _bonds_block(key, trials, nb, thr):
    out = np.empty((trials, nb), dtype=np.bool_)
    for t in range(trials):
        _fill_bonds(key, t, nb, thr, out[t])
    return out


def sample_bonds(spec: LatticeSpec, trials: int, block: int = 0) -> np.ndarray:
    """Open-bond indicators, shape ``(trials, n_bonds)``, for one block.

    Vertical bonds come first, row-major over ``(row j, column i)`` joining
    ``(i, j)`` to ``(i, j + 1)``. Horizontal bonds follow, row-major over
    rows ``1 .. height - 1``, joining ``(i, j)`` to ``(i + 1, j)``.
    """
    key = _block_key(spec.seed, block)
    return _bonds_block(key, int(trials), spec.n_bonds, _threshold(spec.p))


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]


@njit(cache=True)
def _vertical_one(bond, W, H, parent, size):
    """Top-bottom crossing of one configuration.

    Sites ``(i, j)`` with ``0 < j < H`` get index ``(j - 1)(W + 1) + i``; the
    top row ``j = 0`` is node ``TOP`` and the bottom row ``j = H`` is ``BOT``.
    """
    cols = W + 1
    n_sites = cols * (H - 1)
    TOP = n_sites
    BOT = n_sites + 1
    nv = cols * H
    for k in range(n_sites + 2):
        parent[k] = k
        size[k] = 1
    # Interleaving vertical layers with horizontal rows keeps the trees
    # shallow and the memory access local. Unions are written inline.
    for j in range(H):
        for r in range(cols + (W if j + 1 < H else 0)):
            if r < cols:
                if not bond[j * cols + r]:
                    continue
                a = TOP if j == 0 else (j - 1) * cols + r
                b = BOT if j + 1 == H else j * cols + r
            else:
                i = r - cols
                if not bond[nv + j * W + i]:
                    continue
                a = j * cols + i
                b = a + 1
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
    return _find(parent, TOP) == _find(parent, BOT)


@njit(cache=True)
def _vertical_kernel(bonds, W, H):
    n = (W + 1) * (H - 1) + 2
    parent = np.empty(n, dtype=np.int32)
    size = np.empty(n, dtype=np.int32)
    out = np.zeros(bonds.shape[0], dtype=np.bool_)
    for t in range(bonds.shape[0]):
        out[t] = _vertical_one(bonds[t], W, H, parent, size)
    return out


@njit(cache=True)
def _count_block(key, trials, W, H, thr):
    nb = (W + 1) * H + W * (H - 1)
    n = (W + 1) * (H - 1) + 2
    parent = np.empty(n, dtype=np.int32)
    size = np.empty(n, dtype=np.int32)
    bond = np.empty(nb, dtype=np.bool_)
    hits = 0
    for t in range(trials):
        _fill_bonds(key, t, nb, thr, bond)
        if _vertical_one(bond, W, H, parent, size):
            hits += 1
    return hits


@njit(cache=True)
def _dual_kernel(bonds, W, H):
    """Left-right crossing of closed dual bonds.

    Faces ``(i, j)``, ``0 <= i < W``, ``0 <= j < H``, have index
    ``j W + i``; ``LEFT`` and ``RIGHT`` are the outer faces beyond the
    first and last columns.
    """
    trials = bonds.shape[0]
    cols = W + 1
    n_faces = W * H
    LEFT = n_faces
    RIGHT = n_faces + 1
    nv = cols * H
    out = np.zeros(trials, dtype=np.bool_)
    parent = np.empty(n_faces + 2, dtype=np.int32)
    size = np.empty(n_faces + 2, dtype=np.int32)
    for t in range(trials):
        for k in range(n_faces + 2):
            parent[k] = k
            size[k] = 1
        for j in range(H):
            for i in range(cols):
                if bonds[t, j * cols + i]:
                    continue
                a = LEFT if i == 0 else j * W + i - 1
                b = RIGHT if i == W else j * W + i
                _union(parent, size, a, b)
        for j in range(1, H):
            for i in range(W):
                if not bonds[t, nv + (j - 1) * W + i]:
                    _union(parent, size, (j - 1) * W + i, j * W + i)
        out[t] = _find(parent, LEFT) == _find(parent, RIGHT)
    return out


def vertical_crossing(spec: LatticeSpec, bonds: np.ndarray) -> np.ndarray:
    """Top-bottom crossing indicator for each row of ``bonds``."""
    bonds = np.atleast_2d(np.asarray(bonds, dtype=np.bool_))
    return _vertical_kernel(bonds, spec.width, spec.height)


def dual_horizontal_crossing(spec: LatticeSpec, bonds: np.ndarray) -> np.ndarray:
    """Left-right crossing of the dual lattice through closed bonds."""
    bonds = np.atleast_2d(np.asarray(bonds, dtype=np.bool_))
    return _dual_kernel(bonds, spec.width, spec.height)


def sample_crossing(spec: LatticeSpec, index: int = 0) -> bool:
    """Crossing indicator of one configuration.

    Configuration ``index`` is the first one of block ``index``, so distinct
    indices give independent samples.
    """
    bonds = sample_bonds(spec, 1, block=index)
    return bool(vertical_crossing(spec, bonds)[0])


def _block_hits(args) -> int:
    spec, b, count = args
    return int(_count_block(_block_key(spec.seed, b), count, spec.width, spec.height,
                            _threshold(spec.p)))


def estimate_crossing(spec: LatticeSpec, trials: int, threads: int = 1) -> CrossingEstimate:
    """Crossing frequency over ``trials`` configurations.

    Parameters
    ----------
    threads : int
        Worker threads. The kernel holds the interpreter lock, so this
        only changes scheduling, never the result.
    """
    if int(trials) != trials or trials < MIN_TRIALS:
        raise DomainError(f"trials must be an integer >= {MIN_TRIALS}")
    trials = int(trials)
    nblocks = -(-trials // BLOCK)
    tasks = [(spec, b, min(BLOCK, trials - b * BLOCK)) for b in range(nblocks)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(_block_hits, tasks))
    else:
        hits = sum(map(_block_hits, tasks))
    p_hat = hits / trials
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)
    return CrossingEstimate(spec.width, spec.height, spec.p, trials, p_hat, stderr,
                            int(spec.seed))
