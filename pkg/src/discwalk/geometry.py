"""Canonical boxes for axis-parallel range decomposition.

Points are sorted along ``x_1`` (ties broken by index) and cut into aligned
dyadic blocks of at least ``ell`` points. Each block is re-sorted along
``x_2`` and cut again, and so on up to ``x_d``. The blocks of the last axis
are the canonical boxes. Any axis-parallel box splits into disjoint
canonical boxes plus a few leftover points taken from the partial blocks at
the two ends of every range.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, RefuseTooLarge

ENUMERATION_LIMIT = (32 * 33 // 2) ** 2


@dataclass
class PointSet:
    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidInput("points must be an (n, d) array with d >= 1")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("point coordinates must be finite")
        self.points = pts
        if self.labels is None:
            self.labels = np.arange(pts.shape[0])
        self.labels = np.asarray(self.labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def fingerprint(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.points).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class Box:
    """Closed axis-parallel box ``prod [lows_k, highs_k]``."""

    lows: tuple
    highs: tuple

    @classmethod
    def empty(cls, d: int) -> "Box":
        return cls((math.inf,) * d, (-math.inf,) * d)

    @classmethod
    def bounding(cls, pts: np.ndarray) -> "Box":
        pts = np.asarray(pts, dtype=float)
        return cls(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lows)
        hi = np.asarray(self.highs)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def members(self, p: PointSet) -> np.ndarray:
        return np.flatnonzero(self.contains(p.points))


@dataclass
class CanonicalBox:
    box_id: int
    members: np.ndarray  # sorted point positions
    type_tag: tuple  # block exponent above the floor, per axis


@dataclass
class _Node:
    axis: int
    order: np.ndarray  # point positions sorted along ``axis``
    keys: np.ndarray  # coordinates along ``axis`` in the same order
    children: dict = field(default_factory=dict)  # (start, q) -> _Node or box id


@dataclass
class CanonicalBoxTree:
    ell: int
    block: int  # smallest block size, the power of two at or above ell
    n: int
    d: int
    boxes: list
    root: _Node
    fingerprint: str
    universe: int = 0  # number of points in the underlying point set

    @property
    def q0(self) -> int:
        return int(round(math.log2(self.block)))

    def census(self) -> dict:
        out: dict = {}
        for b in self.boxes:
            out[b.type_tag] = out.get(b.type_tag, 0) + 1
        return out

    def indicator_matrix(self) -> np.ndarray:
        m = np.zeros((len(self.boxes), self.universe), dtype=bool)
        for b in self.boxes:
            m[b.box_id, b.members] = True
        return m


@dataclass
class BoxDecomposition:
    parts: list  # canonical box ids
    leftover: np.ndarray  # point positions

    def covered(self, tree: CanonicalBoxTree) -> np.ndarray:
        if not self.parts:
            return np.zeros(0, dtype=int)
        return np.concatenate([tree.boxes[k].members for k in self.parts])


def formula_ell(n: int, d: int) -> int:
    """Block floor ``16 (d + ceil(log2 n))^(d-1)``."""
    lg = math.ceil(math.log2(n)) if n > 1 else 0
    return 16 * (d + lg) ** (d - 1)


def block_floor(ell: int) -> int:
    ell = max(1, int(ell))
    return 1 << max(0, math.ceil(math.log2(ell)))


def census_bound(n: int, d: int, ell: int) -> float:
    """Count bound ``(2n/ell) (d + log2(n/ell))^(d-1)`` on the number of canonical boxes."""
    if ell > n:
        return 0.0
    return (2.0 * n / ell) * (d + math.log2(n / ell)) ** (d - 1)


def leftover_bound(n: int, d: int, ell: int) -> float:
    """Leftover bound ``2 L0 (1 + log2 n + ... + log2^(d-1) n)`` with ``L0`` the block floor."""
    lg = math.log2(n) if n > 1 else 0.0
    return 2.0 * block_floor(ell) * sum(lg**k for k in range(d))


def _sorted_along(p: PointSet, members: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    coords = p.points[members, axis]
    idx = np.lexsort((members, coords))
    order = members[idx]
    return order, coords[idx]


def build_canonical_boxes(p: PointSet, ell_override: int | None = None,
                          members: np.ndarray | None = None) -> CanonicalBoxTree:
    """Build the canonical box family.

    ``members`` restricts construction to a subset of point positions (used
    when rebuilding on the alive points); box members are always positions
    in ``p``.
    """
    if members is None:
        members = np.arange(p.n)
    members = np.asarray(members, dtype=int)
    n_sub = len(members)
    if n_sub < 1:
        raise InvalidInput("need at least one point")
    ell = int(ell_override) if ell_override is not None else formula_ell(n_sub, p.d)
    if ell < 1:
        raise InvalidInput("ell must be positive")
    block = block_floor(ell)
    q0 = int(round(math.log2(block)))
    boxes: list = []

    def build(sub: np.ndarray, axis: int, tags: tuple) -> _Node:
        order, keys = _sorted_along(p, sub, axis)
        node = _Node(axis, order, keys)
        length = len(order)
        q = q0
        while (1 << q) <= length:
            size = 1 << q
            for k in range(length // size):
                start = k * size
                chunk = order[start:start + size]
                tag = tags + (q - q0,)
                if axis == p.d - 1:
                    bid = len(boxes)
                    boxes.append(CanonicalBox(bid, np.sort(chunk), tag))
                    node.children[(start, q)] = bid
                else:
                    node.children[(start, q)] = build(chunk, axis + 1, tag)
            q += 1
        return node

    root = build(members, 0, ())
    return CanonicalBoxTree(ell, block, n_sub, p.d, boxes, root, p.fingerprint(), p.n)


def _dyadic_cover(a: int, b: int, length: int, q0: int) -> tuple[list, list]:
    """Split ``[a, b)`` into aligned blocks of size ``>= 2^q0`` plus edge ranges."""
    size0 = 1 << q0
    lo = -(-a // size0) * size0
    hi = (b // size0) * size0
    hi = min(hi, (length // size0) * size0)
    if lo >= hi:
        return [], [(a, b)] if a < b else []
    blocks = []
    pos = lo
    while pos < hi:
        q = q0
        while pos % (1 << (q + 1)) == 0 and pos + (1 << (q + 1)) <= hi:
            q += 1
        blocks.append((pos, q))
        pos += 1 << q
    edges = [r for r in ((a, lo), (hi, b)) if r[0] < r[1]]
    return blocks, edges


def decompose_box(r: Box, tree: CanonicalBoxTree, p: PointSet) -> BoxDecomposition:
    if tree.fingerprint != p.fingerprint() or tree.d != p.d:
        raise InvalidInput("tree was not built on this point set")
    lows = np.asarray(r.lows, dtype=float)
    highs = np.asarray(r.highs, dtype=float)
    if lows.shape != (p.d,) or highs.shape != (p.d,):
        raise InvalidInput("box dimension does not match the point set")
    parts: list = []
    leftover: list = []
    q0 = tree.q0

    def visit(node: _Node):
        ax = node.axis
        a = int(np.searchsorted(node.keys, lows[ax], side="left"))
        b = int(np.searchsorted(node.keys, highs[ax], side="right"))
        if a >= b:
            return
        blocks, edges = _dyadic_cover(a, b, len(node.order), q0)
        for s, e in edges:
            cand = node.order[s:e]
            inside = np.all((p.points[cand] >= lows) & (p.points[cand] <= highs), axis=1)
            leftover.extend(cand[inside].tolist())
        for start, q in blocks:
            child = node.children[(start, q)]
            if isinstance(child, _Node):
                visit(child)
            else:
                parts.append(child)

    visit(tree.root)
    return BoxDecomposition(parts, np.array(sorted(leftover), dtype=int))


@dataclass
class DistinctBox:
    box: Box
    members: np.ndarray


def enumerate_distinct_boxes(p: PointSet, limit: int = ENUMERATION_LIMIT) -> list:
    """All combinatorially distinct boxes, one representative per point set.

    The empty set is included. Raises ``RefuseTooLarge`` when the number of
    candidate boxes exceeds ``limit`` (the d = 2, n = 32 scale by default).
    """
    n, d = p.n, p.d
    axis_ranges = []
    total = 1
    for ax in range(d):
        vals = np.unique(p.points[:, ax])
        ia, ib = np.triu_indices(len(vals))
        axis_ranges.append((vals[ia], vals[ib]))
        total *= len(ia)
    if total > limit:
        raise RefuseTooLarge(f"{total} candidate boxes exceed the enumeration guard {limit}")
    # running product over axes, deduplicated by membership bitmask
    lows = np.zeros((1, 0))
    highs = np.zeros((1, 0))
    masks = np.ones((1, n), dtype=bool)
    for ax in range(d):
        lo, hi = axis_ranges[ax]
        coord = p.points[:, ax]
        axis_mask = (coord[None, :] >= lo[:, None]) & (coord[None, :] <= hi[:, None])
        combo = (masks[:, None, :] & axis_mask[None, :, :]).reshape(-1, n)
        li = np.repeat(np.arange(len(masks)), len(lo))
        ai = np.tile(np.arange(len(lo)), len(masks))
        packed = np.packbits(combo, axis=1)
        _, keep = np.unique(packed, axis=0, return_index=True)
        keep = np.sort(keep)
        masks = combo[keep]
        lows = np.hstack([lows[li[keep]], lo[ai[keep]][:, None]])
        highs = np.hstack([highs[li[keep]], hi[ai[keep]][:, None]])
    out = [DistinctBox(Box.empty(d), np.zeros(0, dtype=int))]
    for k in range(len(masks)):
        if masks[k].any():
            out.append(DistinctBox(Box(tuple(lows[k]), tuple(highs[k])), np.flatnonzero(masks[k])))
    return out


def random_boxes(p: PointSet, count: int, seed: int = 0) -> list:
    """Distinct nonempty boxes with corners drawn from the point coordinates."""
    rng = np.random.default_rng(seed)
    seen = set()
    out = []
    full = DistinctBox(Box.bounding(p.points), np.arange(p.n))
    for db in [full]:
        seen.add(tuple(db.members.tolist()))
        out.append(db)
    tries = 0
    while len(out) < count and tries < 20 * count:
        tries += 1
        pick = p.points[rng.integers(0, p.n, size=(2, p.d)), np.arange(p.d)]
        box = Box(tuple(pick.min(axis=0)), tuple(pick.max(axis=0)))
        members = box.members(p)
        key = tuple(members.tolist())
        if members.size and key not in seen:
            seen.add(key)
            out.append(DistinctBox(box, members))
    return out
