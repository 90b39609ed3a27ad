"""Flat-array bounding volume hierarchy shared by both kernel backends.

The tree is built once in Python (deterministic median splits) and handed
to either backend as plain numpy arrays, so the compiled and fallback
paths traverse the exact same structure.
"""

from __future__ import annotations

import numpy as np

LEAF_SIZE = 4


class Bvh:
    """BVH over triangles as flat arrays.

    Leaf primitive slices are sorted ascending: a first-minimum scan in
    leaf order is then identical to a lowest-triangle-index tie-break.
    """

    __slots__ = ("node_min", "node_max", "child_a", "child_b", "is_leaf", "prim")

    def __init__(self, node_min, node_max, child_a, child_b, is_leaf, prim):
        self.node_min = node_min
        self.node_max = node_max
        self.child_a = child_a    # internal: left child; leaf: prim offset
        self.child_b = child_b    # internal: right child; leaf: prim count
        self.is_leaf = is_leaf
        self.prim = prim

    @property
    def n_nodes(self):
        return self.child_a.shape[0]


def build_bvh(vertices: np.ndarray, triangles: np.ndarray, leaf_size: int = LEAF_SIZE) -> Bvh:
    """Median-split BVH on triangle centroids; split axis = widest extent."""
    tris = np.ascontiguousarray(triangles, dtype=np.int32)
    verts = np.ascontiguousarray(vertices, dtype=np.float64)
    corners = verts[tris]                      # (M, 3, 3)
    tri_min = corners.min(axis=1)
    tri_max = corners.max(axis=1)
    centroid = corners.mean(axis=1)

    node_min, node_max = [], []
    child_a, child_b, is_leaf = [], [], []
    order = np.arange(tris.shape[0], dtype=np.int32)
    prim = np.empty_like(order)
    prim_fill = 0

    # (slice into `order`, index of the node to fill)
    stack = [(order, 0)]
    next_free = 1
    node_min.append(None)
    node_max.append(None)
    child_a.append(0)
    child_b.append(0)
    is_leaf.append(0)

    while stack:
        idx, node = stack.pop()
        node_min[node] = tri_min[idx].min(axis=0)
        node_max[node] = tri_max[idx].max(axis=0)
        cen = centroid[idx]
        spread = cen.max(axis=0) - cen.min(axis=0)
        if idx.shape[0] <= leaf_size or not np.any(spread > 0.0):
            start = prim_fill
            put = np.sort(idx)
            prim[start:start + put.shape[0]] = put
            prim_fill += put.shape[0]
            child_a[node] = start
            child_b[node] = put.shape[0]
            is_leaf[node] = 1
            continue
        axis = int(np.argmax(spread))
        half = idx.shape[0] // 2
        # stable sort keeps equal-centroid ordering by index: deterministic
        part = idx[np.argsort(cen[:, axis], kind="stable")]
        left, right = part[:half], part[half:]
        a, b = next_free, next_free + 1
        next_free += 2
        for _ in range(2):
            node_min.append(None)
            node_max.append(None)
            child_a.append(0)
            child_b.append(0)
            is_leaf.append(0)
        child_a[node] = a
        child_b[node] = b
        is_leaf[node] = 0
        stack.append((right, b))
        stack.append((left, a))

    return Bvh(
        np.ascontiguousarray(np.stack(node_min), dtype=np.float64),
        np.ascontiguousarray(np.stack(node_max), dtype=np.float64),
        np.asarray(child_a, dtype=np.int32),
        np.asarray(child_b, dtype=np.int32),
        np.asarray(is_leaf, dtype=np.uint8),
        prim,
    )
