"""CART regression trees over binned features.

Trees split on bin indices (histogram splits), never on raw values:
a sample goes left when ``bin <= threshold``. That makes every tree
restricted to one or two features an exact lookup table over its bins,
which is what the additive model's shape functions are built from.

Split criteria:

* ``"sse"``: squared-error reduction, mean leaf values. Used by the
  boosting weak learners; mean leaves are what make each boosting step
  non-increasing in training MSE.
* ``"mae"``: absolute-error reduction, median leaf values. Used by the
  standalone regression-tree baseline.

Tie-breaking is deterministic: among equal-gain splits the lowest
feature index wins, then the lowest threshold bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TreeParams",
    "TreeNode",
    "RegressionTree",
    "fit_cart",
    "fit_restricted_tree",
    "restricted_tree_from_histogram",
    "predict_tree",
    "tree_as_bin_table",
]

# Gains at or below this are treated as zero (stops splitting).
MIN_GAIN = 1e-12

# Bound on transient memory in the vectorized MAE split search.
_MAE_CHUNK_CELLS = 1_000_000


@dataclass(frozen=True)
class TreeParams:
    """Stopping rules and split criterion for tree induction."""

    max_depth: int = 2
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    split_criterion: str = "sse"

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.split_criterion not in ("sse", "mae"):
            raise ValueError(f"unknown split criterion {self.split_criterion!r}")


@dataclass(frozen=True)
class TreeNode:
    """One node in the flat node list; ``feature == -1`` marks a leaf."""

    feature: int
    threshold: int
    left: int
    right: int
    value: float
    count: int

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class RegressionTree:
    """Fitted tree: node 0 is the root; leaves carry constant values."""

    nodes: tuple[TreeNode, ...]
    params: TreeParams

    @property
    def n_leaves(self) -> int:
        return sum(1 for nd in self.nodes if nd.is_leaf)

    @property
    def depth(self) -> int:
        def walk(nid, d):
            nd = self.nodes[nid]
            if nd.is_leaf:
                return d
            return max(walk(nd.left, d + 1), walk(nd.right, d + 1))
        return walk(0, 0)

    def features_used(self) -> set[int]:
        return {nd.feature for nd in self.nodes if not nd.is_leaf}


# ---------------------------------------------------------------------------
# Split searches
# ---------------------------------------------------------------------------

def _best_split_sse(xb: np.ndarray, y: np.ndarray, n_bins: int,
                    min_leaf: int) -> tuple[float, int] | None:
    """Best (gain, threshold) under squared error, or None.

    SSE gain only needs per-bin counts and sums:
    gain = sL^2/cL + sR^2/cR - s^2/c.
    """
    cnt = np.bincount(xb, minlength=n_bins).astype(np.float64)
    sums = np.bincount(xb, weights=y, minlength=n_bins)
    c_left = np.cumsum(cnt)[:-1]
    s_left = np.cumsum(sums)[:-1]
    c_total = cnt.sum()
    s_total = sums.sum()
    c_right = c_total - c_left
    s_right = s_total - s_left
    valid = (c_left >= min_leaf) & (c_right >= min_leaf)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (s_left ** 2 / c_left + s_right ** 2 / c_right
                - s_total ** 2 / c_total)
    gain[~valid] = -np.inf
    t = int(np.argmax(gain))  # first max: lowest threshold wins ties
    return float(gain[t]), t


def _abs_dev_around_median(prefix_fn, m, total):
    """Sum |v - median| for a sorted multiset given its prefix sums.

    With h = m // 2, the cost is (sum of the h largest) minus (sum of
    the h smallest); any middle element cancels.
    """
    h = m // 2
    return total - prefix_fn(m - h) - prefix_fn(h)


def _best_split_mae(xb: np.ndarray, y: np.ndarray, n_bins: int,
                    min_leaf: int) -> tuple[float, int] | None:
    """Best (gain, threshold) under absolute error, or None.

    Exact: for every threshold the cost of each side is the sum of
    absolute deviations around that side's median. Evaluated for all
    thresholds at once on value-sorted prefix sums.
    """
    n = len(y)
    order = np.argsort(y, kind="stable")
    ys = y[order]
    bs = xb[order]
    vcum = np.cumsum(ys)
    grand_total = vcum[-1]

    def prefix_all(k):
        k = np.asarray(k)
        return np.where(k >= 1, vcum[np.maximum(k, 1) - 1], 0.0)

    parent_cost = _abs_dev_around_median(prefix_all, n, grand_total)

    thresholds = np.arange(n_bins - 1)
    best_cost = np.inf
    best_t = -1
    chunk = max(1, _MAE_CHUNK_CELLS // max(n, 1))
    for start in range(0, len(thresholds), chunk):
        ts = thresholds[start:start + chunk]
        member = bs[None, :] <= ts[:, None]
        cnt = np.cumsum(member, axis=1)
        vsum = np.cumsum(np.where(member, ys, 0.0), axis=1)
        m_left = cnt[:, -1]
        m_right = n - m_left
        total_left = vsum[:, -1]
        total_right = grand_total - total_left

        def prefix_left(k):
            pos = (cnt >= np.maximum(k, 1)[:, None]).argmax(axis=1)
            vals = np.take_along_axis(vsum, pos[:, None], axis=1)[:, 0]
            return np.where(k >= 1, vals, 0.0)

        cnt_right = np.arange(1, n + 1)[None, :] - cnt
        vsum_right = vcum[None, :] - vsum

        def prefix_right(k):
            pos = (cnt_right >= np.maximum(k, 1)[:, None]).argmax(axis=1)
            vals = np.take_along_axis(vsum_right, pos[:, None], axis=1)[:, 0]
            return np.where(k >= 1, vals, 0.0)

        cost = (_abs_dev_around_median(prefix_left, m_left, total_left)
                + _abs_dev_around_median(prefix_right, m_right, total_right))
        cost = np.where((m_left >= min_leaf) & (m_right >= min_leaf), cost, np.inf)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:  # strict: lowest threshold wins ties
            best_cost = float(cost[i])
            best_t = int(ts[i])
    if best_t < 0 or not np.isfinite(best_cost):
        return None
    return parent_cost - best_cost, best_t


# ---------------------------------------------------------------------------
# Fitting and prediction
# ---------------------------------------------------------------------------

def fit_cart(X_binned: np.ndarray, y: np.ndarray, params: TreeParams,
             allowed_features=None, n_bins=None) -> RegressionTree:
    """Grow a CART tree by greedy best-split recursion on binned data.

    Recursion stops on ``max_depth``, ``min_samples_split``, or when no
    candidate split improves the criterion. Deterministic given inputs.

    Parameters
    ----------
    X_binned : int array, shape (m, n)
        Bin indices per feature.
    y : float array, shape (m,)
        Targets (or boosting residuals).
    params : TreeParams
    allowed_features : iterable of int, optional
        Restrict the split search to these columns (the weak-learner
        path); default searches every column.
    n_bins : sequence of int, optional
        Bin count per feature; derived from the data when omitted.
    """
    Xb = np.asarray(X_binned)
    y = np.asarray(y, dtype=np.float64)
    if Xb.ndim != 2 or len(Xb) != len(y):
        raise ValueError("X_binned must be 2-D and aligned with y")
    if len(y) == 0:
        raise ValueError("empty data")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite targets")
    if allowed_features is None:
        allowed = list(range(Xb.shape[1]))
    else:
        allowed = sorted(set(int(f) for f in allowed_features))
        if not allowed:
            raise ValueError("allowed_features must not be empty")
        for f in allowed:
            if not 0 <= f < Xb.shape[1]:
                raise ValueError(f"feature index {f} out of range")
    if n_bins is None:
        # Only the searched columns need a bin count.
        n_bins = {f: int(Xb[:, f].max()) + 1 for f in allowed}

    search = _best_split_sse if params.split_criterion == "sse" else _best_split_mae
    leaf_value = (lambda v: float(v.mean())) if params.split_criterion == "sse" \
        else (lambda v: float(np.median(v)))

    nodes: list[TreeNode] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        y_node = y[idx]
        nid = len(nodes)
        nodes.append(TreeNode(-1, -1, -1, -1, leaf_value(y_node), len(idx)))
        if depth >= params.max_depth or len(idx) < params.min_samples_split:
            return nid
        best = None  # (gain, feature, threshold)
        for f in allowed:
            found = search(Xb[idx, f], y_node, n_bins[f], params.min_samples_leaf)
            if found is None:
                continue
            gain, t = found
            if gain > MIN_GAIN and (best is None or gain > best[0]):
                best = (gain, f, t)
        if best is None:
            return nid
        _, bf, bt = best
        go_left = Xb[idx, bf] <= bt
        left = grow(idx[go_left], depth + 1)
        right = grow(idx[~go_left], depth + 1)
        nodes[nid] = TreeNode(bf, bt, left, right, nodes[nid].value, len(idx))
        return nid

    grow(np.arange(len(y)), 0)
    return RegressionTree(nodes=tuple(nodes), params=params)


def _interval_split(cnt_cum, sum_cum, lo, hi, min_leaf):
    """Best SSE split of bin interval [lo, hi) given cumulative
    histogram counts/sums (index k holds the total of bins < k)."""
    c_tot = cnt_cum[hi] - cnt_cum[lo]
    s_tot = sum_cum[hi] - sum_cum[lo]
    if hi - lo < 2:
        return None
    c_left = cnt_cum[lo + 1:hi] - cnt_cum[lo]
    s_left = sum_cum[lo + 1:hi] - sum_cum[lo]
    c_right = c_tot - c_left
    s_right = s_tot - s_left
    valid = (c_left >= min_leaf) & (c_right >= min_leaf)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (s_left ** 2 / c_left + s_right ** 2 / c_right
                - s_tot ** 2 / c_tot)
    gain[~valid] = -np.inf
    k = int(np.argmax(gain))
    return float(gain[k]), lo + k


def _grow_1d(cnt, sums, feature, params) -> tuple[TreeNode, ...]:
    """Single-feature SSE tree grown entirely on the histogram: every
    node is a bin interval, so its stats are cumulative-sum slices."""
    cnt_cum = np.concatenate(([0.0], np.cumsum(cnt)))
    sum_cum = np.concatenate(([0.0], np.cumsum(sums)))
    nodes: list[TreeNode] = []

    def grow(lo, hi, depth):
        c = cnt_cum[hi] - cnt_cum[lo]
        s = sum_cum[hi] - sum_cum[lo]
        nid = len(nodes)
        nodes.append(TreeNode(-1, -1, -1, -1, s / c, int(c)))
        if depth >= params.max_depth or c < params.min_samples_split:
            return nid
        found = _interval_split(cnt_cum, sum_cum, lo, hi,
                                params.min_samples_leaf)
        if found is None or found[0] <= MIN_GAIN:
            return nid
        _, t = found
        left = grow(lo, t + 1, depth + 1)
        right = grow(t + 1, hi, depth + 1)
        nodes[nid] = TreeNode(feature, t, left, right, nodes[nid].value, int(c))
        return nid

    grow(0, len(cnt), 0)
    return tuple(nodes)


def _grow_2d(cnt2, sum2, fi, fj, params) -> tuple[TreeNode, ...]:
    """Feature-pair SSE tree grown on the 2-D histogram: every node is
    a bin rectangle, split along either axis."""
    nodes: list[TreeNode] = []

    def grow(lo0, hi0, lo1, hi1, depth):
        sub_c = cnt2[lo0:hi0, lo1:hi1]
        sub_s = sum2[lo0:hi0, lo1:hi1]
        c = sub_c.sum()
        s = sub_s.sum()
        nid = len(nodes)
        nodes.append(TreeNode(-1, -1, -1, -1, s / c, int(c)))
        if depth >= params.max_depth or c < params.min_samples_split:
            return nid
        best = None  # (gain, axis, threshold)
        for axis in (0, 1):
            mc = sub_c.sum(axis=1 - axis)
            ms = sub_s.sum(axis=1 - axis)
            cc = np.concatenate(([0.0], np.cumsum(mc)))
            cs = np.concatenate(([0.0], np.cumsum(ms)))
            found = _interval_split(cc, cs, 0, len(mc), params.min_samples_leaf)
            if found is None:
                continue
            gain, k = found
            offset = lo0 if axis == 0 else lo1
            if gain > MIN_GAIN and (best is None or gain > best[0]):
                best = (gain, axis, offset + k)
        if best is None:
            return nid
        _, axis, t = best
        if axis == 0:
            left = grow(lo0, t + 1, lo1, hi1, depth + 1)
            right = grow(t + 1, hi0, lo1, hi1, depth + 1)
        else:
            left = grow(lo0, hi0, lo1, t + 1, depth + 1)
            right = grow(lo0, hi0, t + 1, hi1, depth + 1)
        nodes[nid] = TreeNode(fi if axis == 0 else fj, t, left, right,
                              nodes[nid].value, int(c))
        return nid

    grow(0, cnt2.shape[0], 0, cnt2.shape[1], 0)
    return tuple(nodes)


def restricted_tree_from_histogram(cnt, sums, features, params: TreeParams,
                                   ) -> RegressionTree:
    """Fit a 1- or 2-feature SSE tree straight from residual histograms.

    ``cnt``/``sums`` are the per-bin (or per bin-pair) row counts and
    residual sums; ``features`` maps histogram axes to global feature
    indices. This is the boosting engine's fast path; it produces the
    same trees as :func:`fit_restricted_tree` without touching rows.
    """
    if params.split_criterion != "sse":
        raise ValueError("histogram fitting supports the sse criterion only")
    if cnt.ndim == 1:
        (f,) = features
        return RegressionTree(nodes=_grow_1d(cnt, sums, f, params), params=params)
    fi, fj = features
    return RegressionTree(nodes=_grow_2d(cnt, sums, fi, fj, params), params=params)


def fit_restricted_tree(X_binned, residuals, allowed_features,
                        params: TreeParams) -> RegressionTree:
    """Weak learner: a CART fit whose split search is limited to one
    feature (shape functions) or a feature pair (interaction terms).

    Equivalent to :func:`fit_cart` with ``allowed_features``; the SSE
    case runs on histograms, where interval arithmetic replaces row
    partitioning.
    """
    allowed = sorted(set(int(f) for f in allowed_features))
    if not 1 <= len(allowed) <= 2:
        raise ValueError("allowed_features must hold 1 or 2 indices")
    if params.split_criterion != "sse":
        return fit_cart(X_binned, residuals, params, allowed_features=allowed)
    Xb = np.asarray(X_binned)
    r = np.asarray(residuals, dtype=np.float64)
    if Xb.ndim != 2 or len(Xb) != len(r):
        raise ValueError("X_binned must be 2-D and aligned with residuals")
    if len(r) == 0:
        raise ValueError("empty data")
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite targets")
    for f in allowed:
        if not 0 <= f < Xb.shape[1]:
            raise ValueError(f"feature index {f} out of range")
    if len(allowed) == 1:
        f = allowed[0]
        col = Xb[:, f]
        nb = int(col.max()) + 1
        cnt = np.bincount(col, minlength=nb).astype(np.float64)
        sums = np.bincount(col, weights=r, minlength=nb)
        return restricted_tree_from_histogram(cnt, sums, (f,), params)
    fi, fj = allowed
    ci, cj = Xb[:, fi], Xb[:, fj]
    ki, kj = int(ci.max()) + 1, int(cj.max()) + 1
    cell = ci * kj + cj
    cnt2 = np.bincount(cell, minlength=ki * kj).astype(np.float64).reshape(ki, kj)
    sum2 = np.bincount(cell, weights=r, minlength=ki * kj).reshape(ki, kj)
    return restricted_tree_from_histogram(cnt2, sum2, (fi, fj), params)


def predict_tree(tree: RegressionTree, X_binned: np.ndarray) -> np.ndarray:
    """Route every row to its leaf and return the leaf constants.

    Bin indices outside the fitted range route through the ordinary
    comparisons (clamped routing); they never error.
    """
    Xb = np.atleast_2d(np.asarray(X_binned))
    for nd in tree.nodes:
        if not nd.is_leaf and nd.feature >= Xb.shape[1]:
            raise ValueError("tree references feature index beyond input columns")
    out = np.empty(len(Xb))
    stack = [(0, np.arange(len(Xb)))]
    while stack:
        nid, idx = stack.pop()
        if len(idx) == 0:
            continue
        nd = tree.nodes[nid]
        if nd.is_leaf:
            out[idx] = nd.value
        else:
            go_left = Xb[idx, nd.feature] <= nd.threshold
            stack.append((nd.left, idx[go_left]))
            stack.append((nd.right, idx[~go_left]))
    return out


def tree_as_bin_table(tree: RegressionTree, feature_bins: dict[int, int]) -> np.ndarray:
    """Collapse a 1- or 2-feature tree into its exact lookup table.

    Leaf regions of a bin-split tree are axis-aligned bin rectangles, so
    the table is filled by interval narrowing; looking it up reproduces
    ``predict_tree`` for every bin combination.
    """
    feats = sorted(feature_bins)
    if len(feats) not in (1, 2):
        raise ValueError("feature_bins must describe 1 or 2 features")
    if not tree.features_used() <= set(feats):
        raise ValueError("tree references a feature outside feature_bins")

    if len(feats) == 1:
        f0 = feats[0]
        table = np.zeros(feature_bins[f0])

        def fill(nid, lo, hi):
            if lo >= hi:
                return
            nd = tree.nodes[nid]
            if nd.is_leaf:
                table[lo:hi] = nd.value
                return
            cut = nd.threshold + 1
            fill(nd.left, lo, min(hi, cut))
            fill(nd.right, max(lo, cut), hi)

        fill(0, 0, feature_bins[f0])
        return table

    f0, f1 = feats
    grid = np.zeros((feature_bins[f0], feature_bins[f1]))

    def fill(nid, lo0, hi0, lo1, hi1):
        if lo0 >= hi0 or lo1 >= hi1:
            return
        nd = tree.nodes[nid]
        if nd.is_leaf:
            grid[lo0:hi0, lo1:hi1] = nd.value
            return
        cut = nd.threshold + 1
        if nd.feature == f0:
            fill(nd.left, lo0, min(hi0, cut), lo1, hi1)
            fill(nd.right, max(lo0, cut), hi0, lo1, hi1)
        else:
            fill(nd.left, lo0, hi0, lo1, min(hi1, cut))
            fill(nd.right, lo0, hi0, max(lo1, cut), hi1)

    fill(0, 0, feature_bins[f0], 0, feature_bins[f1])
    return grid
