"""Self-balancing partial-sum tree for O(log K) weighted draws.

An Arne Andersson tree keyed by component id.  Every node stores its own
weight and the total weight of its subtree, so point updates propagate to
the root in O(log K) and a weighted draw is a single root-to-leaf descent
("a sequence of weighted Bernoulli samples").  Cumulative order is in-order,
i.e. ascending key.
"""

from __future__ import annotations


class _Node:
    __slots__ = ("key", "weight", "sum", "level", "left", "right")

    def __init__(self, key, weight, nil):
        self.key = key
        self.weight = weight
        self.sum = weight
        self.level = 1
        self.left = nil
        self.right = nil


class PartialSumTree:
    """Map from component id to nonnegative weight with subtree sums."""

    def __init__(self):
        nil = _Node(None, 0.0, None)
        nil.level = 0
        nil.left = nil
        nil.right = nil
        self._nil = nil
        self._root = nil
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def total(self) -> float:
        return self._root.sum

    def __contains__(self, key) -> bool:
        node = self._root
        while node is not self._nil:
            if key < node.key:
                node = node.left
            elif key > node.key:
                node = node.right
            else:
                return True
        return False

    def weight(self, key) -> float:
        node = self._root
        while node is not self._nil:
            if key < node.key:
                node = node.left
            elif key > node.key:
                node = node.right
            else:
                return node.weight
        return 0.0

    # -- structural helpers -------------------------------------------------

    def _pull(self, t):
        t.sum = t.weight + t.left.sum + t.right.sum

    def _skew(self, t):
        if t.left.level == t.level and t.level != 0:
            left = t.left
            t.left = left.right
            left.right = t
            self._pull(t)
            self._pull(left)
            return left
        return t

    def _split(self, t):
        if t.right.right.level == t.level and t.level != 0:
            right = t.right
            t.right = right.left
            right.left = t
            right.level += 1
            self._pull(t)
            self._pull(right)
            return right
        return t

    def _insert(self, t, key, weight):
        if t is self._nil:
            self._size += 1
            return _Node(key, weight, self._nil)
        if key < t.key:
            t.left = self._insert(t.left, key, weight)
        elif key > t.key:
            t.right = self._insert(t.right, key, weight)
        else:
            t.weight = weight
        self._pull(t)
        return self._split(self._skew(t))

    def _delete(self, t, key):
        if t is self._nil:
            raise KeyError(key)
        if key < t.key:
            t.left = self._delete(t.left, key)
        elif key > t.key:
            t.right = self._delete(t.right, key)
        else:
            if t.left is self._nil and t.right is self._nil:
                self._size -= 1
                return self._nil
            if t.left is self._nil:
                heir = t.right
                while heir.left is not self._nil:
                    heir = heir.left
                t.key, t.weight = heir.key, heir.weight
                t.right = self._delete(t.right, heir.key)
            else:
                heir = t.left
                while heir.right is not self._nil:
                    heir = heir.right
                t.key, t.weight = heir.key, heir.weight
                t.left = self._delete(t.left, heir.key)

        # restore the AA level discipline on the way up
        should = min(t.left.level, t.right.level) + 1
        if should < t.level:
            t.level = should
            if should < t.right.level:
                t.right.level = should
        self._pull(t)
        t = self._skew(t)
        t.right = self._skew(t.right)
        if t.right is not self._nil:
            t.right.right = self._skew(t.right.right)
        t = self._split(t)
        t.right = self._split(t.right)
        return t

    # -- public operations ---------------------------------------------------

    def update(self, key, weight: float) -> None:
        """Set a component's weight; 0 removes it, negative is an error."""
        if weight < 0:
            raise ValueError(f"negative weight {weight!r} for component {key!r}")
        if weight == 0:
            if key in self:
                self._root = self._delete(self._root, key)
            return
        self._root = self._insert(self._root, key, weight)

    def sample(self, u: float):
        """Component whose cumulative-weight interval contains ``u``.

        ``u`` must lie in ``[0, total)``; the draw is deterministic given
        ``u``.  Intervals are laid out in ascending key order.
        """
        node = self._root
        if node is self._nil or not node.sum > 0:
            raise ValueError("cannot sample from an empty tree")
        if not 0 <= u < node.sum:
            raise ValueError(f"u={u!r} outside [0, {node.sum!r})")
        last = None
        while node is not self._nil:
            if u < node.left.sum:
                node = node.left
                continue
            u -= node.left.sum
            if u < node.weight:
                return node.key
            u -= node.weight
            last = node.key
            node = node.right
        # float drift at the very top of the range: clamp to the last key
        return last

    def items(self):
        """(key, weight) pairs in ascending key order."""
        out = []
        stack = []
        node = self._root
        while stack or node is not self._nil:
            while node is not self._nil:
                stack.append(node)
                node = node.left
            node = stack.pop()
            out.append((node.key, node.weight))
            node = node.right
        return out

    # -- diagnostics ----------------------------------------------------------

    def height(self) -> int:
        def h(t):
            if t is self._nil:
                return 0
            return 1 + max(h(t.left), h(t.right))

        return h(self._root)

    def check_invariants(self, rel_tol: float = 1e-9) -> None:
        """Verify BST order, AA levels, and stored sums; raises on violation."""
        nil = self._nil

        def visit(t, lo, hi):
            if t is nil:
                return 0.0, 0
            if not (lo is None or t.key > lo) or not (hi is None or t.key < hi):
                raise AssertionError("BST order violated")
            if t.left.level != t.level - 1:
                raise AssertionError("left child level must be one less")
            if t.right.level not in (t.level, t.level - 1):
                raise AssertionError("right child level must be equal or one less")
            if t.right.right.level >= t.level:
                raise AssertionError("double right horizontal link")
            if t.level > 1 and (t.left is nil or t.right is nil):
                raise AssertionError("internal node missing a child")
            ls, ln = visit(t.left, lo, t.key)
            rs, rn = visit(t.right, t.key, hi)
            expect = t.weight + ls + rs
            scale = max(abs(expect), 1.0)
            if abs(t.sum - expect) > rel_tol * scale:
                raise AssertionError(f"stored sum {t.sum} != recomputed {expect}")
            return expect, ln + rn + 1

        _, count = visit(self._root, None, None)
        if count != self._size:
            raise AssertionError(f"size {self._size} != node count {count}")
