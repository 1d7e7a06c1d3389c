import math

import numpy as np
import pytest

from linkmix.tree import PartialSumTree


def build(weights: dict) -> PartialSumTree:
    tree = PartialSumTree()
    for key, w in weights.items():
        tree.update(key, w)
    return tree


class TestUpdates:
    def test_insert_then_update_total(self):
        tree = build({1: 1.0, 2: 3.0})
        tree.update(1, 2.0)
        assert tree.total == pytest.approx(5.0)

    def test_update_to_zero_removes(self):
        tree = build({1: 1.0, 2: 3.0, 3: 2.0})
        tree.update(2, 0.0)
        assert tree.total == pytest.approx(3.0)
        assert 2 not in tree
        assert len(tree) == 2
        tree.update(99, 0.0)  # removing an absent key is a no-op
        assert len(tree) == 2

    def test_negative_weight_rejected(self):
        tree = build({1: 1.0})
        with pytest.raises(ValueError):
            tree.update(1, -0.5)

    def test_weight_lookup(self):
        tree = build({5: 1.5, 7: 2.5})
        assert tree.weight(5) == 1.5
        assert tree.weight(42) == 0.0

    def test_items_in_key_order(self):
        tree = build({9: 1.0, 2: 2.0, 5: 3.0})
        assert tree.items() == [(2, 2.0), (5, 3.0), (9, 1.0)]


class TestSample:
    def test_interval_membership(self):
        tree = build({1: 1.0, 2: 3.0})
        assert tree.sample(0.5) == 1
        assert tree.sample(2.0) == 2
        assert tree.sample(0.0) == 1
        assert tree.sample(1.0) == 2

    def test_single_component(self):
        tree = build({7: 4.0})
        for u in (0.0, 1.3, 3.999):
            assert tree.sample(u) == 7

    def test_empty_tree_raises(self):
        with pytest.raises(ValueError):
            PartialSumTree().sample(0.0)

    def test_out_of_range_raises(self):
        tree = build({1: 1.0})
        with pytest.raises(ValueError):
            tree.sample(1.5)
        with pytest.raises(ValueError):
            tree.sample(-0.1)

    def test_draw_frequencies(self):
        tree = build({1: 1.0, 5: 3.0, 9: 6.0})
        rng = np.random.default_rng(0)
        n = 10**6
        draws = tree.sample(0)  # warm path
        counts = {1: 0, 5: 0, 9: 0}
        for u in rng.random(n) * tree.total:
            counts[tree.sample(float(u))] += 1
        for key, w in ((1, 0.1), (5, 0.3), (9, 0.6)):
            sigma = math.sqrt(n * w * (1 - w))
            assert abs(counts[key] - n * w) < 4 * sigma


class TestStructure:
    def test_shadow_accumulator_fuzz(self):
        rng = np.random.default_rng(1)
        tree = PartialSumTree()
        shadow: dict[int, float] = {}
        for step in range(10**5):
            key = int(rng.integers(0, 200))
            if rng.random() < 0.2 and shadow:
                key = list(shadow)[int(rng.integers(0, len(shadow)))]
                w = 0.0
            else:
                w = float(rng.uniform(0.0, 10.0))
            tree.update(key, w)
            if w == 0.0:
                shadow.pop(key, None)
            else:
                shadow[key] = w
        expected = sum(shadow.values())
        assert tree.total == pytest.approx(expected, rel=1e-6)
        assert dict(tree.items()) == shadow
        tree.check_invariants()

    def test_height_stays_logarithmic(self):
        tree = PartialSumTree()
        n = 4096
        for key in range(n):  # adversarial: sorted insertion
            tree.update(key, 1.0)
        tree.check_invariants()
        assert tree.height() <= 2 * math.log2(n + 1) + 2

    def test_integer_weights_exact(self):
        rng = np.random.default_rng(2)
        tree = PartialSumTree()
        shadow: dict[int, int] = {}
        for _ in range(20000):
            key = int(rng.integers(0, 64))
            w = int(rng.integers(0, 50))
            tree.update(key, float(w))
            if w == 0:
                shadow.pop(key, None)
            else:
                shadow[key] = w
        assert tree.total == float(sum(shadow.values()))  # exact for integers
