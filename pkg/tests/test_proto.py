import numpy as np
import pytest

from sampfsl.numcore import Rng, grad_check
from sampfsl.proto import (
    LinearClassifier,
    compute_prototypes,
    finetune_classifier,
    init_classifier,
    predict,
)


class TestComputePrototypes:
    def test_single_shot_prototype_is_the_support(self):
        z = np.array([[1.0, 2.0], [3.0, 4.0]])
        protos = compute_prototypes(z, [0, 1])
        np.testing.assert_array_equal(protos.means, z)

    def test_symmetric_pair_averages_to_zero(self):
        v = np.array([1.0, -2.0, 3.0])
        protos = compute_prototypes(np.vstack([v, -v]), [0, 0])
        np.testing.assert_allclose(protos.means, np.zeros((1, 3)), atol=1e-15)

    def test_matches_per_class_mean_loop(self):
        rng = Rng(0)
        z = rng.normal((12, 5))
        y = np.repeat([0, 1, 2], 4)
        protos = compute_prototypes(z, y)
        for k in range(3):
            np.testing.assert_allclose(protos.means[k], z[y == k].mean(axis=0), rtol=1e-14)

    def test_missing_class_rejected(self):
        with pytest.raises(ValueError, match="class 1"):
            compute_prototypes(np.zeros((2, 3)), [0, 2])


class TestInitClassifier:
    def test_direct_formula(self):
        clf = init_classifier(compute_prototypes(np.array([[1.0, 0.0]]), [0]))
        np.testing.assert_array_equal(clf.weights, [[2.0, 0.0]])
        np.testing.assert_array_equal(clf.biases, [-1.0])

    def test_query_at_prototype_classified_correctly(self):
        rng = Rng(1)
        protos = compute_prototypes(rng.normal((4, 6)), [0, 1, 2, 3])
        clf = init_classifier(protos)
        np.testing.assert_array_equal(predict(clf, protos.means), [0, 1, 2, 3])

    def test_argmax_equals_nearest_prototype(self):
        rng = Rng(2)
        protos = rng.normal((5, 4))
        clf = init_classifier(compute_prototypes(protos, np.arange(5)))
        queries = rng.normal((100, 4))
        dists = ((queries[:, None, :] - protos[None, :, :]) ** 2).sum(-1)
        np.testing.assert_array_equal(predict(clf, queries), dists.argmin(axis=1))


class TestFinetune:
    def test_zero_iterations_is_identity(self):
        rng = Rng(3)
        clf = LinearClassifier(rng.normal((3, 4)), rng.normal((3,)))
        out = finetune_classifier(clf, rng.normal((6, 4)), [0, 0, 1, 1, 2, 2], 0, 0.1, rng=Rng(0))
        np.testing.assert_array_equal(out.weights, clf.weights)
        np.testing.assert_array_equal(out.biases, clf.biases)
        assert out is not clf

    def test_zero_learning_rate_is_identity(self):
        rng = Rng(4)
        clf = LinearClassifier(rng.normal((2, 3)), rng.normal((2,)))
        z = rng.normal((6, 3))
        out = finetune_classifier(clf, z, [0, 0, 0, 1, 1, 1], 15, 0.0, rng=Rng(1))
        np.testing.assert_array_equal(out.weights, clf.weights)
        np.testing.assert_array_equal(out.biases, clf.biases)

    def test_descends_cross_entropy_on_separable_toy(self):
        rng = Rng(5)
        z = np.vstack([rng.normal((8, 2)) + [3, 0], rng.normal((8, 2)) - [3, 0]])
        y = np.repeat([0, 1], 8)
        clf = LinearClassifier(rng.normal((2, 2)), np.zeros(2))

        def xent(c):
            s = c.scores(z)
            s = s - s.max(axis=1, keepdims=True)
            p = np.exp(s) / np.exp(s).sum(axis=1, keepdims=True)
            return -np.log(p[np.arange(16), y]).mean()

        tuned = finetune_classifier(clf, z, y, 15, 0.01, subset_rule=lambda yy, r: np.arange(yy.size), rng=Rng(2))
        assert xent(tuned) < xent(clf)

    def test_single_step_gradient_matches_finite_differences(self):
        from sampfsl.numcore import Parameter, Tensor, add, cross_entropy_rows, matmul, transpose

        rng = Rng(6)
        z = rng.normal((6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        w = Parameter("w", rng.normal((2, 3)))
        b = Parameter("b", rng.normal((1, 2)))

        def loss():
            return cross_entropy_rows(add(matmul(Tensor(z), transpose(w)), b), y)

        assert grad_check(loss, {"w": w, "b": b}, h=1e-5) <= 1e-6

    def test_default_subset_takes_half_per_class(self):
        seen = []

        def spy(labels, rng):
            from sampfsl.proto import _half_per_class

            idx = _half_per_class(labels, rng)
            seen.append(idx)
            return idx

        rng = Rng(7)
        z = rng.normal((8, 3))
        y = np.repeat([0, 1], 4)
        clf = init_classifier(compute_prototypes(z, y))
        finetune_classifier(clf, z, y, 3, 0.01, subset_rule=spy, rng=Rng(3))
        for idx in seen:
            labels = y[idx]
            assert (labels == 0).sum() == 2 and (labels == 1).sum() == 2
            assert np.unique(idx).size == idx.size

    def test_single_shot_uses_full_class(self):
        from sampfsl.proto import _half_per_class

        y = np.array([0, 1, 2])
        idx = _half_per_class(y, Rng(4))
        np.testing.assert_array_equal(np.sort(idx), [0, 1, 2])

    def test_empty_supports_rejected(self):
        clf = LinearClassifier(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(ValueError):
            finetune_classifier(clf, np.zeros((0, 3)), [], 5, 0.1, rng=Rng(0))


class TestPredict:
    def test_query_at_prototype(self):
        protos = np.array([[0.0, 5.0], [5.0, 0.0]])
        clf = init_classifier(compute_prototypes(protos, [0, 1]))
        assert predict(clf, np.array([[5.0, 0.0]]))[0] == 1

    def test_exact_tie_goes_to_lowest_index(self):
        clf = LinearClassifier(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), np.zeros(3))
        assert predict(clf, np.array([[2.0, 7.0]]))[0] == 0

    def test_matches_score_argmax_oracle(self):
        rng = Rng(8)
        clf = LinearClassifier(rng.normal((4, 5)), rng.normal((4,)))
        zq = rng.normal((50, 5))
        scores = zq @ clf.weights.T + clf.biases
        np.testing.assert_array_equal(predict(clf, zq), scores.argmax(axis=1))

    def test_invariant_to_common_bias_shift(self):
        rng = Rng(9)
        clf = LinearClassifier(rng.normal((3, 4)), rng.normal((3,)))
        shifted = LinearClassifier(clf.weights.copy(), clf.biases + 17.5)
        zq = rng.normal((40, 4))
        np.testing.assert_array_equal(predict(clf, zq), predict(shifted, zq))
