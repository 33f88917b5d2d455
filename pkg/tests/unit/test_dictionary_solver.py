import numpy as np
import pytest

from krusco.exceptions import StructuralError
from krusco.model.kcsc import (
    ActivationSet,
    Dictionary,
    Penalty,
    objective,
    objective_dense,
)
from krusco.solvers.dense import dense_alpha_max, solve_dense_activations
from krusco.solvers.dictionary import (
    dict_gradient,
    project_unit_ball,
    update_dictionary,
)
from krusco.solvers.proximal import SolverBudget
from krusco.tensor.convolution import conv_full
from tests.conftest import make_dictionary, make_problem


def squared_residual(y: np.ndarray, atoms: np.ndarray, dense: np.ndarray) -> float:
    reconstruction = sum(conv_full(atom, act) for atom, act in zip(atoms, dense))
    return float(np.sum((y - reconstruction) ** 2))


class TestProjection:
    """Test the unit-ball projection."""

    def test_long_atom_is_scaled(self):
        projected = project_unit_ball(np.array([3.0, 4.0]))
        np.testing.assert_allclose(projected, [0.6, 0.8])

    def test_short_atom_is_unchanged(self):
        atom = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_array_equal(project_unit_ball(atom), atom)


class TestDictionaryGradient:
    """Test the gradient of the data term with respect to the atoms."""

    def test_matches_central_differences(self):
        rng = np.random.default_rng(31)
        h = 1e-6
        for trial in range(20):
            order = int(rng.integers(1, 4))
            atom_shape = tuple(int(w) for w in rng.integers(1, 4, size=order))
            act_shape = tuple(int(m) for m in rng.integers(1, 4, size=order))
            y, dictionary, acts = make_problem(rng, atom_shape, act_shape,
                                               n_atoms=int(rng.integers(1, 3)), rank=2,
                                               noise=0.5)
            dense = acts.to_dense()
            gradient = dict_gradient(y, dictionary, acts)
            assert gradient.shape == dictionary.atoms.shape

            atoms = np.array(dictionary.atoms)
            numeric = np.zeros_like(atoms)
            for index in np.ndindex(*atoms.shape):
                step = np.zeros_like(atoms)
                step[index] = h
                numeric[index] = (squared_residual(y, atoms + step, dense)
                                  - squared_residual(y, atoms - step, dense)) / (2 * h)
            assert np.max(np.abs(gradient - numeric)) <= 1e-4, f"trial {trial}"

    def test_accepts_dense_activations(self, small_problem):
        y, dictionary, acts = small_problem
        np.testing.assert_allclose(dict_gradient(y, dictionary, acts.to_dense()),
                                   dict_gradient(y, dictionary, acts))

    def test_shape_mismatch(self, small_problem):
        y, dictionary, acts = small_problem
        with pytest.raises(StructuralError):
            dict_gradient(y[:, :-1], dictionary, acts)


class TestUpdateDictionary:
    """Test the projected D-step."""

    def test_atoms_stay_in_unit_ball(self, small_problem):
        y, dictionary, acts = small_problem
        updated = update_dictionary(y, dictionary, acts)
        assert isinstance(updated, Dictionary)
        assert np.all(updated.norms() <= 1.0 + 1e-12)

    def test_objective_does_not_increase(self, small_problem):
        y, dictionary, acts = small_problem
        pen = Penalty.zeros(3)
        before = objective(y, dictionary, acts, pen).total
        updated = update_dictionary(y, dictionary, acts, SolverBudget(max_iter=5))
        after = objective(y, updated, acts, pen).total
        assert after <= before

    def test_recovers_planted_dictionary_fit(self, rng):
        y, truth, acts = make_problem(rng, (3, 3), (6, 5), n_atoms=2, rank=2, noise=0.0)
        start = make_dictionary(rng, 2, (3, 3))
        pen = Penalty.zeros(2)
        budget = SolverBudget(max_iter=2000, tol=1e-14)
        updated = update_dictionary(y, start, acts, budget)
        before = objective(y, start, acts, pen).residual
        assert objective(y, updated, acts, pen).residual <= 1e-2 * before

    def test_zero_activations_keep_dictionary(self, small_problem):
        y, dictionary, acts = small_problem
        zeros = ActivationSet.zeros(acts.n_atoms, acts.shape, acts.rank)
        assert update_dictionary(y, dictionary, zeros) is dictionary


class TestDenseActivations:
    """Test the full-rank activation solver used by the baseline."""

    def test_zero_certificate(self, small_problem):
        y, dictionary, acts = small_problem
        ceiling = dense_alpha_max(y, dictionary)
        solution = solve_dense_activations(y, dictionary, ceiling)
        assert solution.shape == (acts.n_atoms,) + acts.shape
        assert not np.any(solution)

    def test_descends_from_warm_start(self, small_problem):
        y, dictionary, acts = small_problem
        warm = acts.to_dense()
        alpha = 0.2 * dense_alpha_max(y, dictionary)
        solution = solve_dense_activations(y, dictionary, alpha, 0.01, warm,
                                           SolverBudget(max_iter=10))
        assert (objective_dense(y, dictionary, solution, alpha, 0.01).total
                <= objective_dense(y, dictionary, warm, alpha, 0.01).total)

    def test_warm_start_shape(self, small_problem):
        y, dictionary, _ = small_problem
        with pytest.raises(StructuralError):
            solve_dense_activations(y, dictionary, 0.1,
                                    warm_start=np.zeros((1, 2, 2, 2)))
