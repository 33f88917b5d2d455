import numpy as np
import pytest
import structlog
from typing import Sequence

from krusco.driver.engine import KcscConfig
from krusco.driver.synthetic import SyntheticSpec, generate_synthetic
from krusco.model.kcsc import ActivationSet, Dictionary, synthesize
from krusco.solvers.dictionary import project_unit_ball
from krusco.solvers.proximal import SolverBudget
from krusco.tensor.core import KruskalTensor


@pytest.fixture(autouse=True)
def quiet_logging():
    """Keep structlog output out of captured test output."""
    structlog.configure(
        processors=[structlog.processors.KeyValueRenderer()],
        logger_factory=structlog.ReturnLoggerFactory(),
        cache_logger_on_first_use=False,
    )
    yield
    structlog.reset_defaults()


@pytest.fixture
def rng():
    """Seeded generator for reproducible tests."""
    return np.random.default_rng(42)


def make_kruskal(rng: np.random.Generator, shape: Sequence[int],
                 rank: int) -> KruskalTensor:
    """Random Gaussian factors."""
    return KruskalTensor(tuple(rng.standard_normal((extent, rank)) for extent in shape))


def make_dictionary(rng: np.random.Generator, n_atoms: int,
                    atom_shape: Sequence[int]) -> Dictionary:
    """Random atoms on the unit sphere."""
    atoms = [project_unit_ball(3.0 * rng.standard_normal(atom_shape))
             for _ in range(n_atoms)]
    return Dictionary(np.stack(atoms))


def make_problem(rng: np.random.Generator, atom_shape: Sequence[int],
                 act_shape: Sequence[int], n_atoms: int = 2, rank: int = 2,
                 noise: float = 0.1):
    """Signal, dictionary and activation set of a small random instance."""
    dictionary = make_dictionary(rng, n_atoms, atom_shape)
    acts = ActivationSet(
        tuple(make_kruskal(rng, act_shape, rank) for _ in range(n_atoms))
    )
    y = synthesize(dictionary, acts) + noise * rng.standard_normal(
        tuple(w + m - 1 for w, m in zip(atom_shape, act_shape))
    )
    return y, dictionary, acts


def nested_loop_convolution(atom: np.ndarray, act: np.ndarray) -> np.ndarray:
    """Full convolution by definition: each atom entry shifts the activation."""
    out = np.zeros(tuple(w + m - 1 for w, m in zip(atom.shape, act.shape)))
    for offset in np.ndindex(*atom.shape):
        window = tuple(slice(j, j + m) for j, m in zip(offset, act.shape))
        out[window] += atom[offset] * act
    return out


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Frobenius error relative to the expected value (absolute when it is zero)."""
    scale = np.linalg.norm(expected)
    error = np.linalg.norm(np.asarray(actual) - np.asarray(expected))
    return float(error / scale) if scale > 0 else float(error)


def assert_non_increasing(values: Sequence[float], slack: float = 1e-9):
    """Assert a series never rises by more than `slack`."""
    values = np.asarray(values, dtype=float)
    rises = np.diff(values)
    assert np.all(rises <= slack), f"series rises by up to {rises.max():.3e}"


@pytest.fixture
def small_problem(rng):
    """Third-order instance: K=2, R=2, atoms 2x2x3, activations 3x4x2."""
    return make_problem(rng, (2, 2, 3), (3, 4, 2))


@pytest.fixture
def scaled_spec():
    """Scaled-down synthetic configuration used by the descent experiments."""
    return SyntheticSpec(
        n_atoms=3,
        atom_shape=(2, 3, 4),
        signal_shape=(8, 12, 16),
        rank=2,
        density=0.3,
    )


@pytest.fixture
def scaled_data(scaled_spec):
    """Noiseless planted instance of the scaled configuration."""
    return generate_synthetic(scaled_spec, seed=7)


@pytest.fixture
def quick_config():
    """Small alternating fit with short inner budgets."""
    return KcscConfig(
        n_atoms=3,
        rank=2,
        atom_shape=(2, 3, 4),
        alpha=(0.05, 0.05, 0.05),
        outer_loops=3,
        z_budget=SolverBudget(max_iter=50),
        d_budget=SolverBudget(max_iter=30),
        seed=3,
    )
