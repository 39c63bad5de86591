import numpy as np
import pytest

from proxtik import KernelSpec, LossModel, TaskSpec, generate, gram_matrix


@pytest.fixture(scope="session")
def spline2():
    return KernelSpec(2)


@pytest.fixture(scope="session")
def logistic():
    return LossModel("logistic")


@pytest.fixture(scope="session")
def squared():
    return LossModel("squared")


@pytest.fixture(scope="session")
def small_classification(spline2):
    """64-point logistic task with its Gram matrix."""
    task = TaskSpec("logistic", 0.25, 2, 64, seed=7)
    dataset = generate(task)
    return dataset, gram_matrix(spline2, dataset.inputs)


@pytest.fixture(scope="session")
def small_regression(spline2):
    """64-point squared-loss task with its Gram matrix."""
    task = TaskSpec("squared", 0.25, 2, 64, seed=7, noise_sigma=0.3)
    dataset = generate(task)
    return dataset, gram_matrix(spline2, dataset.inputs)


@pytest.fixture(scope="session")
def kernel512(spline2):
    """Gram matrix on 512 uniform inputs, shared by the spectrum-shape tests."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
    return gram_matrix(spline2, rng.random(512))
