from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"
SCHEMA_PATH = REPO_ROOT / "schema" / "run_report.schema.json"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def schema_path() -> Path:
    return SCHEMA_PATH


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish random full-rank density matrix (Wishart normalized)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = a @ a.conj().T
    mat /= np.trace(mat).real
    return 0.5 * (mat + mat.conj().T)


def random_qubit_pure_state(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    return psi / np.linalg.norm(psi)
