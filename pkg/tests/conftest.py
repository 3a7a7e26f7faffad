"""Pytest fixtures for PLVC Quantile tests."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from plvc_quantile.config import settings


@pytest.fixture(autouse=True)
def isolated_ledger(tmp_path, monkeypatch):
    """Send run-ledger entries to a per-test file instead of ./logs."""
    path = tmp_path / "ledger" / "runs.jsonl"
    monkeypatch.setattr(settings, "audit_log_path", str(path))
    return path


@pytest.fixture
def temp_audit_log():
    """Temporary audit log file for each test."""
    with tempfile.NamedTemporaryFile(suffix=".jsonl", delete=False) as f:
        yield Path(f.name)
        Path(f.name).unlink(missing_ok=True)


@pytest.fixture
def solver():
    """Solver with default settings (a fresh instance, not the singleton)."""
    from plvc_quantile.services.solver import QuantileSolver

    return QuantileSolver()


@pytest.fixture
def small_config():
    """Small, fast simulation design with fixed knots."""
    from plvc_quantile.models.simulation import SimulationConfig

    return SimulationConfig(case=1, n=40, tau=0.5, beta=1.0, eta=1.0, reps=4, seed=11, knots=1)


@pytest.fixture
def sim_dataset(small_config):
    """One simulated longitudinal dataset: intercept, x1, x2, x3 varying; z constant."""
    from plvc_quantile.services.simulation import gen_dataset

    return gen_dataset(small_config, 0).dataset


@pytest.fixture
def spec_k1():
    """Cubic spline with one internal knot."""
    from plvc_quantile.splines import make_spec

    return make_spec(1, degree=3)


@pytest.fixture
def sim_csv(tmp_path, sim_dataset):
    """The simulated dataset written as a CSV file."""
    from plvc_quantile.data import write_csv

    return write_csv(sim_dataset, tmp_path / "sim.csv")


@pytest.fixture
def heteroscedastic_dataset():
    """
    Single varying covariate x, one constant covariate z and a time trend.

    30 subjects with 6 visits each; y = 1 + t + (2 - t) x + 0.5 z + noise.
    """
    from plvc_quantile.models.data import LongitudinalDataset

    rng = np.random.default_rng(5)
    n, m = 30, 6
    subject = np.repeat(np.arange(n), m)
    time = np.tile(np.linspace(0.0, 5.0, m), n) + rng.uniform(-0.2, 0.2, n * m)
    x = rng.normal(size=n * m)
    z = np.repeat(rng.integers(0, 2, n), m).astype(float)
    y = 1.0 + time + (2.0 - time) * x + 0.5 * z + rng.normal(size=n * m)
    return LongitudinalDataset.from_arrays(
        subject, time, y, x, z, varying_names=["x"], constant_names=["z"], intercept=True
    )


@pytest.fixture
def sample_csv_text():
    """Small longitudinal CSV with shuffled rows and extra whitespace."""
    return (
        "subject,time,y,x1,z1\n"
        "b, 2.0, 3.5, 0.1, 1\n"
        "a, 1.0, 1.0, 0.5, 0\n"
        "b, 0.0, 2.5, 0.2, 1\n"
        "a, 0.0, 0.5, 0.4, 0\n"
        "c, 3.0, 4.0, 0.3, 1\n"
    )


@pytest.fixture
def sample_csv(tmp_path, sample_csv_text):
    """sample_csv_text written to disk."""
    path = tmp_path / "sample.csv"
    path.write_text(sample_csv_text, encoding="utf-8")
    return path
