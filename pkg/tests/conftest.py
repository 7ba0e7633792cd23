import numpy as np
import pytest

from freqrag.dataio import SynthConfig, synth_dataset


def direct_dft_half(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """O(n^2) evaluation of the transform definition; the FFT oracle."""
    n = x.shape[0]
    k = np.arange(n // 2 + 1)
    j = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, j) / n)
    full = w @ x.astype(np.complex128)
    return full.real, full.imag


@pytest.fixture(scope="session")
def small_synth():
    """Separable two-class set at desk dimensions, with its knowledge base."""
    cfg = SynthConfig(
        n_samples=60, d_t=16, d_v=24, d_k=16, n_knowledge=12,
        class_separation=8.0, noise_sigma=1.0, seed=1234,
    )
    return synth_dataset(cfg)
