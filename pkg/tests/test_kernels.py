import numpy as np
import pytest

from mimonoma import kernels
from mimonoma._kernels_py import zf_gains as py_gains
from mimonoma.channel import sample_fading


def reference(G, B):
    H = G @ B
    C = np.linalg.inv(np.swapaxes(H.conj(), 1, 2) @ H)
    return 1.0 / np.real(np.diagonal(C, axis1=1, axis2=2))


@pytest.mark.parametrize("backend", kernels.available_backends())
@pytest.mark.parametrize("N,r,Me", [(2, 16, 2), (3, 3, 2), (5, 4, 3), (1, 1, 1)])
def test_backend_matches_inverse(backend, N, r, Me):
    rng = np.random.default_rng(N * 100 + r)
    G = sample_fading(N, r, rng, size=500)
    B = rng.standard_normal((r, Me)) + 1j * rng.standard_normal((r, Me))
    got = kernels.load_backend(backend).zf_gains(np.ascontiguousarray(G), B)
    np.testing.assert_allclose(got, reference(G, B), rtol=1e-10)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_singular_rows_flagged(backend):
    rng = np.random.default_rng(0)
    G = sample_fading(2, 3, rng, size=4)
    G[2] = 0
    G[3, 1] = G[3, 0]  # rank one
    B = np.eye(3, 2, dtype=complex)
    gains = kernels.load_backend(backend).zf_gains(np.ascontiguousarray(G), B)
    assert np.isnan(gains[2]).all() and np.isnan(gains[3]).all()
    assert np.isfinite(gains[:2]).all()


def test_backends_agree():
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(1)
    G = np.ascontiguousarray(sample_fading(2, 16, rng, size=2000))
    B = rng.standard_normal((16, 2)) + 1j * rng.standard_normal((16, 2))
    np.testing.assert_allclose(kernels.load_backend("cython").zf_gains(G, B), py_gains(G, B), rtol=1e-10)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.load_backend("fortran")


def test_benchmark_script_runs():
    import subprocess
    import sys
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    proc = subprocess.run([sys.executable, str(script), "--trials", "2000", "--repeat", "1"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "python" in proc.stdout and "trials/s" in proc.stdout
