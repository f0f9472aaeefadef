import os
import random
import subprocess
import sys

import pytest

from robcert import kernels

BACKENDS = kernels.backends()


def _family(rng, n, k):
    return sorted({rng.getrandbits(n) for _ in range(k)})


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")
def test_backends_agree():
    rng = random.Random(31)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for _ in range(300):
        n = rng.randint(1, 12)
        fam = _family(rng, n, rng.randint(1, 60))
        assert py.vc_dimension(fam, n) == cy.vc_dimension(fam, n)
        sub = rng.getrandbits(n)
        assert py.shatters(fam, sub) == cy.shatters(fam, sub)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_known_values(name):
    impl = BACKENDS[name]
    assert impl.vc_dimension([0b00, 0b01, 0b10, 0b11], 2) == 2
    assert impl.vc_dimension([0], 3) == 0
    # initial segments of 4 points: VC dimension 1
    assert impl.vc_dimension([0b0000, 0b1000, 0b1100, 0b1110, 0b1111], 4) == 1
    assert impl.shatters([0, 1], 0b1) and not impl.shatters([1], 0b1)


def test_env_forces_pure_python():
    env = dict(os.environ, ROBCERT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from robcert import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"
