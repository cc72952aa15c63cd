"""Smoke test for the pysoupdil extension module.

Build and run:
    cargo build --release -p soupdil-python --features extension-module
    cp target/release/libpysoupdil.so python/pysoupdil.so
    python3 python/smoke_test.py
"""

import math
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pysoupdil as sd


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    # thresholding
    b = [0.5 + 0.5j, -0.1j, 3.0]
    assert sd.sparse_code_l0(b, 0.3) == [0.5 + 0.5j, 0j, 3.0 + 0j]
    assert sd.sparse_code_l0(b, 0.3, cap=2.0)[2] == 2.0
    soft = sd.sparse_code_l1(b, 1.0)
    assert soft[1] == 0 and close(soft[2], 2.5)

    # dictionary learning on random sparse data
    rng = random.Random(0)
    n, atoms, count = 16, 32, 200
    truth = sd.Dictionary(
        [[complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(n)] for _ in range(atoms)],
        normalize=True,
    )
    signals = []
    for _ in range(count):
        s = [0j] * n
        for _ in range(3):
            a = truth.atom(rng.randrange(atoms))
            c = complex(rng.gauss(0, 1), rng.gauss(0, 1))
            s = [x + c * y for x, y in zip(s, a)]
        signals.append(s)
    init = sd.Dictionary.dct_plus_random(n, atoms, 0)
    for kind, weight in (("l0", 0.3), ("l1", 0.3)):
        res = sd.learn_dictionary(signals, init, kind, weight, 15)
        obj = res.objective_trace
        assert len(obj) == 15
        assert all(b <= a * (1 + 1e-12) for a, b in zip(obj, obj[1:])), kind
        assert 0 < res.nsre < 1 and 0 < res.sparsity < 1
        assert len(res.codes) == count and len(res.codes[0]) == atoms
        d = res.dictionary
        assert all(close(math.sqrt(sum(abs(v) ** 2 for v in d.atom(j))), 1.0, 1e-9) for j in range(atoms))
        print(f"{kind}: nsre={res.nsre:.4f} sparsity={res.sparsity:.4f}")

    # OMP recovers a scaled atom exactly
    code = sd.omp(truth, [2j * v for v in truth.atom(5)], 1)
    assert close(code[5], 2j, 1e-10) and sum(abs(c) > 0 for c in code) == 1

    # sensing and reconstruction
    img = sd.phantom(32)
    mask = sd.make_mask(32, 32, "cartesian", 2.5, 0)
    z = sd.mri_forward(img, mask)
    assert len(z) == sum(map(sum, mask))
    zf = sd.mri_adjoint(z, mask)
    res = sd.reconstruct(z, mask, outer_iters=4, atoms=36, reference=img)
    assert len(res.objective_trace) == 4
    assert len(res.psnr_trace) == 4
    print(f"zero-filled {res.zero_filled_psnr:.2f} dB -> {res.psnr_trace[-1]:.2f} dB")
    assert close(sd.psnr(zf, img), res.zero_filled_psnr, 1e-9)

    try:
        sd.sparse_code_l0(b, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative lambda accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
