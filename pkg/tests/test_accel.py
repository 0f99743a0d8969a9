"""Agreement between the numba kernels and the NumPy fallback path."""

import numpy as np
import pytest

from coactnet import _accel


def available_impls():
    impls = [("numpy", _accel.get_impl("numpy"))]
    try:
        impls.append(("numba", _accel.get_impl("numba")))
    except RuntimeError:
        pass
    return impls


IMPLS = available_impls()


@pytest.mark.skipif(len(IMPLS) < 2, reason="numba not installed")
class TestKernelAgreement:
    def test_directed_deltas_equal(self, rng):
        for _ in range(50):
            tu = np.unique(rng.uniform(0, 100, size=rng.integers(0, 30)))
            tv = np.unique(rng.uniform(0, 100, size=rng.integers(0, 30)))
            results = [impl["directed_deltas"](tu, tv) for _, impl in IMPLS]
            np.testing.assert_array_equal(results[0], results[1])

    def test_decayed_sums_close(self, rng):
        for _ in range(30):
            n_pairs = int(rng.integers(1, 10))
            counts = rng.integers(0, 12, size=n_pairs)
            offsets = np.zeros(n_pairs + 1, np.int64)
            offsets[1:] = np.cumsum(counts)
            deltas = np.concatenate([
                np.sort(rng.uniform(0, 50, size=c)) for c in counts
            ]) if offsets[-1] else np.empty(0)
            coefs = rng.uniform(0.1, 1.0, size=int(offsets[-1]))
            beta = float(rng.uniform(0, 2))
            dt_max = float(rng.uniform(1, 60))
            out = [impl["decayed_sums"](deltas, coefs, offsets, beta, dt_max)
                   for _, impl in IMPLS]
            np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-12)
            np.testing.assert_array_equal(out[0][1], out[1][1])

    def test_local_move_same_labels(self, rng):
        # same arrays, same order: both implementations must take the
        # exact same sequence of moves
        n = 12
        dense = rng.uniform(0.1, 1.0, size=(n, n))
        dense = np.triu(dense * (rng.random((n, n)) < 0.4), k=1)
        eu, ev = np.nonzero(dense)
        w = dense[eu, ev]
        src = np.concatenate([eu, ev]).astype(np.int64)
        dst = np.concatenate([ev, eu]).astype(np.int64)
        ww = np.concatenate([w, w])
        order_csr = np.lexsort((dst, src))
        src, dst, ww = src[order_csr], dst[order_csr], ww[order_csr]
        indptr = np.zeros(n + 1, np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        strength = np.zeros(n)
        np.add.at(strength, src, ww)
        kappa = (strength / np.sqrt(ww.sum()))[:, None]
        order = rng.permutation(n).astype(np.int64)
        outcomes = []
        for _, impl in IMPLS:
            labels = np.arange(n, dtype=np.int64)
            comm_kappa = kappa.copy()
            comm_size = np.ones(n, np.int64)
            impl["local_move"](indptr, dst, ww, kappa, labels, comm_kappa,
                               comm_size, order, np.zeros(n, np.int64),
                               1.0, 64)
            outcomes.append(labels.copy())
        np.testing.assert_array_equal(outcomes[0], outcomes[1])


class TestFallbackSelection:
    def test_env_flag_selects_numpy(self):
        import os
        import subprocess
        import sys
        code = ("import coactnet._accel as a; "
                "print(a.NUMBA_ENABLED)")
        env = dict(os.environ, COACTNET_NO_NUMBA="1")
        proc = subprocess.run([sys.executable, "-c", code], env=env,
                              capture_output=True, text=True)
        assert proc.stdout.strip() == "False"

    def test_active_kernels_are_callable(self):
        tu = np.array([1.0, 5.0])
        tv = np.array([2.0])
        assert _accel.directed_deltas_kernel(tu, tv).tolist() == [1.0]
