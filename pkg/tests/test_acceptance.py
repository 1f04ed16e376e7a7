"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. The random-matrix
ensembles are shared with the module tests through the session-scoped
`laws` cache, so a full-suite run computes each spectrum once.

Criterion 6 trains on MNIST when SPECTRA_DATA_DIR points at the IDX
files and on the bundled synthetic dataset otherwise (this sandbox has
no network access, and the loader never downloads).
"""

import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import spearmanr

from aespectra import autoencoder as ae
from aespectra import data, jacobian, linalg, rmt, spectra
from aespectra.cli import main
from aespectra.rng import Stream, derive

import oracles
from test_autoencoder import margin_safe_point, scaled_params
from test_cli import read_csv
from test_data import image_blob
from test_jacobian import decoder_map, encoder_map


@contextmanager
def criterion(num: int, title: str):
    start = time.time()
    try:
        yield
    except Exception:
        print(f"\n[criterion {num}] FAIL {title} ({time.time() - start:.1f}s)")
        raise
    print(f"\n[criterion {num}] PASS {title} ({time.time() - start:.1f}s)")


def within_printed(value: float, printed: float) -> bool:
    """Agreement with a 2-significant-figure printed value: within one
    unit in the second significant place (the paper truncates)."""
    unit = 10.0 ** (np.floor(np.log10(printed)) - 1.0)
    return abs(value - printed) < unit


def analysis_dataset(count: int) -> data.Dataset:
    directory = os.environ.get("SPECTRA_DATA_DIR")
    if directory:
        try:
            return data.load_mnist(directory, "train")
        except (data.DatasetMissingError, data.IdxFormatError):
            pass
    return data.synthetic_dataset(count, seed=0)


def latent_spectra(params, points):
    return [linalg.eigenvalues(jacobian.latent_jacobian(params, ae.forward(params, x)))
            for x in points]


def test_criterion_1_prediction_regression(tmp_path):
    with criterion(1, "prediction table reproduces the published chain values"):
        start = time.time()
        rc = main(["predict", "--out", str(tmp_path), "--run-id", "acc"])
        elapsed = time.time() - start
        assert rc == 0
        assert elapsed < 1.0
        header, rows = read_csv(tmp_path / "acc" / "predictions.csv")
        by_n1 = {int(r[0]): {k: float(v) for k, v in zip(header[1:], r[1:])}
                 for r in rows}
        assert within_printed(by_n1[2]["median_sq"], 0.00013)
        assert within_printed(by_n1[20]["median_sq"], 0.000043)
        assert within_printed(by_n1[2]["median_norm"], 0.011)
        assert within_printed(by_n1[20]["median_norm"], 0.0066)
        for row in by_n1.values():
            assert row["max_sq"] == pytest.approx(3.0 ** -8, rel=1e-12)
            assert row["max_norm"] == pytest.approx(1.0 / 81.0, rel=1e-12)
            assert within_printed(row["max_norm"], 0.012)


def test_criterion_2_circular_law(laws):
    with criterion(2, "circular law at n=512 over 10 seeds"):
        radius = 1.0 / np.sqrt(3.0)
        radial, angular, mods_all = [], [], []
        for seed in range(10):
            eig = laws.circular(512, seed)
            mods = np.abs(eig)
            mods_all.append(mods)
            radial.append(spectra.ks_statistic(
                mods ** 2, lambda t: rmt.uniform_disc_sq_modulus_cdf(radius, t)))
            angular.append(spectra.ks_statistic(
                spectra.folded_arguments(eig),
                lambda t: np.clip(np.asarray(t) / np.pi, 0.0, 1.0)))
        mean_radial = float(np.mean(radial))
        mean_angular = float(np.mean(angular))
        outside = float(np.mean(np.concatenate(mods_all) > radius + 0.05))
        assert mean_radial < 0.05, f"radial KS {mean_radial:.4f}"
        assert mean_angular < 0.05, f"argument KS {mean_angular:.4f}"
        assert outside <= 0.02, f"{outside:.2%} moduli beyond the disc + 0.05"


def test_criterion_3_semicircle_law(laws):
    with criterion(3, "semicircle law at n=512 over 10 seeds"):
        ks = [spectra.ks_statistic(laws.wigner(512, seed).real, rmt.semicircle_cdf)
              for seed in range(10)]
        mean_ks = float(np.mean(ks))
        assert mean_ks < 0.05, f"semicircle KS {mean_ks:.4f}"


def test_criterion_4_product_laws(laws):
    with criterion(4, "square products (m=2,3) and the (8,16) chain"):
        for m in (2, 3):
            ks = []
            for seed in range(10):
                sq = np.abs(laws.product(256, m, seed)) ** 2
                ks.append(spectra.ks_statistic(
                    sq, lambda t: rmt.product_sq_modulus_cdf(m, t)))
            mean_ks = float(np.mean(ks))
            assert mean_ks < 0.08, f"product m={m} KS {mean_ks:.4f}"
        pooled = np.concatenate(
            [np.abs(laws.chain((8, 16), seed)) ** 2 for seed in range(50)])
        ks_chain = spectra.ks_statistic(
            pooled, lambda t: rmt.chain_sq_modulus_cdf((2.0,), t))
        assert ks_chain < 0.12, f"chain KS {ks_chain:.4f}"


def test_criterion_5_epoch0_spectra():
    with criterion(5, "epoch-0 latent spectra: small moduli, decreasing medians"):
        dims = (2, 4, 8, 16)
        points = analysis_dataset(2000).subsample(300, seed=0)
        medians = []
        for d in dims:
            pooled = np.abs(np.concatenate(latent_spectra(ae.init(d, seed=0), points)))
            assert pooled.max() < 0.02, f"d={d}: max |lambda| {pooled.max():.4f}"
            medians.append(float(np.median(pooled)))
        rho, _ = spearmanr(dims, medians)
        assert rho <= -0.7, f"rank correlation {rho:.2f}, medians {medians}"


def test_criterion_6_training_trend():
    with criterion(6, "desk-scale training trend at d=4"):
        dataset = analysis_dataset(10_000)
        train_pts = dataset.subsample(10_000, seed=derive(0, 0x5AB))
        cfg = ae.TrainingConfig(epochs=10, seed=0,
                                checkpoint_epochs=frozenset({0, 10}))
        result = ae.train(ae.init(4, seed=0), train_pts, cfg)
        probe = dataset.subsample(300, seed=0)
        summaries = {
            e: spectra.summarize(latent_spectra(result.checkpoints[e], probe), e, 4)
            for e in (0, 10)}
        med0 = summaries[0].modulus_quantiles[2]
        med10 = summaries[10].modulus_quantiles[2]
        arg0 = summaries[0].argument_quantiles[2]
        arg10 = summaries[10].argument_quantiles[2]
        assert med10 > 0.3, f"epoch-10 median modulus {med10:.4f}"
        assert med10 > 50.0 * med0, f"growth {med10 / med0:.1f}x"
        assert arg10 < arg0, f"median argument {arg10:.4f} vs {arg0:.4f}"


def test_criterion_7_numerical_kernels():
    with criterion(7, "eigensolver, Jacobian, and rank-bound kernels"):
        # eigensolver vs characteristic-polynomial root oracle
        worst = 0.0
        for case in range(1000):
            n = 2 + case % 3
            a = Stream(derive(71, case)).uniform(n * n, -1.0, 1.0).reshape(n, n)
            mine = linalg.eigenvalues(a)
            ref = oracles.eig_via_char_poly(a)
            worst = max(worst, float(np.max(np.abs(mine - ref))))
        assert worst < 1e-7, f"char-poly oracle disagreement {worst:.2e}"

        # trace (n <= 20) and determinant (n <= 6) consistency
        for n in range(2, 21):
            for case in range(100):
                a = Stream(derive(72, n, case)).uniform(n * n, -1.0, 1.0).reshape(n, n)
                eig = linalg.eigenvalues(a)
                tr = float(np.trace(a))
                assert abs(eig.sum().real - tr) <= 1e-8 * (1.0 + abs(tr))
                if n <= 6:
                    det = float(np.linalg.det(a))
                    if abs(det) > 1e-3:
                        assert abs(np.prod(eig) - det) <= 1e-6 * abs(det)

        # all four Jacobians against central finite differences
        params = scaled_params(3, seed=73)
        x = margin_safe_point(params, data.synthetic_dataset(100, seed=74).points)
        cache = ae.forward(params, x)
        enc, dec = encoder_map(params), decoder_map(params)
        checks = (
            (jacobian.encoder_jacobian(params, cache), enc, x),
            (jacobian.decoder_jacobian(params, cache), dec, cache.z),
            (jacobian.input_jacobian(params, cache), lambda v: dec(enc(v)), x),
            (jacobian.latent_jacobian(params, cache), lambda z: enc(dec(z)), cache.z),
        )
        for j, f, at in checks:
            assert np.max(np.abs(j - oracles.fd_jacobian(f, at, h=1e-5))) < 1e-4

        # AB/BA nonzero-spectrum equality over 100 rectangular pairs
        for case in range(100):
            n = 2 + case % 7
            m = n + 1 + case % 6
            a = Stream(derive(75, case, 0)).uniform(n * m, -1.0, 1.0).reshape(n, m)
            b = Stream(derive(75, case, 1)).uniform(m * n, -1.0, 1.0).reshape(m, n)
            eab = linalg.eigenvalues(a @ b)
            eba = linalg.eigenvalues(b @ a)
            nz = eba[np.abs(eba) >= 1e-8]
            assert len(eba) - len(nz) == m - n
            assert np.max(np.abs(np.sort_complex(nz) - eab)) < 1e-8

        # rank bound for the input Jacobian at 50 points across dimensions
        pts = data.synthetic_dataset(50, seed=76).points
        for i, x in enumerate(pts):
            d = (2, 4, 8, 16)[i % 4]
            p = ae.init(d, seed=77)
            j = jacobian.input_jacobian(p, ae.forward(p, x))
            gram = np.linalg.eigvalsh(j.T @ j)
            assert np.sum(gram > 1e-12) <= d
        # and once through the full 784x784 eigensolver
        p = ae.init(6, seed=78)
        j = jacobian.input_jacobian(p, ae.forward(p, pts[0]))
        eig = linalg.eigenvalues(j)
        assert np.sum(np.abs(eig) >= 1e-7) <= 6
        assert np.sum(np.abs(eig) < 1e-7) >= 784 - 6


def test_criterion_8_determinism_and_formats(tmp_path):
    with criterion(8, "byte-identical reruns, checkpoint round-trip, IDX rejection"):
        # byte-identical checkpoints and CSVs across reruns
        pairs = []
        for tag in ("a", "b"):
            out = str(tmp_path / tag)
            rc = main(["train", "--out", out, "--run-id", "det", "--synthetic", "200",
                       "--dims", "2", "--epochs", "1", "--checkpoints", "0,1"])
            assert rc == 0
            rc = main(["analyze", "--out", out, "--run-id", "det-an",
                       "--checkpoints", os.path.join(out, "det"),
                       "--synthetic", "150", "--points", "20"])
            assert rc == 0
            pairs.append(out)
        for rel in (("det", "ae_d2_e0.ckpt"), ("det", "ae_d2_e1.ckpt"),
                    ("det", "losses_d2.csv"), ("det-an", "summaries.csv"),
                    ("det-an", "summaries.json")):
            a = os.path.join(pairs[0], *rel)
            b = os.path.join(pairs[1], *rel)
            with open(a, "rb") as fa, open(b, "rb") as fb:
                assert fa.read() == fb.read(), f"{rel} differs between reruns"

        # checkpoint round-trip is bit-exact
        p = ae.init(5, seed=81)
        path = tmp_path / "rt.ckpt"
        ae.save_checkpoint(path, p, epoch=3, seed=81)
        loaded, epoch, seed = ae.load_checkpoint(path)
        assert (epoch, seed) == (3, 81)
        path2 = tmp_path / "rt2.ckpt"
        ae.save_checkpoint(path2, loaded, epoch=3, seed=81)
        assert path.read_bytes() == path2.read_bytes()

        # the IDX parser rejects every corrupted magic
        good = image_blob()
        rejected = 0
        for pos in range(4):
            for flip in (0x01, 0x02, 0x80, 0xFF):
                mutated = bytearray(good)
                mutated[pos] ^= flip
                with pytest.raises(data.IdxFormatError):
                    data.parse_idx_images(bytes(mutated))
                rejected += 1
        assert rejected == 16
