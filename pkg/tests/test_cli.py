import json

import numpy as np
import pytest

from spectral_t import io as fio
from spectral_t.cli import _prior_report, main
from spectral_t.fourier_core import to_coefficients
from spectral_t.spectrum_model import (
    SpectrumPrior,
    autocovariance_moments,
    integrated_spectrum_moments,
    posterior_update,
)


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def noise_csv(tmp_path):
    path = tmp_path / "noise.csv"
    assert run("simulate-noise", "--seed", 1, "--out", path) == 0
    return path


@pytest.fixture
def white_prior(tmp_path):
    path = tmp_path / "prior.json"
    assert run("elicit", "--preset", "paper-3.1", "--out", path) == 0
    return path


@pytest.fixture
def chirp_csv(tmp_path):
    path = tmp_path / "chirp.csv"
    spec = tmp_path / "true_spectrum.csv"
    assert run("simulate-noise", "--preset", "paper-3.2", "--seed", 4, "--out", path, "--spectrum-out", spec) == 0
    return path, spec


class TestSimulateNoise:
    def test_defaults(self, noise_csv):
        header, data = fio.read_csv(noise_csv)
        assert header == ["t", "x"] and data.shape == (100, 2)
        np.testing.assert_allclose(data[:, 0], np.arange(100) * 0.01)

    def test_byte_identical(self, tmp_path, noise_csv):
        again = tmp_path / "again.csv"
        run("simulate-noise", "--seed", 1, "--out", again)
        assert again.read_bytes() == noise_csv.read_bytes()

    def test_long_run_variance(self, tmp_path):
        path = tmp_path / "long.csv"
        run("simulate-noise", "--seed", 3, "--n", 100_000, "--out", path)
        _, data = fio.read_csv(path)
        assert data[:, 1].var() == pytest.approx(16 / 7, rel=0.02)

    def test_white_noise(self, tmp_path):
        path = tmp_path / "white.csv"
        run("simulate-noise", "--seed", 3, "--n", 20_000, "--ar-coeff", 0, "--out", path)
        x = fio.read_csv(path)[1][:, 1]
        assert np.abs(x).max() <= np.sqrt(3)
        assert abs(np.corrcoef(x[1:], x[:-1])[0, 1]) < 0.03

    def test_round_trip(self, noise_csv):
        assert fio.series_csv(fio.read_series(noise_csv)) == noise_csv.read_text()

    def test_manifest(self, noise_csv):
        m = json.loads((noise_csv.parent / "noise.csv.manifest.json").read_text())
        assert m["seed"] == 1 and m["outputs"] == [str(noise_csv)]
        assert m["command"][0] == "spectral-t" and len(m["config_digest"]) == 64

    def test_manifest_rerun_reproduces(self, chirp_csv):
        path, spec = chirp_csv
        before = path.read_bytes(), spec.read_bytes()
        m = json.loads((path.parent / "chirp.csv.manifest.json").read_text())
        assert main(m["command"][1:]) == 0
        assert (path.read_bytes(), spec.read_bytes()) == before

    def test_chirp_injection_snr(self, chirp_csv):
        path, _ = chirp_csv
        m = json.loads((path.parent / "chirp.csv.manifest.json").read_text())
        inj = m["config"]["injected"]
        assert (inj["f"], inj["fdot"], inj["phi"]) == (20.0, 5.0, 2.0)
        assert inj["a"] == pytest.approx(1.6991403270509757, rel=1e-9)

    def test_invalid_flags(self, tmp_path, capsys):
        assert run("simulate-noise", "--seed", 1, "--ar-coeff", 1.5, "--out", tmp_path / "x.csv") == 1
        out = capsys.readouterr()
        assert out.out == "" and "coefficient" in out.err
        with pytest.raises(SystemExit) as exc:
            run("simulate-noise", "--out", tmp_path / "x.csv")
        assert exc.value.code == 2
        assert capsys.readouterr().out == ""


class TestElicit:
    def test_preset_values(self, white_prior):
        d = json.loads(white_prior.read_text())
        assert d["grid"] == {"n": 100, "dt": 0.01}
        assert len(d["bins"]) == 51
        for b in d["bins"]:
            assert b["nu"] == 3.0 and not b["improper"]
            assert abs(b["s2"] - 1 / 60) < 1e-12
            assert abs(b["mean"] - 0.05) < 1e-12

    def test_explicit_flags_match_preset(self, tmp_path, white_prior):
        path = tmp_path / "p.json"
        run("elicit", "--white", "--target-var", 2.5, "--nu", 3, "--n", 100, "--dt", 0.01, "--out", path)
        assert path.read_text() == white_prior.read_text()

    def test_jeffreys(self, tmp_path):
        path = tmp_path / "j.json"
        assert run("elicit", "--jeffreys", "--out", path) == 0
        bins = json.loads(path.read_text())["bins"]
        assert all(b["nu"] == 0 and b["s2"] == 0 and b["improper"] for b in bins)

    def test_cv(self, tmp_path):
        path = tmp_path / "cv.json"
        assert run("elicit", "--white", "--target-var", 2.5, "--cv", 0.3, "--out", path) == 0
        prior = fio.read_prior(path)
        mean, _, cv = integrated_spectrum_moments(prior, 0, 50, include_dc=True)
        assert abs(cv - 0.3) < 1e-8 and mean == pytest.approx(2.5)

    def test_bands(self, tmp_path):
        bands = tmp_path / "bands.csv"
        bands.write_text("f1,f2,mean,var\n0,25,1.5,0.2\n25,50,1.0,0.1\n")
        path = tmp_path / "b.json"
        assert run("elicit", "--bands", bands, "--out", path) == 0
        prior = fio.read_prior(path)
        assert prior.nu[10] != prior.nu[40]

    @pytest.mark.parametrize(
        "argv",
        [
            ["--white", "--jeffreys"],
            ["--white", "--target-var", 2.5, "--nu", 3, "--cv", 0.2],
            ["--jeffreys", "--nu", 3],
            ["--white", "--nu", 3],
        ],
    )
    def test_inconsistent_flags(self, tmp_path, capsys, argv):
        assert run("elicit", *argv, "--out", tmp_path / "x.json") == 2
        assert capsys.readouterr().out == ""

    def test_round_trip(self, white_prior):
        assert fio.json_text(_prior_report(fio.read_prior(white_prior))) == white_prior.read_text()


class TestNoisePosterior:
    def test_jeffreys_counts(self, tmp_path, noise_csv):
        prior = tmp_path / "j.json"
        run("elicit", "--jeffreys", "--out", prior)
        out = tmp_path / "post.json"
        assert run("noise-posterior", "--in", noise_csv, "--prior", prior, "--out", out) == 0
        bins = json.loads(out.read_text())["bins"]
        assert bins[0]["nu"] == 1 and bins[50]["nu"] == 1
        assert all(b["nu"] == 2 and not b["mean_exists"] and b["mean"] is None for b in bins[1:50])

    def test_white_counts_and_values(self, tmp_path, noise_csv, white_prior):
        out = tmp_path / "post.json"
        dens = tmp_path / "dens.csv"
        assert run("noise-posterior", "--in", noise_csv, "--prior", white_prior, "--out", out,
                   "--density-out", dens, "--grid-points", 50) == 0
        post = fio.read_prior(out)
        assert post.nu[0] == 4 and post.nu[50] == 4 and np.all(post.nu[1:50] == 5)
        fc = to_coefficients(fio.read_series(noise_csv))
        expected = posterior_update(fio.read_prior(white_prior), fc)
        np.testing.assert_allclose(post.s2, expected.s2, rtol=1e-15)
        header, rows = fio.read_csv(dens)
        assert header == ["j", "frequency", "sigma2", "density"] and rows.shape == (51 * 50, 4)
        assert np.all(rows[:, 3] > 0)

    def test_grid_mismatch(self, tmp_path, noise_csv, capsys):
        prior = tmp_path / "p.json"
        run("elicit", "--jeffreys", "--n", 50, "--out", prior)
        assert run("noise-posterior", "--in", noise_csv, "--prior", prior) == 1
        assert "grid" in capsys.readouterr().err

    def test_missing_input(self, tmp_path, white_prior):
        assert run("noise-posterior", "--in", tmp_path / "nope.csv", "--prior", white_prior) == 1


class TestMcmc:
    def mcmc(self, tmp_path, data, *extra, name="chain"):
        out = tmp_path / f"{name}.csv"
        summary = tmp_path / f"{name}.json"
        code = run("mcmc", "--in", data, "--iters", 4000, "--adapt", 1000, "--seed", 2,
                   "--out", out, "--summary", summary, *extra)
        return code, out, summary

    def test_three_modes(self, tmp_path, chirp_csv, white_prior):
        data, spec = chirp_csv
        modes = {
            "marginal-t": ["--prior", white_prior],
            "fixed-spectrum": ["--spectrum", spec],
            "white-unknown": ["--white-nu", 3, "--white-s2", 0.02],
        }
        for mode, extra in modes.items():
            code, out, summary = self.mcmc(tmp_path, data, "--noise-mode", mode, *extra, name=mode)
            assert code == 0
            s = json.loads(summary.read_text())
            assert set(s["parameters"]) == {"f", "fdot", "a", "phi"}
            assert all({"mean", "sd", "lower", "upper"} <= set(v) for v in s["parameters"].values())
            header = out.read_text().splitlines()[0].split(",")
            assert header[:6] == ["iter", "f", "fdot", "a", "phi", "log_target"]
            if mode == "white-unknown":
                assert header[6:] == ["sigma2"]

    def test_deterministic_summary(self, tmp_path, chirp_csv, white_prior):
        data, _ = chirp_csv
        _, _, s1 = self.mcmc(tmp_path, data, "--prior", white_prior, name="a")
        _, _, s2 = self.mcmc(tmp_path, data, "--prior", white_prior, name="b")
        assert s1.read_text() == s2.read_text()

    def test_amplitude_bound(self, tmp_path, chirp_csv, white_prior):
        data, _ = chirp_csv
        _, out, _ = self.mcmc(tmp_path, data, "--prior", white_prior, "--init", 20, 5, 9.9, 2.0)
        header, rows = fio.read_csv(out)
        assert rows[:, header.index("a")].max() <= 10.0

    def test_noise_draw_columns(self, tmp_path, chirp_csv, white_prior):
        data, _ = chirp_csv
        _, out, _ = self.mcmc(tmp_path, data, "--prior", white_prior, "--noise-draws")
        header, rows = fio.read_csv(out)
        assert header[6:] == [f"sigma2_{j}" for j in range(51)]
        assert fio.csv_text(header, rows) == out.read_text()

    def test_bad_modes(self, tmp_path, chirp_csv, white_prior):
        data, spec = chirp_csv
        assert self.mcmc(tmp_path, data, "--noise-mode", "fixed-spectrum")[0] == 2
        assert self.mcmc(tmp_path, data, "--prior", white_prior, "--spectrum", spec)[0] == 2
        with pytest.raises(SystemExit) as exc:
            self.mcmc(tmp_path, data, "--noise-mode", "pink")
        assert exc.value.code == 2


class TestAutocov:
    def posterior(self, tmp_path, noise_csv, nu=5):
        prior = tmp_path / "prior.json"
        run("elicit", "--white", "--target-var", 2.5, "--nu", nu, "--out", prior)
        post = tmp_path / "post.json"
        run("noise-posterior", "--in", noise_csv, "--prior", prior, "--out", post)
        return post

    def test_summary_and_variance(self, tmp_path, noise_csv):
        post = self.posterior(tmp_path, noise_csv)
        out, var = tmp_path / "ac.csv", tmp_path / "var.json"
        assert run("autocov", "--posterior", post, "--draws", 20_000, "--seed", 1, "--out", out,
                   "--variance-out", var) == 0
        header, rows = fio.read_csv(out)
        assert header == ["lag", "mean", "sd", "q0.025", "q0.25", "q0.5", "q0.75", "q0.975"]
        v = json.loads(var.read_text())
        assert v["mean"] == pytest.approx(rows[0, 1], rel=1e-12)
        assert v["sd"] == pytest.approx(rows[0, 2], rel=1e-12)
        mean, _ = autocovariance_moments(fio.read_prior(post))
        se = rows[:, 2] / np.sqrt(20_000)
        assert np.all(np.abs(rows[:, 1] - mean) < 4 * se)

    def test_rejections(self, tmp_path, noise_csv, capsys):
        post = self.posterior(tmp_path, noise_csv)
        assert run("autocov", "--posterior", post, "--draws", 0, "--seed", 1) == 2
        improper = tmp_path / "improper.json"
        grid = fio.read_prior(post).grid
        fio.atomic_write_text(improper, fio.json_text(fio.prior_dict(SpectrumPrior.jeffreys(grid))))
        assert run("autocov", "--posterior", improper, "--draws", 10, "--seed", 1) == 1
        err = capsys.readouterr()
        assert "improper" in err.err and err.out == ""
