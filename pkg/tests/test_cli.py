import json

import numpy as np
import pytest

from cpmarg.cli import EXIT_GUARD, EXIT_IO, EXIT_OK, EXIT_VALIDATION, RunConfig, main
from cpmarg.models import load_series


def _run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_series(tmp_path):
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(0, 1, 5), rng.normal(4, 1, 5)])
    path = tmp_path / "x.txt"
    path.write_text("\n".join(f"{v:.17g}" for v in x) + "\n")
    return path


def _z(tmp_path, m, seed=0):
    rng = np.random.default_rng(seed)
    path = tmp_path / f"z{m}.json"
    path.write_text(json.dumps({"mu": rng.normal(0, 3, m).tolist(), "sigma": rng.uniform(0.5, 2, m).tolist()}))
    return path


class TestGenerate:
    def test_rq2_preset_reproducible(self, tmp_path, capsys):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert _run(capsys, "generate", "--preset", "rq2", "--out", a)[0] == EXIT_OK
        assert _run(capsys, "generate", "--preset", "rq2", "--out", b)[0] == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert load_series(a).size == 300
        meta = json.loads((tmp_path / "a.txt.json").read_text())
        assert meta["generator"]["tau_star"][-1] == 300

    def test_spec_file_with_bad_tau(self, tmp_path, capsys):
        spec = {"n": 10, "m_star": 2, "mu_star": [0, 1], "sigma_star": [1, 1], "tau_star": [0, 12, 10], "seed": 1}
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        code, _, err = _run(capsys, "generate", "--spec", path, "--out", tmp_path / "o.txt")
        assert code == EXIT_VALIDATION
        assert "error" in err

    def test_needs_exactly_one_source(self, tmp_path, capsys):
        assert _run(capsys, "generate", "--out", tmp_path / "o.txt")[0] == EXIT_VALIDATION


class TestMarginal:
    @pytest.mark.parametrize("m", [1, 3])
    def test_dp_matches_naive(self, tmp_path, small_series, capsys, m):
        z = _z(tmp_path, m)
        _, dp, _ = _run(capsys, "marginal", "--data", small_series, "--m", m, "--z", z)
        _, naive, _ = _run(capsys, "marginal", "--data", small_series, "--m", m, "--z", z, "--engine", "naive")
        assert float(dp) == pytest.approx(float(naive), abs=1e-9)

    def test_forward_mid_scale(self, tmp_path, capsys):
        series = tmp_path / "long.txt"
        assert _run(capsys, "generate", "--preset", "rq1-n200", "--out", series)[0] == EXIT_OK
        z = _z(tmp_path, 3)
        _, dp, _ = _run(capsys, "marginal", "--data", series, "--m", 3, "--z", z)
        _, fw, _ = _run(capsys, "marginal", "--data", series, "--m", 3, "--z", z, "--engine", "forward")
        assert float(dp) == pytest.approx(float(fw), abs=1e-8)

    def test_grad_json(self, tmp_path, small_series, capsys):
        code, out, _ = _run(capsys, "marginal", "--data", small_series, "--m", 2, "--z", _z(tmp_path, 2), "--grad")
        assert code == EXIT_OK
        d = json.loads(out)
        assert set(d) == {"value", "d_z", "d_logw"}
        assert len(d["d_z"]["mu"]) == 2 and len(d["d_logw"]) == 10

    def test_guard_refusal(self, tmp_path, capsys):
        series = tmp_path / "long.txt"
        _run(capsys, "generate", "--preset", "rq1-n800", "--out", series)
        code, _, err = _run(capsys, "marginal", "--data", series, "--m", 5, "--z", _z(tmp_path, 5), "--engine", "naive")
        assert code == EXIT_GUARD
        assert "error" in err

    def test_segment_count_mismatch(self, tmp_path, small_series, capsys):
        code, _, _ = _run(capsys, "marginal", "--data", small_series, "--m", 3, "--z", _z(tmp_path, 2))
        assert code == EXIT_VALIDATION

    def test_missing_file_is_io_error(self, tmp_path, capsys):
        code, _, _ = _run(capsys, "marginal", "--data", tmp_path / "nope.txt", "--m", 2, "--z", _z(tmp_path, 2))
        assert code == EXIT_IO

    def test_weights_file(self, tmp_path, small_series, capsys):
        w = tmp_path / "w.txt"
        w.write_text("\n".join(["2.0"] * 9 + ["1"]) + "\n")
        z = _z(tmp_path, 2)
        _, a, _ = _run(capsys, "marginal", "--data", small_series, "--m", 2, "--z", z, "--weights", w)
        _, b, _ = _run(capsys, "marginal", "--data", small_series, "--m", 2, "--z", z, "--weights", w, "--engine", "naive")
        assert float(a) == pytest.approx(float(b), abs=1e-9)


@pytest.fixture(scope="module")
def infer_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("infer")
    main(["generate", "--preset", "rq1-m2", "--out", str(root / "x.txt")])
    outs = []
    for name in ("a", "b"):
        code = main([
            "infer", "--data", str(root / "x.txt"), "--m", "3", "--chains", "3",
            "--samples", "100", "--warmup", "100", "--seed", "4", "--init-starts", "3",
            "--out", str(root / name),
        ])
        assert code == EXIT_OK
        outs.append(root / name)
    return outs


class TestInfer:
    def test_outputs(self, infer_run):
        out = infer_run[0]
        for c in (1, 2, 3):
            lines = (out / f"chain_{c}.csv").read_text().splitlines()
            assert len(lines) == 101
        d = json.loads((out / "diagnostics.json").read_text())
        # mu_1..3, sigma_1..3 and two interior changepoints
        assert len(d["rhat"]) == 2 * 3 + 2
        assert len(d["accept_rate"]) == 3

    def test_deterministic(self, infer_run):
        a, b = infer_run
        for c in (1, 2, 3):
            assert (a / f"chain_{c}.csv").read_bytes() == (b / f"chain_{c}.csv").read_bytes()

    def test_config_file_and_unknown_field(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"m": 2, "colour": "red"}))
        assert _run(capsys, "infer", "--config", cfg)[0] == EXIT_VALIDATION

    def test_missing_fields(self, capsys):
        assert _run(capsys, "infer", "--m", 2)[0] == EXIT_VALIDATION

    def test_run_config_from_dict(self):
        cfg = RunConfig.from_dict({"m": 3, "hmc": {"sample_steps": 10}, "prior": "well-log"})
        assert cfg.hmc.sample_steps == 10 and cfg.m == 3


class TestDiagnose:
    def test_single_chain(self, infer_run, capsys):
        code, out, _ = _run(capsys, "diagnose", infer_run[0] / "chain_1.csv")
        assert code == EXIT_OK
        d = json.loads(out)
        assert d["num_chains"] == 1 and d["num_draws"] == 100

    def test_matches_infer_output(self, infer_run, capsys):
        out = infer_run[0]
        _, text, _ = _run(capsys, "diagnose", *(out / f"chain_{c}.csv" for c in (1, 2, 3)), "--n", 50)
        d = json.loads(text)
        ref = json.loads((out / "diagnostics.json").read_text())
        # chain files hold 15 significant digits, so agreement is to rounding
        assert d["rhat"] == pytest.approx(ref["rhat"], rel=1e-9)
        assert d["first_moment"] == pytest.approx(ref["first_moment"], rel=1e-12)

    def test_malformed_row(self, infer_run, tmp_path, capsys):
        lines = (infer_run[0] / "chain_1.csv").read_text().splitlines()
        lines[5] = "1,2,oops"
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(lines) + "\n")
        code, _, err = _run(capsys, "diagnose", bad)
        assert code == EXIT_VALIDATION
        assert "6" in err

    def test_header_mismatch(self, infer_run, tmp_path, capsys):
        other = tmp_path / "other.csv"
        other.write_text("mu_1,sigma_1,lp__\n1,1,0\n")
        code, _, _ = _run(capsys, "diagnose", infer_run[0] / "chain_1.csv", other)
        assert code == EXIT_VALIDATION

    def test_missing_chain_file(self, tmp_path, capsys):
        assert _run(capsys, "diagnose", tmp_path / "none.csv")[0] == EXIT_IO


class TestBenchmarkCommand:
    def test_self_test(self, capsys):
        code, out, _ = _run(capsys, "benchmark", "--self-test")
        assert code == EXIT_OK
        slopes = [float(line.split(":")[1]) for line in out.splitlines()]
        assert all(abs(s - 1.0) <= 0.1 for s in slopes)

    def test_small_grid_csv(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"engines": ["dp"], "n_fixed": 20, "m_values": [1, 2], "n_values": [20, 40]}))
        out = tmp_path / "bench.csv"
        code, printed, _ = _run(capsys, "benchmark", "--grid", grid, "--mode", "api", "--out", out)
        assert code == EXIT_OK
        assert "dp slope vs m" in printed
        text = out.read_text()
        assert text.startswith("engine,m,segments,n,seconds\n")
        assert "engine,axis,slope" in text

    def test_guard(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"engines": ["naive"], "n_fixed": 300, "m_values": [10]}))
        assert _run(capsys, "benchmark", "--grid", grid)[0] == EXIT_GUARD
