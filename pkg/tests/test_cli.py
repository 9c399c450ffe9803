import csv
import io
import math

import numpy as np
import pytest

from hok.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _info(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_kernel_info_tsinc2(capsys):
    code, out, _ = run(capsys, "kernel-info", "--family", "tsinc", "--order", "2")
    assert code == 0
    d = _info(out)
    assert float(d["optimal_alpha"]) == pytest.approx(1 / 3, rel=1e-15)
    assert float(d["K(0)"]) == pytest.approx(1 / 3) and float(d["K(1)"]) == pytest.approx(1 / 3)
    assert float(d["int_G2"]) == pytest.approx(1 / 3)
    assert d["alpha_is_optimal"] == "yes"


def test_kernel_info_tsinc4(capsys):
    code, out, _ = run(capsys, "kernel-info", "--family", "tsinc", "--order", "4")
    d = _info(out)
    assert float(d["optimal_alpha"]) == pytest.approx(17 / 35, rel=1e-15)
    got = [float(d[f"K({j})"]) for j in range(3)]
    np.testing.assert_allclose(got, [17 / 35, 12 / 35, -3 / 35], rtol=1e-14)
    assert float(d["C"]) == pytest.approx(17 / 18)


def test_kernel_info_non_optimal_alpha(capsys):
    _, out, _ = run(capsys, "kernel-info", "--family", "tsinc", "--order", "2", "--alpha", "0.3")
    assert _info(out)["alpha_is_optimal"] == "no"


def test_kernel_info_g1(capsys):
    code, out, _ = run(capsys, "kernel-info", "--family", "g1", "--order", "2")
    assert code == 0
    assert _info(out)["K(0)"].startswith("2/3")


def test_kernel_info_alpha_one(capsys):
    code, _, err = run(capsys, "kernel-info", "--family", "tsinc", "--order", "2", "--alpha", "1")
    assert code == 2
    assert "alpha=1 degenerates the kernel" in err


@pytest.mark.parametrize("order", ["3", "0", "-2"])
def test_kernel_info_bad_order(capsys, order):
    code, _, err = run(capsys, "kernel-info", "--family", "tsinc", "--order", order)
    assert code == 2 and "order" in err


def test_kernel_eval_tsinc(capsys):
    code, out, _ = run(capsys, "kernel-eval", "--family", "tsinc", "--order", "2", "--grid", "0:1:3")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["u", "K"]
    vals = np.array(rows[1:], dtype=float)
    np.testing.assert_allclose(vals[:, 0], [0, 0.5, 1])
    np.testing.assert_allclose(vals[:, 1], [1 / 3, 10 / (9 * math.pi), 1 / 3], rtol=1e-14)


@pytest.mark.parametrize("family", ["g1", "g2"])
def test_kernel_eval_single_point(capsys, family):
    code, out, _ = run(capsys, "kernel-eval", "--family", family, "--order", "2", "--grid", "0:0:1")
    rows = _rows(out)
    assert code == 0 and len(rows) == 2
    assert float(rows[1][1]) == pytest.approx(2 / 3, abs=1e-10)


def test_kernel_eval_negative_grid_and_17_digits(capsys):
    _, out, _ = run(capsys, "kernel-eval", "--family", "gaussian", "--grid", "-1:1:3")
    rows = _rows(out)
    assert rows[2] == ["0", format(1 / math.sqrt(2 * math.pi), ".17g")]


@pytest.mark.parametrize("grid", ["1:0:5", "0:1", "a:b:c", "0:1:0", "0:1:1"])
def test_kernel_eval_bad_grid(capsys, grid):
    code, _, _ = run(capsys, "kernel-eval", "--family", "tsinc", "--grid", grid)
    assert code == 2


def test_estimate_single_value(tmp_path, capsys):
    f = tmp_path / "x.txt"
    f.write_text("0\n")
    code, out, _ = run(capsys, "estimate", str(f), "--family", "gaussian", "--bandwidth", "1", "--grid", "-1:1:3")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["x", "raw"]
    assert float(rows[2][1]) == pytest.approx(0.398942, abs=1e-6)


def test_estimate_correct_integrates_to_one(tmp_path, capsys):
    data = np.random.default_rng(0).normal(0, 0.5, 80)
    f = tmp_path / "x.txt"
    f.write_text("# sample\n" + "\n".join(format(v, ".17g") for v in data) + "\n\n")
    out_path = tmp_path / "est.csv"
    code, _, _ = run(capsys, "estimate", str(f), "--family", "tsinc", "--order", "4", "--correct", "--out", str(out_path))
    assert code == 0
    rows = _rows(out_path.read_text())
    assert rows[0] == ["x", "raw", "corrected"]
    vals = np.array(rows[1:], dtype=float)
    assert np.all(vals[:, 2] >= 0)
    assert np.trapezoid(vals[:, 2], vals[:, 0]) == pytest.approx(1.0, abs=1e-8)


def test_estimate_deterministic(tmp_path, capsys):
    f = tmp_path / "x.txt"
    f.write_text("0.1\n-0.2\n0.7\n")
    _, a, _ = run(capsys, "estimate", str(f), "--family", "sinc", "--correct")
    _, b, _ = run(capsys, "estimate", str(f), "--family", "sinc", "--correct")
    assert a == b


def test_estimate_malformed(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("abc\n")
    code, _, err = run(capsys, "estimate", str(f), "--family", "gaussian")
    assert code == 2 and "line 1" in err


def test_estimate_malformed_later_line(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("# header\n0.5\nnan\n")
    code, _, err = run(capsys, "estimate", str(f), "--family", "gaussian")
    assert code == 2 and "line 3" in err


@pytest.mark.parametrize("content", ["", "# only comments\n\n"])
def test_estimate_empty(tmp_path, capsys, content):
    f = tmp_path / "e.txt"
    f.write_text(content)
    code, _, _ = run(capsys, "estimate", str(f), "--family", "gaussian")
    assert code == 2


def test_estimate_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "estimate", str(tmp_path / "nope.txt"), "--family", "gaussian")
    assert code == 2


@pytest.mark.parametrize("bw", ["-1", "zero", "0"])
def test_estimate_bad_bandwidth(tmp_path, capsys, bw):
    f = tmp_path / "x.txt"
    f.write_text("0\n1\n")
    code, _, _ = run(capsys, "estimate", str(f), "--family", "gaussian", f"--bandwidth={bw}")
    assert code == 2


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["kernel-info", "--family", "tsinc", "--bogus"])
    assert info.value.code == 2


def test_bench_deterministic_csv(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["bench", "--distribution", "fvp", "--n", "50", "--reps", "20", "--kernels", "gaussian,g1", "--seed", "7"]
    code, out, _ = run(capsys, *argv, "--out", str(a))
    assert code == 0
    run(capsys, *argv, "--out", str(b), "--workers", "3")
    assert a.read_bytes() == b.read_bytes()
    assert "gaussian" in out and "g1(p=2)" in out
    rows = _rows(a.read_text())
    assert rows[0] == ["distribution", "kernel", "n", "mise", "se", "reps", "seed"]
    assert len(rows) == 3
    assert b"\r" not in a.read_bytes()


@pytest.mark.xfail(strict=True, reason="gaussian beats the order-2 g1 kernel on FVP at this sample size")
def test_bench_fvp_g1_smaller(tmp_path, capsys):
    out = tmp_path / "a.csv"
    run(capsys, "bench", "--distribution", "fvp", "--n", "50", "--reps", "20", "--kernels", "gaussian,g1",
        "--seed", "7", "--out", str(out))
    rows = {r[1]: float(r[3]) for r in _rows(out.read_text())[1:]}
    assert rows["g1(p=2)"] < rows["gaussian"]


def test_bench_tsinc_decreasing(tmp_path, capsys):
    out = tmp_path / "a.csv"
    code, _, _ = run(capsys, "bench", "--distribution", "normal", "--kernels", "tsinc", "--order", "2",
                     "--n", "50,250,500", "--reps", "30", "--seed", "1", "--out", str(out))
    assert code == 0
    m = [float(r[3]) for r in _rows(out.read_text())[1:]]
    assert m[1] < 1.5 * m[0] and m[2] < 1.5 * m[1]
    assert m[2] < m[0]


def test_bench_dist_params(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--distribution", "gamma", "--dist-param", "shape=3", "--dist-param", "rate=1",
                       "--n", "20", "--reps", "3", "--kernels", "gaussian")
    assert code == 0 and "gamma" in out


@pytest.mark.parametrize(
    "extra",
    [["--n", "0"], ["--n", "a,b"], ["--kernels", "epanechnikov"], ["--reps", "1"], ["--dist-param", "bogus=1"],
     ["--dist-param", "var"]],
)
def test_bench_input_errors(capsys, extra):
    code, _, _ = run(capsys, "bench", "--distribution", "normal", "--reps", "3", "--n", "10", *extra)
    assert code == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "hok.toml"
    cfg.write_text("# defaults\ngrid_lo = -2\ngrid_hi = 2\ngrid_m = 5\n")
    code, out, _ = run(capsys, "--config", str(cfg), "kernel-eval", "--family", "gaussian")
    assert code == 0
    assert [r[0] for r in _rows(out)[1:]] == ["-2", "-1", "0", "1", "2"]


@pytest.mark.parametrize("text", ["color = red\n", "reps 5\n", "reps = many\n"])
def test_config_file_errors(tmp_path, capsys, text):
    cfg = tmp_path / "hok.toml"
    cfg.write_text(text)
    code, _, _ = run(capsys, "--config", str(cfg), "kernel-eval", "--family", "gaussian")
    assert code == 2


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    assert "FAIL" not in out
    assert "q=10" in out


def test_verify_detects_perturbation(capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--perturb", "1e-3")
    assert code == 1
    assert "[FAIL] tsinc unit mass" in out
