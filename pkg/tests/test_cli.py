import json

import pytest

from mbk import cli

NEAR_TWO = "hartogs~2." + "0" * 50 + "1"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestSp:
    def test_hartogs(self, capsys):
        code, out, _ = run(capsys, "sp", "--domain", "hartogs:1", "--p", "2", "--box", "-3:0,-3:0")
        assert code == 0
        assert json.loads(out)["indices"] == [[0, -1], [0, 0]]

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "sp", "--domain", "hartogs:1", "--p", "2", "--box=-3:0,-3:0", "--format", "csv")
        assert code == 0
        assert out == "alpha1,alpha2\n0,-1\n0,0\n"

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "sp.json"
        code, out, _ = run(capsys, "sp", "--domain", "disc", "--p", "2", "--box", "-1:1", "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["indices"] == [[0], [1]]

    def test_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"domain": "omega_a:1,1,1,2", "p": "3/2", "box": "-2:2,-2:2"}))
        code, out, _ = run(capsys, "sp", "--config", str(cfg), "--p", "2")
        assert code == 0
        assert json.loads(out)["p"] == "2/1"

    def test_repeatable(self, capsys):
        args = ("sp", "--domain", "type2:1,2,1", "--p", "5/2", "--box", "-2:2,-2:2,-2:2")
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b

    @pytest.mark.parametrize("argv", [
        ("sp", "--domain", "omega_a:2,2,1,2", "--p", "2", "--box", "-1:1,-1:1"),
        ("sp", "--domain", "hartogs:1", "--p", "2.5", "--box", "-1:1,-1:1"),
        ("sp", "--domain", "hartogs:1", "--p", "1/2", "--box", "-1:1,-1:1"),
        ("sp", "--domain", "hartogs:1", "--p", "2", "--box", "-1:1"),
        ("sp", "--domain", "bogus:1", "--p", "2", "--box", "-1:1"),
    ])
    def test_bad_input(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2 and err

    def test_undecidable(self, capsys):
        code, _, err = run(capsys, "sp", "--domain", NEAR_TWO, "--p", "1", "--box", "0:1,-9:0")
        assert code == 3
        assert "0, -6" in err or "[0, -6]" in err


class TestThresholds:
    def test_omega(self, capsys):
        code, out, _ = run(capsys, "thresholds", "--domain", "omega_a:1,1,1,2")
        data = json.loads(out)
        assert code == 0
        assert data["kind"] == "finite"
        assert data["values"] == ["6/1", "4/1", "3/1", "2/1", "3/2", "4/3", "6/5"]
        assert all("alpha" in w for w in data["witnesses"])

    def test_dense(self, capsys):
        code, out, _ = run(capsys, "thresholds", "--domain", "hartogs:sqrt(2)")
        assert code == 0 and json.loads(out)["kind"] == "dense"

    def test_bad_candidate(self, capsys):
        code, out, _ = run(capsys, "thresholds", "--domain", "type1:1,1", "--candidates", "4,5/2")
        assert code == 4

    def test_no_verify(self, capsys):
        code, out, _ = run(capsys, "thresholds", "--domain", "type1:1,1", "--no-verify", "--format", "csv")
        assert code == 0 and out == "p\n4/1\n2/1\n4/3\n"


class TestNorm:
    def test_closed_form(self, capsys):
        code, out, _ = run(capsys, "norm", "--domain", "hartogs:1", "--alpha", "0,1", "--p", "2")
        assert code == 0
        assert json.loads(out)["closed_form"]["exact"] == "pi^2 * 1/3"

    def test_oracle(self, capsys):
        code, out, _ = run(capsys, "norm", "--domain", "type1:1,2", "--alpha", "1,-1", "--p", "3/2", "--oracle")
        data = json.loads(out)
        assert code == 0 and data["agree"]

    def test_infinite(self, capsys):
        code, out, _ = run(capsys, "norm", "--domain", "hartogs:1", "--alpha=0,-2", "--p", "2", "--oracle")
        data = json.loads(out)
        assert code == 0 and data["closed_form"] == {"finite": False} and data["oracle"]["diverged"]

    def test_csv_rejected(self, capsys):
        code, _, _ = run(capsys, "norm", "--domain", "disc", "--alpha", "0", "--p", "2", "--format", "csv")
        assert code == 2


class TestKernel:
    def test_polydisc(self, capsys):
        code, out, _ = run(capsys, "kernel", "--domain", "product(disc,disc)", "--p", "2", "--z", "0,0", "--w", "0,0")
        assert code == 0
        re, im = json.loads(out)["value"]
        assert re == pytest.approx(1 / 3.141592653589793 ** 2) and im == 0

    def test_decimal_p(self, capsys):
        code, _, _ = run(capsys, "kernel", "--domain", "disc", "--p", "2.5", "--z", "0.1", "--w", "0.2j")
        assert code == 0

    def test_not_converged(self, capsys):
        code, _, _ = run(capsys, "kernel", "--domain", "disc", "--p", "2", "--z", "0.999", "--w", "0.999", "--N", "50")
        assert code == 5

    def test_outside(self, capsys):
        code, _, _ = run(capsys, "kernel", "--domain", "disc", "--p", "2", "--z", "1.5", "--w", "0")
        assert code == 2


class TestVerifyAndExperiment:
    def test_verify_suite(self, capsys):
        code, out, err = run(capsys, "verify", "--suite", "union-law", "--quick")
        assert code == 0 and json.loads(out)["passed"]
        assert "PASS" in err

    def test_unknown_suite(self, capsys):
        code, _, _ = run(capsys, "verify", "--suite", "nope")
        assert code == 2

    def test_domination(self, capsys):
        code, out, _ = run(capsys, "experiment", "domination", "--domain", "disc", "--p", "3/2:3", "--N", "30")
        assert code == 0
        assert 0 < json.loads(out)["theta"] < 1

    def test_continuity_csv(self, capsys):
        code, out, _ = run(capsys, "experiment", "continuity", "--domain", "disc", "--grid", "2", "--steps", "3", "--N", "80", "--format", "csv")
        lines = out.strip().splitlines()
        assert code == 0 and lines[0] == "q,sup_diff" and len(lines) == 4

    def test_no_command(self, capsys):
        with pytest.raises(SystemExit):
            cli.main([])
