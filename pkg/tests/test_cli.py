import csv
import json
import math

import pytest

from coherent_receiver.cli import CURVE_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    return list(csv.DictReader(text.splitlines()))


class TestBounds:
    def test_reference_row(self, capsys):
        code, out, _ = run(capsys, "bounds", "--m", "0.25", "--p1", "0.5")
        assert code == 0
        (row,) = parse_csv(out)
        assert float(row["helstrom"]) == pytest.approx(0.10247, abs=1e-5)
        assert float(row["kennedy"]) == pytest.approx(0.18394, abs=1e-5)
        assert float(row["homodyne"]) == pytest.approx(0.159, abs=1e-3)

    def test_zero_energy(self, capsys):
        _, out, _ = run(capsys, "bounds", "--m", "0", "--p1", "0.5")
        (row,) = parse_csv(out)
        assert [float(row[k]) for k in ("helstrom", "kennedy", "homodyne")] == [0.5] * 3

    def test_invalid_prior(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bounds", "--m", "0.25", "--p1", "1.5"])
        assert exc.value.code == 2
        assert "p1" in capsys.readouterr().err

    def test_malformed_range(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bounds", "--m", "0:1"])
        assert exc.value.code == 2

    def test_grid_and_json(self, capsys):
        _, out, _ = run(capsys, "bounds", "--m", "0.1:0.5:5", "--json")
        rows = [json.loads(line) for line in out.splitlines()]
        assert [r["m"] for r in rows] == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])

    def test_twelve_significant_digits(self, capsys):
        _, out, _ = run(capsys, "bounds", "--m", "0.25")
        (row,) = parse_csv(out)
        assert row["helstrom"] == "1.02469951190e-01"


class TestSweepBeta:
    def test_pnr_inset(self, capsys, tmp_path):
        fig = tmp_path / "inset.png"
        code, out, _ = run(capsys, "sweep-beta", "--m", "0.25", "--strategy", "pnr",
                           "--beta-range", "0:3", "--points", "600", "--plot", str(fig))
        assert code == 0 and fig.stat().st_size > 0
        rows = parse_csv(out)
        betas = [float(r["beta"]) for r in rows]
        eps = [float(r["error_rate"]) for r in rows]
        assert eps[0] == pytest.approx(0.18394, abs=1e-5)
        first = next(i for i in range(1, len(eps) - 1) if eps[i] < eps[i - 1] and eps[i] <= eps[i + 1])
        assert betas[first] == pytest.approx(0.27, abs=0.01)
        assert eps[-1] == pytest.approx(0.159, abs=1e-3)

    def test_onoff_tail(self, capsys):
        _, out, _ = run(capsys, "sweep-beta", "--m", "0.25", "--strategy", "onoff",
                        "--beta-range", "0:8", "--points", "50")
        assert float(parse_csv(out)[-1]["error_rate"]) == pytest.approx(0.5, abs=1e-6)

    def test_points(self, capsys):
        code, _, _ = run(capsys, "sweep-beta", "--m", "0.25", "--points", "1")
        assert code == 2


class TestOptimize:
    def test_single_channel(self, capsys):
        _, out, _ = run(capsys, "optimize", "--m", "0.25", "-N", "1")
        (row,) = parse_csv(out)
        assert float(row["error_rate"]) == pytest.approx(0.134805701572, abs=1e-9)
        assert float(row["beta_opt"]) == pytest.approx(0.2717023, abs=1e-6)

    def test_two_channels(self, capsys):
        _, out, _ = run(capsys, "optimize", "--m", "0.25", "-N", "2", "--json")
        row = json.loads(out)
        assert 0.10247 < row["error_rate"] < 0.1348
        assert len(row["beta_schedule"]) == 2
        assert math.fsum(row["energy_fractions"]) == pytest.approx(1.0)

    def test_zero_channels(self):
        with pytest.raises(SystemExit) as exc:
            main(["optimize", "--m", "0.25", "-N", "0"])
        assert exc.value.code == 2

    def test_budget_points_to_mc(self, capsys):
        code, out, err = run(capsys, "optimize", "--m", "0.25", "-N", "30")
        assert code == 3 and "--mc" in err and out == ""

    def test_mc_fallback(self, capsys):
        code, out, _ = run(capsys, "optimize", "--m", "0.25", "-N", "30", "--mc",
                           "--trials", "20000", "--seed", "3")
        (row,) = parse_csv(out)
        assert code == 0 and row["method"] == "montecarlo" and row["seed"] == "3"


class TestSimulate:
    def test_kennedy(self, capsys):
        code, out, _ = run(capsys, "simulate", "--m", "0.25", "--beta", "0",
                           "--trials", "1000000", "--seed", "7")
        rep = json.loads(out)
        assert code == 0 and rep["seed"] == 7 and rep["method"] == "montecarlo"
        assert abs(rep["error_rate"] - 0.18393972058572116) < 3 * rep["std_error"]
        _, again, _ = run(capsys, "simulate", "--m", "0.25", "--beta", "0",
                          "--trials", "1000000", "--seed", "7")
        assert again == out

    def test_single_trial(self, capsys):
        _, out, _ = run(capsys, "simulate", "--m", "0.25", "--trials", "1", "--seed", "2")
        rep = json.loads(out)
        assert rep["error_rate"] in (0.0, 1.0) and rep["std_error"] == 0.0

    def test_plan_file(self, capsys, tmp_path):
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"energy_fractions": [0.3, 0.7],
                                    "beta_schedule": [0.45, 0.15],
                                    "detector": {"kind": "onoff"}}))
        code, out, _ = run(capsys, "simulate", "--plan", str(plan), "--m", "0.25",
                           "--trials", "100000", "--exact")
        rep = json.loads(out)
        assert code == 0
        assert abs(rep["error_rate"] - rep["exact_error"]) < 4 * rep["std_error"]

    def test_beta_count_mismatch(self, capsys):
        code, _, err = run(capsys, "simulate", "--m", "0.25", "-N", "3", "--beta", "0.1,0.2")
        assert code == 2 and "3 channels" in err

    def test_bad_plan_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(capsys, "simulate", "--plan", str(bad), "--m", "0.25")[0] == 2
        assert run(capsys, "simulate", "--plan", str(tmp_path / "missing.json"), "--m", "0.25")[0] == 4


@pytest.fixture(scope="module")
def curves(tmp_path_factory):
    out = tmp_path_factory.mktemp("curves")
    assert main(["curves", "--m", "0.05:1.5:30", "--n-list", "1,2,3",
                 "--out", str(out), "--quiet"]) == 0
    return out


class TestCurves:
    def test_file_set(self, curves):
        csvs = sorted(p.name for p in curves.glob("*.csv"))
        assert len(csvs) == 6
        assert (curves / "manifest.json").exists()
        assert (curves / "error_curves.png").stat().st_size > 0
        manifest = json.loads((curves / "manifest.json").read_text())
        assert {"command", "flags", "grid", "version", "seed"} <= set(manifest)

    def test_header_and_round_trip(self, curves):
        for path in curves.glob("*.csv"):
            text = path.read_text()
            assert text.splitlines()[0] == ",".join(CURVE_COLUMNS)
            for row in parse_csv(text):
                value = float(row["error_rate"])
                assert f"{value:.11e}" == row["error_rate"]
                assert 0.0 <= value <= 0.5

    def test_helstrom_floor(self, curves):
        floor = {r["m"]: float(r["error_rate"]) for r in parse_csv((curves / "helstrom.csv").read_text())}
        for path in curves.glob("*.csv"):
            rows = parse_csv(path.read_text())
            ms = [float(r["m"]) for r in rows]
            assert ms == sorted(ms)
            for r in rows:
                assert float(r["error_rate"]) >= floor[r["m"]]

    def test_receivers_ordered(self, curves):
        series = {n: [float(r["error_rate"]) for r in parse_csv((curves / f"optimal_N{n}.csv").read_text())]
                  for n in (1, 2, 3)}
        for a, b, c in zip(series[1], series[2], series[3]):
            assert a >= b - 1e-12 and b >= c - 1e-12

    def test_kennedy_homodyne_cross_once(self, curves):
        ken = [float(r["error_rate"]) for r in parse_csv((curves / "kennedy.csv").read_text())]
        hom = [float(r["error_rate"]) for r in parse_csv((curves / "homodyne.csv").read_text())]
        ms = [float(r["m"]) for r in parse_csv((curves / "kennedy.csv").read_text())]
        gap = [k - h for k, h in zip(ken, hom)]
        flips = [i for i in range(1, len(gap)) if (gap[i] > 0) != (gap[i - 1] > 0)]
        assert len(flips) == 1
        i = flips[0]
        # linear interpolation of the sign change between grid points
        cross = ms[i - 1] + (ms[i] - ms[i - 1]) * gap[i - 1] / (gap[i - 1] - gap[i])
        assert 0.2 <= cross <= 0.6

    def test_rerun_is_byte_identical(self, curves):
        first = {p.name: p.read_bytes() for p in curves.iterdir()}
        assert main(["curves", "--m", "0.05:1.5:30", "--n-list", "1,2,3",
                     "--out", str(curves), "--quiet"]) == 0
        assert {p.name: p.read_bytes() for p in curves.iterdir()} == first

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["curves", "--m", "0.25", "--n-list", "1", "--out",
                     str(blocker / "sub"), "--no-plot", "--quiet"]) == 4
