import hashlib
import json
import math

from msqaoa import closed_form
from msqaoa.cli import main


def read_grid(path):
    lines = path.read_text().splitlines()
    gammas = [float(v) for v in lines[0].split(",")[1:]]
    betas, rows = [], []
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        betas.append(vals[0])
        rows.append(vals[1:])
    return betas, gammas, rows


class TestOptimizeCommand:
    def test_sk(self, tmp_path, capsys):
        assert main(["optimize", "--sk", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "d,beta,gamma,value"
        d, beta, gamma, value = out[1].split(",")
        assert abs(float(beta) - math.pi / 8) < 1e-4
        assert abs(float(gamma) + 0.5) < 1e-4
        assert abs(float(value) + 0.303265) < 1e-5
        assert (tmp_path / "optimum.csv").exists()
        assert (tmp_path / "manifest.json").exists()

    def test_sigma_list_d3(self, tmp_path, capsys):
        assert (
            main(
                [
                    "optimize",
                    "--sigmas",
                    "0,0,1.732050808",
                    "--ground-state=-0.8132",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 0
        )
        out = capsys.readouterr().out.splitlines()
        _, beta, gamma, value = out[1].split(",")
        assert abs(float(value) + 0.270638) < 1e-5
        factor_line = [ln for ln in out if ln.startswith("approximation_factor")][0]
        assert abs(float(factor_line.split(",")[1]) - 0.332806) < 1e-3

    def test_pure_d_table(self, tmp_path, capsys):
        assert main(["optimize", "--pure-d", "2..4", "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "optimum.csv").read_text().splitlines()
        assert len(rows) == 4  # header + three degrees
        assert rows[1].startswith("2,")

    def test_conflicting_spec_flags(self, tmp_path):
        assert main(["optimize", "--sk", "--sigmas", "0,1", "--out", str(tmp_path)]) == 2


class TestLandscapeCommand:
    def test_single_zero_cell(self, tmp_path):
        code = main(
            [
                "landscape",
                "--sk",
                "--beta",
                "0.3:0.3:1",
                "--gamma",
                "0:0:1",
                "--mode",
                "infinite",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        _, _, rows = read_grid(tmp_path / "landscape_sk_infinite.csv")
        assert rows == [[0.0]]

    def test_modes_and_shapes(self, tmp_path):
        code = main(
            [
                "landscape",
                "--sigmas",
                "0.333,0.5,1.0",
                "--beta=-0.6:0.6:4",
                "--gamma=-1:1:3",
                "--mode",
                "infinite",
                "--mode",
                "instance:6:1",
                "--mode",
                "finite:8",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        names = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert names == [
            "landscape_mix_finite_n8.csv",
            "landscape_mix_infinite.csv",
            "landscape_mix_instance_n6_seed1.csv",
        ]
        for name in names:
            betas, gammas, rows = read_grid(tmp_path / name)
            assert len(betas) == 4 and len(gammas) == 3
        # instance landscape converges toward the infinite-size surface,
        # so the two grids agree loosely
        _, _, inf_rows = read_grid(tmp_path / "landscape_mix_infinite.csv")
        _, _, fin_rows = read_grid(tmp_path / "landscape_mix_finite_n8.csv")
        for r_inf, r_fin in zip(inf_rows, fin_rows):
            for a, b in zip(r_inf, r_fin):
                assert abs(a - b) < 0.2

    def test_reproducible_bytes(self, tmp_path):
        args = [
            "landscape",
            "--pure-d",
            "2",
            "--beta=-0.5:0.5:3",
            "--gamma=-1:1:3",
            "--mode",
            "instance:6:42",
            "--mode",
            "infinite",
        ]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in (
            "landscape_pure2_infinite.csv",
            "landscape_pure2_instance_n6_seed42.csv",
        ):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_manifest_digests(self, tmp_path):
        assert (
            main(
                [
                    "landscape",
                    "--sk",
                    "--beta",
                    "0:0.5:2",
                    "--gamma",
                    "0:1:2",
                    "--mode",
                    "infinite",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 0
        )
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "landscape"
        assert manifest["rng_algorithm"] == "PCG64"
        assert manifest["outputs"]
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((tmp_path / entry["path"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"]

    def test_bad_mode_exit_code(self, tmp_path):
        code = main(
            ["landscape", "--sk", "--mode", "bogus", "--out", str(tmp_path)]
        )
        assert code == 2
        # partial outputs are removed on failure
        assert list(tmp_path.glob("*.csv")) == []

    def test_partial_outputs_removed_on_late_failure(self, tmp_path):
        # the first mode succeeds and writes a CSV; the second fails; the
        # already-written file must be cleaned up
        code = main(
            [
                "landscape",
                "--sk",
                "--beta",
                "0:0.4:2",
                "--gamma",
                "0:1:2",
                "--mode",
                "infinite",
                "--mode",
                "bogus",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2
        assert list(tmp_path.glob("*.csv")) == []
        assert not (tmp_path / "manifest.json").exists()

    def test_pure_d_range_emits_one_csv_per_degree(self, tmp_path):
        code = main(
            [
                "landscape",
                "--pure-d",
                "2..5",
                "--beta=-0.5:0.5:3",
                "--gamma=-1:1:3",
                "--mode",
                "infinite",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        names = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert names == [f"landscape_pure{d}_infinite.csv" for d in (2, 3, 4, 5)]

    def test_threads_env_override_reproducible(self, tmp_path, monkeypatch):
        args = [
            "landscape",
            "--sk",
            "--beta=-0.4:0.4:3",
            "--gamma=-1:1:3",
            "--mode",
            "finite:8",
        ]
        assert main(args + ["--out", str(tmp_path / "serial")]) == 0
        monkeypatch.setenv("MSQAOA_THREADS", "4")
        assert main(args + ["--out", str(tmp_path / "threaded")]) == 0
        name = "landscape_sk_finite_n8.csv"
        assert (tmp_path / "serial" / name).read_bytes() == (
            tmp_path / "threaded" / name
        ).read_bytes()

    def test_budget_exit_code(self, tmp_path):
        code = main(
            [
                "landscape",
                "--sk",
                "--beta",
                "0.3:0.3:1",
                "--gamma",
                "0.5:0.5:1",
                "--mode",
                "finite:600",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 3


class TestSampleAndFit:
    def test_round_trip_recovery(self, tmp_path, capsys):
        assert (
            main(
                [
                    "sample",
                    "--sigmas",
                    "0.5,1.5",
                    "--n",
                    "12",
                    "--seed",
                    "2024",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 0
        )
        capsys.readouterr()
        instance_file = next(tmp_path.glob("instance_*.txt"))
        assert main(["fit-spec", str(instance_file), "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        fitted = [float(v) for v in out.splitlines()[0].split(":")[1].split(",")]
        for got, want, count in zip(fitted, (0.5, 1.5), (12, 66)):
            assert abs(got - want) < 3 * want / math.sqrt(2 * count)
        assert "scaling" in out

    def test_insufficient_samples_warning(self, tmp_path, capsys):
        main(["sample", "--sigmas", "1", "--n", "1", "--seed", "3", "--out", str(tmp_path)])
        capsys.readouterr()
        instance_file = next(tmp_path.glob("instance_*.txt"))
        assert main(["fit-spec", str(instance_file), "--out", str(tmp_path)]) == 0
        assert "InsufficientSamples" in capsys.readouterr().out

    def test_nonzero_mean_warning(self, tmp_path, capsys):
        lines = ["n=6 d=1 sigmas=1.0 seed=0"]
        for i in range(1, 7):
            lines.append(f"1 {i} {4.0 + 0.01 * i!r}")
        path = tmp_path / "shifted.txt"
        path.write_text("\n".join(lines) + "\n")
        assert main(["fit-spec", str(path), "--out", str(tmp_path)]) == 0
        assert "NonZeroMean" in capsys.readouterr().out

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("garbage\n")
        assert main(["fit-spec", str(bad), "--out", str(tmp_path)]) == 2


class TestVerifyCommand:
    def test_quick_passes(self, tmp_path, capsys):
        assert main(["verify", "--level", "quick", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "[PASS] sk_optimum" in out
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"] is True
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((tmp_path / entry["path"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"]

    def test_corrupted_constant_fails(self, tmp_path, capsys, monkeypatch):
        # negative control: a corrupted energy routine must trip a named check
        true_fn = closed_form.energy_sigma_form

        def corrupted(spec, angles):
            return true_fn(spec, angles) + 1e-6

        monkeypatch.setattr(closed_form, "energy_sigma_form", corrupted)
        assert main(["verify", "--level", "quick", "--out", str(tmp_path)]) == 4
        out = capsys.readouterr().out
        assert "[FAIL] form_equivalence" in out
