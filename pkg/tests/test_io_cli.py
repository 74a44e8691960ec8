import hashlib
import json
import wave

import numpy as np
import pytest

from alpadeconv import io
from alpadeconv.cli import main
from alpadeconv.errors import IOFailure, UnsupportedFormat
from alpadeconv.synth import AwgnSnr, make_instance, sec4_spec


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


class TestSignalFiles:
    def test_bin_round_trip(self, tmp_path, rng):
        x = rng.standard_normal(33)
        path = io.write_signal(tmp_path / "x", x, role="test", sample_rate=8000)
        assert path.suffix == ".bin" and path.stat().st_size == 33 * 8
        np.testing.assert_array_equal(io.read_signal(path), x)
        meta = json.loads((tmp_path / "x.json").read_text())
        assert meta == {"dtype": "float64-le", "length": 33, "role": "test", "sample_rate": 8000}

    def test_bin_is_little_endian(self, tmp_path):
        io.write_signal(tmp_path / "x", [1.0])
        assert (tmp_path / "x.bin").read_bytes() == np.array([1.0], dtype="<f8").tobytes()

    def test_sidecar_mismatch(self, tmp_path):
        io.write_signal(tmp_path / "x", np.ones(4))
        (tmp_path / "x.bin").write_bytes(np.ones(3).tobytes())
        with pytest.raises(IOFailure):
            io.read_signal(tmp_path / "x.bin")

    def test_truncated(self, tmp_path):
        (tmp_path / "x.bin").write_bytes(b"1234567")
        with pytest.raises(IOFailure):
            io.read_signal(tmp_path / "x.bin")

    def test_wav_round_trip(self, tmp_path, rng):
        x = np.round(rng.uniform(-1, 1, 100) * 32767) / 32768
        io.write_wav(tmp_path / "a.wav", x, 16000)
        back, rate = io.read_wav(tmp_path / "a.wav")
        assert rate == 16000
        np.testing.assert_array_equal(back, x)
        assert back.min() >= -1 and back.max() < 1

    def test_stereo_rejected(self, tmp_path):
        with wave.open(str(tmp_path / "s.wav"), "wb") as fh:
            fh.setnchannels(2)
            fh.setsampwidth(2)
            fh.setframerate(8000)
            fh.writeframes(b"\x00" * 16)
        with pytest.raises(UnsupportedFormat):
            io.read_signal(tmp_path / "s.wav")

    def test_unknown_suffix(self, tmp_path):
        (tmp_path / "x.mp3").write_bytes(b"")
        with pytest.raises(UnsupportedFormat):
            io.read_signal(tmp_path / "x.mp3")

    def test_csv_signal(self, tmp_path):
        (tmp_path / "k.csv").write_text("1.0\n0.5\n0.25\n")
        np.testing.assert_array_equal(io.read_signal(tmp_path / "k.csv"), [1.0, 0.5, 0.25])


class TestTablesAndInstances:
    def test_csv_round_trip(self, tmp_path):
        rows = [[0, 1.5, float("nan"), "alpa"], [1, 1e-300, 2.0, "lasso"]]
        io.write_csv(tmp_path / "t.csv", ["k", "a", "b", "m"], rows)
        header, back = io.read_csv(tmp_path / "t.csv")
        assert header == ["k", "a", "b", "m"]
        assert back[1] == [1.0, 1e-300, 2.0, "lasso"] and np.isnan(back[0][2])

    def test_instance_round_trip(self, tmp_path):
        spec = sec4_spec(AwgnSnr(5.0, 2))
        inst = make_instance(spec)
        io.write_instance(tmp_path, spec, inst)
        spec2, inst2 = io.read_instance(tmp_path)
        assert spec2 == spec
        np.testing.assert_array_equal(inst2.y, inst.y)
        np.testing.assert_array_equal(np.convolve(inst2.h_true, inst2.e_true), inst2.y_clean)
        meta = json.loads((tmp_path / "instance.json").read_text())
        assert meta["samples"]["y"] == inst.y.tolist()

    def test_tampered_instance(self, tmp_path):
        spec = sec4_spec()
        io.write_instance(tmp_path, spec, make_instance(spec))
        y = io.read_signal(tmp_path / "y.bin")
        io.write_signal(tmp_path / "y", y + 1e-12)
        with pytest.raises(IOFailure):
            io.read_instance(tmp_path)

    def test_default_output_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(io.OUTPUT_DIR_ENV, str(tmp_path))
        assert io.default_output_dir() == tmp_path


@pytest.fixture
def sec4_dir(tmp_path):
    assert main(["synth", "--preset", "sec4", "--out", str(tmp_path / "inst")]) == 0
    return tmp_path / "inst"


class TestCli:
    def test_synth_preset(self, sec4_dir):
        meta = json.loads((sec4_dir / "instance.json").read_text())
        assert meta["observation_len"] == 299
        man = io.read_manifest(sec4_dir)
        assert man["command"] == "synth" and "--out" not in man["argv"]
        assert "instance.json" in man["artifacts"]

    def test_synth_flags(self, tmp_path):
        out = tmp_path / "s"
        assert main(["synth", "--impulses", "10,62", "--filter-len", "8", "--noise", "none",
                     "--out", str(out)]) == 0
        _, inst = io.read_instance(out)
        assert inst.y.size == 63 + 8 - 1

    def test_synth_bad_spec(self, tmp_path, capsys):
        assert main(["synth", "--impulses", "5,3", "--out", str(tmp_path / "s")]) == 2
        assert "increasing" in capsys.readouterr().err

    def test_bad_flag(self, capsys):
        assert main(["deconvolve"]) == 2

    def test_deconvolve_trace(self, sec4_dir, tmp_path):
        out = tmp_path / "d"
        assert main(["deconvolve", str(sec4_dir), "--max-outer", "15", "--out", str(out)]) == 0
        header, rows = io.read_csv(out / "trace.csv")
        assert header == ["k", "F", "F_eps", "rel_change"]
        f, f_eps = np.array([r[1] for r in rows]), np.array([r[2] for r in rows])
        assert np.all(np.diff(f_eps) <= 1e-10 * (1 + np.abs(f_eps[:-1])))
        assert np.all(f < f_eps)
        assert np.linalg.norm(io.read_signal(out / "h_opt.bin")) == pytest.approx(1.0, abs=1e-12)

    def test_max_outer_one(self, sec4_dir, tmp_path, capsys):
        out = tmp_path / "d"
        assert main(["deconvolve", str(sec4_dir), "--max-outer", "1", "--out", str(out)]) == 0
        assert "warning" in capsys.readouterr().err
        _, rows = io.read_csv(out / "trace.csv")
        assert [r[0] for r in rows] == [0.0, 1.0]

    def test_wav_input(self, tmp_path):
        spec = sec4_spec()
        y = make_instance(spec).y
        io.write_wav(tmp_path / "y.wav", 0.5 * y / np.max(np.abs(y)))
        out = tmp_path / "d"
        assert main(["deconvolve", str(tmp_path / "y.wav"), "--filter-len", "100", "--max-outer", "3",
                     "--out", str(out)]) == 0
        assert io.read_signal(out / "e_opt.bin").size == 200

    def test_missing_input(self, tmp_path):
        assert main(["deconvolve", str(tmp_path / "nope.bin"), "--filter-len", "3"]) == 4

    def test_bare_signal_needs_filter_len(self, tmp_path):
        io.write_signal(tmp_path / "y", np.ones(10))
        assert main(["deconvolve", str(tmp_path / "y.bin")]) == 2

    def test_numerical_failure_exit_code(self, sec4_dir, tmp_path, monkeypatch):
        from alpadeconv import alpa
        from alpadeconv.errors import NumericalFailure

        def boom(*a, **k):
            raise NumericalFailure("forced")

        monkeypatch.setattr(alpa, "e_step", boom)
        assert main(["deconvolve", str(sec4_dir), "--out", str(tmp_path / "d")]) == 3

    def test_bounds(self, tmp_path):
        inst = tmp_path / "i"
        main(["synth", "--impulses", "3,9,20", "--length", "32", "--filter-len", "8", "--out", str(inst)])
        out = tmp_path / "b"
        assert main(["bounds", str(inst), "--trials", "300", "--noise", "uniform", "--a", "0.01",
                     "--xi", "0:0.2:5", "--out", str(out)]) == 0
        header, rows = io.read_csv(out / "bounds.csv")
        assert header == ["xi", "empirical", "markov", "hoeffding"] and len(rows) == 5

    def test_bounds_precondition(self, tmp_path):
        inst = tmp_path / "i"
        main(["synth", "--impulses", "3,9", "--length", "16", "--filter-len", "4", "--out", str(inst)])
        assert main(["bounds", str(inst), "--dh-fraction", "2", "--trials", "5",
                     "--out", str(tmp_path / "b")]) == 2

    def test_bench_smoke(self, tmp_path):
        out = tmp_path / "bench"
        assert main(["bench", "--trials", "2", "--sigmas", "0.01", "--out", str(out)]) == 0
        header, rows = io.read_csv(out / "bench_summary.csv")
        assert {r[1] for r in rows} == {"alpa", "reg_ls", "lasso"}
        for col in ("e_mse_db", "h_mse_db", "y_mse_db", "sparsity"):
            assert col in header
        assert io.read_csv(out / "bench_timing.csv")[0] == ["sigma", "method", "seconds"]

    def test_bench_defaults(self):
        from alpadeconv.experiments import BenchConfig

        assert BenchConfig().sigmas == (0.01, 0.02, 0.03)

    def test_riesz(self, tmp_path, capsys):
        io.write_signal(tmp_path / "k", [1.0, 0.0])
        assert main(["riesz", str(tmp_path / "k.bin"), "--input-len", "5", "--eta", "1"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["svd_lower"] == pytest.approx(1.0) and rep["eta_sufficient"]

    def test_riesz_bad_eta(self, tmp_path):
        io.write_signal(tmp_path / "k", [1.0, 0.5])
        assert main(["riesz", str(tmp_path / "k.bin"), "--input-len", "5", "--eta", "2"]) == 2

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ALPA_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["synth", "--preset", "sec4"]) == 0
        assert (tmp_path / "env" / "synth" / "manifest.json").exists()

    def test_replay_is_bit_identical(self, sec4_dir, tmp_path):
        first = tmp_path / "d1"
        assert main(["deconvolve", str(sec4_dir), "--max-outer", "5", "--out", str(first)]) == 0
        assert main(["replay", str(first), "--out", str(tmp_path / "d2")]) == 0
        assert digest(first) == digest(tmp_path / "d2")
