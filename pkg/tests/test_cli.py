import numpy as np
import pytest

from patchsep.audio_io import Waveform, read_wav, write_wav
from patchsep.autoenc import init_model, load_model, save_model
from patchsep.cli import main
from patchsep.evalkit import tone_complex
from patchsep.export import (
    export_pgm,
    read_matrix_csv,
    read_pgm,
    to_pixels,
    write_patches_csv,
)
from patchsep.patching import PatchGridSpec, extract_patches

SMALL = ["--patch-h", "8", "--patch-l", "3", "--hidden", "8,4,2,4,8", "--epochs", "2",
         "--batch", "256"]


@pytest.fixture
def wavs(tmp_path):
    low = tone_complex([300, 450], 0.5, 8000, amplitude=0.5)
    high = tone_complex([1900], 0.5, 8000, amplitude=0.5)
    a, b = tmp_path / "a.wav", tmp_path / "b.wav"
    write_wav(a, low)
    write_wav(b, high)
    return a, b


@pytest.fixture
def mixture(tmp_path, wavs):
    out = tmp_path / "mix.wav"
    assert main(["mix", str(wavs[0]), str(wavs[1]), "--gains", "0,0", "--out", str(out)]) == 0
    return out


def test_mix_writes_mixture_and_references(tmp_path, mixture):
    assert sorted(p.name for p in tmp_path.glob("mix*.wav")) == [
        "mix.ref0.wav", "mix.ref1.wav", "mix.wav"]
    total = read_wav(tmp_path / "mix.ref0.wav").samples + read_wav(tmp_path / "mix.ref1.wav").samples
    np.testing.assert_allclose(read_wav(mixture).samples, total, atol=2.5 / 32768)


def test_mix_needs_two_inputs(tmp_path, wavs, capsys):
    assert main(["mix", str(wavs[0]), "--out", str(tmp_path / "m.wav")]) == 2
    assert "at least two" in capsys.readouterr().err
    assert not (tmp_path / "m.wav").exists()


def test_mix_rate_mismatch(tmp_path, wavs, capsys):
    other = tmp_path / "c.wav"
    write_wav(other, Waveform(np.zeros(100), 16000))
    assert main(["mix", str(wavs[0]), str(other), "--out", str(tmp_path / "m.wav")]) == 1
    assert "RateMismatch" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path, mixture):
    with pytest.raises(SystemExit) as exc:
        main(["separate", str(mixture), "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    assert main(["train", str(mixture), "--model-out", str(tmp_path / "m.txt"),
                 "--stride-f", "0"]) == 2


def test_train_prints_one_line_per_epoch(tmp_path, mixture, capsys):
    out = tmp_path / "model.txt"
    assert main(["train", str(mixture), "--model-out", str(out)] + SMALL[:-4]
                + ["--epochs", "1", "--batch", "256"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("epoch 1 loss ")
    assert load_model(out).layer_sizes == (24, 8, 4, 2, 4, 8, 24)


def test_train_corrupt_wav(tmp_path, capsys):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFF\x10\x00\x00\x00WAVEjunk")
    assert main(["train", str(bad), "--model-out", str(tmp_path / "m.txt")]) == 1
    assert "MalformedContainer" in capsys.readouterr().err


def test_separate_k4_writes_wavs_and_manifest(tmp_path, mixture):
    stem = tmp_path / "run"
    assert main(["separate", str(mixture), "--train-inline", "--out", str(stem), "--k", "4"]
                + SMALL) == 0
    wavs = sorted(p.name for p in tmp_path.glob("run.cluster*.wav"))
    assert wavs == [f"run.cluster{q}.wav" for q in range(4)]
    manifest = dict(line.split("=", 1) for line in
                    (tmp_path / "run.manifest.txt").read_text().splitlines())
    assert manifest["config.k"] == "4" and manifest["config.seed"] == "1234"
    assert manifest["config.hidden"] == "8,4,2,4,8"
    assert "output.run.cluster3.wav.sha256" in manifest
    assert (tmp_path / "run.model.txt").exists()


def test_separate_with_saved_model_k1(tmp_path, mixture):
    model = tmp_path / "m.txt"
    save_model(init_model((24, 8, 4, 2, 4, 8, 24), 3), model)
    stem = tmp_path / "one"
    assert main(["separate", str(mixture), "--model", str(model), "--out", str(stem),
                 "--k", "1", "--patch-h", "8", "--patch-l", "3"]) == 0
    out = read_wav(tmp_path / "one.cluster0.wav").samples
    ref = read_wav(mixture).samples
    inner = slice(320, -320)
    assert np.max(np.abs(out[inner] - ref[inner])) <= 1.5 / 32768
    assert not (tmp_path / "one.model.txt").exists()


def test_separate_binary_exports(tmp_path, mixture):
    exp = tmp_path / "exp"
    assert main(["separate", str(mixture), "--train-inline", "--out", str(tmp_path / "b"),
                 "--k", "2", "--mask-mode", "binary", "--export-dir", str(exp)] + SMALL) == 0
    for q in range(2):
        mask = read_matrix_csv(exp / f"mask{q}.csv")
        assert set(np.unique(mask)) <= {0.0, 1.0}
        assert set(np.unique(read_pgm(exp / f"mask{q}.pgm"))) <= {0, 255}
    spec = read_matrix_csv(exp / "spectrogram.csv")
    assert spec.shape == (257, 47)
    header = (exp / "clustering.csv").read_text().splitlines()[0]
    assert header == "index,i,j,label,c0,c1"


def test_seed_env_override(tmp_path, mixture, monkeypatch):
    monkeypatch.setenv("PATCHSEP_SEED", "77")
    assert main(["separate", str(mixture), "--train-inline", "--out", str(tmp_path / "s"),
                 "--k", "2"] + SMALL) == 0
    assert "config.seed=77" in (tmp_path / "s.manifest.txt").read_text()
    assert main(["separate", str(mixture), "--train-inline", "--out", str(tmp_path / "t"),
                 "--k", "2", "--seed", "5"] + SMALL) == 0
    assert "config.seed=5" in (tmp_path / "t.manifest.txt").read_text()
    monkeypatch.setenv("PATCHSEP_SEED", "abc")
    assert main(["separate", str(mixture), "--train-inline", "--out", str(tmp_path / "u"),
                 "--k", "2"] + SMALL) == 2


def test_inspect_default_model(tmp_path):
    model = tmp_path / "m.txt"
    save_model(init_model((150, 50, 18, 6, 18, 50, 150), 0), model)
    out = tmp_path / "win"
    assert main(["inspect", str(model), "--out-dir", str(out)]) == 0
    pgms = sorted(out.glob("weight_window_*.pgm"))
    assert [p.name for p in pgms] == [f"weight_window_{u:02d}.pgm" for u in range(50)]
    table = np.loadtxt(out / "weight_windows.csv", delimiter=",", skiprows=1)
    assert table.shape == (50, 151)
    for u, p in enumerate(pgms):
        pix = read_pgm(p)
        assert pix.shape == (30, 5)
        window = table[u, 1:].reshape(30, 5)
        np.testing.assert_array_equal(pix, to_pixels(window, "minmax"))


def test_inspect_small_hidden(tmp_path):
    model = tmp_path / "m.txt"
    save_model(init_model((6, 4, 3, 2, 3, 4, 6), 0), model)
    out = tmp_path / "win"
    assert main(["inspect", str(model), "--patch-h", "3", "--patch-l", "2",
                 "--out-dir", str(out)]) == 0
    assert len(list(out.glob("*.pgm"))) == 4


def test_inspect_shape_mismatch(tmp_path):
    model = tmp_path / "m.txt"
    save_model(init_model((6, 4, 2, 4, 6), 0), model)
    assert main(["inspect", str(model), "--out-dir", str(tmp_path / "w")]) == 1


def test_eval_identical(tmp_path, wavs, capsys):
    a, b = map(str, wavs)
    assert main(["eval", "--ref", a, b, "--est", b, a]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "reference_index,group,snr_db"
    assert lines[1] == "0,1,300.000000" and lines[2] == "1,0,300.000000"


def test_eval_grouping(tmp_path, wavs, capsys):
    a, b = read_wav(wavs[0]), read_wav(wavs[1])
    ests = []
    for n, (w, frac) in enumerate([(a, 0.25), (b, 0.5), (a, 0.75), (b, 0.5)]):
        p = tmp_path / f"e{n}.wav"
        write_wav(p, Waveform(frac * w.samples, 8000))
        ests.append(str(p))
    assert main(["eval", "--ref", *map(str, wavs), "--est", *ests]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("0,0+2,") and lines[2].startswith("1,1+3,")


def test_eval_length_mismatch(tmp_path, wavs, capsys):
    short = tmp_path / "short.wav"
    write_wav(short, Waveform(np.zeros(10), 8000))
    assert main(["eval", "--ref", str(wavs[0]), "--est", str(short)]) == 1
    assert "LengthMismatch" in capsys.readouterr().err


def test_pgm_examples(tmp_path):
    export_pgm(np.array([[0.0, 1.0], [1.0, 0.0]]), tmp_path / "a.pgm")
    assert read_pgm(tmp_path / "a.pgm").ravel().tolist() == [0, 255, 255, 0]
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n2 2\n255\n")
    export_pgm(np.full((3, 2), 0.7), tmp_path / "b.pgm")
    assert (read_pgm(tmp_path / "b.pgm") == 128).all()
    mask = np.array([[0.0, 0.25, 0.5, 1.0]])
    export_pgm(mask, tmp_path / "c.pgm", "absolute")
    np.testing.assert_array_equal(read_pgm(tmp_path / "c.pgm"), np.round(255 * mask))


def test_patches_csv(tmp_path, rng):
    ps = extract_patches(rng.random((4, 4)), PatchGridSpec(2, 2, 4, 4))
    write_patches_csv(ps, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "i,j,v0,v1,v2,v3" and len(lines) == 10
    vals = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(vals[:, 2:], ps.vectors)
