from __future__ import annotations

import json
import subprocess
import sys

import pytest

from fragilemark.cli import EXIT_ERROR, EXIT_FLAGGED, EXIT_OK, main
from fragilemark.imaging import load_image


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["gen-corpus", "--n", "3", "--out", str(out / "corpus"), "--size", "96"]) == EXIT_OK
    return out / "corpus"


def test_gen_corpus_layout(corpus_dir):
    assert (corpus_dir / "manifest.yaml").exists() and (corpus_dir / "marker.png").exists()
    assert (corpus_dir / "covers" / "id000.landmarks.txt").exists()


@pytest.mark.parametrize("engine", ["lsb", "dct"])
def test_certify_reveal_verify(engine, corpus_dir, tmp_path, capsys):
    cover, marker = corpus_dir / "covers" / "id000.png", corpus_dir / "marker.png"
    stego, rev = tmp_path / "stego.png", tmp_path / "rev.png"
    assert main(["certify", "--engine", engine, "--key", "0x2a", "--cover", str(cover),
                 "--marker", str(marker), "--out", str(stego)]) == EXIT_OK
    assert load_image(stego).shape == load_image(cover).shape
    assert main(["reveal", "--engine", engine, "--key", "42", "--in", str(stego), "--out", str(rev)]) == EXIT_OK
    capsys.readouterr()
    assert main(["verify", "--marker", str(marker), "--revealed", str(rev), "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["flagged"] is False

    bad, bad_rev = tmp_path / "bad.png", tmp_path / "bad_rev.png"
    assert main(["manipulate", "--spec", "noise/saltpepper/p0.3-0.3", "--in", str(stego), "--out", str(bad)]) == EXIT_OK
    assert main(["reveal", "--engine", engine, "--key", "42", "--in", str(bad), "--out", str(bad_rev)]) == EXIT_OK
    assert main(["verify", "--marker", str(marker), "--revealed", str(bad_rev)]) == EXIT_FLAGGED
    assert "FLAGGED" in capsys.readouterr().out


def test_manipulate_morph_uses_sidecars(corpus_dir, tmp_path):
    a, b = corpus_dir / "covers" / "id000.png", corpus_dir / "covers" / "id001.png"
    out = tmp_path / "m.png"
    assert main(["manipulate", "--spec", "morph/landmark/a0.9", "--in", str(a), "--partner", str(b),
                 "--out", str(out)]) == EXIT_OK
    assert load_image(out).shape == load_image(a).shape
    assert main(["manipulate", "--spec", "morph/landmark/a0.9", "--in", str(a), "--out", str(out)]) == EXIT_ERROR


def test_errors_exit_one(corpus_dir, tmp_path, capsys):
    cover = corpus_dir / "covers" / "id000.png"
    assert main(["manipulate", "--spec", "blur/gauss/k4", "--in", str(cover), "--out", str(tmp_path / "x.png")]) == EXIT_ERROR
    assert main(["reveal", "--engine", "lsb", "--key", "1", "--in", str(tmp_path / "nope.png"),
                 "--out", str(tmp_path / "y.png")]) == EXIT_ERROR
    assert main(["certify", "--engine", "lsb", "--key", "-1", "--cover", str(cover), "--marker", str(cover),
                 "--out", str(tmp_path / "z.png")]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "fragilemark.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("certify", "manipulate", "reveal", "verify", "run-experiment", "gen-corpus"):
        assert cmd in r.stdout
