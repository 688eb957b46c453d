import hashlib
import json

import numpy as np
import pytest

from saliency_uncertainty.cli import main
from saliency_uncertainty.io import read_volume, write_volume
from saliency_uncertainty.volume import Kind, Volume


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run("synth", "--preset", "saccadetest", "--seed", 3, "--frames", 90, "--out-dir", out) == 0
    return out


def test_constant_volume_gives_zero(tmp_path):
    write_volume(Volume(np.full((8, 8, 8), 0.37, dtype=np.float32)), tmp_path / "c.suv")
    for method, kernel in [("stu", "3x3x3"), ("tu", "5"), ("su", "3"), ("fusion", "3x3x3"), ("baseline", "3x3x3")]:
        out = tmp_path / f"{method}.suv"
        assert run("estimate", "--method", method, "--kernel", kernel, "--in", tmp_path / "c.suv", "--out", out) == 0
        u = read_volume(out)
        assert u.kind is Kind.UNCERTAINTY and u.data.max() == 0


def test_pipeline_against_planted_truth(scenario, tmp_path, capsys):
    u = tmp_path / "u.suv"
    assert run("estimate", "--in", scenario / "saliency.suv", "--out", u, "--kernel", "3x3x3") == 0
    report = tmp_path / "roc.json"
    assert run("evaluate", "--estimate", u, "--truth", scenario / "planted_truth.suv", "--t1", 0.5, "--report", report, "--roc-csv", tmp_path / "roc.csv") == 0
    assert json.loads(report.read_text())["auc"] > 0.9
    assert "AUC" in capsys.readouterr().out
    assert (tmp_path / "roc.csv").read_text().startswith("t2,fpr,tdr")


def test_truth_then_self_evaluation(scenario, tmp_path):
    utr = tmp_path / "utr.suv"
    summary = tmp_path / "truth.json"
    assert run("truth", "--saliency", scenario / "saliency.suv", "--fixations", scenario / "fixations.csv", "--scale", "24x32", "--out", utr, "--report", summary) == 0
    meta = json.loads(summary.read_text())
    assert meta["events"] == 8 * 90 and meta["subjects"] == 8
    report = tmp_path / "self.json"
    assert run("evaluate", "--estimate", utr, "--truth", utr, "--report", report) == 0
    assert json.loads(report.read_text())["auc"] >= 0.99


def test_distances_and_info(scenario, tmp_path, capsys):
    report = tmp_path / "d.json"
    assert run("distances", "--estimate", scenario / "oracle.suv", "--truth", scenario / "oracle.suv", "--report", report) == 0
    d = json.loads(report.read_text())
    assert max(d["js"], d["jd"], d["hi"], d["l2"]) <= 1e-9
    capsys.readouterr()
    assert run("info", scenario / "saliency.suv") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["shape"] == [24, 32, 90] and info["kind"] == "SALIENCY"


def test_entropy_command(scenario, tmp_path):
    report = tmp_path / "h.csv"
    assert run("entropy", "--fixations", scenario / "fixations.csv", "--scale", "24x32", "--levels", 16, "--report", report) == 0
    lines = report.read_text().strip().splitlines()
    assert len(lines) == 2


def test_seeded_runs_are_identical(tmp_path):
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("synth", "--seed", 11, "--frames", 30, "--out-dir", out) == 0
        digests.append({f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in ("saliency.suv", "fixations.csv", "planted_truth.suv")})
    assert digests[0] == digests[1]


@pytest.mark.parametrize(
    "argv_tail,code,status",
    [
        (["estimate", "--in", "{bad}", "--out", "{out}"], "E_FORMAT", 8),
        (["estimate", "--in", "{good}", "--out", "{out}", "--kernel", "4x3x3"], "E_KERNEL", 4),
        (["estimate", "--in", "{good}", "--out", "{out}", "--kernel", "9x9x9"], "E_GEOMETRY", 3),
        (["estimate", "--in", "{missing}", "--out", "{out}"], "E_IO", 2),
        (["evaluate", "--estimate", "{good}", "--truth", "{zero}", "--report", "{out}"], "E_DEGENERATE_TRUTH", 6),
        (["synth", "--preset", "nope", "--out-dir", "{dir}"], "E_SCENARIO", 7),
    ],
)
def test_error_codes(tmp_path, capsys, argv_tail, code, status):
    good = tmp_path / "good.suv"
    write_volume(Volume(np.random.default_rng(0).random((4, 4, 4))), good)
    write_volume(Volume(np.zeros((4, 4, 4)), Kind.TRUE_UNCERTAINTY), tmp_path / "zero.suv")
    (tmp_path / "bad.suv").write_bytes(b"nope")
    subs = dict(bad=tmp_path / "bad.suv", good=good, zero=tmp_path / "zero.suv", out=tmp_path / "out", missing=tmp_path / "missing.suv", dir=tmp_path / "d")
    argv = [a.format(**subs) for a in argv_tail]
    assert main(argv) == status
    assert f"error[{code}]" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_fixation_parse_error(tmp_path, capsys):
    write_volume(Volume(np.zeros((12, 16, 2))), tmp_path / "s.suv")
    (tmp_path / "f.csv").write_text("subject,frame,row,col\ns1,0,480,3\n")
    assert run("truth", "--saliency", tmp_path / "s.suv", "--fixations", tmp_path / "f.csv", "--out", tmp_path / "u.suv") == 9
    assert "line 2" in capsys.readouterr().err
