import json
import subprocess
import sys

from rdcpx.complex import MarkedComplex, enumerate_marked_horns, representable
from rdcpx.corpus import compositor


def run(*args, cwd=None):
    proc = subprocess.run(
        [sys.executable, "-m", "rdcpx.cli", *args], capture_output=True, text=True, cwd=cwd, timeout=300
    )
    return proc.returncode, proc.stdout, proc.stderr


def test_validate_arrow():
    code, out, _ = run("validate", "--in", "arrow")
    assert code == 0 and json.loads(out) == {"dims": [2, 1]}


def test_validate_rejects_dangling_face(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"strata": [[{"in": [], "out": []}], [{"in": [0], "out": [4]}]]}))
    code, out, err = run("validate", "--in", str(bad))
    assert code == 1 and json.loads(err)["error"] == "DanglingRef"


def test_unknown_verb_is_a_usage_error():
    code, _, err = run("frobnicate")
    assert code == 3 and json.loads(err)["error"] == "UsageError"


def test_missing_input_is_a_usage_error():
    code, _, _ = run("validate", "--in", "no/such/file.json")
    assert code == 3


def test_collapse_factor_globe_to_point():
    code, out, _ = run("collapse-factor", "--source", "globe:2", "--target", "point")
    assert code == 0
    res = json.loads(out)
    assert res["m"] == 2 and len(res["K_seq"]) == 2


def test_gray_of_arrows():
    code, out, _ = run("gray", "--in", "arrow", "--in", "arrow")
    assert code == 0 and "strata" in json.loads(out)


def test_subdivide_globe_input_edge(tmp_path):
    from rdcpx.molecule import arrow, paste

    (tmp_path / "path.json").write_text(paste(arrow(), arrow(), 0).carrier.dumps())
    code, out, _ = run("subdivide", "--in", "globe:2", "--in", "path.json", "--elem", "1,0", cwd=tmp_path)
    assert code == 0 and json.loads(out)["dims"] == [3, 3, 1]


def test_fibrant_flat_compositor_fails_with_witness(tmp_path):
    C = compositor().carrier
    X = MarkedComplex(representable(C))
    horns = list(enumerate_marked_horns([(C, {C.greatest()})]))
    (tmp_path / "x.json").write_text(json.dumps(X.to_json()))
    (tmp_path / "inv.json").write_text(json.dumps([h.to_json() for h in horns]))
    code, out, _ = run("fibrant", "--in", "x.json", "--inventory", "inv.json", cwd=tmp_path)
    assert code == 2
    report = json.loads(out)
    assert report["status"] == "FAIL" and any("witness" in item for item in report["items"])


def test_export_dot_is_deterministic():
    first = run("export-dot", "--in", "cube:2")
    second = run("export-dot", "--in", "cube:2")
    assert first[0] == 0 and first[1] == second[1]
    assert first[1].startswith("digraph")
