import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from algms.cli import main
from algms.dssy import assemble_stiffness
from algms.mesh import DofLayout, uniform_mesh
from algms.mmio import (read_grid, read_matrix_market, read_vector, write_array,
                        write_matrix_market)
from algms.problem import Benchmark


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    d = tmp_path_factory.mktemp("gen") / "data"
    assert main(["generate", "--eps", "0.5", "--invH", "5", "--invh", "50", "--out-dir", str(d)]) == 0
    return d


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_generate_outputs(generated):
    A = read_matrix_market(generated / "A.mtx")
    b = read_matrix_market(generated / "b.mtx")
    u = read_vector(generated / "u_h.vec")
    assert A.shape == (4900, 4900)
    assert np.linalg.norm(A @ u - b) <= 1e-12 * np.linalg.norm(b)
    mesh = uniform_mesh(50, 50)
    kappa = read_grid(generated / "truth" / "kappa.csv")
    np.testing.assert_array_equal(kappa, Benchmark(0.5).sample_kappa(mesh))
    assert (A != assemble_stiffness(mesh, DofLayout(50, 50), kappa)).nnz == 0
    meta = json.loads((generated / "mesh.json").read_text())
    assert "x_coords" not in meta and meta["nx"] == 50 and meta["block_x"] == 10


def test_recover_eps_zero(tmp_path):
    d = tmp_path / "d"
    main(["generate", "--eps", "0", "--invH", "2", "--invh", "16", "--out-dir", str(d)])
    assert main(["recover", "--in-dir", str(d), "--out-dir", str(tmp_path / "r")]) == 0
    kappa = read_grid(tmp_path / "r" / "kappa.csv")
    X, Y = uniform_mesh(16, 16).centers()
    np.testing.assert_allclose(kappa, 1 + (1 + X) * (1 + Y), rtol=1e-10)
    np.testing.assert_allclose(read_vector(tmp_path / "r" / "hx.csv"), 1 / 16, rtol=1e-12)
    prov = list(csv.reader(open(tmp_path / "r" / "provenance.csv")))
    assert prov[0][0] == "corner-ratio" and len(prov) == 16 and len(prov[0]) == 16


def test_recover_constant_coefficient(tmp_path):
    d = tmp_path / "d"
    main(["generate", "--coefficient", "one", "--invH", "2", "--invh", "10", "--out-dir", str(d)])
    main(["recover", "--in-dir", str(d), "--out-dir", str(tmp_path / "r")])
    np.testing.assert_allclose(read_grid(tmp_path / "r" / "kappa.csv"), 1.0, rtol=1e-12)


def test_truncated_matrix_is_config_error(tmp_path, generated, capsys):
    d = tmp_path / "d"
    shutil.copytree(generated, d)
    lines = (d / "A.mtx").read_text().splitlines(keepends=True)
    (d / "A.mtx").write_text("".join(lines[:100]))
    assert main(["recover", "--in-dir", str(d), "--out-dir", str(tmp_path / "r")]) == 2
    assert "A.mtx:101: truncated" in capsys.readouterr().err


def test_non_dssy_matrix_is_numerical_failure(tmp_path, generated, capsys):
    d = tmp_path / "d"
    shutil.copytree(generated, d)
    A = read_matrix_market(d / "A.mtx").tolil()
    dofs = DofLayout(50, 50).element_dofs[20, 20]
    A[dofs[2], dofs[3]] = A[dofs[3], dofs[2]] = 50.0
    write_matrix_market(d / "A.mtx", A.tocsr())
    assert main(["solve", "--in-dir", str(d), "--out-dir", str(tmp_path / "o")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_bad_arguments(tmp_path, generated):
    assert main(["generate", "--invH", "3", "--invh", "50", "--out-dir", str(tmp_path)]) == 2
    assert main(["solve", "--mode", "ams", "--in-dir", str(generated), "--truth-dir",
                 str(generated / "truth"), "--out-dir", str(tmp_path / "o")]) == 2
    assert main(["solve", "--in-dir", str(tmp_path / "missing"), "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["solve", "--moment", "svd", "--in-dir", "x", "--out-dir", "y"])


def test_ams_and_gmsfem_reports_agree(tmp_path, generated):
    for mode in ("ams", "gmsfem"):
        assert main(["solve", "--mode", mode, "--eps", "0.5", "--in-dir", str(generated),
                     "--out-dir", str(tmp_path / mode)]) == 0
    ra = json.loads((tmp_path / "ams" / "report.json").read_text())
    rg = json.loads((tmp_path / "gmsfem" / "report.json").read_text())
    assert ra["dim"] == rg["dim"] == 400
    assert abs(ra["rel_energy"] - rg["rel_energy"]) <= 1e-6
    assert ra["rel_energy"] == pytest.approx(0.335, rel=0.2)
    field = read_grid(tmp_path / "ams" / "field.csv")
    assert field.shape == (50, 50)


def test_linearity_in_b(tmp_path, generated):
    d = tmp_path / "d"
    shutil.copytree(generated, d)
    main(["solve", "--in-dir", str(d), "--out-dir", str(tmp_path / "o1")])
    write_array(d / "b.mtx", 2 * read_matrix_market(d / "b.mtx"))
    main(["solve", "--in-dir", str(d), "--out-dir", str(tmp_path / "o2")])
    u1 = read_vector(tmp_path / "o1" / "u_H.vec")
    u2 = read_vector(tmp_path / "o2" / "u_H.vec")
    np.testing.assert_allclose(u2, 2 * u1, rtol=1e-12, atol=1e-15)


def test_ams_purity_and_determinism(tmp_path, generated):
    d = tmp_path / "d"
    shutil.copytree(generated, d)
    args = ["solve", "--mode", "ams", "--in-dir", str(d), "--eps", "0.5"]
    assert main(args + ["--out-dir", str(tmp_path / "with")]) == 0
    shutil.rmtree(d / "truth")
    assert main(args + ["--out-dir", str(tmp_path / "without")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "again")]) == 0
    a, b, c = (_files(tmp_path / n) for n in ("with", "without", "again"))
    assert a == b == c
    assert set(a) == {"coarse.vec", "u_H.vec", "field.csv", "dims.json", "report.json"}


def test_gmsfem_needs_truth(tmp_path, generated):
    d = tmp_path / "d"
    shutil.copytree(generated, d)
    shutil.rmtree(d / "truth")
    assert main(["solve", "--mode", "gmsfem", "--in-dir", str(d), "--out-dir", str(tmp_path / "o")]) == 2


def test_study_empty_and_single_row(tmp_path, capsys):
    assert main(["study", "--eps", "--out-dir", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "study.csv").read_text().strip() == \
        "eps,invH,invh,dim,mode,rel_energy,rel_l2,seconds"
    assert main(["study", "--eps", "0.5", "--invH", "5", "--modes", "ams",
                 "--out-dir", str(tmp_path / "s")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "s" / "study.csv")))
    assert len(rows) == 1 and rows[0]["mode"] == "ams"
    assert float(rows[0]["rel_energy"]) == pytest.approx(0.335, rel=0.2)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "algms", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "generate" in out.stdout
