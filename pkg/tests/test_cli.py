import hashlib
from pathlib import Path

import numpy as np
import pytest

from conespec.cli import main
from conespec.errors import ConfigurationError
from conespec.exprs import compile_expr
from conespec.opfile import parse_operator

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"


# ---------------------------------------------------------------------------
# expression and operator file parsing


def test_expr_polynomial_in_mode_and_x():
    fn = compile_expr("m^2 + 2.25 + 0.5*x*cos(1.3*x)")
    assert fn(2, 0.0) == pytest.approx(6.25)
    x = np.linspace(0, 1, 5)
    assert fn(0, x).shape == x.shape


def test_expr_rejects_unsafe_code():
    with pytest.raises(ConfigurationError):
        compile_expr("__import__('os').system('true')")
    with pytest.raises(ConfigurationError):
        compile_expr("open('x')")


def test_parse_shipped_operator():
    op = parse_operator(CONFIGS / "laplace_a1.5.op")
    assert op.mu == 2.0 and op.alpha == 1.0
    assert op.modes == (-8, 8)
    assert op.is_frozen
    assert np.allclose(np.asarray(op._indicial(3), dtype=complex),
                       [11.25, 0.0, 1.0])


def test_parse_perturbed_operator_splits_conormal_part():
    op = parse_operator(CONFIGS / "laplace_perturbed.op")
    assert not op.is_frozen
    frozen = op.frozen()
    assert np.allclose(np.asarray(frozen._indicial(0), dtype=complex),
                       [2.25, 0.0, 1.0])


def test_operator_rematerializes_on_wider_window():
    op = parse_operator(CONFIGS / "laplace_a1.5.op").with_modes(30)
    assert op.modes == (-30, 30)
    assert np.asarray(op._indicial(30), dtype=complex)[0] == 900 + 2.25


# ---------------------------------------------------------------------------
# subcommand runs (small configs; the shipped ones are exercised in the
# acceptance suite where the budgets are larger)


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


def test_spectrum_run_matches_oracle(tmp_path):
    cfg = write_cfg(tmp_path / "s.cfg", f"""
operator = {CONFIGS / 'laplace_a1.5.op'}
strip = 6
lam_max = 120
s_min = -11
npoints = 1600
""")
    code = main(["spectrum", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    rows = (tmp_path / "out" / "oracle_compare.csv").read_text().splitlines()
    worst = max(float(r.split(",")[-1]) for r in rows[2:])
    assert worst < 1e-3
    manifest = (tmp_path / "out" / "MANIFEST").read_text()
    assert "status: complete" in manifest and "sha256:" in manifest


def test_zeta_run_reports_leading_pole(tmp_path):
    cfg = write_cfg(tmp_path / "z.cfg", f"""
operator = {CONFIGS / 'laplace_a1.5.op'}
t_min = 4e-3
t0 = 0.1
t_count = 90
k_max = 3
lam_max = 11500
z_eval = -3
""")
    code = main(["zeta", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    rows = (tmp_path / "out" / "poles.csv").read_text().splitlines()[2:]
    first = rows[0].split(",")
    assert float(first[0]) == pytest.approx(-1.0)
    assert int(first[2]) == 1


def test_verify_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path / "v.cfg", "cases = 200\n")
    for sub in ("a", "b"):
        code = main(["verify", "--config", cfg, "--seed", "11",
                     "--out", str(tmp_path / sub)])
        assert code == 0
    da = hashlib.sha256((tmp_path / "a" / "checks.csv").read_bytes()).digest()
    db = hashlib.sha256((tmp_path / "b" / "checks.csv").read_bytes()).digest()
    assert da == db


def test_missing_config_exits_invalid(tmp_path):
    assert main(["heat", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "out")]) == 2


def test_bad_operator_reference_exits_invalid(tmp_path):
    cfg = write_cfg(tmp_path / "h.cfg", "operator = missing.op\n")
    code = main(["heat", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 2
    manifest = (tmp_path / "out" / "MANIFEST").read_text()
    assert "incomplete" in manifest


def test_index_run_assembles_integer(tmp_path):
    cfg = write_cfg(tmp_path / "i.cfg", """
b_kind = symmetric
b_rows = 16
b_cols = 16
h_c = 1.25
h_b = 0.5
h_weight = 1
""")
    code = main(["index", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    row = (tmp_path / "out" / "index_report.csv").read_text().splitlines()[2]
    omega, eta, value, dist = row.split(",")[:4]
    assert abs(float(value) + 1.0) < 1e-6
    assert float(dist) < 1e-6
