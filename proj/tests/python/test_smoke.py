import json
import math

import numpy as np
import pytest

import anderson


def flat_operator(n):
    return anderson.Operator(np.zeros((n, n)))


def test_version():
    assert anderson.__version__.count(".") == 2


def test_white_noise_is_seeded():
    a = anderson.sample_white_noise(16, 3)
    b = anderson.sample_white_noise(16, 3)
    assert a.shape == (16, 16)
    assert np.array_equal(a, b)
    h = 2 * math.pi / 16
    assert abs(a.var() * h * h - 1) < 0.3


def test_operator_against_dense_laplacian():
    n = 8
    xi = anderson.sample_white_noise(n, 1)
    op = anderson.Operator(xi)
    h = 2 * math.pi / n
    k = np.fft.fftfreq(n, 1.0 / n)
    u = np.random.default_rng(0).standard_normal((n, n))
    lap = np.real(np.fft.ifft2(-(k[:, None] ** 2 + k[None, :] ** 2) * np.fft.fft2(u)))
    assert np.allclose(op.apply_h(u), lap + xi * u, rtol=0, atol=1e-10 * np.abs(lap).max())
    assert op.c > op.lambda_max_h
    v = op.resolvent_solve(2.0, u)
    assert np.allclose(op.apply_neg_hc(v) + 2.0 * v, u, atol=1e-8)
    assert op.energy_norm(u) ** 2 >= (u * u).sum() * h * h


def test_zero_noise_spectrum():
    op = flat_operator(16)
    s = anderson.eigendecompose(op, "builtin:const:0", 6)
    assert np.allclose(s["eigenvalues"], [1, 2, 2, 2, 2, 3], atol=1e-10)
    assert s["m"] == -1
    assert len(s["eigenfields"]) == 6
    assert anderson.resolvent_sup_norm(op, np.ones((16, 16)), 10.0) == pytest.approx(1 / 11, abs=1e-10)


def test_kato_log():
    a = np.ones((128, 128))
    val = anderson.kato_modulus_log(a, 0.1)
    assert abs(val / (math.pi * 0.01 * (0.5 - math.log(0.1))) - 1) < 0.1


def test_heat_diagnostics():
    rep = anderson.heat_diagnostics(flat_operator(16), [0.1, 0.5])
    assert rep["epsilon"] >= 1 - 1e-6
    assert set(rep) >= {"a1", "a2", "epsilon", "min_kernel", "green_ratio_low", "green_ratio_high"}


def test_energy_of_constant():
    op = flat_operator(16)
    assert anderson.energy(op, "builtin:const:0", "pow3", np.ones((16, 16))) == pytest.approx(math.pi**2)


def test_mountain_pass_and_fountain():
    op = flat_operator(16)
    r = anderson.mountain_pass_solve(op, "builtin:const:0")
    assert r["converged"] and r["phi"] > 0
    assert r["u"].shape == (16, 16)
    sols = anderson.fountain_solve(op, "builtin:const:0", 3)
    phis = [s["phi"] for s in sols]
    assert len(phis) == 3 and phis == sorted(phis) and len(set(phis)) == 3


def test_choquard():
    op = flat_operator(8)
    assert anderson.selfdual_value(op, "builtin:const:1", "builtin:negconst:1", 2, 3, np.zeros((8, 8))) == 0.0
    r = anderson.selfdual_minimize(op, "builtin:const:1", "builtin:negconst:1", init=np.ones((8, 8)))
    assert r["selfdual_value"] <= 1e-12
    assert all(b <= a for a, b in zip(r["trace"], r["trace"][1:]))


def test_run_manifest(tmp_path):
    out = tmp_path / "spec"
    m = anderson.run({"command": "spectrum", "n": 16, "seed": 7, "count": 6, "out": str(out)})
    assert m["rng_algorithm"] == "mt19937_64+box-muller"
    names = {a["path"] for a in m["artifacts"]}
    assert "eigenvalues.csv" in names
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk["artifacts"] == m["artifacts"]


def test_errors():
    with pytest.raises(ValueError):
        anderson.Operator(np.zeros((4, 5)))
    with pytest.raises(ValueError):
        anderson.run({"command": "spectrum", "n": "x"})
    with pytest.raises(ValueError):
        anderson.eigendecompose(flat_operator(8), "builtin:nope", 3)
