import math

import numpy as np
import pytest
import scipy.linalg

import tunnelcat as tc


def test_version_string():
    assert tc.__version__.count(".") == 2


def test_fock_operators_satisfy_su2_algebra():
    space = tc.FockSpace(3)
    jx, jy, jz = space.jx, space.jy, space.jz
    assert np.allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)
    assert np.allclose(jx @ jx + jy @ jy + jz @ jz, 3.75 * np.eye(4), atol=1e-12)
    assert np.allclose(np.diag(jz).real, [1.5, 0.5, -0.5, -1.5])


def test_propagate_matches_scipy_expm():
    h = tc.well_hamiltonian(1.0, 0.5, 1.0, 3)
    rho0 = tc.localized_state(tc.FockSpace(3), 3)
    u = scipy.linalg.expm(-1j * 2.7 * h)
    assert np.allclose(tc.propagate(rho0, h, 2.7), u @ rho0 @ u.conj().T, atol=1e-12)


def test_single_boson_rabi_formula():
    h = tc.well_hamiltonian(0.0, 1.0, 2.0, 1)
    rho0 = tc.localized_state(tc.FockSpace(1), 1)
    for t in (0.3, 1.1, 4.0):
        p = tc.transfer_probability(tc.propagate(rho0, h, t), 0)
        # J-convention (1, 2) is Pauli-convention (0.5, 1).
        assert p == pytest.approx(tc.closedform.single_particle_prob(0.5, 1.0, t), abs=1e-12)


def test_coupled_closed_form_against_simulator():
    gamma, delta, alpha = 0.5, 1.0, -0.7
    amps = [0.6, 0.8j]
    hs = tc.well_hamiltonian(0.0, 2 * gamma, 2 * delta, 1)
    ha = tc.well_hamiltonian(0.0, 0.0, 2 * delta, 1)
    h = tc.joint_hamiltonian(hs, ha, 2 * alpha)
    psi = np.array(amps, dtype=complex).reshape(-1, 1)
    rho_a = psi @ psi.conj().T
    rho_s = tc.localized_state(tc.FockSpace(1), 1)
    for t in (0.5, 2.0, 7.5):
        red = tc.reduced_system_state(rho_s, rho_a, h, t, 2, 2)
        expected = tc.closedform.coupled_prob(gamma, delta, alpha, amps, t)
        assert tc.transfer_probability(red) == pytest.approx(expected, abs=1e-12)


def test_find_max_probability_returns_first_peak():
    t_star, p_star = tc.find_max_probability(lambda t: math.sin(t) ** 2, 10.0)
    assert t_star == pytest.approx(math.pi / 2, abs=1e-5)
    assert p_star == pytest.approx(1.0, abs=1e-10)


def test_oracle_preset_passes():
    result = tc.oracle_check(tc.load_config("oracle"))
    assert result["passed"]
    assert result["max_error"] < 1e-8


def test_bad_config_raises_config_error():
    with pytest.raises(tc.ConfigError, match="system.n"):
        tc.parse_config('{"mode": "simulate", "system": {"n": 0}}')


def test_simulate_fig1_preset():
    out = tc.simulate(tc.load_config("fig1"))
    assert out["bare"]["p_star"] == pytest.approx(0.2, abs=1e-6)
    assert out["coupled"]["p_star"] == pytest.approx(1.0, abs=1e-6)


def test_run_writes_manifest(tmp_path):
    manifest = tc.run(tc.load_config("fig1"), out_dir=str(tmp_path))
    assert manifest["status"] == "ok"
    assert (tmp_path / "manifest.json").exists()
    for name in manifest["artifacts"]:
        assert (tmp_path / name).exists()
