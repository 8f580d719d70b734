"""Gauge-field toy model: spinors, polarizations, and the assembled operators."""

import math

import numpy as np
import pytest

from dysonprop.graded import certify, grade_shift_bound
from dysonprop.qed import (
    MINKOWSKI,
    MomentumGrid,
    QedConfig,
    alpha_matrices,
    build_model,
    default_toy_config,
    dirac_spinors,
    eta_adjoint,
    eta_unitarity_check,
    fermion_energy,
    field_commutators,
    gamma_matrices,
    polarization_vectors,
    random_momentum_grid,
    structure_reports,
)


def small_config(coupling=0.3, cap=2):
    """One photon point, one fermion point, low cap: 240 joint dimensions."""
    return QedConfig(
        momentum_points=((0.8, -0.3, 0.5),),
        fermion_momenta=((0.2, 0.1, -0.4),),
        mass=1.0,
        coupling=coupling,
        photon_cap=cap,
        chi_sp=(1.0,),
        chi_ph=(0.2,),
        chi_el=(0.3,),
    )


# ------------------------------------------------------------ free algebra

def test_gamma_algebra_exact():
    g = gamma_matrices()
    for mu in range(4):
        for nu in range(4):
            anti = g[mu] @ g[nu] + g[nu] @ g[mu]
            np.testing.assert_array_equal(anti, 2 * MINKOWSKI[mu, nu] * np.eye(4))
    np.testing.assert_array_equal(g[0], g[0].conj().T)
    for mu in range(1, 4):
        np.testing.assert_array_equal(g[mu], -g[mu].conj().T)


def test_alpha_matrices_hermitian():
    for a in alpha_matrices():
        np.testing.assert_array_equal(a, a.conj().T)
    assert np.array_equal(alpha_matrices()[0], np.eye(4))


def test_rest_frame_spinor():
    u, v = dirac_spinors((0.0, 0.0, 0.0), 1.0)
    root2 = math.sqrt(2.0)
    np.testing.assert_allclose(u[:, 0], [root2, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(u[:, 1], [0, root2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(v[:, 0], [0, 0, root2, 0], atol=1e-15)


def test_spinor_normalisation_and_completeness():
    rng = np.random.default_rng(4)
    for mass in (0.5, 1.0, 2.0):
        p = rng.normal(size=3)
        u, v = dirac_spinors(p, mass)
        two_e = 2.0 * fermion_energy(p, mass)
        np.testing.assert_allclose(u.conj().T @ u, two_e * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(v.conj().T @ v, two_e * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(u.conj().T @ v, np.zeros((2, 2)), atol=1e-12)
        np.testing.assert_allclose(
            u @ u.conj().T + v @ v.conj().T, two_e * np.eye(4), atol=1e-12
        )


def test_spinor_input_validation():
    with pytest.raises(ValueError):
        dirac_spinors((1.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        dirac_spinors((0.0, 0.0, 0.0), -1.0)


def test_polarization_frame_along_x():
    pol = polarization_vectors((1.0, 0.0, 0.0))
    np.testing.assert_array_equal(pol[0], [1, 0, 0, 0])
    np.testing.assert_array_equal(pol[1], [0, 0, 1, 0])
    np.testing.assert_array_equal(pol[2], [0, 0, 0, 1])
    np.testing.assert_array_equal(pol[3], [0, 1, 0, 0])


def test_polarization_minkowski_gram():
    rng = np.random.default_rng(12)
    for _ in range(5):
        k = rng.normal(size=3)
        k[2] = abs(k[2]) * 0.5
        pol = polarization_vectors(k)
        gram = np.einsum("lm,l,ln->mn", pol, np.diag(MINKOWSKI), pol)
        np.testing.assert_allclose(gram, MINKOWSKI, atol=1e-14)
        # transverse rows are orthogonal to k
        for lam in (1, 2):
            assert abs(pol[lam, 1:] @ k) < 1e-14 * np.linalg.norm(k)


def test_polarization_rejects_z_axis():
    with pytest.raises(ValueError):
        polarization_vectors((0.0, 0.0, 2.0))


# ------------------------------------------------------------ grids, config

def test_momentum_grid_validation():
    with pytest.raises(ValueError):
        MomentumGrid(np.zeros((0, 3)), np.zeros(0))
    with pytest.raises(ValueError):
        MomentumGrid(np.ones((2, 3)), np.array([1.0, 0.0]))
    grid = MomentumGrid(np.array([[0.0, 0.0, 1.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        grid.require_off_axis()


def test_random_momentum_grid_stays_off_axis():
    rng = np.random.default_rng(3)
    grid = random_momentum_grid(rng, 40, min_polar_angle=0.2)
    grid.require_off_axis()
    perp = np.hypot(grid.points[:, 0], grid.points[:, 1])
    radii = np.linalg.norm(grid.points, axis=1)
    assert np.all(perp >= radii * math.sin(0.2) * 0.999)
    sym = random_momentum_grid(rng, 5, symmetric=True)
    assert len(sym) == 10
    np.testing.assert_allclose(sym.points[5:], -sym.points[:5])


def test_config_roundtrip_and_validation():
    cfg = small_config()
    assert QedConfig.from_json(cfg.to_json()) == QedConfig.from_json(
        QedConfig.from_json(cfg.to_json()).to_json()
    )
    doc = cfg.to_json()
    del doc["mass"]
    with pytest.raises(ValueError, match="mass"):
        QedConfig.from_json(doc)
    with pytest.raises(ValueError):
        QedConfig.from_json("[1, 2]")
    with pytest.raises(ValueError):
        small_config(cap=0)
    bad = small_config().to_json()
    bad["chi_ph"] = [0.1, 0.2]
    with pytest.raises(ValueError):
        QedConfig.from_json(bad)


def test_photon_momentum_on_axis_is_rejected_at_build():
    doc = small_config().to_json()
    doc["momentum_points"] = [[0.0, 0.0, 1.0]]
    with pytest.raises(ValueError):
        build_model(QedConfig.from_json(doc))


# ------------------------------------------------------------ built model

def test_toy_model_shape_and_constants():
    model = build_model(default_toy_config())
    assert model.photon_basis.dim == 35
    assert model.fermion_basis.dim == 16
    assert model.space.dim == 560
    c = model.constants
    assert c["chi_sp_l1"] == 1.0
    assert c["current_norm_sum"] == pytest.approx(1.225, rel=1e-12)
    omega = math.sqrt(1.0 + 0.25 + 0.0625)
    assert c["photon_profile_norm_doubled"] == pytest.approx(
        2 * 0.15 / math.sqrt(2 * omega), rel=1e-12
    )
    assert c["interaction_bound"] == pytest.approx(
        0.1 * 1.0 * c["current_norm_sum"] * c["photon_profile_norm_doubled"],
        rel=1e-12,
    )
    # certified constant is dominated by the lattice product bound
    assert certify(model.h_int).rel_bound <= c["interaction_bound"] * (1 + 1e-9)


def test_interaction_raises_grade_by_one():
    model = build_model(small_config())
    assert grade_shift_bound(model.h_int) == 1.0


def test_zero_coupling_kills_the_interaction():
    model = build_model(small_config(coupling=0.0))
    assert np.all(model.h_int.matrix == 0.0)
    assert model.constants["interaction_bound"] == 0.0


def test_full_hamiltonian_is_metric_symmetric():
    model = build_model(small_config())
    h = model.h_free.matrix + model.h_int.matrix
    eta = model.eta.matrix
    assert np.linalg.norm(eta @ h @ eta - h.conj().T, 2) < 1e-12
    # and the interaction alone is genuinely non-Hermitian
    assert np.linalg.norm(model.h_int.matrix - model.h_int.matrix.conj().T, 2) > 1e-3


def test_eta_adjoint_matches_field_structure():
    model = build_model(small_config())
    a = model.photon_field(2, (0.1, 0.0, -0.2))
    np.testing.assert_allclose(
        eta_adjoint(model, a).matrix, a.matrix, atol=1e-13
    )
    j = model.current(1, (0.0, 0.0, 0.0))
    np.testing.assert_allclose(j.matrix, j.matrix.conj().T, atol=1e-13)


def test_field_commutators_below_cap():
    model = build_model(small_config(cap=3))
    assert field_commutators(model, samples=2).passed


def test_structure_reports_all_pass_small_model():
    model = build_model(small_config())
    reports = structure_reports(model, seed=5)
    names = [r.check_name for r in reports]
    assert "gamma-anticommutators" in names
    assert "interaction-grade-shift" in names
    failed = [r for r in reports if not r.passed]
    assert failed == []


def test_eta_unitarity_check_small_model():
    model = build_model(small_config(cap=3))
    reports = eta_unitarity_check(
        model, times=(0.5, 1.0), pairs=4, tol=1e-6, series_tol=1e-9, seed=1
    )
    assert [r.check_name for r in reports] == [
        "eta-pairing-drift",
        "metric-adjoint-inverse",
        "group-inverse",
        "top-sector-leakage",
    ]
    assert all(r.passed for r in reports)
    with pytest.raises(ValueError):
        eta_unitarity_check(model, times=(0.0, 1.0), pairs=2)
