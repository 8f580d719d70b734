"""Desk-scale covariant-gauge photon/electron model on momentum lattices.

Continuum integrals are replaced by weighted sums over declared momentum
and position grids.  The photon one-particle space carries four components
per momentum point; the component-0 (scalar) modes flip the sign of the
indefinite metric, which makes the interaction eta-symmetric rather than
Hermitian.  All model constants are recomputed from the lattice data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .dyson import default_grid, evolve_adjoint, evolve_block, free_propagator
from .fock import (
    BosonMode,
    FermionMode,
    FockBasis,
    ModeSpec,
    boson_ops,
    eta_metric,
    fermion_ops,
    second_quantize,
    top_sector_fraction,
)
from .graded import (
    GradedSpace,
    LinOp,
    certify,
    grade_shift_bound,
    vectors_supported_below,
)
from .oracles import Report

MINKOWSKI = np.diag([1.0, -1.0, -1.0, -1.0])

_SPINS = (0.5, -0.5)
_SPIN_TAG = {0.5: "+", -0.5: "-"}


def gamma_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four gamma matrices in the standard Dirac representation.

    gamma^0 is Hermitian, the spatial ones anti-Hermitian, and the
    anticommutators reproduce twice the metric exactly (entries are 0, +-1,
    +-i, so no rounding enters).
    """
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    eye = np.eye(2, dtype=complex)
    g0 = np.block([[eye, zero], [zero, -eye]])
    gs = [np.block([[zero, s], [-s, zero]]) for s in (s1, s2, s3)]
    return (g0, gs[0], gs[1], gs[2])


def alpha_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """alpha^mu = gamma^0 gamma^mu; all four are Hermitian."""
    g = gamma_matrices()
    return tuple(g[0] @ g[mu] for mu in range(4))


def spin_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """s_j = (i/2) gamma^k gamma^l for (j, k, l) cyclic."""
    g = gamma_matrices()
    return (
        0.5j * g[2] @ g[3],
        0.5j * g[3] @ g[1],
        0.5j * g[1] @ g[2],
    )


def _helicity_pair(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = float(np.linalg.norm(p))
    if norm < 1e-300:
        theta, phi = 0.0, 0.0
    else:
        theta = math.acos(max(-1.0, min(1.0, p[2] / norm)))
        phi = math.atan2(p[1], p[0])
    ch, sh = math.cos(theta / 2), math.sin(theta / 2)
    chi_plus = np.array([ch, sh * np.exp(1j * phi)], dtype=complex)
    chi_minus = np.array([-sh * np.exp(-1j * phi), ch], dtype=complex)
    return chi_plus, chi_minus


def dirac_spinors(p: Sequence[float], mass: float) -> tuple[np.ndarray, np.ndarray]:
    """Positive- and negative-energy spinors at momentum p.

    Returns (u, v), each of shape (4, 2) with spin columns ordered
    (+1/2, -1/2).  Away from p = 0 the spin label is the helicity; at p = 0
    it is the third spin component.  Normalisation: u*u = v*v = 2 E(p) per
    column, u*v = 0, and the rank-one sums over all four columns add up to
    2 E(p) times the identity.
    """
    pv = np.asarray(p, dtype=float)
    if pv.shape != (3,):
        raise ValueError("momentum must be a 3-vector")
    if mass < 0:
        raise ValueError("mass must be non-negative")
    energy = math.sqrt(float(pv @ pv) + mass * mass)
    plus = math.sqrt(max(0.0, energy + mass))
    minus = math.sqrt(max(0.0, energy - mass))
    chi_p, chi_m = _helicity_pair(pv)
    u = np.zeros((4, 2), dtype=complex)
    v = np.zeros((4, 2), dtype=complex)
    for col, (chi, sgn) in enumerate(((chi_p, 1.0), (chi_m, -1.0))):
        u[:2, col] = plus * chi
        u[2:, col] = minus * sgn * chi
        v[:2, col] = -minus * sgn * chi
        v[2:, col] = plus * chi
    return u, v


def fermion_energy(p: Sequence[float], mass: float) -> float:
    pv = np.asarray(p, dtype=float)
    return math.sqrt(float(pv @ pv) + mass * mass)


def polarization_vectors(k: Sequence[float]) -> np.ndarray:
    """The four polarization 4-vectors at photon momentum k, rows by label.

    Row 0 is the scalar direction (1, 0, 0, 0), row 3 the longitudinal one
    (0, k/|k|), rows 1 and 2 a transverse pair built from z x k.  Momenta on
    the z-axis are rejected: the transverse frame has no continuous
    extension there.
    """
    kv = np.asarray(k, dtype=float)
    if kv.shape != (3,):
        raise ValueError("momentum must be a 3-vector")
    perp = math.hypot(kv[0], kv[1])
    if perp == 0.0:
        raise ValueError(
            "photon momentum lies on the z-axis where the transverse "
            "polarization frame is undefined; move the grid point off the axis"
        )
    khat = kv / np.linalg.norm(kv)
    e1 = np.array([-kv[1], kv[0], 0.0]) / perp
    e2 = np.cross(khat, e1)
    pol = np.zeros((4, 4))
    pol[0, 0] = 1.0
    pol[1, 1:] = e1
    pol[2, 1:] = e2
    pol[3, 1:] = khat
    return pol


@dataclass(frozen=True)
class MomentumGrid:
    """Momentum points with positive quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != 3 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, 3) array")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must match the number of points")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def require_off_axis(self) -> None:
        perp = np.hypot(self.points[:, 0], self.points[:, 1])
        if np.any(perp == 0.0):
            raise ValueError(
                "photon momentum grid touches the z-axis; the polarization "
                "frame is undefined there"
            )

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(np.sum(self.weights * np.conj(f) * g))

    def norm(self, f: np.ndarray) -> float:
        return math.sqrt(abs(self.inner(f, f)))

    def __len__(self) -> int:
        return self.points.shape[0]


def _as_float_list(doc, name: str, length: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"field {name!r} must be a list of numbers") from exc
    if arr.ndim != 1:
        raise ValueError(f"field {name!r} must be a flat list of numbers")
    if length is not None and arr.size != length:
        raise ValueError(f"field {name!r} must have length {length}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class QedConfig:
    """Lattice data defining one model instance.

    chi_ph and chi_el are momentum-space cutoff samples at the photon and
    fermion grid points; chi_sp holds position-space coupling values at the
    declared positions.
    """

    momentum_points: tuple[tuple[float, float, float], ...]
    fermion_momenta: tuple[tuple[float, float, float], ...]
    mass: float
    coupling: float
    photon_cap: int
    chi_sp: tuple[float, ...]
    chi_ph: tuple[float, ...]
    chi_el: tuple[float, ...]
    momentum_weights: tuple[float, ...] | None = None
    fermion_weights: tuple[float, ...] | None = None
    positions: tuple[tuple[float, float, float], ...] = ((0.0, 0.0, 0.0),)
    position_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.photon_cap < 1:
            raise ValueError("photon_cap must be >= 1")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if len(self.chi_ph) != len(self.momentum_points):
            raise ValueError("chi_ph must have one value per momentum point")
        if len(self.chi_el) != len(self.fermion_momenta):
            raise ValueError("chi_el must have one value per fermion momentum")
        if len(self.chi_sp) != len(self.positions):
            raise ValueError("chi_sp must have one value per position")

    def photon_grid(self) -> MomentumGrid:
        w = self.momentum_weights or (1.0,) * len(self.momentum_points)
        grid = MomentumGrid(np.array(self.momentum_points), np.array(w))
        grid.require_off_axis()
        return grid

    def fermion_grid(self) -> MomentumGrid:
        w = self.fermion_weights or (1.0,) * len(self.fermion_momenta)
        return MomentumGrid(np.array(self.fermion_momenta), np.array(w))

    def to_json(self) -> dict:
        return {
            "momentum_points": [list(p) for p in self.momentum_points],
            "momentum_weights": list(
                self.momentum_weights or (1.0,) * len(self.momentum_points)
            ),
            "fermion_momenta": [list(p) for p in self.fermion_momenta],
            "fermion_weights": list(
                self.fermion_weights or (1.0,) * len(self.fermion_momenta)
            ),
            "mass": self.mass,
            "coupling": self.coupling,
            "photon_cap": self.photon_cap,
            "positions": [list(p) for p in self.positions],
            "position_weights": list(
                self.position_weights or (1.0,) * len(self.positions)
            ),
            "chi_sp": list(self.chi_sp),
            "chi_ph": list(self.chi_ph),
            "chi_el": list(self.chi_el),
        }

    @staticmethod
    def from_json(doc: dict | str) -> "QedConfig":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, dict):
            raise ValueError("model config must be a JSON object")
        for name in ("momentum_points", "fermion_momenta", "mass", "coupling",
                     "photon_cap", "chi_sp", "chi_ph", "chi_el"):
            if name not in doc:
                raise ValueError(f"missing required field {name!r}")

        def vec_list(name):
            raw = doc[name] if name in doc else None
            if raw is None:
                return None
            arr = np.asarray(raw, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError(f"field {name!r} must be a list of 3-vectors")
            return tuple(tuple(float(x) for x in row) for row in arr)

        kwargs = dict(
            momentum_points=vec_list("momentum_points"),
            fermion_momenta=vec_list("fermion_momenta"),
            mass=float(doc["mass"]),
            coupling=float(doc["coupling"]),
            photon_cap=int(doc["photon_cap"]),
            chi_sp=tuple(_as_float_list(doc["chi_sp"], "chi_sp")),
            chi_ph=tuple(_as_float_list(doc["chi_ph"], "chi_ph")),
            chi_el=tuple(_as_float_list(doc["chi_el"], "chi_el")),
        )
        if doc.get("momentum_weights") is not None:
            kwargs["momentum_weights"] = tuple(
                _as_float_list(doc["momentum_weights"], "momentum_weights")
            )
        if doc.get("fermion_weights") is not None:
            kwargs["fermion_weights"] = tuple(
                _as_float_list(doc["fermion_weights"], "fermion_weights")
            )
        if doc.get("positions") is not None:
            kwargs["positions"] = vec_list("positions")
        if doc.get("position_weights") is not None:
            kwargs["position_weights"] = tuple(
                _as_float_list(doc["position_weights"], "position_weights")
            )
        return QedConfig(**kwargs)


def random_momentum_grid(
    rng: np.random.Generator,
    count: int,
    radius_range: tuple[float, float] = (0.5, 2.0),
    min_polar_angle: float = 0.1,
    symmetric: bool = False,
) -> MomentumGrid:
    """Random points bounded away from the z-axis pole by min_polar_angle.

    With ``symmetric`` the reflected points -k are appended, which keeps a
    fermion grid closed under momentum reflection.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    radii = rng.uniform(*radius_range, size=count)
    theta = rng.uniform(min_polar_angle, math.pi - min_polar_angle, size=count)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    pts = np.stack(
        [
            radii * np.sin(theta) * np.cos(phi),
            radii * np.sin(theta) * np.sin(phi),
            radii * np.cos(theta),
        ],
        axis=1,
    )
    if symmetric:
        pts = np.concatenate([pts, -pts], axis=0)
    return MomentumGrid(pts, np.full(pts.shape[0], 1.0))


def default_toy_config() -> QedConfig:
    """The stock desk-scale instance: one photon momentum off the axis, one
    fermion momentum at rest, cap 3, coupling 0.1."""
    return QedConfig(
        momentum_points=((1.0, 0.5, 0.25),),
        fermion_momenta=((0.0, 0.0, 0.0),),
        mass=1.0,
        coupling=0.1,
        photon_cap=3,
        chi_sp=(1.0,),
        chi_ph=(0.15,),
        chi_el=(0.35,),
    )


class QedModel:
    """Assembled operators and lattice constants for one QedConfig."""

    def __init__(self, config: QedConfig):
        self.config = config
        ph_grid = config.photon_grid()
        el_grid = config.fermion_grid()
        self.photon_grid = ph_grid
        self.fermion_grid = el_grid
        self.omegas = np.linalg.norm(ph_grid.points, axis=1)
        if np.any(self.omegas == 0):
            raise ValueError("photon momenta must be non-zero")
        self.energies = np.array(
            [fermion_energy(p, config.mass) for p in el_grid.points]
        )
        self.pol = np.array([polarization_vectors(k) for k in ph_grid.points])

        boson_modes = []
        for i, k in enumerate(ph_grid.points):
            for lam in range(4):
                boson_modes.append(
                    BosonMode(f"ph{i}.{lam}", float(self.omegas[i]), config.photon_cap)
                )
        fermion_modes = []
        for j in range(len(el_grid)):
            for s in _SPINS:
                fermion_modes.append(
                    FermionMode(f"el{j}.{_SPIN_TAG[s]}", float(self.energies[j]))
                )
        for j in range(len(el_grid)):
            for s in _SPINS:
                fermion_modes.append(
                    FermionMode(f"po{j}.{_SPIN_TAG[s]}", float(self.energies[j]))
                )
        scalar = frozenset(f"ph{i}.0" for i in range(len(ph_grid)))
        self.spec = ModeSpec(tuple(boson_modes), tuple(fermion_modes), scalar)
        self.basis = FockBasis(self.spec, total_boson_cap=config.photon_cap)
        self.photon_basis = FockBasis(
            ModeSpec(tuple(boson_modes), (), scalar), total_boson_cap=config.photon_cap
        )
        self.fermion_basis = FockBasis(ModeSpec((), tuple(fermion_modes)))
        self.space = self.basis.graded_space()

        self._photon_ann = {
            (i, lam): boson_ops(self.photon_basis, f"ph{i}.{lam}")[0].matrix
            for i in range(len(ph_grid))
            for lam in range(4)
        }
        self._el_ann = {
            (j, s): fermion_ops(self.fermion_basis, f"el{j}.{_SPIN_TAG[s]}")[0].matrix
            for j in range(len(el_grid))
            for s in _SPINS
        }
        self._po_ann = {
            (j, s): fermion_ops(self.fermion_basis, f"po{j}.{_SPIN_TAG[s]}")[0].matrix
            for j in range(len(el_grid))
            for s in _SPINS
        }
        self._eta_ph_diag = np.array(
            [(-1.0) ** bocc_scalar for bocc_scalar in self._scalar_counts()],
            dtype=complex,
        )
        self.eta = eta_metric(self.basis)

        energies = {m.label: m.energy for m in boson_modes}
        energies.update({m.label: m.energy for m in fermion_modes})
        self.h_free = second_quantize(self.basis, energies)

        self.spinors_u = {}
        self.spinors_v_reflected = {}
        for j, p in enumerate(el_grid.points):
            u, _ = dirac_spinors(p, config.mass)
            _, v_ref = dirac_spinors(-p, config.mass)
            self.spinors_u[j] = u
            self.spinors_v_reflected[j] = v_ref

        self.h_int = self._assemble_interaction()
        self.constants = self._lattice_constants()

    # -- factor-space builders ------------------------------------------------

    def _scalar_counts(self):
        slots = [self.photon_basis.boson_slot(f"ph{i}.0") for i in range(len(self.photon_grid))]
        return [sum(b[s] for s in slots) for b, _ in self.photon_basis.states]

    def photon_annihilator(self, f_values: np.ndarray, mu: int) -> np.ndarray:
        """a_mu(f) on the photon factor for grid samples f (antilinear in f)."""
        w = self.photon_grid.weights
        out = np.zeros((self.photon_basis.dim,) * 2, dtype=complex)
        for i in range(len(self.photon_grid)):
            for lam in range(4):
                coeff = np.conj(np.sqrt(w[i]) * f_values[i]) * self.pol[i, lam, mu]
                if coeff != 0:
                    out += coeff * self._photon_ann[(i, lam)]
        return out

    def photon_creator_dagger(self, f_values: np.ndarray, mu: int) -> np.ndarray:
        """The eta-adjoint creator entering the field (scalar row flips sign)."""
        w = self.photon_grid.weights
        out = np.zeros((self.photon_basis.dim,) * 2, dtype=complex)
        for i in range(len(self.photon_grid)):
            for lam in range(4):
                sign = -1.0 if lam == 0 else 1.0
                coeff = np.sqrt(w[i]) * f_values[i] * self.pol[i, lam, mu] * sign
                if coeff != 0:
                    out += coeff * self._photon_ann[(i, lam)].conj().T
        return out

    def photon_field_factor(self, mu: int, x: Sequence[float]) -> np.ndarray:
        """A_mu at position x on the photon factor."""
        xv = np.asarray(x, dtype=float)
        phases = np.exp(-1j * self.photon_grid.points @ xv)
        f = phases * np.asarray(self.config.chi_ph) / np.sqrt(2.0 * self.omegas)
        return self.photon_annihilator(f, mu) + self.photon_creator_dagger(f, mu)

    def dirac_field_factor(self, component: int, x: Sequence[float]) -> np.ndarray:
        """psi_component at position x on the fermion factor.

        The particle part weighs the annihilators with u / sqrt(2E); the
        antiparticle part weighs the creators with the reflected v spinor.
        """
        xv = np.asarray(x, dtype=float)
        chi = np.asarray(self.config.chi_el, dtype=complex)
        w = self.fermion_grid.weights
        out = np.zeros((self.fermion_basis.dim,) * 2, dtype=complex)
        for j, p in enumerate(self.fermion_grid.points):
            phase = np.exp(-1j * float(p @ xv))
            root = np.sqrt(w[j] / (2.0 * self.energies[j]))
            for col, s in enumerate(_SPINS):
                cb = root * np.conj(phase * chi[j]) * self.spinors_u[j][component, col]
                cd = root * phase * chi[j] * self.spinors_v_reflected[j][component, col]
                if cb != 0:
                    out += cb * self._el_ann[(j, s)]
                if cd != 0:
                    out += cd * self._po_ann[(j, s)].conj().T
        return out

    def current_factor(self, mu: int, x: Sequence[float]) -> np.ndarray:
        """j^mu(x) on the fermion factor; Hermitian and bounded."""
        alpha = alpha_matrices()[mu]
        psi = [self.dirac_field_factor(l, x) for l in range(4)]
        out = np.zeros((self.fermion_basis.dim,) * 2, dtype=complex)
        for l in range(4):
            for lp in range(4):
                if alpha[l, lp] != 0:
                    out += alpha[l, lp] * (psi[l].conj().T @ psi[lp])
        return out

    # -- joint-space operators ------------------------------------------------

    def lift_photon(self, op: np.ndarray) -> LinOp:
        return LinOp(self.space, np.kron(op, np.eye(self.fermion_basis.dim)))

    def lift_fermion(self, op: np.ndarray) -> LinOp:
        return LinOp(self.space, np.kron(np.eye(self.photon_basis.dim), op))

    def photon_field(self, mu: int, x: Sequence[float]) -> LinOp:
        return self.lift_photon(self.photon_field_factor(mu, x))

    def current(self, mu: int, x: Sequence[float]) -> LinOp:
        return self.lift_fermion(self.current_factor(mu, x))

    def _assemble_interaction(self) -> LinOp:
        dim_f = self.fermion_basis.dim
        total = np.zeros((self.basis.dim,) * 2, dtype=complex)
        weights = self.config.position_weights or (1.0,) * len(self.config.positions)
        for x, wx, chi in zip(self.config.positions, weights, self.config.chi_sp):
            if chi == 0.0 or wx == 0.0:
                continue
            for mu in range(4):
                a_part = self.photon_field_factor(mu, x)
                j_part = self.current_factor(mu, x)
                total += (self.config.coupling * wx * chi) * np.kron(a_part, j_part)
        return LinOp(self.space, total)

    def _lattice_constants(self) -> dict:
        weights = self.config.position_weights or (1.0,) * len(self.config.positions)
        current_norm = 0.0
        for mu in range(4):
            best = max(
                float(np.linalg.norm(self.current_factor(mu, x), 2))
                for x in self.config.positions
            )
            current_norm += best
        photon_profile = np.asarray(self.config.chi_ph) / np.sqrt(2.0 * self.omegas)
        m_ph = 2.0 * self.photon_grid.norm(photon_profile)
        chi_sp_l1 = float(
            sum(w * abs(c) for w, c in zip(weights, self.config.chi_sp))
        )
        m_int = abs(self.config.coupling) * chi_sp_l1 * current_norm * m_ph
        return {
            "current_norm_sum": current_norm,
            "photon_profile_norm_doubled": m_ph,
            "chi_sp_l1": chi_sp_l1,
            "interaction_bound": m_int,
        }


def build_model(config: QedConfig) -> QedModel:
    """Assemble free part, interaction, and metric for a lattice config."""
    return QedModel(config)


def eta_adjoint(model: QedModel, op: LinOp) -> LinOp:
    """The metric adjoint  eta T* eta  on the joint space."""
    return LinOp(model.space, model.eta.matrix @ op.matrix.conj().T @ model.eta.matrix)


def field_commutators(model: QedModel, seed: int = 101, samples: int = 4) -> Report:
    """Residual of [a_mu(f), a_nu^dagger(g)] + g_{mu nu} <f, g> below the cap.

    The identity holds exactly on states whose total occupation stays below
    the cap; the projector removes the top sector where the truncation
    necessarily deforms it.
    """
    rng = np.random.default_rng(seed)
    npts = len(model.photon_grid)
    grades = model.photon_basis.grades()
    below = np.diag((grades <= model.config.photon_cap - 1).astype(complex))
    worst = 0.0
    for _ in range(samples):
        f = rng.normal(size=npts) + 1j * rng.normal(size=npts)
        g = rng.normal(size=npts) + 1j * rng.normal(size=npts)
        pairing = model.photon_grid.inner(f, g)
        for mu in range(4):
            for nu in range(4):
                a = model.photon_annihilator(f, mu)
                adag = model.photon_creator_dagger(g, nu)
                comm = a @ adag - adag @ a
                expected = -MINKOWSKI[mu, nu] * pairing
                defect = (comm - expected * np.eye(comm.shape[0])) @ below
                worst = max(worst, float(np.linalg.norm(defect, 2)))
    return Report(
        "photon-field-commutators",
        worst,
        1e-14,
        {"samples": samples, "seed": seed},
    )


def eta_unitarity_check(
    model: QedModel,
    times: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
    pairs: int = 50,
    tol: float = 1e-6,
    series_tol: float = 1e-9,
    seed: int = 7,
) -> list[Report]:
    """Drift of the indefinite pairing under W(t), plus inverse and leakage.

    Random unit pairs are drawn with photon occupation at most cap - 2 so
    the cap has headroom; the drift |<W psi, eta W phi> - <psi, eta phi>| is
    maximised over pairs and times.  One report covers the pairing, one the
    metric adjoint inverse applied through the adjoint series, and one the
    top-sector leakage of every evolved state.
    """
    rng = np.random.default_rng(seed)
    cap = model.config.photon_cap
    level = max(0, cap - 2)
    psi = vectors_supported_below(rng, model.space, level, pairs)
    phi = vectors_supported_below(rng, model.space, level, pairs)
    block = np.concatenate([psi, phi], axis=1)

    t_max = max(times)
    if min(times) <= 0:
        raise ValueError("check times must be positive")
    grid = default_grid(
        model.h_free, model.h_int, 0.0, t_max, support=level, tol=series_tol,
        panel_multiple=len(times),
    )
    boundaries = grid.boundaries()
    result = evolve_block(model.h_free, model.h_int, block, grid, series_tol)
    eta_diag = np.real(np.diag(model.eta.matrix))
    base = np.einsum("dm,d,dm->m", psi.conj(), eta_diag, phi)

    drift = 0.0
    leakage = 0.0
    h_diag = np.real(np.diag(model.h_free.matrix))
    for t in times:
        idx = int(np.argmin(np.abs(boundaries - t)))
        if abs(boundaries[idx] - t) > 1e-12 * max(1.0, t_max):
            raise ValueError(f"time {t} is not aligned with the grid boundaries")
        u_cols = result.boundary_sums[idx]
        w_cols = np.exp(-1j * t * h_diag)[:, None] * u_cols
        w_psi, w_phi = w_cols[:, :pairs], w_cols[:, pairs:]
        pairing = np.einsum("dm,d,dm->m", w_psi.conj(), eta_diag, w_phi)
        drift = max(drift, float(np.max(np.abs(pairing - base))))
        for col in range(w_cols.shape[1]):
            leakage = max(leakage, top_sector_fraction(model.basis, w_cols[:, col]))

    # eta W(t)* eta W(t) = 1 applied to a handful of columns; the adjoint
    # series supplies U(t, 0)* and the outer eta comes after it.
    sample = min(4, pairs)
    inverse_residual = 0.0
    final_idx = len(boundaries) - 1
    for col in range(sample):
        w_vec = np.exp(-1j * t_max * h_diag) * result.boundary_sums[final_idx][:, col]
        rotated = np.exp(1j * t_max * h_diag) * (eta_diag * w_vec)
        series = evolve_adjoint(
            model.h_free, model.h_int, rotated, grid, series_tol,
            estimate_quadrature=False,
        ).partial_sum
        back = eta_diag * series
        inverse_residual = max(
            inverse_residual, float(np.linalg.norm(back - psi[:, col]))
        )
    # W(-t) W(t) = 1 on the same handful, via a backward run.
    staged = np.empty((model.space.dim, sample), dtype=complex)
    for col in range(sample):
        staged[:, col] = (
            np.exp(-1j * t_max * h_diag) * result.boundary_sums[final_idx][:, col]
        )
    grid_back = default_grid(
        model.h_free, model.h_int, 0.0, -t_max,
        support=level + result.achieved_order, tol=series_tol,
    )
    back = evolve_block(model.h_free, model.h_int, staged, grid_back, series_tol)
    recovered = np.exp(1j * t_max * h_diag)[:, None] * back.boundary_sums[-1]
    group_residual = float(
        np.max(np.linalg.norm(recovered - psi[:, :sample], axis=0))
    )

    context = {
        "pairs": pairs,
        "times": list(times),
        "series_tol": series_tol,
        "achieved_order": result.achieved_order,
    }
    return [
        Report("eta-pairing-drift", drift, tol, context),
        Report("metric-adjoint-inverse", inverse_residual, 10 * tol, context),
        Report("group-inverse", group_residual, 10 * tol, context),
        Report("top-sector-leakage", leakage, 1e-6, context),
    ]


def structure_reports(model: QedModel, seed: int = 23) -> list[Report]:
    """Algebraic sanity bundle for one assembled model.

    Everything here is a closed identity of the construction: gamma algebra,
    spinor normalisation and completeness, polarization completeness, ladder
    relations below the cap, the metric symmetry of the interaction, its
    exact grade shift, and the lattice bound on the certified interaction
    constant.
    """
    rng = np.random.default_rng(seed)
    reports: list[Report] = []

    g = gamma_matrices()
    worst = 0.0
    for mu in range(4):
        for nu in range(4):
            anti = g[mu] @ g[nu] + g[nu] @ g[mu]
            target = 2.0 * MINKOWSKI[mu, nu] * np.eye(4)
            worst = max(worst, float(np.abs(anti - target).max()))
    reports.append(Report("gamma-anticommutators", worst, 0.0, {}))

    ortho = 0.0
    complete = 0.0
    momenta = [np.zeros(3)] + [rng.normal(size=3) for _ in range(3)]
    for p in momenta:
        u, v = dirac_spinors(p, model.config.mass)
        two_e = 2.0 * fermion_energy(p, model.config.mass)
        gram_u = u.conj().T @ u
        gram_v = v.conj().T @ v
        cross = u.conj().T @ v
        ortho = max(
            ortho,
            float(np.abs(gram_u - two_e * np.eye(2)).max()),
            float(np.abs(gram_v - two_e * np.eye(2)).max()),
            float(np.abs(cross).max()),
        )
        rank_sum = u @ u.conj().T + v @ v.conj().T
        complete = max(
            complete, float(np.abs(rank_sum - two_e * np.eye(4)).max())
        )
    reports.append(Report("spinor-orthogonality", ortho, 1e-12, {}))
    reports.append(Report("spinor-completeness", complete, 1e-12, {}))

    pol_res = 0.0
    for i, k in enumerate(model.photon_grid.points):
        pol = model.pol[i]
        gram = np.einsum("lm,l,ln->mn", pol, np.diag(MINKOWSKI), pol)
        pol_res = max(pol_res, float(np.abs(gram - MINKOWSKI).max()))
        for lam in (1, 2):
            pol_res = max(pol_res, abs(float(pol[lam, 1:] @ k)) / np.linalg.norm(k))
    reports.append(Report("polarization-completeness", pol_res, 1e-14, {}))

    reports.append(field_commutators(model, seed=seed + 1))

    car = 0.0
    labels = [(j, s) for j in range(len(model.fermion_grid)) for s in _SPINS]
    for j, s in labels:
        for jp, sp in labels:
            b = model._el_ann[(j, s)]
            bp = model._el_ann[(jp, sp)]
            d = model._po_ann[(j, s)]
            anti = b @ bp.conj().T + bp.conj().T @ b
            expected = np.eye(b.shape[0]) if (j, s) == (jp, sp) else 0.0
            car = max(car, float(np.abs(anti - expected).max()))
            car = max(car, float(np.abs(b @ bp + bp @ b).max()))
            car = max(car, float(np.abs(b @ d + d @ b).max()))
    reports.append(Report("fermion-anticommutators", car, 0.0, {}))

    eta = model.eta.matrix
    sym = float(
        np.linalg.norm(eta @ model.h_int.matrix @ eta - model.h_int.matrix.conj().T, 2)
    )
    reports.append(Report("interaction-metric-symmetry", sym, 1e-12, {}))

    if model.config.coupling != 0.0:
        shift = grade_shift_bound(model.h_int)
        reports.append(
            Report("interaction-grade-shift", float(abs(shift - 1)), 0.0, {})
        )

    cert = certify(model.h_int)
    bound = model.constants["interaction_bound"]
    excess = max(0.0, cert.rel_bound - bound) / max(bound, 1e-300)
    reports.append(
        Report(
            "interaction-bound-domination",
            excess,
            1e-9,
            {"certified": cert.rel_bound, "lattice_bound": bound},
        )
    )

    # Each Dirac component is norm-bounded by its one-particle data: the
    # annihilation part contributes the l2 norm of its smearing vector, the
    # creation part likewise, and the two add.
    field_norm_excess = 0.0
    chi = np.asarray(model.config.chi_el, dtype=complex)
    for x in model.config.positions:
        for comp in range(4):
            mat = model.dirac_field_factor(comp, x)
            op_norm = float(np.linalg.norm(mat, 2))
            sq_b = 0.0
            sq_d = 0.0
            for j in range(len(model.fermion_grid)):
                scale = model.fermion_grid.weights[j] * abs(chi[j]) ** 2 / (
                    2.0 * model.energies[j]
                )
                sq_b += scale * float(
                    np.sum(np.abs(model.spinors_u[j][comp, :]) ** 2)
                )
                sq_d += scale * float(
                    np.sum(np.abs(model.spinors_v_reflected[j][comp, :]) ** 2)
                )
            bound = math.sqrt(sq_b) + math.sqrt(sq_d)
            field_norm_excess = max(
                field_norm_excess, max(0.0, op_norm - bound) / max(bound, 1e-300)
            )
    reports.append(Report("dirac-field-norm", field_norm_excess, 1e-12, {}))

    # ||a_mu(f) psi|| <= ||f|| * ||(N_ph + something)^{1/2} psi|| with the plain
    # photon number operator; the Euclidean frame makes the component sum sharp.
    grades = model.photon_basis.grades().astype(float)
    number_half = np.sqrt(grades)
    ann_ratio = 0.0
    for _ in range(20):
        f = rng.normal(size=len(model.photon_grid)) + 1j * rng.normal(
            size=len(model.photon_grid)
        )
        fnorm = model.photon_grid.norm(f)
        psi = rng.normal(size=model.photon_basis.dim) + 1j * rng.normal(
            size=model.photon_basis.dim
        )
        weighted = float(np.linalg.norm(number_half * psi))
        if weighted == 0.0:
            continue
        for mu in range(4):
            lowered = model.photon_annihilator(f, mu) @ psi
            ratio = float(np.linalg.norm(lowered)) / (fnorm * weighted)
            ann_ratio = max(ann_ratio, max(0.0, ratio - 1.0))
    reports.append(Report("annihilator-number-bound", ann_ratio, 1e-12, {}))

    return reports
