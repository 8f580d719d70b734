"""Graded finite-dimensional spaces and operators on them.

A grading is a non-negative weight per basis vector (for Fock models: the
total boson occupation).  Operators carry two certificates derived from the
grading: the largest upward grade shift their support allows, and the
relative bound constant ``C`` with ``||T v|| <= C ||(A + 1)^{1/2} v||`` where
``A`` is the diagonal grading operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AssumptionViolation

# Entries below ENTRY_THRESHOLD times the largest magnitude in a matrix (or
# vector) are treated as structural zeros when reading off supports.
ENTRY_THRESHOLD = 1e-14

# Hermiticity and sector-commutation checks are relative to this factor.
STRUCTURE_RTOL = 1e-12


@dataclass(frozen=True)
class GradedSpace:
    """A finite-dimensional space with a non-negative grade per basis index."""

    grades: tuple[float, ...]

    def __post_init__(self):
        g = np.asarray(self.grades, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("grades must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("grades must be finite and non-negative")
        object.__setattr__(self, "grades", tuple(float(x) for x in g))

    @property
    def dim(self) -> int:
        return len(self.grades)

    def grade_array(self) -> np.ndarray:
        return np.asarray(self.grades, dtype=float)

    def to_json(self) -> dict:
        return {"dim": self.dim, "grades": list(self.grades)}

    @staticmethod
    def from_json(doc: dict) -> "GradedSpace":
        space = GradedSpace(tuple(float(x) for x in doc["grades"]))
        if int(doc.get("dim", space.dim)) != space.dim:
            raise ValueError("dim field does not match the number of grades")
        return space


@dataclass(frozen=True)
class GradeCert:
    """Upward grade shift and relative bound constant of an operator."""

    grade_shift: float
    rel_bound: float


def _pairs(matrix: np.ndarray) -> list[list[float]]:
    flat = matrix.reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_pairs(pairs: Sequence[Sequence[float]], dim: int) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (dim * dim, 2):
        raise ValueError(
            f"matrix must hold {dim * dim} [re, im] pairs, got shape {arr.shape}"
        )
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)


@dataclass(frozen=True)
class LinOp:
    """A dense operator attached to a graded space.

    Immutable once constructed; certificate metadata is computed lazily and
    cached.  Arithmetic helpers return new instances on the same space.
    """

    space: GradedSpace
    matrix: np.ndarray
    _cert: GradeCert | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match space dim {self.space.dim}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def H(self) -> "LinOp":
        """Conjugate transpose on the same space."""
        return LinOp(self.space, self.matrix.conj().T)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)

    def __matmul__(self, other: "LinOp") -> "LinOp":
        self._same_space(other)
        return LinOp(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "LinOp") -> "LinOp":
        self._same_space(other)
        return LinOp(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "LinOp") -> "LinOp":
        self._same_space(other)
        return LinOp(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "LinOp":
        return LinOp(self.space, -self.matrix)

    def __mul__(self, scalar: complex) -> "LinOp":
        return LinOp(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def norm2(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def _same_space(self, other: "LinOp") -> None:
        if other.space.grades != self.space.grades:
            raise ValueError("operators live on different graded spaces")

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "grades": list(self.space.grades),
            "matrix": _pairs(self.matrix),
        }

    @staticmethod
    def from_json(doc: dict) -> "LinOp":
        space = GradedSpace.from_json(doc)
        return LinOp(space, _from_pairs(doc["matrix"], space.dim))


def sector_projector(space: GradedSpace, level: float) -> LinOp:
    """Orthogonal projector onto basis indices with grade <= level."""
    diag = (space.grade_array() <= level).astype(complex)
    return LinOp(space, np.diag(diag))


def grade_shift_bound(op: LinOp) -> float:
    """Largest upward grade shift carried by the support of ``op``.

    Entries with magnitude at most ``ENTRY_THRESHOLD`` times the largest
    entry are ignored, so the number is invariant under scaling.  The zero
    operator shifts by 0.
    """
    m = np.abs(op.matrix)
    top = m.max()
    if top == 0.0:
        return 0.0
    g = op.space.grade_array()
    rows, cols = np.nonzero(m > ENTRY_THRESHOLD * top)
    if rows.size == 0:
        return 0.0
    shift = np.max(g[rows] - g[cols])
    return float(max(0.0, shift))


def relative_bound_constant(op: LinOp) -> float:
    """The constant C with  ||op v|| <= C ||(A + 1)^{1/2} v||  for all v.

    Computed as the largest singular value of ``op`` right-scaled by
    ``diag((grade + 1)^{-1/2})``.
    """
    g = op.space.grade_array()
    scaled = op.matrix * (g + 1.0) ** -0.5
    return float(np.linalg.norm(scaled, 2))


def certify(op: LinOp) -> GradeCert:
    """Compute (and cache) the grade-shift / relative-bound certificate."""
    if op._cert is None:
        cert = GradeCert(grade_shift_bound(op), relative_bound_constant(op))
        object.__setattr__(op, "_cert", cert)
    return op._cert


def weighted_norm(space: GradedSpace, vec: np.ndarray, alpha: float) -> float:
    """The norm  sqrt(sum_j (grade_j + 1)^alpha |v_j|^2)  (alpha >= 0)."""
    v = np.asarray(vec, dtype=complex)
    if v.shape != (space.dim,):
        raise ValueError(f"vector shape {v.shape} does not match dim {space.dim}")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    w = (space.grade_array() + 1.0) ** alpha
    return float(np.sqrt(np.sum(w * np.abs(v) ** 2)))


def support_level(space: GradedSpace, vec: np.ndarray) -> float:
    """Largest grade carried by the numerically non-zero components of vec.

    The threshold is relative (ENTRY_THRESHOLD times the largest component)
    so the level is invariant under scaling.  The zero vector sits at the
    lowest grade present.
    """
    v = np.abs(np.asarray(vec, dtype=complex))
    if v.shape != (space.dim,):
        raise ValueError(f"vector shape {v.shape} does not match dim {space.dim}")
    top = v.max()
    g = space.grade_array()
    if top == 0.0:
        return float(g.min())
    mask = v > ENTRY_THRESHOLD * top
    return float(g[mask].max())


def _hermitian_defect(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix - matrix.conj().T))


def _sector_mixing(space: GradedSpace, matrix: np.ndarray) -> float:
    """Frobenius norm of the part of ``matrix`` that changes the grade."""
    g = space.grade_array()
    mix = np.where(g[:, None] != g[None, :], matrix, 0.0)
    return float(np.linalg.norm(mix))


@dataclass(frozen=True)
class DynamicsCert:
    """Certificates collected before running the series for (h_free, h_int)."""

    interaction: GradeCert
    interaction_adjoint: GradeCert


def verify_dynamics_assumptions(h_free: LinOp, h_int: LinOp) -> DynamicsCert:
    """Check the structural requirements on a split Hamiltonian.

    Requires: a Hermitian free part that preserves the grading sectors, and
    an interaction with finite grade shift and relative bound (automatic in
    finite dimension; the constants are returned).  Raises
    AssumptionViolation with a behavioural code otherwise.
    """
    h_free._same_space(h_int)
    scale = max(1.0, float(np.linalg.norm(h_free.matrix)))
    if _hermitian_defect(h_free.matrix) > STRUCTURE_RTOL * scale:
        raise AssumptionViolation(
            "free-part-not-hermitian",
            "the free part of the Hamiltonian must be Hermitian",
        )
    if _sector_mixing(h_free.space, h_free.matrix) > STRUCTURE_RTOL * scale:
        raise AssumptionViolation(
            "free-part-mixes-grades",
            "the free part must commute with the grading (block-diagonal "
            "over constant-grade sectors)",
        )
    return DynamicsCert(certify(h_int), certify(h_int.H))


@dataclass(frozen=True)
class ObservableCert:
    """Certificates for an observable entering a conjugated-flow track."""

    observable: GradeCert
    observable_adjoint: GradeCert
    free_derivative_bound: float


def verify_observable_assumptions(h_free: LinOp, obs: LinOp) -> ObservableCert:
    """Certify an observable B for conjugated tracks.

    Both B and its adjoint must carry finite grade shifts (always true in a
    finite truncation; the constants are what matters downstream).  The third
    number bounds the free-rotation derivative ``[i h_free, B]`` relative to
    ``(A + 1)^{1/2}``; conjugation by the free flow leaves it unchanged, so a
    single constant is uniform in time.
    """
    h_free._same_space(obs)
    comm = LinOp(obs.space, 1j * (h_free.matrix @ obs.matrix - obs.matrix @ h_free.matrix))
    return ObservableCert(certify(obs), certify(obs.H), relative_bound_constant(comm))


def grade_sectors(space: GradedSpace) -> list[tuple[float, np.ndarray]]:
    """Indices grouped by grade value, ascending."""
    g = space.grade_array()
    out = []
    for val in np.unique(g):
        out.append((float(val), np.nonzero(g == val)[0]))
    return out


def random_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A complex unit vector with rotation-invariant direction."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def vectors_supported_below(
    rng: np.random.Generator, space: GradedSpace, level: float, count: int
) -> np.ndarray:
    """Unit vectors supported on grades <= level, as columns."""
    mask = space.grade_array() <= level
    if not np.any(mask):
        raise ValueError(f"no basis index has grade <= {level}")
    cols = np.zeros((space.dim, count), dtype=complex)
    sub = rng.normal(size=(int(mask.sum()), count)) + 1j * rng.normal(
        size=(int(mask.sum()), count)
    )
    sub /= np.linalg.norm(sub, axis=0, keepdims=True)
    cols[mask, :] = sub
    return cols


def as_linop(space_or_grades: GradedSpace | Iterable[float], matrix: np.ndarray) -> LinOp:
    """Convenience constructor accepting either a space or raw grades."""
    if isinstance(space_or_grades, GradedSpace):
        return LinOp(space_or_grades, matrix)
    return LinOp(GradedSpace(tuple(float(g) for g in space_or_grades)), matrix)
