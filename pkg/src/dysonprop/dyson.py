"""Iterated-integral (Dyson) series engine with a-priori truncation bounds.

The propagator is built order by order through the recursion

    U_{n+1}(t, t') xi = -i * integral_{t'}^{t} h_int(tau) U_n(tau, t') xi dtau,

with ``h_int(tau) = e^{i tau h_free} h_int e^{-i tau h_free}``.  Each order is
certified by the product bound

    ||U_n(t, t') xi|| <= |t - t'|^n / n! * C^n *
                         prod_{k<n} (L + k*b + 1)^{1/2} * ||xi||

where C is the relative bound constant of the interaction, b its grade
shift, and L the support level of xi.  Summation stops once the certified
tail is below the requested tolerance.

Quadrature: composite Gauss-Legendre panels.  Cumulative integrals inside a
panel integrate the degree-(q-1) interpolant through the panel's own nodes,
so one order costs a single dense mat-mat product over all nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import AssumptionViolation, TruncationError
from .graded import (
    GradeCert,
    GradedSpace,
    LinOp,
    STRUCTURE_RTOL,
    certify,
    grade_sectors,
    support_level,
)

DEFAULT_MAX_ORDER = 64
DEFAULT_NODES_PER_PANEL = 8
# Tail summation stops once one more term adds less than this fraction.
TAIL_INCREMENT_RTOL = 1e-3
# Width cap per panel: the product rule from the a-priori bound, and an
# oscillation cap set by the largest free-energy gap the interaction couples.
PANEL_PRODUCT_FACTOR = 0.1
PANEL_PHASE_FACTOR = 0.7


@lru_cache(maxsize=None)
def _reference_rule(q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [-1, 1] plus the partial-integral map.

    S[m, j] = integral_{-1}^{x_m} of the j-th Lagrange basis polynomial
    through the nodes, so ``S @ g`` integrates the interpolant of nodal data
    g from the left panel edge to each node.
    """
    if q < 2:
        raise ValueError("nodes_per_panel must be at least 2")
    x, w = npleg.leggauss(q)
    vand = npleg.legvander(x, q - 1)
    coeffs = np.linalg.inv(vand)  # column j: Legendre coefficients of ell_j
    s = np.empty((q, q))
    for j in range(q):
        anti = npleg.legint(coeffs[:, j], lbnd=-1)
        s[:, j] = npleg.legval(x, anti)
    return x, w, s


@dataclass(frozen=True)
class TimeGrid:
    """Uniform composite quadrature grid from t_start to t_end.

    t_start may exceed t_end; integrals then carry the signed orientation.
    """

    t_start: float
    t_end: float
    panels: int
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL

    def __post_init__(self):
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        for name in ("t_start", "t_end"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def duration(self) -> float:
        return abs(self.t_end - self.t_start)

    def boundaries(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.panels + 1)

    def nodes(self) -> np.ndarray:
        """Quadrature nodes, shape (panels, nodes_per_panel)."""
        x, _, _ = _reference_rule(self.nodes_per_panel)
        bnd = self.boundaries()
        mid = 0.5 * (bnd[1:] + bnd[:-1])
        half = 0.5 * (bnd[1:] - bnd[:-1])
        return mid[:, None] + half[:, None] * x[None, :]

    def reversed(self) -> "TimeGrid":
        return TimeGrid(self.t_end, self.t_start, self.panels, self.nodes_per_panel)

    def coarsened(self) -> "TimeGrid":
        return TimeGrid(
            self.t_start, self.t_end, max(1, self.panels // 2), self.nodes_per_panel
        )


@dataclass(frozen=True)
class DysonTerm:
    """One series order sampled on a grid.

    node_values has shape (panels, nodes_per_panel, dim); boundary_values has
    shape (panels + 1, dim) and anchors the term at the panel edges, with
    boundary_values[0] the value at t_start (the initial vector for order 0,
    zero for every higher order).
    """

    order: int
    grid: TimeGrid
    node_values: np.ndarray
    boundary_values: np.ndarray

    @property
    def sup_norm(self) -> float:
        nodes = np.linalg.norm(self.node_values, axis=-1).max()
        edges = np.linalg.norm(self.boundary_values, axis=-1).max()
        return float(max(nodes, edges))

    def value_at_end(self) -> np.ndarray:
        return self.boundary_values[-1]


@dataclass(frozen=True)
class SeriesResult:
    """Summed series with its certificates."""

    terms: tuple[DysonTerm, ...]
    partial_sum: np.ndarray
    achieved_order: int
    tail_bound: float
    quadrature_estimate: float | None
    per_order_sup_norms: tuple[float, ...]
    boundary_sums: np.ndarray  # (panels + 1, dim), running sum at panel edges
    grid: TimeGrid
    cert: GradeCert
    support_in: float

    def to_json(self) -> dict:
        return {
            "achieved_order": self.achieved_order,
            "tail_bound": self.tail_bound,
            "per_order_sup_norms": list(self.per_order_sup_norms),
            "result": [[float(z.real), float(z.imag)] for z in self.partial_sum],
        }


def apriori_bound(
    order: int,
    duration: float,
    rel_bound: float,
    grade_shift: float,
    support: float,
    vec_norm: float,
) -> float:
    """The certified bound on ||U_n(t, t') xi|| for one order.

    Equals ``duration^n / n! * C^n * prod_{k<n} (L + k b + 1)^{1/2} * ||xi||``
    and reduces to ||xi|| at order 0.  Evaluated in log space so large orders
    do not overflow.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if duration < 0 or rel_bound < 0 or vec_norm < 0:
        raise ValueError("duration, rel_bound and vec_norm must be non-negative")
    if order == 0:
        return float(vec_norm)
    if duration == 0.0 or rel_bound == 0.0 or vec_norm == 0.0:
        return 0.0
    ks = np.arange(order, dtype=float)
    log_prod = 0.5 * np.log(support + ks * grade_shift + 1.0).sum()
    log_term = (
        order * (math.log(duration) + math.log(rel_bound))
        - math.lgamma(order + 1)
        + log_prod
        + math.log(vec_norm)
    )
    if log_term > 700.0:  # exp would overflow; the bound is genuinely astronomical
        return math.inf
    return float(math.exp(log_term))


def apriori_tail(
    after_order: int,
    duration: float,
    rel_bound: float,
    grade_shift: float,
    support: float,
    vec_norm: float,
    increment_rtol: float = TAIL_INCREMENT_RTOL,
    max_terms: int = 5000,
) -> float:
    """Sum of the a-priori bounds over all orders beyond ``after_order``.

    Terms are accumulated until one more adds less than ``increment_rtol``
    of the running total; the factorial always wins, so this terminates.
    """
    total = 0.0
    n = after_order + 1
    for _ in range(max_terms):
        term = apriori_bound(n, duration, rel_bound, grade_shift, support, vec_norm)
        total += term
        if term <= increment_rtol * total:
            break
        n += 1
    return total


@dataclass(frozen=True)
class _Prepared:
    """Model rotated so the free part is diagonal (sector-wise eigenbasis)."""

    space: GradedSpace
    energies: np.ndarray  # real, length dim
    rotation: np.ndarray | None  # columns: eigenbasis; None when already diagonal
    h_int_rot: np.ndarray
    cert: GradeCert

    def to_working(self, vecs: np.ndarray) -> np.ndarray:
        if self.rotation is None:
            return np.asarray(vecs, dtype=complex)
        return self.rotation.conj().T @ vecs

    def from_working(self, vecs: np.ndarray) -> np.ndarray:
        if self.rotation is None:
            return vecs
        return self.rotation @ vecs


def _prepare(h_free: LinOp, h_int: LinOp) -> _Prepared:
    h_free._same_space(h_int)
    m = h_free.matrix
    scale = max(1.0, float(np.linalg.norm(m)))
    if float(np.linalg.norm(m - m.conj().T)) > STRUCTURE_RTOL * scale:
        raise AssumptionViolation(
            "free-part-not-hermitian",
            "the free part of the Hamiltonian must be Hermitian",
        )
    space = h_free.space
    off = np.abs(m - np.diag(np.diag(m))).max() if m.size else 0.0
    if off <= STRUCTURE_RTOL * scale:
        energies = np.real(np.diag(m)).copy()
        rotation = None
        h_rot = np.array(h_int.matrix, dtype=complex)
    else:
        # Diagonalize sector by sector so the grading stays diagonal.
        g = space.grade_array()
        mix = np.where(g[:, None] != g[None, :], m, 0.0)
        if float(np.linalg.norm(mix)) > STRUCTURE_RTOL * scale:
            raise AssumptionViolation(
                "free-part-mixes-grades",
                "the free part must commute with the grading",
            )
        energies = np.zeros(space.dim)
        rotation = np.zeros((space.dim, space.dim), dtype=complex)
        for _, idx in grade_sectors(space):
            block = m[np.ix_(idx, idx)]
            vals, vecs = np.linalg.eigh(block)
            energies[idx] = vals
            rotation[np.ix_(idx, idx)] = vecs
        h_rot = rotation.conj().T @ h_int.matrix @ rotation
    return _Prepared(space, energies, rotation, h_rot, certify(h_int))


def interaction_picture(h_free: LinOp, h_int: LinOp, tau: float) -> LinOp:
    """The rotated interaction  e^{i tau h_free} h_int e^{-i tau h_free}.

    For a diagonal free part with energies E the entries are exactly
    ``h_int[j, k] * exp(i tau (E_j - E_k))``.
    """
    prep = _prepare(h_free, h_int)
    phase = np.exp(1j * tau * prep.energies)
    core = phase[:, None] * prep.h_int_rot * phase.conj()[None, :]
    if prep.rotation is not None:
        core = prep.rotation @ core @ prep.rotation.conj().T
    return LinOp(h_free.space, core)


def free_propagator(h_free: LinOp, t: float) -> np.ndarray:
    """The unitary  e^{-i t h_free}  as a dense matrix."""
    prep = _prepare(h_free, LinOp(h_free.space, np.zeros_like(h_free.matrix)))
    phase = np.exp(-1j * t * prep.energies)
    if prep.rotation is None:
        return np.diag(phase)
    return (prep.rotation * phase[None, :]) @ prep.rotation.conj().T


class _GridKernels:
    """Precomputed quadrature data bound to one grid and one energy vector."""

    def __init__(self, grid: TimeGrid, energies: np.ndarray):
        x, w, s = _reference_rule(grid.nodes_per_panel)
        self.grid = grid
        bnd = grid.boundaries()
        self.halfw = 0.5 * (bnd[1:] - bnd[:-1])  # signed
        self.nodes = grid.nodes()
        self.weights = w
        self.partial = s
        # e^{-i tau E} at every node, shape (P, q, dim)
        self.phase_minus = np.exp(-1j * self.nodes[:, :, None] * energies[None, None, :])

    def apply_interaction(self, h_rot: np.ndarray, values: np.ndarray) -> np.ndarray:
        """h_int(tau_node) applied nodewise to values of shape (P, q, d, m)."""
        x = self.phase_minus[..., None] * values
        y = np.tensordot(h_rot, x, axes=([1], [2]))  # (d, P, q, m)
        y = np.moveaxis(y, 0, 2)
        return self.phase_minus.conj()[..., None] * y

    def cumulative_integral(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Integrate nodal data g from t_start up to every node and edge.

        Returns (node integrals (P, q, d, m), edge integrals (P + 1, d, m)).
        """
        p = g.shape[0]
        full = np.tensordot(self.weights, g, axes=([0], [1]))  # (P, d, m)
        full *= self.halfw[:, None, None]
        part = np.tensordot(self.partial, g, axes=([1], [1]))  # (q, P, d, m)
        part = np.moveaxis(part, 0, 1) * self.halfw[:, None, None, None]
        edges = np.zeros((p + 1,) + g.shape[2:], dtype=complex)
        np.cumsum(full, axis=0, out=edges[1:])
        nodes = edges[:-1, None, :, :] + part
        return nodes, edges


@dataclass
class BlockSeriesResult:
    """Series applied to a block of columns, kept in the original basis."""

    boundary_sums: np.ndarray  # (P + 1, dim, m)
    achieved_order: int
    tail_bounds: np.ndarray  # per column
    per_order_sup_norms: np.ndarray  # (orders + 1, m), sup over nodes and edges
    per_order_bounds: np.ndarray  # matching a-priori bounds
    supports_in: np.ndarray  # per-column support level of the input
    cert: GradeCert
    grid: TimeGrid

    @property
    def tail_bound(self) -> float:
        return float(self.tail_bounds.max())

    def final(self) -> np.ndarray:
        return self.boundary_sums[-1]


def _column_norms(node_vals: np.ndarray, edge_vals: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(node_vals, axis=2).max(axis=(0, 1))
    e = np.linalg.norm(edge_vals, axis=1).max(axis=0)
    return np.maximum(n, e)


def _run_block(
    prep: _Prepared,
    grid: TimeGrid,
    block: np.ndarray,
    tol: float,
    max_order: int,
    keep_terms: bool,
) -> tuple[BlockSeriesResult, list[tuple[np.ndarray, np.ndarray]]]:
    """Core series loop in the rotated basis; block has shape (dim, m)."""
    kern = _GridKernels(grid, prep.energies)
    dim, m = block.shape
    p, q = grid.panels, grid.nodes_per_panel
    work = prep.to_working(block)
    supports = np.array([support_level(prep.space, work[:, c]) for c in range(m)])
    norms0 = np.linalg.norm(work, axis=0)
    dt = grid.duration
    b, c = prep.cert.grade_shift, prep.cert.rel_bound

    node_vals = np.broadcast_to(work, (p, q, dim, m)).astype(complex)
    edge_vals = np.broadcast_to(work, (p + 1, dim, m)).astype(complex)
    sums = edge_vals.copy()
    sup_norms = [norms0.copy()]
    bounds = [norms0.copy()]
    terms: list[tuple[np.ndarray, np.ndarray]] = []
    if keep_terms:
        terms.append((node_vals.copy(), edge_vals.copy()))

    order = 0
    while True:
        tails = np.array(
            [
                apriori_tail(order, dt, c, b, supports[col], norms0[col])
                for col in range(m)
            ]
        )
        if tails.max() < tol:
            break
        if order >= max_order:
            raise TruncationError(
                f"series tail {tails.max():.3e} still above tolerance {tol:.3e} "
                f"at order {max_order}",
                tail_bound=float(tails.max()),
                max_order=max_order,
            )
        g = kern.apply_interaction(prep.h_int_rot, node_vals)
        node_int, edge_int = kern.cumulative_integral(g)
        node_vals = -1j * node_int
        edge_vals = -1j * edge_int
        sums = sums + edge_vals
        order += 1
        sup_norms.append(_column_norms(node_vals, edge_vals))
        bounds.append(
            np.array(
                [
                    apriori_bound(order, dt, c, b, supports[col], norms0[col])
                    for col in range(m)
                ]
            )
        )
        if keep_terms:
            terms.append((node_vals.copy(), edge_vals.copy()))

    if prep.rotation is not None:
        sums = np.moveaxis(np.tensordot(prep.rotation, sums, axes=([1], [1])), 0, 1)
    result = BlockSeriesResult(
        boundary_sums=sums,
        achieved_order=order,
        tail_bounds=tails,
        per_order_sup_norms=np.array(sup_norms),
        per_order_bounds=np.array(bounds),
        supports_in=supports,
        cert=prep.cert,
        grid=grid,
    )
    return result, terms


def _rotate_terms(
    prep: _Prepared, terms: list[tuple[np.ndarray, np.ndarray]], grid: TimeGrid
) -> tuple[DysonTerm, ...]:
    out = []
    for n, (nodes, edges) in enumerate(terms):
        nv = nodes[..., 0]
        ev = edges[..., 0]
        if prep.rotation is not None:
            nv = np.tensordot(prep.rotation, nv, axes=([1], [2]))
            nv = np.moveaxis(nv, 0, 2)
            ev = (prep.rotation @ ev.T).T
        out.append(DysonTerm(n, grid, nv, ev))
    return tuple(out)


def evolve_block(
    h_free: LinOp,
    h_int: LinOp,
    block: np.ndarray,
    grid: TimeGrid,
    tol: float,
    max_order: int = DEFAULT_MAX_ORDER,
) -> BlockSeriesResult:
    """Apply the series propagator U(t_end, t_start) to a block of columns.

    Column support levels are tracked individually, so the certified tails
    are tight for basis columns of differing grades.
    """
    prep = _prepare(h_free, h_int)
    blk = np.asarray(block, dtype=complex)
    if blk.ndim == 1:
        blk = blk[:, None]
    result, _ = _run_block(prep, grid, blk, tol, max_order, keep_terms=False)
    return result


def evolve_vector(
    h_free: LinOp,
    h_int: LinOp,
    xi: np.ndarray,
    grid: TimeGrid,
    tol: float,
    max_order: int = DEFAULT_MAX_ORDER,
    estimate_quadrature: bool = True,
) -> SeriesResult:
    """Sum the series for U(t_end, t_start) xi to a certified tolerance.

    Raises TruncationError carrying the last tail bound when the certified
    tail cannot be brought below ``tol`` within ``max_order`` orders.  When
    ``estimate_quadrature`` is set, the sum is recomputed once on a grid with
    half the panels and the difference is reported.
    """
    prep = _prepare(h_free, h_int)
    vec = np.asarray(xi, dtype=complex).reshape(-1, 1)
    result, raw_terms = _run_block(prep, grid, vec, tol, max_order, keep_terms=True)
    estimate = None
    if estimate_quadrature and grid.panels > 1:
        coarse, _ = _run_block(
            prep, grid.coarsened(), vec, tol, max_order, keep_terms=False
        )
        estimate = float(np.linalg.norm(result.final() - coarse.final()))
    return SeriesResult(
        terms=_rotate_terms(prep, raw_terms, grid),
        partial_sum=result.final()[:, 0],
        achieved_order=result.achieved_order,
        tail_bound=result.tail_bound,
        quadrature_estimate=estimate,
        per_order_sup_norms=tuple(float(x) for x in result.per_order_sup_norms[:, 0]),
        boundary_sums=result.boundary_sums[:, :, 0],
        grid=grid,
        cert=result.cert,
        support_in=float(result.supports_in[0]),
    )


def evolve_adjoint(
    h_free: LinOp,
    h_int: LinOp,
    xi: np.ndarray,
    grid: TimeGrid,
    tol: float,
    max_order: int = DEFAULT_MAX_ORDER,
    estimate_quadrature: bool = True,
) -> SeriesResult:
    """Sum the adjoint series U(t_end, t_start)* xi.

    The adjoint solves the same recursion with the conjugate-transposed
    interaction and the roles of the two time arguments exchanged, so this
    is the forward engine on the reversed grid.
    """
    return evolve_vector(
        h_free,
        h_int.H,
        xi,
        grid.reversed(),
        tol,
        max_order=max_order,
        estimate_quadrature=estimate_quadrature,
    )


def dyson_step(
    prev: DysonTerm,
    h_free: LinOp,
    h_int: LinOp,
    grid: TimeGrid | None = None,
) -> DysonTerm:
    """One order of the recursion applied to a sampled term.

    The integrand is interpolated inside each panel by the polynomial
    through the panel's own nodes; panel sums accumulate across panels with
    signed orientation.
    """
    grid = grid or prev.grid
    if (grid.t_start, grid.t_end, grid.panels, grid.nodes_per_panel) != (
        prev.grid.t_start,
        prev.grid.t_end,
        prev.grid.panels,
        prev.grid.nodes_per_panel,
    ):
        raise ValueError("grid does not match the one the term was sampled on")
    prep = _prepare(h_free, h_int)
    kern = _GridKernels(grid, prep.energies)
    nodes = prev.node_values[..., None]
    if prep.rotation is not None:
        nodes = np.moveaxis(
            np.tensordot(prep.rotation.conj().T, nodes, axes=([1], [2])), 0, 2
        )
    g = kern.apply_interaction(prep.h_int_rot, nodes)
    node_int, edge_int = kern.cumulative_integral(g)
    nv = (-1j * node_int)[..., 0]
    ev = (-1j * edge_int)[..., 0]
    if prep.rotation is not None:
        nv = np.moveaxis(np.tensordot(prep.rotation, nv, axes=([1], [2])), 0, 2)
        ev = (prep.rotation @ ev.T).T
    return DysonTerm(prev.order + 1, grid, nv, ev)


def order_zero_term(xi: np.ndarray, grid: TimeGrid) -> DysonTerm:
    """The constant order-0 term equal to xi at every sample."""
    vec = np.asarray(xi, dtype=complex)
    p, q = grid.panels, grid.nodes_per_panel
    nodes = np.broadcast_to(vec, (p, q, vec.size)).copy()
    edges = np.broadcast_to(vec, (p + 1, vec.size)).copy()
    return DysonTerm(0, grid, nodes, edges)


def coupled_gap(h_free: LinOp, h_int: LinOp) -> float:
    """Largest free-energy gap across the support of the interaction.

    This is the fastest phase the rotated interaction can carry, which is
    what limits the panel width, not the size of the interaction itself.
    """
    prep = _prepare(h_free, h_int)
    mags = np.abs(prep.h_int_rot)
    top = mags.max()
    if top == 0.0:
        return 0.0
    rows, cols = np.nonzero(mags > 1e-14 * top)
    gaps = np.abs(prep.energies[rows] - prep.energies[cols])
    return float(gaps.max()) if gaps.size else 0.0


def default_grid(
    h_free: LinOp,
    h_int: LinOp,
    t_start: float,
    t_end: float,
    support: float,
    tol: float = 1e-10,
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL,
    max_order: int = DEFAULT_MAX_ORDER,
    panel_multiple: int = 1,
    max_panels: int = 4096,
) -> TimeGrid:
    """Panel count satisfying both width caps for the given run.

    The first cap keeps panels below PANEL_PRODUCT_FACTOR / (C * sqrt(L + N b
    + 1)) with N the order the tail needs at this tolerance; the second keeps
    the fastest coupled phase resolved.  ``panel_multiple`` rounds the count
    up to a multiple, which aligns panel edges with output times.
    """
    cert = certify(h_int)
    duration = abs(t_end - t_start)
    if duration == 0.0:
        return TimeGrid(t_start, t_end, panel_multiple, nodes_per_panel)
    order = 1
    while order < max_order and apriori_tail(
        order, duration, cert.rel_bound, cert.grade_shift, support, 1.0
    ) >= tol:
        order += 1
    reach = support + order * cert.grade_shift + 1.0
    width_caps = [duration]
    if cert.rel_bound > 0:
        width_caps.append(PANEL_PRODUCT_FACTOR / (cert.rel_bound * math.sqrt(reach)))
    gap = coupled_gap(h_free, h_int)
    if gap > 0:
        width_caps.append(PANEL_PHASE_FACTOR / gap)
    width = min(width_caps)
    panels = max(1, math.ceil(duration / width))
    panels = min(max_panels, panels)
    if panels % panel_multiple:
        panels += panel_multiple - panels % panel_multiple
    return TimeGrid(t_start, t_end, panels, nodes_per_panel)
