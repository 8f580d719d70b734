"""Batch front door: run evolutions, verification suites, and model demos.

Usage:

    dysonprop evolve CONFIG.json [--tol X] [--t-end T] [--seed N] [--out DIR]
    dysonprop heisenberg CONFIG.json [...]
    dysonprop verify [CONFIG.json] [...]
    dysonprop qed-demo [CONFIG.json] [...]
    dysonprop convergence [CONFIG.json] [...]

The config is a single JSON object.  Recognised fields by command (unknown
fields are rejected so typos fail loudly):

    all:          command, out_dir, tol, seed
    evolve:       model*, t_end, steps, max_order, initial_state
    heisenberg:   model*, observable*, t_end, steps, max_order, pairs
    verify:       count, tuples, series_tol
    qed-demo:     model, t_end, steps, pairs, series_tol
    convergence:  model, t_end, n_max, alphas, initial_state

Starred fields are required.  ``model`` is one of: the string
"qed-default"; a path to a JSON file holding a model document; an object
{"qed": {...}} with a photon/electron lattice config; or an object
{"h_free": {...}, "h_int": {...}} with two dense operators in the
{"dim", "grades", "matrix"} wire format.  ``initial_state`` is either
{"basis_index": n} or an explicit vector [[re, im], ...].

Exit status: 0 all checks passed and no truncation, 1 a check failed,
2 config/schema problem, 3 violated model assumption, 4 certified tail
above tolerance.  Every artifact embeds the digest of the fully resolved
config and the library version, and the JSON artifacts carry the resolved
config itself under "config" (with file-based models inlined); identical
config and seed give byte-identical JSON.  ``out_dir`` is deliberately
excluded from the resolved config, so redirecting output does not change
the digest.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyson import default_grid, evolve_vector
from .errors import AssumptionViolation, TruncationError
from .evolution import (
    ObservableTrack,
    heisenberg_pairing_track,
    heisenberg_residuals,
    heisenberg_track,
    schrodinger_trajectory,
    weak_residual,
)
from .graded import (
    LinOp,
    random_vector,
    support_level,
    vectors_supported_below,
    verify_dynamics_assumptions,
    verify_observable_assumptions,
)
from .oracles import Report, oracle_propagator
from .qed import QedConfig, build_model, default_toy_config, eta_unitarity_check, structure_reports
from .reporting import (
    config_digest,
    convergence_rows,
    reports_document,
    series_order_rows,
    summary_lines,
    trajectory_rows,
    write_csv,
    write_json,
    write_junit,
)
from .suite import appendix_convergence, fleet, fleet_verification

DENSE_TRACK_LIMIT = 128
RESIDUAL_RATIO_SLACK = 1.2  # |ratio - 4| allowed for the h -> h/2 order check


class ConfigError(Exception):
    """Config document rejected; the message carries field or line info."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description; ``doc`` is what the digest covers."""

    command: str
    model_kind: str | None      # "pair" | "qed" | None
    model_payload: object       # (h_free, h_int) or QedConfig or None
    observable_doc: object
    initial_state: object
    t_end: float
    steps: int
    tol: float
    series_tol: float
    seed: int
    max_order: int
    pairs: int
    tuples: int
    count: int
    n_max: int
    alphas: tuple[float, ...]
    out_dir: Path
    doc: dict
    digest: str


_COMMANDS = ("evolve", "heisenberg", "verify", "qed-demo", "convergence")

_ALLOWED = {
    "evolve": {"command", "out_dir", "tol", "seed", "model", "t_end", "steps",
               "max_order", "initial_state"},
    "heisenberg": {"command", "out_dir", "tol", "seed", "model", "observable",
                   "t_end", "steps", "max_order", "pairs"},
    "verify": {"command", "out_dir", "tol", "seed", "count", "tuples",
               "series_tol"},
    "qed-demo": {"command", "out_dir", "tol", "seed", "model", "t_end",
                 "steps", "pairs", "series_tol"},
    "convergence": {"command", "out_dir", "tol", "seed", "model", "t_end",
                    "n_max", "alphas", "initial_state"},
}

_TOL_DEFAULT = {
    "evolve": 1e-10,
    "heisenberg": 1e-10,
    "verify": 1e-7,
    "qed-demo": 1e-6,
    "convergence": 1e-10,
}
_SERIES_TOL_DEFAULT = {"verify": 1e-10, "qed-demo": 1e-9}
_PAIRS_DEFAULT = {"heisenberg": 20, "qed-demo": 50}
_STEPS_DEFAULT = {"evolve": 200, "heisenberg": 200, "qed-demo": 64}


def _load_config_file(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"{path}: invalid JSON at line {err.lineno} column {err.colno}: "
            f"{err.msg}"
        ) from err
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: the config must be a JSON object")
    return doc


def _number(doc: dict, field: str, default, *, integer=False, minimum=None):
    value = doc.get(field, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{field}': expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"field '{field}': expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"field '{field}': must be >= {minimum}, got {value!r}")
    return value


def _resolve_model(doc, base_dir: Path, depth: int = 0):
    """Return (kind, payload, inline_doc) for a model document.

    The inline form is what enters the digest, so a model loaded from a
    separate file is digested by content, not by path.
    """
    if isinstance(doc, str):
        if doc == "qed-default":
            cfg = default_toy_config()
            return "qed", cfg, {"qed": cfg.to_json()}
        if depth > 0:
            raise ConfigError("field 'model': nested file indirection is not allowed")
        path = base_dir / doc
        if not path.exists():
            raise ConfigError(f"field 'model': referenced path {doc} does not exist")
        return _resolve_model(_load_config_file(path), path.parent, depth + 1)
    if isinstance(doc, dict) and "qed" in doc:
        extra = sorted(set(doc) - {"qed"})
        if extra:
            raise ConfigError(f"field 'model': unknown keys next to 'qed': {extra}")
        try:
            cfg = QedConfig.from_json(doc["qed"])
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"field 'model.qed': {err}") from err
        return "qed", cfg, {"qed": cfg.to_json()}
    if isinstance(doc, dict) and "h_free" in doc and "h_int" in doc:
        extra = sorted(set(doc) - {"h_free", "h_int"})
        if extra:
            raise ConfigError(f"field 'model': unknown keys: {extra}")
        try:
            h_free = LinOp.from_json(doc["h_free"])
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"field 'model.h_free': {err}") from err
        try:
            h_int = LinOp.from_json(doc["h_int"])
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"field 'model.h_int': {err}") from err
        if h_free.space != h_int.space:
            raise ConfigError(
                "field 'model': h_free and h_int live on different graded spaces"
            )
        return "pair", (h_free, h_int), {"h_free": h_free.to_json(),
                                         "h_int": h_int.to_json()}
    raise ConfigError(
        "field 'model': expected 'qed-default', a file path, {'qed': ...}, "
        "or {'h_free': ..., 'h_int': ...}"
    )


def _check_initial_state(doc):
    if isinstance(doc, dict):
        extra = sorted(set(doc) - {"basis_index"})
        if extra:
            raise ConfigError(f"field 'initial_state': unknown keys: {extra}")
        idx = doc.get("basis_index")
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise ConfigError(
                "field 'initial_state.basis_index': expected a non-negative integer"
            )
        return {"basis_index": idx}
    if isinstance(doc, list):
        out = []
        for k, pair in enumerate(doc):
            if (not isinstance(pair, list) or len(pair) != 2
                    or any(isinstance(v, bool) or not isinstance(v, (int, float))
                           for v in pair)):
                raise ConfigError(
                    f"field 'initial_state[{k}]': expected [re, im]"
                )
            out.append([float(pair[0]), float(pair[1])])
        if not out:
            raise ConfigError("field 'initial_state': empty vector")
        return out
    raise ConfigError(
        "field 'initial_state': expected {'basis_index': n} or [[re, im], ...]"
    )


def assemble(command: str, doc: dict, base_dir: Path, overrides: dict) -> RunConfig:
    """Validate one config document and freeze the effective run description."""
    if command not in _COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    doc = dict(doc)
    declared = doc.pop("command", command)
    if declared != command:
        raise ConfigError(
            f"field 'command': config says {declared!r} but the subcommand "
            f"is {command!r}"
        )
    allowed = _ALLOWED[command]
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown field(s) for {command}: {', '.join(unknown)}"
        )
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value

    tol = _number(doc, "tol", _TOL_DEFAULT[command], minimum=0.0)
    if tol == 0.0:
        raise ConfigError("field 'tol': must be positive")
    series_tol = _number(doc, "series_tol", _SERIES_TOL_DEFAULT.get(command),
                         minimum=0.0)
    seed = _number(doc, "seed", 2026, integer=True, minimum=0)
    t_end = _number(doc, "t_end", 1.0)
    if t_end == 0.0:
        raise ConfigError("field 't_end': must be non-zero")
    steps = _number(doc, "steps", _STEPS_DEFAULT.get(command, 200),
                    integer=True, minimum=4)
    if command == "heisenberg" and steps % 2 != 0:
        raise ConfigError(
            "field 'steps': the step-halving residual check needs an even count"
        )
    max_order = _number(doc, "max_order", 64, integer=True, minimum=1)
    pairs = _number(doc, "pairs", _PAIRS_DEFAULT.get(command, 20),
                    integer=True, minimum=1)
    tuples = _number(doc, "tuples", 10, integer=True, minimum=1)
    count = _number(doc, "count", 20, integer=True, minimum=1)
    n_max = _number(doc, "n_max", 12, integer=True, minimum=2)

    alphas_doc = doc.get("alphas", [0.0, 1.0, 2.0])
    if (not isinstance(alphas_doc, list) or not alphas_doc
            or any(isinstance(a, bool) or not isinstance(a, (int, float))
                   or a < 0 for a in alphas_doc)):
        raise ConfigError(
            "field 'alphas': expected a non-empty list of non-negative numbers"
        )
    alphas = tuple(float(a) for a in alphas_doc)

    out_dir = doc.get("out_dir", ".")
    if not isinstance(out_dir, str):
        raise ConfigError("field 'out_dir': expected a string path")

    model_doc = doc.get("model")
    model_kind = None
    model_payload = None
    model_inline = None
    if command in ("evolve", "heisenberg") and model_doc is None:
        raise ConfigError(f"field 'model': required for {command}")
    if command == "qed-demo" and model_doc is None:
        model_doc = "qed-default"
    if command == "convergence" and model_doc is None:
        boosted = dataclasses.replace(default_toy_config(), coupling=4.0)
        model_kind, model_payload = "qed", boosted
        model_inline = {"qed": boosted.to_json()}
    if model_doc is not None:
        model_kind, model_payload, model_inline = _resolve_model(model_doc, base_dir)
    if command == "qed-demo" and model_kind != "qed":
        raise ConfigError("field 'model': qed-demo needs a photon/electron model")

    observable_doc = doc.get("observable")
    if command == "heisenberg":
        if observable_doc is None:
            raise ConfigError("field 'observable': required for heisenberg")
        try:
            observable_doc = LinOp.from_json(observable_doc).to_json()
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"field 'observable': {err}") from err

    initial_state = doc.get("initial_state", {"basis_index": 0})
    initial_state = _check_initial_state(initial_state)

    # out_dir identifies where files land, not what is computed, so it stays
    # out of the digested document: redirecting output keeps the digest.
    effective = {"command": command, "tol": tol, "seed": seed}
    if model_inline is not None:
        effective["model"] = model_inline
    if command in ("evolve", "heisenberg"):
        effective.update(t_end=t_end, steps=steps, max_order=max_order)
    if command == "evolve":
        effective["initial_state"] = initial_state
    if command == "heisenberg":
        effective.update(observable=observable_doc, pairs=pairs)
    if command == "verify":
        effective.update(count=count, tuples=tuples, series_tol=series_tol)
    if command == "qed-demo":
        effective.update(t_end=t_end, steps=steps, pairs=pairs,
                         series_tol=series_tol)
    if command == "convergence":
        effective.update(t_end=t_end, n_max=n_max, alphas=list(alphas),
                         initial_state=initial_state)

    return RunConfig(
        command=command,
        model_kind=model_kind,
        model_payload=model_payload,
        observable_doc=observable_doc,
        initial_state=initial_state,
        t_end=t_end,
        steps=steps,
        tol=tol,
        series_tol=series_tol if series_tol is not None else tol,
        seed=seed,
        max_order=max_order,
        pairs=pairs,
        tuples=tuples,
        count=count,
        n_max=n_max,
        alphas=alphas,
        out_dir=Path(out_dir),
        doc=effective,
        digest=config_digest(effective),
    )


def _model_operators(cfg: RunConfig):
    if cfg.model_kind == "pair":
        return cfg.model_payload
    model = build_model(cfg.model_payload)
    return model.h_free, model.h_int


def _initial_vector(cfg: RunConfig, dim: int) -> np.ndarray:
    state = cfg.initial_state
    if isinstance(state, dict):
        idx = state["basis_index"]
        if idx >= dim:
            raise ConfigError(
                f"field 'initial_state.basis_index': {idx} out of range for "
                f"dimension {dim}"
            )
        vec = np.zeros(dim, dtype=complex)
        vec[idx] = 1.0
        return vec
    if len(state) != dim:
        raise ConfigError(
            f"field 'initial_state': length {len(state)} does not match "
            f"dimension {dim}"
        )
    return np.array([complex(re, im) for re, im in state])


def _difference_floor(h_norm: float, scale: float) -> float:
    return 1e-12 * (1.0 + h_norm * scale)


def _ratio_report(name: str, fine: float, coarse: float, floor: float,
                  context: dict) -> Report:
    """Grade the h -> h/2 central-difference decay against the exact 4."""
    ctx = dict(context)
    ctx.update(fine_residual=fine, coarse_residual=coarse, floor=floor)
    if fine <= floor:
        ctx["note"] = "residuals at the rounding floor; order check vacuous"
        return Report(name, 0.0, RESIDUAL_RATIO_SLACK, ctx)
    ratio = coarse / fine
    ctx["ratio"] = ratio
    return Report(name, abs(ratio - 4.0), RESIDUAL_RATIO_SLACK, ctx)


# -- command pipelines --------------------------------------------------------


def _run_evolve(cfg: RunConfig) -> list[Report]:
    h_free, h_int = _model_operators(cfg)
    verify_dynamics_assumptions(h_free, h_int)
    xi = _initial_vector(cfg, h_free.space.dim)
    traj = schrodinger_trajectory(h_free, h_int, xi, cfg.t_end, cfg.steps,
                                  cfg.tol, max_order=cfg.max_order)
    series = traj.series

    dt = abs(cfg.t_end) / cfg.steps
    h_norm = (h_free + h_int).norm2()
    defect = float(np.nanmax(traj.residuals)) if cfg.steps >= 2 else 0.0
    defect_tol = max(1e-9, 50.0 * dt * dt * (h_norm ** 3) / 6.0
                     * float(np.linalg.norm(xi)))
    reports = [Report(
        "schrodinger-defect-scale", defect, defect_tol,
        {"dt": dt, "h_norm": h_norm},
    )]

    sups = series.per_order_sup_norms.max(axis=1)
    final_u = series.boundary_sums[-1][:, 0]
    final_state = traj.states[-1][:, 0]
    doc = {
        "command": "evolve",
        "config": cfg.doc,
        "t_end": cfg.t_end,
        "steps": cfg.steps,
        "series": {
            "achieved_order": series.achieved_order,
            "tail_bound": series.tail_bound,
            "per_order_sup_norms": [float(x) for x in sups],
            "result": [[float(z.real), float(z.imag)] for z in final_u],
        },
        "final_state": [[float(z.real), float(z.imag)] for z in final_state],
    }
    doc.update(reports_document(reports))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out_dir / "evolve.json", doc, cfg.digest)
    write_csv(cfg.out_dir / "trajectory.csv", ["time", "norm", "residual"],
              trajectory_rows(traj, traj.residuals), cfg.digest)
    write_csv(cfg.out_dir / "orders.csv", ["order", "sup_norm", "apriori_bound"],
              series_order_rows(series), cfg.digest)
    print(f"wrote {cfg.out_dir / 'evolve.json'}, trajectory.csv, orders.csv")
    print(f"achieved order {series.achieved_order}, tail bound "
          f"{series.tail_bound:.3e}")
    return reports


def _run_heisenberg(cfg: RunConfig) -> list[Report]:
    h_free, h_int = _model_operators(cfg)
    dim = h_free.space.dim
    if dim > DENSE_TRACK_LIMIT:
        raise ConfigError(
            f"field 'model': dimension {dim} exceeds the dense observable-track "
            f"limit {DENSE_TRACK_LIMIT}"
        )
    verify_dynamics_assumptions(h_free, h_int)
    observable = LinOp.from_json(cfg.observable_doc)
    if observable.space != h_free.space:
        raise ConfigError(
            "field 'observable': graded space does not match the model"
        )
    verify_observable_assumptions(h_free, observable)

    track = heisenberg_track(h_free, h_int, observable, cfg.t_end, cfg.steps,
                             cfg.tol, max_order=cfg.max_order)
    h_total = h_free + h_int
    strong = heisenberg_residuals(track, h_total, mode="strong")
    weak = heisenberg_residuals(track, h_total, mode="weak", pairs=cfg.pairs,
                                seed=cfg.seed)
    coarse_track = ObservableTrack(track.times[::2], track.matrices[::2],
                                   observable)
    strong_coarse = heisenberg_residuals(coarse_track, h_total, mode="strong")

    b_norm = observable.norm2()
    floor = _difference_floor(h_total.norm2(), b_norm)
    init_defect = float(np.linalg.norm(track.matrices[0] - observable.matrix, 2))
    reports = [
        Report("heisenberg-initial-value", init_defect, 0.0, {}),
        _ratio_report(
            "heisenberg-residual-order", float(strong.max()),
            float(strong_coarse.max()), floor,
            {"dt": float(track.times[1] - track.times[0])},
        ),
    ]

    rows = []
    for k, t in enumerate(track.times):
        res = strong[k - 1] if 0 < k < len(track.times) - 1 else None
        rows.append((float(t), float(np.linalg.norm(track.matrices[k], 2)), res))
    doc = {
        "command": "heisenberg",
        "config": cfg.doc,
        "t_end": cfg.t_end,
        "steps": cfg.steps,
        "max_strong_residual": float(strong.max()),
        "max_weak_residual": float(weak.max()),
    }
    doc.update(reports_document(reports))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out_dir / "heisenberg.json", doc, cfg.digest)
    write_csv(cfg.out_dir / "heisenberg.csv",
              ["time", "observable_norm", "strong_residual"], rows, cfg.digest)
    print(f"wrote {cfg.out_dir / 'heisenberg.json'}, heisenberg.csv")
    return reports


def _run_verify(cfg: RunConfig) -> list[Report]:
    models = fleet(seed=cfg.seed, count=cfg.count)
    reports = fleet_verification(models, seed=cfg.seed, tuples=cfg.tuples,
                                 tol=cfg.tol, series_tol=cfg.series_tol)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": "verify", "config": cfg.doc}
    doc.update(reports_document(reports))
    write_json(cfg.out_dir / "verify.json", doc, cfg.digest)
    write_junit(cfg.out_dir / "verify.xml", "verify", reports, cfg.digest)
    for line in summary_lines(reports):
        print(line)
    failed = sum(0 if r.passed else 1 for r in reports)
    print(f"{len(reports)} checks over {len(models)} models, {failed} failed")
    print(f"wrote {cfg.out_dir / 'verify.json'}, verify.xml")
    return reports


def _run_qed_demo(cfg: RunConfig) -> list[Report]:
    model = build_model(cfg.model_payload)
    reports = structure_reports(model, seed=cfg.seed)
    reports.extend(eta_unitarity_check(
        model, pairs=cfg.pairs, tol=cfg.tol, series_tol=cfg.series_tol,
        seed=cfg.seed + 11,
    ))

    h_free, h_int = model.h_free, model.h_int
    cap = model.config.photon_cap
    rng = np.random.default_rng(cfg.seed + 5)
    level = max(0, cap - 2)
    etas = vectors_supported_below(rng, model.space, level, 8)
    xis = vectors_supported_below(rng, model.space, level, 8)
    observable = model.photon_field(1, (0.0, 0.0, 0.0))
    track = heisenberg_pairing_track(
        h_free, h_int, observable, etas, xis, cfg.t_end, cfg.steps,
        cfg.series_tol,
    )
    fine = weak_residual(track, h_free, h_int, observable, stride=1)
    coarse = weak_residual(track, h_free, h_int, observable, stride=2)
    floor = _difference_floor((h_free + h_int).norm2(), observable.norm2())
    reports.append(_ratio_report(
        "weak-residual-order", fine["max_residual"], coarse["max_residual"],
        floor, {"dt": fine["dt"], "observable": "photon field mu=1 at x=0"},
    ))

    t_mid = cfg.t_end / 2.0
    xi = random_vector(rng, model.space.dim)
    oracle_u = oracle_propagator(h_free, h_int, t_mid, 0.0)
    grid = default_grid(h_free, h_int, 0.0, t_mid,
                        support=support_level(model.space, xi),
                        tol=cfg.series_tol)
    series = evolve_vector(h_free, h_int, xi, grid, cfg.series_tol,
                           estimate_quadrature=False)
    cross = float(np.linalg.norm(series.partial_sum - oracle_u @ xi))
    reports.append(Report("oracle-cross-check", cross, 1e-7,
                          {"time": t_mid, "dim": model.space.dim}))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": "qed-demo", "config": cfg.doc, "dim": model.space.dim,
           "constants": model.constants}
    doc.update(reports_document(reports))
    write_json(cfg.out_dir / "qed_demo.json", doc, cfg.digest)
    write_junit(cfg.out_dir / "qed_demo.xml", "qed-demo", reports, cfg.digest)
    rows = [(float(t), float(r)) for t, r
            in zip(fine["interior_times"], fine["per_time"])]
    write_csv(cfg.out_dir / "qed_demo.csv", ["time", "weak_residual"], rows,
              cfg.digest)
    for line in summary_lines(reports):
        print(line)
    print(f"wrote {cfg.out_dir / 'qed_demo.json'}, qed_demo.xml, qed_demo.csv")
    return reports


def _run_convergence(cfg: RunConfig) -> list[Report]:
    h_free, h_int = _model_operators(cfg)
    verify_dynamics_assumptions(h_free, h_int)
    xi = _initial_vector(cfg, h_free.space.dim)
    table = appendix_convergence(h_free, h_int, xi, alphas=cfg.alphas,
                                 n_max=cfg.n_max, t_end=cfg.t_end)

    ok, worst = table.dominated()
    onsets = [table.onset(a) for a in range(len(cfg.alphas))]
    scale = float(table.norms.max()) if table.norms.size else 0.0
    mono = 0.0
    for a in range(len(cfg.alphas) - 1):
        if cfg.alphas[a] <= cfg.alphas[a + 1]:
            mono = max(mono, float(
                (table.norms[:, a] - table.norms[:, a + 1]).max()
            ))
    reports = [
        Report("tail-domination", max(0.0, worst - 1.0), 1e-3,
               {"worst_ratio": worst}),
        Report("convergence-onset", float(max(onsets)), float(cfg.n_max - 3),
               {"onsets": onsets}),
        Report("alpha-monotonicity", mono, 1e-12 * max(scale, 1.0), {}),
    ]

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": "convergence", "config": cfg.doc, "t_end": cfg.t_end,
           "table": table.to_json()}
    doc.update(reports_document(reports))
    write_json(cfg.out_dir / "convergence.json", doc, cfg.digest)
    header, rows = convergence_rows(table)
    write_csv(cfg.out_dir / "convergence.csv", header, rows, cfg.digest)
    for line in summary_lines(reports):
        print(line)
    print(f"wrote {cfg.out_dir / 'convergence.json'}, convergence.csv")
    return reports


_PIPELINES = {
    "evolve": _run_evolve,
    "heisenberg": _run_heisenberg,
    "verify": _run_verify,
    "qed-demo": _run_qed_demo,
    "convergence": _run_convergence,
}


def run(cfg: RunConfig) -> int:
    """Execute one pipeline; returns the process exit status."""
    try:
        reports = _PIPELINES[cfg.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except AssumptionViolation as err:
        print(f"assumption violated ({err.code}): {err}", file=sys.stderr)
        return 3
    except TruncationError as err:
        print(
            f"truncation failure: {err} (last tail bound {err.tail_bound:.6e})",
            file=sys.stderr,
        )
        return 4
    return 0 if all(r.passed for r in reports) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dysonprop",
        description="certified time-ordered series propagators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", default=None,
                       help="JSON config path (optional for suite commands)")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--t-end", type=float, default=None, dest="t_end")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None,
                       help="output directory (overrides out_dir)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            path = Path(args.config)
            doc = _load_config_file(path)
            base_dir = path.parent
        else:
            doc = {}
            base_dir = Path(".")
            if args.command in ("evolve", "heisenberg"):
                raise ConfigError(f"{args.command} needs a config file")
        overrides = {"tol": args.tol, "t_end": args.t_end, "seed": args.seed,
                     "out_dir": args.out}
        cfg = assemble(args.command, doc, base_dir, overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
