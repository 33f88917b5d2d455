"""Alternating Kruskal CSC: block-coordinate descent over modes and atoms.

One outer loop updates the activation factors of mode 1, ..., p (Gauss-Seidel,
freshest iterates), then the dictionary. The full-rank baseline runs the same
loop with a single dense activation block.
"""

import time
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import numpy.typing as npt
import pandas as pd
import structlog
from scipy import optimize

from krusco.exceptions import ConfigError, NumericalError
from krusco.model.kcsc import (
    ActivationSet,
    Dictionary,
    ObjectiveBreakdown,
    Penalty,
    objective,
    objective_dense,
)
from krusco.solvers.dense import solve_dense_activations
from krusco.solvers.dictionary import project_unit_ball, update_dictionary
from krusco.solvers.mode import alpha_max, build_mode_problem, solve_mode
from krusco.solvers.proximal import SolverBudget
from krusco.tensor.core import KruskalTensor, as_dense, unfold
from krusco.utils.logging import get_fit_logger

logger = structlog.get_logger(__name__)
fit_logger = get_fit_logger(__name__)

TRACE_COLUMNS = [
    "loop", "block", "objective", "residual", "l1", "ridge", "nnz", "seconds",
]
INIT_STRATEGIES = ("patches", "noise")
ACTIVATION_INITS = ("spectral", "random")
BALANCE_RULES = ("penalty", "unit")
SPECTRAL_RTOL = 1e-10  # singular values below this fraction of the largest are unused


@dataclass
class KcscConfig:
    """Configuration of one alternating fit"""
    n_atoms: int
    rank: int
    atom_shape: Tuple[int, ...]
    alpha: Tuple[float, ...]
    beta: Optional[Tuple[float, ...]] = None  # defaults to zeros
    outer_loops: int = 30
    outer_tol: float = 1e-6  # relative objective change over a full loop
    z_budget: SolverBudget = field(default_factory=SolverBudget)
    d_budget: SolverBudget = field(
        default_factory=lambda: SolverBudget(max_iter=200)
    )
    seed: int = 0
    baseline: bool = False
    baseline_alpha: Optional[float] = None  # defaults to alpha[0]
    update_dictionary: bool = True
    init: str = "patches"  # patches, noise
    pad: bool = True  # zero-pad Y before sampling patches
    act_init: str = "spectral"  # spectral, random
    balance: str = "penalty"  # penalty, unit
    n_starts: int = 1

    def __post_init__(self):
        self.atom_shape = tuple(int(w) for w in self.atom_shape)
        self.alpha = tuple(float(a) for a in self.alpha)
        if self.beta is None:
            self.beta = (0.0,) * len(self.atom_shape)
        self.beta = tuple(float(b) for b in self.beta)

        if self.n_atoms < 1:
            raise ConfigError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if not self.atom_shape or any(w < 1 for w in self.atom_shape):
            raise ConfigError(f"invalid atom shape {self.atom_shape}")
        order = len(self.atom_shape)
        if len(self.alpha) != order or len(self.beta) != order:
            raise ConfigError(
                f"alpha and beta need one entry per mode ({order}), "
                f"got {len(self.alpha)} and {len(self.beta)}"
            )
        if any(not np.isfinite(v) or v < 0 for v in self.alpha + self.beta):
            raise ConfigError(
                f"alpha and beta must be finite and >= 0: {self.alpha}, {self.beta}"
            )
        if self.baseline_alpha is not None and self.baseline_alpha < 0:
            raise ConfigError(
                f"baseline_alpha must be >= 0, got {self.baseline_alpha}"
            )
        if self.outer_loops < 1:
            raise ConfigError(f"outer_loops must be >= 1, got {self.outer_loops}")
        if self.outer_tol < 0:
            raise ConfigError(f"outer_tol must be >= 0, got {self.outer_tol}")
        if self.init not in INIT_STRATEGIES:
            raise ConfigError(
                f"init must be one of {INIT_STRATEGIES}, got {self.init!r}"
            )
        if self.act_init not in ACTIVATION_INITS:
            raise ConfigError(
                f"act_init must be one of {ACTIVATION_INITS}, got {self.act_init!r}"
            )
        if self.balance not in BALANCE_RULES:
            raise ConfigError(
                f"balance must be one of {BALANCE_RULES}, got {self.balance!r}"
            )
        if self.n_starts < 1:
            raise ConfigError(f"n_starts must be >= 1, got {self.n_starts}")

    @property
    def order(self) -> int:
        return len(self.atom_shape)

    @property
    def penalty(self) -> Penalty:
        return Penalty(self.alpha, self.beta)

    @property
    def dense_alpha(self) -> float:
        if self.baseline_alpha is None:
            return self.alpha[0]
        return float(self.baseline_alpha)

    def activation_shape(self, signal_shape: Sequence[int]) -> Tuple[int, ...]:
        self.validate_for(signal_shape)
        return tuple(n - w + 1 for n, w in zip(signal_shape, self.atom_shape))

    def validate_for(self, signal_shape: Sequence[int]) -> None:
        if len(signal_shape) != self.order:
            raise ConfigError(
                f"signal has order {len(signal_shape)}, atoms have order {self.order}"
            )
        if any(w > n for w, n in zip(self.atom_shape, signal_shape)):
            raise ConfigError(
                f"atom shape {self.atom_shape} does not fit "
                f"signal shape {tuple(signal_shape)}"
            )


@dataclass
class BlockRecord:
    loop: int
    block: str
    objective: float
    residual: float
    l1: float
    ridge: float
    nnz: int
    nnz_per_mode: Tuple[int, ...]
    seconds: float
    accepted: bool = True


@dataclass
class FitTrace:
    """Chronological record of every block update"""
    records: List[BlockRecord] = field(default_factory=list)
    initial_objective: float = float("nan")
    initial_alpha_max: List[float] = field(default_factory=list)
    init_positions: List[Tuple[int, ...]] = field(default_factory=list)
    loops_completed: int = 0
    stop_reason: str = ""
    model: str = "kcsc"
    start: int = 0  # index of the kept start
    start_objectives: List[float] = field(default_factory=list)

    def append(self, record: BlockRecord) -> None:
        if not np.isfinite(record.objective):
            raise NumericalError(
                "non-finite objective", loop=record.loop, block=record.block
            )
        self.records.append(record)

    def objectives(self) -> np.ndarray:
        return np.array([record.objective for record in self.records])

    @property
    def final_objective(self) -> float:
        if not self.records:
            return self.initial_objective
        return self.records[-1].objective

    @property
    def total_seconds(self) -> float:
        return float(sum(record.seconds for record in self.records))

    def to_frame(self) -> pd.DataFrame:
        """One row per block update with the stable trace.csv columns"""
        rows = [{column: getattr(record, column) for column in TRACE_COLUMNS}
                for record in self.records]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)

    def loop_totals(self) -> pd.DataFrame:
        """Per outer loop: final objective, block count, summed wall time"""
        frame = self.to_frame()
        if frame.empty:
            return pd.DataFrame(columns=["loop", "objective", "blocks", "seconds"])
        grouped = frame.groupby("loop", sort=True)
        return pd.DataFrame({
            "objective": grouped["objective"].last(),
            "blocks": grouped["block"].count(),
            "seconds": grouped["seconds"].sum(),
        }).reset_index()


class FitResult(NamedTuple):
    dictionary: Dictionary
    activations: Union[ActivationSet, np.ndarray]
    trace: FitTrace


def pad_signal(y: np.ndarray, atom_shape: Sequence[int]) -> np.ndarray:
    """Zero-pad every mode by w_l // 2 on both sides"""
    return np.pad(y, [(w // 2, w // 2) for w in atom_shape])


def patch_positions(signal_shape: Sequence[int],
                    cfg: KcscConfig) -> List[Tuple[int, ...]]:
    """Seeded corner positions of the K patches, in padded coordinates when cfg.pad"""
    shape = tuple(signal_shape)
    if cfg.pad:
        shape = tuple(n + 2 * (w // 2) for n, w in zip(shape, cfg.atom_shape))
    rng = np.random.default_rng([cfg.seed, 0])
    return [
        tuple(int(rng.integers(0, n - w + 1)) for n, w in zip(shape, cfg.atom_shape))
        for _ in range(cfg.n_atoms)
    ]


def init_dictionary(y: npt.ArrayLike, cfg: KcscConfig) -> Dictionary:
    """Random parts of the (zero-padded) signal, or white noise, in the unit ball.

    All-zero patches would stay zero for ever (their gradient vanishes) and
    are replaced by unit-norm Gaussian atoms.
    """
    y = as_dense(y, "signal")
    cfg.validate_for(y.shape)
    rng = np.random.default_rng([cfg.seed, 2])

    def noise_atom() -> np.ndarray:
        atom = rng.standard_normal(cfg.atom_shape)
        return atom / np.linalg.norm(atom)

    if cfg.init == "noise":
        return Dictionary(np.stack([noise_atom() for _ in range(cfg.n_atoms)]))

    source = pad_signal(y, cfg.atom_shape) if cfg.pad else y
    atoms = []
    for corner in patch_positions(y.shape, cfg):
        window = tuple(slice(c, c + w) for c, w in zip(corner, cfg.atom_shape))
        patch = source[window]
        atoms.append(project_unit_ball(patch) if np.any(patch) else noise_atom())
    return Dictionary(np.stack(atoms))


def init_activations(cfg: KcscConfig, act_shape: Sequence[int],
                     start: int = 0) -> ActivationSet:
    """Mode-1 factors at zero, other modes seeded Gaussian unit-norm columns"""
    rng = np.random.default_rng([cfg.seed, 1] if start == 0 else [cfg.seed, 1, start])
    entries = []
    for _ in range(cfg.n_atoms):
        factors = [np.zeros((act_shape[0], cfg.rank))]
        for extent in act_shape[1:]:
            factor = rng.standard_normal((extent, cfg.rank))
            factors.append(factor / np.linalg.norm(factor, axis=0, keepdims=True))
        entries.append(KruskalTensor(tuple(factors)))
    return ActivationSet(tuple(entries))


def spectral_activations(y: npt.ArrayLike, dictionary: Dictionary, cfg: KcscConfig,
                         act_shape: Sequence[int]) -> ActivationSet:
    """Modes 2..p from the leading singular vectors of a dense sparse-code estimate.

    The estimate is the full-rank lasso solution at `cfg.dense_alpha`. Each
    mode-l factor of atom k holds the top R left singular vectors of the
    mode-l unfolding of that atom's map. Columns the estimate cannot supply
    (R above the extent, vanishing singular values) keep the seeded Gaussian
    columns of `init_activations`. Mode-1 factors start at zero.
    """
    fallback = init_activations(cfg, act_shape)
    if cfg.order == 1:
        return fallback
    dense = solve_dense_activations(
        y, dictionary, cfg.dense_alpha, cfg.beta[0], budget=cfg.z_budget
    )
    entries = []
    for k, kt in enumerate(fallback):
        factors = [np.array(factor) for factor in kt.factors]
        for mode in range(1, cfg.order):
            u, s, _ = np.linalg.svd(unfold(dense[k], mode), full_matrices=False)
            n = min(cfg.rank, s.size)
            usable = np.flatnonzero(s[:n] > SPECTRAL_RTOL * s[0])
            factors[mode][:, usable] = u[:, usable]
        entries.append(KruskalTensor(tuple(factors)))
    logger.debug("Spectral initialization", dense_nnz=int(np.count_nonzero(dense)))
    return ActivationSet(tuple(entries))


def starting_activations(y: npt.ArrayLike, dictionary: Dictionary, cfg: KcscConfig,
                         act_shape: Sequence[int], start: int = 0) -> ActivationSet:
    """Start 0 follows cfg.act_init; later starts are reseeded random draws"""
    if start == 0 and cfg.act_init == "spectral":
        return spectral_activations(y, dictionary, cfg, act_shape)
    return init_activations(cfg, act_shape, start)


def _rebalanced_factors(kt: KruskalTensor) -> List[np.ndarray]:
    factors = [np.array(factor) for factor in kt.factors]
    for mode in range(1, len(factors)):
        norms = np.linalg.norm(factors[mode], axis=0)
        scale = np.where(norms > 0, norms, 1.0)
        factors[mode] /= scale
        factors[0] *= scale
    return factors


def rebalance(acts: ActivationSet) -> ActivationSet:
    """Unit-norm factor columns for modes 2..p, magnitudes folded into mode 1"""
    return ActivationSet(
        tuple(KruskalTensor(tuple(_rebalanced_factors(kt))) for kt in acts)
    )


def _term_penalty(factors: Sequence[np.ndarray], pen: Penalty) -> np.ndarray:
    """Penalty contribution of every rank-one term (one value per column)"""
    return sum(
        pen.alpha[mode] * np.abs(factor).sum(axis=0)
        + pen.beta[mode] * (factor ** 2).sum(axis=0)
        for mode, factor in enumerate(factors)
    )


def optimal_scales(l1: np.ndarray, ridge: np.ndarray) -> Optional[np.ndarray]:
    """Per-mode scales c with prod(c) = 1 minimising sum(l1 * c + ridge * c**2).

    `l1` and `ridge` hold the weighted penalty terms of one rank-one term,
    one entry per mode. Without ridge terms the minimiser equalises the
    l1 terms at their geometric mean. None when a mode carries no penalty
    (the infimum is not attained) or the term is zero.
    """
    if l1.size < 2 or np.any(l1 + ridge <= 0):
        return None
    if not np.any(ridge):
        return np.exp(np.mean(np.log(l1))) / l1

    def cost(u: np.ndarray) -> float:
        e = np.exp(np.append(u, -u.sum()))
        return float(l1 @ e + ridge @ e ** 2)

    def gradient(u: np.ndarray) -> np.ndarray:
        e = np.exp(np.append(u, -u.sum()))
        g = l1 * e + 2.0 * ridge * e ** 2
        return g[:-1] - g[-1]

    result = optimize.minimize(cost, np.zeros(l1.size - 1), jac=gradient,
                               method="BFGS")
    if not cost(result.x) < cost(np.zeros(l1.size - 1)):
        return None
    return np.exp(np.append(result.x, -result.x.sum()))


def _penalty_balanced_factors(kt: KruskalTensor, pen: Penalty) -> List[np.ndarray]:
    factors = [np.array(factor) for factor in kt.factors]
    l1 = np.stack([pen.alpha[mode] * np.abs(f).sum(axis=0)
                   for mode, f in enumerate(factors)])
    ridge = np.stack([pen.beta[mode] * (f ** 2).sum(axis=0)
                      for mode, f in enumerate(factors)])
    for r in range(kt.rank):
        scales = optimal_scales(l1[:, r], ridge[:, r])
        if scales is None:
            continue
        for mode, factor in enumerate(factors):
            factor[:, r] *= scales[mode]
    return factors


def _guarded(acts: ActivationSet, pen: Penalty,
             balancer: Callable[[KruskalTensor], List[np.ndarray]],
             ) -> Tuple[ActivationSet, List[Tuple[int, int]]]:
    entries = []
    kept: List[Tuple[int, int]] = []
    for k, kt in enumerate(acts):
        balanced = balancer(kt)
        worse = _term_penalty(balanced, pen) > _term_penalty(kt.factors, pen)
        for mode, factor in enumerate(balanced):
            factor[:, worse] = kt.factors[mode][:, worse]
        kept.extend((k, int(r)) for r in np.flatnonzero(worse))
        entries.append(KruskalTensor(tuple(balanced)))
    return ActivationSet(tuple(entries)), kept


def guarded_rebalance(acts: ActivationSet, pen: Penalty,
                      ) -> Tuple[ActivationSet, List[Tuple[int, int]]]:
    """Rebalance only the rank-one terms whose penalty does not grow.

    Returns the new set and the (k, r) terms left as they were.
    """
    return _guarded(acts, pen, _rebalanced_factors)


def penalty_balance(acts: ActivationSet, pen: Penalty,
                    ) -> Tuple[ActivationSet, List[Tuple[int, int]]]:
    """Rescale every rank-one term to its smallest penalty; the tensor is unchanged.

    Returns the new set and the (k, r) terms left as they were because
    rounding would have raised their penalty.
    """
    return _guarded(acts, pen, lambda kt: _penalty_balanced_factors(kt, pen))


BALANCERS = {"penalty": penalty_balance, "unit": guarded_rebalance}


class _Recorder:
    """Appends block records and applies the accept-if-not-worse rule"""

    def __init__(self, trace: FitTrace):
        self.trace = trace

    def record(self, loop: int, block: str, breakdown: ObjectiveBreakdown,
               nnz_per_mode: Tuple[int, ...], started: float, accepted: bool) -> None:
        seconds = time.perf_counter() - started
        record = BlockRecord(
            loop=loop,
            block=block,
            objective=breakdown.total,
            residual=breakdown.residual,
            l1=breakdown.l1,
            ridge=breakdown.ridge,
            nnz=int(sum(nnz_per_mode)),
            nnz_per_mode=tuple(nnz_per_mode),
            seconds=seconds,
            accepted=accepted,
        )
        self.trace.append(record)
        fit_logger.log_block_update(loop, block, record.objective, record.residual,
                                    record.nnz, seconds)


def _relative_change(before: float, after: float) -> float:
    return abs(before - after) / max(abs(before), np.finfo(float).tiny)


def _check_dictionary(dictionary: Dictionary, cfg: KcscConfig) -> None:
    if dictionary.n_atoms != cfg.n_atoms or dictionary.atom_shape != cfg.atom_shape:
        raise ConfigError(
            f"dictionary has {dictionary.n_atoms} atoms of shape "
            f"{dictionary.atom_shape}, configuration expects {cfg.n_atoms} "
            f"of shape {cfg.atom_shape}"
        )


def _check_activations(acts: ActivationSet, cfg: KcscConfig,
                       act_shape: Tuple[int, ...]) -> None:
    if acts.shape != act_shape or acts.rank != cfg.rank or acts.n_atoms != cfg.n_atoms:
        raise ConfigError(
            f"activations ({acts.n_atoms} x {acts.shape}, rank {acts.rank}) do not "
            f"match the configuration ({cfg.n_atoms} x {act_shape}, rank {cfg.rank})"
        )


def _alternate(y: np.ndarray, cfg: KcscConfig, dictionary: Dictionary,
               acts: ActivationSet, trace: FitTrace) -> FitResult:
    pen = cfg.penalty
    balancer = BALANCERS[cfg.balance]
    recorder = _Recorder(trace)
    current = objective(y, dictionary, acts, pen)
    trace.initial_objective = current.total
    logger.info("Fit started", model="kcsc", signal_shape=y.shape,
                n_atoms=cfg.n_atoms, rank=cfg.rank, atom_shape=cfg.atom_shape,
                start=trace.start, objective=current.total)

    trace.stop_reason = "max_loops"
    for loop in range(1, cfg.outer_loops + 1):
        loop_started = time.perf_counter()
        loop_start_objective = current.total

        for mode in range(cfg.order):
            block = f"Z{mode + 1}"
            started = time.perf_counter()
            problem = build_mode_problem(y, dictionary, acts, mode, pen)
            if loop == 1:
                trace.initial_alpha_max.append(alpha_max(problem))
            try:
                solution = solve_mode(problem, acts.mode_matrix(mode), cfg.z_budget)
            except NumericalError as exc:
                raise exc.with_context(loop=loop, block=block) from exc

            raw = acts.with_mode_matrix(mode, solution)
            balanced, kept = balancer(raw, pen)
            if kept:
                fit_logger.log_rebalance_rejected(loop, block, kept)

            accepted = False
            for candidate in (balanced, raw):
                breakdown = objective(y, dictionary, candidate, pen)
                if breakdown.total <= current.total:
                    acts, current, accepted = candidate, breakdown, True
                    break
            if not accepted:
                fit_logger.log_block_rejected(loop, block, current.total,
                                              breakdown.total)
            recorder.record(loop, block, current, acts.nnz_per_mode(), started,
                            accepted)

        if cfg.update_dictionary:
            started = time.perf_counter()
            try:
                candidate_dict = update_dictionary(y, dictionary, acts, cfg.d_budget)
            except NumericalError as exc:
                raise exc.with_context(loop=loop, block="D") from exc
            breakdown = objective(y, candidate_dict, acts, pen)
            accepted = breakdown.total <= current.total
            if accepted:
                dictionary, current = candidate_dict, breakdown
            else:
                fit_logger.log_block_rejected(loop, "D", current.total,
                                              breakdown.total)
            recorder.record(loop, "D", current, acts.nnz_per_mode(), started,
                            accepted)

        trace.loops_completed = loop
        change = _relative_change(loop_start_objective, current.total)
        fit_logger.log_outer_loop(loop, current.total, change, acts.nnz,
                                  time.perf_counter() - loop_started)
        if change <= cfg.outer_tol:
            trace.stop_reason = "converged"
            break

    fit_logger.log_converged(trace.loops_completed, current.total, trace.stop_reason)
    return FitResult(dictionary, acts, trace)


def fit(y: npt.ArrayLike, cfg: KcscConfig, dictionary: Optional[Dictionary] = None,
        activations: Optional[ActivationSet] = None) -> FitResult:
    """Alternate Z-blocks over modes 1..p and the D-step until convergence.

    With cfg.n_starts > 1 and no given activations the loop is run from
    several activation starts sharing the initial dictionary; the run with
    the lowest final objective is returned.
    """
    y = as_dense(y, "signal")
    act_shape = cfg.activation_shape(y.shape)
    init_positions: List[Tuple[int, ...]] = []
    if dictionary is None:
        dictionary = init_dictionary(y, cfg)
        if cfg.init == "patches":
            init_positions = patch_positions(y.shape, cfg)
    _check_dictionary(dictionary, cfg)
    if activations is not None:
        _check_activations(activations, cfg, act_shape)

    n_starts = 1 if activations is not None else cfg.n_starts
    best: Optional[FitResult] = None
    finals: List[float] = []
    for start in range(n_starts):
        if activations is not None:
            acts = activations
        else:
            acts = starting_activations(y, dictionary, cfg, act_shape, start)
            _check_activations(acts, cfg, act_shape)
        trace = FitTrace(model="kcsc", init_positions=list(init_positions),
                         start=start)
        result = _alternate(y, cfg, dictionary, acts, trace)
        finals.append(result.trace.final_objective)
        if best is None or finals[-1] < best.trace.final_objective:
            best = result

    assert best is not None
    best.trace.start_objectives = finals
    if n_starts > 1:
        logger.info("Best start selected", start=best.trace.start,
                    objective=best.trace.final_objective, objectives=finals)
    return best


def fit_baseline(y: npt.ArrayLike, cfg: KcscConfig,
                 dictionary: Optional[Dictionary] = None,
                 activations: Optional[npt.ArrayLike] = None) -> FitResult:
    """Same alternating scheme with dense activations (no rank constraint)"""
    y = as_dense(y, "signal")
    act_shape = cfg.activation_shape(y.shape)
    alpha, beta = cfg.dense_alpha, cfg.beta[0]
    trace = FitTrace(model="baseline")

    if dictionary is None:
        dictionary = init_dictionary(y, cfg)
        if cfg.init == "patches":
            trace.init_positions = patch_positions(y.shape, cfg)
    _check_dictionary(dictionary, cfg)
    full_shape = (cfg.n_atoms,) + act_shape
    if activations is None:
        acts = np.zeros(full_shape)
    else:
        acts = np.array(activations, dtype=np.float64)
    if acts.shape != full_shape:
        raise ConfigError(f"dense activations {acts.shape} != {full_shape}")

    recorder = _Recorder(trace)
    current = objective_dense(y, dictionary, acts, alpha, beta)
    trace.initial_objective = current.total
    logger.info("Fit started", model="baseline", signal_shape=y.shape,
                n_atoms=cfg.n_atoms, atom_shape=cfg.atom_shape,
                objective=current.total)

    trace.stop_reason = "max_loops"
    for loop in range(1, cfg.outer_loops + 1):
        loop_started = time.perf_counter()
        loop_start_objective = current.total

        started = time.perf_counter()
        try:
            candidate = solve_dense_activations(y, dictionary, alpha, beta, acts,
                                                cfg.z_budget)
        except NumericalError as exc:
            raise exc.with_context(loop=loop, block="Z") from exc
        breakdown = objective_dense(y, dictionary, candidate, alpha, beta)
        accepted = breakdown.total <= current.total
        if accepted:
            acts, current = candidate, breakdown
        else:
            fit_logger.log_block_rejected(loop, "Z", current.total, breakdown.total)
        recorder.record(loop, "Z", current, (int(np.count_nonzero(acts)),), started,
                        accepted)

        if cfg.update_dictionary:
            started = time.perf_counter()
            try:
                candidate_dict = update_dictionary(y, dictionary, acts, cfg.d_budget)
            except NumericalError as exc:
                raise exc.with_context(loop=loop, block="D") from exc
            breakdown = objective_dense(y, candidate_dict, acts, alpha, beta)
            accepted = breakdown.total <= current.total
            if accepted:
                dictionary, current = candidate_dict, breakdown
            else:
                fit_logger.log_block_rejected(loop, "D", current.total,
                                              breakdown.total)
            recorder.record(loop, "D", current, (int(np.count_nonzero(acts)),),
                            started, accepted)

        trace.loops_completed = loop
        change = _relative_change(loop_start_objective, current.total)
        fit_logger.log_outer_loop(loop, current.total, change,
                                  int(np.count_nonzero(acts)),
                                  time.perf_counter() - loop_started)
        if change <= cfg.outer_tol:
            trace.stop_reason = "converged"
            break

    fit_logger.log_converged(trace.loops_completed, current.total, trace.stop_reason)
    return FitResult(dictionary, acts, trace)


def config_summary(cfg: KcscConfig) -> Dict[str, Any]:
    """JSON-friendly view of a configuration, used in manifests and metrics"""
    return {
        "n_atoms": cfg.n_atoms,
        "rank": cfg.rank,
        "atom_shape": list(cfg.atom_shape),
        "alpha": list(cfg.alpha),
        "beta": list(cfg.beta),
        "outer_loops": cfg.outer_loops,
        "outer_tol": cfg.outer_tol,
        "z_max_iter": cfg.z_budget.max_iter,
        "d_max_iter": cfg.d_budget.max_iter,
        "seed": cfg.seed,
        "baseline": cfg.baseline,
        "baseline_alpha": cfg.dense_alpha,
        "update_dictionary": cfg.update_dictionary,
        "init": cfg.init,
        "pad": cfg.pad,
        "act_init": cfg.act_init,
        "balance": cfg.balance,
        "n_starts": cfg.n_starts,
    }


def fit_model(y: npt.ArrayLike, cfg: KcscConfig,
              dictionary: Optional[Dictionary] = None) -> FitResult:
    """`fit_baseline` when cfg.baseline is set, `fit` otherwise"""
    if cfg.baseline:
        return fit_baseline(y, cfg, dictionary)
    return fit(y, cfg, dictionary)
