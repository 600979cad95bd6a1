# src/solver.py

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional
import logging
import math

import numpy as np

from .besov import besov_norm
from .config import SimConfig
from .diagnostics import DiagnosticsRecord, DiagnosticsRecorder
from .errors import BlowUpError, ConfigurationError, ParameterError
from .field import PHYSICAL, SPECTRAL, QField, dealias, forward_transform, gradient, inverse_transform, leray_project
from .forcing import forcing_eval
from .littlewood_paley import FilterBank, build_filter_bank
from .quaternion import basis_array, hamilton_mul_arrays
from .state import SolverState

logger = logging.getLogger(__name__)

COMPLETED = "completed"
BLOW_UP = "blow_up"
NON_CONTRACTION_RUN = 3


def heat_semigroup(f: QField, t: float, nu: float) -> QField:
    """
    Exact heat flow e^{t nu Laplacian}: each mode decays by exp(-nu t |xi|^2).

    Args:
        f (QField): Field in either representation.
        t (float): Elapsed time, >= 0.
        nu (float): Viscosity, > 0.

    Returns:
        QField: The evolved field, in f's representation.

    Raises:
        ParameterError: If t < 0 or nu <= 0.
    """
    if not t >= 0:
        raise ParameterError(f"heat semigroup time must be >= 0, got {t}")
    if not nu > 0:
        raise ParameterError(f"viscosity must be > 0, got {nu}")
    spec = f.to_spectral()
    out = QField(f.grid, SPECTRAL, spec.data * np.exp(-nu * t * f.grid.xi_squared))
    if f.repr == PHYSICAL:
        return inverse_transform(out, check_symmetry=False)
    return out


def nonlinear_term(q_hat: QField, mode: str = "advective") -> QField:
    """
    Dealiased quadratic term of the momentum equation.

    advective: -(u . grad) q with u the first n imaginary components.
    hamilton: 1/2 sum_m [(q e_m) d_m q + d_m q (e_m q)] with e_m = i, j, k.

    Args:
        q_hat (QField): Spectral field.
        mode (str): "advective" or "hamilton".

    Returns:
        QField: Spectral nonlinear term.
    """
    q_hat.require(SPECTRAL)
    grid = q_hat.grid
    n = grid.dim
    q = inverse_transform(q_hat, check_symmetry=False).data
    derivs = [inverse_transform(d, check_symmetry=False).data for d in gradient(q_hat)]

    if mode == "advective":
        out = -sum(q[1 + m] * derivs[m] for m in range(n))
    elif mode == "hamilton":
        out = np.zeros_like(q)
        for m in range(n):
            e = basis_array(1 + m, grid.sizes)
            left = hamilton_mul_arrays(hamilton_mul_arrays(q, e), derivs[m])
            right = hamilton_mul_arrays(derivs[m], hamilton_mul_arrays(e, q))
            out += 0.5 * (left + right)
    else:
        raise ParameterError(f"unknown nonlinearity mode '{mode}'")
    return dealias(forward_transform(QField(grid, PHYSICAL, out)))


def _rhs(q_hat: QField, t: float, cfg: SimConfig) -> QField:
    total = forcing_eval(cfg.forcing, t, cfg.grid)
    if not cfg.linear_only:
        total = total + nonlinear_term(q_hat, cfg.nonlinearity_mode)
    return dealias(leray_project(total))


def _ingest(cfg: SimConfig, q0: QField) -> QField:
    if q0.grid != cfg.grid:
        raise ConfigurationError(
            f"initial field grid {list(q0.grid.sizes)} does not match configured grid {list(cfg.grid.sizes)}",
            keys=["grid.sizes"],
        )
    return dealias(leray_project(q0.to_spectral()))


def time_grid(cfg: SimConfig) -> List[float]:
    """
    Step times 0, dt, 2 dt, ..., ending exactly at t_end.
    """
    n_steps = cfg.n_steps
    return [0.0] + [cfg.t_end if n == n_steps else n * cfg.dt for n in range(1, n_steps + 1)]


def step(
    state: SolverState,
    cfg: SimConfig,
    dt: Optional[float] = None,
    bank: Optional[FilterBank] = None,
) -> SolverState:
    """
    Advances one step of the Duhamel formula with an integrating-factor Heun scheme.

    With E = heat_semigroup(dt) and G(q, t) = P D[N(q) + f(t)]:
    a = E (q + dt G(q, t)), q_next = E q + dt/2 (E G(q, t) + G(a, t + dt)).

    Args:
        state (SolverState): Current state.
        cfg (SimConfig): Run configuration.
        dt (Optional[float]): Step length; cfg.dt when omitted.
        bank (Optional[FilterBank]): Filter bank for the blow-up report.

    Returns:
        SolverState: The state at t + dt, projected and dealiased.

    Raises:
        BlowUpError: If a non-finite coefficient appears.
    """
    h = cfg.dt if dt is None else dt
    q = state.q_hat
    with np.errstate(over="ignore", invalid="ignore"):
        g0 = _rhs(q, state.t, cfg)
        eq = heat_semigroup(q, h, cfg.nu)
        eg0 = heat_semigroup(g0, h, cfg.nu)
        predictor = eq + eg0 * h
        g1 = _rhs(predictor, state.t + h, cfg)
        q_next = dealias(leray_project(eq + (eg0 + g1) * (0.5 * h)))

    if not np.all(np.isfinite(q_next.data)):
        bank = bank or build_filter_bank(cfg.grid)
        raise BlowUpError(
            state.step_index + 1, state.t + h, besov_norm(q, bank, cfg.besov), "non-finite coefficients"
        )
    return SolverState(t=state.t + h, q_hat=q_next, step_index=state.step_index + 1)


@dataclass
class Trajectory:
    """
    Outcome of a simulation.

    Attributes:
        records (List[DiagnosticsRecord]): Records in step order.
        final_state (SolverState): Last finite state.
        outcome (str): "completed" or "blow_up".
        states (List[SolverState]): Every state, when requested.
        error (Optional[BlowUpError]): The blow-up that ended the run.
    """

    records: List[DiagnosticsRecord]
    final_state: SolverState
    outcome: str = COMPLETED
    states: List[SolverState] = field(default_factory=list)
    error: Optional[BlowUpError] = None

    @property
    def blew_up(self) -> bool:
        return self.outcome == BLOW_UP


def simulate(
    cfg: SimConfig,
    q0: QField,
    on_record: Optional[Callable[[DiagnosticsRecord], None]] = None,
    keep_states: bool = False,
    on_step: Optional[Callable[[SolverState], None]] = None,
) -> Trajectory:
    """
    Runs the solver from q0 to t_end, recording diagnostics every diag_every steps.

    The initial and final states are always recorded. A blow-up ends the run
    with a record flagged blow_up, built from the last finite state.

    Args:
        cfg (SimConfig): Run configuration.
        q0 (QField): Initial field on cfg.grid; projected and dealiased on ingest.
        on_record (Optional[Callable]): Called once per record, in step order, when the record is final.
            Delivery trails the solver by one record so a blow-up can still flag it.
        keep_states (bool): Keep every state in the returned trajectory.
        on_step (Optional[Callable]): Called with each new state.

    Returns:
        Trajectory: Records, final state and outcome.
    """
    bank = build_filter_bank(cfg.grid)
    recorder = DiagnosticsRecorder(cfg, bank)

    pending: List[DiagnosticsRecord] = []

    def flush() -> None:
        if pending and on_record is not None:
            on_record(pending.pop())
        pending.clear()

    def emit(s: SolverState, prev: Optional[SolverState] = None, blow_up: bool = False) -> None:
        flush()
        pending.append(recorder.record(s, prev_state=prev, blow_up=blow_up))

    state = SolverState(t=0.0, q_hat=_ingest(cfg, q0), step_index=0)
    initial_energy = state.q_hat.energy()
    energy_limit = cfg.blowup_factor * (initial_energy if initial_energy > 0 else 1.0)
    times = time_grid(cfg)
    n_steps = len(times) - 1
    logger.info(
        f"Simulating {cfg.nonlinearity_mode} flow on {list(cfg.grid.sizes)}: "
        f"nu={cfg.nu}, dt={cfg.dt}, t_end={cfg.t_end} ({n_steps} steps)"
    )

    emit(state)
    states = [state] if keep_states else []
    error: Optional[BlowUpError] = None
    for n in range(n_steps):
        try:
            new = step(state, cfg, dt=times[n + 1] - state.t, bank=bank)
            energy = new.q_hat.energy()
            if not energy <= energy_limit:
                raise BlowUpError(
                    new.step_index, new.t, besov_norm(state.q_hat, bank, cfg.besov),
                    f"energy {energy:.3e} exceeds {energy_limit:.3e}",
                )
        except BlowUpError as e:
            logger.warning(str(e))
            error = e
            last = recorder.records[-1]
            if last.step_index == state.step_index:
                # Last finite state already recorded: flag it in place
                last.blow_up = True
            else:
                emit(state, blow_up=True)
            break

        new.t = times[n + 1]
        if keep_states:
            states.append(new)
        if on_step is not None:
            on_step(new)
        if new.step_index % cfg.diag_every == 0 or n == n_steps - 1:
            emit(new, prev=state)
        state = new

    flush()
    outcome = BLOW_UP if error is not None else COMPLETED
    logger.info(f"Simulation {outcome} at t={state.t:.6g} after {state.step_index} steps")
    return Trajectory(records=recorder.records, final_state=state, outcome=outcome, states=states, error=error)


@dataclass
class PicardReport:
    """
    Progress of the Picard iteration of the Duhamel map.

    Attributes:
        converged (bool): A distance fell below tol.
        contracting (bool): The iteration contracted (converged, or contraction factor < 1).
        iterations (int): Number of iterates built.
        distances (List[float]): sup over time of the Besov distance between successive iterates.
        factors (List[float]): Successive distance ratios.
        contraction_factor (float): Largest of the last three ratios.
    """

    converged: bool
    contracting: bool
    iterations: int
    distances: List[float] = field(default_factory=list)
    factors: List[float] = field(default_factory=list)
    contraction_factor: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["distances"] = [d if math.isfinite(d) else None for d in self.distances]
        data["factors"] = [f if math.isfinite(f) else None for f in self.factors]
        if not math.isfinite(self.contraction_factor):
            data["contraction_factor"] = None
        return data


def _ratio(current: float, previous: float) -> float:
    if previous == 0.0:
        return 0.0 if current == 0.0 else math.inf
    return current / previous


def picard_iterate(cfg: SimConfig, q0: QField, max_iter: int = 10, tol: float = 1e-8) -> PicardReport:
    """
    Iterates the Duhamel map over [0, t_end] starting from the constant path q0.

    Each iterate is a full path on the step times, built by the trapezoidal
    Duhamel recursion with the nonlinear input frozen at the previous iterate.
    Growth of the distance for three consecutive iterations stops the
    iteration with a non-contraction report.

    Args:
        cfg (SimConfig): Run configuration.
        q0 (QField): Initial field.
        max_iter (int): Iteration cap.
        tol (float): Convergence threshold on the distance.

    Returns:
        PicardReport: Distances, ratios and the verdict.
    """
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    bank = build_filter_bank(cfg.grid)
    start = _ingest(cfg, q0)
    times = time_grid(cfg)
    iterate = [start] * len(times)

    distances: List[float] = []
    factors: List[float] = []
    converged = False
    growth = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, max_iter + 1):
            inputs = [_rhs(w, t, cfg) for w, t in zip(iterate, times)]
            path = [start]
            for n in range(len(times) - 1):
                h = times[n + 1] - times[n]
                nxt = heat_semigroup(path[n], h, cfg.nu) + (
                    heat_semigroup(inputs[n], h, cfg.nu) + inputs[n + 1]
                ) * (0.5 * h)
                path.append(dealias(leray_project(nxt)))

            distance = max(besov_norm(a - b, bank, cfg.besov) for a, b in zip(path, iterate))
            if not math.isfinite(distance):
                distance = math.inf
            logger.info(f"Picard iteration {m}: distance {distance:.6g}")

            if distances:
                factors.append(_ratio(distance, distances[-1]))
                growth = growth + 1 if not distance < distances[-1] else 0
            distances.append(distance)
            iterate = path

            if distance < tol:
                converged = True
                break
            if growth >= NON_CONTRACTION_RUN:
                logger.warning(f"Picard iteration not contracting after {m} iterations")
                break

    recent = factors[-3:]
    if recent:
        contraction_factor = max(recent)
    else:
        contraction_factor = 0.0 if converged and distances[-1] == 0.0 else math.nan
    contracting = converged or (growth < NON_CONTRACTION_RUN and contraction_factor < 1)
    return PicardReport(
        converged=converged,
        contracting=contracting,
        iterations=len(distances),
        distances=distances,
        factors=factors,
        contraction_factor=contraction_factor,
    )
