# src/diagnostics.py

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence
import json
import logging
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import bisect
from scipy.stats import linregress

from .besov import LOW_KEY, besov_norm
from .config import SimConfig
from .errors import ConfigurationError, InsufficientDataError
from .field import QField, gradient_norm_sq, inner_product, l2_norm_sq
from .forcing import forcing_eval
from .littlewood_paley import ANNULUS_INNER, ANNULUS_OUTER, BandDecomposition, FilterBank, decompose
from .state import SolverState

logger = logging.getLogger(__name__)

SLOPE_RANGE = (1.8, 2.2)
BRACKET_RTOL = 1e-9


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def _none_to_nan(value: Optional[float]) -> float:
    return math.nan if value is None else float(value)


@dataclass
class DiagnosticsRecord:
    """
    One row of scalar diagnostics of a trajectory.

    Attributes:
        t (float): Simulation time.
        step_index (int): Step count at t.
        total_energy (float): 1/2 ||q||^2.
        band_energy (Dict[str, float]): E_j per band, keyed by str(j), plus "low".
        band_dissipation (Dict[str, float]): nu ||grad Delta_j q||^2 per band.
        besov_weighted_energy (List[float]): sum_j 2^{js} ||Delta_j q_k||^2 per component.
        besov_norm (float): Monitored Besov norm of q(t).
        gronwall_lhs (float): Same as besov_norm; left side of the envelope.
        gronwall_rhs_terms (Dict[str, float]): initial_norm, forcing_integral, exponent_integral.
        energy_balance_residual (float): Residual of the discrete energy budget for the last step.
        blow_up (bool): Set on the final record of a failed run.
        nu (float): Viscosity of the run.
        forcing_norm (float): Besov norm of f(t).
        r_exponent (float): Time-integrability exponent of the forcing norm.
    """

    t: float
    step_index: int
    total_energy: float
    band_energy: Dict[str, float]
    band_dissipation: Dict[str, float]
    besov_weighted_energy: List[float]
    besov_norm: float
    gronwall_lhs: float
    gronwall_rhs_terms: Dict[str, float]
    energy_balance_residual: float
    blow_up: bool = False
    nu: float = 0.0
    forcing_norm: float = 0.0
    r_exponent: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        """
        Serializes the record with non-finite scalars written as null.

        Returns:
            Dict[str, Any]: JSON-ready record.
        """
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, float):
                data[key] = _finite_or_none(value)
            elif isinstance(value, dict):
                data[key] = {k: _finite_or_none(v) for k, v in value.items()}
            elif isinstance(value, list):
                data[key] = [_finite_or_none(v) for v in value]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiagnosticsRecord":
        return cls(
            t=float(data["t"]),
            step_index=int(data["step_index"]),
            total_energy=_none_to_nan(data["total_energy"]),
            band_energy={k: _none_to_nan(v) for k, v in data["band_energy"].items()},
            band_dissipation={k: _none_to_nan(v) for k, v in data["band_dissipation"].items()},
            besov_weighted_energy=[_none_to_nan(v) for v in data["besov_weighted_energy"]],
            besov_norm=_none_to_nan(data["besov_norm"]),
            gronwall_lhs=_none_to_nan(data["gronwall_lhs"]),
            gronwall_rhs_terms={k: _none_to_nan(v) for k, v in data["gronwall_rhs_terms"].items()},
            energy_balance_residual=_none_to_nan(data["energy_balance_residual"]),
            blow_up=bool(data.get("blow_up", False)),
            nu=float(data.get("nu", 0.0)),
            forcing_norm=_none_to_nan(data.get("forcing_norm", 0.0)),
            r_exponent=float(data.get("r_exponent", 1.0)),
        )


def _band_items(decomp: BandDecomposition):
    yield LOW_KEY, decomp.low_block
    for j in sorted(decomp.bands):
        yield str(j), decomp.bands[j]


def band_energy(decomp: BandDecomposition, component: Optional[int] = None) -> Dict[str, float]:
    """
    E_j = 1/2 ||Delta_j q||^2 per band, plus the low block under "low".

    Args:
        decomp (BandDecomposition): Decomposition of q.
        component (Optional[int]): Restrict to one quaternion component q_k.

    Returns:
        Dict[str, float]: Energies keyed by "low" and str(j).
    """
    return {key: 0.5 * l2_norm_sq(band, component) for key, band in _band_items(decomp)}


def dissipation_rate(decomp: BandDecomposition, nu: float, component: Optional[int] = None) -> Dict[str, float]:
    """
    Dissipation magnitude nu ||grad Delta_j q||^2 per band.

    Under pure heat flow this equals -dE_j/dt.
    """
    return {key: nu * gradient_norm_sq(band, component) for key, band in _band_items(decomp)}


def band_energy_rates(records: Sequence[DiagnosticsRecord]) -> List[Dict[str, float]]:
    """
    dE_j/dt at each record by central differences over record times.

    Args:
        records (Sequence[DiagnosticsRecord]): At least 3 records of one trajectory.

    Returns:
        List[Dict[str, float]]: One mapping per record, keyed like band_energy.

    Raises:
        InsufficientDataError: If fewer than 3 records are given.
    """
    if len(records) < 3:
        raise InsufficientDataError(f"band energy rates need at least 3 records, got {len(records)}")
    times = np.array([r.t for r in records])
    keys = list(records[0].band_energy)
    rates = {
        key: np.gradient(np.array([r.band_energy[key] for r in records]), times, edge_order=2)
        for key in keys
    }
    return [{key: float(rates[key][i]) for key in keys} for i in range(len(records))]


def besov_weighted_energy(decomp: BandDecomposition, s: float) -> List[float]:
    """
    sum_j 2^{js} ||Delta_j q_k||^2 for each component k, low block weighted as j_min.
    """
    out = []
    for k in range(4):
        total = 2.0 ** (decomp.j_min * s) * l2_norm_sq(decomp.low_block, k)
        for j in sorted(decomp.bands):
            total += 2.0 ** (j * s) * l2_norm_sq(decomp.bands[j], k)
        out.append(total)
    return out


def weighted_energy_ratio(decomp: BandDecomposition, s: float) -> List[float]:
    """
    Ratio of the band-weighted sum to the true energy integral |q_k|^2, per component.

    Components with zero energy report nan.
    """
    source = decomp.reconstruct()
    weighted = besov_weighted_energy(decomp, s)
    ratios = []
    for k in range(4):
        actual = l2_norm_sq(source, k)
        ratios.append(weighted[k] / actual if actual > 0 else math.nan)
    return ratios


def bernstein_bracket(j: int) -> tuple:
    """
    Bounds of ||grad Delta_j q||^2 / ||Delta_j q||^2 implied by the annulus support.
    """
    return (ANNULUS_INNER ** 2 * 4.0 ** j, ANNULUS_OUTER ** 2 * 4.0 ** j)


@dataclass
class BandBracket:
    j: int
    lower: float
    upper: float
    min_ratio: float
    max_ratio: float
    inside: bool


@dataclass
class ScalingFitReport:
    """
    Regression of log2(dissipation_j / E_j) against j, and per-band bracket checks.

    Attributes:
        slope (float): Fitted slope; 2 for band-localized dissipation.
        intercept (float): Fitted intercept.
        residual (float): RMS deviation of the points from the fit.
        stderr (float): Standard error of the slope.
        n_points (int): Number of (record, band) samples used.
        bands (List[BandBracket]): Bracket check per usable band.
        slope_in_range (bool): slope lies in [1.8, 2.2].
        all_inside (bool): Every band lies inside its bracket.
    """

    slope: float
    intercept: float
    residual: float
    stderr: float
    n_points: int
    bands: List[BandBracket] = field(default_factory=list)
    slope_in_range: bool = False
    all_inside: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def dissipation_scaling_fit(records: Sequence[DiagnosticsRecord], energy_rtol: float = 1e-12) -> ScalingFitReport:
    """
    Fits the frequency growth of per-band dissipation.

    Uses every finite record. A band is usable in a record when its energy
    exceeds energy_rtol times that record's total band energy.

    Args:
        records (Sequence[DiagnosticsRecord]): Records of one trajectory.
        energy_rtol (float): Relative energy threshold for usable bands.

    Returns:
        ScalingFitReport: The fit and bracket checks.

    Raises:
        InsufficientDataError: If fewer than 3 distinct bands are usable.
    """
    xs: List[float] = []
    ys: List[float] = []
    ratios: Dict[int, List[float]] = {}
    for rec in records:
        if rec.blow_up or not rec.nu > 0:
            continue
        energies = {k: v for k, v in rec.band_energy.items() if k != LOW_KEY and math.isfinite(v)}
        total = sum(energies.values())
        if not total > 0:
            continue
        for key, e_j in energies.items():
            d_j = rec.band_dissipation.get(key, math.nan)
            if not e_j > energy_rtol * total or not d_j > 0:
                continue
            j = int(key)
            xs.append(float(j))
            ys.append(math.log2(d_j / e_j))
            ratios.setdefault(j, []).append(d_j / (2.0 * rec.nu * e_j))

    if len(ratios) < 3:
        raise InsufficientDataError(f"scaling fit needs at least 3 usable bands, found {len(ratios)}")

    fit = linregress(xs, ys)
    predicted = fit.intercept + fit.slope * np.asarray(xs)
    residual = float(np.sqrt(np.mean((np.asarray(ys) - predicted) ** 2)))

    brackets = []
    for j in sorted(ratios):
        lower, upper = bernstein_bracket(j)
        lo, hi = min(ratios[j]), max(ratios[j])
        inside = lo >= lower * (1 - BRACKET_RTOL) and hi <= upper * (1 + BRACKET_RTOL)
        brackets.append(BandBracket(j=j, lower=lower, upper=upper, min_ratio=lo, max_ratio=hi, inside=inside))

    slope = float(fit.slope)
    report = ScalingFitReport(
        slope=slope,
        intercept=float(fit.intercept),
        residual=residual,
        stderr=float(fit.stderr),
        n_points=len(xs),
        bands=brackets,
        slope_in_range=SLOPE_RANGE[0] <= slope <= SLOPE_RANGE[1],
        all_inside=all(b.inside for b in brackets),
    )
    logger.info(f"Dissipation scaling slope {slope:.4f} over {len(ratios)} bands")
    return report


@dataclass
class GronwallReport:
    """
    Smallest envelope constant C with ||q(t)|| <= C A(t) exp(C X(t)) at every record.

    A(t) = ||q0|| + integral of ||f||, X(t) = integral of ||q||.

    Attributes:
        minimal_c (float): The constant (0 for an identically zero trajectory, inf if none exists).
        contact_time (Optional[float]): Record time where the envelope is tightest.
        censored (bool): The trajectory ended in blow-up; C covers finite records only.
        n_records (int): Number of records used.
        forcing_lr_norm (float): L^r-in-time norm of ||f(t)|| over the used records.
    """

    minimal_c: float
    contact_time: Optional[float]
    censored: bool
    n_records: int
    forcing_lr_norm: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["minimal_c"] = "inf" if math.isinf(self.minimal_c) else _finite_or_none(self.minimal_c)
        return data


def forcing_lr_norm(records: Sequence[DiagnosticsRecord]) -> float:
    """
    (integral of ||f(t)||^r dt)^(1/r) by trapezoid over record times.
    """
    if len(records) < 2:
        return 0.0
    r = records[0].r_exponent
    values = np.array([rec.forcing_norm for rec in records]) ** r
    return float(trapezoid(values, [rec.t for rec in records]) ** (1.0 / r))


def gronwall_monitor(records: Sequence[DiagnosticsRecord], xtol: float = 1e-9) -> GronwallReport:
    """
    Fits the Gronwall envelope constant of a trajectory by bisection.

    Args:
        records (Sequence[DiagnosticsRecord]): Records of one trajectory.
        xtol (float): Bisection tolerance on C.

    Returns:
        GronwallReport: Minimal C and where it is attained.
    """
    censored = any(r.blow_up for r in records)
    usable = [
        r for r in records
        if not r.blow_up and math.isfinite(r.gronwall_lhs)
        and all(math.isfinite(v) for v in r.gronwall_rhs_terms.values())
    ]

    def report(c: float, contact: Optional[float]) -> GronwallReport:
        return GronwallReport(
            minimal_c=c, contact_time=contact, censored=censored,
            n_records=len(usable), forcing_lr_norm=forcing_lr_norm(usable),
        )

    if not usable:
        return report(math.nan, None)

    times = np.array([r.t for r in usable])
    lhs = np.array([r.gronwall_lhs for r in usable])
    a = np.array([r.gronwall_rhs_terms["initial_norm"] + r.gronwall_rhs_terms["forcing_integral"] for r in usable])
    x = np.array([r.gronwall_rhs_terms["exponent_integral"] for r in usable])

    def slack(c: float) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = c * a * np.exp(c * x)
        return np.where(np.isnan(rhs), np.inf, rhs) - lhs

    def margin(c: float) -> float:
        return float(np.min(slack(c)))

    if not np.any(lhs > 0):
        return report(0.0, float(times[0]))
    if np.any((lhs > 0) & (a <= 0)):
        return report(math.inf, None)

    hi = 1.0
    while margin(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            return report(math.inf, None)
    if margin(hi) == 0.0:
        c = hi
    else:
        c = bisect(margin, 0.0, hi, xtol=xtol)
        while margin(c) < 0:
            c += xtol
    contact = float(times[int(np.argmin(slack(c)))])
    logger.info(f"Gronwall minimal C = {c:.8g} (contact at t={contact:.6g}, censored={censored})")
    return report(float(c), contact)


def energy_balance_residual(prev: SolverState, next: SolverState, cfg: SimConfig) -> float:
    """
    Discrete residual of d/dt (1/2 ||q||^2) = -nu ||grad q||^2 + <f, q> over one step.

    Rates are averaged over the two end states (trapezoid convention).

    Args:
        prev (SolverState): State at the start of the step.
        next (SolverState): State at the end of the step.
        cfg (SimConfig): Run configuration (viscosity, forcing).

    Returns:
        float: The absolute residual; 0 for a zero-length step.
    """
    h = next.t - prev.t
    if h <= 0:
        return 0.0
    d_energy = (next.q_hat.energy() - prev.q_hat.energy()) / h
    dissipation = 0.5 * cfg.nu * (gradient_norm_sq(prev.q_hat) + gradient_norm_sq(next.q_hat))
    f_prev = forcing_eval(cfg.forcing, prev.t, cfg.grid)
    f_next = forcing_eval(cfg.forcing, next.t, cfg.grid)
    work = 0.5 * (inner_product(f_prev, prev.q_hat) + inner_product(f_next, next.q_hat))
    return abs(d_energy + dissipation - work)


class DiagnosticsRecorder:
    """
    Builds DiagnosticsRecord rows along a trajectory and accumulates the
    Gronwall integrals by trapezoid over record times.

    Attributes:
        cfg (SimConfig): Run configuration.
        bank (FilterBank): Filter bank of the run's grid.
        records (List[DiagnosticsRecord]): Records emitted so far.
    """

    def __init__(self, cfg: SimConfig, bank: FilterBank) -> None:
        self.cfg: SimConfig = cfg
        self.bank: FilterBank = bank
        self.records: List[DiagnosticsRecord] = []
        self._initial_norm: Optional[float] = None
        self._forcing_integral: float = 0.0
        self._exponent_integral: float = 0.0

    def forcing_norm(self, t: float) -> float:
        if self.cfg.forcing.kind == "none":
            return 0.0
        return besov_norm(forcing_eval(self.cfg.forcing, t, self.cfg.grid), self.bank, self.cfg.besov)

    def record(
        self,
        state: SolverState,
        prev_state: Optional[SolverState] = None,
        blow_up: bool = False,
    ) -> DiagnosticsRecord:
        """
        Computes the diagnostics of a state and appends the record.

        Args:
            state (SolverState): The state to describe.
            prev_state (Optional[SolverState]): State one step earlier, for the energy residual.
            blow_up (bool): Flag the record as the end of a failed run.

        Returns:
            DiagnosticsRecord: The new record.
        """
        cfg = self.cfg
        with np.errstate(over="ignore", invalid="ignore"):
            q_hat: QField = state.q_hat
            decomp = decompose(q_hat, self.bank)
            norm = besov_norm(q_hat, self.bank, cfg.besov, decomposition=decomp)
            f_norm = self.forcing_norm(state.t)

            if self._initial_norm is None:
                self._initial_norm = norm
            elif self.records:
                last = self.records[-1]
                span = [last.t, state.t]
                self._forcing_integral += float(trapezoid([last.forcing_norm, f_norm], span))
                self._exponent_integral += float(trapezoid([last.besov_norm, norm], span))

            residual = 0.0 if prev_state is None else energy_balance_residual(prev_state, state, cfg)
            rec = DiagnosticsRecord(
                t=state.t,
                step_index=state.step_index,
                total_energy=q_hat.energy(),
                band_energy=band_energy(decomp),
                band_dissipation=dissipation_rate(decomp, cfg.nu),
                besov_weighted_energy=besov_weighted_energy(decomp, cfg.besov.s),
                besov_norm=norm,
                gronwall_lhs=norm,
                gronwall_rhs_terms={
                    "initial_norm": self._initial_norm,
                    "forcing_integral": self._forcing_integral,
                    "exponent_integral": self._exponent_integral,
                },
                energy_balance_residual=residual,
                blow_up=blow_up,
                nu=cfg.nu,
                forcing_norm=f_norm,
                r_exponent=cfg.r_exponent,
            )
        self.records.append(rec)
        logger.debug(f"Record t={rec.t:.6g} step={rec.step_index} E={rec.total_energy:.6g}")
        return rec


def record_line(rec: DiagnosticsRecord) -> str:
    """One NDJSON line for a record, keys sorted."""
    return json.dumps(rec.to_dict(), sort_keys=True) + "\n"


def write_records(path: str, records: Sequence[DiagnosticsRecord]) -> None:
    with open(path, "w") as f:
        for rec in records:
            f.write(record_line(rec))


def read_records(path: str) -> List[DiagnosticsRecord]:
    """
    Loads a diagnostics NDJSON file.

    Args:
        path (str): Path of the file.

    Returns:
        List[DiagnosticsRecord]: The records in file order.

    Raises:
        InsufficientDataError: If the file holds no records.
        ConfigurationError: If a line is not a valid record.
    """
    records = []
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(DiagnosticsRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ConfigurationError(f"{path}:{lineno}: invalid diagnostics record: {e}", line=lineno)
    if not records:
        raise InsufficientDataError(f"no diagnostics records in '{path}'")
    return records
