# src/besov.py

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging
import math

import numpy as np

from .errors import ParameterError
from .field import PHYSICAL, QField, dealias, forward_transform, inverse_transform
from .littlewood_paley import BandDecomposition, FilterBank, decompose
from .quaternion import hamilton_mul_arrays

logger = logging.getLogger(__name__)

LOW_KEY = "low"


@dataclass(frozen=True)
class BesovParams:
    """
    Indices of the Besov space B^s_{p, q_idx}.

    Attributes:
        s (float): Smoothness index.
        p (float): Integrability index, >= 1 or math.inf.
        q_idx (float): Summability index over bands, >= 1 or math.inf.
    """

    s: float = 2.0
    p: float = 2.0
    q_idx: float = 2.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.s):
            raise ParameterError(f"Besov s must be finite, got {self.s}")
        if not self.p >= 1:
            raise ParameterError(f"Besov p must be >= 1, got {self.p}")
        if not self.q_idx >= 1:
            raise ParameterError(f"Besov q_idx must be >= 1, got {self.q_idx}")

    def require_product_estimate(self, dim: int) -> None:
        """
        Raises ParameterError unless s > n / p.
        """
        if not self.s > dim / self.p:
            raise ParameterError(f"product estimate needs s > n/p; got s={self.s}, n/p={dim / self.p:.6g}")

    def to_dict(self) -> dict:
        return {"s": self.s, "p": _encode_index(self.p), "q_idx": _encode_index(self.q_idx)}

    @classmethod
    def from_dict(cls, data: dict) -> "BesovParams":
        return cls(
            s=float(data.get("s", 2.0)),
            p=_decode_index(data.get("p", 2.0)),
            q_idx=_decode_index(data.get("q_idx", 2.0)),
        )


def _encode_index(value: float):
    return "inf" if math.isinf(value) else value


def _decode_index(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(value)


def lp_norm(f: QField, p: float, component: Optional[int] = None) -> float:
    """
    Grid quadrature of the L^p norm of the pointwise quaternion magnitude.

    Args:
        f (QField): Physical field.
        p (float): Exponent, >= 1 or math.inf.
        component (Optional[int]): Use |f_k| of one component instead of |f|.

    Returns:
        float: (sum |f(x)|^p * cell volume)^(1/p), or max |f(x)| when p is infinite.

    Raises:
        ParameterError: If p < 1.
    """
    if not p >= 1:
        raise ParameterError(f"L^p exponent must be >= 1, got {p}")
    f.require(PHYSICAL)
    if component is None:
        magnitude = np.sqrt(np.sum(f.data ** 2, axis=0))
    else:
        magnitude = np.abs(f.data[component])
    if math.isinf(p):
        return float(np.max(magnitude))
    if p == 2:
        return float(math.sqrt(f.grid.cell_volume * np.sum(magnitude ** 2)))
    # Scaled to avoid overflow of |f|^p for large p.
    peak = float(np.max(magnitude))
    if peak == 0.0:
        return 0.0
    return float(peak * (f.grid.cell_volume * np.sum((magnitude / peak) ** p)) ** (1.0 / p))


def besov_terms(
    f: QField,
    bank: FilterBank,
    params: BesovParams,
    component: Optional[int] = None,
    decomposition: Optional[BandDecomposition] = None,
) -> List[Tuple[str, float]]:
    """
    Weighted band contributions 2^{js} ||Delta_j f||_{L^p}.

    The low block comes first, weighted as band j_min; bands follow in
    ascending j. Besov sums reduce in exactly this order.

    Args:
        f (QField): Field in either representation.
        bank (FilterBank): Filter bank for f's grid.
        params (BesovParams): Besov indices.
        component (Optional[int]): Restrict to one quaternion component.
        decomposition (Optional[BandDecomposition]): Reuse an existing decomposition of f.

    Returns:
        List[Tuple[str, float]]: (band key, weighted L^p norm) pairs.
    """
    decomp = decomposition if decomposition is not None else decompose(f, bank)
    terms = []
    low = inverse_transform(decomp.low_block, check_symmetry=False)
    terms.append((LOW_KEY, 2.0 ** (bank.j_min * params.s) * lp_norm(low, params.p, component)))
    for j in sorted(decomp.bands):
        band = inverse_transform(decomp.bands[j], check_symmetry=False)
        terms.append((str(j), 2.0 ** (j * params.s) * lp_norm(band, params.p, component)))
    return terms


def sum_terms(values: List[float], q_idx: float) -> float:
    """
    l^q sum of nonnegative terms, max for q = inf.
    """
    if not values:
        return 0.0
    arr = np.asarray(values, dtype=np.float64)
    if math.isinf(q_idx):
        return float(np.max(arr))
    peak = float(np.max(arr))
    if peak == 0.0 or not math.isfinite(peak):
        return peak
    return float(peak * np.sum((arr / peak) ** q_idx) ** (1.0 / q_idx))


def besov_norm(
    f: QField,
    bank: FilterBank,
    params: BesovParams,
    component: Optional[int] = None,
    decomposition: Optional[BandDecomposition] = None,
) -> float:
    """
    Inhomogeneous Besov norm ||f||_{B^s_{p, q_idx}} over the filter bank.

    Args:
        f (QField): Field in either representation.
        bank (FilterBank): Filter bank for f's grid.
        params (BesovParams): Besov indices.
        component (Optional[int]): Restrict to one quaternion component.
        decomposition (Optional[BandDecomposition]): Reuse an existing decomposition of f.

    Returns:
        float: The norm.
    """
    terms = besov_terms(f, bank, params, component, decomposition)
    return sum_terms([value for _, value in terms], params.q_idx)


@dataclass
class EmbeddingReport:
    """
    Comparison of one field's norms in two Besov spaces.

    Attributes:
        norm_a (float): Norm in the stronger space a.
        norm_b (float): Norm in the weaker space b.
        ratio (float): norm_b / norm_a (1.0 when both vanish).
        bound (Optional[float]): Structural constant K, when one applies.
        structural (bool): Whether the term-by-term bound applies.
        holds (Optional[bool]): norm_b <= K norm_a, when structural.
        term_monotone (Optional[bool]): Every weighted term of b is at most K times that of a.
    """

    norm_a: float
    norm_b: float
    ratio: float
    bound: Optional[float]
    structural: bool
    holds: Optional[bool]
    term_monotone: Optional[bool]


def check_embedding(f: QField, bank: FilterBank, a: BesovParams, b: BesovParams) -> EmbeddingReport:
    """
    Measures ||f||_b against ||f||_a for a stronger space a (s_a >= s_b, p_a <= p_b).

    With equal p and q_idx(b) >= q_idx(a) the bound ||f||_b <= 2^{j_min (s_b - s_a)} ||f||_a
    holds term by term and is asserted; otherwise the ratio is only reported.

    Raises:
        ParameterError: If s_a < s_b or p_a > p_b.
    """
    if a.s < b.s or a.p > b.p:
        raise ParameterError(f"embedding needs s_a >= s_b and p_a <= p_b; got a={a}, b={b}")
    decomp = decompose(f, bank)
    terms_a = [v for _, v in besov_terms(f, bank, a, decomposition=decomp)]
    terms_b = [v for _, v in besov_terms(f, bank, b, decomposition=decomp)]
    norm_a = sum_terms(terms_a, a.q_idx)
    norm_b = sum_terms(terms_b, b.q_idx)
    ratio = norm_b / norm_a if norm_a > 0 else (1.0 if norm_b == 0 else math.inf)

    structural = a.p == b.p and b.q_idx >= a.q_idx
    bound = holds = term_monotone = None
    if structural:
        bound = 2.0 ** (bank.j_min * (b.s - a.s))
        tol = 1e-12
        term_monotone = all(tb <= bound * ta * (1 + tol) + tol for ta, tb in zip(terms_a, terms_b))
        holds = norm_b <= bound * norm_a * (1 + tol) + tol
    return EmbeddingReport(
        norm_a=norm_a, norm_b=norm_b, ratio=ratio, bound=bound,
        structural=structural, holds=holds, term_monotone=term_monotone,
    )


def pointwise_product(f: QField, g: QField) -> QField:
    """
    Hamilton product f(x) g(x) formed in physical space, then dealiased.

    Returns:
        QField: Spectral product field.
    """
    fp, gp = f.to_physical(), g.to_physical()
    prod = QField(f.grid, PHYSICAL, hamilton_mul_arrays(fp.data, gp.data))
    return dealias(forward_transform(prod))


def product_ratio(f: QField, g: QField, bank: FilterBank, params: BesovParams) -> float:
    """
    Empirical constant ||f g||_B / (||f||_B ||g||_B) of the Besov product estimate.

    Raises:
        ParameterError: If s <= n / p.
    """
    params.require_product_estimate(f.grid.dim)
    denom = besov_norm(f, bank, params) * besov_norm(g, bank, params)
    if denom == 0.0:
        raise ParameterError("product ratio undefined for a zero factor")
    ratio = besov_norm(pointwise_product(f, g), bank, params) / denom
    logger.debug(f"Besov product ratio {ratio:.6g} for {params}")
    return ratio
