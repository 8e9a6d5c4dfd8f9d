"""The one-parameter two-state family with closed-form transitions, its
cylinder measures, likelihood-ratio machinery, and the numerical
absolute-continuity classifier.

The family keeps only p[1,1,1] = a free; the remaining coefficients are
forced by normalization. One-step transitions then have the closed form
H_11 at time k = (a*x1)^(2^k), with state 2 absorbing.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import mpmath as mp
import numpy as np

from .operator import HeredityTensor, QsoOperator, make_operator, tensor_from_entries
from .simplex import SimplexPoint, make_point

_DPS = 40

TAIL_TOL = 1e-12
DECREASE_FACTOR = 10.0
SINGULAR_FLOOR = 1e-6


def va_operator(a: float) -> QsoOperator:
    """The two-state operator with self-replication weight a on state 1."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    entries = {
        (1, 1, 1): a,
        (1, 1, 2): 1.0 - a,
        (1, 2, 1): 0.0,
        (1, 2, 2): 1.0,
        (2, 2, 1): 0.0,
        (2, 2, 2): 1.0,
    }
    return make_operator(tensor_from_entries(2, entries))


@dataclass(frozen=True)
class VaParams:
    a: float
    x: SimplexPoint

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if self.x.n != 2:
            raise ValueError("the family lives on two states")

    @property
    def x1(self) -> float:
        return self.x[0]

    @classmethod
    def of(cls, a: float, x1: float) -> "VaParams":
        return cls(a, make_point([x1, 1.0 - x1]))


def _pow2(k: int) -> int:
    return 1 << k


@dataclass(frozen=True)
class ClosedFormTransition:
    linear: np.ndarray  # 2x2 floats
    log: np.ndarray  # elementwise logs, -inf at exact zeros


def va_transition_closed_form(params: VaParams, k: int) -> ClosedFormTransition:
    """H_11 = (a*x1)^(2^k); state 2 is absorbing."""
    if k < 0:
        raise ValueError("k must be >= 0")
    ax = params.a * params.x1
    e = _pow2(k)
    if ax == 0.0:
        h11, log_h11 = 0.0, float("-inf")
    elif ax == 1.0:
        h11, log_h11 = 1.0, 0.0
    else:
        log_h11 = e * math.log(ax)
        h11 = math.exp(log_h11) if log_h11 > -745.0 else 0.0
    h12 = 1.0 - h11
    log_h12 = math.log(h12) if h12 > 0 else float("-inf")
    linear = np.array([[h11, h12], [0.0, 1.0]])
    logs = np.array([[log_h11, log_h12], [float("-inf"), 0.0]])
    return ClosedFormTransition(linear=linear, log=logs)


@dataclass(frozen=True)
class CylinderClass:
    """The four cylinder families with closed-form measures.

    kind: all_ones / all_twos / ones_then_twos / two_one.
    Windows run over absolute times [l, m]; ones_then_twos holds state 1
    through time k and state 2 afterwards. two_one pins (2, 1) on [k, k+1].
    """

    kind: str
    l: int = 0
    m: int = 0
    k: int = 0

    @classmethod
    def all_ones(cls, l: int, m: int) -> "CylinderClass":
        return cls("all_ones", l=l, m=m)

    @classmethod
    def all_twos(cls, l: int, m: int) -> "CylinderClass":
        return cls("all_twos", l=l, m=m)

    @classmethod
    def ones_then_twos(cls, l: int, m: int, k: int) -> "CylinderClass":
        if not l <= k <= m - 1:
            raise ValueError(f"need l <= k <= m-1, got l={l}, k={k}, m={m}")
        return cls("ones_then_twos", l=l, m=m, k=k)

    @classmethod
    def two_one(cls, k: int) -> "CylinderClass":
        return cls("two_one", k=k)

    def __post_init__(self):
        if self.kind not in {"all_ones", "all_twos", "ones_then_twos", "two_one"}:
            raise ValueError(f"unknown cylinder kind {self.kind!r}")
        if self.kind != "two_one" and self.m < self.l:
            raise ValueError("window end must be >= window start")


def _constructive_mpf(params: VaParams, c: CylinderClass):
    """Product of the closed-form chain factors, in extended arithmetic.

    Uses x1 at time t = a^(2^t - 1) * x1^(2^t) and the one-step entries.
    """
    a = mp.mpf(params.a)
    x1 = mp.mpf(params.x1)

    def traj_x1(t: int):
        if t == 0:
            return x1
        return a ** (_pow2(t) - 1) * x1 ** _pow2(t)

    def h11(t: int):
        return (a * x1) ** _pow2(t)

    if c.kind == "two_one":
        return mp.mpf(0)
    if c.kind == "all_ones":
        acc = traj_x1(c.l)
        for t in range(c.l, c.m):
            acc *= h11(t)
        return acc
    if c.kind == "all_twos":
        return 1 - traj_x1(c.l)
    # ones_then_twos: ones through time k, a single 1->2 step, twos after
    acc = traj_x1(c.l)
    for t in range(c.l, c.k):
        acc *= h11(t)
    acc *= 1 - h11(c.k)
    return acc


def _printed_mpf(params: VaParams, c: CylinderClass):
    """The tabulated closed-form values, taken verbatim (exponent 2^(l-1))."""
    a = mp.mpf(params.a)
    x1 = mp.mpf(params.x1)
    half_exp = mp.mpf(2) ** (c.l - 1)  # fractional for l = 0, as written
    if c.kind == "two_one":
        return mp.mpf(0)
    if c.kind == "all_ones":
        if a == 0:
            return mp.mpf(0) if c.m > 0 or x1 == 0 else x1
        return a ** (_pow2(c.m) - half_exp) * x1 ** _pow2(c.m)
    if c.kind == "all_twos":
        return 1 - a**half_exp * x1 ** _pow2(c.l)
    if a == 0:
        return mp.mpf(0)
    return a ** (_pow2(c.k) - half_exp) * x1 ** _pow2(c.k) * (1 - (a * x1) ** _pow2(c.k))


@dataclass(frozen=True)
class CylinderValue:
    constructive: float
    constructive_log: float
    printed: float
    discrepancy: float  # |constructive - printed|, linear domain


def va_cylinder_closed_form(params: VaParams, c: CylinderClass) -> CylinderValue:
    """Constructive chain-product measure, with the tabulated formula value
    recorded alongside; the constructive value is the ground truth."""
    with mp.workdps(_DPS):
        cons = _constructive_mpf(params, c)
        printed = _printed_mpf(params, c)
        if cons == 0:
            clog = float("-inf")
        else:
            clog = float(mp.log(cons))
        try:
            cf = float(cons)
            pf = float(printed)
            disc = float(abs(cons - printed))
        except OverflowError:  # pragma: no cover
            cf, pf, disc = 0.0, 0.0, 0.0
    return CylinderValue(constructive=cf, constructive_log=clog, printed=pf, discrepancy=disc)


def cylinder_discrepancy_log(
    params: VaParams, windows: list, tol: float = 1e-15
) -> list:
    """Classes whose tabulated value differs from the constructive one.

    Returns (class, constructive, printed, |difference|) for each mismatch.
    """
    out = []
    for c in windows:
        v = va_cylinder_closed_form(params, c)
        if v.discrepancy > tol:
            out.append((c, v.constructive, v.printed, v.discrepancy))
    return out


@dataclass(frozen=True)
class RnRatio:
    value: float
    singular_witness: bool  # positive mass over zero mass


def rn_ratio_z(
    num: VaParams, den: VaParams, c: CylinderClass, m: Optional[int] = None
) -> RnRatio:
    """Ratio of constructive measures on the class with window end m.

    0/0 counts as 1; positive/0 is flagged as a singular witness with an
    infinite value.
    """
    if m is not None and c.kind != "two_one":
        c = CylinderClass(c.kind, l=c.l, m=m, k=min(c.k, m - 1) if c.kind == "ones_then_twos" else 0)
    with mp.workdps(_DPS):
        top = _constructive_mpf(num, c)
        bot = _constructive_mpf(den, c)
        if bot == 0:
            if top == 0:
                return RnRatio(1.0, False)
            return RnRatio(float("inf"), True)
        return RnRatio(float(top / bot), False)


def conditional_expectation_term(num: VaParams, den: VaParams, m: int):
    """The two surviving series contributions at step m.

    K: squared deviation of the escape-probability ratio, weighted by the
    numerator's escape probability on the ones-then-exit event.
    K_hat: squared deviation of the stay-probability ratio, weighted by the
    numerator's stay probability on the all-ones event. Both >= 0; infinite
    when the denominator's mass vanishes while the numerator's does not.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    with mp.workdps(_DPS):
        e = _pow2(m - 1)
        p = (mp.mpf(num.a) * mp.mpf(num.x1)) ** e  # numerator stay probability
        q = (mp.mpf(den.a) * mp.mpf(den.x1)) ** e
        # escape-ratio term
        if q == 1:
            k_term = mp.mpf(0) if p == 1 else mp.inf
        else:
            k_term = (1 - (1 - p) / (1 - q)) ** 2 * (1 - p)
        # stay-ratio term
        if q == 0:
            khat = mp.mpf(0) if p == 0 else mp.inf
        else:
            khat = (1 - p / q) ** 2 * p
        return _safe_float(k_term), _safe_float(khat)


def _safe_float(v) -> float:
    if v == mp.inf:
        return float("inf")
    try:
        return float(v)
    except OverflowError:  # pragma: no cover
        return float("inf")


@dataclass(frozen=True)
class RNSeriesReport:
    numerator: VaParams
    denominator: VaParams
    terms: list  # list of (m, K_term, Khat_term, partial_sum)
    classification: str  # equivalent_evidence / singular_evidence / undecided
    exceptional_set_note: str

    def to_dict(self) -> dict:
        return {
            "numerator": {"a": self.numerator.a, "x1": self.numerator.x1},
            "denominator": {"a": self.denominator.a, "x1": self.denominator.x1},
            "terms": [
                {"m": m, "K_term": k, "Khat_term": kh, "partial_sum": s}
                for m, k, kh, s in self.terms
            ],
            "classification": self.classification,
            "exceptional_set_note": self.exceptional_set_note,
        }


def _classify_terms(totals: list) -> str:
    last = totals[-1]
    if last < TAIL_TOL:
        tail = totals[-3:]
        decreasing = all(
            b == 0.0 or b <= a / DECREASE_FACTOR for a, b in zip(tail, tail[1:])
        )
        if decreasing or all(t == 0.0 for t in tail):
            return "equivalent_evidence"
    if len(totals) >= 5 and all(t >= SINGULAR_FLOOR for t in totals[-5:]):
        return "singular_evidence"
    return "undecided"


def rn_series(num: VaParams, den: VaParams, m_max: int) -> RNSeriesReport:
    """Partial sums of the conditional second-moment series, with an
    evidence-level convergence verdict (never a proof).

    When the numerator's stay rate exceeds the denominator's, the stay-event
    contribution lives only on the single all-ones trajectory, which carries
    zero mass for both chains in the limit; that exceptional trajectory is
    excluded from the accumulated series and reported in the note, matching
    the almost-sure form of the convergence dichotomy.
    """
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    # a zero denominator stay rate against a positive numerator one is a
    # finite-horizon singular witness, not a limit phenomenon; keep it
    den_stay = den.a * den.x1
    exceptional = num.a * num.x1 > den_stay > 0.0
    terms = []
    partial = 0.0
    for m in range(1, m_max + 1):
        k_term, khat = conditional_expectation_term(num, den, m)
        contribution = k_term if exceptional else k_term + khat
        partial += contribution
        terms.append((m, k_term, khat, partial))
    if exceptional:
        totals = [k for _, k, _, _ in terms]
    else:
        totals = [k + kh for _, k, kh, _ in terms]
    classification = _classify_terms(totals)
    note = ""
    if exceptional:
        note = (
            "the all-ones trajectory is exceptional: the likelihood ratio "
            "diverges along it while its limiting mass is zero under both "
            "chains; its stay-event contribution is excluded from the "
            "accumulated series"
        )
    return RNSeriesReport(
        numerator=num,
        denominator=den,
        terms=terms,
        classification=classification,
        exceptional_set_note=note,
    )


def rn_series_csv(report: RNSeriesReport) -> str:
    buf = io.StringIO()
    buf.write("m,K_term,Khat_term,partial_sum\n")
    for m, k, kh, s in report.terms:
        buf.write(f"{m},{k:.17g},{kh:.17g},{s:.17g}\n")
    return buf.getvalue()
