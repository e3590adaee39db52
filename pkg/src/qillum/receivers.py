"""Structured receivers: homodyne, optical parametric amplifier, Helstrom.

The OPA receiver mixes the retained idler with the return on a weak
parametric amplifier of gain G; its output mode is thermal under either
hypothesis, with mean photon number

    N0 = G n_s + (G-1)(1 + n_b)
    N1 = G n_s + (G-1)(1 + n_b + kappa n_s)
         + 2 sqrt(G(G-1)) sqrt(kappa n_s (n_s+1))

so deciding between hypotheses reduces to thresholding a total photon
count whose law over K mode pairs is negative binomial.  Tail
probabilities go through the regularized incomplete beta function, which
keeps far tails accurate in a relative sense; Gaussian approximations and
log-domain variants are provided for cross-checks and large K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import betainc, gammaln, log_ndtr, ndtr

from .errors import DomainError
from .fockspace import JointState
from .gss import golden_section_min

__all__ = [
    "OpaStatistics",
    "DecisionRule",
    "GainOptimum",
    "HelstromResult",
    "half_erfc_sqrt",
    "homodyne_error",
    "opa_output_means",
    "opa_count_pmf",
    "opa_error_exact",
    "opa_error_gaussian",
    "optimize_gain",
    "opa_bhattacharyya",
    "opa_error_onoff",
    "helstrom_single_shot",
    "majority_vote_error",
    "resolve_gain",
]

_LN10 = math.log(10.0)
_SCAN_SIGMAS = 12.0   # threshold scan window half-width in standard deviations
_GAIN_MIN_EXCESS = 1e-9
_GAIN_MAX = 1.5
_GAIN_REL_TOL = 1e-4


def half_erfc_sqrt(y: float) -> Tuple[float, float]:
    """(p, log10 p) for p = erfc(sqrt(y)) / 2, stable for large y.

    erfc(x)/2 is the upper Gaussian tail at x*sqrt(2), so the log route
    goes through the log normal CDF and never underflows.
    """
    if y < 0.0:
        raise DomainError(f"need y >= 0, got {y}")
    x = math.sqrt(y)
    log10_p = float(log_ndtr(-x * math.sqrt(2.0))) / _LN10
    return float(ndtr(-x * math.sqrt(2.0))), log10_p


def homodyne_error(params, K: int) -> Tuple[float, float]:
    """Error probability of coherent-state transmission with homodyne
    readout over K modes: erfc(sqrt(kappa n_s K / (4 n_b + 2))) / 2.

    Returns (probability, log10 probability).
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    y = params.kappa * params.n_s * K / (4.0 * params.n_b + 2.0)
    return half_erfc_sqrt(y)


# --- OPA output statistics ---------------------------------------------------

@dataclass(frozen=True)
class OpaStatistics:
    """Per-mode output photon statistics of the OPA receiver."""

    gain: float
    epsilon: float
    n0: float
    n1: float
    sigma0: float
    sigma1: float

    def __post_init__(self):
        if self.n1 < self.n0 - 1e-15:
            raise DomainError(f"need n1 >= n0, got n0={self.n0}, n1={self.n1}")


@dataclass(frozen=True)
class DecisionRule:
    """Decide target-present when the K-mode total count is >= threshold."""

    threshold: int
    degenerate: bool = False

    def __post_init__(self):
        if self.threshold < 0:
            raise DomainError(f"threshold must be >= 0, got {self.threshold}")


@dataclass(frozen=True)
class GainOptimum:
    """Result of the gain optimization; degenerate when the objective is flat."""

    g_star: Optional[float]
    r_opa: float
    degenerate: bool = False


@dataclass(frozen=True)
class HelstromResult:
    """Single-copy optimal-measurement error and its conditional rates."""

    pe_single: float
    p01: float
    p10: float
    clamped_mass: float

    def __post_init__(self):
        slack = 1e-9
        if not -slack <= self.pe_single <= 0.5 + slack:
            raise DomainError(f"pe_single must lie in [0, 1/2], got {self.pe_single}")
        # The conditional rates are individually only bounded by 1: the optimal
        # projector minimizes the average, and one leg may sit slightly above
        # 1/2 when the two states are nearly identical.
        for name in ("p01", "p10"):
            v = getattr(self, name)
            if not -slack <= v <= 1.0 + slack:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.pe_single - 0.5 * (self.p01 + self.p10)) > 1e-12:
            raise DomainError("pe_single inconsistent with (p01 + p10)/2")


def opa_output_means(params, G: float) -> OpaStatistics:
    """Thermal means and standard deviations of the OPA output mode."""
    if not math.isfinite(G) or G <= 1.0:
        raise DomainError(f"gain must satisfy G > 1, got {G}")
    n_s, kappa, n_b = params.n_s, params.kappa, params.n_b
    base = G * n_s + (G - 1.0) * (1.0 + n_b)
    n0 = base
    n1 = (
        base
        + (G - 1.0) * kappa * n_s
        + 2.0 * math.sqrt(G * (G - 1.0)) * math.sqrt(kappa * n_s * (n_s + 1.0))
    )
    return OpaStatistics(
        gain=G,
        epsilon=math.sqrt(G - 1.0),
        n0=n0,
        n1=n1,
        sigma0=math.sqrt(n0 * (n0 + 1.0)),
        sigma1=math.sqrt(n1 * (n1 + 1.0)),
    )


def opa_count_pmf(n_mean: float, K: int, n) -> np.ndarray:
    """Negative-binomial pmf of the total count over K thermal modes:
    C(n+K-1, n) N^n / (1+N)^(n+K).  Vectorized over n."""
    if n_mean < 0.0:
        raise DomainError(f"n_mean must be >= 0, got {n_mean}")
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    n_arr = np.atleast_1d(np.asarray(n, dtype=float))
    if np.any(n_arr < 0) or np.any(n_arr != np.floor(n_arr)):
        raise DomainError("counts must be non-negative integers")
    if n_mean == 0.0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        log_pmf = (
            gammaln(n_arr + K)
            - gammaln(n_arr + 1.0)
            - gammaln(K)
            + n_arr * (math.log(n_mean) - math.log1p(n_mean))
            - K * math.log1p(n_mean)
        )
        out = np.exp(log_pmf)
    if np.isscalar(n) or np.asarray(n).ndim == 0:
        return float(out[0])
    return out


def _nb_tail_upper(t, K: int, n_mean: float):
    """P(X >= t) for the K-mode total count at thermal mean n_mean.

    Via P(X >= t) = I_{N/(1+N)}(t, K); betainc evaluates the incomplete
    beta directly on the tail, so tiny values keep relative accuracy.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.ones_like(t_arr)
    pos = t_arr >= 1.0
    if n_mean == 0.0:
        out[pos] = 0.0
    elif np.any(pos):
        out[pos] = betainc(t_arr[pos], float(K), n_mean / (1.0 + n_mean))
    return out


def _nb_tail_lower(t, K: int, n_mean: float):
    """P(X < t) = P(X <= t-1) = I_{1/(1+N)}(K, t)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t_arr)
    pos = t_arr >= 1.0
    if n_mean == 0.0:
        out[pos] = 1.0
    elif np.any(pos):
        out[pos] = betainc(float(K), t_arr[pos], 1.0 / (1.0 + n_mean))
    return out


def _crossing_threshold(stats: OpaStatistics, K: int) -> int:
    """Gaussian crossing point of the two count laws, rounded up."""
    crossing = (
        K
        * (stats.sigma1 * stats.n0 + stats.sigma0 * stats.n1)
        / (stats.sigma0 + stats.sigma1)
    )
    return int(math.ceil(crossing))


def _scan_window(stats: OpaStatistics, K: int) -> np.ndarray:
    """Integer thresholds within _SCAN_SIGMAS pooled deviations of the means;
    error contributions from thresholds outside are negligible."""
    sk = math.sqrt(K)
    lo = max(0, math.floor(K * stats.n0 - _SCAN_SIGMAS * stats.sigma0 * sk))
    hi = math.ceil(K * stats.n1 + _SCAN_SIGMAS * stats.sigma1 * sk)
    return np.arange(lo, hi + 1, dtype=np.int64)


def opa_error_exact(params, G: float, K: int, policy) -> Tuple[float, DecisionRule]:
    """Exact threshold-test error of the OPA receiver over K mode pairs.

    policy 'paper_formula' uses the Gaussian crossing threshold;
    'optimal_scan' minimizes over a window of integer thresholds (first
    minimizer wins, deterministically).  kappa = 0 makes both count laws
    identical; that case returns 1/2 with a degenerate rule instead of
    pretending to decide.
    """
    from .scenario import ThresholdPolicy

    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    policy = ThresholdPolicy(policy)
    stats = opa_output_means(params, G)
    if stats.n1 == stats.n0:
        return 0.5, DecisionRule(threshold=0, degenerate=True)

    if policy is ThresholdPolicy.PAPER_FORMULA:
        t = _crossing_threshold(stats, K)
        pe = 0.5 * float(
            _nb_tail_upper(t, K, stats.n0)[0] + _nb_tail_lower(t, K, stats.n1)[0]
        )
        return pe, DecisionRule(threshold=t)

    ts = _scan_window(stats, K)
    pe_all = 0.5 * (
        _nb_tail_upper(ts, K, stats.n0) + _nb_tail_lower(ts, K, stats.n1)
    )
    i = int(np.argmin(pe_all))
    return float(pe_all[i]), DecisionRule(threshold=int(ts[i]))


def opa_error_gaussian(params, G: float, K: int) -> Tuple[float, float]:
    """Gaussian-approximation error of the OPA threshold test and its
    exponent R_OPA = (N1-N0)^2 / (2 (sigma0+sigma1)^2).

    Returns (probability, r_opa); probability = erfc(sqrt(r_opa K)) / 2.
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    stats = opa_output_means(params, G)
    r_opa = (stats.n1 - stats.n0) ** 2 / (2.0 * (stats.sigma0 + stats.sigma1) ** 2)
    pe, _ = half_erfc_sqrt(r_opa * K)
    return pe, r_opa


def optimize_gain(params, g_max: float = _GAIN_MAX) -> GainOptimum:
    """Maximize R_OPA over G in (1, g_max] by golden section on log(G-1).

    The objective is flat when kappa = 0; that returns a degenerate result
    rather than a fake optimum.
    """
    if params.kappa == 0.0:
        return GainOptimum(g_star=None, r_opa=0.0, degenerate=True)
    if not g_max > 1.0 + _GAIN_MIN_EXCESS:
        raise DomainError(f"g_max must exceed 1, got {g_max}")

    def neg_r(t: float) -> float:
        _, r = opa_error_gaussian(params, 1.0 + math.exp(t), K=1)
        return -r

    t_star, neg_best = golden_section_min(
        neg_r, math.log(_GAIN_MIN_EXCESS), math.log(g_max - 1.0), _GAIN_REL_TOL
    )
    return GainOptimum(g_star=1.0 + math.exp(t_star), r_opa=-neg_best)


def opa_bhattacharyya(params, G: float) -> Tuple[float, float, float]:
    """Per-mode Bhattacharyya overlap of the two OPA count laws.

    Returns (q_b, r_b_exact, r_b_small_gain) where

        q_b = 1 / (sqrt((1+N0)(1+N1)) - sqrt(N0 N1)),   r_b_exact = -ln q_b

    and r_b_small_gain is the weak-gain expansion with eps^2 = G - 1:

        eps^2 kappa n_s (n_s+1) /
            (2 n_s (n_s+1) + 2 eps^2 (1+2 n_s)(1+n_s+n_b))
    """
    stats = opa_output_means(params, G)
    n0, n1 = stats.n0, stats.n1
    denom = math.sqrt((1.0 + n0) * (1.0 + n1)) - math.sqrt(n0 * n1)
    q_b = 1.0 / denom
    r_b_exact = math.log(denom)

    eps2 = G - 1.0
    n_s, kappa, n_b = params.n_s, params.kappa, params.n_b
    r_b_small = (
        eps2 * kappa * n_s * (n_s + 1.0)
        / (
            2.0 * n_s * (n_s + 1.0)
            + 2.0 * eps2 * (1.0 + 2.0 * n_s) * (1.0 + n_s + n_b)
        )
    )
    return q_b, r_b_exact, r_b_small


def _onoff_window(q0: float, q1: float, K: int) -> np.ndarray:
    s0 = math.sqrt(q0 * (1.0 - q0))
    s1 = math.sqrt(q1 * (1.0 - q1))
    sk = math.sqrt(K)
    lo = max(0, math.floor(K * q0 - _SCAN_SIGMAS * s0 * sk))
    hi = min(K + 1, math.ceil(K * q1 + _SCAN_SIGMAS * s1 * sk) + 1)
    return np.arange(lo, hi + 1, dtype=np.int64)


def _binom_tail_upper(t, K: int, q: float):
    """P(clicks >= t) for clicks ~ Binomial(K, q)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.ones_like(t_arr)
    over = t_arr > K
    mid = (t_arr >= 1.0) & ~over
    out[over] = 0.0
    if q == 0.0:
        out[mid] = 0.0
    elif np.any(mid):
        out[mid] = betainc(t_arr[mid], K - t_arr[mid] + 1.0, q)
    return out


def _binom_tail_lower(t, K: int, q: float):
    """P(clicks < t) = P(clicks <= t-1) for clicks ~ Binomial(K, q)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t_arr)
    over = t_arr > K
    mid = (t_arr >= 1.0) & ~over
    out[over] = 1.0
    if q == 1.0:
        out[mid] = 0.0
    elif np.any(mid):
        out[mid] = betainc(K - t_arr[mid] + 1.0, t_arr[mid], 1.0 - q)
    return out


def opa_error_onoff(params, G: float, K: int, policy) -> float:
    """OPA receiver error with a click / no-click detector per mode.

    Each output mode clicks with probability q_m = N_m / (1 + N_m), the
    total click count is Binomial(K, q_m), and the decision thresholds it.
    """
    from .scenario import ThresholdPolicy

    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    policy = ThresholdPolicy(policy)
    stats = opa_output_means(params, G)
    if stats.n1 == stats.n0:
        return 0.5
    q0 = stats.n0 / (1.0 + stats.n0)
    q1 = stats.n1 / (1.0 + stats.n1)

    if policy is ThresholdPolicy.PAPER_FORMULA:
        s0 = math.sqrt(q0 * (1.0 - q0))
        s1 = math.sqrt(q1 * (1.0 - q1))
        t = int(math.ceil(K * (s1 * q0 + s0 * q1) / (s0 + s1)))
        return 0.5 * float(
            _binom_tail_upper(t, K, q0)[0] + _binom_tail_lower(t, K, q1)[0]
        )

    ts = _onoff_window(q0, q1, K)
    pe_all = 0.5 * (_binom_tail_upper(ts, K, q0) + _binom_tail_lower(ts, K, q1))
    return float(pe_all.min())


# --- optimal joint measurement ----------------------------------------------

def helstrom_single_shot(rho0: JointState, rho1: JointState) -> HelstromResult:
    """Optimal-measurement error for one mode pair.

    Decides target-present on the positive eigenspace of rho1 - rho0 and
    target-absent on the negative one; the zero eigenspace (relevant only
    for identical states) is split by a fair coin, which leaves

        pe_single = (1 - sum of positive eigenvalues) / 2 = (p01 + p10) / 2

    intact.  Only the average is guaranteed to stay at or below 1/2; for
    nearly identical states one conditional rate can land slightly above.
    """
    if not (isinstance(rho0, JointState) and isinstance(rho1, JointState)):
        raise DomainError("helstrom_single_shot needs two JointStates")
    if rho0.trunc != rho1.trunc or set(rho0.blocks) != set(rho1.blocks):
        raise DomainError("state pair must share truncation and block set")
    tr0, tr1 = rho0.trace(), rho1.trace()
    if tr0 < 1.0 - 1e-6 or tr1 < 1.0 - 1e-6:
        raise DomainError(f"state traces too small ({tr0:.8f}, {tr1:.8f})")

    decomps = []
    w_max = 0.0
    clamped = 0.0
    for d in sorted(rho0.blocks):
        b0, b1 = rho0.blocks[d], rho1.blocks[d]
        w, v = np.linalg.eigh(b1 - b0)
        decomps.append((d, w, v, b0, b1))
        if w.size:
            w_max = max(w_max, float(np.abs(w).max()))
        e0 = np.linalg.eigvalsh(b0)
        e1 = np.linalg.eigvalsh(b1)
        clamped += float(-e0[e0 < 0.0].sum()) + float(-e1[e1 < 0.0].sum())

    # Absolute floor: for identical states every eigenvalue is cancellation
    # noise (~1e-15) and a purely relative cut would classify that noise as
    # signal, biasing p01/p10 arbitrarily.  Genuine eigenvalues below 1e-14
    # contribute less than dim * 1e-14 to any reported probability.
    ztol = max(1e-12 * w_max, 1e-14)
    gamma_plus = 0.0
    p01 = 0.0
    tr_pi_rho1 = 0.0
    for _, w, v, b0, b1 in decomps:
        pos = w > ztol
        zero = np.abs(w) <= ztol
        gamma_plus += float(w[pos].sum()) + 0.5 * float(w[zero].sum())
        if pos.any():
            vp = v[:, pos]
            p01 += float(np.trace(vp.T @ b0 @ vp))
            tr_pi_rho1 += float(np.trace(vp.T @ b1 @ vp))
        if zero.any():
            vz = v[:, zero]
            p01 += 0.5 * float(np.trace(vz.T @ b0 @ vz))
            tr_pi_rho1 += 0.5 * float(np.trace(vz.T @ b1 @ vz))

    return HelstromResult(
        pe_single=0.5 * (1.0 - gamma_plus),
        p01=p01,
        p10=1.0 - tr_pi_rho1,
        clamped_mass=clamped,
    )


def majority_vote_error(p01: float, p10: float, K: int, method: str = "exact_binomial"):
    """Error of a majority vote over K independent single-pair decisions.

    Votes for target-present are Binomial(K, p01) under H0 and
    Binomial(K, 1 - p10) under H1; the vote decides target-present only on
    a strict majority, so ties (even K) go to target-absent.  'exact_binomial'
    uses incomplete-beta tails; 'clt' the midpoint-corrected Gaussian.
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    # Identical truncated states put half the tail deficit on p10, landing it
    # a few 1e-10 above 1/2; tolerate that much and clip, reject real excess.
    slack = 1e-8
    clipped = []
    for name, p in (("p01", p01), ("p10", p10)):
        if not 0.0 <= p <= 0.5 + slack:
            raise DomainError(f"{name} must lie in [0, 1/2], got {p}")
        clipped.append(min(p, 0.5))
    p01, p10 = clipped
    t = K // 2 + 1  # smallest winning vote count for target-present

    if method == "exact_binomial":
        err0 = float(_binom_tail_upper(t, K, p01)[0])
        err1 = float(_binom_tail_lower(t, K, 1.0 - p10)[0])
        return 0.5 * (err0 + err1)
    if method == "clt":
        if p01 == 0.0:
            err0 = 0.0
        else:
            z0 = (t - 0.5 - K * p01) / math.sqrt(K * p01 * (1.0 - p01))
            err0 = float(ndtr(-z0))
        if p10 == 0.0:
            err1 = 0.0
        else:
            q = 1.0 - p10
            z1 = (K * q - (t - 0.5)) / math.sqrt(K * q * (1.0 - q))
            err1 = float(ndtr(-z1))
        return 0.5 * (err0 + err1)
    raise DomainError(f"method must be 'exact_binomial' or 'clt', got {method!r}")


def resolve_gain(params, gain_spec) -> Tuple[Optional[float], str]:
    """Turn a gain spec (float, 'auto' or 'bhatt') into a concrete G.

    Returns (G, note).  G is None when the optimization is degenerate
    (kappa = 0), in which case every OPA quantity collapses to chance.
    """
    from .scenario import GAIN_AUTO, GAIN_BHATT

    if isinstance(gain_spec, str):
        if gain_spec == GAIN_AUTO:
            opt = optimize_gain(params)
            if opt.degenerate:
                return None, "gain optimization degenerate (kappa = 0)"
            return opt.g_star, f"auto-optimized, R_OPA={opt.r_opa:.6e}"
        if gain_spec == GAIN_BHATT:
            if params.n_b <= 0.0:
                raise DomainError("gain preset 'bhatt' needs n_b > 0")
            return 1.0 + params.n_s / math.sqrt(params.n_b), "preset G = 1 + n_s/sqrt(n_b)"
        raise DomainError(f"unknown gain spec {gain_spec!r}")
    if not math.isfinite(gain_spec) or gain_spec <= 1.0:
        raise DomainError(f"explicit gain must satisfy G > 1, got {gain_spec}")
    return float(gain_spec), "explicit"
