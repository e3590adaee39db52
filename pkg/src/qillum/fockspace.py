"""Truncated Fock-space representation of the return-idler state pair.

Under both hypotheses the joint state of one return-idler mode pair only
connects number states with equal photon-number difference
``d = n_R - n_I``, so each density operator is stored as a map from d to a
small dense real-symmetric block over the basis ``{|n2 + d, n2>}``.  The
return mode may need several hundred levels when the background is bright,
while the idler stays within a handful, so this layout keeps everything at
desk scale.

Matrix elements are accumulated as log magnitudes and exponentiated once;
factorials of a few hundred never appear in linear form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, TruncationError

__all__ = [
    "TruncationSpec",
    "JointState",
    "MomentReport",
    "SpectralData",
    "thermal_cutoff",
    "idler_photon_pmf",
    "hypergeom_2f1_terminating",
    "build_rho0",
    "build_rho1",
    "moments_check",
    "block_eigendecompose",
    "thermal_state",
    "build_displaced_thermal",
]

_NEG_EIG_FLOOR = -1e-10  # states must be positive semidefinite up to this


def thermal_cutoff(mean: float, tail_tol: float) -> int:
    """Smallest cutoff n such that a thermal state of the given mean has
    tail mass (mean/(mean+1))**(n+1) <= tail_tol beyond n."""
    if mean < 0.0:
        raise DomainError(f"mean must be >= 0, got {mean}")
    if not 0.0 < tail_tol < 1.0:
        raise DomainError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if mean == 0.0:
        return 0
    x = mean / (mean + 1.0)
    n = max(0, math.ceil(math.log(tail_tol) / math.log(x)) - 1)
    # one-step fixups against floating-point edge cases
    while x ** (n + 1) > tail_tol:
        n += 1
    while n > 0 and x ** n <= tail_tol:
        n -= 1
    return n


@dataclass(frozen=True)
class TruncationSpec:
    """Cutoffs of the two-mode Fock space and the tail tolerance behind them."""

    n_r_max: int
    n_i_max: int
    tail_tol: float

    def __post_init__(self):
        if self.n_r_max < 0 or self.n_i_max < 0:
            raise DomainError("cutoffs must be >= 0")
        if not 0.0 < self.tail_tol < 1.0:
            raise DomainError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")

    @classmethod
    def for_params(cls, params, tail_tol: float = 1e-9) -> "TruncationSpec":
        """Tolerance-driven cutoffs for a scenario: the return mode is cut
        where the thermal background tail drops below tail_tol, the idler
        where the signal marginal does."""
        return cls(
            n_r_max=thermal_cutoff(params.n_b, tail_tol),
            n_i_max=thermal_cutoff(params.n_s, tail_tol),
            tail_tol=tail_tol,
        )

    def validate_for(self, params) -> None:
        """Raise TruncationError if either cutoff leaves more than tail_tol."""
        for label, mean, n in (
            ("return", params.n_b, self.n_r_max),
            ("idler", params.n_s, self.n_i_max),
        ):
            if mean == 0.0:
                continue
            x = mean / (mean + 1.0)
            tail = x ** (n + 1)
            if tail > self.tail_tol:
                raise TruncationError(
                    f"{label} cutoff {n} leaves tail mass {tail:.3e} > {self.tail_tol:.3e}"
                )


def idler_photon_pmf(n_s: float, n: int) -> float:
    """Photon-number distribution of the retained idler: n_s**n / (n_s+1)**(n+1)."""
    if n_s < 0.0:
        raise DomainError(f"n_s must be >= 0, got {n_s}")
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if n == 0:
        return 1.0 / (1.0 + n_s)
    if n_s == 0.0:
        return 0.0
    return math.exp(n * math.log(n_s) - (n + 1) * math.log1p(n_s))


def _log_thermal_weight(n: int, mean: float) -> float:
    """log of mean**n / (mean+1)**(n+1); -inf when mean == 0 and n > 0."""
    if mean == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(mean) - (n + 1) * math.log1p(mean)


# --- terminating Gauss hypergeometric -------------------------------------

def _logsumexp_pos(logs) -> float:
    """log(sum(exp(l))) for a short list of finite-or--inf logs of positives."""
    m = max(logs)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(v - m) for v in logs))


def _hyp2f1_chu_vandermonde(n1: int, n2: int, c_mag: int) -> float:
    # 2F1(-n1, -n2; -c; 1) = (c - n2)! (c - n1)! / (c! (c - n1 - n2)!)
    lg = math.lgamma
    return math.exp(
        lg(c_mag - n2 + 1) + lg(c_mag - n1 + 1) - lg(c_mag + 1) - lg(c_mag - n1 - n2 + 1)
    )


def hypergeom_2f1_terminating(n1: int, n2: int, c_mag: int, z: float) -> float:
    """Gauss series 2F1(-n1, -n2; -c_mag; z) for integers n1, n2 >= 0.

    The sum terminates after min(n1, n2) + 1 terms.  Requires
    c_mag >= n1 + n2 so no denominator Pochhammer vanishes early.

    For 0 < z < 1 the direct series alternates and can cancel many digits,
    so it is rerouted through the Pfaff transform
    2F1(-n1,-n2;-c;z) = (1-z)**nb * 2F1(-nb, -(c-na); -c; z/(z-1))
    (na, nb the larger/smaller of n1, n2), whose terms are all positive and
    are accumulated as a log-sum-exp.  z == 1 uses the Chu-Vandermonde
    closed form.  Negative z makes the direct series positive term by term.
    """
    for name, v in (("n1", n1), ("n2", n2), ("c_mag", c_mag)):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
            raise DomainError(f"{name} must be a non-negative integer, got {v!r}")
    if not math.isfinite(z):
        raise DomainError(f"z must be finite, got {z}")
    if c_mag < n1 + n2:
        raise DomainError(
            f"need c_mag >= n1 + n2 for a well-defined terminating series, "
            f"got c_mag={c_mag}, n1+n2={n1 + n2}"
        )
    if min(n1, n2) == 0 or z == 0.0:
        return 1.0
    if z == 1.0:
        return _hyp2f1_chu_vandermonde(n1, n2, c_mag)

    lg = math.lgamma
    if 0.0 < z < 1.0:
        # Pfaff transform on the smaller index: positive terms only.
        na, nb = (n1, n2) if n1 >= n2 else (n2, n1)
        m = c_mag - na  # second falling index; m >= nb by the c_mag check
        logw = math.log(z) - math.log1p(-z)  # log|z/(z-1)|
        logs = []
        for j in range(nb + 1):
            logs.append(
                (lg(nb + 1) - lg(nb - j + 1))
                + (lg(m + 1) - lg(m - j + 1))
                - (lg(c_mag + 1) - lg(c_mag - j + 1))
                - lg(j + 1)
                + j * logw
            )
        return math.exp(nb * math.log1p(-z) + _logsumexp_pos(logs))

    if z < 0.0:
        # direct series; (-1)^j from the Pochhammers cancels sign(z)^j
        logz = math.log(-z)
        logs = []
        for j in range(min(n1, n2) + 1):
            logs.append(
                (lg(n1 + 1) - lg(n1 - j + 1))
                + (lg(n2 + 1) - lg(n2 - j + 1))
                - (lg(c_mag + 1) - lg(c_mag - j + 1))
                - lg(j + 1)
                + j * logz
            )
        return math.exp(_logsumexp_pos(logs))

    # z > 1: direct alternating series, scaled compensated summation.
    logz = math.log(z)
    logmags = []
    for j in range(min(n1, n2) + 1):
        logmags.append(
            (lg(n1 + 1) - lg(n1 - j + 1))
            + (lg(n2 + 1) - lg(n2 - j + 1))
            - (lg(c_mag + 1) - lg(c_mag - j + 1))
            - lg(j + 1)
            + j * logz
        )
    peak = max(logmags)
    total = math.fsum(
        (-1.0) ** j * math.exp(lm - peak) for j, lm in enumerate(logmags)
    )
    return math.exp(peak) * total


# --- joint states ----------------------------------------------------------

def _block_range(d: int, trunc: TruncationSpec) -> Tuple[int, int]:
    """Inclusive idler-number range (lo, hi) of block d."""
    lo = max(0, -d)
    hi = min(trunc.n_i_max, trunc.n_r_max - d)
    return lo, hi


@dataclass(frozen=True)
class JointState:
    """One return-idler density operator, block-diagonal in d = n_R - n_I.

    blocks[d] is a real-symmetric matrix over idler numbers
    n2 = max(0,-d) .. min(n_i_max, n_r_max - d); the paired return number is
    n2 + d.  Treated as immutable after construction.
    """

    blocks: Dict[int, np.ndarray]
    trunc: TruncationSpec
    hypothesis: str

    def block_basis(self, d: int) -> Tuple[np.ndarray, np.ndarray]:
        """(return numbers, idler numbers) labeling the rows of blocks[d]."""
        lo, hi = _block_range(d, self.trunc)
        n2 = np.arange(lo, hi + 1)
        return n2 + d, n2

    def trace(self) -> float:
        return float(sum(np.trace(b) for b in self.blocks.values()))

    def hermiticity_defect(self) -> float:
        return float(
            max((np.abs(b - b.T).max() if b.size else 0.0) for b in self.blocks.values())
        )

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(b).min() for b in self.blocks.values()))

    def to_dense(self) -> np.ndarray:
        """Assemble the full two-mode matrix, index (n1, n2) -> n1*(n_i_max+1)+n2.

        For oracle comparisons and debugging only; the block form is the
        working representation.
        """
        ni = self.trunc.n_i_max + 1
        dim = (self.trunc.n_r_max + 1) * ni
        out = np.zeros((dim, dim))
        for d, block in self.blocks.items():
            n1s, n2s = self.block_basis(d)
            idx = n1s * ni + n2s
            out[np.ix_(idx, idx)] = block
        return out


@dataclass(frozen=True)
class MomentReport:
    """First moments of a joint state: mode occupations and the magnitude
    of the phase-sensitive cross correlation <a_R a_I>."""

    mean_n_r: float
    mean_n_i: float
    cross_corr: float

    def __post_init__(self):
        for name in ("mean_n_r", "mean_n_i", "cross_corr"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {v}")


def _all_block_ds(trunc: TruncationSpec):
    return range(-trunc.n_i_max, trunc.n_r_max + 1)


def build_rho0(params, trunc: TruncationSpec) -> JointState:
    """Target-absent state: thermal background in the return mode times the
    idler marginal.  Diagonal in the number basis."""
    trunc.validate_for(params)
    blocks: Dict[int, np.ndarray] = {}
    for d in _all_block_ds(trunc):
        lo, hi = _block_range(d, trunc)
        size = hi - lo + 1
        diag = np.empty(size)
        for i, n2 in enumerate(range(lo, hi + 1)):
            n1 = n2 + d
            lw = _log_thermal_weight(n1, params.n_b) + _log_thermal_weight(n2, params.n_s)
            diag[i] = math.exp(lw) if lw > -math.inf else 0.0
        blocks[d] = np.diag(diag)
    return JointState(blocks=blocks, trunc=trunc, hypothesis="H0")


def build_rho1(params, trunc: TruncationSpec) -> JointState:
    """Target-present state: the reflected signal mixes with the background
    at transmissivity kappa while the idler is retained.

    Element with row (n1+l, n2+l) and column (n1, n2), l >= 0:

        sqrt(n1! n2! / ((n1+l)! (n2+l)!)) * sqrt(p_{n2+l} p_{n2}) * kappa**(l/2)
        * (n1+n2+l)! / (n1! n2!)
        * (n_b+1-kappa)**n2 * n_b**n1 / (n_b+1)**(n1+n2+l+1)
        * 2F1(-n1, -n2; -(n1+n2+l); 1 - kappa/(n_b (n_b+1-kappa)))

    with p_n the idler pmf; l < 0 follows from symmetry.  Requires n_b > 0
    (the zero-background limit concentrates the series argument and is
    rejected rather than approximated).
    """
    if params.n_b == 0.0:
        raise DomainError("build_rho1 requires n_b > 0")
    trunc.validate_for(params)

    n_s, kappa, n_b = params.n_s, params.kappa, params.n_b
    log_kappa = math.log(kappa) if kappa > 0.0 else -math.inf
    log_nb = math.log(n_b)
    log_nb1 = math.log1p(n_b)
    log_nbk = math.log(n_b + 1.0 - kappa)
    z = 1.0 - kappa / (n_b * (n_b + 1.0 - kappa))
    lg = math.lgamma

    log_pmf = [
        _log_thermal_weight(n, n_s) for n in range(trunc.n_i_max + 1)
    ]

    blocks: Dict[int, np.ndarray] = {}
    for d in _all_block_ds(trunc):
        lo, hi = _block_range(d, trunc)
        size = hi - lo + 1
        block = np.zeros((size, size))
        for c, n2 in enumerate(range(lo, hi + 1)):
            n1 = n2 + d
            for r in range(c, size):
                l = r - c
                if l > 0 and kappa == 0.0:
                    continue
                log_elem = (
                    0.5 * (lg(n1 + 1) + lg(n2 + 1) - lg(n1 + l + 1) - lg(n2 + l + 1))
                    + 0.5 * (log_pmf[n2 + l] + log_pmf[n2])
                    + (0.5 * l * log_kappa if l > 0 else 0.0)
                    + lg(n1 + n2 + l + 1) - lg(n1 + 1) - lg(n2 + 1)
                    + n2 * log_nbk + n1 * log_nb - (n1 + n2 + l + 1) * log_nb1
                )
                if log_elem == -math.inf:
                    continue
                elem = math.exp(log_elem) * hypergeom_2f1_terminating(
                    n1, n2, n1 + n2 + l, z
                )
                block[r, c] = elem
                block[c, r] = elem  # state is real-symmetric
        blocks[d] = block
    return JointState(blocks=blocks, trunc=trunc, hypothesis="H1")


def moments_check(state: JointState) -> MomentReport:
    """Read occupations and |<a_R a_I>| straight off the block elements.

    Independent of how the state was built, so it doubles as a consistency
    probe of the element formulas against the known covariance.
    """
    tr = state.trace()
    if tr < 0.999:
        raise DomainError(f"state trace {tr:.6f} too small for a moment check")
    mean_r = 0.0
    mean_i = 0.0
    cross = 0.0
    for d, block in state.blocks.items():
        n1s, n2s = state.block_basis(d)
        diag = np.diag(block)
        mean_r += float(diag @ n1s)
        mean_i += float(diag @ n2s)
        # <a_R a_I> picks up the first subdiagonal: <n1+1, n2+1| rho |n1, n2>
        if block.shape[0] > 1:
            sub = np.diag(block, -1)
            cross += float(
                np.sum(sub * np.sqrt((n1s[:-1] + 1.0) * (n2s[:-1] + 1.0)))
            )
    return MomentReport(mean_n_r=mean_r, mean_n_i=mean_i, cross_corr=abs(cross))


# --- spectra ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectralData:
    """Per-block eigensystems of a state pair.

    mode 'difference': eigvals/eigvecs[d] decompose rho1 - rho0.
    mode 'each': eigvals are (w0, w1) pairs with negatives clamped to zero;
    clamped_mass records how much was clamped in total.
    """

    mode: str
    ds: Tuple[int, ...]
    eigvals: Dict[int, object]
    eigvecs: Dict[int, object]
    clamped_mass: float = 0.0


def block_eigendecompose(state_pair, mode: str = "difference") -> SpectralData:
    """Eigendecompose a (rho0, rho1) pair block by block.

    'difference' diagonalizes rho1 - rho0 per block (for optimal-measurement
    error probabilities); 'each' diagonalizes the two states separately and
    clamps negative truncation leakage to zero (for fractional powers).
    """
    rho0, rho1 = state_pair
    if rho0.trunc != rho1.trunc:
        raise DomainError("state pair must share one TruncationSpec")
    if set(rho0.blocks) != set(rho1.blocks):
        raise DomainError("state pair must share the same block set")
    if mode not in ("difference", "each"):
        raise DomainError(f"mode must be 'difference' or 'each', got {mode!r}")

    ds = tuple(sorted(rho0.blocks))
    eigvals: Dict[int, object] = {}
    eigvecs: Dict[int, object] = {}
    clamped = 0.0
    for d in ds:
        if mode == "difference":
            w, v = np.linalg.eigh(rho1.blocks[d] - rho0.blocks[d])
            eigvals[d] = w
            eigvecs[d] = v
        else:
            w0, v0 = np.linalg.eigh(rho0.blocks[d])
            w1, v1 = np.linalg.eigh(rho1.blocks[d])
            clamped += float(-w0[w0 < 0.0].sum()) + float(-w1[w1 < 0.0].sum())
            eigvals[d] = (np.clip(w0, 0.0, None), np.clip(w1, 0.0, None))
            eigvecs[d] = (v0, v1)
    return SpectralData(
        mode=mode, ds=ds, eigvals=eigvals, eigvecs=eigvecs, clamped_mass=clamped
    )


# --- single-mode states for the classical benchmark -------------------------

def thermal_state(mean: float, cutoff: int) -> np.ndarray:
    """Truncated thermal density matrix with the given mean occupation."""
    if mean < 0.0:
        raise DomainError(f"mean must be >= 0, got {mean}")
    if cutoff < 0:
        raise DomainError(f"cutoff must be >= 0, got {cutoff}")
    n = np.arange(cutoff + 1)
    if mean == 0.0:
        diag = np.zeros(cutoff + 1)
        diag[0] = 1.0
    else:
        diag = np.exp(n * math.log(mean) - (n + 1) * math.log1p(mean))
    return np.diag(diag)


def build_displaced_thermal(
    mean_field: float,
    n_b: float,
    cutoff: int,
    tail_tol: float = 1e-9,
    pad: int = 20,
) -> np.ndarray:
    """Displace a truncated thermal state by a real field amplitude.

    The displacement is the matrix exponential of mean_field * (adag - a)
    on a space padded by ``pad`` extra levels, cropped back to ``cutoff``
    afterwards; the padding absorbs edge reflection.  The cutoff must leave
    less than tail_tol of a thermal tail at mean mean_field**2 + n_b.
    """
    if mean_field < 0.0:
        raise DomainError(f"mean_field must be >= 0, got {mean_field}")
    if n_b < 0.0:
        raise DomainError(f"n_b must be >= 0, got {n_b}")
    if cutoff < 0:
        raise DomainError(f"cutoff must be >= 0, got {cutoff}")
    mean_total = mean_field**2 + n_b
    if mean_total > 0.0:
        x = mean_total / (mean_total + 1.0)
        tail = x ** (cutoff + 1)
        if tail > tail_tol:
            raise TruncationError(
                f"cutoff {cutoff} leaves tail mass {tail:.3e} > {tail_tol:.3e} "
                f"for mean occupation {mean_total:.6g}"
            )
    if mean_field == 0.0:
        return thermal_state(n_b, cutoff)

    dim = cutoff + 1 + pad
    th = thermal_state(n_b, dim - 1)
    lower = np.diag(np.sqrt(np.arange(1.0, dim)), -1)  # adag in the number basis
    disp = expm(mean_field * (lower - lower.T))
    rho = disp @ th @ disp.T
    return np.ascontiguousarray(rho[: cutoff + 1, : cutoff + 1])
