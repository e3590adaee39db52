"""Scenario and receiver parameters, validation, and flat-config parsing.

A scenario is the physical side of the detection problem: mean signal
photons per mode ``n_s``, round-trip channel transmissivity ``kappa`` and
mean background photons per mode ``n_b``.  The receiver side collects the
knobs of the optical-parametric-amplifier detector: gain, number of mode
pairs, thresholding policy and count model.  Hypotheses are taken equally
likely throughout; unequal priors would only rescale prefactors, never
error exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

from .errors import DomainError, ParseError

# The weak-signal, lossy, bright-background corner where the closed-form
# exponent approximations hold.
REGIME_NS_MAX = 0.1
REGIME_KAPPA_MAX = 0.1
REGIME_NB_MIN = 10.0

GAIN_AUTO = "auto"    # pick the gain that maximizes the OPA exponent
GAIN_BHATT = "bhatt"  # small-gain preset G = 1 + n_s / sqrt(n_b)


class ThresholdPolicy(Enum):
    """How the count threshold of the OPA receiver is chosen."""

    PAPER_FORMULA = "paper_formula"   # Gaussian crossing point of the two count laws
    OPTIMAL_SCAN = "optimal_scan"     # scan integer thresholds for the minimum error


class CountModel(Enum):
    """Detector statistics at the OPA output."""

    FULL_COUNTING = "full_counting"   # photon-number-resolving detector
    ON_OFF = "on_off"                 # click / no-click detector


@dataclass(frozen=True)
class ScenarioParams:
    """Physical parameters of one target-detection scenario."""

    n_s: float
    kappa: float
    n_b: float

    def __post_init__(self):
        for name in ("n_s", "kappa", "n_b"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DomainError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.n_s <= 0.0:
            raise DomainError(f"n_s must be > 0, got {self.n_s}")
        if not 0.0 <= self.kappa <= 1.0:
            raise DomainError(f"kappa must lie in [0, 1], got {self.kappa}")
        if self.n_b < 0.0:
            raise DomainError(f"n_b must be >= 0, got {self.n_b}")

    @property
    def regime_ok(self) -> bool:
        """True when the closed-form exponent approximations are trustworthy."""
        return (
            self.n_s <= REGIME_NS_MAX
            and self.kappa <= REGIME_KAPPA_MAX
            and self.n_b >= REGIME_NB_MIN
        )


@dataclass(frozen=True)
class ReceiverConfig:
    """Receiver knobs: gain spec, copy count, threshold policy, count model."""

    gain: Union[float, str] = GAIN_AUTO
    k: int = 1
    threshold_policy: ThresholdPolicy = ThresholdPolicy.PAPER_FORMULA
    count_model: CountModel = CountModel.FULL_COUNTING

    def __post_init__(self):
        if isinstance(self.gain, str):
            if self.gain not in (GAIN_AUTO, GAIN_BHATT):
                raise DomainError(
                    f"gain must be a float > 1, '{GAIN_AUTO}' or '{GAIN_BHATT}', "
                    f"got {self.gain!r}"
                )
        else:
            if not isinstance(self.gain, (int, float)) or isinstance(self.gain, bool):
                raise DomainError(f"gain must be numeric or a preset name, got {self.gain!r}")
            if not math.isfinite(self.gain) or self.gain <= 1.0:
                raise DomainError(f"explicit gain must satisfy G > 1, got {self.gain}")
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise DomainError(f"k must be an integer >= 1, got {self.k!r}")
        if not isinstance(self.threshold_policy, ThresholdPolicy):
            raise DomainError(f"bad threshold_policy: {self.threshold_policy!r}")
        if not isinstance(self.count_model, CountModel):
            raise DomainError(f"bad count_model: {self.count_model!r}")


def validate_params(raw) -> ScenarioParams:
    """Coerce raw input into a validated ScenarioParams.

    Accepts an existing ScenarioParams (idempotent) or a mapping with keys
    n_s, kappa, n_b.  Raises DomainError on out-of-range values.
    """
    if isinstance(raw, ScenarioParams):
        return raw
    if isinstance(raw, Mapping):
        extra = set(raw) - {"n_s", "kappa", "n_b"}
        if extra:
            raise DomainError(f"unknown parameter keys: {sorted(extra)}")
        try:
            return ScenarioParams(
                n_s=float(raw["n_s"]), kappa=float(raw["kappa"]), n_b=float(raw["n_b"])
            )
        except KeyError as exc:
            raise DomainError(f"missing parameter key: {exc.args[0]}") from None
    raise DomainError(f"cannot validate object of type {type(raw).__name__}")


_SCENARIO_KEYS = ("n_s", "kappa", "n_b")
_RECEIVER_KEYS = ("gain", "k", "threshold_policy", "count_model")


def _parse_float(key: str, value: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"line {lineno}: key '{key}' needs a number, got {value!r}") from None


def parse_config(text: str):
    """Parse a flat ``key=value`` document into (ScenarioParams, ReceiverConfig).

    Lines are independent; ``#`` starts a comment; unknown or duplicate keys
    are rejected.  Scenario keys are required, receiver keys fall back to
    defaults (gain=auto, k=1, paper_formula, full_counting).
    """
    seen: dict = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key=value, got {rawline.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCENARIO_KEYS and key not in _RECEIVER_KEYS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ParseError(f"line {lineno}: key {key!r} has no value")
        seen[key] = (value, lineno)

    missing = [k for k in _SCENARIO_KEYS if k not in seen]
    if missing:
        raise ParseError(f"missing required keys: {missing}")

    params = ScenarioParams(
        n_s=_parse_float("n_s", *seen["n_s"]),
        kappa=_parse_float("kappa", *seen["kappa"]),
        n_b=_parse_float("n_b", *seen["n_b"]),
    )

    kwargs: dict = {}
    if "gain" in seen:
        value, lineno = seen["gain"]
        if value in (GAIN_AUTO, GAIN_BHATT):
            kwargs["gain"] = value
        else:
            kwargs["gain"] = _parse_float("gain", value, lineno)
    if "k" in seen:
        value, lineno = seen["k"]
        try:
            kwargs["k"] = int(value, 10)
        except ValueError:
            raise ParseError(f"line {lineno}: key 'k' needs an integer, got {value!r}") from None
    if "threshold_policy" in seen:
        value, lineno = seen["threshold_policy"]
        try:
            kwargs["threshold_policy"] = ThresholdPolicy(value)
        except ValueError:
            raise ParseError(f"line {lineno}: unknown threshold_policy {value!r}") from None
    if "count_model" in seen:
        value, lineno = seen["count_model"]
        try:
            kwargs["count_model"] = CountModel(value)
        except ValueError:
            raise ParseError(f"line {lineno}: unknown count_model {value!r}") from None

    return params, ReceiverConfig(**kwargs)


def render_config(params: ScenarioParams, receiver: ReceiverConfig) -> str:
    """Serialize a (params, receiver) pair so parse_config round-trips exactly.

    Floats are written with repr, which is lossless for doubles.
    """
    gain = receiver.gain if isinstance(receiver.gain, str) else repr(float(receiver.gain))
    lines = [
        f"n_s={params.n_s!r}",
        f"kappa={params.kappa!r}",
        f"n_b={params.n_b!r}",
        f"gain={gain}",
        f"k={receiver.k}",
        f"threshold_policy={receiver.threshold_policy.value}",
        f"count_model={receiver.count_model.value}",
    ]
    return "\n".join(lines) + "\n"
