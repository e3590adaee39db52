"""Command-line front end producing reproducible CSV artifacts.

Four subcommands cover the standard plots and tables:

    bounds     error-probability sandwich for both transmitters vs K
    helstrom   per-pair optimal measurement with majority vote vs the OPA
    exponents  closed-form and numeric error exponents for one scenario
    sweep      exponent report along a one-parameter grid

All data files are plain CSV with a single ``# params=<digest>`` comment
line; identical inputs produce byte-identical outputs (run metadata,
which may vary, goes to a ``meta.txt`` sidecar).  Exit codes: 0 success,
1 computation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .bounds import asymptotic_exponents, error_prob_bounds, q_s, qcb
from .errors import DomainError, ParseError, QIError
from .fockspace import (
    TruncationSpec,
    build_displaced_thermal,
    build_rho0,
    build_rho1,
    thermal_cutoff,
    thermal_state,
)
from .receivers import (
    helstrom_single_shot,
    homodyne_error,
    majority_vote_error,
    opa_bhattacharyya,
    opa_error_exact,
    opa_error_gaussian,
    opa_error_onoff,
    optimize_gain,
    resolve_gain,
)
from .scenario import (
    GAIN_AUTO,
    GAIN_BHATT,
    CountModel,
    ReceiverConfig,
    ScenarioParams,
    ThresholdPolicy,
    parse_config,
    render_config,
)

_LOG10_HALF = math.log10(0.5)

# The numeric Chernoff pass loops over every photon-number block in Python;
# past this return-mode cutoff (n_b around 250 at tail 1e-9) it is skipped
# in the exponents table and the closed forms stand alone.
_QCB_CUTOFF_CAP = 5000

_DEFAULT_PARAMS = ScenarioParams(n_s=0.01, kappa=0.01, n_b=20.0)

_UNDEF = "-"  # stdout placeholder for quantities with no defined value


@dataclasses.dataclass(frozen=True)
class ErrorCurve:
    """A labelled log10 error-probability curve over an integer K grid."""

    label: str
    points: Tuple[Tuple[int, float], ...]
    params_hash: str

    def __post_init__(self):
        ks = [k for k, _ in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError(f"curve {self.label!r}: K grid must be strictly increasing")
        for k, v in self.points:
            if v > _LOG10_HALF + 1e-12:
                raise DomainError(
                    f"curve {self.label!r}: log10 P_e = {v} above log10(1/2) at K={k}"
                )


# --- plumbing -----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _digest(params: ScenarioParams, receiver: ReceiverConfig, extra: Dict[str, object]) -> str:
    text = render_config(params, receiver)
    text += "".join(f"{key}={extra[key]}\n" for key in sorted(extra))
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:12]


def _write_csv(path: Path, digest: str, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [f"# params={digest}", ",".join(columns)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_meta(out_dir: Path, command: str, digest: str,
                params: ScenarioParams, receiver: ReceiverConfig,
                extra: Dict[str, object], notes: List[str]) -> None:
    lines = [
        "tool=qillum 0.1.0",
        f"command={command}",
        f"params_digest={digest}",
    ]
    lines.extend(render_config(params, receiver).splitlines())
    lines.extend(f"{key}={extra[key]}" for key in sorted(extra) if key != "command")
    lines.extend(f"note={note}" for note in notes)
    (out_dir / "meta.txt").write_text("\n".join(lines) + "\n", encoding="ascii")


def _k_grid(k_min: float, k_max: float, k_points: int) -> List[int]:
    if not (math.isfinite(k_min) and math.isfinite(k_max)):
        raise DomainError("K grid endpoints must be finite")
    if k_min < 1.0 or k_max < k_min:
        raise DomainError(f"need 1 <= k-min <= k-max, got {k_min}, {k_max}")
    if not 1 <= k_points <= 100000:
        raise DomainError(f"k-points must lie in [1, 100000], got {k_points}")
    if k_points == 1:
        return [int(round(k_min))]
    raw = np.logspace(math.log10(k_min), math.log10(k_max), k_points)
    return sorted({max(1, int(round(v))) for v in raw})


def _log10_or_inf(p: float) -> float:
    return math.log10(p) if p > 0.0 else float("-inf")


# --- configuration ------------------------------------------------------------


def _load_setup(args) -> Tuple[ScenarioParams, ReceiverConfig]:
    if args.config is not None:
        text = Path(args.config).read_text(encoding="utf-8")
        params, receiver = parse_config(text)
    else:
        params, receiver = _DEFAULT_PARAMS, ReceiverConfig()

    overrides: Dict[str, object] = {}
    if getattr(args, "gain", None) is not None:
        spec: Union[float, str] = args.gain
        if spec not in (GAIN_AUTO, GAIN_BHATT):
            try:
                spec = float(spec)
            except ValueError:
                raise ParseError(
                    f"--gain needs a number, '{GAIN_AUTO}' or '{GAIN_BHATT}', got {args.gain!r}"
                ) from None
        overrides["gain"] = spec
    if getattr(args, "threshold_policy", None) is not None:
        overrides["threshold_policy"] = ThresholdPolicy(args.threshold_policy)
    if getattr(args, "count_model", None) is not None:
        overrides["count_model"] = CountModel(args.count_model)
    if overrides:
        receiver = dataclasses.replace(receiver, **overrides)

    if not (math.isfinite(args.tail_tol) and 0.0 < args.tail_tol <= 1e-3):
        raise DomainError(f"--tail-tol must lie in (0, 1e-3], got {args.tail_tol}")
    return params, receiver


def _parse_grid(text: str) -> List[float]:
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            values.append(float(piece))
        except ValueError:
            raise ParseError(f"--grid entry {piece!r} is not a number") from None
    if not values:
        raise ParseError("--grid is empty")
    return values


def _sweep_points(params: ScenarioParams, axis: str, values: List[float]) -> List[ScenarioParams]:
    """Validate the whole grid eagerly so bad values fail as usage errors."""
    if axis == "gain":
        for v in values:
            if not (math.isfinite(v) and v > 1.0):
                raise DomainError(f"gain grid value {v} must satisfy G > 1")
        return [params] * len(values)
    return [dataclasses.replace(params, **{axis: v}) for v in values]


# --- numeric Chernoff quantities ----------------------------------------------


def _spdc_overlaps(params: ScenarioParams, tail_tol: float):
    """(s_star, Q_qcb, Q_half, trunc) for the entangled-transmitter pair."""
    trunc = TruncationSpec.for_params(params, tail_tol=tail_tol)
    rho0 = build_rho0(params, trunc)
    rho1 = build_rho1(params, trunc)
    s_star, q_min, _ = qcb(rho0, rho1)
    return s_star, q_min, q_s(rho0, rho1, 0.5), trunc


def _coherent_overlaps(params: ScenarioParams, tail_tol: float):
    """(s_star, Q_qcb, Q_half, cutoff) for thermal vs displaced thermal."""
    cutoff = thermal_cutoff(params.kappa * params.n_s + params.n_b, tail_tol)
    rho0 = thermal_state(params.n_b, cutoff)
    rho1 = build_displaced_thermal(
        math.sqrt(params.kappa * params.n_s), params.n_b, cutoff, tail_tol=tail_tol
    )
    s_star, q_min, _ = qcb(rho0, rho1)
    return s_star, q_min, q_s(rho0, rho1, 0.5), cutoff


# --- subcommands ----------------------------------------------------------------


def cmd_bounds(args, params: ScenarioParams, receiver: ReceiverConfig) -> None:
    ks = _k_grid(args.k_min, args.k_max, args.k_points)
    extra = {
        "command": "bounds",
        "tail_tol": repr(args.tail_tol),
        "k_grid": ",".join(str(k) for k in ks),
    }
    digest = _digest(params, receiver, extra)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    notes: List[str] = []

    columns = ["K", "lower_classical", "upper_classical", "lower_quantum",
               "upper_quantum", "homodyne", "opa_exact", "opa_gaussian"]

    if params.kappa == 0.0:
        # Identical hypotheses: every receiver and bound sits at chance.  The
        # numeric route would instead amplify the truncation deficit by K.
        rows = [[k] + [_LOG10_HALF] * 7 for k in ks]
        notes.append("kappa=0: all columns analytic log10(1/2)")
    else:
        _, q_qcb_q, q_half_q, trunc = _spdc_overlaps(params, args.tail_tol)
        _, q_qcb_c, q_half_c, _ = _coherent_overlaps(params, args.tail_tol)
        gain, gain_note = resolve_gain(params, receiver.gain)
        notes.append(f"gain: {gain_note}")
        notes.append(f"trunc: n_r_max={trunc.n_r_max} n_i_max={trunc.n_i_max}")
        series: Dict[str, List[Tuple[int, float]]] = {name: [] for name in columns[1:]}
        for k in ks:
            b_c = error_prob_bounds(q_half_c, q_qcb_c, k)
            b_q = error_prob_bounds(q_half_q, q_qcb_q, k)
            _, log10_hom = homodyne_error(params, k)
            pe_exact, _ = opa_error_exact(params, gain, k, receiver.threshold_policy)
            pe_gauss, _ = opa_error_gaussian(params, gain, k)
            series["lower_classical"].append((k, b_c.log10_lower))
            series["upper_classical"].append((k, b_c.log10_upper_qcb))
            series["lower_quantum"].append((k, b_q.log10_lower))
            series["upper_quantum"].append((k, b_q.log10_upper_qcb))
            series["homodyne"].append((k, log10_hom))
            series["opa_exact"].append((k, _log10_or_inf(pe_exact)))
            series["opa_gaussian"].append((k, _log10_or_inf(pe_gauss)))
        curves = {name: ErrorCurve(name, tuple(pts), digest) for name, pts in series.items()}
        rows = [[k] + [curves[name].points[i][1] for name in columns[1:]]
                for i, k in enumerate(ks)]

    _write_csv(out_dir / "bounds.csv", digest, columns, rows)
    _write_meta(out_dir, "bounds", digest, params, receiver, extra, notes)
    print(f"wrote {out_dir / 'bounds.csv'} ({len(rows)} rows)")


def cmd_helstrom(args, params: ScenarioParams, receiver: ReceiverConfig) -> None:
    ks = _k_grid(args.k_min, args.k_max, args.k_points)
    extra = {
        "command": "helstrom",
        "tail_tol": repr(args.tail_tol),
        "k_grid": ",".join(str(k) for k in ks),
    }
    digest = _digest(params, receiver, extra)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    notes: List[str] = []

    columns = ["K", "opa_exact", "helstrom_majority_exact", "helstrom_majority_clt"]
    if params.kappa == 0.0:
        rows = [[k] + [_LOG10_HALF] * 3 for k in ks]
        notes.append("kappa=0: all columns analytic log10(1/2)")
    else:
        trunc = TruncationSpec.for_params(params, tail_tol=args.tail_tol)
        result = helstrom_single_shot(build_rho0(params, trunc), build_rho1(params, trunc))
        # Majority voting needs both conditional rates at or below 1/2; the
        # raw split can put one leg above, so the vote uses the average error
        # as a symmetric per-pair flip probability.
        p_flip = result.pe_single
        gain, gain_note = resolve_gain(params, receiver.gain)
        notes.append(f"gain: {gain_note}")
        notes.append(f"helstrom single shot: pe={result.pe_single!r} "
                     f"p01={result.p01!r} p10={result.p10!r}")
        series: Dict[str, List[Tuple[int, float]]] = {name: [] for name in columns[1:]}
        for k in ks:
            pe_opa, _ = opa_error_exact(params, gain, k, receiver.threshold_policy)
            pe_maj = majority_vote_error(p_flip, p_flip, k, method="exact_binomial")
            pe_clt = majority_vote_error(p_flip, p_flip, k, method="clt")
            series["opa_exact"].append((k, _log10_or_inf(pe_opa)))
            series["helstrom_majority_exact"].append((k, _log10_or_inf(pe_maj)))
            series["helstrom_majority_clt"].append((k, _log10_or_inf(pe_clt)))
        curves = {name: ErrorCurve(name, tuple(pts), digest) for name, pts in series.items()}
        rows = [[k] + [curves[name].points[i][1] for name in columns[1:]]
                for i, k in enumerate(ks)]

    _write_csv(out_dir / "helstrom.csv", digest, columns, rows)
    _write_meta(out_dir, "helstrom", digest, params, receiver, extra, notes)
    print(f"wrote {out_dir / 'helstrom.csv'} ({len(rows)} rows)")


def _db_gain(value: Optional[float], r_c: float) -> Optional[float]:
    if value is None or value <= 0.0 or r_c <= 0.0:
        return None
    return 10.0 * math.log10(value / r_c)


def cmd_exponents(args, params: ScenarioParams, receiver: ReceiverConfig) -> None:
    report = asymptotic_exponents(params)
    notes: List[str] = []
    rows: List[Tuple[str, Optional[float], str]] = [
        ("r_q_closed", report.r_q, "kappa*n_s/n_b"),
        ("r_c_closed", report.r_c, "kappa*n_s/(4 n_b)"),
        ("r_c_hom_closed", report.r_c_hom, "kappa*n_s/(4 n_b + 2)"),
    ]

    if params.kappa == 0.0:
        rows.append(("r_q_numeric", 0.0, "identical hypotheses"))
        rows.append(("r_c_numeric", 0.0, "identical hypotheses"))
    else:
        trunc = TruncationSpec.for_params(params, tail_tol=args.tail_tol)
        if trunc.n_r_max <= _QCB_CUTOFF_CAP:
            s_q, q_min_q, _, _ = _spdc_overlaps(params, args.tail_tol)
            s_c, q_min_c, _, _ = _coherent_overlaps(params, args.tail_tol)
            rows.append(("r_q_numeric", -math.log(q_min_q), f"fock chernoff, s*={s_q:.4f}"))
            rows.append(("r_c_numeric", -math.log(q_min_c), f"fock chernoff, s*={s_c:.4f}"))
        else:
            rows.append(("r_q_numeric", None, f"skipped, cutoff {trunc.n_r_max} too large"))
            rows.append(("r_c_numeric", None, "skipped with r_q_numeric"))
            notes.append(f"numeric chernoff skipped: n_r_max={trunc.n_r_max} > {_QCB_CUTOFF_CAP}")

    gain, gain_note = resolve_gain(params, receiver.gain)
    notes.append(f"gain: {gain_note}")
    if gain is None:
        rows.append(("g_star", None, gain_note))
        rows.append(("r_opa", 0.0, "degenerate (kappa=0)"))
        rows.append(("r_b_exact", 0.0, "degenerate (kappa=0)"))
        rows.append(("r_b_small_gain", 0.0, "degenerate (kappa=0)"))
        r_opa: Optional[float] = 0.0
        r_b_exact: Optional[float] = 0.0
    else:
        opt = optimize_gain(params)
        _, r_opa = opa_error_gaussian(params, gain, 1)
        _, r_b_exact, r_b_small = opa_bhattacharyya(params, gain)
        rows.append(("g_star", opt.g_star, "argmax of r_opa"))
        rows.append(("r_opa", r_opa, f"at G={gain!r}"))
        rows.append(("r_b_exact", r_b_exact, "-ln Q_B"))
        rows.append(("r_b_small_gain", r_b_small, "series form"))
        if params.n_b > 0.0:
            half_limit = params.kappa * params.n_s / (2.0 * params.n_b)
            if half_limit > 0.0:
                rows.append(("r_b_ratio", r_b_exact / half_limit, "r_b_exact/(kappa*n_s/2n_b)"))

    rows.append(("db_opa_vs_r_c", _db_gain(r_opa, report.r_c), "10 log10(r_opa/r_c)"))
    rows.append(("db_r_b_vs_r_c", _db_gain(r_b_exact, report.r_c), "10 log10(r_b/r_c)"))
    rows.append(("db_r_q_vs_r_c", _db_gain(report.r_q, report.r_c), "10 log10(r_q/r_c)"))

    width = max(len(name) for name, _, _ in rows)
    for name, value, note in rows:
        shown = _UNDEF if value is None else repr(float(value))
        print(f"{name:<{width}}  {shown:<24} {note}")

    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        extra = {"command": "exponents", "tail_tol": repr(args.tail_tol)}
        digest = _digest(params, receiver, extra)
        csv_rows = [(name, "nan" if value is None else repr(float(value)), note)
                    for name, value, note in rows]
        _write_csv(out_dir / "exponents.csv", digest, ["quantity", "value", "note"], csv_rows)
        _write_meta(out_dir, "exponents", digest, params, receiver, extra, notes)
        print(f"wrote {out_dir / 'exponents.csv'}")


def cmd_sweep(args, params: ScenarioParams, receiver: ReceiverConfig) -> None:
    values = _parse_grid(args.grid)
    points = _sweep_points(params, args.axis, values)
    extra = {
        "command": "sweep",
        "axis": args.axis,
        "grid": ",".join(repr(v) for v in values),
        "tail_tol": repr(args.tail_tol),
    }
    digest = _digest(params, receiver, extra)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    columns = [args.axis, "r_q", "r_c", "r_c_hom", "regime_ok",
               "gain", "r_opa", "r_b_exact", "r_b_small_gain", "r_b_ratio"]
    rows = []
    for value, point in zip(values, points):
        report = asymptotic_exponents(point)
        if args.axis == "gain":
            gain: Optional[float] = value
        else:
            gain, _ = resolve_gain(point, receiver.gain)
        if gain is None:
            g_cell, r_opa, r_b_exact, r_b_small = float("nan"), 0.0, 0.0, 0.0
        else:
            g_cell = gain
            _, r_opa = opa_error_gaussian(point, gain, 1)
            _, r_b_exact, r_b_small = opa_bhattacharyya(point, gain)
        half_limit = point.kappa * point.n_s / (2.0 * point.n_b) if point.n_b > 0 else 0.0
        ratio = r_b_exact / half_limit if half_limit > 0.0 else float("nan")
        rows.append([value, report.r_q, report.r_c, report.r_c_hom,
                     int(point.regime_ok), g_cell, r_opa, r_b_exact, r_b_small, ratio])

    _write_csv(out_dir / "sweep.csv", digest, columns, rows)
    _write_meta(out_dir, "sweep", digest, params, receiver, extra, [])
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} rows)")


# --- argument parsing -----------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, with_out_default: Optional[str]) -> None:
    sub.add_argument("--config", metavar="PATH",
                     help="flat key=value scenario file (default: built-in example scenario)")
    sub.add_argument("--tail-tol", type=float, default=1e-9, metavar="TOL",
                     help="truncation tail tolerance (default 1e-9)")
    sub.add_argument("--gain", metavar="G",
                     help=f"OPA gain: number > 1, '{GAIN_AUTO}' or '{GAIN_BHATT}'")
    sub.add_argument("--threshold-policy",
                     choices=[p.value for p in ThresholdPolicy],
                     help="threshold selection rule for the OPA receiver")
    sub.add_argument("--count-model",
                     choices=[m.value for m in CountModel],
                     help="photon counting statistics at the OPA output")
    if with_out_default is None:
        sub.add_argument("--out", metavar="DIR", default=None,
                         help="also write CSV artifacts to DIR")
    else:
        sub.add_argument("--out", metavar="DIR", default=with_out_default,
                         help=f"output directory (default {with_out_default!r})")


def _add_k_grid(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k-min", type=float, default=1e4, help="smallest K (default 1e4)")
    sub.add_argument("--k-max", type=float, default=1e8, help="largest K (default 1e8)")
    sub.add_argument("--k-points", type=int, default=30,
                     help="log-spaced grid size before integer dedup (default 30)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qillum",
        description="Entangled vs classical target-detection error bounds and receivers.",
    )
    parser.add_argument("--version", action="version", version="qillum 0.1.0")
    commands = parser.add_subparsers(dest="command", required=True)

    p_bounds = commands.add_parser(
        "bounds", help="error-probability sandwich for both transmitters over a K grid")
    _add_common(p_bounds, with_out_default=".")
    _add_k_grid(p_bounds)
    p_bounds.set_defaults(run=cmd_bounds)

    p_hel = commands.add_parser(
        "helstrom", help="per-pair optimal measurement + majority vote vs the OPA receiver")
    _add_common(p_hel, with_out_default=".")
    _add_k_grid(p_hel)
    p_hel.set_defaults(run=cmd_helstrom)

    p_exp = commands.add_parser(
        "exponents", help="closed-form and numeric error exponents for one scenario")
    _add_common(p_exp, with_out_default=None)
    p_exp.set_defaults(run=cmd_exponents)

    p_sweep = commands.add_parser(
        "sweep", help="exponent report along a grid of one parameter")
    _add_common(p_sweep, with_out_default=".")
    p_sweep.add_argument("--axis", required=True, choices=["kappa", "n_s", "n_b", "gain"],
                         help="parameter to vary")
    p_sweep.add_argument("--grid", required=True, metavar="V1,V2,...",
                         help="comma-separated grid values")
    p_sweep.set_defaults(run=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params, receiver = _load_setup(args)
        if args.command == "sweep":
            # validate grids eagerly so malformed ones fail as usage errors
            _sweep_points(params, args.axis, _parse_grid(args.grid))
        elif args.command in ("bounds", "helstrom"):
            _k_grid(args.k_min, args.k_max, args.k_points)
    except (ParseError, DomainError) as exc:
        print(f"qillum: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qillum: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        args.run(args, params, receiver)
    except QIError as exc:
        print(f"qillum: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, OSError) as exc:
        print(f"qillum: {exc}", file=sys.stderr)
        return 1
    return 0
