"""Command-line front end.

Subcommands
-----------
analyze   build the scenario, decompose it and report every applicable fit
pdf       emit density curves on a grid as CSV (approx / exact / empirical)
simulate  draw loss samples and export them as a single-column CSV
validate  run both samplers and KS-test them against every reference
sweep     repeat random mismatch draws, reporting fit parameters + mean loss

Scenario configs are JSON documents with an ``array`` block and a
``mismatch`` block; unknown keys are rejected.  Every command is a pure
function of (config, seed): byte-identical inputs give byte-identical
outputs.

Exit codes: 0 success, 2 validation failure, 3 degenerate or unfittable,
4 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .approximation import (
    LossDistribution,
    assemble_loss,
    assemble_pearson_loss,
    exact_surprise_distribution,
    loss_mean,
    pearson_cumulants,
    pearson_three_moment,
    scaled_chi2_two_moment,
    scaled_f_cumulants,
    scaled_f_fit,
)
from .errors import ConfigError, DegenerateCumulants, InsufficientSamples, InvalidFit, SnrLossError
from .linalg import solve_hermitian
from .mismatch import build_omega, c_coefficients, cumulants_q, to_quadratic_form
from .montecarlo import (
    empirical_summary,
    ks_statistic,
    pair_digest,
    simulate_loss_direct,
    simulate_loss_representation,
    two_sample_ks,
)
from .sampling import RngStream
from .scenarios import (
    ArrayScenario,
    eigenvalue_mismatch,
    interference_covariance,
    inverse_wishart_mismatch,
    mpdr_mismatch,
    no_mismatch,
    random_ger_blockdiag_mismatch,
    steering_vector,
    surprise_interference,
)

MISMATCH_KINDS = ("none", "mpdr", "surprise", "ger_blockdiag", "eigenvalue", "inverse_wishart")

_ARRAY_KEYS = {
    "n_elements",
    "soi_angle_deg",
    "interference_angles_deg",
    "interference_powers_db",
    "n_training",
}
_MISMATCH_KEYS = {
    "none": set(),
    "mpdr": {"gamma_db", "soi_power_db"},
    "surprise": {"angle_deg", "power_db", "enforce_ger"},
    "ger_blockdiag": {"gamma_db", "gamma_range_db", "w11_dof"},
    "eigenvalue": {"alpha_db", "alpha_range_db"},
    "inverse_wishart": {"gamma_db", "gamma_range_db", "dof"},
}


def _fail_config(message):
    raise ConfigError(message)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        _fail_config(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        _fail_config(f"config is not valid JSON: {exc}")
    validate_config(config)
    return config


def validate_config(config) -> None:
    if not isinstance(config, dict):
        _fail_config("config must be a JSON object")
    unknown = set(config) - {"array", "mismatch"}
    if unknown:
        _fail_config(f"unknown top-level keys: {sorted(unknown)}")
    array = config.get("array")
    if not isinstance(array, dict):
        _fail_config("missing 'array' block")
    unknown = set(array) - _ARRAY_KEYS
    if unknown:
        _fail_config(f"unknown array keys: {sorted(unknown)}")
    for required in ("n_elements", "n_training"):
        if required not in array:
            _fail_config(f"array block needs '{required}'")
    mismatch = config.get("mismatch", {"kind": "none"})
    if not isinstance(mismatch, dict) or "kind" not in mismatch:
        _fail_config("mismatch block needs a 'kind'")
    kind = mismatch["kind"]
    if kind not in MISMATCH_KINDS:
        _fail_config(f"unknown mismatch kind {kind!r}; expected one of {MISMATCH_KINDS}")
    unknown = set(mismatch) - _MISMATCH_KEYS[kind] - {"kind"}
    if unknown:
        _fail_config(f"unknown keys for mismatch kind {kind!r}: {sorted(unknown)}")
    if kind == "mpdr" and "soi_power_db" not in mismatch:
        _fail_config("mpdr mismatch needs 'soi_power_db'")
    if kind == "surprise":
        for required in ("angle_deg", "power_db"):
            if required not in mismatch:
                _fail_config(f"surprise mismatch needs '{required}'")


def config_digest(config) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canonical).hexdigest()[:16]


def _db_to_linear(db):
    return 10.0 ** (db / 10.0)


def _draw_db(mismatch, key_fixed, key_range, rng, default_range=(-6.0, 6.0)):
    if key_fixed in mismatch:
        return float(mismatch[key_fixed])
    low, high = mismatch.get(key_range, default_range)
    return float(rng.generator.uniform(low, high))


def build_scenario(config) -> tuple[ArrayScenario, np.ndarray, np.ndarray]:
    array = config["array"]
    scenario = ArrayScenario(
        n_elements=int(array["n_elements"]),
        soi_angle_deg=float(array.get("soi_angle_deg", 0.0)),
        interference_angles_deg=tuple(array.get("interference_angles_deg", (-12.0, 9.0, 25.0))),
        interference_powers_db=tuple(array.get("interference_powers_db", (35.0, 25.0, 30.0))),
        n_training=int(array["n_training"]),
    )
    sigma = interference_covariance(scenario)
    v = steering_vector(scenario.soi_angle_deg, scenario.n_elements)
    return scenario, sigma, v


def build_pair(config, rng: RngStream):
    """Scenario pair from a validated config; random families draw from rng."""
    scenario, sigma, v = build_scenario(config)
    mismatch = config.get("mismatch", {"kind": "none"})
    kind = mismatch["kind"]
    if kind == "none":
        pair = no_mismatch(sigma, v)
    elif kind == "mpdr":
        gamma = _db_to_linear(float(mismatch.get("gamma_db", 0.0)))
        v_sigma_v = (v.conj() @ solve_hermitian(sigma, v)).real
        soi_power = _db_to_linear(float(mismatch["soi_power_db"])) / v_sigma_v
        pair = mpdr_mismatch(sigma, v, soi_power=soi_power, gamma=gamma)
    elif kind == "surprise":
        amplitude = 10.0 ** (float(mismatch["power_db"]) / 20.0)
        q_raw = amplitude * steering_vector(float(mismatch["angle_deg"]), scenario.n_elements)
        pair = surprise_interference(sigma, v, q_raw, enforce_ger=bool(mismatch.get("enforce_ger", True)))
    elif kind == "ger_blockdiag":
        gamma = _db_to_linear(_draw_db(mismatch, "gamma_db", "gamma_range_db", rng))
        pair = random_ger_blockdiag_mismatch(sigma, v, gamma, rng, w11_dof=mismatch.get("w11_dof"))
    elif kind == "eigenvalue":
        if "alpha_db" in mismatch:
            alpha = _db_to_linear(np.asarray(mismatch["alpha_db"], dtype=float))
            pair = eigenvalue_mismatch(sigma, v, alpha=alpha)
        else:
            low, high = mismatch.get("alpha_range_db", (-6.0, 6.0))
            alpha = _db_to_linear(rng.generator.uniform(low, high, scenario.n_elements))
            pair = eigenvalue_mismatch(sigma, v, alpha=alpha)
    elif kind == "inverse_wishart":
        gamma = _db_to_linear(_draw_db(mismatch, "gamma_db", "gamma_range_db", rng))
        pair = inverse_wishart_mismatch(sigma, v, gamma, rng, dof=mismatch.get("dof"))
    else:  # pragma: no cover - guarded by validate_config
        _fail_config(f"unhandled mismatch kind {kind!r}")
    return scenario, pair


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _write_text(out, text):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _csv_float(x):
    return format(float(x), ".17e")


def _flatten(report, prefix=""):
    """Flatten a nested report into sorted dotted-key rows for CSV output."""
    rows = []
    if isinstance(report, dict):
        for key in sorted(report):
            rows.extend(_flatten(report[key], f"{prefix}{key}."))
    elif isinstance(report, (list, tuple)):
        for index, item in enumerate(report):
            rows.extend(_flatten(item, f"{prefix}{index}."))
    else:
        rows.append((prefix[:-1], report))
    return rows


def _write_report(out, report, fmt):
    report = _jsonable(report)
    if fmt == "json":
        _write_text(out, json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        lines = ["key,value"]
        for key, value in _flatten(report):
            value = _csv_float(value) if isinstance(value, float) else value
            lines.append(f"{key},{value}")
        _write_text(out, "\n".join(lines) + "\n")


def _check_scaled_f(fit, kappa):
    check = scaled_f_cumulants(fit.a, fit.num_dof, fit.den_dof)
    for got, want in ((check.k1, kappa.k1), (check.k2, kappa.k2), (check.k3, kappa.k3)):
        if abs(got - want) > 1e-9 * max(1.0, abs(want)):
            raise InvalidFit("scaled-F fit failed its cumulant-match revalidation")


def _check_pearson(fit, c1, c2, c3):
    k1, k2, k3 = pearson_cumulants(fit)
    for got, want in ((k1, c1), (k2, 2.0 * c2), (k3, 8.0 * c3)):
        if abs(got - want) > 1e-10 * max(1.0, abs(want)):
            raise InvalidFit("shifted fit failed its cumulant-match revalidation")


def _check_scaled_chi2(fit, c1, c2):
    if abs(fit.a * fit.dof - c1) > 1e-10 * max(1.0, abs(c1)):
        raise InvalidFit("scaled chi-square fit failed its moment revalidation")
    if abs(2.0 * fit.a**2 * fit.dof - 2.0 * c2) > 1e-10 * max(1.0, abs(c2)):
        raise InvalidFit("scaled chi-square fit failed its moment revalidation")


def analyze_report(config, seed) -> dict:
    """Full analysis pipeline: pair -> omega -> cumulants -> all fits."""
    rng = RngStream(seed, 0)
    scenario, pair = build_pair(config, rng)
    n, k = scenario.n_elements, scenario.n_training
    omega = build_omega(pair)
    spec = to_quadratic_form(omega, k, n)
    kappa = cumulants_q(spec)

    report = {
        "package_version": __version__,
        "seed": seed,
        "config_digest": config_digest(config),
        "scenario_digest": pair_digest(pair),
        "n_elements": n,
        "n_training": k,
        "mismatch_kind": pair.kind,
        "is_ger": omega.is_ger,
        "omega": {
            "omega_2_1": omega.omega_2_1,
            "lambda_ger": omega.lambda_ger,
            "omega_22": omega.omega22,
            "lam": omega.lam,
            "delta": omega.delta,
        },
        "cumulants": {"k1": kappa.k1, "k2": kappa.k2, "k3": kappa.k3},
        "fits": {},
    }

    fit = scaled_f_fit(kappa)
    _check_scaled_f(fit, kappa)
    general = assemble_loss(fit, omega.omega_2_1, k, n, "fitted_general")
    report["fits"]["scaled_f"] = {
        "a": fit.a,
        "nu": fit.num_dof,
        "mu": fit.den_dof,
        "a_eff": general.a_eff,
        "mean_loss": loss_mean(general),
    }

    if omega.is_ger:
        c1, c2, c3 = c_coefficients(omega.lam, spec.h, np.zeros_like(omega.lam))
        chi2_fit = scaled_chi2_two_moment(c1, c2)
        _check_scaled_chi2(chi2_fit, c1, c2)
        ger_dist = assemble_loss(chi2_fit, omega.omega_2_1, k, n, "fitted_ger")
        pearson = pearson_three_moment(c1, c2, c3)
        _check_pearson(pearson, c1, c2, c3)
        report["fits"]["scaled_chi2"] = {
            "a": chi2_fit.a,
            "nu": chi2_fit.dof,
            "mu": ger_dist.den_dof,
            "a_eff": ger_dist.a_eff,
            "mean_loss": loss_mean(ger_dist),
        }
        report["fits"]["pearson"] = {"a1": pearson.a1, "nu_prime": pearson.dof, "a2": pearson.a2}

    exact = _exact_distribution(pair, k, n)
    if exact is not None:
        report["exact"] = {
            "kind": exact.kind,
            "a_eff": exact.a_eff,
            "nu": exact.num_dof,
            "mu": exact.den_dof,
            "mean_loss": loss_mean(exact),
        }
    return report


def _exact_distribution(pair, n_training, n_elements):
    if pair.kind == "none":
        return assemble_loss(None, None, n_training, n_elements, "exact_beta")
    if pair.kind == "mpdr":
        v_sigma_v = (pair.v.conj() @ solve_hermitian(pair.sigma, pair.v)).real
        soi = pair.params["soi_power"] * v_sigma_v
        return assemble_loss(None, None, n_training, n_elements, "exact_mpdr",
                             gamma=pair.params["gamma"], soi_power=soi)
    if pair.kind == "surprise" and pair.params.get("enforce_ger"):
        return exact_surprise_distribution(pair.params["q_power"], n_training, n_elements)
    return None


def cmd_analyze(args) -> int:
    config = load_config(args.config)
    report = analyze_report(config, args.seed)
    _write_report(args.out, report, args.format)
    return 0


def _distributions_for(config, seed):
    """All reference distributions the scenario supports, plus the pair."""
    rng = RngStream(seed, 0)
    scenario, pair = build_pair(config, rng)
    n, k = scenario.n_elements, scenario.n_training
    omega = build_omega(pair)
    spec = to_quadratic_form(omega, k, n)
    kappa = cumulants_q(spec)
    fit = scaled_f_fit(kappa)
    refs = {"scaled_f": assemble_loss(fit, omega.omega_2_1, k, n, "fitted_general")}
    if omega.is_ger:
        c1, c2, c3 = c_coefficients(omega.lam, spec.h, np.zeros_like(omega.lam))
        refs["scaled_chi2"] = assemble_loss(scaled_chi2_two_moment(c1, c2), omega.omega_2_1, k, n, "fitted_ger")
        refs["pearson"] = assemble_pearson_loss(pearson_three_moment(c1, c2, c3), omega.omega_2_1, k, n)
    exact = _exact_distribution(pair, k, n)
    if exact is not None:
        refs["exact"] = exact
    return scenario, pair, omega, spec, refs


def cmd_pdf(args) -> int:
    scenario = pair = exact = pearson = None
    if args.config is not None:
        config = load_config(args.config)
        scenario, pair, omega, spec, refs = _distributions_for(config, args.seed)
        approx = refs["scaled_f"]
        exact = refs.get("exact")
        pearson = refs.get("pearson")
    else:
        if args.a_eff is None or args.nu is None or args.mu is None:
            _fail_config("either --config or all of --a-eff/--nu/--mu are required")
        approx = LossDistribution(a_eff=args.a_eff, num_dof=args.nu, den_dof=args.mu, kind="fitted_general")

    grid = np.linspace(0.0, 1.0, args.grid + 2)[1:-1]
    columns = {"ell": grid, "pdf_approx": approx.pdf(grid)}
    if exact is not None and exact.kind in ("exact_beta", "exact_mpdr"):
        columns["pdf_exact"] = exact.pdf(grid)
    if pearson is not None:
        columns["pdf_pearson"] = pearson.pdf(grid)
    if args.trials and pair is not None:
        samples = simulate_loss_direct(pair, scenario.n_training, args.trials, RngStream(args.seed, 1))
        counts, edges = np.histogram(samples.values, bins=args.bins, range=(0.0, 1.0), density=True)
        indices = np.clip(np.digitize(grid, edges) - 1, 0, args.bins - 1)
        columns["pdf_empirical"] = counts[indices]

    if args.format == "json":
        _write_text(args.out, json.dumps(_jsonable(columns), sort_keys=True, indent=2) + "\n")
        return 0
    header = ",".join(columns)
    rows = [",".join(_csv_float(col[i]) for col in columns.values()) for i in range(grid.size)]
    _write_text(args.out, header + "\n" + "\n".join(rows) + "\n")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    rng = RngStream(args.seed, 0)
    scenario, pair = build_pair(config, rng)
    sampler_rng = RngStream(args.seed, 1)
    if args.sampler == "direct":
        samples = simulate_loss_direct(pair, scenario.n_training, args.trials, sampler_rng)
    else:
        omega = build_omega(pair)
        spec = to_quadratic_form(omega, scenario.n_training, scenario.n_elements)
        samples = simulate_loss_representation(spec, args.trials, sampler_rng,
                                               scenario_digest=pair_digest(pair))
    if args.format == "json":
        payload = {
            "sampler": samples.sampler,
            "seed": samples.seed,
            "trials": samples.trials,
            "scenario_digest": samples.scenario_digest,
            "values": samples.values,
        }
        _write_text(args.out, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
        return 0
    lines = [
        f"# sampler={samples.sampler}",
        f"# seed={samples.seed}",
        f"# trials={samples.trials}",
        f"# scenario_digest={samples.scenario_digest}",
        "ell",
    ]
    lines.extend(_csv_float(x) for x in samples.values)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_validate(args) -> int:
    if args.trials < 10_000:
        _fail_config("validate needs at least 10^4 trials")
    config = load_config(args.config)
    scenario, pair, omega, spec, refs = _distributions_for(config, args.seed)
    direct = simulate_loss_direct(pair, scenario.n_training, args.trials, RngStream(args.seed, 1))
    represented = simulate_loss_representation(spec, args.trials, RngStream(args.seed, 2),
                                               scenario_digest=pair_digest(pair))

    comparisons = []
    all_pass = True
    for sampler_name, samples in (("direct_scm", direct), ("representation", represented)):
        for ref_name, ref in sorted(refs.items()):
            distance = ks_statistic(samples.values, ref)
            ok = bool(distance < args.ks_threshold)
            all_pass &= ok
            comparisons.append({
                "sampler": sampler_name,
                "reference": ref_name,
                "ks": distance,
                "threshold": args.ks_threshold,
                "pass": ok,
            })
    statistic, pvalue = two_sample_ks(direct.values, represented.values)
    sampler_ok = bool(pvalue > 0.001)
    all_pass &= sampler_ok

    summary = empirical_summary(direct, bins=args.bins, ref=refs.get("exact", refs["scaled_f"]))
    report = {
        "package_version": __version__,
        "seed": args.seed,
        "config_digest": config_digest(config),
        "scenario_digest": pair_digest(pair),
        "trials": args.trials,
        "comparisons": comparisons,
        "sampler_agreement": {
            "statistic": statistic,
            "pvalue": pvalue,
            "threshold": 0.001,
            "pass": sampler_ok,
        },
        "empirical": {
            "k1": summary.k1,
            "k2": summary.k2,
            "k3": summary.k3,
            "k1_se": summary.k1_se,
            "k2_se": summary.k2_se,
            "k3_se": summary.k3_se,
            "ks_vs_reference": summary.ks_distance,
        },
        "pass": bool(all_pass),
    }
    _write_report(args.out, report, args.format)
    return 0 if all_pass else 2


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    kind = config.get("mismatch", {}).get("kind")
    if kind not in ("ger_blockdiag", "eigenvalue", "inverse_wishart"):
        _fail_config("sweep needs a random mismatch family (ger_blockdiag, eigenvalue, inverse_wishart)")

    rows = []
    skipped = 0
    for index in range(args.realizations):
        rng = RngStream(args.seed, index)
        scenario, pair = build_pair(config, rng)
        omega = build_omega(pair)
        spec = to_quadratic_form(omega, scenario.n_training, scenario.n_elements)
        try:
            fit = scaled_f_fit(cumulants_q(spec))
            dist = assemble_loss(fit, omega.omega_2_1, scenario.n_training, scenario.n_elements,
                                 "fitted_general")
        except (DegenerateCumulants, InvalidFit) as exc:
            skipped += 1
            print(f"# realization {index} skipped: {exc.code}", file=sys.stderr)
            continue
        gamma = pair.params.get("gamma")
        gamma_db = 10.0 * np.log10(gamma) if gamma is not None else None
        rows.append((index, gamma_db, dist.a_eff, dist.num_dof, dist.den_dof, loss_mean(dist)))

    if args.format == "json":
        payload = {
            "skipped_degenerate": skipped,
            "realizations": [
                {"realization": i, "gamma_db": g, "a_eff": a, "nu": nu, "mu": mu, "mean_loss": m}
                for i, g, a, nu, mu, m in rows
            ],
        }
        _write_text(args.out, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
        return 0
    lines = [f"# skipped_degenerate={skipped}", "realization,gamma_db,a_eff,nu,mu,mean_loss"]
    for index, gamma_db, a_eff, nu, mu, mean in rows:
        gamma_field = _csv_float(gamma_db) if gamma_db is not None else ""
        lines.append(
            f"{index},{gamma_field},{_csv_float(a_eff)},{_csv_float(nu)},"
            f"{_csv_float(mu)},{_csv_float(mean)}"
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snrloss", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True, default_format="json"):
        p.add_argument("--config", required=config_required, help="scenario config JSON")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=default_format,
                       help=f"output format (default {default_format})")

    p = sub.add_parser("analyze", help="decompose the scenario and fit every applicable family")
    add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pdf", help="emit density curves on a grid as CSV")
    add_common(p, config_required=False, default_format="csv")
    p.add_argument("--grid", type=int, default=512, help="number of grid points in (0,1)")
    p.add_argument("--bins", type=int, default=200, help="histogram bins for the empirical column")
    p.add_argument("--trials", type=int, default=0, help="add an empirical column from this many draws")
    p.add_argument("--a-eff", type=float, default=None, dest="a_eff")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("simulate", help="draw loss samples, export single-column CSV")
    add_common(p, default_format="csv")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--sampler", choices=("direct", "representation"), default="direct")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="KS-test both samplers against every reference")
    add_common(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--ks-threshold", type=float, default=0.02, dest="ks_threshold")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="random mismatch realizations: fits and mean loss as CSV")
    add_common(p, default_format="csv")
    p.add_argument("--realizations", type=int, default=100)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except (DegenerateCumulants, InvalidFit, InsufficientSamples) as exc:
        print(f"unfittable: [{exc.code}] {exc}", file=sys.stderr)
        return 3
    except SnrLossError as exc:
        print(f"error: [{exc.code}] {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
