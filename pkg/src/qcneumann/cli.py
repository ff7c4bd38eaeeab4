"""Command-line front end: bound / oracle / compare / sweep / verify-poincare.

Exit codes: 0 success, 1 violated inequality (sandwich or Poincare ratio),
2 no admissible integrability exponent, 3 spec parse error, 4 mesh folding
that survived the retries.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

from .bounds import (
    EigenBoundReport,
    competing_star_constant,
    optimize_beta,
    payne_weinberger_lower_bound,
    polya_upper_bound,
)
from .domspec import (
    DomainSpec,
    RunConfig,
    build_map,
    load_domain_spec,
    _parse_source,
)
from .errors import FoldedTriangle, NoAdmissibleBeta, QcError, SpecParseError
from .fem import SpectrumEstimate, converged_mu1
from .maps import Source
from .quadrature import (
    build_grid,
    check_poincare_unweighted,
    check_poincare_weighted,
    esssup_jacobian,
    monomials,
    regularity_scan,
)

SCAN_BETAS = (1.0, 1.5, 2.0, 4.0, 8.0, math.inf)
SCAN_LEVEL = 0  # the integrability survey refines three times from here
POINCARE_R_VALUES = (2.0, 4.0)
POINCARE_S_VALUES = (1.0, 2.0, 4.0)
POINCARE_RATIO_SLACK = 1e-6
SWEEP_COLUMNS = (
    "k",
    "K",
    "esssup",
    "beta_star",
    "inv_mu1_upper",
    "mu1_lower",
    "mu1_fem",
    "polya_upper",
    "competing_constant",
    "status",
)


def _fmt(x, digits=12) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if math.isinf(x):
        return "inf"
    return f"{x:.{digits}g}"


def compute_bound(spec: DomainSpec, config: RunConfig) -> EigenBoundReport:
    """Distortion -> integrability scan -> optimized bound, with baselines."""
    grid = build_grid(spec.source, config.quadrature_level)
    scan = regularity_scan(spec.map, SCAN_BETAS, build_grid(spec.source, SCAN_LEVEL))
    report = optimize_beta(spec.map, grid, config.beta_max)
    notes = [
        f"scan: K = {scan.K:.6g}, esssup = {_fmt(scan.esssup, 6)}, "
        f"image area = {scan.image_area:.6g}, "
        f"local-integrability threshold K/(K-1) = {_fmt(scan.astala_limit, 6)}",
    ]
    diverged = [p.beta for p in scan.beta_probes if not p.converged]
    if diverged:
        notes.append(f"scan: non-convergent beta probes: {diverged}")
    if spec.source is Source.CENTERED_SQUARE:
        notes.append(
            "square-source bound: treated as a bound on the first nontrivial eigenvalue"
        )
        notes.append(
            f"Poincare constant bound {math.sqrt(report.inv_mu1_upper):.6g} vs "
            f"competing star estimate {competing_star_constant(2.0):.6g}"
        )
    pw = (
        payne_weinberger_lower_bound(spec.diameter_hint)
        if (spec.convex_hint and spec.diameter_hint)
        else None
    )
    report = replace(report, domain=spec.name, diagnostics=report.diagnostics + tuple(notes))
    return report.with_baselines(
        polya_upper=polya_upper_bound(scan.image_area),
        payne_weinberger_lower=pw,
        competing_constant=competing_star_constant(2.0)
        if spec.source is Source.CENTERED_SQUARE
        else None,
    )


def compute_oracle(spec: DomainSpec, config: RunConfig) -> SpectrumEstimate:
    return converged_mu1(spec.source, spec.map, config.fem_level_list)


def compute_compare(spec: DomainSpec, config: RunConfig) -> dict:
    """Bound + oracle + baselines, with the sandwich verdict.

    The hard inequality compares the bound against the extrapolated
    eigenvalue plus its extrapolation error estimate: conforming elements
    converge from above, but extrapolation noise can land a hair below an
    exactly sharp bound.
    """
    report = compute_bound(spec, config)
    oracle = compute_oracle(spec, config)
    tol = oracle.error_estimate if math.isfinite(oracle.error_estimate) else 0.0
    hard_pass = report.mu1_lower <= oracle.extrapolated_mu1 + tol
    polya = report.baselines.polya_upper
    polya_pass = None if polya is None else bool(oracle.extrapolated_mu1 <= polya + tol)
    return {
        "schema_version": 1,
        "domain": spec.name,
        "bound": report.to_dict(),
        "oracle": oracle.to_dict(),
        "sandwich": {
            "mu1_lower": float(f"{report.mu1_lower:.12g}"),
            "mu1_fem": float(f"{oracle.extrapolated_mu1:.12g}"),
            "fem_error_estimate": float(f"{tol:.12g}"),
            "hard_pass": bool(hard_pass),
            "polya_upper": None if polya is None else float(f"{polya:.12g}"),
            "polya_pass_advisory": polya_pass,
        },
    }


def sweep_rows(family: str, ks, config: RunConfig, source: Source):
    """One row per parameter value; per-row errors land in the status column."""
    rows = []
    for k in ks:
        row = {c: "" for c in SWEEP_COLUMNS}
        row["k"] = _fmt(float(k))
        try:
            entry = {"family": family}
            if family != "identity":
                entry["k"] = float(k)
            pmap = build_map(entry, source)
            spec = DomainSpec(name=f"{family}-k{k:g}-{source.value}", map=pmap, source=source)
            report = compute_bound(spec, config)
            grid = build_grid(source, config.quadrature_level)
            row["K"] = _fmt(report.K)
            row["esssup"] = _fmt(esssup_jacobian(pmap, grid))
            row["beta_star"] = _fmt(report.beta)
            row["inv_mu1_upper"] = _fmt(report.inv_mu1_upper)
            row["mu1_lower"] = _fmt(report.mu1_lower)
            row["polya_upper"] = _fmt(report.baselines.polya_upper)
            if source is Source.CENTERED_SQUARE:
                row["competing_constant"] = _fmt(competing_star_constant(2.0))
            if config.verify:
                oracle = compute_oracle(spec, config)
                row["mu1_fem"] = _fmt(oracle.extrapolated_mu1)
            row["status"] = "ok"
        except QcError as err:
            row["status"] = f"error:{type(err).__name__}"
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(row[c] for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def poincare_suite(spec: DomainSpec, config: RunConfig):
    """Weighted and unweighted inequality checks over cubic monomials."""
    grid = build_grid(spec.source, config.quadrature_level)
    rows = []
    for tf in monomials(3):
        for r in POINCARE_R_VALUES:
            chk = check_poincare_weighted(spec.map, tf, r, grid)
            rows.append(("weighted", tf.name, r, chk.lhs, chk.rhs, chk.ratio))
        for s in POINCARE_S_VALUES:
            chk = check_poincare_unweighted(spec.map, tf, s, grid, config.beta_max)
            rows.append(("unweighted", tf.name, s, chk.lhs, chk.rhs, chk.ratio))
    return rows


def _print_report(report: EigenBoundReport) -> None:
    beta = "inf" if math.isinf(report.beta) else f"{report.beta:.6g}"
    print(f"domain          {report.domain}")
    print(f"branch          {report.theorem}")
    print(f"K               {report.K:.6g}")
    print(f"beta            {beta}")
    print(f"jacobian norm   {report.jacobian_norm:.6g}")
    print(f"constant        {report.poincare_constant.value:.6g} ({report.poincare_constant.kind})")
    print(f"1/mu1 upper     {report.inv_mu1_upper:.6g}")
    print(f"mu1 lower       {report.mu1_lower:.6g}")
    b = report.baselines
    if b.polya_upper is not None:
        print(f"polya upper     {b.polya_upper:.6g}")
    if b.payne_weinberger_lower is not None:
        print(f"convex lower    {b.payne_weinberger_lower:.6g}")
    if b.competing_constant is not None:
        print(f"competing const {b.competing_constant:.6g}")
    for note in report.diagnostics:
        print(f"note: {note}")


def _print_oracle(est: SpectrumEstimate) -> None:
    print("level      dof          mu1")
    for lvl, dof, mu in est.per_level:
        print(f"{lvl:5d} {dof:8d} {mu:12.6g}")
    order = "n/a" if est.observed_order is None else f"{est.observed_order:.3g}"
    print(f"observed order  {order}{'  (nonmonotone)' if est.nonmonotone else ''}")
    print(f"mu1 extrapolated {est.extrapolated_mu1:.6g} +- {est.error_estimate:.2g}")


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_domain_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="TOML domain spec file")
    p.add_argument("--family", choices=["identity", "radial-power", "cardioid", "moebius"])
    p.add_argument("--k", type=float, help="family parameter")
    p.add_argument("--source", choices=["disc", "square"], default="disc")
    p.add_argument("--name", help="domain name for reports")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta-max", type=float, default=64.0)
    p.add_argument("--quad-level", type=int, default=1)
    p.add_argument("--fem-levels", default="2..4", help="inclusive range A..B")
    p.add_argument("--json", dest="json_path", help="write the JSON report here")
    p.add_argument("--csv", dest="csv_path", help="write the CSV table here")
    p.add_argument("--verify", action="store_true", help="run the FEM oracle")
    p.add_argument("--baselines", action="store_true", help="include baseline bounds")


def _parse_range(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            a, b = text.split("..")
            return int(a), int(b)
        v = int(text)
        return v, v
    except ValueError as err:
        raise SpecParseError(f"bad range {text!r} (expected A..B)") from err


def _parse_k_list(text: str) -> list[float]:
    try:
        if ".." in text:
            a, b = text.split("..")
            return [float(v) for v in range(int(a), int(b) + 1)]
        if "," in text:
            return [float(v) for v in text.split(",")]
        return [float(text)]
    except ValueError as err:
        raise SpecParseError(f"bad parameter list {text!r}") from err


def _spec_from_args(args) -> DomainSpec:
    if args.spec:
        return load_domain_spec(args.spec)
    if not args.family:
        raise SpecParseError("either --spec or --family is required")
    source = _parse_source(args.source)
    entry = {"family": args.family}
    if args.k is not None:
        entry["k"] = args.k
    pmap = build_map(entry, source)
    name = args.name or (
        args.family + (f"-k{args.k:g}" if args.k is not None else "") + f"-{source.value}"
    )
    return DomainSpec(name=name, map=pmap, source=source)


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        beta_max=args.beta_max,
        quadrature_level=args.quad_level,
        fem_levels=_parse_range(args.fem_levels),
        json_path=args.json_path,
        csv_path=getattr(args, "csv_path", None),
        verify=args.verify,
        baselines=args.baselines,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcneumann",
        description="Lower bounds for the first nontrivial Neumann eigenvalue of "
        "mapped planar domains, with a finite-element verification oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("bound", "oracle", "compare", "verify-poincare"):
        p = sub.add_parser(name)
        _add_domain_args(p)
        _add_config_args(p)
    p = sub.add_parser("sweep")
    p.add_argument("--family", required=True, choices=["identity", "radial-power", "cardioid"])
    p.add_argument("--k", required=True, help="parameter range A..B or comma list")
    p.add_argument("--source", choices=["disc", "square"], default="disc")
    _add_config_args(p)
    args = parser.parse_args(argv)

    try:
        return _dispatch(args)
    except SpecParseError as err:
        print(f"spec error: {err}", file=sys.stderr)
        return 3
    except NoAdmissibleBeta as err:
        print(f"no admissible beta: {err}", file=sys.stderr)
        return 2
    except FoldedTriangle as err:
        print(f"mesh failure: {err}", file=sys.stderr)
        return 4


def _dispatch(args) -> int:
    config = _config_from_args(args)
    if args.command == "sweep":
        ks = _parse_k_list(args.k)
        rows = sweep_rows(args.family, ks, config, _parse_source(args.source))
        csv_text = rows_to_csv(rows)
        if config.csv_path:
            with open(config.csv_path, "w") as fh:
                fh.write(csv_text)
        else:
            print(csv_text, end="")
        return 0

    spec = _spec_from_args(args)
    if args.command == "bound":
        report = compute_bound(spec, config)
        _print_report(report)
        if config.json_path:
            _write_json(report.to_dict(), config.json_path)
        return 0
    if args.command == "oracle":
        est = compute_oracle(spec, config)
        _print_oracle(est)
        if config.json_path:
            _write_json(est.to_dict(), config.json_path)
        return 0
    if args.command == "compare":
        result = compute_compare(spec, config)
        _print_report_dict(result)
        if config.json_path:
            _write_json(result, config.json_path)
        return 0 if result["sandwich"]["hard_pass"] else 1
    if args.command == "verify-poincare":
        rows = poincare_suite(spec, config)
        worst = 0.0
        print("kind        function    exponent        lhs        rhs      ratio")
        for kind, name, expo, lhs, rhs, ratio in rows:
            print(f"{kind:10s} {name:12s} {expo:8.3g} {lhs:10.6g} {rhs:10.6g} {ratio:10.6g}")
            worst = max(worst, ratio)
        ok = worst <= 1.0 + POINCARE_RATIO_SLACK
        print(f"worst ratio {worst:.8g} -> {'ok' if ok else 'VIOLATED'}")
        return 0 if ok else 1
    raise AssertionError(f"unhandled command {args.command}")


def _print_report_dict(result: dict) -> None:
    s = result["sandwich"]
    print(f"domain {result['domain']}")
    print(f"mu1 lower bound   {s['mu1_lower']:.6g}")
    print(f"mu1 FEM           {s['mu1_fem']:.6g} +- {s['fem_error_estimate']:.2g}")
    print(f"hard sandwich     {'pass' if s['hard_pass'] else 'FAIL'}")
    if s["polya_upper"] is not None:
        verdict = "pass" if s["polya_pass_advisory"] else "FAIL"
        print(f"polya advisory    mu1_fem <= {s['polya_upper']:.6g}: {verdict}")


if __name__ == "__main__":
    sys.exit(main())
