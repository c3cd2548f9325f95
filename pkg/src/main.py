from __future__ import annotations

import argparse
import logging
import logging_config  # noqa: F401
import sys
from typing import Callable, Dict, List, Sequence

from annealed import (
    CAMPAIGN_COLUMNS,
    annealed_campaign,
    corollary1_exponent_check,
    fit_decay_exponent,
    grimmett_kappa_boxcount,
    kappa_agreement_report,
    kappa_poincare_check,
    kappa_sandwich_check,
    mass_transport_reports,
    theorem2_constant_c4,
    theorem3_lower_check,
    theorem3_upper_check,
)
from bounds import BoundReport, theorem3_constant_c_delta
from config_manager import DEFAULT_ALPHA, ExperimentConfig, build_config
from errors import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    FitUnreliableError,
    InsufficientDataError,
    InvalidArgumentError,
    ReturnProbeError,
    exit_code_for,
)
from finite_suite import run_finite_suites
from graph_core import FiniteGraph, complete_graph, cycle_graph, dump_graph, grid_graph, path_graph
from ids import IDS_COLUMNS, ids_curve, laplace_consistency, theorem2_window_check
from output_manager import REPORTS_FILE_NAME, OutputManager, failed_reports
from percolation import (
    PRESETS,
    TAIL_COLUMNS,
    Family,
    PercolationModel,
    sample_cluster,
    tail_from_sizes,
    tail_slope_reports,
    tail_survey,
)
from utils import format_number

MAX_LOGGED_FAILURES = 20

# Graph constructors available to dump-graph, e.g. "cycle:6" or "grid:3x4".
CONSTRUCTORS: Dict[str, Callable[..., FiniteGraph]] = {
    "cycle": cycle_graph,
    "path": path_graph,
    "complete": complete_graph,
    "grid": grid_graph,
}


def finish(reports: Sequence[BoundReport], output: OutputManager, summary: Dict[str, object]) -> int:
    """Writes the reports and the summary; returns 1 if any report failed."""
    output.reset(REPORTS_FILE_NAME)
    output.append_reports(reports)
    failures = failed_reports(reports)
    summary = dict(summary, reports=len(reports), failed=len(failures))
    output.write_summary(summary)
    for report in failures[:MAX_LOGGED_FAILURES]:
        logging.error(f"[check] {report.describe()}")
    if len(failures) > MAX_LOGGED_FAILURES:
        logging.error(f"[check] ... and {len(failures) - MAX_LOGGED_FAILURES} more failed reports")
    logging.info(f"[check] {len(reports)} reports, {len(failures)} failed")
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def cmd_verify_finite(config: ExperimentConfig, output: OutputManager) -> int:
    reports = run_finite_suites(
        seed=config.seed,
        n_graphs=config.n_graphs,
        n_max=config.n_max,
        sabotage=config.sabotage,
        planar_clusters=config.planar_clusters,
        fidelity_clusters=config.fidelity_clusters,
    )
    return finish(reports, output, {"seed": config.seed, "n_graphs": config.n_graphs, "n_max": config.n_max,
                                    "planar_clusters": config.planar_clusters,
                                    "fidelity_clusters": config.fidelity_clusters})


def _fit_window(config: ExperimentConfig) -> tuple:
    grid = config.m_grid()
    return max(config.window_min, float(grid[0])), min(config.window_max, float(grid[-1]))


def cmd_annealed(config: ExperimentConfig, output: OutputManager) -> int:
    model = config.model()
    est = annealed_campaign(
        model,
        config.t_grid(),
        config.n_samples,
        dense_cap=config.dense_cap,
        probes=config.probes,
        fixed_root=config.fixed_root,
        workers=config.workers,
    )
    output.write_csv("campaign.csv", CAMPAIGN_COLUMNS, est.rows())
    summary: Dict[str, object] = {
        "family": model.family.value,
        "delta": model.delta,
        "p": model.p,
        "n_samples": est.n_samples,
        "kappa_hat": est.kappa_hat,
        "kappa_std_error": est.kappa_std_error,
        "chi_hat": est.chi_hat,
        "chi_reliable": est.chi_reliable,
        "censored_fraction": est.censored_fraction,
    }
    reports: List[BoundReport] = []
    if est.fixed_root:
        reports.extend(mass_transport_reports(est))

    alpha = config.resolved_alpha
    tail = tail_from_sizes(est.sizes, est.censored, config.m_grid(), _fit_window(config))
    summary.update(tail_slope=tail.slope, tail_stderr=tail.stderr, alpha=alpha)
    if alpha < 1.0:
        summary.update(c_delta=theorem3_constant_c_delta((1.0 + alpha) / 2.0, model.delta))
    if 0.0 < alpha < tail.slope:
        reports.extend(theorem3_upper_check(est, model.delta, alpha, est.size_moment(alpha), tail.slope))
    else:
        logging.warning(f"[annealed] alpha={alpha} is not below the tail slope {tail.slope:.3f}; upper check skipped")
    if model.is_planar:
        try:
            reports.extend(theorem3_lower_check(est, model.delta, tail.tail_params()))
        except (InsufficientDataError, InvalidArgumentError) as exc:
            logging.warning(f"[annealed] lower power-law check skipped: {exc}")

    try:
        fit = fit_decay_exponent(est)
        summary.update(decay_exponent=fit.exponent, decay_stderr=fit.stderr, decay_r_squared=fit.r_squared,
                       decay_window=f"{fit.window[0]:g}-{fit.window[1]:g}")
        if model.is_critical:
            reports.extend(corollary1_exponent_check(fit, model.family, alpha))
    except (InsufficientDataError, FitUnreliableError) as exc:
        logging.warning(f"[annealed] no exponent verdict: {exc}")

    if model.is_planar and model.is_subcritical:
        reports.extend(kappa_sandwich_check(est, d=2))
        reports.extend(kappa_poincare_check(est, d=2))
        if config.box_L > 0:
            box = grimmett_kappa_boxcount(model, config.box_L, config.box_realizations, config.workers)
            summary.update(kappa_box=box.value, kappa_box_std_error=box.std_error)
            reports.append(kappa_agreement_report(est, box))
    return finish(reports, output, summary)


def cmd_ids(config: ExperimentConfig, output: OutputManager) -> int:
    curve = ids_curve(config.p, config.L, config.n_realizations, config.seed, config.dense_cap,
                      config.sparse_path, config.workers)
    output.write_csv(f"ids_p{format_number(config.p)}_L{config.L}.csv", IDS_COLUMNS, curve.rows())
    summary: Dict[str, object] = {
        "p": curve.p,
        "L": curve.L,
        "n_realizations": curve.n_realizations,
        "n_at_zero": curve.n_at_zero,
        "zero_modes_match": curve.zero_modes_match,
        "theorem2_c4": theorem2_constant_c4(),
    }
    reports: List[BoundReport] = []
    if abs(config.p - 0.5) < 1e-12:
        alpha = config.alpha if config.alpha > 0 else DEFAULT_ALPHA[Family.SQUARE_LATTICE_2D]
        try:
            reports.extend(theorem2_window_check(curve, alpha, (config.e_min, config.e_max), config.min_eigenvalues))
        except InsufficientDataError as exc:
            logging.warning(f"[ids] window check skipped: {exc}")
    if config.laplace_samples > 0:
        model = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=config.p, size_cap=config.size_cap,
                                 seed=config.seed)
        est = annealed_campaign(model, config.t_grid(), config.laplace_samples, dense_cap=config.dense_cap,
                                probes=config.probes, fixed_root=True, workers=config.workers)
        reports.extend(laplace_consistency(curve, est))
    code = finish(reports, output, summary)
    if not curve.zero_modes_match:
        return EXIT_CHECK_FAILED
    return code


def cmd_tail(config: ExperimentConfig, output: OutputManager) -> int:
    model = config.model()
    estimate = tail_survey(model, config.n_samples, config.m_grid(), _fit_window(config), config.workers)
    output.write_csv("tail.csv", TAIL_COLUMNS, estimate.rows())
    summary = {
        "family": model.family.value,
        "delta": model.delta,
        "p": model.p,
        "n_samples": estimate.n_samples,
        "slope": estimate.slope,
        "stderr": estimate.stderr,
        "r_squared": estimate.r_squared,
        "poor_fit": estimate.poor_fit,
        "window": f"{estimate.window[0]:g}-{estimate.window[1]:g}",
        "censored_fraction": estimate.censored_fraction,
    }
    return finish(tail_slope_reports(estimate, model), output, summary)


def cmd_kappa_box(config: ExperimentConfig, output: OutputManager) -> int:
    model = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=config.p, size_cap=config.size_cap,
                             seed=config.seed)
    box = grimmett_kappa_boxcount(model, config.L, config.n_realizations, config.workers)
    output.write_summary({"p": model.p, "L": box.L, "n_realizations": box.n_realizations,
                          "kappa_box": box.value, "kappa_box_std_error": box.std_error})
    return EXIT_OK


def construct_graph(description: str) -> FiniteGraph:
    """Parses "name:arg", e.g. "cycle:6", "path:4", "complete:5", "grid:3x4"."""
    name, _, argument = description.partition(":")
    if name not in CONSTRUCTORS or not argument:
        raise InvalidArgumentError(f"Unknown construction '{description}'; use one of {', '.join(CONSTRUCTORS)}:<size>")
    try:
        sizes = [int(part) for part in argument.split("x")]
    except ValueError as exc:
        raise InvalidArgumentError(f"Bad size in construction '{description}'") from exc
    return CONSTRUCTORS[name](*sizes)


def cmd_dump_graph(config: ExperimentConfig, output: OutputManager) -> int:
    if config.construct:
        text = dump_graph(construct_graph(config.construct))
    else:
        sample = sample_cluster(config.model(), config.stream_index)
        text = dump_graph(sample.graph, sample.coordinates)
        logging.info(f"[dump] stream {config.stream_index}: {sample.size} vertices, censored={sample.censored}")
    if config.out:
        with open(config.out, "w") as file:
            file.write(text)
    else:
        output.write_text("graph.txt", text)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[ExperimentConfig, OutputManager], int]] = {
    "verify-finite": cmd_verify_finite,
    "annealed": cmd_annealed,
    "ids": cmd_ids,
    "tail": cmd_tail,
    "kappa-box": cmd_kappa_box,
    "dump-graph": cmd_dump_graph,
}


def _flag(parser: argparse.ArgumentParser, name: str, kind: type, help_text: str) -> None:
    parser.add_argument(f"--{name}", dest=name.replace("-", "_"), type=kind, default=None, help=help_text)


def _switch(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    parser.add_argument(f"--{name}", dest=name.replace("-", "_"), action=argparse.BooleanOptionalAction,
                        default=None, help=help_text)


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("preset", nargs="?", default=None, choices=sorted(PRESETS), help="named model")
    _flag(parser, "family", str, "tree or z2")
    _flag(parser, "delta", int, "ambient degree (0: family default)")
    _flag(parser, "p", float, "bond retention probability")
    _flag(parser, "size-cap", int, "censoring threshold for cluster exploration")
    _flag(parser, "n-samples", int, "number of sampled clusters")


def _time_flags(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "t-min", float, "first time of the geometric grid")
    _flag(parser, "t-max", float, "last time of the geometric grid")
    _flag(parser, "t-points", int, "number of grid times")


def _tail_flags(parser: argparse.ArgumentParser) -> None:
    _flag(parser, "m-min", int, "smallest size threshold")
    _flag(parser, "m-max", int, "largest size threshold")
    _flag(parser, "m-points", int, "number of thresholds")
    _flag(parser, "window-min", float, "lower end of the slope fit window")
    _flag(parser, "window-max", float, "upper end of the slope fit window")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="returnprobe",
        description="Return probabilities of delayed random walks on finite graphs and percolation clusters.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value file; flags override it")
    _flag(common, "seed", int, "campaign seed")
    _flag(common, "workers", int, "thread count (results do not depend on it)")
    _flag(common, "output-dir", str, "directory for CSV, summary and config echo")
    _flag(common, "dense-cap", int, "largest graph diagonalized densely")

    verify = subparsers.add_parser("verify-finite", parents=[common], help="exact small-graph suites")
    _flag(verify, "n-graphs", int, "random graphs in the Theorem 1 sweep")
    _flag(verify, "n-max", int, "largest random graph")
    _flag(verify, "planar-clusters", int, "Z^2 clusters for the planar gap check")
    _flag(verify, "fidelity-clusters", int, "Z^2 clusters for the stochastic trace check")
    verify.add_argument("--sabotage", dest="sabotage", action="store_const", const=True, default=None,
                        help="corrupt bound i) to check that the suite can fail")

    annealed = subparsers.add_parser("annealed", parents=[common], help="annealed return-probability campaign")
    _model_flags(annealed)
    _time_flags(annealed)
    _tail_flags(annealed)
    _flag(annealed, "probes", int, "Hutchinson probes above the dense cap")
    _flag(annealed, "alpha", float, "moment order (0: family default)")
    _switch(annealed, "fixed-root", "also estimate the root return probability")
    _flag(annealed, "box-L", int, "box half width for the kappa agreement check (0: off)")
    _flag(annealed, "box-realizations", int, "box configurations for the kappa agreement check")

    ids = subparsers.add_parser("ids", parents=[common], help="integrated density of states on Z^2 boxes")
    _flag(ids, "p", float, "bond retention probability")
    _flag(ids, "L", int, "box half width")
    _flag(ids, "n-realizations", int, "box configurations")
    _flag(ids, "alpha", float, "moment order for the window check")
    _flag(ids, "e-min", float, "lower end of the energy window")
    _flag(ids, "e-max", float, "upper end of the energy window")
    _flag(ids, "min-eigenvalues", int, "eigenvalues required in the window")
    _switch(ids, "sparse-path", "Lanczos quadrature for clusters above the dense cap")
    _flag(ids, "laplace-samples", int, "clusters for the Laplace-transform check (0: off)")
    _flag(ids, "size-cap", int, "censoring threshold of the Laplace campaign")
    _flag(ids, "probes", int, "Hutchinson probes of the Laplace campaign")
    _time_flags(ids)

    tail = subparsers.add_parser("tail", parents=[common], help="cluster-size survival function")
    _model_flags(tail)
    _tail_flags(tail)

    kappa_box = subparsers.add_parser("kappa-box", parents=[common], help="clusters per site of Z^2 boxes")
    _flag(kappa_box, "p", float, "bond retention probability")
    _flag(kappa_box, "L", int, "box half width")
    _flag(kappa_box, "n-realizations", int, "box configurations")

    dump = subparsers.add_parser("dump-graph", parents=[common], help="write a graph in the text dump format")
    _model_flags(dump)
    _flag(dump, "construct", str, "cycle:N, path:N, complete:N or grid:RxC")
    _flag(dump, "stream-index", int, "cluster stream to dump")
    _flag(dump, "out", str, "target file (default: <output dir>/graph.txt)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
    try:
        config = build_config(args.command, args.config, flags)
        output = OutputManager(config.output_dir)
        output.write_config_echo(config)
        logging.info(f"[main] {args.command} -> {output.output_dir}")
        return COMMANDS[args.command](config, output)
    except ReturnProbeError as exc:
        logging.error(f"[main] {type(exc).__name__}: {exc}")
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
