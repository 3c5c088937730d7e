"""Command-line front end.

Four commands cover the library surface:

* ``build``    interpolate the generating system and losses of an exact set
* ``fit``      recover a set from noisy samples
* ``cluster``  label samples by loss descent
* ``bench``    rerun the bundled benchmark scenarios

Exit codes: 0 success, 1 usage or parse failure, 2 degenerate input,
3 best-effort output produced after an iteration cap.  For codes 2 and 3
a machine-readable JSON object is written to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import (
    assign_labels,
    bounded_noise_sample,
    clustering_accuracy,
    gmm_sample,
    random_gmm_spec,
    recover_point_set,
)
from .errors import (
    DegenerateConfigurationError,
    InvalidStateError,
    NumericalFailureError,
)
from .fitting import FitOptions, SampleSet
from .generating_system import (
    PointSet,
    generator_strings,
    generator_terms,
    solve_generating_matrix,
)
from .loss_functions import GeneratingLoss, build_transformed_loss

__all__ = ["main", "console_main"]

# reference six-point benchmark set reused by the bench scenarios
BENCH_SET = np.array(
    [[1.0, 1.0], [3.0, 2.0], [1.5, 2.5], [2.5, 3.0], [2.0, 1.5], [3.0, 1.0]]
)
UNEVEN_RADII = np.array([0.4, 0.2, 0.6, 0.2, 0.32, 0.4])
UNEVEN_COUNTS = np.array([50, 25, 100, 30, 40, 70])
BENCH_EPS_GRID = (0.05, 0.1, 0.5)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _derived_seed(base: int, *path: int) -> int:
    return int(np.random.SeedSequence(entropy=(int(base), *path)).generate_state(1)[0])


def _emit_error(kind: str, exc: Exception, **extra) -> None:
    payload = {"error": kind, "message": str(exc)}
    stage = getattr(exc, "stage", None)
    if stage is not None:
        payload["stage"] = stage
    condition = getattr(exc, "condition", None)
    if condition is not None:
        payload["condition"] = condition
    payload.update(extra)
    print(json.dumps(payload), file=sys.stderr)


def _read_csv_rows(path: str) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise _UsageError(f"{path} contains no data rows")
    return rows


def _parse_points(path: str, allow_truth: bool, truth_mode: str = "auto"):
    """Parse a CSV of points; optionally split a trailing integer truth column.

    ``truth_mode`` is "auto" (trailing column of integers is truth),
    "yes" (require it), or "no" (treat every column as a coordinate).
    """
    rows = _read_csv_rows(path)
    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1  # header row
        if len(rows) == 1:
            raise _UsageError(f"{path} contains only a header") from None
    width = len(rows[start])
    data = []
    for idx, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise _UsageError(f"{path}:{idx}: expected {width} columns, got {len(row)}")
        try:
            data.append([float(cell) for cell in row])
        except ValueError as exc:
            raise _UsageError(f"{path}:{idx}: {exc}") from None
    arr = np.array(data, dtype=float)
    truth = None
    if allow_truth and width >= 2:
        last = arr[:, -1]
        integral = bool(np.all(last == np.round(last)) and np.all(last >= 0))
        if truth_mode == "yes" or (truth_mode == "auto" and integral):
            if not integral:
                raise _UsageError(f"{path}: trailing column is not an integer truth column")
            truth = last.astype(np.int64)
            arr = arr[:, :-1]
    elif truth_mode == "yes":
        raise _UsageError(f"{path}: a truth column needs at least two columns")
    return arr, truth


def _load_fit_options(args) -> FitOptions:
    payload = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(payload, dict):
            raise _UsageError(f"config {args.config} must hold a JSON object")
    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    try:
        return FitOptions.from_json(payload)
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"bad fit options: {exc}") from exc


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _loss_payload(loss) -> dict:
    if isinstance(loss, GeneratingLoss):
        return {"kind": "generating", "g": loss.gm.to_json()}
    return loss.to_json()


def _points_rows(points) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(points)]


# -- build -----------------------------------------------------------------


def cmd_build(args) -> int:
    coords, _ = _parse_points(args.input, allow_truth=False)
    try:
        points = PointSet(coords)
    except ValueError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc
    gm = solve_generating_matrix(points)
    loss = build_transformed_loss(points)
    payload = {
        "n": points.n,
        "k": points.k,
        "points": _points_rows(points.points),
        "generating_matrix": gm.to_json(),
        "generators": [
            {"terms": [[list(e), c] for e, c in terms.items()], "text": text}
            for terms, text in zip(generator_terms(gm), generator_strings(gm))
        ],
        "loss": _loss_payload(loss),
        "closed_form": loss.describe() if points.n <= 3 and points.k <= 4 else None,
    }
    _write_json(payload, args.output)
    return 0


# -- fit -------------------------------------------------------------------


def cmd_fit(args) -> int:
    coords, _ = _parse_points(args.input, allow_truth=False)
    try:
        samples = SampleSet(coords)
    except ValueError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc
    opts = _load_fit_options(args)
    result = recover_point_set(
        samples,
        args.k,
        opts,
        want_real=not args.complex_points,
        loss_kind="generating" if args.loss == "fg" else "transformed",
    )
    recovered = result.recovered
    if recovered.is_real:
        s_star = _points_rows(recovered.points)
    else:
        s_star = [
            [[float(v.real), float(v.imag)] for v in row] for row in recovered.points
        ]
    payload = {
        "k": result.k,
        "n": recovered.n,
        "fit": result.fit.to_json(),
        "zero_set": result.zero_set.to_json(),
        "s_star": s_star,
        "loss": _loss_payload(result.loss),
    }
    _write_json(payload, args.output)
    if not result.fit.converged:
        _emit_error(
            "non-convergence",
            NumericalFailureError(
                f"commutator norm {result.fit.commutator_norm:.3e} above target "
                f"after {result.fit.rounds} penalty rounds; best effort written"
            ),
        )
        return 3
    return 0


# -- cluster ---------------------------------------------------------------


def cmd_cluster(args) -> int:
    truth_mode = {None: "auto", True: "yes", False: "no"}[args.truth_column]
    coords, truth = _parse_points(args.input, allow_truth=True, truth_mode=truth_mode)
    try:
        samples = SampleSet(coords)
    except ValueError as exc:
        raise DegenerateConfigurationError(str(exc)) from exc

    fit_converged = True
    if args.sstar is not None:
        try:
            with open(args.sstar) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read {args.sstar}: {exc}") from exc
        rows = payload.get("s_star", payload.get("points"))
        if rows is None:
            raise _UsageError(f"{args.sstar} carries no point set")
        pts = np.array(rows, dtype=float)
        if pts.ndim == 3:  # complex [re, im] pairs; cluster on the real parts
            pts = pts[:, :, 0]
        try:
            recovered = PointSet(pts)
        except ValueError as exc:
            raise DegenerateConfigurationError(str(exc)) from exc
        if args.loss == "fg":
            loss = GeneratingLoss(solve_generating_matrix(recovered))
        else:
            loss = build_transformed_loss(recovered)
    elif args.k is not None:
        opts = _load_fit_options(args)
        result = recover_point_set(
            samples,
            args.k,
            opts,
            loss_kind="generating" if args.loss == "fg" else "transformed",
        )
        recovered = result.recovered
        loss = result.loss
        fit_converged = result.fit.converged
    else:
        raise _UsageError("cluster needs either --k or --sstar")

    assignment = assign_labels(loss, recovered, samples)
    header = ["label", "converged", "iterations"] + [
        f"x{i + 1}" for i in range(samples.n)
    ]
    lines = [",".join(header)]
    for j in range(assignment.size):
        row = [
            str(int(assignment.labels[j])),
            str(int(assignment.converged[j])),
            str(int(assignment.iterations[j])),
        ] + [repr(float(v)) for v in assignment.minimizers[j]]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)

    summary = {
        "k": recovered.k,
        "n": recovered.n,
        "samples": samples.size,
        "descents_converged": int(assignment.converged.sum()),
        "s_star": _points_rows(recovered.points.real),
    }
    if truth is not None:
        if truth.max() >= recovered.k:
            raise _UsageError("truth labels exceed the recovered set size")
        means = np.array(
            [samples.samples[truth == i].mean(axis=0) for i in range(recovered.k)]
        )
        summary["accuracy"] = clustering_accuracy(assignment, truth, recovered, means)
    print(json.dumps(summary))
    if not fit_converged:
        _emit_error(
            "non-convergence",
            NumericalFailureError("fit hit its round budget; labels are best effort"),
        )
        return 3
    return 0


# -- bench -----------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _layered_points(path: Path, layers: dict[str, np.ndarray]) -> None:
    header = ["layer", "x1", "x2"]
    rows = []
    for name, pts in layers.items():
        for p in np.asarray(pts):
            rows.append([name, float(p[0]), float(p[1])])
    _write_csv(path, header, rows)


def _bench_recover(samples: SampleSet, k: int, seed: int, reference: np.ndarray):
    opts = FitOptions(seed=seed)
    result = recover_point_set(samples, k, opts, loss_kind="generating")
    dist = float(
        np.max(
            [
                np.min(np.linalg.norm(result.recovered.points.real - u, axis=1))
                for u in reference
            ]
        )
    )
    max_loss = float(max(result.loss.value(u) for u in reference))
    return result, dist, max_loss


def cmd_bench(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(range(args.seeds))
    all_converged = True
    reference = PointSet(BENCH_SET)

    if args.scenario == "table1":
        rows = []
        medians = {}
        for ei, eps in enumerate(BENCH_EPS_GRID):
            dists, losses = [], []
            for trial in seeds:
                seed = _derived_seed(args.seed, ei, trial)
                samples, _ = bounded_noise_sample(
                    reference, eps, np.full(reference.k, args.ni), seed, args.noise_model
                )
                result, dist, max_loss = _bench_recover(samples, reference.k, seed, BENCH_SET)
                all_converged &= result.fit.converged
                rows.append([eps, trial, dist, max_loss, int(result.fit.converged)])
                dists.append(dist)
                losses.append(max_loss)
                if trial == 0:
                    _layered_points(
                        out_dir / f"points_eps{eps}.csv",
                        {
                            "T": samples.samples,
                            "S": BENCH_SET,
                            "Sstar": result.recovered.points.real,
                        },
                    )
            medians[str(eps)] = {
                "set_distance": float(np.median(dists)),
                "max_loss": float(np.median(losses)),
            }
        _write_csv(
            out_dir / "results.csv",
            ["eps", "seed", "set_distance", "max_loss", "converged"],
            rows,
        )
        summary = {
            "scenario": "table1",
            "ni": args.ni,
            "seeds": args.seeds,
            "noise_model": args.noise_model,
            "medians": medians,
        }

    elif args.scenario == "example62":
        rows = []
        dists, losses = [], []
        for trial in seeds:
            seed = _derived_seed(args.seed, trial)
            samples, _ = bounded_noise_sample(
                reference, UNEVEN_RADII, UNEVEN_COUNTS, seed, args.noise_model
            )
            result, dist, max_loss = _bench_recover(samples, reference.k, seed, BENCH_SET)
            all_converged &= result.fit.converged
            rows.append([trial, dist, max_loss, int(result.fit.converged)])
            dists.append(dist)
            losses.append(max_loss)
            if trial == 0:
                _layered_points(
                    out_dir / "points.csv",
                    {
                        "T": samples.samples,
                        "S": BENCH_SET,
                        "Sstar": result.recovered.points.real,
                    },
                )
        _write_csv(
            out_dir / "results.csv",
            ["seed", "set_distance", "max_loss", "converged"],
            rows,
        )
        summary = {
            "scenario": "example62",
            "seeds": args.seeds,
            "noise_model": args.noise_model,
            "median_set_distance": float(np.median(dists)),
            "median_max_loss": float(np.median(losses)),
        }

    else:  # gmm
        rows = []
        accs = []
        for trial in seeds:
            seed = _derived_seed(args.seed, trial)
            spec = random_gmm_spec(args.n, args.k, seed=seed, diagonal=args.diagonal)
            samples, truth = gmm_sample(spec, args.samples, seed=_derived_seed(seed, 1))
            result = recover_point_set(samples, args.k, FitOptions(seed=seed))
            all_converged &= result.fit.converged
            assignment = assign_labels(result.loss, result.recovered, samples)
            acc = clustering_accuracy(assignment, truth, result.recovered, spec.means)
            rows.append([trial, acc, int(result.fit.converged)])
            accs.append(acc)
        _write_csv(out_dir / "results.csv", ["seed", "accuracy", "converged"], rows)
        summary = {
            "scenario": "gmm",
            "n": args.n,
            "k": args.k,
            "samples": args.samples,
            "diagonal": args.diagonal,
            "seeds": args.seeds,
            "median_accuracy": float(np.median(accs)),
            "min_accuracy": float(np.min(accs)),
            "max_accuracy": float(np.max(accs)),
        }

    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    if not all_converged:
        _emit_error(
            "non-convergence",
            NumericalFailureError("some bench fits hit their round budget"),
        )
        return 3
    return 0


# -- wiring ------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="setloss", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="cap BLAS threads (default 1 for reproducible runs)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="interpolate the system and losses of an exact set")
    p.add_argument("--input", required=True, help="CSV of points, one per row")
    p.add_argument("--output", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("fit", help="recover a point set from noisy samples")
    p.add_argument("--input", required=True, help="CSV of samples, one per row")
    p.add_argument("--k", type=int, required=True, help="number of points to recover")
    p.add_argument("--config", help="JSON file of fit options")
    p.add_argument("--seed", type=int, help="seed overriding the config")
    p.add_argument("--output", help="output JSON path (default stdout)")
    p.add_argument("--loss", choices=["transformed", "fg"], default="transformed")
    p.add_argument(
        "--complex",
        dest="complex_points",
        action="store_true",
        help="report the extracted zeros without projecting to the reals",
    )
    p.add_argument(
        "--real", dest="complex_points", action="store_false", help="project (default)"
    )
    p.set_defaults(func=cmd_fit, complex_points=False)

    p = sub.add_parser("cluster", help="label samples by loss descent")
    p.add_argument("--input", required=True, help="CSV of samples, optional truth column")
    p.add_argument("--k", type=int, help="recover this many points from the samples")
    p.add_argument("--sstar", help="JSON with a previously recovered set")
    p.add_argument("--config", help="JSON file of fit options")
    p.add_argument("--seed", type=int, help="seed overriding the config")
    p.add_argument("--output", help="labels CSV path (default stdout)")
    p.add_argument("--loss", choices=["transformed", "fg"], default="transformed")
    p.add_argument(
        "--truth-column",
        dest="truth_column",
        action="store_true",
        default=None,
        help="force the last column to be ground-truth labels",
    )
    p.add_argument(
        "--no-truth-column",
        dest="truth_column",
        action="store_false",
        help="treat every column as a coordinate",
    )
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("bench", help="rerun a bundled benchmark scenario")
    p.add_argument("--scenario", choices=["table1", "example62", "gmm"], required=True)
    p.add_argument("--seeds", type=int, default=5, help="number of trials")
    p.add_argument("--seed", type=int, default=0, help="base seed for splitting")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ni", type=int, default=50, help="samples per point (table1)")
    p.add_argument(
        "--noise-model",
        choices=["truncated-normal", "uniform"],
        default="truncated-normal",
    )
    p.add_argument("--n", type=int, default=2, help="dimension (gmm)")
    p.add_argument("--k", type=int, default=3, help="components (gmm)")
    p.add_argument("--samples", type=int, default=300, help="sample count (gmm)")
    p.add_argument("--diagonal", action="store_true", help="diagonal covariances (gmm)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    limiter = None
    if args.threads >= 1:
        try:
            from threadpoolctl import threadpool_limits

            limiter = threadpool_limits(limits=args.threads)
        except ImportError:
            pass
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegenerateConfigurationError as exc:
        _emit_error("degenerate-configuration", exc)
        return 2
    except InvalidStateError as exc:
        _emit_error("invalid-state", exc)
        return 2
    except NumericalFailureError as exc:
        _emit_error("numerical-failure", exc)
        return 2
    finally:
        if limiter is not None:
            limiter.unregister()


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
