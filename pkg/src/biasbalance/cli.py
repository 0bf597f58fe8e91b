"""Command-line client for the balancing service.

Every command reads local files, sends one request to the service (an
in-process instance by default, or a remote one via --server), and writes the
response artifacts. Exit codes: 0 success, 2 input validation, 3 infeasible
balancing constraints, 1 anything else.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 1


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    async def _run():
        from .service import create_app
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://service",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(_run())


def _fail(response: httpx.Response):
    try:
        body = response.json()
    except ValueError:
        body = {}
    error = body.get("error", {})
    message = error.get("message") or body.get("detail") or response.text
    click.echo(f"error: {message}", err=True)
    if response.status_code in (400, 422):
        sys.exit(EXIT_INPUT)
    if response.status_code == 409:
        sys.exit(EXIT_INFEASIBLE)
    sys.exit(EXIT_INTERNAL)


def _call(server: str | None, path: str, payload: dict) -> dict:
    try:
        response = _post(server, path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)
    if response.status_code != 200:
        _fail(response)
    return response.json()


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_INPUT)


def _write(directory: Path, name: str, content: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    target.write_text(content, encoding="utf-8")
    return target


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None):
    """Balance bias-measuring test sets and evaluate weighted bias metrics."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--dataset", required=True, type=click.Path(), help="Test set TSV.")
@click.option("--annotations", required=True, type=click.Path(),
              help="Name-span annotations JSONL.")
@click.option("--properties", default="names,distance", show_default=True,
              help="Comma-separated property families to balance.")
@click.option("--trim/--no-trim", default=False, show_default=True,
              help="Trim outlier examples before weighting.")
@click.option("--max-names", default=15, show_default=True)
@click.option("--max-rank", default=4, show_default=True)
@click.option("--naive", is_flag=True, help="Per-example LP without class collapse.")
@click.option("--backend", default="auto", show_default=True,
              type=click.Choice(["auto", "self", "scipy"]))
@click.option("--label", default="W", show_default=True, help="Weight-set label.")
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.pass_context
def weigh(ctx, dataset, annotations, properties, trim, max_names, max_rank,
          naive, backend, label, out):
    """Compute balancing weights and write the weight file plus metadata."""
    families = [p.strip() for p in properties.split(",") if p.strip()]
    body = _call(ctx.obj["server"], "/weigh", {
        "dataset_tsv": _read(dataset),
        "annotations_jsonl": _read(annotations),
        "properties": families,
        "trim": trim,
        "max_names": max_names,
        "max_rank": max_rank,
        "naive": naive,
        "solver_backend": backend,
    })
    out_dir = Path(out)
    weights_path = _write(out_dir, f"{label}-weights.tsv", body["weights_tsv"])
    meta_path = _write(out_dir, f"{label}-weights.meta.json",
                       _json_text(body["metadata"]))
    meta = body["metadata"]
    click.echo(f"wrote {weights_path} and {meta_path}")
    click.echo(f"objective {meta['objective']:.6f}, "
               f"{meta['zero_weights']} zero weights, "
               f"{len(meta['property_labels'])} property sets, "
               f"n = {meta['n']:.0f}")


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--predictions", required=True, type=click.Path())
@click.option("--weights", "weight_specs", multiple=True, metavar="LABEL=PATH",
              help="Weight file to add as a weighted-bias column; repeatable.")
@click.option("--name", default="model", show_default=True, help="Row label.")
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.pass_context
def evaluate(ctx, dataset, predictions, weight_specs, name, out):
    """Score predictions: F1, accuracy, and bias ratios."""
    weight_files = []
    for spec in weight_specs:
        label, sep, path = spec.partition("=")
        if not sep or not label or not path:
            click.echo(f"error: --weights expects LABEL=PATH, got {spec!r}", err=True)
            sys.exit(EXIT_INPUT)
        weight_files.append({"label": label, "weights_tsv": _read(path)})
    body = _call(ctx.obj["server"], "/evaluate", {
        "dataset_tsv": _read(dataset),
        "predictions_tsv": _read(predictions),
        "weight_files": weight_files,
        "name": name,
    })
    out_dir = Path(out)
    _write(out_dir, f"{name}-report.txt", body["table_text"])
    _write(out_dir, f"{name}-report.json", _json_text(body["table"]))
    click.echo(body["table_text"], nl=False)
    if body["missing_predictions"]:
        click.echo(f"note: {len(body['missing_predictions'])} positive examples "
                   "had no prediction and were counted incorrect", err=True)


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--annotations", required=True, type=click.Path())
@click.option("--max-names", default=15, show_default=True)
@click.option("--max-rank", default=4, show_default=True)
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.pass_context
def trim(ctx, dataset, annotations, max_names, max_rank, out):
    """Remove examples with too many names or a too-distant correct candidate."""
    body = _call(ctx.obj["server"], "/trim", {
        "dataset_tsv": _read(dataset),
        "annotations_jsonl": _read(annotations),
        "max_names": max_names,
        "max_rank": max_rank,
    })
    out_dir = Path(out)
    ds_path = _write(out_dir, "trimmed-dataset.tsv", body["dataset_tsv"])
    an_path = _write(out_dir, "trimmed-annotations.jsonl", body["annotations_jsonl"])
    click.echo(f"retained {body['retained']} examples "
               f"({body['masculine']} masculine, {body['feminine']} feminine)")
    click.echo(f"wrote {ds_path} and {an_path}")


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--annotations", required=True, type=click.Path())
@click.option("--weights", "weights_path", default=None, type=click.Path(),
              help="Optional weight file for the weight histogram and outliers.")
@click.option("--label", default="W", show_default=True)
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.pass_context
def analyze(ctx, dataset, annotations, weights_path, label, out):
    """Distribution statistics: name counts, candidate ranks, weight histogram."""
    payload = {
        "dataset_tsv": _read(dataset),
        "annotations_jsonl": _read(annotations),
        "weight_label": label,
    }
    if weights_path:
        payload["weights_tsv"] = _read(weights_path)
    body = _call(ctx.obj["server"], "/analyze", payload)
    out_dir = Path(out)
    _write(out_dir, "name-counts.csv", body["name_count_csv"])
    _write(out_dir, "ranks.csv", body["rank_csv"])
    stats = {"name_counts": body["name_count_stats"], "ranks": body["rank_stats"]}
    if weights_path:
        _write(out_dir, f"{label}-weight-histogram.csv", body["weight_histogram_csv"])
        stats["weights"] = {
            "outliers": body["weight_outliers"],
            "max_weight": body["max_weight"],
            "zero_weights": body["zero_weights"],
        }
    _write(out_dir, "stats.json", _json_text(stats))
    for side in ("masculine", "feminine"):
        nc = body["name_count_stats"][side]
        rk = body["rank_stats"][side]
        mean = "n/a" if nc["mean"] is None else f"{nc['mean']:.2f}"
        std = "n/a" if nc["std"] is None else f"{nc['std']:.2f}"
        rmean = "n/a" if rk["mean"] is None else f"{rk['mean']:.2f}"
        rstd = "n/a" if rk["std"] is None else f"{rk['std']:.2f}"
        click.echo(f"{side}: names/example {mean} (std {std}), "
                   f"correct-candidate rank {rmean} (std {rstd})")
    if weights_path:
        click.echo(f"{len(body['weight_outliers'])} weights at or above "
                   f"{4.0}, max weight {body['max_weight']:.4g}, "
                   f"{body['zero_weights']} zero weights")


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--annotations", required=True, type=click.Path())
@click.option("--kind", default="random", show_default=True,
              type=click.Choice(["random", "dist-k"]))
@click.option("--k", default=1, show_default=True)
@click.option("--repetitions", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--label", default=None, help="Output name; defaults to the kind.")
@click.option("--out", default=".", show_default=True, type=click.Path())
@click.pass_context
def baseline(ctx, dataset, annotations, kind, k, repetitions, seed, label, out):
    """Generate reference predictions (random choice or k-th closest name)."""
    body = _call(ctx.obj["server"], "/baseline", {
        "dataset_tsv": _read(dataset),
        "annotations_jsonl": _read(annotations),
        "kind": kind,
        "k": k,
        "repetitions": repetitions,
        "seed": seed,
    })
    name = label or (f"dist-{k}" if kind == "dist-k" else "random")
    out_dir = Path(out)
    pred_path = _write(out_dir, f"{name}-predictions.tsv", body["predictions_tsv"])
    _write(out_dir, f"{name}-summary.json", _json_text(body["summary"]))
    click.echo(f"wrote {pred_path}")
    summary = body["summary"]
    if summary.get("exact_accuracy"):
        click.echo("expected accuracy: " + ", ".join(
            f"{g} {v:.4f}" for g, v in sorted(summary["exact_accuracy"].items())))


@main.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--predictions-1", required=True, type=click.Path())
@click.option("--predictions-2", required=True, type=click.Path())
@click.option("--weights", "weights_path", default=None, type=click.Path())
@click.option("--metric", default="acc-bias", show_default=True,
              type=click.Choice(["acc-bias", "weighted-bias"]))
@click.option("--iterations", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
def significance(ctx, dataset, predictions_1, predictions_2, weights_path,
                 metric, iterations, seed):
    """Approximate randomization test between two models' bias scores."""
    payload = {
        "dataset_tsv": _read(dataset),
        "predictions_1_tsv": _read(predictions_1),
        "predictions_2_tsv": _read(predictions_2),
        "metric": metric,
        "iterations": iterations,
        "seed": seed,
    }
    if weights_path:
        payload["weights_tsv"] = _read(weights_path)
    body = _call(ctx.obj["server"], "/significance", payload)
    click.echo(f"observed |difference| = {body['observed']:.6f}")
    click.echo(f"p = {body['p_value']:.6f} "
               f"({body['iterations']} iterations, seed {body['seed']}, "
               f"metric {body['metric']})")
    if body["undefined_iterations"]:
        click.echo(f"note: {body['undefined_iterations']} permutations had an "
                   "undefined ratio and were counted conservatively", err=True)


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--rounds", default=40, show_default=True)
@click.pass_context
def verify(ctx, seed, rounds):
    """Run the built-in verification suite (identities, oracles, determinism)."""
    body = _call(ctx.obj["server"], "/verify", {"seed": seed, "rounds": rounds})
    for check in body["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        click.echo(f"{mark}  {check['name']}: {check['detail']}")
    if not body["passed"]:
        sys.exit(EXIT_INTERNAL)
    click.echo("all checks passed")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
