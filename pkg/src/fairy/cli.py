"""Command-line pipeline over a workspace directory.

Each subcommand reads and writes the shared workspace layout (graph
snapshot, feed, path dump, candidate pairs, judgments, models), so a
full study is a sequence of invocations against one directory, passed
via --workspace or the FAIRY_WORKSPACE environment variable. Output
files are written atomically: a failing command leaves no partial file.
"""
from __future__ import annotations

import contextlib
import csv
import functools
import json
import os
import tempfile
from pathlib import Path

import click
import numpy as np

from .baselines import espresso_score, pra_score, rex_global_score, walker_for
from .datasets import SCALE_PROFILES, synthetic_platform
from .errors import DuplicateJudgmentError, FairyError
from .features import PathCorpus, PathFeaturizer
from .graph import build_graph, bundled_schema, load_schema, read_jsonl
from .harness import (ASPECTS, auto_judge, format_results_table,
                      load_judgments, run_experiment,
                      sample_perturbation_pairs, sample_random_pairs,
                      save_candidates, save_results_csv, train_for_aspect)
from .paths import (build_pattern_stats, enumerate_paths, load_feed,
                    pair_key, parse_pair_key, pattern_of)
from .ranking import DEFAULT_C_GRID
from .workspace import WORKSPACE_ENV, Workspace


def friendly(fn):
    """Turn package errors into clean messages and a nonzero exit."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (FairyError, ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


@contextlib.contextmanager
def atomic_output(path: Path):
    """Write to a temp file and rename, so failures leave nothing behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


@click.group()
@click.option("--workspace", "-w", type=click.Path(path_type=Path),
              envvar=WORKSPACE_ENV, default=None,
              help=f"Workspace directory (or set {WORKSPACE_ENV}).")
@click.pass_context
def main(ctx, workspace):
    """Mine, judge and rank explanation paths for feed items."""
    ctx.obj = workspace


def open_workspace(ctx) -> Workspace:
    try:
        return Workspace.locate(ctx.obj)
    except FairyError as exc:
        raise click.ClickException(str(exc)) from exc


def new_workspace(ctx) -> Workspace:
    if ctx.obj is None:
        raise click.ClickException(
            f"no workspace given and {WORKSPACE_ENV} is not set")
    root = Path(ctx.obj)
    root.mkdir(parents=True, exist_ok=True)
    return Workspace(root)


@main.command("build-graph")
@click.option("--schema", required=True,
              help="Schema file, or a bundled schema name (quora, lastfm).")
@click.option("--nodes", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--edges", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@friendly
def build_graph_cmd(ctx, schema, nodes, edges):
    """Validate node/edge records into an immutable graph snapshot."""
    ws = new_workspace(ctx)
    sch = (load_schema(schema) if Path(schema).exists()
           else bundled_schema(schema))
    g = build_graph(sch, read_jsonl(nodes), read_jsonl(edges))
    ws.save_graph(g)
    click.echo(f"built graph around {g.user!r}: {g.n_nodes} nodes, "
               f"{g.n_edges} directed edges (inverses included)")


@main.command("make-dataset")
@click.option("--profile", default="demo",
              type=click.Choice(sorted(SCALE_PROFILES)))
@click.option("--seed", default=0, type=int)
@click.pass_context
@friendly
def make_dataset(ctx, profile, seed):
    """Generate a synthetic platform (graph + feed) into the workspace."""
    ws = new_workspace(ctx)
    g, feed = synthetic_platform(profile, seed=seed)
    ws.write_config({"seed": seed,
                     "max_len": SCALE_PROFILES[profile]["max_len"]})
    ws.save_graph(g)
    ws.save_feed(feed)
    click.echo(f"generated {profile} platform: {g.n_nodes} nodes, "
               f"{g.n_edges} directed edges, {len(feed)} feed items")


@main.command()
@click.option("--max-len", type=int, default=None,
              help="Maximum path length in edges (default: workspace config).")
@click.option("--cap", type=int, default=None,
              help="Abort when one item has more paths than this.")
@click.option("--feed", "feed_file", type=click.Path(exists=True,
                                                     dir_okay=False),
              default=None, help="Feed file to mine (default: workspace feed).")
@click.pass_context
@friendly
def mine(ctx, max_len, cap, feed_file):
    """Enumerate temporally valid explanation paths for every feed item."""
    ws = open_workspace(ctx)
    cfg = ws.config()
    if max_len is not None or cap is not None:
        if max_len is not None:
            cfg["max_len"] = max_len
        if cap is not None:
            cfg["cap"] = cap
        ws.write_config(cfg)
        cfg = ws.config()
    g = ws.graph()
    if feed_file is not None:
        ws.save_feed(load_feed(feed_file))
    feed = ws.feed()
    instances = {}
    total = 0
    for f in feed:
        paths = enumerate_paths(g, f.item, f.seen_at,
                                max_len=cfg["max_len"], cap=cfg["cap"])
        instances[pair_key(g.user, f.item, f.seen_at)] = paths
        total += len(paths)
        click.echo(f"  {f.item} seen at {f.seen_at}: {len(paths)} paths")
    ws.save_corpus(PathCorpus(g, instances))
    click.echo(f"mined {total} paths across {len(feed)} feed items "
               f"(max_len={cfg['max_len']})")


@main.command()
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="CSV destination (default: <workspace>/features.csv).")
@click.pass_context
@friendly
def featurize(ctx, out):
    """Write one feature row per mined path as CSV."""
    ws = open_workspace(ctx)
    corpus = ws.corpus()
    cfg = ws.config()
    featurizer = PathFeaturizer(user_type=cfg["user_type"]).fit(corpus)
    out = out or ws.root / "features.csv"
    rows = 0
    with atomic_output(out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "path_id", *featurizer.feature_names_])
        for key, paths in corpus.instances.items():
            user, item, seen_at = parse_pair_key(key)
            for p in paths:
                vec = featurizer.vector(user, item, seen_at, p)
                writer.writerow([key, p.id, *(f"{v:.10g}" for v in vec)])
                rows += 1
    click.echo(f"wrote {rows} feature rows x "
               f"{len(featurizer.feature_names_)} columns to {out}")


@main.command()
@click.option("--strategy", default="random",
              type=click.Choice(["random", "perturb-user",
                                 "perturb-category", "perturb-item"]))
@click.option("--n", type=int, required=True,
              help="Number of candidate pairs to draw.")
@click.option("--seed", type=int, default=None,
              help="Sampling seed (default: workspace seed).")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Destination (default: the workspace candidate file).")
@click.pass_context
@friendly
def sample(ctx, strategy, n, seed, out):
    """Draw candidate path pairs for judges to compare."""
    ws = open_workspace(ctx)
    corpus = ws.corpus()
    cfg = ws.config()
    seed = cfg["seed"] if seed is None else seed
    if strategy == "random":
        pairs = sample_random_pairs(corpus, n, seed=seed)
    else:
        kind = strategy.removeprefix("perturb-")
        pairs = sample_perturbation_pairs(corpus, kind, n, seed=seed,
                                          user_type=cfg["user_type"])
    dest = Path(out) if out else ws.candidates_path
    dest.parent.mkdir(parents=True, exist_ok=True)
    save_candidates(pairs, dest)
    click.echo(f"sampled {len(pairs)} {strategy} pairs to {dest}")


@main.command("auto-judge")
@click.option("--aspect", type=click.Choice(list(ASPECTS)),
              default="relevance")
@click.option("--utility", default="pattern-frequency",
              type=click.Choice(["pattern-frequency", "short", "long"]),
              help="Scripted preference: commoner pattern, shorter path, "
                   "or longer path wins.")
@click.option("--judge", default="scripted")
@click.pass_context
@friendly
def auto_judge_cmd(ctx, aspect, utility, judge):
    """Judge the stored candidate pairs with a scripted rule."""
    ws = open_workspace(ctx)
    corpus = ws.corpus()
    g = corpus.graph
    candidates = ws.candidates()
    if utility == "pattern-frequency":
        stats = build_pattern_stats(corpus.instances, g)

        def score(p):
            return stats.frequency(pattern_of(p, g))
    elif utility == "short":
        def score(p):
            return -p.length
    else:
        def score(p):
            return p.length
    stored = skipped = 0
    for judgment in auto_judge(candidates, score, aspect=aspect,
                               judge=judge):
        try:
            ws.append_judgment(judgment)
            stored += 1
        except DuplicateJudgmentError:
            skipped += 1
    note = f" ({skipped} duplicates skipped)" if skipped else ""
    click.echo(f"stored {stored} {aspect} judgments by {judge!r}{note}")


@main.command()
@click.option("--aspect", type=click.Choice(list(ASPECTS)), required=True)
@click.option("--judgments", "judgments_file", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Judgment file (default: the workspace store).")
@click.pass_context
@friendly
def train(ctx, aspect, judgments_file):
    """Fit and store the pairwise ranking model for one aspect."""
    ws = open_workspace(ctx)
    judgments = (load_judgments(judgments_file) if judgments_file
                 else ws.judgments())
    cfg = ws.config()
    featurizer = PathFeaturizer(user_type=cfg["user_type"])
    outcome = train_for_aspect(ws.corpus(), judgments, aspect,
                               featurizer=featurizer, seed=cfg["seed"])
    ws.save_model(outcome.model, aspect)
    for c in sorted(outcome.dev_accuracy_by_C):
        chosen = "  <- selected" if c == outcome.selected_C else ""
        click.echo(f"  C={c:g}: dev accuracy "
                   f"{outcome.dev_accuracy_by_C[c]:.3f}{chosen}")
    click.echo(f"saved {aspect} model ({outcome.n_train} train / "
               f"{outcome.n_dev} dev pairs) to {ws.model_path(aspect)}")


def _walk_text(p) -> str:
    parts = [p.nodes[0]]
    for et, node in zip(p.edge_types, p.nodes[1:]):
        parts.append(f"-[{et}]->")
        parts.append(node)
    return " ".join(parts)


@main.command()
@click.option("--user", default=None,
              help="Focal user (default: the graph's focal user).")
@click.option("--item", required=True)
@click.option("--aspect", type=click.Choice(list(ASPECTS)),
              default="relevance")
@click.option("--k", type=int, default=3)
@click.pass_context
@friendly
def rank(ctx, user, item, aspect, k):
    """Print the top-k explanation paths for one feed item."""
    ws = open_workspace(ctx)
    model = ws.model(aspect)
    if model is None:
        raise click.UsageError(
            f"no trained {aspect} model under {ws.root}; "
            f"run `fairy train --aspect {aspect}` first")
    corpus = ws.corpus()
    g = corpus.graph
    if user is None:
        user = g.user
    if user != g.user:
        raise click.ClickException(
            f"graph is built around {g.user!r}, not {user!r}")
    hit = next((f for f in ws.feed() if f.item == item), None)
    if hit is None:
        raise click.ClickException(f"{item!r} is not a feed item")
    paths = corpus.instances.get(pair_key(user, item, hit.seen_at))
    if not paths:
        raise click.ClickException(f"no mined paths for {item!r}")
    cfg = ws.config()
    featurizer = PathFeaturizer(user_type=cfg["user_type"]).fit(corpus)
    vectors = {p.id: featurizer.vector(user, item, hit.seen_at, p)
               for p in paths}
    ids = [p.id for p in paths]
    order = model.rank(np.stack([vectors[i] for i in ids]), ids)
    by_id = {p.id: p for p in paths}
    for rank_pos, pid in enumerate(order[:k], start=1):
        score = model.decision_function(vectors[pid])
        click.echo(f"{rank_pos:2d}. {score:+.4f}  {_walk_text(by_id[pid])}")


@main.command()
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="CSV destination (default: <workspace>/baseline_scores.csv).")
@click.pass_context
@friendly
def baselines(ctx, out):
    """Dump reference-method scores for every mined path as CSV."""
    ws = open_workspace(ctx)
    corpus = ws.corpus()
    g = corpus.graph
    stats = build_pattern_stats(corpus.instances, g)
    out = out or ws.root / "baseline_scores.csv"
    rows = 0
    with atomic_output(out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "method", "value"])
        for key, paths in corpus.instances.items():
            _user, _item, seen_at = parse_pair_key(key)
            walker = walker_for(g, seen_at)
            for p in paths:
                for method, value in (
                        ("pra", pra_score(g, p, seen_at)),
                        ("rex-global", rex_global_score(p, stats, g)),
                        ("espresso", espresso_score(g, p, seen_at,
                                                    walker=walker))):
                    writer.writerow([p.id, method, f"{value:.10g}"])
                    rows += 1
    click.echo(f"wrote {rows} scores to {out}")


@main.command("eval")
@click.option("--config", "config_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON experiment config.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None,
              help="Results directory (default: <workspace>/results).")
@click.pass_context
@friendly
def eval_cmd(ctx, config_file, out_dir):
    """Run ranking experiments from a JSON config; write CSV and a table.

    Config keys (all optional except none): "aspects" (default: every
    judged aspect), "judgments" (file; default: workspace store),
    "masked_groups", "seed", "c_grid", "max_iter".
    """
    ws = open_workspace(ctx)
    with open(config_file, encoding="utf-8") as fh:
        conf = json.load(fh)
    corpus = ws.corpus()
    cfg = ws.config()
    judgments = (load_judgments(conf["judgments"]) if conf.get("judgments")
                 else ws.judgments())
    aspects = conf.get("aspects") or sorted({j.aspect for j in judgments})
    if not aspects:
        raise click.ClickException("no judgments to evaluate")
    results = [run_experiment(
        corpus, judgments, aspect,
        masked_groups=tuple(conf.get("masked_groups", ())),
        seed=int(conf.get("seed", cfg["seed"])),
        c_grid=tuple(conf.get("c_grid", DEFAULT_C_GRID)),
        max_iter=int(conf.get("max_iter", 2000))) for aspect in aspects]
    out_dir = Path(out_dir) if out_dir else ws.root / "results"
    out_dir.mkdir(parents=True, exist_ok=True)
    table = format_results_table(results)
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    os.close(fd)
    try:
        save_results_csv(results, tmp)
        os.replace(tmp, out_dir / "results.csv")
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    with atomic_output(out_dir / "results.txt") as fh:
        fh.write(table + "\n")
    click.echo(table)
    click.echo(f"results written to {out_dir}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8040, type=int)
@click.pass_context
@friendly
def serve(ctx, host, port):
    """Serve the judgment HTTP API over the workspace."""
    from .service import serve as run_service

    run_service(open_workspace(ctx), host=host, port=port)


if __name__ == "__main__":
    main()
