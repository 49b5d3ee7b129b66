"""Command-line entry point: ``dysubc <ingest|sample|train|eval|ablate|sweep|export>``."""

from __future__ import annotations

import argparse
import contextlib
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import ConfigError, RunConfig, load_config
from .estimator import DySubC
from .evaluate import EvalReport, prepare_link_data, run_link_prediction, summarize
from .graph import GraphError, build_graph, parse_edge_list
from .io import (export_embeddings, file_digest, read_embeddings, read_metrics, write_metrics,
                 write_recent_interactions)
from .sampler import load_subgraphs, sample_all, save_subgraphs

SWEEP_KEYS = ("k", "alpha", "beta", "lambda")


def _load_events(cfg: RunConfig):
    return parse_edge_list(cfg.data, columns=cfg.columns)


def _cache_path(cfg: RunConfig, model: DySubC, seed: int) -> tuple[Path, str]:
    scfg = model.sampler_config()
    key = f"{file_digest(cfg.data)}-s{seed}"
    name = f"subgraphs-{key}-k{scfg.k}-a{scfg.alpha:g}-t{int(scfg.use_time)}.npz"
    return Path(cfg.out) / "cache" / name, key


def _subgraphs(cfg: RunConfig, model: DySubC, data, seed: int):
    """Sample the train graph, reusing a cache entry when its stamp matches."""
    path, key = _cache_path(cfg, model, seed)
    scfg = model.sampler_config()
    if path.exists():
        try:
            return load_subgraphs(path, scfg, key)
        except ValueError:
            pass
    subs = sample_all(data.train_graph, scfg, n_jobs=1 if cfg.deterministic else cfg.threads)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_subgraphs(path, subs, scfg, key)
    return subs


def _run(cfg: RunConfig, events, variant: str, seed: int, log=None, stream=False):
    data = prepare_link_data(events, seed=seed)
    params = {**cfg.model_params(), "variant": variant, "seed": seed}
    model = DySubC(**params, verbose=stream)
    subs = _subgraphs(cfg, model, data, seed)
    model.fit(data.train_graph, subgraphs=subs, log_file=log)
    report = run_link_prediction(model.embeddings_, data.split, data.full_graph, seed=seed, variant=variant)
    return model, data, report


def _run_task(args):
    cfg, events, variant, seed = args
    with threadpool_limits(1):
        return _run(cfg, events, variant, seed)[2]


def _fan_out(cfg: RunConfig, events, tasks):
    if cfg.threads > 1 and not cfg.deterministic and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(_run_task, [(cfg, events, v, s) for v, s in tasks]))
    return [_run(cfg, events, v, s)[2] for v, s in tasks]


def _write_report(reports: list[EvalReport], out: Path, name: str = "report.tsv") -> Path:
    out.mkdir(parents=True, exist_ok=True)
    rows = ["variant\tseed\tauc\taccuracy"]
    rows += [f"{r.variant}\t{r.seed}\t{r.auc:.6f}\t{r.accuracy:.6f}" for r in reports]
    rows += ["", "# summary", "variant\tauc_mean\tauc_std\tacc_mean\tacc_std\truns"]
    for v, s in summarize(reports).items():
        rows.append(f"{v}\t{s['auc_mean']:.6f}\t{s['auc_std']:.6f}\t{s['acc_mean']:.6f}\t{s['acc_std']:.6f}\t{s['runs']}")
    path = out / name
    path.write_text("\n".join(rows) + "\n")
    metrics_dir = out / "metrics"
    metrics_dir.mkdir(exist_ok=True)
    for r in reports:
        write_metrics(r.as_dict(), metrics_dir / f"{r.variant.lstrip('-') or 'full'}_seed{r.seed}.txt")
    return path


def cmd_ingest(cfg: RunConfig, args) -> int:
    events, node_ids = _load_events(cfg)
    g = build_graph(events)
    span_days = (g.t_max - g.t_min) / 86400.0
    print("nodes\tevents\tpairs\tt_min\tt_max\ttimespan_days")
    print(f"{g.n}\t{len(events)}\t{g.n_pairs}\t{g.t_min:g}\t{g.t_max:g}\t{span_days:.2f}")
    if args.write_split:
        data = prepare_link_data(events, seed=cfg.seed)
        data.split.write(Path(cfg.out) / "split", node_ids)
    return 0


def cmd_sample(cfg: RunConfig, args) -> int:
    events, _ = _load_events(cfg)
    data = prepare_link_data(events, seed=cfg.seed)
    model = DySubC(**cfg.model_params())
    subs = _subgraphs(cfg, model, data, cfg.seed)
    path, _ = _cache_path(cfg, model, cfg.seed)
    sizes = np.array([s.size for s in subs])
    print(f"{path}\tsubgraphs={len(subs)}\tmean_size={sizes.mean():.2f}\tmin_size={sizes.min()}")
    return 0


def _train_to_dir(cfg: RunConfig, out: Path):
    events, node_ids = _load_events(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.dumps())
    with open(out / "train_log.tsv", "w") as log:
        log.write("epoch\tL\tL1\tL2\tms\tval_auc\n")
        model, data, report = _run(cfg, events, cfg.variant, cfg.seed, log=log, stream=True)
    np.savez(out / "model.npz", embeddings=model.embeddings_, node_ids=np.asarray(node_ids), seed=cfg.seed)
    export_embeddings(model.embeddings_, node_ids, out / "embeddings.txt")
    return model, data, report, events, node_ids


def cmd_train(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    _, _, report, _, _ = _train_to_dir(cfg, out)
    write_metrics(report.as_dict(), out / "metrics.txt")
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    events, node_ids = _load_events(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.dumps())
    if args.embeddings:
        ids, table = read_embeddings(args.embeddings)
        pos = {nid: i for i, nid in enumerate(ids)}
        try:
            table = table[[pos[nid] for nid in node_ids]]
        except KeyError as exc:
            raise GraphError(f"node {exc.args[0]} missing from {args.embeddings}") from None
        data = prepare_link_data(events, seed=cfg.seed)
        reports = [run_link_prediction(table, data.split, data.full_graph, seed=cfg.seed, variant=cfg.variant)]
    else:
        reports = _fan_out(cfg, events, [(cfg.variant, s) for s in cfg.seed_list])
    path = _write_report(reports, out)
    print(path.read_text(), end="")
    return 0


def cmd_ablate(cfg: RunConfig, args) -> int:
    events, _ = _load_events(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.dumps())
    tasks = [(v, s) for s in cfg.seed_list for v in cfg.variants]
    path = _write_report(_fan_out(cfg, events, tasks), out)
    print(path.read_text(), end="")
    return 0


def parse_grid(specs) -> dict[str, list]:
    """``["k=10,20", "alpha=2:20:2"]`` -> ``{"k": [10, 20], "alpha": [2.0, 4.0, ...]}``."""
    grid: dict[str, list] = {}
    for spec in specs or []:
        if "=" not in spec:
            raise ConfigError(f"grid entry {spec!r} must look like key=values")
        key, values = (x.strip() for x in spec.split("=", 1))
        if key not in SWEEP_KEYS:
            raise ConfigError(f"cannot sweep {key!r}; choose from {SWEEP_KEYS}")
        cast = int if key == "k" else float
        if ":" in values:
            start, stop, step = (float(x) for x in values.split(":"))
            if step <= 0:
                raise ConfigError("sweep step must be positive")
            count = int(round((stop - start) / step)) + 1
            grid[key] = [cast(round(start + i * step, 10)) for i in range(count)]
        else:
            grid[key] = [cast(x) for x in values.split(",") if x.strip()]
        if not grid[key]:
            raise ConfigError(f"no values for {key}")
    if not grid:
        raise ConfigError("empty sweep grid")
    return grid


def sweep_cells(grid: dict[str, list]) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def cmd_sweep(cfg: RunConfig, args) -> int:
    grid = parse_grid(args.grid)
    events, _ = _load_events(cfg)
    root = Path(cfg.out)
    root.mkdir(parents=True, exist_ok=True)
    rows = ["\t".join(list(grid) + ["auc_mean", "auc_std", "acc_mean", "acc_std"])]
    for cell in sweep_cells(grid):
        name = "_".join(f"{k}={v}" for k, v in cell.items())
        cell_dir = root / "sweep" / name
        done = cell_dir / "done"
        if not done.exists():
            cell_cfg = load_config(overrides={**vars(cfg), **cell, "out": str(root)})
            reports = _fan_out(cell_cfg, events, [(cell_cfg.variant, s) for s in cell_cfg.seed_list])
            _write_report(reports, cell_dir)
            s = summarize(reports)[cell_cfg.variant]
            write_metrics(s, done)
        m = read_metrics(done)
        rows.append("\t".join([str(v) for v in cell.values()] +
                              [f"{float(m[x]):.6f}" for x in ("auc_mean", "auc_std", "acc_mean", "acc_std")]))
    table = root / "sweep.tsv"
    table.write_text("\n".join(rows) + "\n")
    print(table.read_text(), end="")
    return 0


def cmd_export(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    model_file = out / "model.npz"
    events, node_ids = _load_events(cfg)
    table = None
    saved_cfg = out / "config.txt"
    # reuse a trained model only if it came from this exact configuration
    if model_file.exists() and saved_cfg.exists() and saved_cfg.read_text() == cfg.dumps():
        with np.load(model_file) as z:
            table = z["embeddings"]
    if table is None:
        model, _, _, _, _ = _train_to_dir(cfg, out)
        table = model.embeddings_
    export_embeddings(table, node_ids, out / "embeddings.txt")
    data = prepare_link_data(events, seed=cfg.seed)
    write_recent_interactions(data.split.test_pos, node_ids, out / "recent_interactions.txt", count=10)
    print(out / "embeddings.txt")
    return 0


COMMANDS = {
    "ingest": cmd_ingest, "sample": cmd_sample, "train": cmd_train, "eval": cmd_eval,
    "ablate": cmd_ablate, "sweep": cmd_sweep, "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="key = value file; flags override it")
    shared.add_argument("--data", help="timestamped edge list")
    shared.add_argument("--format", help="column indices of source,target,time (default 0,1,2)")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--seeds", help="comma-separated seeds for eval/ablate/sweep")
    shared.add_argument("--k", type=int)
    shared.add_argument("--alpha", type=float)
    shared.add_argument("--beta", type=float)
    shared.add_argument("--lambda", dest="lam", type=float)
    shared.add_argument("--phi", type=float)
    shared.add_argument("--varphi", type=float)
    shared.add_argument("--lr", type=float)
    shared.add_argument("--epochs", type=int)
    shared.add_argument("--dim", type=int)
    shared.add_argument("--batch-size", dest="batch_size", type=int)
    shared.add_argument("--variant")
    shared.add_argument("--variants", help="comma-separated variants for ablate")
    shared.add_argument("--hinge", choices=("printed", "conventional"))
    shared.add_argument("--separate-encoders", dest="shared_encoder", action="store_const", const=False)
    shared.add_argument("--threads", type=int)
    shared.add_argument("--deterministic", action="store_const", const=True)

    parser = argparse.ArgumentParser(prog="dysubc", description="Temporal subgraph contrastive embeddings")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("ingest", parents=[shared], help="summarize a dataset, optionally write its split")
    p.add_argument("--write-split", action="store_true")
    sub.add_parser("sample", parents=[shared], help="sample and cache subgraphs")
    sub.add_parser("train", parents=[shared], help="train and write embeddings")
    p = sub.add_parser("eval", parents=[shared], help="link prediction AUC/accuracy")
    p.add_argument("--embeddings", help="evaluate an existing embedding file instead of training")
    sub.add_parser("ablate", parents=[shared], help="compare ablation variants")
    p = sub.add_parser("sweep", parents=[shared], help="grid over k/alpha/beta/lambda")
    p.add_argument("--grid", action="append", help="e.g. k=10,20,50 or alpha=2:20:2")
    sub.add_parser("export", parents=[shared], help="embedding text file + recent interactions")
    return parser


_OVERRIDE_KEYS = ("data", "format", "out", "seed", "seeds", "k", "alpha", "beta", "lam", "phi", "varphi",
                  "lr", "epochs", "dim", "batch_size", "variant", "variants", "hinge", "shared_encoder",
                  "threads", "deterministic")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {k: getattr(args, k) for k in _OVERRIDE_KEYS})
        cfg.validate(need_data=True)
        limits = threadpool_limits(1) if cfg.deterministic else contextlib.nullcontext()
        with limits:
            return COMMANDS[args.command](cfg, args)
    except (ConfigError, GraphError, ValueError, OSError, FloatingPointError) as exc:
        print(f"dysubc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
