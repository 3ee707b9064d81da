"""Command-line entry point: gen / train / embed / eval / diagnose.

Configuration precedence is flags > JSON config file > built-in
defaults. Every command writes a manifest next to its outputs with the
fully resolved configuration, SHA-256 hashes of its inputs, and package
versions; identical inputs and flags reproduce outputs byte for byte.
Errors print one line to stderr as ``nbrecon: <CODE>: <message>``.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys

import numpy as np

from . import __version__
from . import evalsuite as ev
from . import trainer as tr
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ContractError, GraphParseError, NbreconError
from .graphstore import ShapeSpec, generate_planted, load_graph, write_graph

ABLATE_FLAGS = {"no-degree": "no_degree", "no-distribution": "no_distribution", "no-self": "no_self"}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def _manifest(path, command, resolved, inputs, outputs):
    _write_json(
        path,
        {
            "command": command,
            "config": resolved,
            "input_hashes": {p: _sha256(p) for p in inputs},
            "outputs": sorted(outputs),
            "versions": {
                "nbrecon": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
        },
    )


def _load_matrix_csv(path):
    rows = []
    width = None
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise GraphParseError(f"{path}:{ln}: expected {width} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise GraphParseError(f"{path}:{ln}: non-numeric value") from None
    if not rows:
        raise GraphParseError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def _load_labels(path):
    vals = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(int(line))
            except ValueError:
                raise GraphParseError(f"{path}:{ln}: labels must be integers") from None
    if not vals:
        raise GraphParseError(f"{path}: empty label file")
    return np.array(vals, dtype=np.int64)


def _data_files(data_dir):
    edges = os.path.join(data_dir, "edges.txt")
    feats = os.path.join(data_dir, "features.csv")
    labels = os.path.join(data_dir, "labels.csv")
    return edges, (feats if os.path.exists(feats) else None), (labels if os.path.exists(labels) else None)


def _load_data(data_dir):
    edges, feats, labels = _data_files(data_dir)
    return load_graph(edges, feature_path=feats, label_path=labels)


# ---------------------------------------------------------------------------


def cmd_gen(args):
    spec = ShapeSpec(
        kind=args.shape,
        count=args.count,
        cycle_len=args.cycle,
        size=args.size,
        perturb=args.perturb,
        seed=args.seed,
    )
    g = generate_planted(spec)
    os.makedirs(args.out, exist_ok=True)
    write_graph(g, args.out)
    outputs = [os.path.join(args.out, n) for n in ("edges.txt", "features.csv", "labels.csv")]
    _manifest(
        os.path.join(args.out, "gen.manifest.json"),
        "gen",
        dataclasses.asdict(spec),
        [],
        outputs,
    )
    roles = len(set(g.labels.tolist()))
    print(f"nodes={g.num_nodes} edges={len(g.edges)} roles={roles}")
    return 0


_TRAIN_FLAG_FIELDS = (
    "k", "m", "q", "lam_s", "lam_d", "lr", "epochs", "seed",
    "surrogate", "sinkhorn_eps", "sinkhorn_iters", "neighbor_cap", "encoder_kind",
)


def _resolve_train_config(args):
    base = dataclasses.asdict(tr.TrainConfig())
    if args.config:
        with open(args.config) as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as e:
                raise GraphParseError(f"{args.config}: bad JSON config: {e}") from None
        ablations = file_cfg.pop("ablations", [])
        for name in ablations:
            if name not in base:
                raise ContractError(f"unknown ablation {name!r} in config file")
            file_cfg[name] = True
        unknown = set(file_cfg) - set(base)
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        base.update(file_cfg)
    for field in _TRAIN_FLAG_FIELDS:
        val = getattr(args, field)
        if val is not None:
            base[field] = val
    for flag in args.ablate or []:
        base[ABLATE_FLAGS[flag]] = True
    cfg = tr.TrainConfig(**base)
    cfg.validate()
    return cfg


def cmd_train(args):
    g = _load_data(args.data)
    cfg = _resolve_train_config(args)
    eparams, dparams, reports = tr.train(g, cfg)
    os.makedirs(args.out, exist_ok=True)
    ckpt_path = os.path.join(args.out, "checkpoint.bin")
    save_checkpoint(ckpt_path, eparams, dparams, cfg, feat_dim=g.features.shape[1])
    log_path = os.path.join(args.out, "epochs.jsonl")
    with open(log_path, "w") as fh:
        for r in reports:
            # wall_time excluded: log files must be byte-identical on rerun
            fh.write(
                json.dumps(
                    {
                        "epoch": r.epoch,
                        "total": r.total,
                        "self_loss": r.self_loss,
                        "degree_loss": r.degree_loss,
                        "dist_losses": r.dist_losses,
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")
    inputs = [p for p in _data_files(args.data) if p] + ([args.config] if args.config else [])
    _manifest(
        os.path.join(args.out, "train.manifest.json"),
        "train",
        dataclasses.asdict(cfg),
        inputs,
        [ckpt_path, log_path],
    )
    final = reports[-1].total if reports else float("nan")
    print(f"epochs={len(reports)} final_loss={final:.6g} checkpoint={ckpt_path}")
    return 0


def cmd_embed(args):
    eparams, _, cfg, feat_dim = load_checkpoint(args.checkpoint)
    g = _load_data(args.data)
    if g.features.shape[1] != feat_dim:
        raise ContractError(
            f"data has {g.features.shape[1]} feature columns, checkpoint expects {feat_dim}"
        )
    emb = tr.embed(g, eparams)
    np.savetxt(args.out, emb, delimiter=",", fmt="%.17g")
    inputs = [args.checkpoint] + [p for p in _data_files(args.data) if p]
    _manifest(args.out + ".manifest.json", "embed", dataclasses.asdict(cfg), inputs, [args.out])
    print(f"embedding shape=({emb.shape[0]},{emb.shape[1]}) out={args.out}")
    return 0


def cmd_eval(args):
    emb = _load_matrix_csv(args.emb)
    labels = _load_labels(args.labels)
    if args.mode == "cluster":
        report = ev.metrics_report(emb, labels, num_clusters=args.clusters)
    else:
        accs = [ev.classify_frozen(emb, labels, seed=s) for s in range(args.seeds)]
        report = {
            "mode": "classify",
            "per_seed_accuracy": accs,
            "mean_accuracy": float(np.mean(accs)),
            "seeds": args.seeds,
        }
    if args.out:
        _write_json(args.out, report)
        resolved = {"mode": args.mode, "seeds": args.seeds, "clusters": args.clusters}
        _manifest(args.out + ".manifest.json", "eval", resolved, [args.emb, args.labels], [args.out])
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_diagnose(args):
    eparams, dparams, cfg, feat_dim = load_checkpoint(args.checkpoint)
    g = _load_data(args.data)
    if g.features.shape[1] != feat_dim:
        raise ContractError(
            f"data has {g.features.shape[1]} feature columns, checkpoint expects {feat_dim}"
        )
    if args.q is not None:
        cfg = dataclasses.replace(cfg, q=args.q)
    report = ev.approximation_report(g, eparams, dparams, cfg)
    table = {
        "quantiles": report["quantiles"],
        "num_ranked": report["num_ranked"],
        "excluded_zero_x": report["excluded_zero_x"],
        "skipped_isolated": report["skipped_isolated"],
        "q": cfg.q,
    }
    text = json.dumps(table, sort_keys=True, indent=2)
    if args.out:
        _write_json(args.out, table)
        _manifest(
            args.out + ".manifest.json",
            "diagnose",
            dataclasses.asdict(cfg),
            [args.checkpoint] + [p for p in _data_files(args.data) if p],
            [args.out],
        )
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="nbrecon",
        description="Structural node embeddings via neighborhood-distribution reconstruction.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a planted-shape benchmark graph")
    g.add_argument("--shape", required=True, choices=["house", "fan", "star", "varied"])
    g.add_argument("--count", type=int, required=True, help="number of planted shapes")
    g.add_argument("--cycle", type=int, required=True, help="base cycle length")
    g.add_argument("--size", type=int, default=4, help="leaf count for fan/star shapes")
    g.add_argument("--perturb", type=int, default=0, help="number of random edge edits")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train on a generated dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--config", help="JSON config file (flags take precedence)")
    t.add_argument("--k", type=int)
    t.add_argument("--m", type=int)
    t.add_argument("--q", type=int)
    t.add_argument("--lam-s", dest="lam_s", type=float)
    t.add_argument("--lam-d", dest="lam_d", type=float)
    t.add_argument("--lr", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--surrogate", choices=list(tr.SURROGATES))
    t.add_argument("--sinkhorn-eps", dest="sinkhorn_eps", type=float)
    t.add_argument("--sinkhorn-iters", dest="sinkhorn_iters", type=int)
    t.add_argument("--cap", dest="neighbor_cap", type=int)
    t.add_argument("--encoder", dest="encoder_kind", choices=["gcn", "sum"])
    t.add_argument("--ablate", action="append", choices=sorted(ABLATE_FLAGS), default=[])
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("embed", help="write H^(k) for a dataset from a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("eval", help="score an embedding against labels")
    v.add_argument("--emb", required=True)
    v.add_argument("--labels", required=True)
    v.add_argument("--mode", choices=["cluster", "classify"], default="cluster")
    v.add_argument("--seeds", type=int, default=10, help="classify mode: number of splits")
    v.add_argument("--clusters", type=int, help="cluster mode: override cluster count")
    v.add_argument("--out", help="write metrics JSON here instead of stdout")
    v.set_defaults(func=cmd_eval)

    d = sub.add_parser("diagnose", help="generator approximation quantile table")
    d.add_argument("--checkpoint", required=True)
    d.add_argument("--data", required=True)
    d.add_argument("--q", type=int, help="override sample count from the checkpoint config")
    d.add_argument("--out", help="write the table JSON here instead of stdout")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NbreconError as e:
        print(f"nbrecon: {e.code}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"nbrecon: E_IO: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
