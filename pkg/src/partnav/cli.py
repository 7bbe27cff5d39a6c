"""Command-line interface.

Every command is a pure function of (workspace, flags, seed): rerunning a
command against an unchanged workspace reproduces byte-identical outputs.
Exit codes: 0 ok, 1 usage error, 2 stage failure, 3 data error.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cloudio import CloudFormatError, write_cloud
from .config import (ConfigError, PipelineConfig, load_config, save_config)
from .directions import DirectionBank, DirectionError
from .discovery import DiscoveryError, PartLatentBank
from .geometry import GeometryError, PointCloud
from .metrics import LEVEL_OBJECT, LEVEL_PART, MetricsError, scs, sls_expectation
from .navigation import EditTerm, NavigationError, edit_object, sweep
from .neural import CheckpointError, ShapeMismatch, TrainingDiverged
from .pipeline import (STAGE_NAMES, StageFailure, build_eval_context,
                       cosine_report, load_classifier, load_manifest,
                       load_object_ae, load_object_latents, load_segment_fn,
                       run_partmix_ablation, run_pipeline, run_stage,
                       run_subclass_ablation, sls_for_bank)
from .synthgen import SpecError, generate_dataset
from .workspace import Workspace, WorkspaceError

DATA_ERRORS = (CloudFormatError, SpecError, GeometryError, DiscoveryError,
               DirectionError, NavigationError, MetricsError, ConfigError,
               CheckpointError, WorkspaceError, ShapeMismatch,
               TrainingDiverged, FileNotFoundError, KeyError)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STAGE = 2
EXIT_DATA = 3


class Context:
    def __init__(self, workspace, config_path, seed, threads):
        self.workspace_root = workspace or os.environ.get("LATNAV_WORKSPACE")
        self.config_path = config_path
        self.seed = seed
        self.threads = threads

    def config(self) -> PipelineConfig:
        cfg = load_config(self.config_path) if self.config_path else PipelineConfig()
        if self.seed is not None:
            cfg = PipelineConfig(**{**cfg.__dict__, "seed": self.seed})
        return cfg

    def open_workspace(self, create: bool = True) -> Workspace:
        if not self.workspace_root:
            raise click.UsageError(
                "no workspace: pass --workspace or set LATNAV_WORKSPACE")
        root = Path(self.workspace_root)
        if (root / "workspace.json").exists():
            return Workspace(root, self.config() if (self.config_path or
                                                     self.seed is not None) else None)
        if not create:
            raise WorkspaceError(f"no workspace at {root}")
        return Workspace(root, self.config())


@click.group(name="partnav")
@click.version_option(__version__)
@click.option("--workspace", type=click.Path(), default=None,
              help="Workspace root (default: $LATNAV_WORKSPACE).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Pipeline config JSON.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--threads", type=int, default=None,
              help="Accepted for interface compatibility; numerics run "
                   "single-threaded apart from BLAS.")
@click.pass_context
def cli(ctx, workspace, config_path, seed, threads):
    ctx.obj = Context(workspace, config_path, seed, threads)


@cli.command("gen-data")
@click.option("--class", "object_class", default="chair", show_default=True)
@click.option("--count", default=600, show_default=True, help="Training objects.")
@click.option("--holdout", default=None, type=int,
              help="Held-out objects (default: count // 4).")
@click.option("--points", default=512, show_default=True)
@click.option("--seed", "gen_seed", default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def gen_data(object_class, count, holdout, points, gen_seed, out_dir):
    """Generate the labeled synthetic dataset with its manifest."""
    if object_class != "chair":
        raise click.UsageError(f"unsupported class {object_class!r}; only 'chair'")
    holdout = count // 4 if holdout is None else holdout
    manifest = generate_dataset(out_dir, gen_seed, count, holdout, points)
    click.echo(f"wrote {len(manifest.entries)} objects under {out_dir}")


def _run_stage(ctx_obj: Context, stage: str) -> None:
    ws = ctx_obj.open_workspace()
    run_stage(ws, stage)


@cli.command("train-ae")
@click.option("--which", type=click.Choice(["part", "object"]), required=True)
@click.pass_obj
def train_ae(obj, which):
    """Train the part or object autoencoder inside the workspace."""
    _run_stage(obj, "train-part-ae" if which == "part" else "train-object-ae")


@cli.command("train-seg")
@click.pass_obj
def train_seg(obj):
    """Train the per-point part segmenter."""
    _run_stage(obj, "train-seg")


@cli.command("train-cls")
@click.pass_obj
def train_cls(obj):
    """Train the binary semantic classifiers (object and part level)."""
    _run_stage(obj, "train-cls")


@cli.command("build-bank")
@click.pass_obj
def build_bank(obj):
    """Encode every (object, part) pair into the part latent bank."""
    _run_stage(obj, "build-bank")


@cli.command("discover")
@click.option("--bank", "bank_path", type=click.Path(exists=True), default=None,
              help="Cluster an existing bank JSON instead of the workspace one.")
@click.option("--part", "part_name", default=None,
              help="Restrict to one part (backrest/seat/legs/armrest).")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_obj
def discover(obj, bank_path, part_name, out_path):
    """Agglomerate part latents into semantic clusters."""
    if bank_path is None:
        _run_stage(obj, "discover")
        return
    from .discovery import ClusteringConfig, agglomerate, save_clusters
    from .synthgen import PartId

    bank = PartLatentBank.load(bank_path)
    cfg = obj.config()
    ccfg = ClusteringConfig(cfg.clustering.k_min, cfg.clustering.k_max,
                            cfg.clustering.min_fraction,
                            cfg.clustering.max_fraction,
                            cfg.clustering.min_size_floor,
                            cfg.clustering.selection_margin)
    parts = [PartId[part_name.upper()]] if part_name else list(PartId)
    per_part = {int(p): agglomerate(bank, int(p), ccfg) for p in parts}
    out_path = out_path or "clusters.json"
    save_clusters(out_path, per_part, bank.checkpoint_hash)
    click.echo(f"wrote {out_path}")


@cli.command("fit-directions")
@click.pass_obj
def fit_directions(obj):
    """Fit the semantic SVM directions in the object latent space."""
    _run_stage(obj, "fit-directions")


@cli.command("baselines")
@click.pass_obj
def baselines(obj):
    """Fit the PCA and weight-factorization baseline direction banks."""
    _run_stage(obj, "baselines")


def _parse_term(text: str) -> EditTerm:
    if ":" not in text:
        raise click.UsageError(f"--term must be part/semantic:alpha, got {text!r}")
    name, alpha = text.rsplit(":", 1)
    try:
        return EditTerm(name, float(alpha))
    except ValueError as exc:
        raise click.UsageError(f"bad alpha in --term {text!r}: {exc}")


@cli.command("edit")
@click.option("--object", "object_id", required=True)
@click.option("--term", "terms", multiple=True, required=True,
              help="part/semantic:alpha (alpha in signed-distance-std units),"
                   " repeatable.")
@click.option("--out", "out_path", type=click.Path(), default="edited.ply",
              show_default=True)
@click.pass_obj
def edit_cmd(obj, object_id, terms, out_path):
    """Translate one object's latent along semantic directions and decode."""
    ws = obj.open_workspace(create=False)
    ck, enc, ep, dec, dp = load_object_ae(ws)
    bank = DirectionBank.load(ws.path("banks/directions.json"))
    latents = load_object_latents(ws)
    if object_id not in latents:
        raise KeyError(f"unknown object id {object_id!r}")
    parsed = [_parse_term(t) for t in terms]
    result = edit_object(latents[object_id], parsed, enc, ep, dec, dp, bank, ck.hash)
    segment_fn, _ = load_segment_fn(ws)
    labels = segment_fn(result.edited_cloud)
    write_cloud(out_path, PointCloud(result.edited_cloud, labels))
    from .metrics import STATUS_OK, sls_single

    sls = {}
    for part in sorted({bank.get(t.direction_id).part for t in parsed}):
        sample = sls_single(result.original_cloud, result.edited_cloud, part,
                            segment_fn)
        sls[str(part)] = sample.value if sample.status == STATUS_OK else sample.status
    click.echo(json.dumps({
        "object_id": object_id,
        "out": str(out_path),
        "applied_terms": [{"direction_id": d, "alpha_absolute": a}
                          for d, a in result.applied_terms],
        "diagnostics": result.diagnostics,
        "sls": sls,
    }, indent=1, sort_keys=True))


@cli.command("sweep")
@click.option("--object", "object_id", required=True)
@click.option("--direction", "direction_id", required=True)
@click.option("--alphas", default="-4,-2,0,2,4", show_default=True,
              help="Comma-separated alpha values in dist-std units.")
@click.option("--out", "out_dir", type=click.Path(), default="sweep", show_default=True)
@click.pass_obj
def sweep_cmd(obj, object_id, direction_id, alphas, out_dir):
    """Decode a latent translated by each alpha along one direction."""
    ws = obj.open_workspace(create=False)
    ck, enc, ep, dec, dp = load_object_ae(ws)
    bank = DirectionBank.load(ws.path("banks/directions.json"))
    latents = load_object_latents(ws)
    if object_id not in latents:
        raise KeyError(f"unknown object id {object_id!r}")
    try:
        alpha_list = [float(a) for a in alphas.split(",") if a.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --alphas: {exc}")
    manifest = load_manifest(ws)
    train_ids = manifest.ids("train")[:64]
    refs = [dec.forward(dp, latents[i][None])[0][0] for i in train_ids]
    steps = sweep(latents[object_id], direction_id, alpha_list, dec, dp, bank, refs)
    os.makedirs(out_dir, exist_ok=True)
    table = []
    for step in steps:
        rel = f"alpha_{step['alpha']:+.2f}.ply".replace("+", "p").replace("-", "m")
        write_cloud(Path(out_dir) / rel, PointCloud(step["cloud"]))
        table.append({"alpha": step["alpha"], "file": rel,
                      "signed_distance": step["signed_distance"],
                      "quality_proxy": step.get("quality_proxy")})
    with open(Path(out_dir) / "sweep.json", "w") as fh:
        json.dump({"object_id": object_id, "direction_id": direction_id,
                   "steps": table}, fh, indent=1, sort_keys=True)
    click.echo(f"wrote {len(steps)} decodes under {out_dir}")


@cli.command("eval-sls")
@click.option("--direction", "direction_id", default=None,
              help="Single direction id (default: all).")
@click.option("--samples", "n_samples", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.pass_obj
def eval_sls(obj, direction_id, n_samples, alpha):
    """Semantic localization scores over seeded held-out probes."""
    ws = obj.open_workspace(create=False)
    cfg = ws.config
    ctx = build_eval_context(ws, cfg, n_samples=n_samples)
    a = alpha if alpha is not None else cfg.evaluation.alpha_sigma
    bank = ctx.bank
    if direction_id is not None:
        one = DirectionBank(bank.space_id, bank.checkpoint_hash,
                            [bank.get(direction_id)])
        result = sls_for_bank(ctx, one, a)
    else:
        result = sls_for_bank(ctx, bank, a)
    with open(ws.path("reports/sls.json"), "w") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
    for did, rep in sorted(result["per_direction"].items()):
        click.echo(f"{did:<24} mean SLS {rep['mean']:8.3f}  (n={rep['n_samples']}, "
                   f"excluded={sum(rep['excluded'].values())})")
    for part, mean in sorted(result["part_means"].items()):
        click.echo(f"part {part:<19} mean SLS {mean:8.3f}")
    click.echo(f"overall mean SLS {result['mean']:.3f}")


@cli.command("eval-scs")
@click.option("--level", type=click.Choice([LEVEL_OBJECT, LEVEL_PART]),
              default=LEVEL_PART, show_default=True)
@click.option("--samples", "n_samples", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.pass_obj
def eval_scs(obj, level, n_samples, alpha):
    """Semantic consistency rates for every fitted direction."""
    ws = obj.open_workspace(create=False)
    cfg = ws.config
    ctx = build_eval_context(ws, cfg, n_samples=n_samples)
    a = alpha if alpha is not None else cfg.evaluation.alpha_sigma
    out = {}
    for d in ctx.bank.directions:
        model, params, ck = load_classifier(ws, d.semantic, level)
        rep = scs(d, level, model, params, ctx.probes, a, ctx.decoder,
                  ctx.dec_params, ctx.bank, ctx.segment_fn, ck.hash)
        out[d.direction_id] = rep.to_dict()
        click.echo(f"{d.direction_id:<24} rate {rep.rate:6.3f}  "
                   f"mean prob {rep.mean_probability:6.3f}")
    with open(ws.path(f"reports/scs_{level}.json"), "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)


@cli.command("analyze-cosine")
@click.pass_obj
def analyze_cosine(obj):
    """Pairwise cosine similarity of the semantic directions."""
    ws = obj.open_workspace(create=False)
    bank = DirectionBank.load(ws.path("banks/directions.json"))
    report = cosine_report(bank)
    with open(ws.path("reports/cosine.json"), "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    pair = report["most_negative_pair"]
    click.echo(f"{len(report['ids'])} directions; most negative pair: "
               f"{pair[0]} vs {pair[1]} ({report['most_negative_value']:.3f})")


@cli.command("ablate-subclass")
@click.pass_obj
def ablate_subclass(obj):
    """Subclass-labels-as-proxy ablation (silhouettes, SLS, flip rates)."""
    ws = obj.open_workspace(create=False)
    report = run_subclass_ablation(ws, ws.config)
    click.echo(json.dumps({
        "silhouettes": report["silhouettes"],
        "subclass_sls_mean": report["subclass_sls_mean"],
        "semantic_sls_mean": report["semantic_sls_mean"],
        "multi_part_flip_rate": {
            "subclass_mean": report["multi_part_flip_rate"]["subclass_mean"],
            "semantic_mean": report["multi_part_flip_rate"]["semantic_mean"],
        }}, indent=1, sort_keys=True))


@cli.command("ablate-partmix")
@click.pass_obj
def ablate_partmix(obj):
    """Retrain the object AE with chimera chairs and compare localization."""
    ws = obj.open_workspace(create=False)
    report = run_partmix_ablation(ws, ws.config)
    click.echo(json.dumps({
        "baseline_sls_mean": report["baseline"]["sls_mean"],
        "partmix_sls_mean": report["partmix"]["sls_mean"],
        "improvement": report["improvement"],
        "improved": report["improved"]}, indent=1, sort_keys=True))


@cli.command("pipeline")
@click.option("--force", is_flag=True, help="Rerun every stage.")
@click.pass_obj
def pipeline_cmd(obj, force):
    """Run all stages with per-stage content-hash resume."""
    ws = obj.open_workspace()
    run_pipeline(ws, force=force, log=click.echo)
    click.echo(f"workspace index hash: {ws.index_hash()}")


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8512, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static frontend directory (default: ./frontend/dist if present).")
@click.pass_obj
def serve_cmd(obj, host, port, ui_dir):
    """Serve the editing API (and the web UI when built) over HTTP."""
    import uvicorn

    from .server import create_app

    ws_root = obj.workspace_root
    if not ws_root:
        raise click.UsageError("no workspace: pass --workspace or set LATNAV_WORKSPACE")
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(ws_root, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return EXIT_USAGE
    except StageFailure as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE
    except DATA_ERRORS as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
