"""End-to-end pipeline: data generation, training, discovery, direction
fitting, classifier training, and evaluation, with per-stage resume via
content hashes. Also hosts the two ablation studies (subclass proxy and
part-mix retraining) that run on demand rather than inside the pipeline.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .directions import (BaselineMatch, DirectionBank, SemanticDirection,
                         SvmConfig, build_examples,
                         closedform_baseline_directions,
                         cosine_similarity_matrix, fit_linear_svm,
                         match_baselines_to_semantics, matched_direction,
                         part_of_semantic, pca_baseline_directions)
from .discovery import (ClusteringConfig, PartLatentBank, SemanticCluster,
                        agglomerate, build_part_latent_bank, load_clusters,
                        name_clusters, part_cloud_for_encoding, save_clusters,
                        silhouette_score)
from .geometry import PointCloud, chamfer_distance
from .metrics import (LEVEL_OBJECT, LEVEL_PART, ProbeSet, build_probe_set,
                      multi_part_flip_rate, prepare_object_input,
                      prepare_part_input, scs, sls_expectation)
from .neural import (Checkpoint, ClassifierArch, DecoderArch, EncoderArch,
                     SegmenterArch, TrainConfig, make_autoencoder_checkpoint,
                     train_autoencoder, train_classifier, train_segmenter)
from .neural.models import Decoder, Encoder
from .neural.train import decode_latents, encode_clouds
from .rng import derive_seed
from .synthgen import (DatasetManifest, PartId, generate_dataset, load_cloud,
                       naive_part_mix, subclass_label)
from .workspace import Workspace, WorkspaceError, doc_sha256


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def semantic_slug(name: str) -> str:
    return name.replace("/", "_")


# ---------------------------------------------------------------------------
# shared loaders


def load_manifest(ws: Workspace) -> DatasetManifest:
    return DatasetManifest.load(ws.data_dir / "manifest.json")


def load_clouds(ws: Workspace, manifest: DatasetManifest, split=None) -> dict:
    return {e.object_id: load_cloud(ws.data_dir, e)
            for e in manifest.entries if split is None or e.split == split}


def train_config_from(section, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=section.epochs, batch_size=section.batch_size, lr=section.lr,
        beta1=section.beta1, beta2=section.beta2, eps=section.eps,
        weight_decay=section.weight_decay, seed=seed,
        latent_noise_sigma=section.latent_noise_sigma, lr_decay=section.lr_decay)


def part_oracle(manifest: DatasetManifest, part: PartId) -> dict[str, str]:
    """object id -> its true attribute of the given part."""
    prefix = part.name.lower() + "/"
    out = {}
    for e in manifest.entries:
        for a in e.attributes:
            if a.startswith(prefix):
                out[e.object_id] = a
    return out


def attribute_vocabulary(manifest: DatasetManifest) -> list[str]:
    names = set()
    for e in manifest.entries:
        names.update(e.attributes)
    return sorted(names)


def load_object_ae(ws: Workspace):
    ck = Checkpoint.load(ws.path("checkpoints/object_ae.json"))
    enc, ep, dec, dp = ck.autoencoder()
    return ck, enc, ep, dec, dp


def load_part_ae(ws: Workspace):
    ck = Checkpoint.load(ws.path("checkpoints/part_ae.json"))
    enc, ep, dec, dp = ck.autoencoder()
    return ck, enc, ep, dec, dp


def load_segment_fn(ws: Workspace):
    ck = Checkpoint.load(ws.path("checkpoints/segmenter.json"))
    model, params = ck.segmenter()

    def segment_fn(cloud: np.ndarray) -> np.ndarray:
        logits, _ = model.forward(params, cloud[None])
        return logits[0].argmax(axis=1)

    return segment_fn, ck


def load_object_latents(ws: Workspace) -> dict[str, np.ndarray]:
    with open(ws.path("banks/object_latents.json")) as fh:
        doc = json.load(fh)
    return {k: np.asarray(v) for k, v in doc["latents"].items()}


def load_classifier(ws: Workspace, semantic: str, level: str):
    path = ws.path(f"checkpoints/classifiers/{semantic_slug(semantic)}.{level}.json")
    ck = Checkpoint.load(path)
    model, params = ck.classifier()
    return model, params, ck


def latents_matrix(latents: dict[str, np.ndarray], ids: list[str]) -> np.ndarray:
    return np.stack([latents[i] for i in ids])


# ---------------------------------------------------------------------------
# stages


def stage_gen_data(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    g = cfg.generation
    manifest = generate_dataset(ws.data_dir, cfg.seed, g.n_train, g.n_holdout,
                                g.n_points, g.style_weights, g.cloud_format)
    return ["data/manifest.json"] + [f"data/{e.file}" for e in manifest.entries]


def _part_training_clouds(ws, cfg, manifest):
    clouds = load_clouds(ws, manifest, split="train")
    out = []
    for e in manifest.entries:
        if e.split != "train":
            continue
        for part in PartId:
            out.append(part_cloud_for_encoding(
                clouds[e.object_id], int(part), cfg.generation.part_points,
                derive_seed(cfg.seed, "bank", e.object_id, int(part))))
    return out


def stage_train_part_ae(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    part_clouds = _part_training_clouds(ws, cfg, manifest)
    enc_arch = EncoderArch(cfg.part_ae.point_dims, cfg.part_ae.latent_dim,
                           cfg.generation.part_points)
    dec_arch = DecoderArch(cfg.part_ae.latent_dim, cfg.part_ae.decoder_hidden,
                           cfg.generation.part_points)
    tc = train_config_from(cfg.part_ae.train, derive_seed(cfg.seed, "part-ae"))
    ep, dp, curve = train_autoencoder(part_clouds, tc, enc_arch, dec_arch)
    ck = make_autoencoder_checkpoint(ep, dp, enc_arch, dec_arch, tc.to_dict(),
                                     tc.seed, curve, {"role": "part"})
    ck.save(ws.path("checkpoints/part_ae.json"))
    return ["checkpoints/part_ae.json"]


def stage_train_object_ae(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    clouds = load_clouds(ws, manifest)
    train_ids = manifest.ids("train")
    hold_ids = manifest.ids("holdout")
    enc_arch = EncoderArch(cfg.object_ae.point_dims, cfg.object_ae.latent_dim,
                           cfg.generation.n_points)
    dec_arch = DecoderArch(cfg.object_ae.latent_dim, cfg.object_ae.decoder_hidden,
                           cfg.generation.n_points)
    tc = train_config_from(cfg.object_ae.train, derive_seed(cfg.seed, "object-ae"))
    train_clouds = [clouds[i].points for i in train_ids]
    ep, dp, curve = train_autoencoder(train_clouds, tc, enc_arch, dec_arch)
    enc_m, dec_m = Encoder(enc_arch), Decoder(dec_arch)
    hold_clouds = [clouds[i].points for i in hold_ids]
    zh = encode_clouds(enc_m, ep, hold_clouds)
    rec = decode_latents(dec_m, dp, zh)
    cds = [chamfer_distance(rec[i], hold_clouds[i]) for i in range(len(hold_clouds))]
    metadata = {
        "role": "object",
        "heldout_chamfer_mean": float(np.mean(cds)),
        "heldout_chamfer_frac_below_0.01": float(np.mean(np.asarray(cds) < 0.01)),
    }
    ck = make_autoencoder_checkpoint(ep, dp, enc_arch, dec_arch, tc.to_dict(),
                                     tc.seed, curve, metadata)
    ck.save(ws.path("checkpoints/object_ae.json"))
    return ["checkpoints/object_ae.json"]


def stage_train_segmenter(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    clouds = load_clouds(ws, manifest)
    arch = SegmenterArch(cfg.segmenter.point_dims, cfg.segmenter.head_dims,
                         len(PartId), cfg.generation.n_points)
    tc = train_config_from(cfg.segmenter.train, derive_seed(cfg.seed, "segmenter"))
    train_ids = manifest.ids("train")
    hold_ids = manifest.ids("holdout")
    params, heldout_acc, curve = train_segmenter(
        [clouds[i].points for i in train_ids],
        [clouds[i].labels for i in train_ids],
        tc, arch,
        [clouds[i].points for i in hold_ids],
        [clouds[i].labels for i in hold_ids])
    ck = Checkpoint(kind="segmenter", arch={"segmenter": arch.to_dict()},
                    params=params, train_config=tc.to_dict(), seed=tc.seed,
                    loss_curve=curve,
                    metadata={"heldout_accuracy": float(heldout_acc)})
    ck.save(ws.path("checkpoints/segmenter.json"))
    return ["checkpoints/segmenter.json"]


def stage_build_bank(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    ck, enc, ep, _, _ = load_part_ae(ws)
    bank = build_part_latent_bank(manifest, ws.data_dir, enc, ep, ck.hash,
                                  cfg.generation.part_points, cfg.seed,
                                  split="train")
    bank.save(ws.path("banks/part_bank.json"))
    return ["banks/part_bank.json"]


def stage_discover(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    bank = PartLatentBank.load(ws.path("banks/part_bank.json"))
    ccfg = ClusteringConfig(cfg.clustering.k_min, cfg.clustering.k_max,
                            cfg.clustering.min_fraction,
                            cfg.clustering.max_fraction,
                            cfg.clustering.min_size_floor,
                            cfg.clustering.selection_margin)
    subclass = {e.object_id: subclass_label(e.spec) for e in manifest.entries}
    per_part = {}
    for part in PartId:
        clusters, diag = agglomerate(bank, int(part), ccfg)
        name_clusters(clusters, part_oracle(manifest, part))
        ids, mat = bank.part_matrix(int(part))
        labels = sorted({subclass[i] for i in ids})
        codes = np.array([labels.index(subclass[i]) for i in ids])
        diag["subclass_silhouette"] = float(silhouette_score(mat, codes))
        per_part[int(part)] = (clusters, diag)
    save_clusters(ws.path("banks/clusters.json"), per_part, bank.checkpoint_hash)
    return ["banks/clusters.json"]


def stage_encode_objects(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    clouds = load_clouds(ws, manifest)
    ck, enc, ep, _, _ = load_object_ae(ws)
    ids = manifest.ids()
    z = encode_clouds(enc, ep, [clouds[i].points for i in ids])
    doc = {
        "format_version": 1,
        "checkpoint_hash": ck.hash,
        "latents": {i: [float(x) for x in z[k]] for k, i in enumerate(ids)},
    }
    with open(ws.path("banks/object_latents.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
    return ["banks/object_latents.json"]


def fit_semantic_directions(clusters_per_part: dict, object_latents: dict,
                            train_ids: list[str], svm_cfg: SvmConfig, seed: int,
                            space_id: str, checkpoint_hash: str) -> DirectionBank:
    train_lat = {i: object_latents[i] for i in train_ids}
    population = latents_matrix(object_latents, train_ids)
    bank = DirectionBank(space_id=space_id, checkpoint_hash=checkpoint_hash,
                         metadata={"svm": svm_cfg.to_dict()})
    for part in sorted(clusters_per_part):
        clusters, _ = clusters_per_part[part]
        for cl in clusters:
            examples = build_examples(cl, train_lat, derive_seed(seed, "svm-split"),
                                      svm_cfg.holdout_fraction)
            direction = fit_linear_svm(examples, svm_cfg, population=population)
            # the id is the unique cluster name; the semantic is the oracle
            # attribute, which is what classifiers are keyed by
            direction.direction_id = cl.name
            direction.semantic = cl.majority_label or cl.name
            bank.directions.append(direction)
    return bank


def stage_fit_directions(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    clusters_per_part = load_clusters(ws.path("banks/clusters.json"))
    object_latents = load_object_latents(ws)
    ck, *_ = load_object_ae(ws)
    svm_cfg = SvmConfig(cfg.svm.lambda_reg, cfg.svm.epochs, cfg.svm.lr,
                        cfg.svm.holdout_fraction)
    bank = fit_semantic_directions(clusters_per_part, object_latents,
                                   manifest.ids("train"), svm_cfg, cfg.seed,
                                   "object-ae", ck.hash)
    bank.save(ws.path("banks/directions.json"))
    return ["banks/directions.json"]


def stage_baselines(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    object_latents = load_object_latents(ws)
    ck, _, _, _, dec_params = load_object_ae(ws)
    train = latents_matrix(object_latents, manifest.ids("train"))
    m = min(cfg.evaluation.baseline_components, train.shape[1])
    pca = pca_baseline_directions(train, m, "object-ae", ck.hash)
    pca.save(ws.path("banks/baseline_pca.json"))
    wf = closedform_baseline_directions(dec_params["fc0.W"], m, train,
                                        "object-ae", ck.hash)
    wf.save(ws.path("banks/baseline_closedform.json"))
    return ["banks/baseline_pca.json", "banks/baseline_closedform.json"]


def classifier_training_sets(ws: Workspace, cfg: PipelineConfig,
                             manifest: DatasetManifest, semantic: str,
                             level: str, segment_fn=None,
                             reconstructions: dict | None = None):
    """(positives, negatives) input clouds for one semantic classifier.
    Object level uses resampled whole clouds; part level uses ground-truth
    part crops. Reconstructions, when given, are added with the same label
    as their source object so classifiers stay calibrated on decoder
    output."""
    clouds = load_clouds(ws, manifest, split="train")
    part = part_of_semantic(semantic)
    n_in = cfg.classifier.n_points
    pos, neg = [], []
    for e in manifest.entries:
        if e.split != "train":
            continue
        sub_seed = derive_seed(cfg.seed, "cls-input", semantic, level, e.object_id)
        cloud = clouds[e.object_id]
        items = [(cloud.points, cloud.labels)]
        if reconstructions is not None:
            rec = reconstructions[e.object_id]
            rec_labels = segment_fn(rec) if level == LEVEL_PART else None
            items.append((rec, rec_labels))
        for pts, labels in items:
            if level == LEVEL_OBJECT:
                x = prepare_object_input(pts, n_in, sub_seed)
            else:
                x = prepare_part_input(pts, labels, part, n_in, sub_seed)
            (pos if semantic in e.attributes else neg).append(x)
    return pos, neg


def stage_train_classifiers(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    manifest = load_manifest(ws)
    (ws.path("checkpoints/classifiers")).mkdir(exist_ok=True)
    semantics = attribute_vocabulary(manifest)
    arch = ClassifierArch(cfg.classifier.point_dims, cfg.classifier.n_points)
    reconstructions = None
    segment_fn = None
    if cfg.classifier.augment_with_reconstructions:
        _, enc, ep, dec, dp = load_object_ae(ws)
        clouds = load_clouds(ws, manifest, split="train")
        ids = manifest.ids("train")
        z = encode_clouds(enc, ep, [clouds[i].points for i in ids])
        rec = decode_latents(dec, dp, z)
        reconstructions = {i: rec[k] for k, i in enumerate(ids)}
        segment_fn, _ = load_segment_fn(ws)
    outputs = []
    for semantic in semantics:
        for level in (LEVEL_OBJECT, LEVEL_PART):
            pos, neg = classifier_training_sets(ws, cfg, manifest, semantic,
                                                level, segment_fn, reconstructions)
            tc = train_config_from(cfg.classifier.train,
                                   derive_seed(cfg.seed, "cls", semantic, level))
            params, heldout_acc, curve = train_classifier(pos, neg, tc, arch)
            ck = Checkpoint(kind="classifier",
                            arch={"classifier": arch.to_dict()},
                            params=params, train_config=tc.to_dict(), seed=tc.seed,
                            loss_curve=curve,
                            metadata={"semantic": semantic, "level": level,
                                      "heldout_accuracy": float(heldout_acc),
                                      "n_pos": len(pos), "n_neg": len(neg)})
            rel = f"checkpoints/classifiers/{semantic_slug(semantic)}.{level}.json"
            ck.save(ws.path(rel))
            outputs.append(rel)
    return outputs


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalContext:
    ws: Workspace
    cfg: PipelineConfig
    manifest: DatasetManifest
    decoder: object
    dec_params: dict
    checkpoint_hash: str
    segment_fn: object
    segmenter_id: str
    bank: DirectionBank
    probes: ProbeSet
    holdout_latents: np.ndarray


def build_eval_context(ws: Workspace, cfg: PipelineConfig,
                       bank: DirectionBank | None = None,
                       n_samples: int | None = None) -> EvalContext:
    manifest = load_manifest(ws)
    ck, enc, ep, dec, dp = load_object_ae(ws)
    segment_fn, seg_ck = load_segment_fn(ws)
    if bank is None:
        bank = DirectionBank.load(ws.path("banks/directions.json"))
    object_latents = load_object_latents(ws)
    hold = latents_matrix(object_latents, manifest.ids("holdout"))
    n = n_samples if n_samples is not None else cfg.evaluation.n_samples
    probes = build_probe_set(hold, n, derive_seed(cfg.seed, "eval-probes"),
                             dec, dp, segment_fn)
    return EvalContext(ws, cfg, manifest, dec, dp, ck.hash, segment_fn,
                       seg_ck.hash, bank, probes, hold)


def sls_for_bank(ctx: EvalContext, bank: DirectionBank, alpha: float) -> dict:
    reports = {}
    for d in bank.directions:
        reports[d.direction_id] = sls_expectation(
            d, ctx.probes, alpha, ctx.decoder, ctx.dec_params, bank,
            ctx.segment_fn, ctx.segmenter_id)
    part_means = {}
    for part in PartId:
        vals = [r.mean for r in reports.values()
                if r.part == int(part) and np.isfinite(r.mean)]
        if vals:
            part_means[part.name.lower()] = float(np.mean(vals))
    finite = [r.mean for r in reports.values() if np.isfinite(r.mean)]
    return {
        "per_direction": {k: r.to_dict() for k, r in reports.items()},
        "part_means": part_means,
        "mean": float(np.mean(finite)) if finite else float("nan"),
    }


def scs_for_bank(ctx: EvalContext, bank: DirectionBank, alpha: float,
                 cross: bool = False) -> dict:
    out = {"object": {}, "part": {}, "cross_part": {}}
    for d in bank.directions:
        for level, key in ((LEVEL_OBJECT, "object"), (LEVEL_PART, "part")):
            model, params, ck = load_classifier(ctx.ws, d.semantic, level)
            rep = scs(d, level, model, params, ctx.probes, alpha, ctx.decoder,
                      ctx.dec_params, bank, ctx.segment_fn, ck.hash)
            out[key][d.direction_id] = rep.to_dict()
        if cross:
            siblings = [o for o in bank.directions
                        if o.part == d.part and o.semantic != d.semantic]
            row = {}
            for sib in siblings:
                model, params, ck = load_classifier(ctx.ws, sib.semantic, LEVEL_PART)
                rep = scs(d, LEVEL_PART, model, params, ctx.probes, alpha,
                          ctx.decoder, ctx.dec_params, bank, ctx.segment_fn,
                          ck.hash, crop_part=d.part)
                row[sib.semantic] = rep.rate
            out["cross_part"][d.direction_id] = row
    return out


def make_match_eval_fn(ctx: EvalContext, baseline: DirectionBank):
    """Part-level SCS over a small probe set, used to pick each baseline's
    best (direction, sign) per semantic."""
    n = ctx.cfg.evaluation.match_probes
    match_probes = ProbeSet(ctx.probes.latents[:n], ctx.probes.original_clouds[:n],
                            ctx.probes.original_labels[:n], ctx.probes.seed)

    def eval_fn(semantic: str, direction, sign: int) -> float:
        model, params, _ = load_classifier(ctx.ws, semantic, LEVEL_PART)
        probe_dir = matched_direction(
            baseline,
            BaselineMatch(semantic, direction.direction_id, sign, 0.0),
            part_of_semantic(semantic))
        tmp_bank = DirectionBank(baseline.space_id, baseline.checkpoint_hash,
                                 [probe_dir])
        rep = scs(probe_dir, LEVEL_PART, model, params, match_probes,
                  ctx.cfg.evaluation.alpha_sigma, ctx.decoder, ctx.dec_params,
                  tmp_bank, ctx.segment_fn)
        return 0.0 if not np.isfinite(rep.rate) else rep.rate

    return eval_fn


def evaluate_baseline(ctx: EvalContext, baseline: DirectionBank,
                      semantics: list[str], alpha: float) -> dict:
    matches = match_baselines_to_semantics(baseline, semantics,
                                           make_match_eval_fn(ctx, baseline))
    matched = DirectionBank(baseline.space_id, baseline.checkpoint_hash, [
        matched_direction(baseline, m, part_of_semantic(s))
        for s, m in matches.items()
    ])
    sls = sls_for_bank(ctx, matched, alpha)
    scs_part = {}
    for d in matched.directions:
        model, params, ck = load_classifier(ctx.ws, d.semantic, LEVEL_PART)
        rep = scs(d, LEVEL_PART, model, params, ctx.probes, alpha, ctx.decoder,
                  ctx.dec_params, matched, ctx.segment_fn, ck.hash)
        scs_part[d.semantic] = rep.to_dict()
    return {
        "matches": {s: {"direction_id": m.direction_id, "sign": m.sign,
                        "score": m.score} for s, m in matches.items()},
        "sls": sls,
        "scs_part": scs_part,
    }


def negative_attribute_check(ctx: EvalContext, semantic: str, alpha: float,
                             n_probes: int) -> dict:
    direction = ctx.bank.find_semantic(semantic)
    model, params, ck = load_classifier(ctx.ws, semantic, LEVEL_OBJECT)
    n = min(n_probes, len(ctx.probes.latents))
    sub = ProbeSet(ctx.probes.latents[:n], ctx.probes.original_clouds[:n],
                   ctx.probes.original_labels[:n], ctx.probes.seed)
    pos = scs(direction, LEVEL_OBJECT, model, params, sub, alpha, ctx.decoder,
              ctx.dec_params, ctx.bank, ctx.segment_fn, ck.hash)
    neg = scs(direction, LEVEL_OBJECT, model, params, sub, -alpha, ctx.decoder,
              ctx.dec_params, ctx.bank, ctx.segment_fn, ck.hash)
    return {"semantic": semantic, "alpha": alpha, "rate_positive": pos.rate,
            "rate_negative": neg.rate, "separation": pos.rate - neg.rate,
            "n_probes": n}


def cosine_report(bank: DirectionBank) -> dict:
    m = cosine_similarity_matrix(bank)
    ids = bank.ids()
    most_negative = None
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if most_negative is None or m[i, j] < most_negative[2]:
                most_negative = (ids[i], ids[j], float(m[i, j]))
    return {
        "ids": ids,
        "matrix": [[float(v) for v in row] for row in m],
        "most_negative_pair": list(most_negative[:2]),
        "most_negative_value": most_negative[2],
    }


def stage_evaluate(ws: Workspace, cfg: PipelineConfig) -> list[str]:
    ctx = build_eval_context(ws, cfg)
    alpha = cfg.evaluation.alpha_sigma
    semantics = sorted({d.semantic for d in ctx.bank.directions})
    report = {
        "alpha_sigma": alpha,
        "n_samples": cfg.evaluation.n_samples,
        "sls": sls_for_bank(ctx, ctx.bank, alpha),
        "scs": scs_for_bank(ctx, ctx.bank, alpha, cross=True),
        "cosine": cosine_report(ctx.bank),
        "baselines": {
            "pca": evaluate_baseline(
                ctx, DirectionBank.load(ws.path("banks/baseline_pca.json")),
                semantics, alpha),
            "closedform": evaluate_baseline(
                ctx, DirectionBank.load(ws.path("banks/baseline_closedform.json")),
                semantics, alpha),
        },
    }
    if "armrest/connected" in semantics:
        report["negative_attribute"] = negative_attribute_check(
            ctx, "armrest/connected", alpha, min(100, cfg.evaluation.n_samples))
    with open(ws.path("reports/evaluation.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
    with open(ws.path("reports/tables.txt"), "w") as fh:
        fh.write(render_tables(report))
    return ["reports/evaluation.json", "reports/tables.txt"]


def render_tables(report: dict) -> str:
    """Aligned-column text tables: SLS per part per method, SCS per semantic
    per method and level."""
    lines = []
    parts = [p.name.lower() for p in PartId]
    rows = [("semantic_svm", report["sls"])]
    for name in ("pca", "closedform"):
        rows.append((name, report["baselines"][name]["sls"]))
    lines.append("Semantic localization (mean SLS, alpha=%.1f sigma)"
                 % report["alpha_sigma"])
    header = f"{'method':<14}" + "".join(f"{p:>12}" for p in parts) + f"{'average':>12}"
    lines.append(header)
    for name, sls in rows:
        cells = [sls["part_means"].get(p, float("nan")) for p in parts]
        lines.append(f"{name:<14}" + "".join(f"{c:>12.3f}" for c in cells)
                     + f"{sls['mean']:>12.3f}")
    lines.append("")
    lines.append("Semantic consistency (positive rate, part level)")
    semantics = sorted(report["scs"]["part"])
    lines.append(f"{'semantic':<22}{'semantic_svm':>14}{'pca':>10}{'closedform':>12}")
    for s in semantics:
        ours = report["scs"]["part"][s]["rate"]
        pca = report["baselines"]["pca"]["scs_part"].get(s, {}).get("rate", float("nan"))
        cf = report["baselines"]["closedform"]["scs_part"].get(s, {}).get("rate", float("nan"))
        lines.append(f"{s:<22}{ours:>14.3f}{pca:>10.3f}{cf:>12.3f}")
    lines.append("")
    lines.append("Object-level consistency")
    for s in sorted(report["scs"]["object"]):
        lines.append(f"{s:<22}{report['scs']['object'][s]['rate']:>14.3f}")
    pair = report["cosine"]["most_negative_pair"]
    lines.append("")
    lines.append("Most negative direction cosine: %s vs %s (%.3f)"
                 % (pair[0], pair[1], report["cosine"]["most_negative_value"]))
    if "negative_attribute" in report:
        na = report["negative_attribute"]
        lines.append("Negative-attribute check %s: +%.1fs rate %.3f, -%.1fs rate %.3f"
                     % (na["semantic"], na["alpha"], na["rate_positive"],
                        na["alpha"], na["rate_negative"]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# pipeline driver

STAGES = [
    ("gen-data", stage_gen_data),
    ("train-part-ae", stage_train_part_ae),
    ("train-object-ae", stage_train_object_ae),
    ("train-seg", stage_train_segmenter),
    ("build-bank", stage_build_bank),
    ("discover", stage_discover),
    ("encode-objects", stage_encode_objects),
    ("fit-directions", stage_fit_directions),
    ("baselines", stage_baselines),
    ("train-cls", stage_train_classifiers),
    ("evaluate", stage_evaluate),
]

STAGE_NAMES = [name for name, _ in STAGES]


def run_pipeline(ws: Workspace, force: bool = False, log=print,
                 only: list[str] | None = None) -> None:
    """Run stages in order, skipping any whose recorded inputs and outputs
    are intact. Failure halts with the stage name; completed stages stay."""
    cfg = ws.config
    chain = doc_sha256(cfg.to_dict())
    for name, fn in STAGES:
        inputs_hash = doc_sha256({"config": chain, "stage": name})
        if only is not None and name not in only:
            chain = doc_sha256({"chain": chain, "stage": name,
                                "outputs": ws.index["stages"].get(name, {}).get("outputs", {})})
            continue
        if not force and ws.stage_is_current(name, inputs_hash):
            log(f"[pipeline] {name}: up to date, skipping")
        else:
            log(f"[pipeline] {name}: running")
            try:
                outputs = fn(ws, cfg)
            except Exception as exc:
                ws.save_index()
                raise StageFailure(name, exc) from exc
            ws.record_stage(name, inputs_hash, outputs)
            log(f"[pipeline] {name}: done ({len(ws.index['stages'][name]['outputs'])} outputs)")
        chain = doc_sha256({"chain": chain, "stage": name,
                            "outputs": ws.index["stages"][name]["outputs"]})


def run_stage(ws: Workspace, name: str) -> None:
    run_pipeline(ws, only=[name])


# ---------------------------------------------------------------------------
# ablation studies (run on demand, not part of the pipeline chain)


def run_subclass_ablation(ws: Workspace, cfg: PipelineConfig) -> dict:
    """Compare discovered part semantics against object-level subclass
    labels used as a proxy: silhouette sign pattern in the part latent
    space, localization of the resulting directions, and how often each
    kind of edit flips classifiers in several parts at once."""
    manifest = load_manifest(ws)
    clusters_per_part = load_clusters(ws.path("banks/clusters.json"))
    object_latents = load_object_latents(ws)
    train_ids = manifest.ids("train")
    train_lat = {i: object_latents[i] for i in train_ids}
    population = latents_matrix(object_latents, train_ids)
    semantic_bank = DirectionBank.load(ws.path("banks/directions.json"))
    ctx = build_eval_context(ws, cfg)
    alpha = cfg.evaluation.alpha_sigma

    silhouettes = {}
    for part in PartId:
        _, diag = clusters_per_part[int(part)]
        silhouettes[part.name.lower()] = {
            "discovered": diag["silhouette"],
            "subclass_proxy": diag["subclass_silhouette"],
        }

    subclass_of = {e.object_id: subclass_label(e.spec) for e in manifest.entries
                   if e.split == "train"}
    counts: dict[str, list[str]] = {}
    for oid, lab in subclass_of.items():
        counts.setdefault(lab, []).append(oid)
    svm_cfg = SvmConfig(cfg.svm.lambda_reg, cfg.svm.epochs, cfg.svm.lr,
                        cfg.svm.holdout_fraction)
    subclass_bank = DirectionBank("object-ae", semantic_bank.checkpoint_hash)
    for lab in sorted(counts):
        members = counts[lab]
        if len(members) < cfg.ablation.subclass_min_count:
            continue
        if len(members) == len(train_ids):
            continue
        cluster = SemanticCluster(part=-1, cluster_id=len(subclass_bank.directions),
                                  member_ids=sorted(members),
                                  centroid=np.zeros(population.shape[1]),
                                  size_fraction=len(members) / len(train_ids),
                                  name=f"subclass/{lab}")
        examples = build_examples(cluster, train_lat,
                                  derive_seed(cfg.seed, "subclass-svm"),
                                  svm_cfg.holdout_fraction)
        subclass_bank.directions.append(
            fit_linear_svm(examples, svm_cfg, population=population,
                           provenance="subclass_proxy"))

    def best_part_sls(bank: DirectionBank, direction) -> float:
        """Most favorable per-part SLS for a direction whose intended part
        is ambiguous (a subclass implies semantics in several parts)."""
        means = []
        for part in PartId:
            retargeted = SemanticDirection(
                direction.direction_id, int(part), direction.semantic,
                direction.normal, direction.bias, direction.train_accuracy,
                direction.heldout_accuracy, direction.dist_std,
                direction.provenance)
            report = sls_expectation(retargeted, ctx.probes, alpha, ctx.decoder,
                                     ctx.dec_params, bank, ctx.segment_fn,
                                     ctx.segmenter_id)
            if np.isfinite(report.mean):
                means.append(report.mean)
        return max(means) if means else float("nan")

    subclass_sls = {d.direction_id: best_part_sls(subclass_bank, d)
                    for d in subclass_bank.directions}
    semantic_sls = sls_for_bank(ctx, semantic_bank, alpha)

    part_classifiers = {}
    for d in semantic_bank.directions:
        model, params, _ = load_classifier(ws, d.semantic, LEVEL_OBJECT)
        part_classifiers[d.semantic] = (d.part, model, params)
    n_flip = cfg.evaluation.flip_samples
    flips_subclass = {
        d.direction_id: multi_part_flip_rate(
            d, ctx.holdout_latents, alpha, ctx.decoder, ctx.dec_params,
            subclass_bank, part_classifiers, n_flip,
            derive_seed(cfg.seed, "flips"))
        for d in subclass_bank.directions}
    flips_semantic = {
        d.direction_id: multi_part_flip_rate(
            d, ctx.holdout_latents, alpha, ctx.decoder, ctx.dec_params,
            semantic_bank, part_classifiers, n_flip,
            derive_seed(cfg.seed, "flips"))
        for d in semantic_bank.directions}

    sub_vals = [v for v in subclass_sls.values() if np.isfinite(v)]
    report = {
        "silhouettes": silhouettes,
        "subclass_directions": subclass_bank.ids(),
        "subclass_sls_best_part": subclass_sls,
        "subclass_sls_mean": float(np.mean(sub_vals)) if sub_vals else float("nan"),
        "semantic_sls_mean": semantic_sls["mean"],
        "multi_part_flip_rate": {
            "subclass_mean": float(np.mean(list(flips_subclass.values())))
            if flips_subclass else float("nan"),
            "semantic_mean": float(np.mean(list(flips_semantic.values()))),
            "subclass": flips_subclass,
            "semantic": flips_semantic,
        },
    }
    with open(ws.path("reports/ablate_subclass.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
    return report


def run_partmix_ablation(ws: Workspace, cfg: PipelineConfig) -> dict:
    """Retrain the object autoencoder with chimera chairs mixed in, refit
    the semantic directions in the new latent space, and compare mean SLS
    against the baseline checkpoint. Reports the direction of change."""
    from .geometry import normalize_unit_sphere as _norm

    manifest = load_manifest(ws)
    train_entries = [e for e in manifest.entries if e.split == "train"]
    train_manifest = DatasetManifest(
        seed=manifest.seed, object_class=manifest.object_class,
        n_points=manifest.n_points, style_weights=manifest.style_weights,
        thresholds=manifest.thresholds, entries=train_entries)
    mixed, records = naive_part_mix(train_manifest, ws.data_dir,
                                    cfg.ablation.n_mixed,
                                    derive_seed(cfg.seed, "part-mix"))
    clouds = load_clouds(ws, manifest)
    train_ids = manifest.ids("train")
    train_clouds = [clouds[i].points for i in train_ids]
    mixed_clouds = [_norm(c)[0].points for c in mixed]

    enc_arch = EncoderArch(cfg.object_ae.point_dims, cfg.object_ae.latent_dim,
                           cfg.generation.n_points)
    dec_arch = DecoderArch(cfg.object_ae.latent_dim, cfg.object_ae.decoder_hidden,
                           cfg.generation.n_points)
    tc = train_config_from(cfg.object_ae.train,
                           derive_seed(cfg.seed, "object-ae-partmix"))
    ep, dp, curve = train_autoencoder(train_clouds + mixed_clouds, tc,
                                      enc_arch, dec_arch)
    ck = make_autoencoder_checkpoint(
        ep, dp, enc_arch, dec_arch, tc.to_dict(), tc.seed, curve,
        {"role": "object-partmix", "n_mixed": len(mixed_clouds)})
    ck.save(ws.path("checkpoints/object_ae_partmix.json"))

    enc_m, dec_m = Encoder(enc_arch), Decoder(dec_arch)
    all_ids = manifest.ids()
    z_all = encode_clouds(enc_m, ep, [clouds[i].points for i in all_ids])
    latents2 = {i: z_all[k] for k, i in enumerate(all_ids)}

    clusters_per_part = load_clusters(ws.path("banks/clusters.json"))
    svm_cfg = SvmConfig(cfg.svm.lambda_reg, cfg.svm.epochs, cfg.svm.lr,
                        cfg.svm.holdout_fraction)
    bank2 = fit_semantic_directions(clusters_per_part, latents2, train_ids,
                                    svm_cfg, derive_seed(cfg.seed, "partmix-svm"),
                                    "object-ae-partmix", ck.hash)
    bank2.save(ws.path("banks/directions_partmix.json"))

    segment_fn, seg_ck = load_segment_fn(ws)
    hold2 = latents_matrix(latents2, manifest.ids("holdout"))
    probes2 = build_probe_set(hold2, cfg.evaluation.n_samples,
                              derive_seed(cfg.seed, "eval-probes"),
                              dec_m, dp, segment_fn)
    ctx2 = EvalContext(ws, cfg, manifest, dec_m, dp, ck.hash, segment_fn,
                       seg_ck.hash, bank2, probes2, hold2)
    sls_mixed = sls_for_bank(ctx2, bank2, cfg.evaluation.alpha_sigma)

    ctx1 = build_eval_context(ws, cfg)
    sls_base = sls_for_bank(ctx1, ctx1.bank, cfg.evaluation.alpha_sigma)

    report = {
        "n_mixed": len(mixed_clouds),
        "mix_records": records,
        "baseline": {"checkpoint": ctx1.checkpoint_hash,
                     "sls_mean": sls_base["mean"],
                     "sls_part_means": sls_base["part_means"]},
        "partmix": {"checkpoint": ck.hash,
                    "sls_mean": sls_mixed["mean"],
                    "sls_part_means": sls_mixed["part_means"]},
        "improvement": float(sls_mixed["mean"] - sls_base["mean"]),
        "improved": bool(sls_mixed["mean"] > sls_base["mean"]),
    }
    with open(ws.path("reports/ablate_partmix.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
    return report
