"""Staged pipeline with cached artifacts and a content-hash manifest.

Stages run in dependency order; each writes its artifacts under
``out_dir/<stage>/`` and records their hashes in ``out_dir/manifest.json``.
A stage refuses to run while an upstream stage's artifacts are missing or
stale, naming the stage to run first. A single top-level seed determines
every stage's seed, so identical configs reproduce identical manifests.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import clustering, embeddings, fusion, lda, projection, reporting, tfidf
from .corpus import Corpus, corpus_stats, load_corpus, save_corpus
from .preprocess import CleanConfig, CleanDoc, load_termlist, preprocess_corpus
from .util import derive_seed, dump_json, sha256_file, write_csv

logger = logging.getLogger(__name__)

STAGES = ["ingest", "preprocess", "vectorize", "lda", "embed",
          "fuse", "cluster", "project", "report"]

DEPENDENCIES = {
    "ingest": [],
    "preprocess": ["ingest"],
    "vectorize": ["preprocess"],
    "lda": ["vectorize"],
    "embed": ["ingest"],
    "fuse": ["lda", "embed"],
    "cluster": ["vectorize", "embed", "fuse"],
    "project": ["fuse", "cluster"],
    "report": ["ingest", "preprocess", "fuse", "cluster", "project"],
}


class ConfigError(ValueError):
    """Configuration is invalid; maps to exit code 2."""


class StageError(RuntimeError):
    """A stage failed at run time; maps to exit code 1."""


@dataclass
class TfidfSettings:
    max_df: float = 0.8
    min_df: float = 0.11
    median_cut: bool = True


@dataclass
class LdaSettings:
    k: int | None = None  # None -> clustering k
    alpha: float | None = None  # None -> 50 / k
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 500


@dataclass
class EmbeddingSettings:
    mode: str = "hash"  # "hash" or "file"
    path: str = ""
    dim: int = 256


@dataclass
class FusionSettings:
    gamma: float = 15.0
    latent: int = 32
    hidden: int = 128
    epochs: int = 200
    learning_rate: float = 1e-3


@dataclass
class ClusteringSettings:
    k: int = 8
    restarts: int = 16


@dataclass
class ProjectionSettings:
    method: str = "neighbor-embed"  # or "pca"
    n_neighbors: int = 15
    min_dist: float = 0.1
    epochs: int = 200


@dataclass
class PipelineConfig:
    corpus: str = ""
    out_dir: str = "out"
    seed: int = 0
    threads: int = 1
    stoplist: str = ""  # empty -> bundled default
    exclusion: str = ""  # empty -> bundled default
    tfidf: TfidfSettings = field(default_factory=TfidfSettings)
    lda: LdaSettings = field(default_factory=LdaSettings)
    embeddings: EmbeddingSettings = field(default_factory=EmbeddingSettings)
    fusion: FusionSettings = field(default_factory=FusionSettings)
    clustering: ClusteringSettings = field(default_factory=ClusteringSettings)
    projection: ProjectionSettings = field(default_factory=ProjectionSettings)

    @property
    def lda_k(self) -> int:
        return self.lda.k if self.lda.k is not None else self.clustering.k

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def snapshot(self) -> dict:
        """Analytic parameters only; environment paths are dropped so reports
        from relocated runs stay byte-identical."""
        snap = asdict(self)
        for key in ("corpus", "out_dir", "stoplist", "exclusion"):
            snap.pop(key, None)
        snap["embeddings"].pop("path", None)
        return snap

    def validate(self, check_files: bool = True) -> None:
        if not self.corpus:
            raise ConfigError("corpus: path is required")
        if check_files and not Path(self.corpus).exists():
            raise ConfigError(f"corpus: file not found: {self.corpus}")
        for name in ("stoplist", "exclusion"):
            p = getattr(self, name)
            if p and check_files and not Path(p).exists():
                raise ConfigError(f"{name}: file not found: {p}")
        if not 0 <= self.tfidf.min_df < self.tfidf.max_df <= 1:
            raise ConfigError(
                f"tfidf.min_df and tfidf.max_df: require 0 <= min_df < max_df <= 1, "
                f"got min_df={self.tfidf.min_df}, max_df={self.tfidf.max_df}"
            )
        if self.lda.k is not None and self.lda.k < 1:
            raise ConfigError(f"lda.k: must be >= 1, got {self.lda.k}")
        if self.lda.alpha is not None and self.lda.alpha <= 0:
            raise ConfigError(f"lda.alpha: must be positive, got {self.lda.alpha}")
        if self.lda.beta <= 0:
            raise ConfigError(f"lda.beta: must be positive, got {self.lda.beta}")
        if not 0 <= self.lda.burn_in < self.lda.iterations:
            raise ConfigError(
                f"lda.burn_in and lda.iterations: require 0 <= burn_in < iterations, "
                f"got burn_in={self.lda.burn_in}, iterations={self.lda.iterations}"
            )
        if self.embeddings.mode not in ("hash", "file"):
            raise ConfigError(f"embeddings.mode: must be 'hash' or 'file', got '{self.embeddings.mode}'")
        if self.embeddings.mode == "file" and not self.embeddings.path:
            raise ConfigError("embeddings.path: required when embeddings.mode = 'file'")
        if self.embeddings.mode == "hash" and self.embeddings.dim < 1:
            raise ConfigError(f"embeddings.dim: must be >= 1, got {self.embeddings.dim}")
        if self.fusion.gamma < 0:
            raise ConfigError(f"fusion.gamma: must be >= 0, got {self.fusion.gamma}")
        if self.fusion.latent < 1 or self.fusion.hidden < 1:
            raise ConfigError("fusion.latent and fusion.hidden: must be >= 1")
        if self.fusion.epochs < 1 or self.fusion.learning_rate <= 0:
            raise ConfigError("fusion.epochs must be >= 1 and fusion.learning_rate positive")
        if self.clustering.k < 1 or self.clustering.restarts < 1:
            raise ConfigError("clustering.k and clustering.restarts: must be >= 1")
        if self.projection.method not in ("pca", "neighbor-embed"):
            raise ConfigError(
                f"projection.method: must be 'pca' or 'neighbor-embed', got '{self.projection.method}'"
            )
        if self.projection.n_neighbors < 2:
            raise ConfigError(f"projection.n_neighbors: must be >= 2, got {self.projection.n_neighbors}")
        if self.projection.min_dist <= 0:
            raise ConfigError(f"projection.min_dist: must be positive, got {self.projection.min_dist}")
        if self.projection.epochs < 1:
            raise ConfigError(f"projection.epochs: must be >= 1, got {self.projection.epochs}")
        if self.threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {self.threads}")


_SECTION_TYPES = {
    "tfidf": TfidfSettings,
    "lda": LdaSettings,
    "embeddings": EmbeddingSettings,
    "fusion": FusionSettings,
    "clustering": ClusteringSettings,
    "projection": ProjectionSettings,
}

_TOP_KEYS = {"corpus", "out_dir", "seed", "threads", "stoplist", "exclusion"}


def load_config(path) -> PipelineConfig:
    """Parse a TOML pipeline config; unknown keys are rejected by name."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")
    cfg = PipelineConfig()
    for key, value in raw.items():
        if key in _TOP_KEYS:
            setattr(cfg, key, value)
        elif key in _SECTION_TYPES:
            section = getattr(cfg, key)
            valid = set(section.__dataclass_fields__)
            for sub_key, sub_value in value.items():
                if sub_key not in valid:
                    raise ConfigError(f"{key}.{sub_key}: unknown config field")
                setattr(section, sub_key, sub_value)
        else:
            raise ConfigError(f"{key}: unknown config field")
    return cfg


# ---------------------------------------------------------------------------
# manifest bookkeeping


def manifest_path(cfg: PipelineConfig) -> Path:
    return Path(cfg.out_dir) / "manifest.json"


def load_manifest(cfg: PipelineConfig) -> dict:
    path = manifest_path(cfg)
    if not path.exists():
        return {"stages": {}}
    return json.loads(path.read_text(encoding="utf-8"))


def _record_stage(cfg: PipelineConfig, stage: str, files: list[Path]) -> None:
    manifest = load_manifest(cfg)
    out_root = Path(cfg.out_dir)
    entry = {
        "seed": cfg.stage_seed(stage),
        "files": {
            str(f.relative_to(out_root)): sha256_file(f) for f in sorted(files)
        },
    }
    manifest["stages"][stage] = entry
    dump_json(manifest, manifest_path(cfg))


def _require_stages(cfg: PipelineConfig, stage: str) -> None:
    manifest = load_manifest(cfg)
    out_root = Path(cfg.out_dir)
    for dep in DEPENDENCIES[stage]:
        entry = manifest["stages"].get(dep)
        if entry is None:
            raise StageError(f"stage '{stage}' needs artifacts from stage '{dep}'; run '{dep}' first")
        for rel, digest in entry["files"].items():
            f = out_root / rel
            if not f.exists() or sha256_file(f) != digest:
                raise StageError(
                    f"stage '{stage}' found stale or missing artifact '{rel}' "
                    f"from stage '{dep}'; run '{dep}' first"
                )


def _stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    d = Path(cfg.out_dir) / stage
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# artifact readers shared between stages


def _read_corpus(cfg) -> Corpus:
    return load_corpus(Path(cfg.out_dir) / "ingest" / "corpus.jsonl")


def _read_cleandocs(cfg) -> list[CleanDoc]:
    docs = []
    with open(Path(cfg.out_dir) / "preprocess" / "cleandocs.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                docs.append(CleanDoc(id=rec["id"], terms=rec["terms"]))
    return docs


def _read_id_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    ids = []
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        ids.append(cells[0])
        rows.append([float(x) for x in cells[1:]])
    return ids, np.asarray(rows, dtype=np.float64)


def _read_labels(cfg) -> tuple[list[str], np.ndarray]:
    lines = (Path(cfg.out_dir) / "cluster" / "labels.csv").read_text(encoding="utf-8").splitlines()
    ids, labels = [], []
    for line in lines[1:]:
        doc_id, label = line.split(",")
        ids.append(doc_id)
        labels.append(int(label))
    return ids, np.asarray(labels, dtype=np.int64)


def _read_comparison(cfg) -> clustering.MethodComparison:
    lines = (Path(cfg.out_dir) / "cluster" / "comparison.csv").read_text(encoding="utf-8").splitlines()
    rows = []
    for line in lines[1:]:
        method, score, k, n = line.split(",")
        rows.append((method, float(score), int(k), int(n)))
    return clustering.MethodComparison(rows=rows)


def _clean_config(cfg: PipelineConfig) -> CleanConfig:
    kwargs = {}
    if cfg.stoplist:
        kwargs["stoplist"] = load_termlist(cfg.stoplist)
    if cfg.exclusion:
        kwargs["exclusion_list"] = load_termlist(cfg.exclusion)
    return CleanConfig(**kwargs)


# ---------------------------------------------------------------------------
# stage bodies


def _stage_ingest(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "ingest")
    corpus = load_corpus(cfg.corpus)
    save_corpus(corpus, out / "corpus.jsonl")
    stats = corpus_stats(corpus)
    dump_json(
        {
            "n_docs": stats.n_docs,
            "year_min": stats.year_min,
            "year_max": stats.year_max,
            "docs_per_year": {str(y): c for y, c in stats.docs_per_year.items()},
            "mean_abstract_tokens": stats.mean_abstract_tokens,
        },
        out / "stats.json",
    )
    return [out / "corpus.jsonl", out / "stats.json"]


def _stage_preprocess(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "preprocess")
    corpus = _read_corpus(cfg)
    docs, warnings = preprocess_corpus(corpus, _clean_config(cfg))
    with open(out / "cleandocs.jsonl", "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.id, "terms": d.terms}, sort_keys=True) + "\n")
    dump_json({"empty_documents": warnings}, out / "warnings.json")
    if warnings:
        logger.warning("preprocess: %d documents ended up empty", len(warnings))
    return [out / "cleandocs.jsonl", out / "warnings.json"]


def _stage_vectorize(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "vectorize")
    docs = _read_cleandocs(cfg)
    counts = tfidf.count_matrix(docs)
    tfidf.save_term_matrix(counts, out / "counts.mtx", out / "counts_vocab.txt")
    lda_counts = tfidf.filter_by_df(counts, max_df=cfg.tfidf.max_df, min_df=cfg.tfidf.min_df)
    tfidf.save_term_matrix(lda_counts, out / "lda_counts.mtx", out / "lda_counts_vocab.txt")
    weighted = tfidf.fit_tfidf(counts, max_df=cfg.tfidf.max_df, min_df=cfg.tfidf.min_df,
                               median_cut=cfg.tfidf.median_cut)
    tfidf.save_term_matrix(weighted, out / "tfidf.mtx", out / "tfidf_vocab.txt")
    return [out / "counts.mtx", out / "counts_vocab.txt",
            out / "lda_counts.mtx", out / "lda_counts_vocab.txt",
            out / "tfidf.mtx", out / "tfidf_vocab.txt"]


def _stage_lda(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "lda")
    counts = tfidf.load_term_matrix(
        Path(cfg.out_dir) / "vectorize" / "lda_counts.mtx",
        Path(cfg.out_dir) / "vectorize" / "lda_counts_vocab.txt",
        kind="counts",
    )
    corpus = _read_corpus(cfg)
    model = lda.fit_lda(counts, lda.LdaConfig(
        n_topics=cfg.lda_k,
        alpha=cfg.lda.alpha,
        beta=cfg.lda.beta,
        n_iterations=cfg.lda.iterations,
        burn_in=cfg.lda.burn_in,
        seed=cfg.stage_seed("lda"),
    ))
    return lda.export_lda(model, out, ids=corpus.ids)


def _stage_embed(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "embed")
    corpus = _read_corpus(cfg)
    if cfg.embeddings.mode == "hash":
        em = embeddings.hash_embed(corpus, cfg.embeddings.dim, cfg.stage_seed("embed"))
    else:
        em = embeddings.load_embeddings(cfg.embeddings.path, corpus)
    embeddings.save_embeddings(em, out / "embeddings.ctme")
    return [out / "embeddings.ctme"]


def _stage_fuse(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "fuse")
    corpus = _read_corpus(cfg)
    _, theta = _read_id_matrix_csv(Path(cfg.out_dir) / "lda" / "theta.csv")
    em = embeddings.load_embeddings(Path(cfg.out_dir) / "embed" / "embeddings.ctme", corpus)
    fused = fusion.fuse(theta, em, cfg.fusion.gamma, ids=corpus.ids)
    params, latent = fusion.train_autoencoder(
        fused,
        latent=cfg.fusion.latent,
        hidden=cfg.fusion.hidden,
        epochs=cfg.fusion.epochs,
        learning_rate=cfg.fusion.learning_rate,
        seed=cfg.stage_seed("fuse"),
    )
    header = ["id"] + [f"z{j}" for j in range(latent.shape[1])]
    write_csv(out / "latent.csv", header,
              [[doc_id] + [float(x) for x in row] for doc_id, row in zip(corpus.ids, latent)])
    fusion.save_params(params, out / "autoencoder.json")
    dump_json({"gamma": fused.gamma, "n_topics": fused.n_topics, "emb_dim": fused.emb_dim},
              out / "fusion.json")
    return [out / "latent.csv", out / "autoencoder.json", out / "fusion.json"]


def _stage_cluster(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "cluster")
    corpus = _read_corpus(cfg)
    weighted = tfidf.load_term_matrix(
        Path(cfg.out_dir) / "vectorize" / "tfidf.mtx",
        Path(cfg.out_dir) / "vectorize" / "tfidf_vocab.txt",
        kind="tfidf",
    )
    em = embeddings.load_embeddings(Path(cfg.out_dir) / "embed" / "embeddings.ctme", corpus)
    _, latent = _read_id_matrix_csv(Path(cfg.out_dir) / "fuse" / "latent.csv")
    seed = cfg.stage_seed("cluster")
    k = cfg.clustering.k
    restarts = cfg.clustering.restarts

    rows = []
    latent_result = None
    for name, X in [("tfidf", weighted.toarray()),
                    ("embedding", em.vectors),
                    ("fused_latent", latent)]:
        result = clustering.kmeans(X, k=k, restarts=restarts, seed=seed)
        rows.append((name, clustering.silhouette(X, result.labels), k, X.shape[0]))
        if name == "fused_latent":
            latent_result = result
    clustering.save_cluster_result(latent_result, corpus.ids, out)
    clustering.save_comparison(clustering.MethodComparison(rows=rows), out / "comparison.csv")
    return [out / "labels.csv", out / "centroids.csv", out / "comparison.csv"]


def _stage_project(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "project")
    _, latent = _read_id_matrix_csv(Path(cfg.out_dir) / "fuse" / "latent.csv")
    ids, labels = _read_labels(cfg)
    if cfg.projection.method == "pca":
        proj = projection.pca_2d(latent)
    else:
        proj = projection.neighbor_embed_2d(
            latent,
            n_neighbors=cfg.projection.n_neighbors,
            min_dist=cfg.projection.min_dist,
            epochs=cfg.projection.epochs,
            seed=cfg.stage_seed("project"),
        )
    write_csv(out / "coords.csv", ["id", "x", "y", "cluster_label"],
              [(doc_id, float(x), float(y), int(label))
               for doc_id, (x, y), label in zip(ids, proj.coords, labels)])
    return [out / "coords.csv"]


def _stage_report(cfg: PipelineConfig) -> list[Path]:
    out = _stage_dir(cfg, "report")
    corpus = _read_corpus(cfg)
    docs = _read_cleandocs(cfg)
    ids, labels = _read_labels(cfg)
    _, centroids = _read_id_matrix_csv(Path(cfg.out_dir) / "cluster" / "centroids.csv")
    _, latent = _read_id_matrix_csv(Path(cfg.out_dir) / "fuse" / "latent.csv")
    comparison = _read_comparison(cfg)
    coords_ids, coords_and_labels = _read_id_matrix_csv(Path(cfg.out_dir) / "project" / "coords.csv")
    coords = coords_and_labels[:, :2]

    result = clustering.ClusterResult(
        labels=labels,
        centroids=centroids,
        inertia=0.0,
        n_iterations=0,
        seed=cfg.stage_seed("cluster"),
    )
    report = reporting.build_report(
        docs=docs,
        years=corpus.years,
        result=result,
        comparison=comparison,
        coords=coords,
        latent=latent,
        config_snapshot=cfg.snapshot(),
    )
    reporting.export_report(report, out)
    return [out / name for name in reporting.REPORT_FILES]


_STAGE_BODIES = {
    "ingest": _stage_ingest,
    "preprocess": _stage_preprocess,
    "vectorize": _stage_vectorize,
    "lda": _stage_lda,
    "embed": _stage_embed,
    "fuse": _stage_fuse,
    "cluster": _stage_cluster,
    "project": _stage_project,
    "report": _stage_report,
}


def run_stage(stage: str, cfg: PipelineConfig) -> list[Path]:
    """Validate, check upstream artifacts, run one stage, record its files."""
    if stage not in STAGES:
        raise ConfigError(f"unknown stage '{stage}'; expected one of {STAGES}")
    cfg.validate()
    _require_stages(cfg, stage)
    logger.info("running stage '%s' (seed %d)", stage, cfg.stage_seed(stage))
    files = _STAGE_BODIES[stage](cfg)
    _record_stage(cfg, stage, files)
    return files


def run_all(cfg: PipelineConfig) -> dict:
    """Run every stage in dependency order; returns the final manifest."""
    for stage in STAGES:
        run_stage(stage, cfg)
    return load_manifest(cfg)
