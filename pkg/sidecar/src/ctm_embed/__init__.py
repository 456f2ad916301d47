"""ctm-embed: transformer sentence-embedding sidecar for the topic pipeline."""

from .sidecar import SidecarConfig, SidecarError, embed_corpus, read_corpus_jsonl, write_ctme

__version__ = "0.1.0"
