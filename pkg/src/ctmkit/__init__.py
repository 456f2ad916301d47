"""ctmkit: contextual topic modeling of scientific abstracts.

Pipeline: clean a corpus, build TF-IDF / topic-model / embedding
representations, fuse topic and embedding vectors, compress with an
autoencoder, cluster with k-means, validate with silhouette scores, project
to 2-D, and emit topic reports.
"""

from .corpus import Corpus, CorpusStats, Document, corpus_stats, load_corpus, save_corpus
from .preprocess import (
    CleanConfig,
    CleanDoc,
    build_ngrams,
    clean_text,
    preprocess_corpus,
    remove_stop_and_excluded,
)
from .tfidf import TermMatrix, Vocabulary, count_matrix, filter_by_df, fit_tfidf, median_filter
from .lda import LdaConfig, LdaModel, doc_topic_matrix, fit_lda, lda_top_terms
from .embeddings import EmbeddingMatrix, hash_embed, load_embeddings, save_embeddings
from .fusion import AutoencoderParams, FusedMatrix, encode, fuse, train_autoencoder
from .clustering import (
    ClusterResult,
    MethodComparison,
    adjusted_rand_index,
    compare_methods,
    kmeans,
    silhouette,
    silhouette_sweep,
)
from .projection import Projection2D, knn_recall, neighbor_embed_2d, pca_2d
from .reporting import (
    TopicReport,
    build_report,
    export_report,
    topic_evolution,
    topic_shares,
    topic_top_terms,
)
from .synth import PlantedSpec, generate_planted
from .pipeline import PipelineConfig, load_config, run_all, run_stage

__version__ = "0.1.0"
