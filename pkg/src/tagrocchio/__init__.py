"""Content-based POI recommendation from user-assigned tags.

Tags are embedded with CBOW, POIs are the sum of their tag vectors, users are
a Rocchio combination of their liked, neutral and disliked POIs, and
candidates are ranked by cosine similarity.
"""

from .data import (
    Context,
    Poi,
    ProfileEntry,
    Qrels,
    Request,
    RunFile,
    RunRow,
    Tag,
    UserProfile,
    build_tag_sentences,
    normalize_tag,
    partition_profile,
    scale_rating,
)
from .embedding import EmbeddingModel, TrainConfig, encode_one_hot, load_model, save_model, tag_vector, train_cbow
from .evaluation import EvalReport, evaluate_run, mean_metric, paired_t_test
from .modeling import RocchioParams, UserModel, build_user_model, combine_rocchio, poi_vector
from .optimizer import OptConfig, SearchResult, genetic_range_search, grid_search, optimize, profile_self_score
from .ranking import RankedList, cosine, emit_run, rank_candidates

__version__ = "0.1.0"
