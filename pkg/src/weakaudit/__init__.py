"""Decision-boundary auditing and data-centric bias mitigation for
embedding-space classifiers.

The package audits a linear softmax head over fixed image embeddings for
weakspots — misclassified points whose neighborhoods the classifier
confidently assigns to the wrong class — mines the object associations
behind them, routes those through a human review queue, and mitigates
confirmed problems by procuring targeted new training samples and
fine-tuning.
"""

from .audit import AuditConfig, GridReport, Prediction, Weakspot, detect, grid, pair_summary, perplexity
from .benchmark import BenchmarkSpec, PlantedSubgroup, make_benchmark
from .data import (
    ClassVocabulary,
    DatasetBundle,
    EmbeddingStore,
    ObjectTag,
    Record,
    Scene,
    augmentation_fraction,
    bind,
    load_bundle,
    load_embedding_store,
    load_manifest,
    merge,
    save_bundle,
    save_embedding_store,
    save_manifest,
)
from .learner import (
    DisparityReport,
    LinearClassifier,
    MetricsReport,
    TrainConfig,
    disparity,
    disparity_reduction,
    evaluate,
    finetune,
    load_classifier,
    loss_and_gradient,
    predict,
    predict_bundle,
    save_classifier,
    train,
)
from .neighbors import Neighbor, NeighborIndex, build, top_k, within_radius
from .pipeline import (
    PipelineConfig,
    benchmark_pipeline_config,
    load_config,
    run_audit,
    run_enhance,
    save_config,
    write_benchmark,
)
from .procurement import (
    ChannelClients,
    ProcuredBatch,
    ProcurementRequest,
    SyntheticParams,
    fulfill,
    plan,
    procure_synthetic,
    procure_txt2img,
    procure_web,
)
from .prompts import (
    DescriptionSet,
    TextualDescription,
    append_scene,
    build_set,
    describe_pivotal,
    humanize_label,
    mitigation_prompts,
    replace_subject,
)
from .review import (
    Association,
    ObjectRelevance,
    Raster,
    ReviewItem,
    ReviewQueue,
    mine,
    object_relevance,
    set_verdict,
    shortlist,
    spurious,
)

__version__ = "0.1.0"
