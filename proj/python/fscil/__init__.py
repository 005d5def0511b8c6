"""Few-shot class-incremental learning pipeline."""

from ._core import (  # noqa: F401
    ComplementaryConfig,
    EvalSummary,
    ExperimentConfig,
    ImageShape,
    LabeledSet,
    ModelState,
    PretrainConfig,
    PseudoTaskOptions,
    RunManifest,
    SessionReport,
    SessionStream,
    SplitConfig,
    WeightMatrix,
    build_pseudo_task,
    build_session_stream,
    compute_model_weights,
    config_fingerprint,
    config_from_json,
    config_to_json,
    cosine_scores,
    cross_entropy,
    cumulative_test_set,
    encode,
    evaluate_session,
    evaluate_session_single,
    expand_classifier,
    init_encoder,
    make_labeled_set,
    make_model,
    pretrain_base,
    prototype,
    read_summary_file,
    reinit_classifier_with_prototypes,
    run_experiment,
    scaled_softmax,
    sqeuclid_scores,
    summarize,
    synth_blob_source,
    train_complementary,
)

__all__ = [name for name in dir() if not name.startswith("_")]
