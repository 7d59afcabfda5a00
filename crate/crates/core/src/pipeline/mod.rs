//! Config-driven experiment orchestration: synthetic corpora, training of
//! the D1/D2/R models, attribution, metrics, reports and highlight pages.

mod annotations;
mod config;
mod experiment;
mod highlight;
mod report;
mod synth;

pub use annotations::{ingest_annotations, AnnotationSummary, RejectedRow};
pub use config::{
    AttributionConfig, DataConfig, EvaluationConfig, ExperimentConfig, ModelConfig, SeedConfig,
};
pub use experiment::{
    architecture, attribute_documents, evaluate, load_data, load_models, read_attributions, run_experiment,
    run_stage, sample_documents, train_models, write_highlights, AttributionKey, ExperimentOutcome, ModelTag,
    OutputLayout, TrainedModels, STALE_MARKER,
};
pub use highlight::{export_highlights, select_highlight, token_budget, Highlight};
pub use report::{
    emit_report, AccuracyRow, AgreementRow, EvaluationResults, InfidelityRow, OverlapRow, RobustnessEntry,
};
pub use synth::{synth_dataset, synth_records, SignalMode, SyntheticCorpus, SyntheticSpec};
