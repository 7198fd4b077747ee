//! File formats read and written by the pipeline.

pub mod features;
pub mod manifest;
pub mod report;
pub mod scores;
pub mod segments;
pub mod series;
pub mod tensor;

pub use features::{
    parse_feature_csv, parse_feature_matrix, write_feature_csv, write_feature_matrix,
    FeatureMatrix,
};
pub use manifest::{parse_manifest, write_manifest, SampleRecord, SampleSet, Source};
pub use report::{render_pr_svg, write_pr_curve, write_report, MetricTable};
pub use scores::{
    parse_id_scores, parse_labels, parse_predictions, parse_relevance, write_id_scores,
    write_labels, write_predictions, write_relevance, PredictionRow, RelevanceRow,
};
pub use segments::{parse_segments, sort_segments, write_segments, Segment};
pub use series::{
    parse_probability_series, parse_video_probabilities, write_probability_series,
    write_video_probabilities, ProbabilitySeries, VideoProbabilities,
};
pub use tensor::{parse_tensor, write_tensor, Tensor};
