//! Stage orchestration over the artifacts in a work directory.

mod config;
mod report;
mod stages;

pub use config::{
    Aggregator, HeadChoice, HeadConfig, Paths, PipelineConfig, SilverConfig, SpanConfig, DEFAULT_WORKDIR, WORKDIR_ENV,
};
pub use report::{CorrelationEntry, EvalReport, QuestionReport, SplitReport};
pub use stages::*;
