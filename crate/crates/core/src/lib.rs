//! Crowdsourced demographic inference for museum-style collections.
//!
//! The pipeline takes scraped entity records and per-worker annotation
//! responses, screens out bad-faith workers, forms confidence-weighted
//! consensus inferences, reconciles entities that appear in several
//! collections, and produces proportion statistics, outlier tests and
//! hierarchical clusterings of the collections.
//!
//! Stages map onto modules:
//!
//! * [`ingest`]: on-disk contracts, firm pre-filter, response pooling
//! * [`screening`]: worker profiles, suspect flags, exclusions
//! * [`consensus`]: IIA verdicts and gender / ethnicity / region / birth-decade inference
//! * [`reconcile`]: cross-collection identity linking, repairs, reference comparison
//! * [`stats`]: Wilson intervals, Bonferroni families, leave-one-out tests, sample planning
//! * [`cluster`]: feature construction, UPGMA under Chebyshev distance, cuts, cross-tabs
//! * [`synth`]: synthetic campaigns with retained ground truth
//! * [`report`]: table and figure artifacts plus the end-to-end runner

pub mod cluster;
pub mod consensus;
pub mod ingest;
pub mod reconcile;
pub mod report;
pub mod screening;
pub mod stats;
pub mod synth;

pub use consensus::{CampaignConfig, ConsensusInference, RegionMap};
pub use ingest::{AnnotationResponse, Confidence, EntityRecord, RecordKey, ResponsePool};
