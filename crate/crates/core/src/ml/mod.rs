//! Kernel SVM, k-means, datasets and cross-validation.

pub mod data;
pub mod eval;
pub mod kmeans;
pub mod svm;

pub use data::{make_moons, Dataset1D, Dataset2D, Point1D};
pub use eval::{
    classify_2d_pipeline, cross_validate, histogram, stratified_partitions, CvOptions, CvResult,
    Histogram, Partition, PipelineResult,
};
pub use kmeans::{kmeans, KMeansResult};
pub use svm::{clip_psd, dual_objective, svm_predict, svm_train, SvmModel, DEFAULT_LAMBDA};
