//! Segmentation of ordered SNP-array observations into chromosomal-alteration
//! states via hidden Markov models.
//!
//! A track of SNP observations (genotype calls, log2 copy-number estimates,
//! and optional per-SNP confidence scores) is decoded against one of three
//! state spaces:
//!
//! - genotype-only: retention vs. loss of heterozygosity,
//! - copy-number-only: deletion / normal / amplification,
//! - joint: deletion / copy-neutral LOH / normal / amplification.
//!
//! Two emission variants are supported. The *vanilla* model uses only the
//! point summaries; the *ICE* model additionally weighs each SNP by its
//! confidence score (genotype score densities from a trained reference model,
//! SNP-specific scale factors for copy number). Transitions follow the
//! distance-dependent instability-selection family.
//!
//! The [`simulation`] module generates the reference chromosome and the
//! microdeletion sweep / null arms used to benchmark the two variants.

pub mod emissions;
pub mod error;
pub mod hmm;
pub mod reference;
pub mod segmentation;
pub mod simulation;
pub mod snp_data;
pub mod transition;

pub use emissions::{
    cn_loglik_ice, cn_loglik_vanilla, genotype_loglik_ice, genotype_loglik_vanilla, joint_loglik,
    robust_sigma, CnLevel, CopyNumberEmissionParams, GenotypeEmissionParams, GenotypeRegime,
    StateSpace, DEFAULT_DENSITY_FLOOR,
};
pub use error::{Error, Result};
pub use hmm::{em_fit, DecodeResult, EmOptions, HmmModel, LearnSet};
pub use reference::{
    read_reference, synthetic_reference, train_reference, write_reference, CalledClass, CellSpec,
    GenotypeClass, KdeTable, ReferenceModel, SyntheticSpec,
};
pub use segmentation::{deletion_delta_loglik, path_to_segments, Segment};
pub use simulation::{
    simulate_chr1, simulate_deletion_sweep, simulate_null_arms, write_truth, NullArm, Region,
    SimConfig, SimulatedChromosome, SweepConfig, SweepDataset, VariabilitySpec, STATE_AMPLIFICATION,
    STATE_CN_LOH, STATE_DELETION, STATE_NORMAL,
};
pub use snp_data::{
    adjacent_distances, parse_snp_table, write_snp_table, GenotypeCall, ParseOptions,
    SnpObservation, SnpTrack,
};
pub use transition::{theta, transition_matrix, TransitionMatrix, TransitionParams};
