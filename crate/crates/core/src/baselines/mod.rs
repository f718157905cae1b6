//! Competing approaches: subject screening and robust losses.

mod losses;
mod screening;

pub use losses::{gce_loss, sce_loss, target_bin, LossGrad};
pub use screening::{
    screen_bias_removal, screen_mle, screen_subject_rejection, subject_biases, BiasRemovalOutcome,
    MleOutcome, RejectionOutcome, SubjectMatrix, REJECTION_RATIO,
};
