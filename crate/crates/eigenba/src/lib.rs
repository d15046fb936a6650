//! Query-efficient black-box adversarial attacks guided by the eigen
//! directions of a surrogate network's representation Jacobian.
//!
//! The crate has four layers:
//!
//! * [`linalg`] — a small dense tensor type, a hand-written truncated SVD,
//!   finite differences, and a brute-force optimisation oracle used to
//!   cross-check the fast paths.
//! * [`net`] — a minimal feed-forward network stack (dense / ReLU / conv /
//!   softmax) with reverse-mode gradients, SGD training, and a versioned
//!   JSON model format.
//! * [`oracle`] — the query-counting probability oracle and the attack
//!   objectives it scores.
//! * [`attacks`] — the shared greedy descent loop and the direction
//!   providers that differentiate EigenBA, SimBA, SimBA-DCT, Trans-FGM and
//!   Trans-FGSM, plus a white-box reference descent.
//!
//! [`harness`] ties these into reproducible campaigns: victim selection,
//! parallel per-image attacks, reserve-rate ablations, metrics files, and
//! the command-line front end.
//!
//! Everything is deterministic given its seeds: training runs, attacks and
//! report files reproduce byte-for-byte.

pub mod attacks;
pub mod harness;
pub mod linalg;
pub mod net;
pub mod oracle;

pub use attacks::{
    run_attack, white_box_descent_oracle, AttackConfig, AttackError, AttackOutcome,
    DirectionProvider,
};
pub use linalg::{
    brute_force_problem5, eigen_directions, finite_difference_jacobian, truncated_svd,
    LinalgError, SvdResult, Tensor,
};
pub use net::{
    load_model, save_model, sgd_train, zero_parameters, Dataset, Layer, LayeredModel,
    ModelMetadata, NetError, TrainConfig,
};
pub use oracle::{AttackObjective, OracleError, ProbabilityEvaluator, QueryOracle};
