//! μMALL circular proofs and multicut elimination.

pub mod formula;
pub mod qstep;
pub mod rules;
pub mod steps;
pub mod text;

pub use formula::{
    formula_subst, is_closed, neg, parse_formula_str, parse_sequent_str, Formula,
    Sequent,
};
pub use qstep::MumallQStep;
pub use rules::{
    mcut_conclusion, multicut_violations, partition_tensor_premisses, reindex_cutrel,
    validate_multicut, Coord, CutRel, IndexMap, McutViolation, MumallRule, PreProof,
};
pub use steps::{
    applicable_root_steps, apply_root_step, cut_elim_observe, enabling_perm, wrap_cut,
    MumallOracle, RootStepKind, StuckReport,
};
pub use text::{parse_mumall_file, parse_proof_at, print_mumall};
