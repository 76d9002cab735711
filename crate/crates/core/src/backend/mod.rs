pub mod flatten;
pub mod pseudo;
pub mod solcheck;
pub mod solidity;

pub use flatten::{flatten_mapping_structs, Rewrite};
pub use pseudo::{emit_pseudocode, PseudoOptions};
pub use solcheck::{check_solidity, SolidityIssue};
pub use solidity::{emit_solidity, Manifest, SolidityOptions, SolidityOutput, MAX_CONTRACT_SIZE};
