pub mod ban;
pub mod epistemic;
pub mod infoflow;
pub mod protocol;
pub mod security;
pub mod term;
pub mod trace;
