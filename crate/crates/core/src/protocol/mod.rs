//! Protocol data model and verifiers for CDS, CDQS and f-routing.

mod cdqs;
mod cds;
mod frouting;
pub mod io;
mod predicate;
mod report;

pub use cdqs::{
    certify_correctness, certify_row, combine_local, decoupling_check, dephasing_channel, embed_cds, verify_cdqs,
    verify_embedded_cds, CdqsProtocol, CertifyOptions, CorrectnessCertificate, DecouplingCheck, VerifyOptions,
};
pub(crate) use cds::ceil_log2;
pub use cds::{verify_cds_exact, CdsProtocol, MAX_ENUMERATION};
pub use frouting::{frouting_to_cdqs, verify_frouting, FRoutingProtocol, Side};
pub use predicate::{Predicate, MAX_INPUT_BITS};
pub use report::{InputRow, VerificationReport};

/// Tolerance applied when comparing certified values to declared parameters.
pub const DEFAULT_TOL: f64 = 1e-6;
