//! Translated-point solvers: a direct multistart on `S²ⁿ⁻¹ × ℝ/ℤ` and a
//! critical-chain multistart on `F_t`, plus deduplication, time-shift
//! clustering and the `2n` verdict.

mod crosscheck;
mod direct;
mod genfun_scan;
mod newton;
mod record;
mod spectrum;
mod verdict;

pub use crosscheck::{crosscheck, CrossCheck, Match};
pub use direct::{direct_scan, ScanDiagnostics, ScanOutcome, ScanSettings};
pub use genfun_scan::{genfun_scan, GenfunHit, GenfunScanOutcome, GenfunScanSettings};
pub use newton::{NewtonOutcome, NewtonSettings};
pub use record::{reduce_tau, residual, Source, TranslatedPointRecord};
pub use spectrum::{cluster_shifts, count_time_shifts, ShiftCluster, ShiftSpectrum};
pub use verdict::{verdict, ClusterShape, Status, Verdict, FAMILY_SEPARATION};
