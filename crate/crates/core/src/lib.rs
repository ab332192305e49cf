//! Weakly-private information retrieval from MDS-coded storage.
//!
//! The crate covers prime-field arithmetic, MDS storage codes, three query
//! schemes (`zyqt`, `ztsl`, `olr`), maximal-leakage accounting, a linear
//! program for the rate-leakage trade-off and a message-level protocol
//! simulator.

pub mod error;
pub mod field;
pub mod leakage;
pub mod lp;
pub mod mds;
pub mod optimizer;
pub mod protocol;
pub mod scheme;
pub mod sim;
pub mod storage;

pub use error::{Error, Result};
pub use field::{Fe, FieldMatrix, PrimeField};
pub use leakage::{ConditionalQueryTable, Leakage, LeakageModel, LinearForm};
pub use mds::{make_rs_code, MdsCode};
pub use optimizer::{sweep_tradeoff, TradeoffModel, TradeoffPoint};
pub use scheme::{QueryMatrix, SchemeInstance, SchemeKind, Strategy};
pub use storage::{encode_storage, effective_params, EffectiveParams, EncodedStorage, FileSet};
pub use sim::{run_retrieval, verify_retrievability, Deployment, RetrievalTranscript, VerifyMode};
