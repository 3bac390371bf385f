//! Ledger context and economic protocol: operations and their forged form,
//! validation and application, blocks, rights, rewards, accusations and
//! the amendment vote.

pub mod apply;
pub mod block;
pub mod constants;
pub mod context;
pub mod crypto;
pub mod encoding;
pub mod error;
pub mod header;
pub mod json;
pub mod operation;
pub mod rights;
pub mod sandbox;
pub mod testkit;
pub mod voting;

pub use apply::{apply_operation, validate_operation, Applied, BlockEnv, Mode, Receipt, Status};
pub use block::{apply_block, bake, genesis, head_hash, head_level, head_timestamp, sandbox_params, score, Genesis, GenesisParams};
pub use constants::{Constants, MUTEZ_PER_TEZ};
pub use context::Context;
pub use crypto::{BlockHash, ChainId, OperationHash, ProtocolHash, PublicKey, SecretKey, Signature};
pub use error::ProtocolError;
pub use header::{Block, BlockHeader, Endorsement};
pub use operation::{Content, ManagerFields, Operation, Script, Vote};
