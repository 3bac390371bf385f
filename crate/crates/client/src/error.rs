use serde_json::Value as Json;
use thiserror::Error;
use tzdesk_michelson::Address;

use crate::tez::format_tez;
use crate::wallet::WalletError;

#[derive(Debug, Error)]
pub enum ClientError {
    /// A node error reply, kept as received.
    #[error("{method} {path} failed with HTTP {status}: {body}")]
    Rpc { method: &'static str, path: String, status: u16, body: Json },
    #[error("cannot reach the node at {endpoint}: {reason}")]
    Unreachable { endpoint: String, reason: String },
    #[error(transparent)]
    Wallet(#[from] WalletError),
    #[error("invalid amount `{0}`")]
    BadAmount(String),
    #[error("fee {} tez is below the minimal fee {} tez", format_tez(*fee), format_tez(*minimal))]
    FeeTooLow { fee: u64, minimal: u64 },
    #[error("storage burn of {} tez exceeds the burn cap of {} tez", format_tez(*burn), format_tez(*cap))]
    BurnCapExceeded { burn: u64, cap: u64 },
    #[error("simulation {status}: {errors}")]
    SimulationFailed { status: String, errors: Json },
    #[error("activation rejected: {0}")]
    ActivationRejected(String),
    #[error("{0}")]
    Typecheck(String),
    #[error("map literals must list their keys in increasing order")]
    UnorderedMapLiteral,
    #[error("invalid literal for {what}: {reason}")]
    BadLiteral { what: &'static str, reason: String },
    #[error("node forged {node} but the client forged {local}")]
    ForgeMismatch { node: String, local: String },
    #[error("unexpected reply to {path}: {reply}")]
    BadReply { path: String, reply: Json },
    #[error("operation {0} is unknown to the node")]
    UnknownOperation(String),
    #[error("operation {0} is no longer on the head chain")]
    Reorged(String),
    #[error("timed out after {polls} polls waiting for {op}")]
    Timeout { op: String, polls: u64 },
    #[error("the key of {0} is already revealed")]
    AlreadyRevealed(Address),
    #[error("{0} has no script")]
    NotAContract(Address),
    #[error("assertion failed: {what}\n  expected: {expected}\n  found:    {found}")]
    AssertionFailure { what: String, expected: String, found: String },
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;
