use serde_json::{json, Value as Json};
use thiserror::Error;
use tzdesk_michelson::Address;

use crate::crypto::{BlockHash, OperationHash};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    // Operation validation.
    #[error("counter {found} already used for {contract} (expected {expected})")]
    CounterInThePast { contract: Address, expected: u64, found: u64 },
    #[error("counter {found} not yet reached for {contract} (expected {expected})")]
    CounterInTheFuture { contract: Address, expected: u64, found: u64 },
    #[error("invalid signature")]
    InvalidSignature,
    #[error("public key of {0} is not revealed")]
    UnrevealedKey(Address),
    #[error("public key of {0} is already revealed")]
    PreviouslyRevealed(Address),
    #[error("revealed key does not hash to {0}")]
    InconsistentRevealKey(Address),
    #[error("balance of {contract} is too low ({balance} < {amount})")]
    BalanceTooLow { contract: Address, balance: u64, amount: u64 },
    #[error("gas limit {0} exceeds the per-operation hard limit")]
    GasLimitTooHigh(u64),
    #[error("storage limit {0} exceeds the per-operation hard limit")]
    StorageLimitTooHigh(u64),
    #[error("fee {fee} below the minimal fee {minimal}")]
    FeeTooLow { fee: u64, minimal: u64 },
    #[error("operation has no contents")]
    EmptyOperation,
    #[error("invalid batch: {0}")]
    InvalidBatch(&'static str),
    #[error("malformed operation: {0}")]
    Malformed(String),

    // Application failures, reported inside receipts.
    #[error("gas exhausted")]
    GasExhausted,
    #[error("storage limit exceeded ({used} > {limit} bytes)")]
    StorageLimitExceeded { used: u64, limit: u64 },
    #[error("script of {contract} failed with {with}")]
    ScriptFailed { contract: Address, with: String },
    #[error("script rejected: {0}")]
    ScriptRejected(String),
    #[error("bad parameter for {contract}: {reason}")]
    BadParameter { contract: Address, reason: String },
    #[error("contract {0} does not exist")]
    UnknownContract(Address),
    #[error("mutez overflow")]
    MutezOverflow,
    #[error("{0} is not a registered delegate")]
    UnknownDelegate(Address),
    #[error("{0} is a delegate and cannot change its delegation")]
    DelegateLocked(Address),
    #[error("activation secret does not match")]
    InvalidActivation,
    #[error("{0} is already activated")]
    AlreadyActivated(Address),

    // Accusations.
    #[error("invalid evidence: {0}")]
    InvalidEvidence(&'static str),
    #[error("{delegate} already denounced for level {level}")]
    AlreadyDenounced { delegate: Address, level: u64 },
    #[error("evidence for level {0} is outside the accusation window")]
    OutdatedEvidence(u64),

    // Voting.
    #[error("wrong voting period {found} (current {current})")]
    WrongVotingPeriod { current: u32, found: u32 },
    #[error("operation not allowed in the {0} period")]
    WrongPeriodKind(&'static str),
    #[error("{0} is not in the voting listings")]
    NotInListings(Address),
    #[error("{0} already voted")]
    DuplicateVote(Address),
    #[error("ballot is not for the current proposal")]
    WrongProposal,

    // Blocks.
    #[error("block level {found}, expected {expected}")]
    WrongLevel { expected: u64, found: u64 },
    #[error("block predecessor {found:?}, expected {expected:?}")]
    WrongPredecessor { expected: BlockHash, found: BlockHash },
    #[error("timestamp {found} earlier than {minimal}")]
    TimestampTooEarly { minimal: i64, found: i64 },
    #[error("{baker} has no baking slot at priority {priority}")]
    WrongBaker { baker: Address, priority: u16 },
    #[error("invalid block signature")]
    InvalidBlockSignature,
    #[error("invalid endorsement: {0}")]
    InvalidEndorsement(String),
    #[error("operations hash mismatch")]
    BadOperationsHash,
    #[error("operation {hash} is invalid: {error}")]
    InvalidOperation { hash: OperationHash, error: Box<ProtocolError> },
    #[error("no rolls: nobody can bake")]
    NoRolls,
}

impl ProtocolError {
    pub fn id(&self) -> &'static str {
        use ProtocolError::*;
        match self {
            CounterInThePast { .. } => "counter_in_the_past",
            CounterInTheFuture { .. } => "counter_in_the_future",
            InvalidSignature => "invalid_signature",
            UnrevealedKey(_) => "unrevealed_key",
            PreviouslyRevealed(_) => "previously_revealed_key",
            InconsistentRevealKey(_) => "inconsistent_reveal_key",
            BalanceTooLow { .. } => "balance_too_low",
            GasLimitTooHigh(_) => "gas_limit_too_high",
            StorageLimitTooHigh(_) => "storage_limit_too_high",
            FeeTooLow { .. } => "fee_too_low",
            EmptyOperation => "empty_operation",
            InvalidBatch(_) => "invalid_batch",
            Malformed(_) => "malformed_operation",
            GasExhausted => "gas_exhausted",
            StorageLimitExceeded { .. } => "storage_limit_exceeded",
            ScriptFailed { .. } => "script_failed",
            ScriptRejected(_) => "script_rejected",
            BadParameter { .. } => "bad_parameter",
            UnknownContract(_) => "unknown_contract",
            MutezOverflow => "mutez_overflow",
            UnknownDelegate(_) => "unknown_delegate",
            DelegateLocked(_) => "delegate_locked",
            InvalidActivation => "invalid_activation",
            AlreadyActivated(_) => "already_activated",
            InvalidEvidence(_) => "invalid_evidence",
            AlreadyDenounced { .. } => "already_denounced",
            OutdatedEvidence(_) => "outdated_evidence",
            WrongVotingPeriod { .. } => "wrong_voting_period",
            WrongPeriodKind(_) => "wrong_period_kind",
            NotInListings(_) => "not_in_listings",
            DuplicateVote(_) => "duplicate_vote",
            WrongProposal => "wrong_proposal",
            WrongLevel { .. } => "wrong_level",
            WrongPredecessor { .. } => "wrong_predecessor",
            TimestampTooEarly { .. } => "timestamp_too_early",
            WrongBaker { .. } => "wrong_baker",
            InvalidBlockSignature => "invalid_block_signature",
            InvalidEndorsement(_) => "invalid_endorsement",
            BadOperationsHash => "bad_operations_hash",
            InvalidOperation { .. } => "invalid_operation",
            NoRolls => "no_rolls",
        }
    }

    /// Counter errors may resolve on their own once the chain moves.
    pub fn is_temporary(&self) -> bool {
        matches!(self, ProtocolError::CounterInTheFuture { .. } | ProtocolError::BalanceTooLow { .. })
    }

    pub fn to_json(&self) -> Json {
        let mut j = json!({
            "kind": if self.is_temporary() { "temporary" } else { "permanent" },
            "id": format!("proto.{}", self.id()),
            "msg": self.to_string(),
        });
        match self {
            ProtocolError::BalanceTooLow { contract, balance, amount } => {
                j["contract"] = json!(contract.to_string());
                j["balance"] = json!(balance.to_string());
                j["amount"] = json!(amount.to_string());
            }
            ProtocolError::CounterInThePast { contract, expected, found }
            | ProtocolError::CounterInTheFuture { contract, expected, found } => {
                j["contract"] = json!(contract.to_string());
                j["expected"] = json!(expected.to_string());
                j["found"] = json!(found.to_string());
            }
            ProtocolError::ScriptFailed { contract, with } => {
                j["contract"] = json!(contract.to_string());
                j["with"] = json!(with);
            }
            _ => {}
        }
        j
    }
}
