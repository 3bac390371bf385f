//! Client for a tzdesk node: wallet, operations built over the RPC
//! interface, offline script tools and the contract walkthroughs.

pub mod client;
pub mod error;
pub mod receipt;
pub mod scenario;
pub mod script;
pub mod tez;
pub mod transport;
pub mod wallet;

pub use client::{Action, Client, Inclusion, LogEntry, SubmitOptions, Submitted};
pub use error::ClientError;
pub use transport::{Http, InProcess, Transport};
pub use wallet::{Wallet, WalletError};

/// `-d`, else `$TZDESK_CLIENT_DIR`, else `~/.tzdesk-client`.
pub fn client_dir(flag: Option<std::path::PathBuf>) -> std::path::PathBuf {
    flag.or_else(|| std::env::var_os("TZDESK_CLIENT_DIR").map(Into::into))
        .unwrap_or_else(|| std::path::PathBuf::from(std::env::var_os("HOME").unwrap_or_else(|| ".".into())).join(".tzdesk-client"))
}
