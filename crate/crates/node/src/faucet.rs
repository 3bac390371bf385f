//! Faucet files: a fresh key plus the activation secret for a fixed amount.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use tzdesk_core::operation::activation_secret;
use tzdesk_core::SecretKey;
use tzdesk_michelson::Address;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaucetFile {
    pub pkh: Address,
    /// Hex-encoded activation secret.
    pub secret: String,
    /// Mutez, as a decimal string.
    pub amount: String,
    pub secret_key: SecretKey,
}

impl FaucetFile {
    pub fn generate(rng: &mut impl RngCore, amount: u64) -> FaucetFile {
        let sk = SecretKey::generate(rng);
        let pkh = sk.public_key().address();
        FaucetFile { pkh, secret: hex::encode(activation_secret(&pkh, amount)), amount: amount.to_string(), secret_key: sk }
    }

    /// True when the key, address and secret agree.
    pub fn is_consistent(&self) -> bool {
        let Ok(amount) = self.amount.parse::<u64>() else { return false };
        self.secret_key.public_key().address() == self.pkh && self.secret == hex::encode(activation_secret(&self.pkh, amount))
    }
}
