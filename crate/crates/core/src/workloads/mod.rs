//! The offloaded applications: N Queens solution counting and RSA key
//! generation with encryption, plus their wire formats and cost model.

mod crypto;
mod nqueens;
mod task;

pub use crypto::{
    check_key_length, decode_private_key, decode_public_key, encode_private_key, encode_public_key, frame_rsa_result,
    max_plaintext, rsa_decrypt, rsa_encrypt, rsa_keygen, unframe_rsa_result, DEFAULT_KEY_LENGTH, SUPPORTED_KEY_LENGTHS,
};
pub use nqueens::{nqueens_count, nqueens_nodes, nqueens_search, MAX_N, NODE_COUNTS};
pub use rsa::{RsaPrivateKey, RsaPublicKey};
pub use task::{
    deserialize_nqueens, deserialize_rsa, nqueens_result, serialize_nqueens, serialize_rsa, CostModel, NQueensTask,
    RsaTask, Task, Workload, APP_NQUEENS, APP_RSA,
};
