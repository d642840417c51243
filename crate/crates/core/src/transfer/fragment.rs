use crate::error::StorageError;

use super::{MAX_CHUNK, MAX_CHUNKS};

/// Splits a message into chunks of at most 2048 bytes. An empty message
/// yields a single empty chunk so every message costs at least one exchange.
pub fn fragment(message: &[u8]) -> Result<Vec<Vec<u8>>, StorageError> {
    if message.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    let count = message.len().div_ceil(MAX_CHUNK);
    if count > MAX_CHUNKS {
        return Err(StorageError::MessageTooLarge(message.len()));
    }
    Ok(message.chunks(MAX_CHUNK).map(<[u8]>::to_vec).collect())
}

pub fn assemble<C: AsRef<[u8]>>(chunks: &[C]) -> Vec<u8> {
    let len = chunks.iter().map(|c| c.as_ref().len()).sum();
    let mut out = Vec::with_capacity(len);
    for c in chunks {
        out.extend_from_slice(c.as_ref());
    }
    out
}
