use std::fmt;

use crate::error::StorageError;

/// Base application identifier used by the offloading application on both
/// devices. Stored as ASCII so the trailing index digits are readable.
pub const DEFAULT_BASE_AID: &[u8] = b"F0NFCOFF";

/// Index of a chunk within a message, encoded as two decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkIndex(u8);

impl ChunkIndex {
    pub const MAX: u8 = 99;

    pub fn new(index: usize) -> Result<Self, StorageError> {
        if index > Self::MAX as usize {
            return Err(StorageError::IndexOutOfRange(index));
        }
        Ok(ChunkIndex(index as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ChunkIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}", self.0)
    }
}

/// Appends the two-digit index to `base_aid`. The result must fit the 5..=16
/// byte AID range, so the base is limited to 3..=14 bytes.
pub fn encode_aid(base_aid: &[u8], index: ChunkIndex) -> Result<Vec<u8>, StorageError> {
    if !(3..=14).contains(&base_aid.len()) {
        return Err(StorageError::BaseAidLength(base_aid.len()));
    }
    let mut aid = Vec::with_capacity(base_aid.len() + 2);
    aid.extend_from_slice(base_aid);
    aid.push(b'0' + index.0 / 10);
    aid.push(b'0' + index.0 % 10);
    Ok(aid)
}

/// Reads the chunk index from the last two bytes of an AID.
pub fn decode_aid(aid: &[u8]) -> Result<ChunkIndex, StorageError> {
    let [.., tens, ones] = aid else {
        return Err(StorageError::MalformedAid);
    };
    if !tens.is_ascii_digit() || !ones.is_ascii_digit() {
        return Err(StorageError::MalformedAid);
    }
    Ok(ChunkIndex((tens - b'0') * 10 + (ones - b'0')))
}
