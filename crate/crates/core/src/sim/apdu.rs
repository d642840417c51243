use std::fmt;

use crate::error::ApduError;
use crate::transfer::{decode_aid, encode_aid, ChunkIndex, MAX_CHUNK};

/// CLA, INS, P1, P2 of a SELECT-by-AID command.
pub const SELECT_HEADER: [u8; 4] = [0x00, 0xA4, 0x04, 0x00];

pub const SW_SUCCESS: [u8; 2] = [0x90, 0x00];
pub const SW_FILE_NOT_FOUND: [u8; 2] = [0x6A, 0x82];

/// Command APDU: a four byte header followed by the AID whose last two
/// characters select the chunk to read.
#[derive(Clone, PartialEq, Eq)]
pub struct ApduCommand {
    header: [u8; 4],
    aid: Vec<u8>,
}

impl ApduCommand {
    pub fn new(header: [u8; 4], aid: Vec<u8>) -> Result<Self, ApduError> {
        if !(5..=16).contains(&aid.len()) {
            return Err(ApduError::AidLength(aid.len()));
        }
        decode_aid(&aid)?;
        Ok(ApduCommand { header, aid })
    }

    pub fn select_chunk(base_aid: &[u8], index: ChunkIndex) -> Result<Self, ApduError> {
        Self::new(SELECT_HEADER, encode_aid(base_aid, index)?)
    }

    pub fn header(&self) -> [u8; 4] {
        self.header
    }

    pub fn aid(&self) -> &[u8] {
        &self.aid
    }

    /// Everything but the two index digits.
    pub fn base_aid(&self) -> &[u8] {
        &self.aid[..self.aid.len() - 2]
    }

    pub fn chunk_index(&self) -> ChunkIndex {
        decode_aid(&self.aid).expect("validated on construction")
    }

    /// Case 4 short encoding: header, Lc, AID, Le = 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.aid.len());
        out.extend_from_slice(&self.header);
        out.push(self.aid.len() as u8);
        out.extend_from_slice(&self.aid);
        out.push(0x00);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ApduError> {
        if bytes.len() < 5 {
            return Err(ApduError::Truncated(bytes.len()));
        }
        let lc = bytes[4] as usize;
        let body = &bytes[5..];
        // Le is optional
        if body.len() != lc && body.len() != lc + 1 {
            return Err(ApduError::LengthMismatch);
        }
        let header = [bytes[0], bytes[1], bytes[2], bytes[3]];
        Self::new(header, body[..lc].to_vec())
    }

    /// Size on the wire, used by the timing model.
    pub fn wire_len(&self) -> usize {
        6 + self.aid.len()
    }
}

impl fmt::Debug for ApduCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApduCommand")
            .field("header", &format_args!("{:02x?}", self.header))
            .field("aid", &String::from_utf8_lossy(&self.aid))
            .finish()
    }
}

/// Response APDU: up to 2048 bytes of payload plus a status word.
#[derive(Clone, PartialEq, Eq)]
pub struct ApduResponse {
    payload: Vec<u8>,
    status_word: [u8; 2],
}

impl ApduResponse {
    pub fn new(payload: Vec<u8>, status_word: [u8; 2]) -> Result<Self, ApduError> {
        if payload.len() > MAX_CHUNK {
            return Err(ApduError::PayloadTooLarge(payload.len()));
        }
        Ok(ApduResponse {
            payload,
            status_word,
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<u8> {
        self.payload
    }

    pub fn status_word(&self) -> [u8; 2] {
        self.status_word
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 2);
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.status_word);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ApduError> {
        let Some(split) = bytes.len().checked_sub(2) else {
            return Err(ApduError::Truncated(bytes.len()));
        };
        Self::new(bytes[..split].to_vec(), [bytes[split], bytes[split + 1]])
    }
}

impl fmt::Debug for ApduResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApduResponse")
            .field("len", &self.payload.len())
            .field("sw", &format_args!("{:02x}{:02x}", self.status_word[0], self.status_word[1]))
            .finish()
    }
}
