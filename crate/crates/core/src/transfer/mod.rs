//! Bidirectional chunked transfer: the message store each device keeps, the
//! fragmentation of messages into APDU-sized chunks, and the AID suffix that
//! carries the chunk index.

mod aid;
mod fragment;
mod storage;

pub use aid::{decode_aid, encode_aid, ChunkIndex, DEFAULT_BASE_AID};
pub use fragment::{assemble, fragment};
pub use storage::{transfer_message, MessageStorage};

/// Largest payload one APDU response may carry.
pub const MAX_CHUNK: usize = 2048;

/// Number of addressable chunks, fixed by the two-digit AID suffix.
pub const MAX_CHUNKS: usize = 100;
