use crate::error::StorageError;

use super::{fragment, ChunkIndex, MAX_CHUNK, MAX_CHUNKS};

/// Per-device message store. `to_send` holds the chunks this device serves
/// as an emulated card; `received` holds the chunks it has read as a reader.
/// The two arrays are independent.
#[derive(Debug, Clone)]
pub struct MessageStorage {
    to_send: Vec<Option<Vec<u8>>>,
    received: Vec<Option<Vec<u8>>>,
}

impl Default for MessageStorage {
    fn default() -> Self {
        Self::new()
    }
}

fn check_chunk(message: &[u8], index: usize) -> Result<ChunkIndex, StorageError> {
    let index = ChunkIndex::new(index)?;
    if message.len() > MAX_CHUNK {
        return Err(StorageError::ChunkTooLarge(message.len()));
    }
    Ok(index)
}

fn read(slots: &[Option<Vec<u8>>], index: usize) -> Result<&[u8], StorageError> {
    let idx = ChunkIndex::new(index)?;
    slots[idx.as_usize()]
        .as_deref()
        .ok_or(StorageError::EmptySlot(idx.get()))
}

impl MessageStorage {
    pub fn new() -> Self {
        MessageStorage {
            to_send: vec![None; MAX_CHUNKS],
            received: vec![None; MAX_CHUNKS],
        }
    }

    pub fn set_message_to_send(&mut self, message: &[u8], index: usize) -> Result<(), StorageError> {
        let idx = check_chunk(message, index)?;
        self.to_send[idx.as_usize()] = Some(message.to_vec());
        Ok(())
    }

    pub fn get_message_to_send(&self, index: usize) -> Result<&[u8], StorageError> {
        read(&self.to_send, index)
    }

    pub fn set_message_received(&mut self, message: &[u8], index: usize) -> Result<(), StorageError> {
        let idx = check_chunk(message, index)?;
        self.received[idx.as_usize()] = Some(message.to_vec());
        Ok(())
    }

    pub fn get_message_received(&self, index: usize) -> Result<&[u8], StorageError> {
        read(&self.received, index)
    }

    /// Replaces the outgoing array with the fragments of `message`, stored
    /// densely from index 0. Returns the chunk count.
    pub fn load_outgoing(&mut self, message: &[u8]) -> Result<usize, StorageError> {
        let chunks = fragment(message)?;
        self.to_send.iter_mut().for_each(|s| *s = None);
        for (i, c) in chunks.iter().enumerate() {
            self.to_send[i] = Some(c.clone());
        }
        Ok(chunks.len())
    }

    /// Replaces the outgoing array with pre-framed chunks.
    pub fn load_chunks<C: AsRef<[u8]>>(&mut self, chunks: &[C]) -> Result<usize, StorageError> {
        if chunks.len() > MAX_CHUNKS {
            return Err(StorageError::IndexOutOfRange(chunks.len() - 1));
        }
        if let Some(c) = chunks.iter().find(|c| c.as_ref().len() > MAX_CHUNK) {
            return Err(StorageError::ChunkTooLarge(c.as_ref().len()));
        }
        self.to_send.iter_mut().for_each(|s| *s = None);
        for (i, c) in chunks.iter().enumerate() {
            self.to_send[i] = Some(c.as_ref().to_vec());
        }
        Ok(chunks.len())
    }

    /// Number of populated slots at the start of the outgoing array.
    pub fn outgoing_len(&self) -> usize {
        self.to_send.iter().take_while(|s| s.is_some()).count()
    }

    pub fn clear_received(&mut self) {
        self.received.iter_mut().for_each(|s| *s = None);
    }

    /// Concatenates received chunks `0..n`.
    pub fn received_message(&self, n: usize) -> Result<Vec<u8>, StorageError> {
        let mut out = Vec::new();
        for i in 0..n {
            out.extend_from_slice(self.get_message_received(i)?);
        }
        Ok(out)
    }
}

pub use crate::roleswitch::transfer_message;
