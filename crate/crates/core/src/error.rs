use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cannot schedule at {at}us, clock is already at {now}us")]
    SchedulingInPast { at: SimTime, now: SimTime },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("no emulated card in the field")]
    NoCardInField,
    /// Mirrors `android.nfc.TagLostException: Tag was lost`.
    #[error("tag was lost")]
    TagLost,
    #[error("an APDU exchange is already in flight on this session")]
    Busy,
    #[error("session is already lost")]
    AlreadyLost,
    #[error("session is not active")]
    NotActive,
    #[error("device {0} is not in the role required for this operation")]
    RoleViolation(String),
    #[error("reader and card must be distinct devices")]
    SameDevice,
    #[error("unknown device id {0}")]
    UnknownDevice(u8),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApduError {
    #[error("AID must be 5..=16 bytes, got {0}")]
    AidLength(usize),
    #[error("response payload of {0} bytes exceeds 2048")]
    PayloadTooLarge(usize),
    #[error("APDU too short ({0} bytes)")]
    Truncated(usize),
    #[error("APDU length field does not match the buffer")]
    LengthMismatch,
    #[error(transparent)]
    Aid(#[from] StorageError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("chunk of {0} bytes exceeds the 2048-byte limit")]
    ChunkTooLarge(usize),
    #[error("chunk index {0} is outside 0..=99")]
    IndexOutOfRange(usize),
    #[error("no chunk stored at index {0}")]
    EmptySlot(u8),
    #[error("message of {0} bytes needs more than 100 chunks")]
    MessageTooLarge(usize),
    #[error("AID suffix is not two decimal digits")]
    MalformedAid,
    #[error("base AID must be 3..=14 bytes, got {0}")]
    BaseAidLength(usize),
    #[error("response status word {0:02X?} does not match the expected success word")]
    CorruptResponse([u8; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("board size {0} is above the supported maximum of 16")]
    SizeTooLarge(u32),
    #[error("board size must be at least 1")]
    SizeTooSmall,
    #[error("unsupported RSA key length {0}")]
    UnsupportedKeyLength(u32),
    #[error("plaintext of {len} bytes exceeds the {max}-byte block limit")]
    PlaintextTooLong { len: usize, max: usize },
    #[error("decryption failed; key pair does not match the ciphertext")]
    KeyMismatch,
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("unknown application number {0}")]
    UnknownApplication(u8),
    #[error("framed chunk of {0} bytes exceeds 2048")]
    ChunkTooLarge(usize),
    #[error("rsa: {0}")]
    Rsa(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("payload must not be empty")]
    EmptyPayload,
    #[error("{variant} supports a single exchange cycle, requested {requested}")]
    UnsupportedByVariant { variant: &'static str, requested: u32 },
    #[error("protocol variant {0} cannot be run by this operation")]
    WrongVariant(&'static str),
    #[error("round trip count must be at least 1")]
    NoRoundTrips,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Apdu(#[from] ApduError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

impl From<SimError> for ProtocolError {
    fn from(e: SimError) -> Self {
        ProtocolError::Link(LinkError::Sim(e))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("round trip total {total_ms} ms leaves no time for switching after {n} exchanges pairs")]
    NonPositiveSwitchTime { total_ms: f64, n: u32 },
    #[error("energy trace has overlapping intervals on device {0}")]
    OverlappingIntervals(String),
    #[error("offload aborted at role switch {0}")]
    FailedAtSwitch(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}
