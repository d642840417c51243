//! Event-driven simulation core and the half-duplex NFC link.

pub mod apdu;
pub mod clock;
pub mod link;
pub mod trace;

pub use apdu::{ApduCommand, ApduResponse, SELECT_HEADER, SW_FILE_NOT_FOUND, SW_SUCCESS};
pub use clock::{EventHandle, SimClock};
pub use link::{
    DeactivationEvent, DeviceId, LinkConfig, LinkSession, LinkSim, Notice, Role, RoleState, SessionId, SessionState,
};
pub use trace::{TraceLine, TraceLog};
