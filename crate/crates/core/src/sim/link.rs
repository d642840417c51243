use std::collections::VecDeque;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::LinkError;
use crate::runtime::{Interval, PowerState, TimingModel};
use crate::time::{SimDuration, SimTime};

use super::apdu::{ApduCommand, ApduResponse, SW_SUCCESS};
use super::clock::{EventHandle, SimClock};
use super::trace::TraceLog;

macro_rules! trace_event {
    ($link:expr, $device:expr, $kind:expr, $($arg:tt)*) => {
        if $link.tracing() {
            let detail = format!($($arg)*);
            $link.log($device, $kind, detail);
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub u8);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "device{}", self.0)
    }
}

/// Stable NFC role of a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Idle,
    EmulatedCard,
    CardReader,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Idle => "idle",
            Role::EmulatedCard => "emulated_card",
            Role::CardReader => "card_reader",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleState {
    Idle,
    EmulatedCard,
    CardReader,
    SwitchingToReader { ready_at: SimTime },
    SwitchingToCard { ready_at: SimTime },
}

impl RoleState {
    fn stable(role: Role) -> Self {
        match role {
            Role::Idle => RoleState::Idle,
            Role::EmulatedCard => RoleState::EmulatedCard,
            Role::CardReader => RoleState::CardReader,
        }
    }

    pub fn is_switching(self) -> bool {
        matches!(
            self,
            RoleState::SwitchingToReader { .. } | RoleState::SwitchingToCard { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    /// The reader is polling; detection has not fired yet.
    Detecting,
    Active,
    Lost,
}

#[derive(Debug)]
struct InFlight {
    command: ApduCommand,
    sent_at: SimTime,
    pending: EventHandle,
    responded: bool,
}

#[derive(Debug)]
pub struct LinkSession {
    reader: DeviceId,
    card: DeviceId,
    established_at: Option<SimTime>,
    state: SessionState,
    in_flight: Option<InFlight>,
}

impl LinkSession {
    pub fn reader(&self) -> DeviceId {
        self.reader
    }

    pub fn card(&self) -> DeviceId {
        self.card
    }

    pub fn established_at(&self) -> Option<SimTime> {
        self.established_at
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn has_exchange_in_flight(&self) -> bool {
        self.in_flight.is_some()
    }
}

/// Delivered to the card-side device when its link breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeactivationEvent {
    pub session: SessionId,
    pub card: DeviceId,
    pub at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Time for a polling reader to find a card already in the field.
    pub detection_latency: SimDuration,
    /// Time for a command to reach the card after the reader sends it.
    pub command_latency: SimDuration,
    pub status_word: [u8; 2],
    pub timing: TimingModel,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            detection_latency: SimDuration::from_millis(10),
            command_latency: SimDuration::from_millis(60),
            status_word: SW_SUCCESS,
            timing: TimingModel::default(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.timing.validate()?;
        if self.command_latency > self.timing.overhead {
            return Err(format!(
                "command latency {} exceeds the fixed APDU overhead {}",
                self.command_latency, self.timing.overhead
            ));
        }
        Ok(())
    }
}

/// Something the driver of the simulation has to react to.
#[derive(Debug, Clone, PartialEq)]
pub enum Notice {
    Connected {
        session: SessionId,
        reader: DeviceId,
        card: DeviceId,
    },
    ConnectFailed {
        session: SessionId,
        reader: DeviceId,
        card: DeviceId,
        error: LinkError,
    },
    /// The card-side handler must answer with [`LinkSim::respond`].
    CommandReceived {
        session: SessionId,
        card: DeviceId,
        command: ApduCommand,
    },
    ResponseReceived {
        session: SessionId,
        reader: DeviceId,
        response: ApduResponse,
        sent_at: SimTime,
    },
    ExchangeFailed {
        session: SessionId,
        reader: DeviceId,
        error: LinkError,
    },
    Deactivated(DeactivationEvent),
    RoleReady {
        device: DeviceId,
        role: Role,
    },
    Timer {
        device: DeviceId,
        tag: u64,
    },
}

#[derive(Debug)]
enum Event {
    Detect(SessionId),
    CommandArrives(SessionId),
    ResponseArrives(SessionId, ApduResponse),
    ExchangeAborted(SessionId),
    Deactivation(SessionId),
    RoleReady(DeviceId, Role),
    Timer(DeviceId, u64),
}

#[derive(Debug)]
struct Device {
    name: String,
    state: RoleState,
}

/// The shared radio medium between devices: one event clock, the devices'
/// role states and every link session opened during the run.
#[derive(Debug)]
pub struct LinkSim {
    clock: SimClock<Event>,
    config: LinkConfig,
    devices: Vec<Device>,
    sessions: Vec<LinkSession>,
    jitter: Option<ChaCha8Rng>,
    trace: TraceLog,
    intervals: Vec<Interval>,
    pending: VecDeque<Notice>,
}

impl LinkSim {
    pub fn new(config: LinkConfig) -> Self {
        LinkSim {
            clock: SimClock::new(),
            config,
            devices: Vec::new(),
            sessions: Vec::new(),
            jitter: None,
            trace: TraceLog::disabled(),
            intervals: Vec::new(),
            pending: VecDeque::new(),
        }
    }

    /// Enables T_APDU jitter, drawn from `rng`.
    pub fn with_jitter(mut self, rng: ChaCha8Rng) -> Self {
        self.jitter = Some(rng);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = TraceLog::enabled();
        self
    }

    pub fn add_device(&mut self, name: impl Into<String>, role: Role) -> DeviceId {
        let id = DeviceId(self.devices.len() as u8);
        self.devices.push(Device {
            name: name.into(),
            state: RoleState::stable(role),
        });
        id
    }

    pub fn now(&self) -> SimTime {
        self.clock.now()
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn device_name(&self, id: DeviceId) -> &str {
        self.devices.get(id.0 as usize).map_or("?", |d| d.name.as_str())
    }

    pub fn role_state(&self, id: DeviceId) -> Result<RoleState, LinkError> {
        Ok(self.device(id)?.state)
    }

    pub fn session(&self, id: SessionId) -> Option<&LinkSession> {
        self.sessions.get(id.0 as usize)
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn take_trace(&mut self) -> TraceLog {
        std::mem::replace(&mut self.trace, TraceLog::disabled())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn take_intervals(&mut self) -> Vec<Interval> {
        std::mem::take(&mut self.intervals)
    }

    pub fn record_interval(&mut self, device: DeviceId, state: PowerState, start: SimTime, end: SimTime) {
        if end > start {
            self.intervals.push(Interval {
                device,
                state,
                start,
                end,
            });
        }
    }

    /// Covers every part of `[0, end)` on each device not already accounted
    /// for with `state`.
    pub fn fill_interval_gaps(&mut self, end: SimTime, state: PowerState) {
        for d in 0..self.devices.len() {
            let device = DeviceId(d as u8);
            let mut own: Vec<(SimTime, SimTime)> = self
                .intervals
                .iter()
                .filter(|iv| iv.device == device)
                .map(|iv| (iv.start, iv.end))
                .collect();
            own.sort();
            let mut cursor = SimTime::ZERO;
            let mut gaps = Vec::new();
            for (s, e) in own {
                if s > cursor {
                    gaps.push((cursor, s.min(end)));
                }
                cursor = cursor.max(e);
            }
            if end > cursor {
                gaps.push((cursor, end));
            }
            for (s, e) in gaps {
                self.record_interval(device, state, s, e);
            }
        }
        self.intervals.sort_by_key(|iv| (iv.start, iv.device));
    }

    pub fn set_timer(&mut self, device: DeviceId, at: SimTime, tag: u64) -> Result<EventHandle, LinkError> {
        self.device(device)?;
        Ok(self.clock.schedule(at, Event::Timer(device, tag))?)
    }

    pub fn cancel_timer(&mut self, handle: EventHandle) -> bool {
        self.clock.cancel(handle)
    }

    /// Starts polling for `card`. The outcome arrives as `Connected` or
    /// `ConnectFailed` once the detection latency has elapsed.
    pub fn establish_connection(&mut self, reader: DeviceId, card: DeviceId) -> Result<SessionId, LinkError> {
        if reader == card {
            return Err(LinkError::SameDevice);
        }
        if self.device(reader)?.state != RoleState::CardReader {
            return Err(LinkError::RoleViolation(self.device_name(reader).to_string()));
        }
        self.device(card)?;
        let id = SessionId(self.sessions.len() as u32);
        self.sessions.push(LinkSession {
            reader,
            card,
            established_at: None,
            state: SessionState::Detecting,
            in_flight: None,
        });
        let at = self.now() + self.config.detection_latency;
        self.clock.schedule(at, Event::Detect(id))?;
        trace_event!(self, reader, "poll", "session={} card={}", id.0, self.device_name(card));
        Ok(id)
    }

    /// Sends `command` on an active session. The card sees it after the
    /// command latency; the reader later gets `ResponseReceived` or
    /// `ExchangeFailed`.
    pub fn exchange_apdu(&mut self, session: SessionId, command: ApduCommand) -> Result<(), LinkError> {
        let now = self.now();
        let s = self.session_ref(session)?;
        match s.state {
            SessionState::Active => {}
            SessionState::Lost => return Err(LinkError::TagLost),
            SessionState::Detecting => return Err(LinkError::NotActive),
        }
        if s.in_flight.is_some() {
            return Err(LinkError::Busy);
        }
        let (reader, card) = (s.reader, s.card);
        self.check_roles(reader, card)?;
        let detail = self
            .tracing()
            .then(|| format!("session={} aid={}", session.0, String::from_utf8_lossy(command.aid())));
        let pending = self
            .clock
            .schedule(now + self.config.command_latency, Event::CommandArrives(session))?;
        self.sessions[session.0 as usize].in_flight = Some(InFlight {
            command,
            sent_at: now,
            pending,
            responded: false,
        });
        if let Some(detail) = detail {
            self.log(reader, "command_sent", detail);
        }
        Ok(())
    }

    /// Card-side answer to the command most recently delivered on `session`.
    pub fn respond(&mut self, session: SessionId, response: ApduResponse) -> Result<(), LinkError> {
        let now = self.now();
        let s = self.session_ref(session)?;
        if s.state != SessionState::Active {
            return Err(LinkError::TagLost);
        }
        let Some(fl) = s.in_flight.as_ref() else {
            return Err(LinkError::NotActive);
        };
        if fl.responded {
            return Err(LinkError::Busy);
        }
        let sent_at = fl.sent_at;
        let card = s.card;
        let len = response.payload().len();
        let exchange = self.config.timing.sample(len, self.jitter.as_mut());
        let at = (sent_at + exchange).max(now);
        let handle = self.clock.schedule(at, Event::ResponseArrives(session, response))?;
        let fl = self.sessions[session.0 as usize].in_flight.as_mut().expect("checked above");
        fl.pending = handle;
        fl.responded = true;
        trace_event!(self, card, "response_sent", "session={} len={} arrives={}", session.0, len, at.as_micros());
        Ok(())
    }

    /// Drops the link. Any in-flight exchange resolves to `TagLost` and the
    /// card side is notified at the current time.
    pub fn break_connection(&mut self, session: SessionId) -> Result<DeactivationEvent, LinkError> {
        let s = self.session_ref(session)?;
        match s.state {
            SessionState::Lost => return Err(LinkError::AlreadyLost),
            SessionState::Detecting => return Err(LinkError::NotActive),
            SessionState::Active => {}
        }
        Ok(self.drop_session(session)?.expect("session was active"))
    }

    /// Starts a role change on `device`. Card-side sessions break at once;
    /// reader-side sessions break when the new role becomes ready.
    pub fn begin_switch(&mut self, device: DeviceId, target: Role, latency: SimDuration) -> Result<SimTime, LinkError> {
        let now = self.now();
        let current = self.device(device)?.state;
        if current.is_switching() {
            return Err(LinkError::RoleViolation(self.device_name(device).to_string()));
        }
        if current == RoleState::EmulatedCard && target != Role::EmulatedCard {
            self.drop_sessions_of(device, false)?;
        }
        let kind = match target {
            Role::CardReader => "reader_enable",
            Role::EmulatedCard => "reader_disable",
            Role::Idle => "radio_idle",
        };
        let ready_at = now + latency;
        trace_event!(self, device, kind, "ready_at={}", ready_at.as_micros());
        let dev = &mut self.devices[device.0 as usize];
        dev.state = if latency == SimDuration::ZERO {
            RoleState::stable(target)
        } else {
            match target {
                Role::CardReader => RoleState::SwitchingToReader { ready_at },
                _ => RoleState::SwitchingToCard { ready_at },
            }
        };
        if latency == SimDuration::ZERO && current == RoleState::CardReader && target != Role::CardReader {
            self.drop_sessions_of(device, true)?;
        }
        self.clock.schedule(ready_at, Event::RoleReady(device, target))?;
        Ok(ready_at)
    }

    /// Sets a role without any latency or notification. Meant for scenario
    /// setup before the run starts.
    pub fn set_role(&mut self, device: DeviceId, role: Role) -> Result<(), LinkError> {
        self.device(device)?;
        self.devices[device.0 as usize].state = RoleState::stable(role);
        Ok(())
    }

    /// Adds a driver-level line to the trace at the current time.
    pub fn note(&mut self, device: DeviceId, kind: &str, detail: String) {
        self.log(device, kind, detail);
    }

    pub fn is_idle(&self) -> bool {
        self.pending.is_empty() && self.clock.is_idle()
    }

    /// Fires the next event and returns what the driver needs to know about
    /// it, or `None` once nothing is left to happen.
    pub fn step(&mut self) -> Option<Notice> {
        if let Some(n) = self.pending.pop_front() {
            return Some(n);
        }
        loop {
            let (_, _, ev) = self.clock.pop()?;
            if let Some(n) = self.fire(ev) {
                return Some(n);
            }
        }
    }

    /// Runs one exchange to completion, answering the command with
    /// `handler`. Other notices raised meanwhile are kept for `step`.
    pub fn exchange_with<F>(&mut self, session: SessionId, command: ApduCommand, mut handler: F) -> Result<ApduResponse, LinkError>
    where
        F: FnMut(&ApduCommand) -> ApduResponse,
    {
        self.exchange_apdu(session, command)?;
        let mut held = VecDeque::new();
        let result = loop {
            let Some((_, _, ev)) = self.clock.pop() else {
                break Err(LinkError::TagLost);
            };
            match self.fire(ev) {
                Some(Notice::CommandReceived {
                    session: s,
                    command,
                    ..
                }) if s == session => {
                    let response = handler(&command);
                    if let Err(e) = self.respond(session, response) {
                        break Err(e);
                    }
                }
                Some(Notice::ResponseReceived {
                    session: s, response, ..
                }) if s == session => break Ok(response),
                Some(Notice::ExchangeFailed { session: s, error, .. }) if s == session => break Err(error),
                Some(other) => held.push_back(other),
                None => {}
            }
        };
        held.extend(self.pending.drain(..));
        self.pending = held;
        result
    }

    fn fire(&mut self, ev: Event) -> Option<Notice> {
        match ev {
            Event::Detect(id) => {
                let (reader, card, state) = {
                    let s = &self.sessions[id.0 as usize];
                    (s.reader, s.card, s.state)
                };
                let ok = state == SessionState::Detecting && self.check_roles(reader, card).is_ok();
                if ok {
                    let now = self.now();
                    let s = &mut self.sessions[id.0 as usize];
                    s.state = SessionState::Active;
                    s.established_at = Some(now);
                    trace_event!(self, reader, "connected", "session={} card={}", id.0, self.device_name(card));
                    Some(Notice::Connected { session: id, reader, card })
                } else {
                    self.sessions[id.0 as usize].state = SessionState::Lost;
                    trace_event!(self, reader, "no_card", "session={}", id.0);
                    Some(Notice::ConnectFailed {
                        session: id,
                        reader,
                        card,
                        error: LinkError::NoCardInField,
                    })
                }
            }
            Event::CommandArrives(id) => {
                let s = &self.sessions[id.0 as usize];
                let card = s.card;
                let command = s.in_flight.as_ref()?.command.clone();
                trace_event!(self, card, "command_received", "session={} index={}", id.0, command.chunk_index());
                Some(Notice::CommandReceived {
                    session: id,
                    card,
                    command,
                })
            }
            Event::ResponseArrives(id, response) => {
                let (reader, card) = {
                    let s = &self.sessions[id.0 as usize];
                    (s.reader, s.card)
                };
                if self.check_roles(reader, card).is_err() {
                    // the role change has not torn the session down yet
                    let _ = self.drop_session(id);
                    return self.fire_abort(id, reader, card);
                }
                let fl = self.sessions[id.0 as usize].in_flight.take()?;
                let now = self.now();
                self.record_interval(reader, PowerState::NfcTransfer, fl.sent_at, now);
                self.record_interval(card, PowerState::NfcTransfer, fl.sent_at, now);
                trace_event!(self, reader, "response_received", "session={} len={}", id.0, response.payload().len());
                Some(Notice::ResponseReceived {
                    session: id,
                    reader,
                    response,
                    sent_at: fl.sent_at,
                })
            }
            Event::ExchangeAborted(id) => {
                let (reader, card) = {
                    let s = &self.sessions[id.0 as usize];
                    (s.reader, s.card)
                };
                self.fire_abort(id, reader, card)
            }
            Event::Deactivation(id) => {
                let card = self.sessions[id.0 as usize].card;
                trace_event!(self, card, "deactivated", "session={}", id.0);
                Some(Notice::Deactivated(DeactivationEvent {
                    session: id,
                    card,
                    at: self.now(),
                }))
            }
            Event::RoleReady(device, role) => {
                let was = self.devices[device.0 as usize].state;
                if !was.is_switching() && was != RoleState::stable(role) {
                    return None;
                }
                self.devices[device.0 as usize].state = RoleState::stable(role);
                if role != Role::CardReader {
                    // field goes off: links this device was reading break now
                    let _ = self.drop_sessions_of(device, true);
                }
                trace_event!(self, device, "role_ready", "{}", role.as_str());
                Some(Notice::RoleReady { device, role })
            }
            Event::Timer(device, tag) => {
                trace_event!(self, device, "timer", "tag={tag}");
                Some(Notice::Timer { device, tag })
            }
        }
    }

    fn fire_abort(&mut self, id: SessionId, reader: DeviceId, card: DeviceId) -> Option<Notice> {
        let fl = self.sessions[id.0 as usize].in_flight.take()?;
        let now = self.now();
        self.record_interval(reader, PowerState::NfcTransfer, fl.sent_at, now);
        self.record_interval(card, PowerState::NfcTransfer, fl.sent_at, now);
        trace_event!(self, reader, "tag_lost", "session={}", id.0);
        Some(Notice::ExchangeFailed {
            session: id,
            reader,
            error: LinkError::TagLost,
        })
    }

    /// Marks the session lost, cancels whatever was pending on its exchange
    /// and queues the abort and deactivation at the current time.
    fn drop_session(&mut self, id: SessionId) -> Result<Option<DeactivationEvent>, LinkError> {
        let now = self.now();
        let s = &mut self.sessions[id.0 as usize];
        let was = s.state;
        s.state = SessionState::Lost;
        if was != SessionState::Active {
            return Ok(None);
        }
        let card = s.card;
        if let Some(fl) = s.in_flight.as_ref() {
            let pending = fl.pending;
            self.clock.cancel(pending);
            let handle = self.clock.schedule(now, Event::ExchangeAborted(id))?;
            if let Some(fl) = self.sessions[id.0 as usize].in_flight.as_mut() {
                fl.pending = handle;
            }
        }
        self.clock.schedule(now, Event::Deactivation(id))?;
        trace_event!(self, card, "link_lost", "session={}", id.0);
        Ok(Some(DeactivationEvent { session: id, card, at: now }))
    }

    fn drop_sessions_of(&mut self, device: DeviceId, as_reader: bool) -> Result<(), LinkError> {
        let ids: Vec<SessionId> = self
            .sessions
            .iter()
            .enumerate()
            .filter(|(_, s)| s.state != SessionState::Lost)
            .filter(|(_, s)| if as_reader { s.reader == device } else { s.card == device })
            .map(|(i, _)| SessionId(i as u32))
            .collect();
        for id in ids {
            self.drop_session(id)?;
        }
        Ok(())
    }

    fn check_roles(&self, reader: DeviceId, card: DeviceId) -> Result<(), LinkError> {
        if self.device(reader)?.state != RoleState::CardReader {
            return Err(LinkError::RoleViolation(self.device_name(reader).to_string()));
        }
        if self.device(card)?.state != RoleState::EmulatedCard {
            return Err(LinkError::NoCardInField);
        }
        Ok(())
    }

    fn device(&self, id: DeviceId) -> Result<&Device, LinkError> {
        self.devices.get(id.0 as usize).ok_or(LinkError::UnknownDevice(id.0))
    }

    fn session_ref(&self, id: SessionId) -> Result<&LinkSession, LinkError> {
        self.sessions.get(id.0 as usize).ok_or(LinkError::NotActive)
    }

    fn tracing(&self) -> bool {
        self.trace.is_enabled() || log::log_enabled!(log::Level::Trace)
    }

    fn log(&mut self, device: DeviceId, kind: &str, detail: String) {
        if self.tracing() {
            let now = self.now();
            let name = self.device_name(device).to_string();
            self.trace.push(now, &name, kind, &detail);
        }
    }
}
