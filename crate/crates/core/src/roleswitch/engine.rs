use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ProtocolError, StorageError};
use crate::rng::{self, substream};
use crate::runtime::{Interval, PowerState};
use crate::sim::{ApduCommand, ApduResponse, DeviceId, LinkSim, Notice, Role, RoleState, SessionId, SW_FILE_NOT_FOUND};
use crate::time::{SimDuration, SimTime};
use crate::transfer::{ChunkIndex, MessageStorage, DEFAULT_BASE_AID};

use super::{per_switch_probability, Outcome, ProtocolConfig, ProtocolVariant, Simulation};

/// The device that starts as the emulated card and sends the first message.
pub const MAIN: DeviceId = DeviceId(0);
/// The device that starts as the reader.
pub const OFFLOADEE: DeviceId = DeviceId(1);

const TIMER_DISABLE: u64 = 1;
const TIMER_ENABLE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// Fragmented into 2 KB chunks on loading.
    Message(Vec<u8>),
    /// Pre-framed chunks, stored as given.
    Chunks(Vec<Vec<u8>>),
}

/// One direction of a conversation: the sender serves `payload` as an
/// emulated card and the peer reads it chunk by chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leg {
    pub payload: Payload,
    /// Computation the sender performs before it can serve the payload.
    pub work: SimDuration,
    /// No reply follows this leg.
    pub last: bool,
}

impl Leg {
    pub fn message(message: Vec<u8>, work: SimDuration, last: bool) -> Self {
        Leg {
            payload: Payload::Message(message),
            work,
            last,
        }
    }

    pub fn chunks(chunks: Vec<Vec<u8>>, work: SimDuration, last: bool) -> Self {
        Leg {
            payload: Payload::Chunks(chunks),
            work,
            last,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegRecord {
    pub sender: DeviceId,
    pub first_command_at: SimTime,
    pub last_response_at: SimTime,
    pub bytes: usize,
    pub chunks: usize,
}

/// Full record of a conversation run.
#[derive(Debug, Clone)]
pub struct Conversation {
    pub outcome: Outcome,
    pub legs: Vec<LegRecord>,
    pub switch_count: u32,
    pub end: SimTime,
    pub intervals: Vec<Interval>,
    pub trace: crate::sim::TraceLog,
    pub out_of_calibration: bool,
}

impl Conversation {
    pub fn bytes_transferred(&self) -> u64 {
        self.legs.iter().map(|l| l.bytes as u64).sum()
    }

    /// From the first command of the first leg to the last response of the
    /// last completed leg.
    pub fn latency(&self) -> SimDuration {
        match (self.legs.first(), self.legs.last()) {
            (Some(a), Some(b)) => b.last_response_at.since(a.first_command_at),
            _ => SimDuration::ZERO,
        }
    }

    pub fn intervals_of(&self, device: DeviceId) -> Vec<Interval> {
        self.intervals.iter().filter(|iv| iv.device == device).cloned().collect()
    }
}

struct Engine<'a, H> {
    link: LinkSim,
    config: &'a ProtocolConfig,
    sim: &'a Simulation,
    handler: H,
    storages: [MessageStorage; 2],
    reader: DeviceId,
    card: DeviceId,
    session: Option<SessionId>,
    chunks: usize,
    next: usize,
    leg_index: usize,
    leg_last: bool,
    leg_start: Option<SimTime>,
    leg_bytes: usize,
    enable_at: Option<SimTime>,
    switching: bool,
    rearm_scheduled: bool,
    next_leg_last: bool,
    stages: Vec<f64>,
    readiness_rng: Option<ChaCha8Rng>,
    switch_count: u32,
    legs: Vec<LegRecord>,
    outcome: Option<Outcome>,
}

/// Runs legs back and forth between two devices over one of the
/// role-switching protocols until `handler` returns no further leg or a
/// switch fails.
///
/// `handler(i, chunks)` is called on the reader of leg `i` with the chunks it
/// read, and returns the leg it sends back.
pub fn converse<H>(config: &ProtocolConfig, sim: &Simulation, first: Leg, handler: H) -> Result<Conversation, ProtocolError>
where
    H: FnMut(usize, Vec<Vec<u8>>) -> Result<Option<Leg>, ProtocolError>,
{
    if !config.variant.is_role_switching() {
        return Err(ProtocolError::WrongVariant(config.variant.as_str()));
    }
    sim.validate()?;
    let mut link = LinkSim::new(sim.link);
    if sim.trace {
        link = link.with_trace();
    }
    let mut stages = Vec::new();
    let mut readiness_rng = None;
    let mut out_of_calibration = false;
    if let Some(model) = &sim.readiness {
        let p = per_switch_probability(model, config);
        if p.out_of_range {
            log::warn!("delays of {} lie outside the calibrated range", config.variant);
        }
        out_of_calibration = p.out_of_range;
        stages = p.stages;
        readiness_rng = Some(substream(sim.seed, rng::READINESS, sim.repeat));
        if sim.link.timing.jitter > SimDuration::ZERO {
            link = link.with_jitter(substream(sim.seed, rng::JITTER, sim.repeat));
        }
    }
    let main = link.add_device("main", Role::EmulatedCard);
    let offloadee = link.add_device("offloadee", Role::CardReader);
    debug_assert_eq!((main, offloadee), (MAIN, OFFLOADEE));

    let mut engine = Engine {
        link,
        config,
        sim,
        handler,
        storages: [MessageStorage::new(), MessageStorage::new()],
        reader: OFFLOADEE,
        card: MAIN,
        session: None,
        chunks: 0,
        next: 0,
        leg_index: 0,
        leg_last: first.last,
        leg_start: None,
        leg_bytes: 0,
        enable_at: None,
        switching: false,
        rearm_scheduled: false,
        next_leg_last: false,
        stages,
        readiness_rng,
        switch_count: 0,
        legs: Vec::new(),
        outcome: None,
    };
    engine.chunks = engine.load(MAIN, first.payload)?;
    engine.session = Some(engine.link.establish_connection(OFFLOADEE, MAIN)?);
    let end = engine.run()?;
    engine.link.fill_interval_gaps(end, PowerState::Switching);
    Ok(Conversation {
        outcome: engine.outcome.unwrap_or(Outcome::Success),
        legs: engine.legs,
        switch_count: engine.switch_count,
        end,
        intervals: engine.link.take_intervals(),
        trace: engine.link.take_trace(),
        out_of_calibration,
    })
}

impl<H> Engine<'_, H>
where
    H: FnMut(usize, Vec<Vec<u8>>) -> Result<Option<Leg>, ProtocolError>,
{
    fn load(&mut self, device: DeviceId, payload: Payload) -> Result<usize, ProtocolError> {
        let storage = &mut self.storages[device.0 as usize];
        let n = match payload {
            Payload::Message(m) => storage.load_outgoing(&m)?,
            Payload::Chunks(c) if c.is_empty() => return Err(ProtocolError::EmptyPayload),
            Payload::Chunks(c) => storage.load_chunks(&c)?,
        };
        Ok(n)
    }

    fn run(&mut self) -> Result<SimTime, ProtocolError> {
        while let Some(notice) = self.link.step() {
            self.handle(notice)?;
            if self.outcome.is_some() {
                return Ok(self.link.now());
            }
        }
        Err(ProtocolError::InvalidConfig("simulation stalled before the conversation ended".into()))
    }

    fn fail(&mut self, k: u32, why: &str) {
        self.link.note(self.reader, "switch_failed", format!("k={k} {why}"));
        self.outcome = Some(Outcome::FailedAtSwitch(k));
    }

    fn send_next(&mut self) -> Result<(), ProtocolError> {
        let Some(session) = self.session else {
            return Ok(());
        };
        let command = ApduCommand::select_chunk(DEFAULT_BASE_AID, ChunkIndex::new(self.next)?)?;
        self.link.exchange_apdu(session, command)?;
        if self.leg_start.is_none() {
            self.leg_start = Some(self.link.now());
        }
        Ok(())
    }

    fn handle(&mut self, notice: Notice) -> Result<(), ProtocolError> {
        match notice {
            Notice::Connected { session, .. } if Some(session) == self.session => self.send_next(),
            Notice::ConnectFailed { session, .. } if Some(session) == self.session => {
                self.fail(self.switch_count.max(1), "no card in field");
                Ok(())
            }
            Notice::CommandReceived { session, card, command } => self.serve(session, card, &command),
            Notice::ResponseReceived { session, response, .. } if Some(session) == self.session => {
                self.receive(response)
            }
            Notice::ExchangeFailed { session, .. } if Some(session) == self.session => {
                self.fail(self.switch_count + 1, "tag lost");
                Ok(())
            }
            Notice::Deactivated(ev) => {
                let de = self.config.variant == ProtocolVariant::DisablingEnabling;
                if de && self.switching && ev.card == self.card && !self.rearm_scheduled {
                    self.rearm_scheduled = true;
                    let at = self.link.now() + self.config.t();
                    self.link.set_timer(self.card, at, TIMER_ENABLE)?;
                }
                Ok(())
            }
            Notice::Timer { device, tag } => {
                let hw = &self.sim.hardware;
                match tag {
                    TIMER_DISABLE => self.link.begin_switch(device, Role::EmulatedCard, hw.reader_disable)?,
                    TIMER_ENABLE => self.link.begin_switch(device, Role::CardReader, hw.reader_enable)?,
                    _ => return Ok(()),
                };
                Ok(())
            }
            Notice::RoleReady { .. } => self.maybe_reconnect(),
            _ => Ok(()),
        }
    }

    /// Card side: answer a SELECT with the requested chunk.
    fn serve(&mut self, session: SessionId, card: DeviceId, command: &ApduCommand) -> Result<(), ProtocolError> {
        let index = command.chunk_index().as_usize();
        let response = match self.storages[card.0 as usize].get_message_to_send(index) {
            Ok(chunk) => ApduResponse::new(chunk.to_vec(), self.sim.link.status_word)?,
            Err(_) => ApduResponse::new(Vec::new(), SW_FILE_NOT_FOUND)?,
        };
        let ed = self.config.variant == ProtocolVariant::EnablingDisabling;
        if ed && index + 1 == self.chunks && !self.leg_last {
            // scheduled ahead of the response so a tie enables first
            let at = self.link.now() + self.config.t1();
            self.link.set_timer(card, at, TIMER_ENABLE)?;
            self.enable_at = Some(at);
        }
        match self.link.respond(session, response) {
            Ok(()) => Ok(()),
            Err(e) => {
                log::debug!("card could not respond: {e}");
                Ok(())
            }
        }
    }

    /// Reader side: store the chunk and either continue reading or finish
    /// the leg.
    fn receive(&mut self, response: ApduResponse) -> Result<(), ProtocolError> {
        if response.status_word() != self.sim.link.status_word {
            return Err(StorageError::CorruptResponse(response.status_word()).into());
        }
        self.leg_bytes += response.payload().len();
        self.storages[self.reader.0 as usize].set_message_received(response.payload(), self.next)?;
        self.next += 1;
        if self.next < self.chunks {
            return self.send_next();
        }
        let now = self.link.now();
        self.legs.push(LegRecord {
            sender: self.card,
            first_command_at: self.leg_start.unwrap_or(now),
            last_response_at: now,
            bytes: self.leg_bytes,
            chunks: self.chunks,
        });
        let storage = &self.storages[self.reader.0 as usize];
        let chunks = (0..self.chunks)
            .map(|i| storage.get_message_received(i).map(<[u8]>::to_vec))
            .collect::<Result<Vec<_>, _>>()?;
        match (self.handler)(self.leg_index, chunks)? {
            None => {
                self.outcome = Some(Outcome::Success);
                Ok(())
            }
            Some(leg) => self.start_switch(leg),
        }
    }

    fn start_switch(&mut self, leg: Leg) -> Result<(), ProtocolError> {
        self.switch_count += 1;
        let k = self.switch_count;
        let hw = self.sim.hardware;
        let structural_ok = match self.config.variant {
            ProtocolVariant::DisablingEnabling => self.config.t() >= hw.rearm_min,
            _ => self.config.t2() >= hw.handover_min,
        };
        if !structural_ok {
            self.fail(k, "delay below hardware limit");
            return Ok(());
        }
        if let Some(rng) = self.readiness_rng.as_mut() {
            let draws: Vec<bool> = self.stages.iter().map(|&p| rng.gen::<f64>() < p).collect();
            if draws.contains(&false) {
                self.fail(k, "device not ready");
                return Ok(());
            }
        }
        let now = self.link.now();
        let ready = now + leg.work;
        self.link.record_interval(self.reader, PowerState::Compute, now, ready);
        self.link.record_interval(self.card, PowerState::Idle, now, ready);
        self.next_leg_last = leg.last;
        let sender = self.reader;
        let chunks = self.load(sender, leg.payload)?;
        self.chunks = chunks;
        if self.config.variant == ProtocolVariant::EnablingDisabling && self.enable_at.is_none() {
            self.link.set_timer(self.card, now, TIMER_ENABLE)?;
            self.enable_at = Some(now);
        }
        let disable_at = match self.config.variant {
            ProtocolVariant::DisablingEnabling => ready,
            _ => ready.max(self.enable_at.unwrap_or(now)) + self.config.t2(),
        };
        self.link.set_timer(self.reader, disable_at, TIMER_DISABLE)?;
        self.switching = true;
        self.rearm_scheduled = false;
        Ok(())
    }

    fn maybe_reconnect(&mut self) -> Result<(), ProtocolError> {
        if !self.switching {
            return Ok(());
        }
        let old_reader = self.link.role_state(self.reader)?;
        let old_card = self.link.role_state(self.card)?;
        if old_reader != RoleState::EmulatedCard || old_card != RoleState::CardReader {
            return Ok(());
        }
        std::mem::swap(&mut self.reader, &mut self.card);
        self.switching = false;
        self.leg_index += 1;
        self.leg_last = self.next_leg_last;
        self.leg_start = None;
        self.leg_bytes = 0;
        self.next = 0;
        self.enable_at = None;
        self.storages[self.reader.0 as usize].clear_received();
        self.session = Some(self.link.establish_connection(self.reader, self.card)?);
        Ok(())
    }
}
