use rayon::prelude::*;

use crate::error::{ProtocolError, StorageError};
use crate::runtime::{bandwidth_kbps, PowerState};
use crate::sim::{ApduCommand, ApduResponse, LinkSim, Notice, Role};
use crate::time::SimDuration;
use crate::transfer::{fragment, ChunkIndex, MessageStorage, DEFAULT_BASE_AID, MAX_CHUNK};

use super::engine::{converse, Conversation, Leg};
use super::{Outcome, ProtocolConfig, ProtocolVariant, Simulation, TransferReport};

const TAP: u64 = 10;
const DELIVERED: u64 = 11;

/// Byte `i` is `leg * 131 + i * 7` mod 256, copied out of one period.
fn filler(leg: usize, len: usize) -> Vec<u8> {
    let period: [u8; 256] = std::array::from_fn(|i| (i * 7) as u8);
    // 183 is the inverse of 7 mod 256
    let mut at = (leg * 131 * 183) % 256;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let take = (256 - at).min(len - out.len());
        out.extend_from_slice(&period[at..at + take]);
        at = 0;
    }
    out
}

/// `n` round trips of one `chunk_bytes` chunk in each direction.
pub fn run_round_trips(
    config: &ProtocolConfig,
    sim: &Simulation,
    n: u32,
    chunk_bytes: usize,
) -> Result<Conversation, ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::NoRoundTrips);
    }
    if chunk_bytes == 0 {
        return Err(ProtocolError::EmptyPayload);
    }
    if chunk_bytes > MAX_CHUNK {
        return Err(StorageError::ChunkTooLarge(chunk_bytes).into());
    }
    let legs = 2 * n as usize;
    let first = Leg::message(filler(0, chunk_bytes), SimDuration::ZERO, legs == 1);
    converse(config, sim, first, |i, chunks| {
        if chunks.concat() != filler(i, chunk_bytes) {
            return Err(ProtocolError::InvalidConfig(format!("leg {i} arrived corrupted")));
        }
        let next = i + 1;
        Ok((next < legs).then(|| Leg::message(filler(next, chunk_bytes), SimDuration::ZERO, next + 1 == legs)))
    })
}

pub fn report(variant: ProtocolVariant, n: u32, chunk_bytes: usize, c: &Conversation) -> TransferReport {
    let total_time = c.end.since(crate::time::SimTime::ZERO);
    let bytes = c.bytes_transferred();
    TransferReport {
        variant,
        n_round_trips: n,
        chunk_bytes,
        total_time,
        latency: c.latency(),
        bytes_transferred: bytes,
        bandwidth_kbps: bandwidth_kbps(bytes, total_time.as_millis_f64()),
        switch_count: c.switch_count,
        outcome: c.outcome,
        out_of_calibration: c.out_of_calibration,
    }
}

fn expect_variant(config: &ProtocolConfig, variant: ProtocolVariant) -> Result<(), ProtocolError> {
    if config.variant != variant {
        return Err(ProtocolError::WrongVariant(config.variant.as_str()));
    }
    Ok(())
}

pub fn run_disabling_enabling(
    config: &ProtocolConfig,
    sim: &Simulation,
    n: u32,
    chunk_bytes: usize,
) -> Result<TransferReport, ProtocolError> {
    expect_variant(config, ProtocolVariant::DisablingEnabling)?;
    let c = run_round_trips(config, sim, n, chunk_bytes)?;
    Ok(report(config.variant, n, chunk_bytes, &c))
}

pub fn run_enabling_disabling(
    config: &ProtocolConfig,
    sim: &Simulation,
    n: u32,
    chunk_bytes: usize,
) -> Result<TransferReport, ProtocolError> {
    expect_variant(config, ProtocolVariant::EnablingDisabling)?;
    let c = run_round_trips(config, sim, n, chunk_bytes)?;
    Ok(report(config.variant, n, chunk_bytes, &c))
}

/// Dispatches on the configured variant. The tap-driven variants carry one
/// `chunk_bytes` message each way.
pub fn run_protocol(
    config: &ProtocolConfig,
    sim: &Simulation,
    n: u32,
    chunk_bytes: usize,
) -> Result<TransferReport, ProtocolError> {
    match config.variant {
        ProtocolVariant::TwoTap => run_two_tap(config, sim, &filler(0, chunk_bytes), n),
        ProtocolVariant::HceOneTap => run_hce_one_tap(config, sim, &filler(0, chunk_bytes), n),
        _ => {
            let c = run_round_trips(config, sim, n, chunk_bytes)?;
            Ok(report(config.variant, n, chunk_bytes, &c))
        }
    }
}

fn single_cycle(variant: ProtocolVariant, payload: &[u8], n: u32) -> Result<(), ProtocolError> {
    if payload.is_empty() {
        return Err(ProtocolError::EmptyPayload);
    }
    match n {
        0 => Err(ProtocolError::NoRoundTrips),
        1 => Ok(()),
        _ => Err(ProtocolError::UnsupportedByVariant {
            variant: variant.as_str(),
            requested: n,
        }),
    }
}

/// Duration of an NDEF push of `payload`, costed like the APDU chunks it
/// would need.
fn push_time(sim: &Simulation, payload: &[u8]) -> Result<SimDuration, ProtocolError> {
    Ok(fragment(payload)?
        .iter()
        .map(|c| sim.link.timing.t_apdu(c.len()))
        .sum())
}

fn tap_report(variant: ProtocolVariant, payload: &[u8], link: &LinkSim, switch_count: u32, latency: SimDuration) -> TransferReport {
    let total_time = link.now().since(crate::time::SimTime::ZERO);
    let bytes = 2 * payload.len() as u64;
    TransferReport {
        variant,
        n_round_trips: 1,
        chunk_bytes: payload.len().min(MAX_CHUNK),
        total_time,
        latency,
        bytes_transferred: bytes,
        bandwidth_kbps: bandwidth_kbps(bytes, total_time.as_millis_f64()),
        switch_count,
        outcome: Outcome::Success,
        out_of_calibration: false,
    }
}

/// Two one-way pushes, each started by a user tap: the main device sends
/// `payload`, then the offloadee sends the same amount back.
pub fn run_two_tap(config: &ProtocolConfig, sim: &Simulation, payload: &[u8], n: u32) -> Result<TransferReport, ProtocolError> {
    expect_variant(config, ProtocolVariant::TwoTap)?;
    single_cycle(config.variant, payload, n)?;
    let mut link = LinkSim::new(sim.link);
    if sim.trace {
        link = link.with_trace();
    }
    let main = link.add_device("main", Role::Idle);
    let peer = link.add_device("offloadee", Role::Idle);
    let push = push_time(sim, payload)?;
    link.set_timer(main, link.now() + config.tap_latency(), TAP)?;
    let mut first_push = None;
    let mut deliveries = 0;
    while let Some(notice) = link.step() {
        let Notice::Timer { device, tag } = notice else { continue };
        let other = if device == main { peer } else { main };
        let now = link.now();
        match tag {
            TAP => {
                first_push.get_or_insert(now);
                link.note(device, "ndef_push", format!("len={}", payload.len()));
                link.record_interval(main, PowerState::NfcTransfer, now, now + push);
                link.record_interval(peer, PowerState::NfcTransfer, now, now + push);
                link.set_timer(other, now + push, DELIVERED)?;
            }
            DELIVERED => {
                deliveries += 1;
                if deliveries == 2 {
                    break;
                }
                link.set_timer(device, now + config.tap_latency(), TAP)?;
            }
            _ => {}
        }
    }
    let latency = link.now().since(first_push.unwrap_or_default());
    Ok(tap_report(config.variant, payload, &link, 0, latency))
}

/// One tap pushes `payload`; the main device then becomes a reader and reads
/// the answer from the offloadee's emulated card.
pub fn run_hce_one_tap(config: &ProtocolConfig, sim: &Simulation, payload: &[u8], n: u32) -> Result<TransferReport, ProtocolError> {
    expect_variant(config, ProtocolVariant::HceOneTap)?;
    single_cycle(config.variant, payload, n)?;
    let mut link = LinkSim::new(sim.link);
    if sim.trace {
        link = link.with_trace();
    }
    let main = link.add_device("main", Role::Idle);
    let peer = link.add_device("offloadee", Role::Idle);
    let push = push_time(sim, payload)?;
    let mut card = MessageStorage::new();
    let chunks = card.load_outgoing(payload)?;
    let mut reader = MessageStorage::new();
    link.set_timer(main, link.now() + config.tap_latency(), TAP)?;
    let (mut session, mut next, mut first_push) = (None, 0, None);
    while let Some(notice) = link.step() {
        let now = link.now();
        match notice {
            Notice::Timer { tag: TAP, .. } => {
                first_push = Some(now);
                link.note(main, "ndef_push", format!("len={}", payload.len()));
                link.record_interval(main, PowerState::NfcTransfer, now, now + push);
                link.record_interval(peer, PowerState::NfcTransfer, now, now + push);
                link.set_timer(peer, now + push, DELIVERED)?;
            }
            Notice::Timer { tag: DELIVERED, .. } => {
                link.begin_switch(peer, Role::EmulatedCard, SimDuration::ZERO)?;
                link.begin_switch(main, Role::CardReader, sim.hardware.reader_enable)?;
            }
            Notice::RoleReady {
                device,
                role: Role::CardReader,
            } if device == main => {
                session = Some(link.establish_connection(main, peer)?);
            }
            Notice::Connected { session: s, .. } | Notice::ResponseReceived { session: s, .. }
                if Some(s) == session =>
            {
                if let Notice::ResponseReceived { response, .. } = &notice {
                    if response.status_word() != sim.link.status_word {
                        return Err(StorageError::CorruptResponse(response.status_word()).into());
                    }
                    reader.set_message_received(response.payload(), next)?;
                    next += 1;
                }
                if next == chunks {
                    break;
                }
                let cmd = ApduCommand::select_chunk(DEFAULT_BASE_AID, ChunkIndex::new(next)?)?;
                link.exchange_apdu(s, cmd)?;
            }
            Notice::CommandReceived { session: s, command, .. } => {
                let chunk = card.get_message_to_send(command.chunk_index().as_usize())?.to_vec();
                link.respond(s, ApduResponse::new(chunk, sim.link.status_word)?)?;
            }
            Notice::ConnectFailed { .. } | Notice::ExchangeFailed { .. } => {
                let mut r = tap_report(config.variant, payload, &link, 1, SimDuration::ZERO);
                r.outcome = Outcome::FailedAtSwitch(1);
                return Ok(r);
            }
            _ => {}
        }
    }
    if reader.received_message(chunks)? != payload {
        return Err(ProtocolError::InvalidConfig("read-back arrived corrupted".into()));
    }
    let latency = link.now().since(first_push.unwrap_or_default());
    Ok(tap_report(config.variant, payload, &link, 1, latency))
}

/// Fraction of `trials` independent runs that complete all `n` round trips.
/// Trial `i` uses repeat index `i`, so the result is reproducible and
/// independent of thread scheduling.
pub fn success_rate(
    config: &ProtocolConfig,
    sim: &Simulation,
    n: u32,
    chunk_bytes: usize,
    trials: u32,
) -> Result<f64, ProtocolError> {
    if trials == 0 {
        return Ok(0.0);
    }
    let ok = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let run = sim.with_repeat(sim.repeat.wrapping_mul(1_000_003).wrapping_add(i));
            run_protocol(config, &run, n, chunk_bytes).map(|r| u32::from(r.outcome.is_success()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ok as f64 / trials as f64)
}

/// Moves slots `0..n_chunks` of `sender`'s outgoing array into `receiver`'s
/// received array over one reading session.
pub fn transfer_message(
    config: &ProtocolConfig,
    sim: &Simulation,
    sender: &MessageStorage,
    receiver: &mut MessageStorage,
    n_chunks: usize,
) -> Result<TransferReport, ProtocolError> {
    if n_chunks == 0 {
        return Err(ProtocolError::EmptyPayload);
    }
    let chunks = (0..n_chunks)
        .map(|i| sender.get_message_to_send(i).map(<[u8]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut received = None;
    let c = converse(config, sim, Leg::chunks(chunks, SimDuration::ZERO, true), |_, got| {
        received = Some(got);
        Ok(None)
    })?;
    if let Some(got) = received {
        for (i, chunk) in got.iter().enumerate() {
            receiver.set_message_received(chunk, i)?;
        }
    }
    let bytes = c.bytes_transferred() as usize;
    Ok(report(config.variant, 0, bytes.min(MAX_CHUNK), &c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filler_pattern() {
        for leg in [0usize, 1, 5, 99] {
            let direct: Vec<u8> = (0..5000).map(|i| (leg * 131 + i * 7) as u8).collect();
            assert_eq!(filler(leg, 5000), direct);
        }
        assert!(filler(3, 0).is_empty());
    }
}
