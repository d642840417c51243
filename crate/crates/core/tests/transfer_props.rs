use proptest::collection::vec;
use proptest::prelude::*;

use nfcsim_core::roleswitch::{success_rate, transfer_message, ProtocolConfig, ReadinessModel, Simulation};
use nfcsim_core::sim::{ApduCommand, ApduResponse};
use nfcsim_core::transfer::{
    assemble, decode_aid, encode_aid, fragment, ChunkIndex, MessageStorage, DEFAULT_BASE_AID, MAX_CHUNK,
};
use nfcsim_core::StorageError;

#[test]
fn reassembly_examples() {
    for len in [0usize, 2048, 5000, 204_800] {
        let m: Vec<u8> = (0..len).map(|i| (i * 31 % 256) as u8).collect();
        let chunks = fragment(&m).unwrap();
        assert_eq!(chunks.len(), len.div_ceil(2048).max(1));
        assert_eq!(assemble(&chunks), m);
    }
    assert_eq!(fragment(&[0; 204_801]), Err(StorageError::MessageTooLarge(204_801)));
}

#[test]
fn every_index_round_trips_through_the_aid() {
    for i in 0..=99usize {
        let idx = ChunkIndex::new(i).unwrap();
        let aid = encode_aid(DEFAULT_BASE_AID, idx).unwrap();
        assert_eq!(&aid[aid.len() - 2..], format!("{i:02}").as_bytes());
        assert_eq!(decode_aid(&aid).unwrap(), idx);
    }
    assert!(ChunkIndex::new(100).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reassembly_identity(m in vec(any::<u8>(), 0..=204_800)) {
        let chunks = fragment(&m).unwrap();
        prop_assert!(chunks.iter().all(|c| c.len() <= MAX_CHUNK));
        prop_assert!(chunks.len() <= 100);
        prop_assert_eq!(assemble(&chunks), m);
    }

    #[test]
    fn aid_bijection(i in 0usize..=99, base in vec(any::<u8>(), 3..=14)) {
        let idx = ChunkIndex::new(i).unwrap();
        let aid = encode_aid(&base, idx).unwrap();
        prop_assert_eq!(decode_aid(&aid).unwrap(), idx);
        prop_assert_eq!(&aid[..base.len()], base.as_slice());
        let cmd = ApduCommand::select_chunk(&base, idx).unwrap();
        let parsed = ApduCommand::from_bytes(&cmd.to_bytes()).unwrap();
        prop_assert_eq!(parsed.chunk_index(), idx);
    }

    #[test]
    fn distinct_indices_give_distinct_aids(a in 0usize..=99, b in 0usize..=99) {
        let ea = encode_aid(DEFAULT_BASE_AID, ChunkIndex::new(a).unwrap()).unwrap();
        let eb = encode_aid(DEFAULT_BASE_AID, ChunkIndex::new(b).unwrap()).unwrap();
        prop_assert_eq!(a == b, ea == eb);
    }

    #[test]
    fn response_codec(payload in vec(any::<u8>(), 0..=2048)) {
        let r = ApduResponse::new(payload.clone(), [0x90, 0x00]).unwrap();
        let back = ApduResponse::from_bytes(&r.to_bytes()).unwrap();
        prop_assert_eq!(back.payload(), payload.as_slice());
    }

    #[test]
    fn end_to_end_integrity(
        m in vec(any::<u8>(), 1..=40_000),
        ed in any::<bool>(),
    ) {
        let mut sender = MessageStorage::new();
        let n = sender.load_outgoing(&m).unwrap();
        let mut receiver = MessageStorage::new();
        let cfg = if ed { ProtocolConfig::enabling_disabling(310, 100) } else { ProtocolConfig::disabling_enabling(700) };
        let r = transfer_message(&cfg, &Simulation::deterministic(), &sender, &mut receiver, n).unwrap();
        prop_assert!(r.outcome.is_success());
        prop_assert_eq!(r.bytes_transferred, m.len() as u64);
        prop_assert_eq!(receiver.received_message(n).unwrap(), m);
    }

    #[test]
    fn random_chunk_counts(sizes in vec(0usize..=2048, 1..=12), seed in any::<u64>()) {
        let mut sender = MessageStorage::new();
        let chunks: Vec<Vec<u8>> = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| (0..s).map(|j| (seed as usize ^ (i * 7 + j)) as u8).collect())
            .collect();
        sender.load_chunks(&chunks).unwrap();
        let mut receiver = MessageStorage::new();
        let sim = Simulation::deterministic().with_repeat(seed);
        transfer_message(&ProtocolConfig::default(), &sim, &sender, &mut receiver, chunks.len()).unwrap();
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(receiver.get_message_received(i).unwrap(), c.as_slice());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn success_rate_monotone_in_t(seed in any::<u64>(), lo in 675u32..720, step in 0u32..30) {
        let sim = Simulation::stochastic(ReadinessModel::calibrated(), seed);
        let a = success_rate(&ProtocolConfig::disabling_enabling(lo), &sim, 50, 2048, 200).unwrap();
        let b = success_rate(&ProtocolConfig::disabling_enabling(lo + step), &sim, 50, 2048, 200).unwrap();
        prop_assert!(a <= b, "{} at {} > {} at {}", a, lo, b, lo + step);
    }

    #[test]
    fn success_rate_monotone_in_t1(seed in any::<u64>(), lo in 250u32..320, step in 0u32..30) {
        let sim = Simulation::stochastic(ReadinessModel::calibrated(), seed);
        let a = success_rate(&ProtocolConfig::enabling_disabling(lo, 1000), &sim, 50, 2048, 200).unwrap();
        let b = success_rate(&ProtocolConfig::enabling_disabling(lo + step, 1000), &sim, 50, 2048, 200).unwrap();
        prop_assert!(a <= b, "{} at {} > {} at {}", a, lo, b, lo + step);
    }

    #[test]
    fn success_rate_monotone_in_t2(seed in any::<u64>(), lo in 50u32..120, step in 0u32..30) {
        let sim = Simulation::stochastic(ReadinessModel::calibrated(), seed);
        let a = success_rate(&ProtocolConfig::enabling_disabling(310, lo), &sim, 50, 2048, 200).unwrap();
        let b = success_rate(&ProtocolConfig::enabling_disabling(310, lo + step), &sim, 50, 2048, 200).unwrap();
        prop_assert!(a <= b, "{} at {} > {} at {}", a, lo, b, lo + step);
    }
}
