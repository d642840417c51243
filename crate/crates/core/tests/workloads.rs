use std::time::Instant;

use proptest::prelude::*;

use nfcsim_core::workloads::{
    decode_private_key, decode_public_key, deserialize_nqueens, encode_private_key, encode_public_key,
    frame_rsa_result, nqueens_count, nqueens_result, rsa_decrypt, rsa_encrypt, rsa_keygen, serialize_nqueens,
    unframe_rsa_result, NQueensTask, RsaTask, Workload, NODE_COUNTS,
};
use nfcsim_core::WorkloadError;

/// Counts placements by enumerating every permutation of columns and
/// rejecting those with two queens on a diagonal.
fn brute_force(n: usize) -> u64 {
    fn go(row: usize, cols: &mut Vec<usize>, used: &mut [bool], n: usize) -> u64 {
        if row == n {
            let ok = (0..n).all(|a| (a + 1..n).all(|b| cols[a].abs_diff(cols[b]) != b - a));
            return ok as u64;
        }
        let mut total = 0;
        for c in 0..n {
            if !used[c] {
                used[c] = true;
                cols.push(c);
                total += go(row + 1, cols, used, n);
                cols.pop();
                used[c] = false;
            }
        }
        total
    }
    go(0, &mut Vec::with_capacity(n), &mut vec![false; n], n)
}

#[test]
fn nqueens_matches_permutation_oracle() {
    let start = Instant::now();
    for n in 1..=10u32 {
        assert_eq!(nqueens_count(n).unwrap(), brute_force(n as usize), "n={n}");
    }
    assert_eq!(nqueens_count(2).unwrap(), 0);
    assert_eq!(nqueens_count(3).unwrap(), 0);
    assert!(start.elapsed().as_secs() < 10);
}

#[test]
fn nqueens_bounds_and_node_table() {
    assert_eq!(nqueens_count(0), Err(WorkloadError::SizeTooSmall));
    assert_eq!(nqueens_count(17), Err(WorkloadError::SizeTooLarge(17)));
    assert_eq!(nqueens_count(12).unwrap(), 14_200);
    assert!(NODE_COUNTS.windows(2).skip(3).all(|w| w[0] < w[1]));
    let out = Workload::NQueens(NQueensTask::new(8)).execute().unwrap();
    assert_eq!(nqueens_result(&out).unwrap(), 92);
}

#[test]
fn rsa_identity_512() {
    for seed in 0..200u64 {
        let (public, private) = rsa_keygen(512, seed).unwrap();
        let len = (seed as usize * 7) % 54;
        let m: Vec<u8> = (0..len).map(|i| (seed as usize * 13 + i) as u8).collect();
        let c = rsa_encrypt(&m, &public, seed.wrapping_mul(3)).unwrap();
        assert_eq!(c.len(), 64);
        assert_eq!(rsa_decrypt(&c, &private).unwrap(), m, "seed={seed}");
    }
}

#[test]
fn rsa_identity_2048() {
    for seed in 0..5u64 {
        let (public, private) = rsa_keygen(2048, 1000 + seed).unwrap();
        let m = format!("offloaded message {seed}").into_bytes();
        let c = rsa_encrypt(&m, &public, seed).unwrap();
        assert_eq!(c.len(), 256);
        assert_eq!(hex::encode(&c).len(), 512);
        assert_eq!(rsa_decrypt(&c, &private).unwrap(), m);
    }
}

#[test]
fn rsa_task_end_to_end() {
    let w = Workload::Rsa(RsaTask::new(b"the plain text file".to_vec(), 2048, 21).unwrap());
    let chunks = w.execute().unwrap();
    assert_eq!(chunks.len(), 2);
    assert!(chunks.iter().all(|c| c.len() <= 2048));
    assert_eq!(chunks[0].len(), 512 + 294);
    w.verify(&chunks).unwrap();
    let mut tampered = chunks.clone();
    let (_, other) = rsa_keygen(2048, 22).unwrap();
    tampered[1] = encode_private_key(&other).unwrap();
    assert_eq!(w.verify(&tampered), Err(WorkloadError::KeyMismatch));
    assert!(matches!(
        RsaTask::new(vec![0; 246], 2048, 0),
        Err(WorkloadError::PlaintextTooLong { len: 246, max: 245 })
    ));
}

#[test]
fn nqueens_serialization_full_byte_range() {
    for app in 0..=255u8 {
        for n in 0..=255u8 {
            let t = NQueensTask { application_number: app, n };
            assert_eq!(deserialize_nqueens(&serialize_nqueens(&t)).unwrap(), t);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rsa_round_trip_random(seed in any::<u64>(), m in proptest::collection::vec(any::<u8>(), 0..=53)) {
        let (public, private) = rsa_keygen(512, seed).unwrap();
        let c = rsa_encrypt(&m, &public, seed).unwrap();
        prop_assert_eq!(rsa_decrypt(&c, &private).unwrap(), m);
    }

    #[test]
    fn framing_bijection(seed in any::<u64>(), bits in prop::sample::select(vec![512u32, 1024])) {
        let (public, private) = rsa_keygen(bits, seed).unwrap();
        let c = rsa_encrypt(b"x", &public, seed).unwrap();
        let pub_der = encode_public_key(&public).unwrap();
        let priv_der = encode_private_key(&private).unwrap();
        let chunks = frame_rsa_result(&c, &pub_der, &priv_der).unwrap();
        let (c2, p2, s2) = unframe_rsa_result(&chunks, bits).unwrap();
        prop_assert_eq!(&c2, &c);
        prop_assert_eq!(decode_public_key(&p2).unwrap(), public);
        prop_assert_eq!(decode_private_key(&s2).unwrap(), private);
    }
}
