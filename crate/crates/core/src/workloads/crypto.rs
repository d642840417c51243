use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use rsa::traits::PublicKeyParts;
use rsa::{Pkcs1v15Encrypt, RsaPrivateKey, RsaPublicKey};

use crate::error::WorkloadError;
use crate::rng::{self, substream};
use crate::transfer::MAX_CHUNK;

pub const SUPPORTED_KEY_LENGTHS: [u32; 3] = [512, 1024, 2048];
pub const DEFAULT_KEY_LENGTH: u32 = 2048;

/// PKCS#1 v1.5 padding takes 11 bytes of every block.
const PADDING_OVERHEAD: usize = 11;

fn rsa_err(e: impl std::fmt::Display) -> WorkloadError {
    WorkloadError::Rsa(e.to_string())
}

pub fn check_key_length(key_length: u32) -> Result<(), WorkloadError> {
    if SUPPORTED_KEY_LENGTHS.contains(&key_length) {
        Ok(())
    } else {
        Err(WorkloadError::UnsupportedKeyLength(key_length))
    }
}

/// Longest plaintext one block can carry.
pub fn max_plaintext(key_length: u32) -> usize {
    key_length as usize / 8 - PADDING_OVERHEAD
}

/// Generates a key pair; the same `(key_length, seed)` always yields the
/// same pair.
pub fn rsa_keygen(key_length: u32, seed: u64) -> Result<(RsaPublicKey, RsaPrivateKey), WorkloadError> {
    check_key_length(key_length)?;
    let mut rng = substream(seed, rng::WORKLOAD, 0);
    let private = RsaPrivateKey::new(&mut rng, key_length as usize).map_err(rsa_err)?;
    Ok((private.to_public_key(), private))
}

/// Encrypts one block. `seed` drives the padding bytes.
pub fn rsa_encrypt(plaintext: &[u8], public: &RsaPublicKey, seed: u64) -> Result<Vec<u8>, WorkloadError> {
    let max = public.size() - PADDING_OVERHEAD;
    if plaintext.len() > max {
        return Err(WorkloadError::PlaintextTooLong {
            len: plaintext.len(),
            max,
        });
    }
    let mut rng = substream(seed, rng::WORKLOAD, 1);
    public.encrypt(&mut rng, Pkcs1v15Encrypt, plaintext).map_err(rsa_err)
}

pub fn rsa_decrypt(ciphertext: &[u8], private: &RsaPrivateKey) -> Result<Vec<u8>, WorkloadError> {
    private
        .decrypt(Pkcs1v15Encrypt, ciphertext)
        .map_err(|_| WorkloadError::KeyMismatch)
}

/// SubjectPublicKeyInfo DER.
pub fn encode_public_key(key: &RsaPublicKey) -> Result<Vec<u8>, WorkloadError> {
    Ok(key.to_public_key_der().map_err(rsa_err)?.into_vec())
}

pub fn decode_public_key(der: &[u8]) -> Result<RsaPublicKey, WorkloadError> {
    RsaPublicKey::from_public_key_der(der).map_err(|e| WorkloadError::MalformedPayload(e.to_string()))
}

/// PKCS#8 DER.
pub fn encode_private_key(key: &RsaPrivateKey) -> Result<Vec<u8>, WorkloadError> {
    Ok(key.to_pkcs8_der().map_err(rsa_err)?.as_bytes().to_vec())
}

pub fn decode_private_key(der: &[u8]) -> Result<RsaPrivateKey, WorkloadError> {
    RsaPrivateKey::from_pkcs8_der(der).map_err(|e| WorkloadError::MalformedPayload(e.to_string()))
}

/// Lays out an encryption result as two response chunks:
/// `[hex(ciphertext) | public key]` and `[private key]`.
pub fn frame_rsa_result(ciphertext: &[u8], public_der: &[u8], private_der: &[u8]) -> Result<[Vec<u8>; 2], WorkloadError> {
    let mut chunk0 = hex::encode(ciphertext).into_bytes();
    chunk0.extend_from_slice(public_der);
    if chunk0.len() > MAX_CHUNK {
        return Err(WorkloadError::ChunkTooLarge(chunk0.len()));
    }
    if private_der.len() > MAX_CHUNK {
        return Err(WorkloadError::ChunkTooLarge(private_der.len()));
    }
    Ok([chunk0, private_der.to_vec()])
}

/// Ciphertext, public key DER and private key DER.
pub type RsaParts = (Vec<u8>, Vec<u8>, Vec<u8>);

/// Splits chunk 0 after the hex ciphertext, `2 * key_length / 8` bytes.
pub fn unframe_rsa_result<C: AsRef<[u8]>>(chunks: &[C], key_length: u32) -> Result<RsaParts, WorkloadError> {
    check_key_length(key_length)?;
    let [chunk0, chunk1] = chunks else {
        return Err(WorkloadError::MalformedPayload(format!("expected 2 chunks, got {}", chunks.len())));
    };
    let (chunk0, chunk1) = (chunk0.as_ref(), chunk1.as_ref());
    let split = 2 * key_length as usize / 8;
    if chunk0.len() < split {
        return Err(WorkloadError::MalformedPayload("chunk 0 shorter than the ciphertext".into()));
    }
    let ciphertext = hex::decode(&chunk0[..split]).map_err(|e| WorkloadError::MalformedPayload(e.to_string()))?;
    Ok((ciphertext, chunk0[split..].to_vec(), chunk1.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keygen_is_deterministic() {
        let (p1, _) = rsa_keygen(512, 42).unwrap();
        let (p2, _) = rsa_keygen(512, 42).unwrap();
        let (p3, _) = rsa_keygen(512, 43).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, p3);
    }

    #[test]
    fn unsupported_length() {
        assert_eq!(rsa_keygen(1536, 1).unwrap_err(), WorkloadError::UnsupportedKeyLength(1536));
    }

    #[test]
    fn round_trip_and_limits() {
        let (public, private) = rsa_keygen(512, 7).unwrap();
        let c = rsa_encrypt(b"hello", &public, 1).unwrap();
        assert_eq!(c.len(), 64);
        assert_eq!(rsa_decrypt(&c, &private).unwrap(), b"hello");
        assert_eq!(
            rsa_encrypt(&[0; 54], &public, 1).unwrap_err(),
            WorkloadError::PlaintextTooLong { len: 54, max: 53 }
        );
        let (_, other) = rsa_keygen(512, 8).unwrap();
        assert_eq!(rsa_decrypt(&c, &other), Err(WorkloadError::KeyMismatch));
    }

    #[test]
    fn oversized_public_key_rejected() {
        let ct = vec![0u8; 256];
        assert!(frame_rsa_result(&ct, &[1; 1500], &[2; 10]).is_ok());
        assert_eq!(
            frame_rsa_result(&ct, &[1; 1600], &[2; 10]).unwrap_err(),
            WorkloadError::ChunkTooLarge(2112)
        );
    }

    #[test]
    fn frame_round_trip() {
        let ct: Vec<u8> = (0..128).map(|i| i as u8).collect();
        let chunks = frame_rsa_result(&ct, b"pub", b"priv").unwrap();
        assert_eq!(chunks[0].len(), 256 + 3);
        let (c, p, s) = unframe_rsa_result(&chunks, 1024).unwrap();
        assert_eq!((c, p, s), (ct, b"pub".to_vec(), b"priv".to_vec()));
    }
}
