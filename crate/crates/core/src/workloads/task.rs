use serde::{Deserialize, Serialize};

use crate::error::WorkloadError;
use crate::time::SimDuration;

use super::crypto::{
    check_key_length, decode_private_key, encode_private_key, encode_public_key, frame_rsa_result, max_plaintext,
    rsa_decrypt, rsa_encrypt, rsa_keygen, unframe_rsa_result,
};
use super::nqueens::{nqueens_count, nqueens_nodes};

pub const APP_NQUEENS: u8 = 1;
pub const APP_RSA: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NQueensTask {
    pub application_number: u8,
    pub n: u8,
}

impl NQueensTask {
    pub fn new(n: u8) -> Self {
        NQueensTask {
            application_number: APP_NQUEENS,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsaTask {
    pub plaintext: Vec<u8>,
    pub key_length: u32,
    /// Seeds key generation and padding.
    pub seed: u64,
}

impl RsaTask {
    pub fn new(plaintext: Vec<u8>, key_length: u32, seed: u64) -> Result<Self, WorkloadError> {
        check_key_length(key_length)?;
        let max = max_plaintext(key_length);
        if plaintext.len() > max {
            return Err(WorkloadError::PlaintextTooLong {
                len: plaintext.len(),
                max,
            });
        }
        Ok(RsaTask {
            plaintext,
            key_length,
            seed,
        })
    }
}

/// `[application_number | N]`.
pub fn serialize_nqueens(task: &NQueensTask) -> Vec<u8> {
    vec![task.application_number, task.n]
}

pub fn deserialize_nqueens(bytes: &[u8]) -> Result<NQueensTask, WorkloadError> {
    match bytes {
        [application_number, n] => Ok(NQueensTask {
            application_number: *application_number,
            n: *n,
        }),
        _ => Err(WorkloadError::MalformedPayload(format!(
            "N Queens input must be 2 bytes, got {}",
            bytes.len()
        ))),
    }
}

/// `[application_number | seed (u64 BE) | key length (u16 BE) | plaintext]`.
pub fn serialize_rsa(task: &RsaTask) -> Vec<u8> {
    let mut out = Vec::with_capacity(11 + task.plaintext.len());
    out.push(APP_RSA);
    out.extend_from_slice(&task.seed.to_be_bytes());
    out.extend_from_slice(&(task.key_length as u16).to_be_bytes());
    out.extend_from_slice(&task.plaintext);
    out
}

pub fn deserialize_rsa(bytes: &[u8]) -> Result<RsaTask, WorkloadError> {
    if bytes.len() < 11 || bytes[0] != APP_RSA {
        return Err(WorkloadError::MalformedPayload("truncated RSA input".into()));
    }
    let seed = u64::from_be_bytes(bytes[1..9].try_into().expect("8 bytes"));
    let key_length = u16::from_be_bytes([bytes[9], bytes[10]]) as u32;
    RsaTask::new(bytes[11..].to_vec(), key_length, seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Workload {
    NQueens(NQueensTask),
    Rsa(RsaTask),
}

impl Workload {
    pub fn name(&self) -> &'static str {
        match self {
            Workload::NQueens(_) => "nqueens",
            Workload::Rsa(_) => "rsa",
        }
    }

    /// Board size or key length.
    pub fn size(&self) -> u32 {
        match self {
            Workload::NQueens(t) => t.n as u32,
            Workload::Rsa(t) => t.key_length,
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        match self {
            Workload::NQueens(t) => serialize_nqueens(t),
            Workload::Rsa(t) => serialize_rsa(t),
        }
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, WorkloadError> {
        match bytes.first() {
            Some(&APP_NQUEENS) => deserialize_nqueens(bytes).map(Workload::NQueens),
            Some(&APP_RSA) => deserialize_rsa(bytes).map(Workload::Rsa),
            Some(&other) => Err(WorkloadError::UnknownApplication(other)),
            None => Err(WorkloadError::MalformedPayload("empty input".into())),
        }
    }

    /// Runs the computation and returns its result as response chunks.
    pub fn execute(&self) -> Result<Vec<Vec<u8>>, WorkloadError> {
        match self {
            Workload::NQueens(t) => Ok(vec![nqueens_count(t.n as u32)?.to_be_bytes().to_vec()]),
            Workload::Rsa(t) => {
                let (public, private) = rsa_keygen(t.key_length, t.seed)?;
                let ciphertext = rsa_encrypt(&t.plaintext, &public, t.seed)?;
                let [c0, c1] = frame_rsa_result(&ciphertext, &encode_public_key(&public)?, &encode_private_key(&private)?)?;
                Ok(vec![c0, c1])
            }
        }
    }

    /// Checks a result on the requesting side. For RSA this decrypts the
    /// ciphertext with the returned private key and compares it with the
    /// original plaintext.
    pub fn verify(&self, chunks: &[Vec<u8>]) -> Result<(), WorkloadError> {
        match self {
            Workload::NQueens(_) => match chunks {
                [c] if c.len() == 8 => Ok(()),
                _ => Err(WorkloadError::MalformedPayload("N Queens result must be one 8-byte chunk".into())),
            },
            Workload::Rsa(t) => {
                let (ciphertext, _, private_der) = unframe_rsa_result(chunks, t.key_length)?;
                let plain = rsa_decrypt(&ciphertext, &decode_private_key(&private_der)?)?;
                if plain != t.plaintext {
                    return Err(WorkloadError::KeyMismatch);
                }
                Ok(())
            }
        }
    }
}

/// Reads the solution count out of an N Queens result.
pub fn nqueens_result(chunks: &[Vec<u8>]) -> Result<u64, WorkloadError> {
    match chunks {
        [c] => Ok(u64::from_be_bytes(
            c.as_slice()
                .try_into()
                .map_err(|_| WorkloadError::MalformedPayload("count must be 8 bytes".into()))?,
        )),
        _ => Err(WorkloadError::MalformedPayload("expected one chunk".into())),
    }
}

/// Compute time of each workload on a device of speed 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub nqueens_per_node: SimDuration,
    /// Key generation plus encryption at 2048 bits; other lengths scale with
    /// the cube of the key length.
    pub rsa_2048: SimDuration,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            nqueens_per_node: SimDuration::from_micros(4),
            rsa_2048: SimDuration::from_millis(20_000),
        }
    }
}

impl CostModel {
    pub fn base_cost(&self, workload: &Workload) -> Result<SimDuration, WorkloadError> {
        match workload {
            Workload::NQueens(t) => Ok(self.nqueens_per_node.mul_u64(nqueens_nodes(t.n as u32)?)),
            Workload::Rsa(t) => {
                check_key_length(t.key_length)?;
                let scale = (t.key_length as f64 / 2048.0).powi(3);
                Ok(SimDuration::from_millis_f64(self.rsa_2048.as_millis_f64() * scale))
            }
        }
    }
}

/// A workload together with its compute cost at speed 1.0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub workload: Workload,
    pub base_cost: SimDuration,
}

impl Task {
    pub fn new(workload: Workload, cost: &CostModel) -> Result<Self, WorkloadError> {
        let base_cost = cost.base_cost(&workload)?;
        Ok(Task { workload, base_cost })
    }

    pub fn nqueens(n: u8, cost: &CostModel) -> Result<Self, WorkloadError> {
        Self::new(Workload::NQueens(NQueensTask::new(n)), cost)
    }

    pub fn rsa(plaintext: Vec<u8>, key_length: u32, seed: u64, cost: &CostModel) -> Result<Self, WorkloadError> {
        Self::new(Workload::Rsa(RsaTask::new(plaintext, key_length, seed)?), cost)
    }
}
