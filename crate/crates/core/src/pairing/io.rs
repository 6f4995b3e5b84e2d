//! Pairing serialization: a JSON array `mate[0..N]` or a little-endian
//! binary blob `b"NBRWPAIR" | N: u64 | mate: [u64; N]`. Both forms must
//! describe a complete involution and are validated on load.

use super::Pairing;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"NBRWPAIR";

impl Pairing {
    pub fn to_json(&self) -> Result<String> {
        self.ensure_complete()?;
        Ok(serde_json::to_string(self.mates()).expect("mate array serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mate: Vec<usize> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let p = Pairing::from_mates(mate)?;
        p.ensure_complete()?;
        Ok(p)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.ensure_complete()?;
        let mut out = Vec::with_capacity(16 + 8 * self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for &m in self.mates() {
            out.extend_from_slice(&(m as u64).to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::Parse("missing pairing header".into()));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = &bytes[16..];
        if body.len() != 8 * n {
            return Err(Error::Parse(format!("expected {} mate entries", n)));
        }
        let mate = body
            .chunks_exact(8)
            .map(|c| {
                let m = u64::from_le_bytes(c.try_into().expect("8 bytes"));
                usize::try_from(m).map_err(|_| Error::Parse(format!("mate {m} too large")))
            })
            .collect::<Result<Vec<_>>>()?;
        let p = Pairing::from_mates(mate)?;
        p.ensure_complete()?;
        Ok(p)
    }
}
