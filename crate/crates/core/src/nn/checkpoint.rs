//! `SCOPEv1` checkpoint container.
//!
//! Layout: the 7 magic bytes `SCOPEv1`, then for each tensor until EOF:
//! name length (`u32` LE), UTF-8 name, rank (`u32` LE), `rank` extents
//! (`u64` LE each), then the values as little-endian `f64`.

use std::fs;
use std::path::Path;

use super::{ScopeNet, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 7] = b"SCOPEv1";

pub fn encode_tensors<'a>(entries: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in entries {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_tensors(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("missing SCOPEv1 magic".into()));
    }
    let mut rd = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let mut out = Vec::new();
    while rd.pos < bytes.len() {
        let name_len = rd.u32()? as usize;
        let name = String::from_utf8(rd.take(name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = rd.u32()? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(rd.u64()? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::Checkpoint("tensor too large".into()))?;
        let data = rd
            .take(count)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

pub fn encode_net(net: &ScopeNet) -> Vec<u8> {
    let names = net.param_names();
    encode_tensors(names.iter().map(String::as_str).zip(net.tensors()))
}

/// Decodes a checkpoint and checks names and shapes against the architecture.
pub fn decode_net(bytes: &[u8]) -> Result<ScopeNet> {
    let entries = decode_tensors(bytes)?;
    let mut net = ScopeNet::zeros();
    let names = net.param_names();
    if entries.len() != names.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {} tensors, network expects {}",
            entries.len(),
            names.len()
        )));
    }
    for ((want, slot), (name, t)) in names.iter().zip(net.tensors_mut()).zip(entries) {
        if *want != name {
            return Err(Error::Checkpoint(format!(
                "expected tensor {want}, found {name}"
            )));
        }
        if slot.shape() != t.shape() {
            return Err(Error::Checkpoint(format!(
                "{name}: expected shape {:?}, found {:?}",
                slot.shape(),
                t.shape()
            )));
        }
        *slot = t;
    }
    Ok(net)
}

pub fn save(net: &ScopeNet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_net(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<ScopeNet> {
    decode_net(&fs::read(path)?)
}

/// Reads an `[H, W, C]` pixel-feature map stored as a one-tensor container.
pub fn read_feature_map(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut entries = decode_tensors(&fs::read(path)?)?;
    match entries.pop() {
        Some((_, t)) if entries.is_empty() && t.shape().len() == 3 => Ok(t),
        _ => Err(Error::Checkpoint(
            "feature map must hold one rank-3 tensor".into(),
        )),
    }
}

pub fn write_feature_map(features: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tensors([("features", features)]))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;

    #[test]
    fn net_round_trip() {
        let net = init_params(3);
        let bytes = encode_net(&net);
        assert_eq!(&bytes[..7], b"SCOPEv1");
        assert_eq!(decode_net(&bytes).unwrap(), net);
    }

    #[test]
    fn layout_is_explicit() {
        let t = Tensor::new(vec![1, 2], vec![1.0, -0.5]).unwrap();
        let bytes = encode_tensors([("ab", &t)]);
        let mut want = b"SCOPEv1".to_vec();
        want.extend_from_slice(&2u32.to_le_bytes());
        want.extend_from_slice(b"ab");
        want.extend_from_slice(&2u32.to_le_bytes());
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&2u64.to_le_bytes());
        want.extend_from_slice(&1.0f64.to_le_bytes());
        want.extend_from_slice(&(-0.5f64).to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        assert!(decode_net(b"NOTSCOPE").is_err());
        let bytes = encode_net(&init_params(3));
        assert!(decode_net(&bytes[..bytes.len() - 3]).is_err());
        let t = Tensor::zeros(&[2]);
        assert!(decode_net(&encode_tensors([("fgen.conv1.weight", &t)])).is_err());
        let mut net = init_params(3);
        net.gcn[0].bias = Tensor::zeros(&[5]);
        assert!(matches!(
            decode_net(&encode_net(&net)),
            Err(Error::Checkpoint(_))
        ));
    }
}
