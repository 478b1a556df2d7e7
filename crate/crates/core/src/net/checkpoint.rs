//! Binary checkpoint format.
//!
//! ```text
//! magic    8 bytes  "RULKCKPT"
//! version  u32
//! config   u32 length + JSON NetConfig
//! count    u32
//! tensor   u16 name length, name, u8 rank, u64 dims[rank], f64 data[prod(dims)]
//! ```
//!
//! All integers and floats are little-endian. The tensors are those of the
//! model's layout followed by a scalar `cycle_scale`.

use std::path::Path;

use super::layout::param_count;
use super::{NetConfig, TrajectoryModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RULKCKPT";
const VERSION: u32 = 1;
const CYCLE_SCALE: &str = "cycle_scale";

fn put_tensor(out: &mut Vec<u8>, name: &str, shape: &[usize], data: &[f64]) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(shape.len() as u8);
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(model: &TrajectoryModel) -> Vec<u8> {
    let config = serde_json::to_vec(model.config()).expect("config serializes");
    let tensors = model.layout().tensors();
    let mut out = Vec::with_capacity(64 + config.len() + 8 * model.n_params() + 64 * tensors.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(tensors.len() as u32 + 1).to_le_bytes());
    for t in tensors {
        put_tensor(&mut out, &t.name, &t.shape, &model.params()[t.range()]);
    }
    put_tensor(&mut out, CYCLE_SCALE, &[], &[model.cycle_scale()]);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrajectoryModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = r.u32()? as usize;
    let config: NetConfig = serde_json::from_slice(r.take(len)?)
        .map_err(|e| Error::Checkpoint(format!("config header: {e}")))?;
    config
        .validate()
        .map_err(|e| Error::Checkpoint(format!("config header: {e}")))?;
    // Reject absurd shapes before allocating anything.
    match param_count(&config) {
        Some(n) if n <= bytes.len() / 8 => {}
        _ => return Err(Error::Checkpoint("config shape exceeds file size".into())),
    }
    let mut model = TrajectoryModel::zeros(config, 1.0)?;
    let specs = model.layout().tensors().to_vec();
    let count = r.u32()? as usize;
    if count != specs.len() + 1 {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {count}",
            specs.len() + 1
        )));
    }
    let mut cycle_scale = None;
    for i in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
            .to_owned();
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()?);
        }
        let (want_name, want_shape): (&str, Vec<u64>) = match specs.get(i) {
            Some(s) => (&s.name, s.shape.iter().map(|&d| d as u64).collect()),
            None => (CYCLE_SCALE, vec![]),
        };
        if name != want_name || shape != want_shape {
            return Err(Error::Checkpoint(format!(
                "tensor {i}: found {name} {shape:?}, expected {want_name} {want_shape:?}"
            )));
        }
        let n: usize = want_shape.iter().map(|&d| d as usize).product();
        let raw = r.take(n * 8)?;
        let mut data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        match specs.get(i) {
            Some(s) => {
                for (dst, v) in model.params_mut()[s.range()].iter_mut().zip(data) {
                    *dst = v;
                }
            }
            None => cycle_scale = data.next_back(),
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let config = model.config().clone();
    let params = model.params().to_vec();
    TrajectoryModel::from_parts(config, params, cycle_scale.unwrap_or(f64::NAN))
        .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_checkpoint(model: &TrajectoryModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<TrajectoryModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = TrajectoryModel::new(NetConfig::default(), 321.0, 8).unwrap();
        m.set_noise(6.36e-4, 6.41e-6).unwrap();
        let back = decode_checkpoint(&encode_checkpoint(&m)).unwrap();
        assert_eq!(back.config(), m.config());
        assert_eq!(back.cycle_scale().to_bits(), m.cycle_scale().to_bits());
        for (a, b) in back.params().iter().zip(m.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(encode_checkpoint(&back), encode_checkpoint(&m));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let m = TrajectoryModel::new(NetConfig::tiny(), 10.0, 1).unwrap();
        save_checkpoint(&m, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), m);
        assert!(matches!(
            load_checkpoint(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn corruption_is_detected() {
        let m = TrajectoryModel::new(NetConfig::tiny(), 10.0, 1).unwrap();
        let bytes = encode_checkpoint(&m);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_checkpoint(&magic).is_err());
        // A non-finite weight is rejected.
        let mut nan = bytes.clone();
        // log_eta_b_sq data sits before the 14-byte cycle_scale header and its value.
        let at = nan.len() - 8 - 14 - 8;
        nan[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_checkpoint(&nan).is_err());
    }

    proptest! {
        #[test]
        fn decoder_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
            let _ = decode_checkpoint(&bytes);
        }

        #[test]
        fn decoder_survives_bit_flips(pos in 0usize..4000, bit in 0u8..8) {
            let m = TrajectoryModel::new(NetConfig::tiny(), 10.0, 1).unwrap();
            let mut bytes = encode_checkpoint(&m);
            let i = pos % bytes.len();
            bytes[i] ^= 1 << bit;
            let _ = decode_checkpoint(&bytes);
        }
    }
}
