//! Binary model files, all integers little-endian:
//!
//! ```text
//! magic "NEPD" | version u16
//! scalar width u8 (4 or 8) | input size u32 | classes u8 | task u8 | seed u64
//! log_space u8 | log_transform u8 | provenance length u16 | provenance utf-8
//! layer count u32 | per layer: kind u8, units u32, activation u8
//! per parameterized layer, in order: weight count u32, weights, bias count u32, biases
//! CRC32 of everything above, u32
//! ```

use std::path::Path;

use super::arch::{plan, LayerSpec};
use super::network::{ModelMeta, Network, Task};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::nepdf::NepdfOptions;

pub const MAGIC: &[u8; 4] = b"NEPD";
pub const FORMAT_VERSION: u16 = 1;
/// Byte offset of the version field.
pub const VERSION_OFFSET: usize = 4;

pub fn encode<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut b = Vec::with_capacity(16 + net.params.len() * T::BYTES as usize);
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    b.push(T::BYTES);
    b.extend_from_slice(&(net.input_size as u32).to_le_bytes());
    b.push(net.n_classes() as u8);
    b.push(net.meta.task.code());
    b.extend_from_slice(&net.seed.to_le_bytes());
    b.push(net.meta.nepdf.log_space as u8);
    b.push(net.meta.nepdf.log_transform as u8);
    let prov = net.meta.provenance.as_bytes();
    let prov = &prov[..prov.len().min(u16::MAX as usize)];
    b.extend_from_slice(&(prov.len() as u16).to_le_bytes());
    b.extend_from_slice(prov);
    b.extend_from_slice(&(net.specs.len() as u32).to_le_bytes());
    for s in &net.specs {
        let (kind, units, act) = s.code();
        b.push(kind);
        b.extend_from_slice(&units.to_le_bytes());
        b.push(act);
    }
    for p in net.plans.iter().filter(|p| p.has_params()) {
        for (off, len) in [(p.w_off, p.w_len), (p.b_off, p.b_len)] {
            b.extend_from_slice(&(len as u32).to_le_bytes());
            for &v in &net.params[off..off + len] {
                v.write_le(&mut b);
            }
        }
    }
    let crc = crc32fast::hash(&b);
    b.extend_from_slice(&crc.to_le_bytes());
    b
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or(Error::CorruptChecksum)?;
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

    fn real(&mut self, width: u8) -> Result<f64> {
        Ok(match width {
            4 => f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as f64,
            _ => f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")),
        })
    }
}

/// Decodes a model, converting stored parameters to `T`. Magic and version
/// are checked before the checksum.
pub fn decode<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    if bytes.len() < 6 {
        return Err(Error::CorruptChecksum);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    if bytes.len() < 10 {
        return Err(Error::CorruptChecksum);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().expect("4 bytes")) {
        return Err(Error::CorruptChecksum);
    }

    let mut r = Reader { buf: body, pos: 6 };
    let width = r.u8()?;
    if width != 4 && width != 8 {
        return Err(Error::MalformedModel(format!("scalar width {width}")));
    }
    let k = r.u32()? as usize;
    let n_classes = r.u8()? as usize;
    let task = Task::from_code(r.u8()?)?;
    if task.n_classes() != n_classes {
        return Err(Error::MalformedModel(format!("task {task:?} with {n_classes} classes")));
    }
    let seed = r.u64()?;
    let log_space = r.u8()? != 0;
    let log_transform = r.u8()? != 0;
    let plen = r.u16()? as usize;
    let provenance = String::from_utf8(r.take(plen)?.to_vec()).map_err(|_| Error::MalformedModel("provenance is not utf-8".into()))?;
    let n_layers = r.u32()? as usize;
    let specs = (0..n_layers)
        .map(|_| {
            let kind = r.u8()?;
            let units = r.u32()?;
            let act = r.u8()?;
            LayerSpec::from_code(kind, units, act)
        })
        .collect::<Result<Vec<_>>>()?;
    let (plans, n_params) = plan(&specs, k, n_classes)?;
    let mut params = vec![T::zero(); n_params];
    for p in plans.iter().filter(|p| p.has_params()) {
        for (off, len) in [(p.w_off, p.w_len), (p.b_off, p.b_len)] {
            let stored = r.u32()? as usize;
            if stored != len {
                return Err(Error::MalformedModel(format!("parameter blob of {stored} values, expected {len}")));
            }
            for v in &mut params[off..off + len] {
                *v = T::from_f64_lossy(r.real(width)?);
            }
        }
    }
    if r.pos != body.len() {
        return Err(Error::MalformedModel(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(Network {
        specs,
        plans,
        params,
        input_size: k,
        seed,
        meta: ModelMeta { task, nepdf: NepdfOptions { k, log_space, log_transform }, provenance },
    })
}

pub fn save_model<T: Scalar>(net: &Network<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Network<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
