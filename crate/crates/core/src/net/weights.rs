//! Weight file layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "STEGONET"
//! version      u32      1
//! networks     u32      3 (prepare, hide, reveal)
//! per network  u32 input_channels, u32 output_channels, u32 feature_maps,
//!              u32 final_kernel, u32 branch_depth, u32 n_kernels,
//!              n_kernels x u32 kernel sizes, u8 output activation
//! tensors      u32      count
//! per tensor   u32 rank, rank x u32 dims, f32 values
//! checksum     u32      CRC-32 of every preceding byte
//! ```
//!
//! Tensors follow storage order: for each network and layer, the kernel
//! `[out, in, k, k]` then the bias `[out]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::base::{BaseModel, NetworkConfig, OutputActivation, BRANCH_DEPTH, KERNEL_SIZES};
use super::conv::Conv2d;
use super::stegonet::{Architecture, StegoNet};
use crate::error::{Result, StegoError};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"STEGONET";
const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_config(buf: &mut Vec<u8>, c: &NetworkConfig) {
    put_u32(buf, c.input_channels);
    put_u32(buf, c.output_channels);
    put_u32(buf, c.feature_maps);
    put_u32(buf, c.final_kernel);
    put_u32(buf, c.branch_depth());
    put_u32(buf, KERNEL_SIZES.len());
    for k in c.kernel_sizes() {
        put_u32(buf, k);
    }
    buf.push(c.output_activation.code());
}

/// Serializes weights into the documented binary layout.
pub fn write_weights(net: &StegoNet<f32>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    put_u32(&mut buf, VERSION as usize);
    put_u32(&mut buf, 3);
    for n in net.networks() {
        put_config(&mut buf, n.config());
    }
    let layers: Vec<&Conv2d<f32>> = net.networks().into_iter().flat_map(|n| n.layers()).collect();
    put_u32(&mut buf, layers.len() * 2);
    for l in layers {
        put_u32(&mut buf, 4);
        for d in [l.out_channels, l.in_channels, l.kernel, l.kernel] {
            put_u32(&mut buf, d);
        }
        for v in &l.weight {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        put_u32(&mut buf, 1);
        put_u32(&mut buf, l.out_channels);
        for v in &l.bias {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn save_weights(net: &StegoNet<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_weights(net);
    let mut f = fs::File::create(path).map_err(|e| StegoError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| StegoError::io(path, e))
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
            .ok_or_else(|| StegoError::CorruptWeights(format!("unexpected end at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| StegoError::CorruptWeights("tensor too large".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn config(&mut self) -> Result<NetworkConfig> {
        let input_channels = self.u32()?;
        let output_channels = self.u32()?;
        let feature_maps = self.u32()?;
        let final_kernel = self.u32()?;
        let depth = self.u32()?;
        let n = self.u32()?;
        if n > 16 {
            return Err(StegoError::CorruptWeights("kernel list too long".into()));
        }
        let kernels: Vec<usize> = (0..n).map(|_| self.u32()).collect::<Result<_>>()?;
        let act = self.u8()?;
        if depth != BRANCH_DEPTH || kernels != KERNEL_SIZES {
            return Err(StegoError::ArchitectureMismatch(format!(
                "branch depth {depth} with kernels {kernels:?}; expected {BRANCH_DEPTH} with {KERNEL_SIZES:?}"
            )));
        }
        let output_activation = OutputActivation::from_code(act)
            .ok_or_else(|| StegoError::ArchitectureMismatch(format!("unknown activation code {act}")))?;
        Ok(NetworkConfig {
            input_channels,
            output_channels,
            feature_maps,
            final_kernel,
            output_activation,
        })
    }
}

/// Parses a weight file image, verifying checksum and fingerprint.
pub fn read_weights(bytes: &[u8]) -> Result<StegoNet<f32>> {
    if bytes.len() < WEIGHTS_MAGIC.len() + 4 || &bytes[..8] != WEIGHTS_MAGIC {
        return Err(StegoError::CorruptWeights("missing magic bytes".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(StegoError::Checksum);
    }
    let mut r = Reader { bytes: body, pos: 8 };
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(StegoError::CorruptWeights(format!("unsupported version {version}")));
    }
    if r.u32()? != 3 {
        return Err(StegoError::ArchitectureMismatch("expected three networks".into()));
    }
    let arch = Architecture {
        prepare: r.config()?,
        hide: r.config()?,
        reveal: r.config()?,
    };
    arch.validate()?;

    let count = r.u32()?;
    let expected: usize = [arch.prepare, arch.hide, arch.reveal]
        .iter()
        .map(|c| c.layer_shapes().len() * 2)
        .sum();
    if count != expected {
        return Err(StegoError::ArchitectureMismatch(format!(
            "{count} tensors stored, fingerprint implies {expected}"
        )));
    }

    let mut nets = Vec::with_capacity(3);
    for cfg in [arch.prepare, arch.hide, arch.reveal] {
        let mut layers = Vec::new();
        for (i, o, k) in cfg.layer_shapes() {
            let dims: Vec<usize> = {
                let rank = r.u32()?;
                if rank != 4 {
                    return Err(StegoError::ArchitectureMismatch(format!("kernel rank {rank}")));
                }
                (0..4).map(|_| r.u32()).collect::<Result<_>>()?
            };
            if dims != [o, i, k, k] {
                return Err(StegoError::ArchitectureMismatch(format!(
                    "kernel dims {dims:?}, fingerprint implies {:?}",
                    [o, i, k, k]
                )));
            }
            let weight = r.f32s(o * i * k * k)?;
            if r.u32()? != 1 || r.u32()? != o {
                return Err(StegoError::ArchitectureMismatch("bias dims".into()));
            }
            let bias = r.f32s(o)?;
            if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
                return Err(StegoError::CorruptWeights("non-finite parameter".into()));
            }
            layers.push(Conv2d {
                in_channels: i,
                out_channels: o,
                kernel: k,
                weight,
                bias,
            });
        }
        nets.push(BaseModel::from_layers(cfg, layers)?);
    }
    if r.pos != body.len() {
        return Err(StegoError::CorruptWeights("trailing bytes".into()));
    }
    let reveal = nets.pop().unwrap();
    let hide = nets.pop().unwrap();
    let prepare = nets.pop().unwrap();
    Ok(StegoNet {
        prepare,
        hide,
        reveal,
    })
}

/// Loads a weight file; with `expected`, also requires the stored
/// fingerprint to equal that architecture.
pub fn load_weights(path: impl AsRef<Path>, expected: Option<&Architecture>) -> Result<StegoNet<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| StegoError::io(path, e))?;
    let net = read_weights(&bytes)?;
    if let Some(arch) = expected {
        if &net.architecture() != arch {
            return Err(StegoError::ArchitectureMismatch(format!(
                "file holds {:?}, expected {:?}",
                net.architecture(),
                arch
            )));
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> StegoNet<f32> {
        StegoNet::init(Architecture::for_secret(2, 3), 11).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = small();
        let back = read_weights(&write_weights(&net)).unwrap();
        assert_eq!(back, net);
        let bits = |n: &StegoNet<f32>| n.params().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&net));
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let bytes = write_weights(&small());
        let cut = &bytes[..bytes.len() - 10];
        assert!(matches!(read_weights(cut), Err(StegoError::Checksum)));
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = write_weights(&small());
        let i = bytes.len() / 2;
        bytes[i] ^= 0x10;
        assert!(matches!(read_weights(&bytes), Err(StegoError::Checksum)));
    }

    #[test]
    fn altered_fingerprint_is_architecture_mismatch() {
        let mut bytes = write_weights(&small());
        // prepare.feature_maps lives after magic, version, count, in, out.
        let off = 8 + 4 + 4 + 4 + 4;
        bytes[off] = 5;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(read_weights(&bytes), Err(StegoError::ArchitectureMismatch(_))));
    }

    #[test]
    fn load_checks_expected_architecture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let net = small();
        save_weights(&net, &path).unwrap();
        assert_eq!(load_weights(&path, Some(&net.architecture())).unwrap(), net);
        let other = Architecture::for_secret(3, 3);
        assert!(matches!(
            load_weights(&path, Some(&other)),
            Err(StegoError::ArchitectureMismatch(_))
        ));
    }
}
