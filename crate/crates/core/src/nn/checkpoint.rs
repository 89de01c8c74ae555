//! Binary network checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "SBCMMLP1"
//! input_dim    u32
//! layer_count  u32
//! per layer:   u32 output width, u8 activation (0 identity, 1 relu, 2 tanh)
//! param_count  u64
//! params       param_count x f64 (IEEE-754 bits, little-endian)
//! ```
//!
//! Parameters follow [`Mlp::flat_params`] order, so a round trip is bit-exact.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Activation, Layer, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SBCMMLP1";

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1,
        Activation::Tanh => 2,
    }
}

pub fn encode(net: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(net.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.weights.nrows() as u32).to_le_bytes());
        out.push(activation_code(l.activation));
    }
    out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
    for p in net.flat_params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
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

pub fn decode(bytes: &[u8]) -> Result<Mlp> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let input = r.u32()? as usize;
    let count = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(count.min(1024));
    let mut fan_in = input;
    for _ in 0..count {
        let width = r.u32()? as usize;
        let activation = match r.take(1)?[0] {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            other => {
                return Err(Error::Checkpoint(format!(
                    "unknown activation code {other}"
                )))
            }
        };
        shapes.push((fan_in, width, activation));
        fan_in = width;
    }
    let expected: usize = shapes.iter().map(|&(i, o, _)| i * o + o).sum();
    let declared = r.u64()? as usize;
    if declared != expected {
        return Err(Error::Checkpoint(format!(
            "parameter count {declared} does not match architecture ({expected})"
        )));
    }
    let mut next = || -> Result<f64> { Ok(f64::from_le_bytes(r.take(8)?.try_into().unwrap())) };
    let mut layers = Vec::with_capacity(shapes.len());
    for (fan_in, width, activation) in shapes {
        let mut w = Vec::with_capacity(fan_in * width);
        for _ in 0..fan_in * width {
            w.push(next()?);
        }
        let mut b = Vec::with_capacity(width);
        for _ in 0..width {
            b.push(next()?);
        }
        layers.push(Layer {
            weights: Array2::from_shape_vec((width, fan_in), w).expect("sized above"),
            bias: Array1::from(b),
            activation,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Mlp::from_layers(layers).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save(net: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Mlp> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Architecture};
    use crate::rng::RngStream;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            input in 1usize..6,
            hidden in prop::collection::vec(1usize..7, 0..3),
            out in 1usize..4,
            seed in any::<u64>(),
        ) {
            let arch = Architecture::mlp(input, &hidden, out, Activation::Tanh);
            let net = init_params(&arch, &mut RngStream::new(seed));
            let bytes = encode(&net);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(encode(&back), bytes);
            let bits = |n: &Mlp| n.flat_params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&net));
            prop_assert_eq!(back.architecture(), net.architecture());
        }
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let net = init_params(
            &Architecture::mlp(3, &[4], 2, Activation::Relu),
            &mut RngStream::new(0),
        );
        let bytes = encode(&net);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut act = bytes;
        act[20] = 9;
        assert!(decode(&act).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.bin");
        let net = init_params(
            &Architecture::mlp(2, &[3], 1, Activation::Identity),
            &mut RngStream::new(5),
        );
        save(&net, &path).unwrap();
        assert_eq!(load(&path).unwrap(), net);
        assert!(load(dir.path().join("missing.bin")).is_err());
    }
}
