//! Checkpoint format: a versioned text header (magic line plus the layer
//! specs as JSON), then each parameter tensor as a little-endian u64
//! length prefix followed by little-endian f64 values. Bit-exact
//! round-trip.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::network::{LayerParams, LayerSpec, Network};
use super::tensor::Tensor;

const MAGIC: &str = "SENTIGAN-NET 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    Malformed(String),
}

pub fn write_network(out: &mut impl Write, network: &Network) -> Result<(), CheckpointError> {
    writeln!(out, "{MAGIC}")?;
    let specs = serde_json::to_string(&network.layers)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    writeln!(out, "{specs}")?;
    for params in &network.params {
        for tensor in [&params.weight, &params.bias].into_iter().flatten() {
            out.write_all(&(tensor.data.len() as u64).to_le_bytes())?;
            for v in &tensor.data {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_network(input: &mut impl Read) -> Result<Network, CheckpointError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let read_line = |bytes: &[u8], pos: &mut usize| -> Result<String, CheckpointError> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(CheckpointError::Malformed("truncated header".to_string()));
        }
        let line = String::from_utf8(bytes[start..*pos].to_vec())
            .map_err(|_| CheckpointError::Malformed("non-utf8 header".to_string()))?;
        *pos += 1;
        Ok(line)
    };
    let magic = read_line(&bytes, &mut pos)?;
    if magic != MAGIC {
        return Err(CheckpointError::Malformed(format!("bad magic `{magic}`")));
    }
    let specs_json = read_line(&bytes, &mut pos)?;
    let layers: Vec<LayerSpec> = serde_json::from_str(&specs_json)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;

    let shapes = super::network::init_params(&layers, 0);
    let mut params = Vec::with_capacity(shapes.len());
    let read_tensor = |shape: &[usize], pos: &mut usize| -> Result<Tensor, CheckpointError> {
        if *pos + 8 > bytes.len() {
            return Err(CheckpointError::Malformed("truncated length".to_string()));
        }
        let len = u64::from_le_bytes(bytes[*pos..*pos + 8].try_into().unwrap()) as usize;
        *pos += 8;
        if len != shape.iter().product::<usize>() {
            return Err(CheckpointError::Malformed(format!(
                "tensor length {len} does not match shape {shape:?}"
            )));
        }
        if *pos + 8 * len > bytes.len() {
            return Err(CheckpointError::Malformed("truncated tensor".to_string()));
        }
        let data = (0..len)
            .map(|i| {
                f64::from_le_bytes(bytes[*pos + 8 * i..*pos + 8 * i + 8].try_into().unwrap())
            })
            .collect();
        *pos += 8 * len;
        Ok(Tensor::from_vec(shape, data))
    };
    for template in &shapes {
        let weight = match &template.weight {
            Some(t) => Some(read_tensor(&t.shape, &mut pos)?),
            None => None,
        };
        let bias = match &template.bias {
            Some(t) => Some(read_tensor(&t.shape, &mut pos)?),
            None => None,
        };
        params.push(LayerParams { weight, bias });
    }
    if pos != bytes.len() {
        return Err(CheckpointError::Malformed("trailing bytes".to_string()));
    }
    Ok(Network { layers, params })
}

pub fn store_network(network: &Network, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let mut out = Vec::new();
    write_network(&mut out, network)?;
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, CheckpointError> {
    let mut file = std::fs::File::open(path)?;
    read_network(&mut file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_network() -> Network {
        Network::new(
            vec![
                LayerSpec::Conv2d {
                    in_channels: 2,
                    out_channels: 3,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::LeakyRelu { slope: 0.2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { inputs: 300, outputs: 3 },
            ],
            99,
        )
    }

    #[test]
    fn roundtrip_is_exact() {
        let network = toy_network();
        let mut buf = Vec::new();
        write_network(&mut buf, &network).unwrap();
        let loaded = read_network(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded, network);
    }

    #[test]
    fn bad_magic_rejected() {
        let err = read_network(&mut &b"NOPE 0\n[]\n"[..]).unwrap_err();
        assert!(matches!(err, CheckpointError::Malformed(_)));
    }

    #[test]
    fn truncated_rejected() {
        let network = toy_network();
        let mut buf = Vec::new();
        write_network(&mut buf, &network).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(read_network(&mut buf.as_slice()).is_err());
    }
}
