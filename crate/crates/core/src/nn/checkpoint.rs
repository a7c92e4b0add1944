//! Network checkpoints: one JSON header line, then the parameters as raw
//! little-endian `f64`, layer by layer, weights (row-major) before bias.

use std::io::{BufRead, Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::dense::{Activation, DenseNet, Layer, NetSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NET_FORMAT: &str = "mionet-densenet/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetHeader {
    pub format: String,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub final_linear: bool,
    pub use_bias: bool,
    pub seed: u64,
}

pub fn write_net<T: Scalar, W: Write>(net: &DenseNet<T>, out: &mut W) -> Result<()> {
    let header = NetHeader {
        format: NET_FORMAT.to_string(),
        layer_sizes: net.spec.layer_sizes.clone(),
        activation: net.spec.activation,
        final_linear: net.spec.final_linear,
        use_bias: net.spec.use_bias,
        seed: net.seed,
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(8 * net.spec.param_count());
    for layer in &net.layers {
        for v in layer.weight.iter().chain(layer.bias.iter().flatten()) {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    input.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_net<T: Scalar, R: BufRead>(input: &mut R) -> Result<DenseNet<T>> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: NetHeader = serde_json::from_str(line.trim_end())?;
    if header.format != NET_FORMAT {
        return Err(Error::Data(format!("unsupported network format `{}`", header.format)));
    }
    let spec = NetSpec {
        layer_sizes: header.layer_sizes,
        activation: header.activation,
        final_linear: header.final_linear,
        use_bias: header.use_bias,
    };
    spec.validate()?;
    let mut layers = Vec::new();
    for w in spec.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weight = read_f64s(input, fan_in * fan_out)?;
        let weight = Array2::from_shape_vec((fan_out, fan_in), weight.into_iter().map(T::of).collect())
            .expect("shape matches length");
        let bias = if spec.use_bias {
            Some(Array1::from(read_f64s(input, fan_out)?.into_iter().map(T::of).collect::<Vec<_>>()))
        } else {
            None
        };
        layers.push(Layer { weight, bias });
    }
    Ok(DenseNet {
        spec,
        layers,
        seed: header.seed,
    })
}
