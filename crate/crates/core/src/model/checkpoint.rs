//! Model checkpoints: one JSON header line (format tag, seed, config), the
//! branch then trunk network checkpoints back to back, then the image
//! tensors if any and the bias as raw little-endian `f64`.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{MIONet, MIONetConfig, Variant};
use crate::error::{Error, Result};
use crate::nn::{read_net, write_net};
use crate::nn::checkpoint::read_f64s;
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "mionet-model/1";

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    format: String,
    seed: u64,
    config: MIONetConfig,
}

pub fn write_model<T: Scalar, W: Write>(model: &MIONet<T>, out: &mut W) -> Result<()> {
    let header = ModelHeader {
        format: MODEL_FORMAT.to_string(),
        seed: model.seed(),
        config: model.config().clone(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for net in model.branches.iter().chain(&model.trunks) {
        write_net(net, out)?;
    }
    let mut buf = Vec::new();
    for v in model.image_tensors.iter().flatten().chain(model.bias.iter()) {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_model<T: Scalar, R: BufRead>(input: &mut R) -> Result<MIONet<T>> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: ModelHeader = serde_json::from_str(line.trim_end())?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Data(format!("unsupported model format `{}`", header.format)));
    }
    let config = header.config;
    config.validate()?;
    let branches = (0..config.n()).map(|_| read_net(input)).collect::<Result<Vec<_>>>()?;
    let trunks = (0..config.trunks.len()).map(|_| read_net(input)).collect::<Result<Vec<_>>>()?;
    let (image_tensors, bias_len) = match config.variant {
        Variant::FiniteImage => {
            let m = config.image_basis_size.unwrap();
            let p: usize = config.branch_widths().iter().product();
            let w = read_f64s(input, m * p)?.into_iter().map(T::of).collect();
            (Some(Array2::from_shape_vec((m, p), w).expect("shape matches length")), m)
        }
        _ => (None, 1),
    };
    let bias = Array1::from(read_f64s(input, bias_len)?.into_iter().map(T::of).collect::<Vec<_>>());
    MIONet::from_parts(config, header.seed, branches, trunks, image_tensors, bias)
}
