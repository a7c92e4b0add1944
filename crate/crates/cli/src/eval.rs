use std::fmt::Write as _;
use std::path::PathBuf;

use mionet::data::Dataset;
use mionet::model::{read_model, Batch, MIONet};
use mionet::systems::{reference_field, System};
use mionet::train::{concatenates_inputs, l2_relative_error, predict_dataset};
use mionet::{Error, Result};
use ndarray::Array2;
use serde_json::json;

use crate::manifest::{open, Run};
use crate::OutArg;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// A single dataset directory (for example `data/test`).
    #[arg(long)]
    pub data: PathBuf,
    /// Function indices for which a dense 100×100 prediction grid is written.
    #[arg(long, value_delimiter = ',')]
    pub samples: Vec<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

fn grid_csv(model: &MIONet<f64>, data: &Dataset, system: System, k: usize) -> Result<String> {
    if k >= data.group_count() {
        return Err(Error::Usage(format!("sample {k} is beyond the {} functions of the dataset", data.group_count())));
    }
    let coords: Vec<Vec<f64>> = data.functions().iter().map(|f| f.row(k).to_vec()).collect();
    let views: Vec<&[f64]> = coords.iter().map(Vec::as_slice).collect();
    let field = reference_field(system, &views)?;
    let (nx, nt) = field.values.dim();
    let points = Array2::from_shape_fn((nx * nt, 2), |(r, c)| {
        if c == 0 {
            field.x.points()[r / nt]
        } else {
            field.t.points()[r % nt]
        }
    });
    let inputs = coords
        .iter()
        .map(|c| Array2::from_shape_vec((1, c.len()), c.clone()).expect("row shape"))
        .collect();
    let mut batch = Batch::cartesian(inputs, points)?;
    if concatenates_inputs(model.config(), data) {
        batch = batch.concatenated();
    }
    let prep = model.prepare(batch)?;
    let (preds, _) = model.forward_batch(&prep)?;
    let mut out = String::from("x,t,u_pred,u_true,abs_err\n");
    for (r, p) in preds.iter().enumerate() {
        let (i, j) = (r / nt, r % nt);
        let truth = field.values[[i, j]];
        writeln!(out, "{},{},{p:e},{truth:e},{:e}", field.x.points()[i], field.t.points()[j], (p - truth).abs()).unwrap();
    }
    Ok(out)
}

pub fn run(args: Args) -> Result<()> {
    let model: MIONet<f64> = read_model(&mut open(&args.checkpoint)?)?;
    let data = Dataset::read(&args.data)?;
    let preds = predict_dataset(&model, &data)?;
    let report = l2_relative_error(&preds, data.targets(), &data.groups())?;
    let mut run = Run::start("eval", &args.out.out)?;
    let mut per = String::from("function,l2_relative_error\n");
    for (k, e) in report.per_group.iter().enumerate() {
        match e {
            Some(e) => writeln!(per, "{k},{e:e}").unwrap(),
            None => writeln!(per, "{k},").unwrap(),
        }
    }
    run.write("per_function.csv", per)?;
    run.write_json(
        "metrics.json",
        &json!({
            "l2_relative_error": report.mean,
            "functions": data.group_count(),
            "records": data.len(),
            "excluded": report.excluded,
        }),
    )?;
    if !args.samples.is_empty() {
        let system: System = data.header().provenance.system.parse()?;
        for &k in &args.samples {
            let csv = grid_csv(&model, &data, system, k)?;
            run.write(&format!("grid_{k}.csv"), csv)?;
        }
    }
    println!("l2 relative error {:.4} %", 100.0 * report.mean);
    run.finish(
        json!({ "checkpoint": args.checkpoint, "data": args.data, "samples": args.samples }),
        vec![],
    )
}
