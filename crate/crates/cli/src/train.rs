use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mionet::data::Dataset;
use mionet::model::{write_model, MIONetConfig};
use mionet::train::{run_trials, TrainConfig};
use mionet::Result;
use serde_json::json;

use crate::manifest::{read_json, Run};
use crate::OutArg;

#[derive(clap::Args)]
pub struct Args {
    /// Dataset directory holding `train/` and `test/`.
    #[arg(long)]
    pub data: PathBuf,
    /// Model configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Training configuration (JSON); lr 1e-3 and 10 000 epochs when omitted.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Base seed; overrides the training configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the epoch count of the training configuration.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

pub fn run(args: Args) -> Result<()> {
    let model: MIONetConfig = read_json(&args.config)?;
    model.validate()?;
    let mut cfg = match &args.train_config {
        Some(p) => read_json(p)?,
        None => TrainConfig::new(1e-3, 10_000),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let train = Dataset::read(&args.data.join("train"))?;
    let test = Dataset::read(&args.data.join("test"))?;
    let mut run = Run::start("train", &args.out.out)?;
    let label = args.config.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
    let report = run_trials::<f64>(&label, &model, &cfg, &train, &test, args.trials, |k, m, _| {
        let path = run.path(&format!("trial_{k}.model"));
        let mut out = BufWriter::new(File::create(path)?);
        write_model(m, &mut out)
    })?;
    run.write_json("report.json", &report)?;
    run.write("report.csv", report.to_csv())?;
    run.write("loss_history.csv", report.history_csv())?;
    println!("{label}: {} over {} trial(s)", report.summary(), report.errors.len());
    run.finish(
        json!({ "model": model, "train": cfg, "data": args.data, "trials": args.trials }),
        report.seeds.clone(),
    )
}
