use std::fmt::Write as _;
use std::path::PathBuf;

use mionet::data::Dataset;
use mionet::presets::{preset, Scale, Table};
use mionet::systems::generate;
use mionet::train::{run_trials, TrialReport};
use mionet::{Error, Result};
use serde_json::json;

use crate::gen::specs;
use crate::manifest::Run;
use crate::{LayoutArg, OutArg};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_parser = |s: &str| s.parse::<Table>().map_err(|e| e.to_string()))]
    pub table: Table,
    #[arg(long, default_value = "quick", value_parser = |s: &str| s.parse::<Scale>().map_err(|e| e.to_string()))]
    pub scale: Scale,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reuse `train/` and `test/` datasets from this directory instead of generating them.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Write the generated datasets under `<out>/data`.
    #[arg(long)]
    pub save_data: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub train_count: Option<usize>,
    #[arg(long)]
    pub test_count: Option<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

fn thousands(n: usize) -> String {
    format!("{}K", (n as f64 / 1000.0).round())
}

pub fn run(args: Args) -> Result<()> {
    let mut p = preset(args.table, args.scale);
    if let Some(e) = args.epochs {
        p.train.epochs = e;
    }
    p.train.seed = args.seed;
    p.train_count = args.train_count.unwrap_or(p.train_count);
    p.test_count = args.test_count.unwrap_or(p.test_count);
    let mut run = Run::start("bench", &args.out.out)?;
    let (train, test) = match &args.data {
        Some(dir) => (Dataset::read(&dir.join("train"))?, Dataset::read(&dir.join("test"))?),
        None => {
            let (a, b) = specs(p.system, p.train_count, p.test_count, None, None, args.seed);
            let (train, test) = (generate(&a)?, generate(&b)?);
            if args.save_data {
                let layout = LayoutArg::Auto.resolve(p.system);
                train.write(&run.path("data/train"), layout)?;
                test.write(&run.path("data/test"), layout)?;
            }
            (train, test)
        }
    };
    if train.header().provenance.system != p.system.name() {
        return Err(Error::Data(format!(
            "table {} needs {} data, found {}",
            args.table,
            p.system,
            train.header().provenance.system
        )));
    }
    let mut reports: Vec<TrialReport> = Vec::new();
    for row in &p.rows {
        let report = run_trials::<f64>(&row.label, &row.model, &p.train, &train, &test, args.trials, |_, _, _| Ok(()))?;
        let dir = slug(&row.label);
        run.write_json(&format!("{dir}/report.json"), &report)?;
        run.write(&format!("{dir}/report.csv"), report.to_csv())?;
        run.write(&format!("{dir}/loss_history.csv"), report.history_csv())?;
        eprintln!("{}: {}", row.label, report.summary());
        reports.push(report);
    }
    let mut md = format!(
        "| Model | Depth | Width | Parameters | L2 relative error |\n|---|---|---|---|---|\n"
    );
    let mut csv = String::from("model,depth,width,parameters,error_mean,error_std\n");
    for (row, r) in p.rows.iter().zip(&reports) {
        writeln!(md, "| {} | {} | {} | {} | {} |", row.label, row.depth, row.width, thousands(r.param_count), r.summary()).unwrap();
        let std = r.std.map_or(String::new(), |s| format!("{s:e}"));
        writeln!(csv, "{},{},{},{},{:e},{std}", row.label, row.depth, row.width, r.param_count, r.mean).unwrap();
    }
    run.write("table.md", &md)?;
    run.write("table.csv", csv)?;
    print!("{md}");
    run.finish(
        json!({
            "preset": p,
            "trials": args.trials,
            "data": args.data,
            "quick": args.scale == Scale::Quick,
        }),
        (0..args.trials as u64).map(|k| args.seed + k).collect(),
    )
}
