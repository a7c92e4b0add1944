//! Benchmark settings for the three systems at two scales.
//!
//! Every model in a table has roughly the same parameter count. The
//! single-branch baseline reads both inputs concatenated (200 values) and
//! its branch net is one layer shorter than its trunk net.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BranchConfig, FeatureMap, MIONetConfig, TrunkConfig};
use crate::systems::{System, SENSORS};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    T1,
    T2,
    T3,
}

impl Table {
    pub fn system(self) -> System {
        match self {
            Table::T1 => System::Ode,
            Table::T2 => System::Dr,
            Table::T3 => System::Ad,
        }
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t1" => Ok(Table::T1),
            "t2" => Ok(Table::T2),
            "t3" => Ok(Table::T3),
            _ => Err(Error::Usage(format!("unknown table `{s}`, expected t1, t2 or t3"))),
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Table::T1 => "t1",
            Table::T2 => "t2",
            Table::T3 => "t3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Paper,
    /// 10 000 epochs on 200 training functions.
    Quick,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "quick" => Ok(Scale::Quick),
            _ => Err(Error::Usage(format!("unknown scale `{s}`, expected paper or quick"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Paper => "paper",
            Scale::Quick => "quick",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub depth: usize,
    pub width: usize,
    pub model: MIONetConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPreset {
    pub table: Table,
    pub scale: Scale,
    pub system: System,
    pub train_count: usize,
    pub test_count: usize,
    pub train: TrainConfig,
    pub rows: Vec<BenchRow>,
}

fn hidden(input: usize, width: usize, depth: usize) -> Vec<usize> {
    std::iter::once(input).chain(std::iter::repeat(width).take(depth)).collect()
}

/// Two fully-connected branches and one trunk, all `depth` layers of `width`.
pub fn mionet(d: usize, depth: usize, width: usize) -> MIONetConfig {
    MIONetConfig::low_rank(vec![hidden(SENSORS, width, depth); 2], hidden(d, width, depth))
}

/// Single branch over both inputs (`depth − 1` layers) and a `depth`-layer trunk.
pub fn deeponet(d: usize, depth: usize, width: usize) -> MIONetConfig {
    MIONetConfig::low_rank(vec![hidden(2 * SENSORS, width, depth - 1)], hidden(d, width, depth))
}

/// Advection-diffusion model: MLP branch for `D`, bias-free linear branch for `u₀`.
pub fn mionet_linear_u0(depth: usize, width: usize) -> MIONetConfig {
    let mut cfg = mionet(2, depth, width);
    cfg.branches[1] = BranchConfig::linear(SENSORS, width);
    cfg
}

/// As [`mionet_linear_u0`] with separate trunks for `x` (periodic features) and `t`.
pub fn mionet_periodic(depth: usize, width: usize) -> MIONetConfig {
    let mut cfg = mionet_linear_u0(depth, width);
    cfg.trunks = vec![
        TrunkConfig {
            inputs: vec![0],
            feature_map: FeatureMap::PeriodicK2 { coordinates: vec![0] },
            layers: hidden(4, width, depth),
        },
        TrunkConfig::mlp(vec![1], hidden(1, width, depth)),
    ];
    cfg
}

fn row(label: &str, depth: usize, width: usize, model: MIONetConfig) -> BenchRow {
    BenchRow {
        label: label.to_string(),
        depth,
        width,
        model,
    }
}

pub fn preset(table: Table, scale: Scale) -> BenchPreset {
    let (rows, lr, test_count) = match table {
        Table::T1 => (
            vec![
                row("MIONet", 2, 200, mionet(1, 2, 200)),
                row("DeepONet (same size)", 2, 312, deeponet(1, 2, 312)),
                row("DeepONet (best)", 2, 300, deeponet(1, 2, 300)),
            ],
            1e-3,
            1000,
        ),
        Table::T2 => (
            vec![
                row("MIONet", 2, 200, mionet(2, 2, 200)),
                row("DeepONet (same size)", 2, 312, deeponet(2, 2, 312)),
                row("DeepONet (best)", 2, 400, deeponet(2, 2, 400)),
            ],
            1e-3,
            5000,
        ),
        Table::T3 => (
            vec![
                row("MIONet", 3, 300, mionet_linear_u0(3, 300)),
                row("MIONet (periodic)", 3, 248, mionet_periodic(3, 248)),
                row("DeepONet (same size)", 3, 343, deeponet(2, 3, 343)),
                row("DeepONet (best)", 3, 300, deeponet(2, 3, 300)),
            ],
            2e-4,
            1000,
        ),
    };
    let (epochs, train_count, test_count) = match scale {
        Scale::Paper => (100_000, 1000, test_count),
        Scale::Quick => (10_000, 200, 200),
    };
    BenchPreset {
        table,
        scale,
        system: table.system(),
        train_count,
        test_count,
        train: TrainConfig::new(lr, epochs),
        rows,
    }
}
