use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, NetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Hadamard product of all branch and trunk outputs, summed.
    #[default]
    LowRank,
    /// Trunk output reshaped to a `p₁×⋯×pₙ` tensor and contracted with the branches.
    HighRank,
    /// No trunk: `m` learned tensors give coefficients on a nodal basis of the output space.
    FiniteImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchConfig {
    /// Full layer list, input size first.
    pub layers: Vec<usize>,
    #[serde(default)]
    pub linear_no_bias: bool,
}

impl BranchConfig {
    pub fn mlp(layers: Vec<usize>) -> Self {
        Self {
            layers,
            linear_no_bias: false,
        }
    }

    pub fn linear(input: usize, output: usize) -> Self {
        Self {
            layers: vec![input, output],
            linear_no_bias: true,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layers.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureMap {
    #[default]
    None,
    /// Each listed coordinate `x` becomes `(cos 2πx, sin 2πx, cos 4πx, sin 4πx)`.
    PeriodicK2 { coordinates: Vec<usize> },
}

impl FeatureMap {
    pub fn is_periodic(&self, coordinate: usize) -> bool {
        matches!(self, FeatureMap::PeriodicK2 { coordinates } if coordinates.contains(&coordinate))
    }
}

/// One trunk net reading the query coordinates listed in `inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrunkConfig {
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub feature_map: FeatureMap,
    /// Full layer list; the first entry is the feature width.
    pub layers: Vec<usize>,
}

impl TrunkConfig {
    pub fn mlp(inputs: Vec<usize>, layers: Vec<usize>) -> Self {
        Self {
            inputs,
            feature_map: FeatureMap::None,
            layers,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs
            .iter()
            .map(|&c| if self.feature_map.is_periodic(c) { 4 } else { 1 })
            .sum()
    }

    pub fn output_dim(&self) -> usize {
        *self.layers.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MIONetConfig {
    #[serde(default)]
    pub variant: Variant,
    pub branches: Vec<BranchConfig>,
    /// More than one entry splits the query point into independent groups.
    #[serde(default)]
    pub trunks: Vec<TrunkConfig>,
    /// Dimension `d` of the query point `y`.
    #[serde(default)]
    pub trunk_input_dim: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// `m`, only for [`Variant::FiniteImage`].
    #[serde(default)]
    pub image_basis_size: Option<usize>,
}

fn default_activation() -> Activation {
    Activation::Relu
}

impl MIONetConfig {
    /// Low-rank model with fully-connected branches and a single trunk.
    pub fn low_rank(branch_layers: Vec<Vec<usize>>, trunk_layers: Vec<usize>) -> Self {
        let d = trunk_layers[0];
        Self {
            variant: Variant::LowRank,
            branches: branch_layers.into_iter().map(BranchConfig::mlp).collect(),
            trunks: vec![TrunkConfig::mlp((0..d).collect(), trunk_layers)],
            trunk_input_dim: d,
            activation: Activation::Relu,
            image_basis_size: None,
        }
    }

    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn branch_input_dims(&self) -> Vec<usize> {
        self.branches.iter().map(BranchConfig::input_dim).collect()
    }

    pub fn branch_spec(&self, i: usize) -> NetSpec {
        let b = &self.branches[i];
        if b.linear_no_bias {
            NetSpec::linear_no_bias(b.layers[0], b.layers[1])
        } else {
            NetSpec::new(b.layers.clone(), self.activation)
        }
    }

    pub fn trunk_spec(&self, g: usize) -> NetSpec {
        NetSpec::new(self.trunks[g].layers.clone(), self.activation)
    }

    /// Branch output widths `(p₁, …, pₙ)`.
    pub fn branch_widths(&self) -> Vec<usize> {
        self.branches.iter().map(BranchConfig::output_dim).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::config("branches", "at least one branch net is required"));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.layers.len() < 2 || b.layers.contains(&0) {
                return Err(Error::config(format!("branches[{i}].layers"), "need >= 2 positive sizes"));
            }
            if b.linear_no_bias && b.layers.len() != 2 {
                return Err(Error::config(
                    format!("branches[{i}].layers"),
                    "a linear_no_bias branch is a single layer [input, output]",
                ));
            }
        }
        for (g, t) in self.trunks.iter().enumerate() {
            if t.layers.len() < 2 || t.layers.contains(&0) {
                return Err(Error::config(format!("trunks[{g}].layers"), "need >= 2 positive sizes"));
            }
            if let FeatureMap::PeriodicK2 { coordinates } = &t.feature_map {
                if let Some(c) = coordinates.iter().find(|c| !t.inputs.contains(c)) {
                    return Err(Error::config(
                        format!("trunks[{g}].feature_map"),
                        format!("periodic coordinate {c} is not an input of this trunk"),
                    ));
                }
            }
            if t.layers[0] != t.feature_dim() {
                return Err(Error::config(
                    format!("trunks[{g}].layers"),
                    format!("input width {} does not match feature width {}", t.layers[0], t.feature_dim()),
                ));
            }
        }
        match self.variant {
            Variant::LowRank => {
                let p = self.branches[0].output_dim();
                if let Some(i) = self.branches.iter().position(|b| b.output_dim() != p) {
                    return Err(Error::config(
                        format!("branches[{i}].layers"),
                        format!("low-rank branches must all output width {p}"),
                    ));
                }
                if self.trunks.is_empty() {
                    return Err(Error::config("trunks", "the low-rank model needs a trunk net"));
                }
                if let Some(g) = self.trunks.iter().position(|t| t.output_dim() != p) {
                    return Err(Error::config(
                        format!("trunks[{g}].layers"),
                        format!("trunk output must equal the branch width {p}"),
                    ));
                }
                self.check_partition()?;
            }
            Variant::HighRank => {
                if self.trunks.len() != 1 {
                    return Err(Error::config("trunks", "the high-rank model uses exactly one trunk net"));
                }
                let want: usize = self.branch_widths().iter().product();
                if self.trunks[0].output_dim() != want {
                    return Err(Error::config(
                        "trunks[0].layers",
                        format!("trunk output must be the product of branch widths ({want})"),
                    ));
                }
                self.check_partition()?;
            }
            Variant::FiniteImage => {
                if !self.trunks.is_empty() {
                    return Err(Error::config("trunks", "the finite-image model has no trunk net"));
                }
                match self.image_basis_size {
                    Some(m) if m >= 1 => {}
                    _ => return Err(Error::config("image_basis_size", "finite-image models need m >= 1")),
                }
            }
        }
        Ok(())
    }

    fn check_partition(&self) -> Result<()> {
        let d = self.trunk_input_dim;
        if d == 0 {
            return Err(Error::config("trunk_input_dim", "must be at least 1"));
        }
        let mut seen = vec![false; d];
        for (g, t) in self.trunks.iter().enumerate() {
            if t.inputs.is_empty() {
                return Err(Error::config(format!("trunks[{g}].inputs"), "a trunk must read at least one coordinate"));
            }
            for &c in &t.inputs {
                if c >= d || seen[c] {
                    return Err(Error::config(
                        format!("trunks[{g}].inputs"),
                        format!("coordinate {c} is out of range or used twice"),
                    ));
                }
                seen[c] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::config("trunks", format!("coordinate {c} is not read by any trunk")));
        }
        Ok(())
    }

    /// Closed-form parameter count including the bias (and image tensors).
    pub fn param_count(&self) -> usize {
        let nets: usize = (0..self.branches.len())
            .map(|i| self.branch_spec(i).param_count())
            .chain((0..self.trunks.len()).map(|g| self.trunk_spec(g).param_count()))
            .sum();
        match self.variant {
            Variant::FiniteImage => {
                let m = self.image_basis_size.unwrap_or(0);
                nets + m * self.branch_widths().iter().product::<usize>() + m
            }
            _ => nets + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_low_rank_widths() {
        let cfg = MIONetConfig::low_rank(vec![vec![10, 8, 8], vec![10, 8, 6]], vec![1, 8, 8]);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("branches[1]"), "{err}");
        let cfg = MIONetConfig::low_rank(vec![vec![10, 8, 8]], vec![1, 8, 7]);
        assert!(cfg.validate().unwrap_err().to_string().contains("trunks[0]"));
    }

    #[test]
    fn trunk_groups_must_partition() {
        let mut cfg = MIONetConfig::low_rank(vec![vec![4, 5]], vec![2, 5]);
        cfg.trunks = vec![
            TrunkConfig::mlp(vec![0], vec![1, 5]),
            TrunkConfig::mlp(vec![0], vec![1, 5]),
        ];
        assert!(cfg.validate().is_err());
        cfg.trunks[1].inputs = vec![1];
        cfg.validate().unwrap();
    }

    #[test]
    fn periodic_feature_width() {
        let t = TrunkConfig {
            inputs: vec![0, 1],
            feature_map: FeatureMap::PeriodicK2 { coordinates: vec![0] },
            layers: vec![5, 3],
        };
        assert_eq!(t.feature_dim(), 5);
    }

    #[test]
    fn high_rank_trunk_width() {
        let mut cfg = MIONetConfig::low_rank(vec![vec![4, 2], vec![4, 3]], vec![1, 6]);
        cfg.variant = Variant::HighRank;
        cfg.validate().unwrap();
        cfg.trunks[0].layers = vec![1, 5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = MIONetConfig::low_rank(vec![vec![100, 200, 200]; 2], vec![1, 200, 200]);
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<MIONetConfig>(&s).unwrap(), cfg);
    }
}
