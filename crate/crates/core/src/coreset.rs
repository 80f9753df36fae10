use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::stable_sum;
use crate::points::WeightedPointSet;

/// Where a coreset point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    /// Sampled from inner layer `i`.
    Layer(u32),
    /// Kept verbatim from the outer set.
    Outer,
    /// Uniform-sampling baseline.
    Uniform,
    /// Nearest-neighbour-weighted baseline representative.
    NnRepresentative,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Layer(i) => write!(f, "layer{i}"),
            Origin::Outer => f.write_str("outer"),
            Origin::Uniform => f.write_str("uniform"),
            Origin::NnRepresentative => f.write_str("nn"),
        }
    }
}

impl FromStr for Origin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outer" => Ok(Origin::Outer),
            "uniform" => Ok(Origin::Uniform),
            "nn" => Ok(Origin::NnRepresentative),
            _ => s
                .strip_prefix("layer")
                .and_then(|i| i.parse().ok())
                .map(Origin::Layer)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown origin tag {s:?}"))),
        }
    }
}

/// Parameters the coreset was built with.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuilderParams {
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    /// Requested sample count per layer.
    pub layer_targets: Vec<usize>,
    /// Number of input points in each layer.
    pub layer_populations: Vec<usize>,
}

/// A weighted summary of an input point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    data: WeightedPointSet,
    origin: Vec<Origin>,
    source: Vec<usize>,
    params: BuilderParams,
}

impl Coreset {
    pub fn new(
        data: WeightedPointSet,
        origin: Vec<Origin>,
        source: Vec<usize>,
        params: BuilderParams,
    ) -> Self {
        assert_eq!(data.len(), origin.len());
        assert_eq!(data.len(), source.len());
        Self {
            data,
            origin,
            source,
            params,
        }
    }

    /// Reassembles a coreset read back from storage.
    pub fn from_parts(
        data: WeightedPointSet,
        origin: Vec<Origin>,
        source: Vec<usize>,
    ) -> Result<Self> {
        if origin.len() != data.len() || source.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                found: origin.len().min(source.len()),
            });
        }
        Ok(Self::new(data, origin, source, BuilderParams::default()))
    }

    pub fn data(&self) -> &WeightedPointSet {
        &self.data
    }

    pub fn origin(&self) -> &[Origin] {
        &self.origin
    }

    /// Row index of every coreset point in the source instance.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn params(&self) -> &BuilderParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        stable_sum(self.data.weights().iter().copied())
    }

    pub fn outer_count(&self) -> usize {
        self.origin.iter().filter(|o| **o == Origin::Outer).count()
    }

    pub fn into_data(self) -> WeightedPointSet {
        self.data
    }
}
