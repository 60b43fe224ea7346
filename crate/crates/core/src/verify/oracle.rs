//! The label oracle abstraction: anything that answers "what class is this
//! point" can be verified against a fingerprint, including models we only
//! reach over a pipe.

use crate::error::Result;
use crate::forest::Forest;
use crate::nn::{Model, Network};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDescriptor {
    /// Human-readable kind, e.g. "network", "forest", "pipe".
    pub kind: String,
    /// Content digest when the model is local; None for remote oracles.
    pub digest: Option<String>,
}

pub trait Oracle: Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<usize>;
    fn descriptor(&self) -> OracleDescriptor;

    /// Remote oracles that resize inputs on their side may accept points of
    /// any dimension; local models never do.
    fn adapts_input_dim(&self) -> bool {
        false
    }

    /// Whether queries may be issued from several threads at once. Pipe
    /// oracles serialize over one byte stream, so they opt out.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

impl Oracle for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }
    fn num_classes(&self) -> usize {
        Network::num_classes(self)
    }
    fn predict(&self, x: &[f64]) -> Result<usize> {
        self.predict_label(x)
    }
    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor { kind: "network".into(), digest: Some(self.digest()) }
    }
}

impl Oracle for Forest {
    fn input_dim(&self) -> usize {
        self.d
    }
    fn num_classes(&self) -> usize {
        self.c
    }
    fn predict(&self, x: &[f64]) -> Result<usize> {
        Forest::predict(self, x)
    }
    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor { kind: "forest".into(), digest: Some(self.digest()) }
    }
}

impl Oracle for Model {
    fn input_dim(&self) -> usize {
        Model::input_dim(self)
    }
    fn num_classes(&self) -> usize {
        Model::num_classes(self)
    }
    fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Model::Network(n) => n.predict_label(x),
            Model::Forest(f) => f.predict(x),
        }
    }
    fn descriptor(&self) -> OracleDescriptor {
        match self {
            Model::Network(n) => Oracle::descriptor(n),
            Model::Forest(f) => Oracle::descriptor(f),
        }
    }
}
