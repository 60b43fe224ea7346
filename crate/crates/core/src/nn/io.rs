//! Model container format.
//!
//! Layout: 4-byte magic "BMK1", little-endian u32 header length, JSON header,
//! then (for networks) raw little-endian f64 parameter blocks in layer order:
//! each layer's weights row-major, then its biases. Forests carry their trees
//! inside the JSON header and have no parameter blocks. The header's
//! `version` field gates parsing.

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::nn::{Activation, Layer, Network};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"BMK1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerMeta {
    rows: usize,
    cols: usize,
    activation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    version: u32,
    kind: String,
    arch_id: String,
    input_dim: usize,
    num_classes: usize,
    layers: Vec<LayerMeta>,
    seed_lineage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forest: Option<Forest>,
}

/// Either model family the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Network(Network),
    Forest(Forest),
}

impl Model {
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Network(n) => n.input_dim(),
            Model::Forest(f) => f.d,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Model::Network(n) => n.num_classes(),
            Model::Forest(f) => f.c,
        }
    }

    pub fn digest(&self) -> String {
        match self {
            Model::Network(n) => n.digest(),
            Model::Forest(f) => f.digest(),
        }
    }
}

fn container(header: &Header, blocks: &[u8]) -> Result<Vec<u8>> {
    let header_json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(8 + header_json.len() + blocks.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    out.extend_from_slice(blocks);
    Ok(out)
}

/// Serialize a network into container bytes.
pub fn network_bytes(net: &Network) -> Result<Vec<u8>> {
    let header = Header {
        version: FORMAT_VERSION,
        kind: "network".into(),
        arch_id: net.arch_id().to_string(),
        input_dim: net.input_dim(),
        num_classes: net.num_classes(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerMeta {
                rows: l.out_dim,
                cols: l.in_dim,
                activation: l.activation.tag().to_string(),
            })
            .collect(),
        seed_lineage: net.lineage().to_string(),
        forest: None,
    };
    let mut blocks = Vec::new();
    for layer in net.layers() {
        for w in &layer.weights {
            blocks.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.bias {
            blocks.extend_from_slice(&b.to_le_bytes());
        }
    }
    container(&header, &blocks)
}

/// Serialize a forest into container bytes (trees live in the header).
pub fn forest_bytes(forest: &Forest) -> Result<Vec<u8>> {
    let header = Header {
        version: FORMAT_VERSION,
        kind: "forest".into(),
        arch_id: "forest".into(),
        input_dim: forest.d,
        num_classes: forest.c,
        layers: Vec::new(),
        seed_lineage: format!("forest(seed={})", forest.seed),
        forest: Some(forest.clone()),
    };
    container(&header, &[])
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network_bytes(net)?)?;
    Ok(())
}

pub fn save_forest(forest: &Forest, path: &Path) -> Result<()> {
    std::fs::write(path, forest_bytes(forest)?)?;
    Ok(())
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    match model {
        Model::Network(n) => save_network(n, path),
        Model::Forest(f) => save_forest(f, path),
    }
}

/// Parse container bytes back into a model.
pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 8 {
        return Err(Error::Format("model file truncated before header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic; not a model file".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + header_len {
        return Err(Error::Format("model file truncated inside header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..8 + header_len])
        .map_err(|e| Error::Format(format!("bad model header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {}",
            header.version
        )));
    }
    let mut rest = &bytes[8 + header_len..];
    match header.kind.as_str() {
        "forest" => {
            if !rest.is_empty() {
                return Err(Error::Format("trailing bytes after forest header".into()));
            }
            let forest = header
                .forest
                .ok_or_else(|| Error::Format("forest header missing tree payload".into()))?;
            Ok(Model::Forest(forest))
        }
        "network" => {
            let mut layers = Vec::with_capacity(header.layers.len());
            for meta in &header.layers {
                let n_params = meta.rows * meta.cols + meta.rows;
                let need = n_params * 8;
                if rest.len() < need {
                    return Err(Error::Format("model file truncated inside parameters".into()));
                }
                let mut values = Vec::with_capacity(n_params);
                for chunk in rest[..need].chunks_exact(8) {
                    values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
                }
                rest = &rest[need..];
                let bias = values.split_off(meta.rows * meta.cols);
                layers.push(Layer {
                    in_dim: meta.cols,
                    out_dim: meta.rows,
                    weights: values,
                    bias,
                    activation: Activation::from_tag(&meta.activation)?,
                });
            }
            if !rest.is_empty() {
                return Err(Error::Format("trailing bytes after parameters".into()));
            }
            let net = Network::from_layers(layers, &header.arch_id, &header.seed_lineage)
                .map_err(|e| Error::Format(format!("inconsistent model header: {e}")))?;
            if net.input_dim() != header.input_dim || net.num_classes() != header.num_classes {
                return Err(Error::Format("header dims disagree with layer shapes".into()));
            }
            Ok(Model::Network(net))
        }
        other => Err(Error::Format(format!("unknown model kind '{other}'"))),
    }
}

pub fn load_model(path: &Path) -> Result<Model> {
    model_from_bytes(&std::fs::read(path)?)
}

pub fn load_network(path: &Path) -> Result<Network> {
    match load_model(path)? {
        Model::Network(n) => Ok(n),
        Model::Forest(_) => Err(Error::Format("expected a network model file, found a forest".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, Kind, SyntheticSpec};
    use crate::forest::train_forest;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn network_round_trip_is_bit_exact() {
        let net = Network::small_mlp(6, 3, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bmk");
        save_network(&net, &path).unwrap();
        let back = load_network(&path).unwrap();
        assert_eq!(net, back);
        // Forward agreement on random inputs, bitwise.
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
            assert_eq!(net.forward_logits(&x).unwrap(), back.forward_logits(&x).unwrap());
        }
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let net = Network::tiny_mlp(3, 2, 1).unwrap();
        let bytes = network_bytes(&net).unwrap();
        for cut in [2usize, 6, bytes.len() / 2, bytes.len() - 3] {
            let err = model_from_bytes(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut at {cut}: {err}");
        }
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let net = Network::tiny_mlp(3, 2, 1).unwrap();
        let mut bytes = network_bytes(&net).unwrap();
        bytes[0] = b'X';
        assert!(matches!(model_from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_version_names_the_version() {
        let net = Network::tiny_mlp(3, 2, 1).unwrap();
        let bytes = network_bytes(&net).unwrap();
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let json = String::from_utf8(bytes[8..8 + header_len].to_vec()).unwrap();
        let bumped = json.replace("\"version\":1", "\"version\":9");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(bumped.len() as u32).to_le_bytes());
        out.extend_from_slice(bumped.as_bytes());
        out.extend_from_slice(&bytes[8 + header_len..]);
        match model_from_bytes(&out) {
            Err(Error::Format(msg)) => assert!(msg.contains('9'), "message was: {msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn forest_round_trip() {
        let data = generate(&SyntheticSpec {
            kind: Kind::Blobs,
            n_per_class: 10,
            classes: 2,
            dim: 3,
            noise_sigma: 0.1,
            seed: 2,
        })
        .unwrap();
        let forest = train_forest(&data, 3, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bmk");
        save_forest(&forest, &path).unwrap();
        match load_model(&path).unwrap() {
            Model::Forest(back) => assert_eq!(forest, back),
            other => panic!("expected forest, got {other:?}"),
        }
        assert!(matches!(load_network(&path), Err(Error::Format(_))));
    }
}
