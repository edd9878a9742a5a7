//! Binary model format, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "OFFRFMDL"
//! version      u16
//! n_features   u32
//! n_classes    u32, then per class: u32 byte length + UTF-8 name
//! params       n_trees u32 | max_depth u32 (u32::MAX = none)
//!              | min_samples_leaf u32 | max_features u8 tag + f64
//!              | seed u64 | bootstrap u8
//! n_trees      u32, then per tree: n_nodes u32, then per node:
//!              tag u8 = 0 leaf: n_classes x u32 counts
//!              tag u8 = 1 split: feature u32 | threshold f64 | left u32 | right u32
//! ```

use super::tree::{DecisionTree, Node};
use super::{ForestParams, MaxFeatures, RandomForest};
use crate::error::{ModelError, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"OFFRFMDL";
pub const MODEL_VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).ok_or(ModelError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(ModelError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// Guards allocations against corrupt counts.
    fn count(&mut self, min_item_size: usize) -> Result<usize, ModelError> {
        let n = self.u32()?;
        if n.saturating_mul(min_item_size) > self.bytes.len() - self.pos {
            return Err(ModelError::Truncated);
        }
        Ok(n)
    }
}

pub fn save_model(model: &RandomForest) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u16(MODEL_VERSION);
    w.u32(model.n_features());
    w.u32(model.classes().len());
    for c in model.classes() {
        w.u32(c.len());
        w.0.extend_from_slice(c.as_bytes());
    }
    let p = model.params();
    w.u32(p.n_trees);
    w.u32(p.max_depth.unwrap_or(u32::MAX as usize));
    w.u32(p.min_samples_leaf);
    let (tag, frac) = match p.max_features {
        MaxFeatures::Sqrt => (0, 0.0),
        MaxFeatures::All => (1, 0.0),
        MaxFeatures::Fraction(f) => (2, f),
    };
    w.u8(tag);
    w.f64(frac);
    w.u64(p.seed);
    w.u8(p.bootstrap as u8);
    w.u32(model.trees().len());
    for tree in model.trees() {
        w.u32(tree.nodes().len());
        for node in tree.nodes() {
            match node {
                Node::Leaf { counts } => {
                    w.u8(0);
                    counts.iter().for_each(|&c| w.u32(c as usize));
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    w.u8(1);
                    w.u32(*feature);
                    w.f64(*threshold);
                    w.u32(*left);
                    w.u32(*right);
                }
            }
        }
    }
    w.0
}

pub fn load_model(bytes: &[u8]) -> Result<RandomForest, ModelError> {
    if bytes.len() < MODEL_MAGIC.len() {
        return Err(if MODEL_MAGIC.starts_with(bytes) {
            ModelError::Truncated
        } else {
            ModelError::BadMagic
        });
    }
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = r.u16()?;
    if version != MODEL_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let n_features = r.u32()?;
    let n_classes = r.count(4)?;
    let mut classes = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| ModelError::Corrupt("class name is not UTF-8".into()))?;
        classes.push(name.to_string());
    }
    let n_trees = r.u32()?;
    let max_depth = match r.u32()? {
        d if d == u32::MAX as usize => None,
        d => Some(d),
    };
    let min_samples_leaf = r.u32()?;
    let tag = r.u8()?;
    let frac = r.f64()?;
    let max_features = match tag {
        0 => MaxFeatures::Sqrt,
        1 => MaxFeatures::All,
        2 => MaxFeatures::Fraction(frac),
        t => return Err(ModelError::Corrupt(format!("unknown max_features tag {t}"))),
    };
    let seed = r.u64()?;
    let bootstrap = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(ModelError::Corrupt(format!("bad bootstrap flag {b}"))),
    };
    let params = ForestParams {
        n_trees,
        max_depth,
        min_samples_leaf,
        max_features,
        seed,
        bootstrap,
    };

    let stored = r.count(5)?;
    let mut trees = Vec::with_capacity(stored);
    for _ in 0..stored {
        let n_nodes = r.count(1)?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let node = match r.u8()? {
                0 => Node::Leaf {
                    counts: (0..n_classes)
                        .map(|_| r.u32().map(|c| c as u32))
                        .collect::<Result<_, _>>()?,
                },
                1 => {
                    let feature = r.u32()?;
                    if feature >= n_features {
                        return Err(ModelError::Corrupt(format!("split on feature {feature} out of range")));
                    }
                    Node::Split {
                        feature,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    }
                }
                t => return Err(ModelError::Corrupt(format!("unknown node tag {t}"))),
            };
            nodes.push(node);
        }
        let tree = DecisionTree::from_nodes(nodes, n_classes).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        trees.push(tree);
    }
    if r.pos != bytes.len() {
        return Err(ModelError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    RandomForest::from_parts(trees, params, classes, n_features).map_err(|e| ModelError::Corrupt(e.to_string()))
}
