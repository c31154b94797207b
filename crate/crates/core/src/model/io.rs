//! Model file: one JSON document holding the structure, the leaf graph,
//! the bin layout of ψ and ψ itself. The codebook is referenced by path
//! and pinned by checksum.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Block, LeafId, StaogModel, Structure};
use crate::error::{Error, Result};
use crate::features::Codebook;

const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureRecord {
    #[serde(rename = "T")]
    segments: usize,
    #[serde(rename = "K")]
    cells: usize,
    grid: [usize; 2],
    m: usize,
    rho: u32,
    part_w: u32,
    part_h: u32,
    sigma: Vec<i32>,
    #[serde(rename = "H")]
    max_hypotheses: usize,
    near_radius: f64,
    search_radius: u32,
    search_stride: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookRef {
    path: String,
    sha256: String,
    words: usize,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrNodeRecord {
    id: usize,
    and_node: usize,
    cell: [usize; 2],
    leaves: Vec<LeafId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Graph {
    or_nodes: Vec<OrNodeRecord>,
    next_leaf: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    label: Option<String>,
    structure: StructureRecord,
    codebook_ref: CodebookRef,
    graph: Graph,
    bin_layout: Vec<Block>,
    params: Vec<f64>,
}

impl StaogModel {
    pub fn to_json(&self) -> String {
        let s = &self.structure;
        let cols = s.grid[1];
        let file = ModelFile {
            version: VERSION,
            label: self.label.clone(),
            structure: StructureRecord {
                segments: s.segments,
                cells: s.cells(),
                grid: s.grid,
                m: s.m,
                rho: s.rho,
                part_w: s.part_w,
                part_h: s.part_h,
                sigma: s.steps.clone(),
                max_hypotheses: s.max_hypotheses,
                near_radius: s.near_radius,
                search_radius: s.search_radius,
                search_stride: s.search_stride,
            },
            codebook_ref: CodebookRef {
                path: self.codebook_path.clone(),
                sha256: self.codebook.checksum(),
                words: self.codebook.len(),
                dim: self.codebook.dim(),
            },
            graph: Graph {
                or_nodes: self
                    .or_children
                    .iter()
                    .enumerate()
                    .map(|(i, leaves)| {
                        let cell = self.cell_of(i);
                        OrNodeRecord {
                            id: i,
                            and_node: self.segment_of(i),
                            cell: [cell / cols, cell % cols],
                            leaves: leaves.clone(),
                        }
                    })
                    .collect(),
                next_leaf: self.next_leaf,
            },
            bin_layout: self.layout.blocks().to_vec(),
            params: self.psi.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parses a model document against an already loaded codebook, which
    /// must match the pinned checksum.
    pub fn from_json(text: &str, codebook: Arc<Codebook>) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != VERSION {
            return Err(Error::format(format!("unsupported model version {}", file.version)));
        }
        let r = file.structure;
        let structure = Structure {
            segments: r.segments,
            grid: r.grid,
            m: r.m,
            rho: r.rho,
            part_w: r.part_w,
            part_h: r.part_h,
            steps: r.sigma,
            max_hypotheses: r.max_hypotheses,
            near_radius: r.near_radius,
            search_radius: r.search_radius,
            search_stride: r.search_stride,
        };
        structure.validate().map_err(|e| Error::format(e.to_string()))?;
        if r.cells != structure.cells() {
            return Err(Error::format(format!("K = {} disagrees with grid {:?}", r.cells, r.grid)));
        }
        let cref = file.codebook_ref;
        if cref.sha256 != codebook.checksum() || cref.words != codebook.len() || cref.dim != codebook.dim() {
            return Err(Error::format(format!("codebook does not match the reference pinned in the model ({})", cref.path)));
        }
        let or_nodes = file.graph.or_nodes;
        if or_nodes.iter().enumerate().any(|(i, o)| o.id != i) {
            return Err(Error::format("or-nodes must be listed in id order"));
        }
        let children = or_nodes.into_iter().map(|o| o.leaves).collect();
        let mut model = Self::from_graph(structure, codebook, children, Some(file.graph.next_leaf))
            .map_err(|e| Error::format(e.to_string()))?;
        if model.layout.blocks() != file.bin_layout.as_slice() {
            return Err(Error::format("bin_layout does not match the canonical layout of the graph"));
        }
        model.set_psi(file.params).map_err(|e| Error::format(e.to_string()))?;
        if model.psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("params contain non-finite values"));
        }
        model.codebook_path = cref.path;
        model.label = file.label;
        Ok(model)
    }

    /// Loads a model and the codebook it references. A relative codebook
    /// path is resolved against the model file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::format(format!("cannot read model {}: {e}", path.display())))?;
        #[derive(Deserialize)]
        struct Peek {
            codebook_ref: PeekRef,
        }
        #[derive(Deserialize)]
        struct PeekRef {
            path: String,
        }
        let peek: Peek = serde_json::from_str(&text)?;
        let cb_path = Path::new(&peek.codebook_ref.path);
        let cb_path = if cb_path.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(cb_path)
        } else {
            cb_path.to_path_buf()
        };
        let codebook = Codebook::load(&cb_path)?;
        Self::from_json(&text, Arc::new(codebook))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        crate::commands::write_atomic(path, text.as_bytes())
    }
}
