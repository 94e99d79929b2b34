//! Integrity checks for every artifact type: magic, version, checksum and
//! content invariants.

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::fem::trajectory::{decode_trajectory, TRAJECTORY_MAGIC};
use crate::graphnet::{decode_checkpoint, CHECKPOINT_MAGIC};
use crate::io::{read_file, unseal};
use crate::mesh::format::{decode_graph, GRAPH_MAGIC};
use std::fmt;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArtifactKind {
    Graph,
    Trajectory,
    Checkpoint,
    Manifest,
}

impl ArtifactKind {
    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::Graph => "PGN1",
            ArtifactKind::Trajectory => "PTR1",
            ArtifactKind::Checkpoint => "PMP1",
            ArtifactKind::Manifest => "manifest",
        }
    }

    pub fn detect(bytes: &[u8]) -> Option<Self> {
        match bytes.get(..4)? {
            m if m == GRAPH_MAGIC => Some(ArtifactKind::Graph),
            m if m == TRAJECTORY_MAGIC => Some(ArtifactKind::Trajectory),
            m if m == CHECKPOINT_MAGIC => Some(ArtifactKind::Checkpoint),
            _ if bytes.starts_with(b"graphpde-manifest") => Some(ArtifactKind::Manifest),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub kind: Option<ArtifactKind>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = self.kind.map_or("unknown", ArtifactKind::name);
        if self.violations.is_empty() {
            return write!(f, "{kind}: OK");
        }
        write!(f, "{kind}: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

fn describe(e: Error) -> String {
    match e {
        Error::Checksum(_) => "checksum mismatch".to_string(),
        e => e.to_string(),
    }
}

/// Validates one artifact. I/O failures on the file itself are errors;
/// everything found inside it is reported as a violation.
pub fn validate_file(path: &Path) -> Result<ValidationReport> {
    let bytes = read_file(path)?;
    let kind = ArtifactKind::detect(&bytes);
    let mut violations = Vec::new();
    match kind {
        None => violations.push("unrecognized file type (bad magic)".to_string()),
        Some(ArtifactKind::Manifest) => check_manifest(path, &bytes, &mut violations),
        Some(k) => {
            if let Err(e) = unseal(k.name(), &bytes) {
                violations.push(describe(e));
            } else {
                check_binary(k, &bytes, &mut violations);
            }
        }
    }
    Ok(ValidationReport { kind, violations })
}

fn check_binary(kind: ArtifactKind, bytes: &[u8], v: &mut Vec<String>) {
    match kind {
        ArtifactKind::Graph => match decode_graph(bytes) {
            Ok(g) => v.extend(g.check()),
            Err(e) => v.push(describe(e)),
        },
        ArtifactKind::Trajectory => match decode_trajectory(bytes) {
            Ok(t) => v.extend(t.check()),
            Err(e) => v.push(describe(e)),
        },
        ArtifactKind::Checkpoint => match decode_checkpoint(bytes) {
            Ok(c) => {
                if let Err(e) = c.model.arch.validate() {
                    v.push(describe(e));
                }
                if c.model.params.len() != c.model.arch.num_params() {
                    v.push(format!(
                        "{} parameters stored, architecture needs {}",
                        c.model.params.len(),
                        c.model.arch.num_params()
                    ));
                }
                if c.model.params.iter().any(|p| !p.is_finite()) {
                    v.push("non-finite parameter".into());
                }
                let n = &c.model.norm;
                if !(n.node_std > 0.0) || n.edge_std.iter().any(|s| !(*s > 0.0)) {
                    v.push("normalization has a non-positive standard deviation".into());
                }
                if c.history.len() as u64 != c.epoch {
                    v.push(format!(
                        "history has {} epochs, checkpoint claims {}",
                        c.history.len(),
                        c.epoch
                    ));
                }
            }
            Err(e) => v.push(describe(e)),
        },
        ArtifactKind::Manifest => unreachable!(),
    }
}

fn check_manifest(path: &Path, bytes: &[u8], v: &mut Vec<String>) {
    let Ok(text) = std::str::from_utf8(bytes) else {
        v.push("manifest is not UTF-8".into());
        return;
    };
    let m = match DatasetManifest::from_text(text) {
        Ok(m) => m,
        Err(e) => {
            v.push(describe(e));
            return;
        }
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut seen = std::collections::HashMap::new();
    for r in &m.records {
        if let Some(prev) = seen.insert(r.sim_id, r.split) {
            v.push(format!(
                "simulation {} listed twice ({} and {})",
                r.sim_id,
                prev.name(),
                r.split.name()
            ));
        }
        for (rel, sha) in [(&r.trajectory, &r.trajectory_sha), (&r.graph, &r.graph_sha)] {
            let p = dir.join(rel);
            match crate::io::file_sha256(&p) {
                Ok(h) if &h == sha => {}
                Ok(_) => v.push(format!("checksum mismatch in {}", rel.display())),
                Err(e) => v.push(describe(e)),
            }
        }
    }
}
