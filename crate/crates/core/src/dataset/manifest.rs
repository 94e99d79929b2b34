//! Text manifest listing the trajectory and mesh files of a dataset along
//! with their checksums, the window layout and the normalization statistics.
//! Loading a manifest verifies every referenced file but keeps no frames.

use super::WindowSpec;
use crate::error::{Error, Result};
use crate::fem::PdeKind;
use crate::graphnet::Normalization;
use crate::io::{file_sha256, read_file, sha256_hex, write_atomic};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const HEADER: &str = "graphpde-manifest 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub sim_id: usize,
    pub split: Split,
    /// Relative to the manifest directory.
    pub trajectory: PathBuf,
    pub trajectory_sha: String,
    pub graph: PathBuf,
    pub graph_sha: String,
    /// Window start offsets `first..end`.
    pub windows: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub pde: PdeKind,
    pub spec: WindowSpec,
    pub norm: Normalization,
    pub records: Vec<ManifestRecord>,
}

fn f64_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::format("manifest", msg)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("bad {what}: {s:?}")))
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.spec;
        writeln!(s, "{HEADER}").unwrap();
        writeln!(s, "pde {}", self.pde.name()).unwrap();
        writeln!(s, "window {} {} {} {}", w.n, w.m, w.gap, w.lead).unwrap();
        writeln!(s, "node_stats {:?} {:?}", self.norm.node_mean, self.norm.node_std).unwrap();
        writeln!(s, "edge_mean {}", f64_list(&self.norm.edge_mean)).unwrap();
        writeln!(s, "edge_std {}", f64_list(&self.norm.edge_std)).unwrap();
        for r in &self.records {
            writeln!(
                s,
                "sim {} {} {} {} {} {} {} {}",
                r.sim_id,
                r.split.name(),
                r.trajectory.display(),
                r.trajectory_sha,
                r.graph.display(),
                r.graph_sha,
                r.windows.0,
                r.windows.1
            )
            .unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing header"));
        }
        let mut pde = None;
        let mut spec = None;
        let mut node = None;
        let mut edge_mean = None;
        let mut edge_std = None;
        let mut records = Vec::new();
        for (no, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let Some(key) = it.next() else { continue };
            let rest: Vec<&str> = it.collect();
            let floats = |r: &[&str]| -> Result<Vec<f64>> { r.iter().map(|x| parse_num(x, key)).collect() };
            match key {
                "pde" => {
                    let name = rest.first().ok_or_else(|| bad("empty pde line"))?;
                    pde = Some(
                        [PdeKind::Heat, PdeKind::AdvectionDiffusion, PdeKind::NavierStokes]
                            .into_iter()
                            .find(|k| k.name() == *name)
                            .ok_or_else(|| bad(format!("unknown pde {name:?}")))?,
                    );
                }
                "window" => {
                    if rest.len() != 4 {
                        return Err(bad("window needs 4 fields"));
                    }
                    let v: Vec<usize> = rest.iter().map(|x| parse_num(x, "window")).collect::<Result<_>>()?;
                    let s = WindowSpec {
                        n: v[0],
                        m: v[1],
                        gap: v[2],
                        lead: v[3],
                    };
                    s.validate()?;
                    spec = Some(s);
                }
                "node_stats" => {
                    let v = floats(&rest)?;
                    if v.len() != 2 {
                        return Err(bad("node_stats needs 2 fields"));
                    }
                    node = Some((v[0], v[1]));
                }
                "edge_mean" => edge_mean = Some(floats(&rest)?),
                "edge_std" => edge_std = Some(floats(&rest)?),
                "sim" => {
                    if rest.len() != 8 {
                        return Err(bad(format!("line {}: sim needs 8 fields", no + 2)));
                    }
                    records.push(ManifestRecord {
                        sim_id: parse_num(rest[0], "sim id")?,
                        split: Split::parse(rest[1])?,
                        trajectory: PathBuf::from(rest[2]),
                        trajectory_sha: rest[3].to_string(),
                        graph: PathBuf::from(rest[4]),
                        graph_sha: rest[5].to_string(),
                        windows: (parse_num(rest[6], "window start")?, parse_num(rest[7], "window end")?),
                    });
                }
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        let (node_mean, node_std) = node.ok_or_else(|| bad("missing node_stats"))?;
        let edge_mean = edge_mean.ok_or_else(|| bad("missing edge_mean"))?;
        let edge_std = edge_std.ok_or_else(|| bad("missing edge_std"))?;
        if edge_mean.len() != edge_std.len() {
            return Err(bad("edge statistics differ in length"));
        }
        Ok(Self {
            pde: pde.ok_or_else(|| bad("missing pde"))?,
            spec: spec.ok_or_else(|| bad("missing window"))?,
            norm: Normalization {
                node_mean,
                node_std,
                edge_mean,
                edge_std,
            },
            records,
        })
    }

    /// SHA-256 of the serialized text.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        let text = self.to_text();
        write_atomic(path, text.as_bytes())?;
        Ok(sha256_hex(text.as_bytes()))
    }

    /// Parses without touching the referenced files.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| bad("not UTF-8"))?;
        Self::from_text(&text)
    }

    /// Parses and verifies every referenced file's checksum.
    pub fn load(path: &Path) -> Result<Self> {
        let m = Self::read(path)?;
        m.verify(path.parent().unwrap_or(Path::new(".")))?;
        Ok(m)
    }

    pub fn verify(&self, dir: &Path) -> Result<()> {
        for r in &self.records {
            for (rel, sha) in [(&r.trajectory, &r.trajectory_sha), (&r.graph, &r.graph_sha)] {
                let p = dir.join(rel);
                if file_sha256(&p)? != *sha {
                    return Err(Error::Checksum(p.display().to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Bytes held by this manifest, for memory accounting.
    pub fn heap_bytes(&self) -> usize {
        let rec: usize = self
            .records
            .iter()
            .map(|r| {
                r.trajectory.as_os_str().len() + r.graph.as_os_str().len() + r.trajectory_sha.len() + r.graph_sha.len()
            })
            .sum();
        std::mem::size_of::<Self>()
            + self.records.capacity() * std::mem::size_of::<ManifestRecord>()
            + rec
            + 16 * self.norm.edge_mean.len()
    }
}
