//! Sequence files.
//!
//! `{"schema": 1, "blaschke_sum": s, "points": [[re, im], ...]}` with an
//! optional `near` list recording points stored relative to an anchor, which
//! keeps pairs closer than double precision distinct.

use std::path::Path;

use disklab::blaschke::ZeroSequence;
use disklab::{Complex64, DiskPoint};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearEntry {
    pub index: usize,
    pub anchor: [f64; 2],
    pub log_rho: f64,
    pub direction: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub blaschke_sum: Option<f64>,
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub near: Vec<NearEntry>,
}

impl SequenceFile {
    pub fn from_sequence(seq: &ZeroSequence, family: Option<&str>) -> Self {
        let mut near = Vec::new();
        let points = seq
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if let Some(a) = p.near_anchor() {
                    near.push(NearEntry {
                        index: i,
                        anchor: [a.anchor.re, a.anchor.im],
                        log_rho: a.log_rho,
                        direction: [a.direction.re, a.direction.im],
                    });
                }
                [p.re(), p.im()]
            })
            .collect();
        Self {
            schema: SCHEMA,
            family: family.map(str::to_owned),
            n_max: None,
            seed: None,
            blaschke_sum: Some(seq.blaschke_sum()),
            points,
            near,
        }
    }

    pub fn to_sequence(&self) -> Result<ZeroSequence, CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Input(format!("unsupported schema {}", self.schema)));
        }
        if self.points.is_empty() {
            return Err(CliError::Input("sequence has no points".into()));
        }
        let mut pts = self
            .points
            .iter()
            .map(|&[re, im]| DiskPoint::new(re, im))
            .collect::<disklab::Result<Vec<_>>>()
            .map_err(|e| CliError::Input(e.to_string()))?;
        for e in &self.near {
            let slot = pts
                .get_mut(e.index)
                .ok_or_else(|| CliError::Input(format!("near index {} out of range", e.index)))?;
            let anchor = DiskPoint::new(e.anchor[0], e.anchor[1]).map_err(|e| CliError::Input(e.to_string()))?;
            *slot = DiskPoint::near(anchor, e.log_rho, Complex64::new(e.direction[0], e.direction[1]))
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
        ZeroSequence::new(pts).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<ZeroSequence, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let file: SequenceFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        file.to_sequence()
    }
}
