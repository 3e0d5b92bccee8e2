//! Run configuration: one JSON document per experiment.

use std::path::{Path, PathBuf};

use fracscreen::assembly::ImpedanceLaw;
use fracscreen::geometry::Family;
use fracscreen::pipeline::SolveMode;
use fracscreen::quadrature::QuadratureConfig;
use fracscreen::solver::GmresConfig;
use fracscreen::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Koch,
    Square,
}

/// Level range and wavenumbers of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub j_min: u32,
    pub j_max: u32,
    pub j_ref: u32,
    pub k_list: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { j_min: 1, j_max: 3, j_ref: 4, k_list: vec![5.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyName,
    /// Bump half-angle of the Koch family; ignored for the square snowflake.
    pub beta: f64,
    pub level: u32,
    /// Extra uniform refinement of the level mesh.
    pub refinement: u64,
    pub k: f64,
    /// Incident direction; normalised on load.
    pub direction: [f64; 3],
    pub impedance: ImpedanceLaw,
    pub quadrature: QuadratureConfig,
    pub gmres: GmresConfig,
    pub cube_side: f64,
    pub face_resolution: usize,
    pub output_dir: PathBuf,
    pub mode: SolveMode,
    /// Replace the incident-wave right-hand side by zero.
    pub zero_rhs: bool,
    /// Directory for reusable generating arrays; none disables caching.
    pub cache_dir: Option<PathBuf>,
    pub study: StudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: FamilyName::Koch,
            beta: std::f64::consts::FRAC_PI_6,
            level: 2,
            refinement: 1,
            k: 5.0,
            direction: [1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt()],
            impedance: ImpedanceLaw::absorbing(),
            quadrature: QuadratureConfig::default(),
            gmres: GmresConfig::default(),
            cube_side: 1.4,
            face_resolution: 40,
            output_dir: PathBuf::from("out"),
            mode: SolveMode::Fast,
            zero_rhs: false,
            cache_dir: None,
            study: StudyConfig::default(),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl RunConfig {
    pub fn family(&self) -> Family {
        match self.family {
            FamilyName::Koch => Family::Koch { beta: self.beta },
            FamilyName::Square => Family::Square,
        }
    }

    /// Checks every field and normalises the direction.
    pub fn validated(mut self) -> Result<Self> {
        let d = self.direction;
        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !(len > 0.0 && len.is_finite()) {
            return Err(invalid(format!("direction must be a nonzero finite vector, got {d:?}")));
        }
        self.direction = d.map(|c| c / len);
        if self.family == FamilyName::Koch && !(self.beta > 0.0 && self.beta < std::f64::consts::FRAC_PI_2) {
            return Err(invalid(format!("beta must lie in (0, pi/2), got {}", self.beta)));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(invalid(format!("k must be finite and nonnegative, got {}", self.k)));
        }
        if self.refinement == 0 {
            return Err(invalid("refinement must be at least 1".into()));
        }
        if !(self.cube_side > 0.0 && self.cube_side.is_finite()) {
            return Err(invalid(format!("cube_side must be positive, got {}", self.cube_side)));
        }
        if self.face_resolution == 0 {
            return Err(invalid("face_resolution must be at least 1".into()));
        }
        self.impedance.params(self.k)?;
        self.quadrature.validate()?;
        self.gmres.validate()?;
        let s = &self.study;
        if s.j_min > s.j_max || s.j_max >= s.j_ref {
            return Err(invalid(format!(
                "study levels need j_min <= j_max < j_ref, got {}..={} vs {}",
                s.j_min, s.j_max, s.j_ref
            )));
        }
        if s.k_list.is_empty() || s.k_list.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(invalid(format!("study k_list must be nonempty and nonnegative, got {:?}", s.k_list)));
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default().validated().unwrap();
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = RunConfig::from_json(r#"{"family": "square", "level": 1, "direction": [0, 0, -2]}"#).unwrap();
        assert_eq!(cfg.family(), Family::Square);
        assert_eq!(cfg.direction, [0.0, 0.0, -1.0]);
        assert_eq!(cfg.gmres, GmresConfig::default());
        assert_eq!(cfg.quadrature, QuadratureConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        for doc in [
            r#"{"beta": 2.0}"#,
            r#"{"k": -1}"#,
            r#"{"direction": [0, 0, 0]}"#,
            r#"{"refinement": 0}"#,
            r#"{"gmres": {"rel_tol": 2.0}}"#,
            r#"{"quadrature": {"regular_order": 0}}"#,
            r#"{"study": {"j_min": 1, "j_max": 3, "j_ref": 3}}"#,
            r#"{"impedance": {"plus": [1, -1], "minus": [1, 1], "scale_with_k": false}}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"mode": "slow"}"#,
        ] {
            assert!(RunConfig::from_json(doc).is_err(), "{doc}");
        }
    }
}
