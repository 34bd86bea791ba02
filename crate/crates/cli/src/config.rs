//! Configuration: TOML sections [model], [grid], [run], [verify] with
//! command-line overrides. The fully resolved form is serialized into every
//! run record and re-parses to an identical configuration.

use serde::{Deserialize, Serialize};
use wulffspread_core::{Dim, GridSpec, Model, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub theta: Option<f64>,
    pub amp: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            name: "homogeneous_kpp".into(),
            theta: None,
            amp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub cells_per_period: usize,
    pub domain_half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dim: 1,
            cells_per_period: 64,
            domain_half_width: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: f64,
    /// Tracking level for interfaces and radii.
    pub eta: f64,
    /// bump | front | file:<path>
    pub initial: String,
    /// Direction in degrees (2D) or +-1 (1D).
    pub direction: f64,
    /// eigen | front
    pub method: String,
    pub observers: Vec<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            t_final: 30.0,
            eta: 0.5,
            initial: "bump".into(),
            direction: 0.0,
            method: "eigen".into(),
            observers: vec!["interface".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub eps: f64,
    pub eta_hi: f64,
    pub eta_lo: f64,
    /// Directions in the eigen speed table.
    pub angles: usize,
    /// Sampled boundary directions of the Wulff polygon.
    pub shape_points: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            eps: 0.15,
            eta_hi: 0.9,
            eta_lo: 0.05,
            angles: 256,
            shape_points: 720,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolvedConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub run: RunSection,
    pub verify: VerifySection,
}

impl ResolvedConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn dim(&self) -> Result<Dim, String> {
        match self.grid.dim {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            d => Err(format!("dim must be 1 or 2, got {d}")),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec, String> {
        GridSpec::new(
            self.dim()?,
            self.grid.cells_per_period,
            self.grid.domain_half_width,
        )
        .map_err(|e| e.to_string())
    }

    pub fn build_model(&self) -> Result<Model, String> {
        let params = ModelParams {
            theta: self.model.theta,
            amp: self.model.amp,
        };
        wulffspread_core::builtin_model(
            &self.model.name,
            self.dim()?,
            self.grid.cells_per_period,
            &params,
        )
        .map_err(|e| e.to_string())
    }

    /// Unit direction from the configured angle (degrees in 2D, sign in 1D).
    pub fn direction_vector(&self) -> Vec<f64> {
        match self.grid.dim {
            1 => vec![if self.run.direction < 0.0 { -1.0 } else { 1.0 }],
            _ => {
                let a = self.run.direction.to_radians();
                vec![a.cos(), a.sin()]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let mut cfg = ResolvedConfig::default();
        cfg.model.name = "sinusoidal_kpp".into();
        cfg.model.theta = Some(0.35);
        cfg.grid.dim = 2;
        cfg.run.t_final = 12.5;
        cfg.verify.eps = 0.2;
        let text = cfg.to_toml();
        let back: ResolvedConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn sections_parse_from_ini_style_text() {
        let text = r#"
[model]
name = "cubic_bistable"
theta = 0.4

[grid]
dim = 1
cells_per_period = 32
domain_half_width = 40.0

[run]
t_final = 50.0
method = "front"

[verify]
eps = 0.2
"#;
        let cfg: ResolvedConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.model.name, "cubic_bistable");
        assert_eq!(cfg.model.theta, Some(0.4));
        assert_eq!(cfg.grid.cells_per_period, 32);
        assert_eq!(cfg.run.method, "front");
        assert_eq!(cfg.verify.eps, 0.2);
        // unspecified keys take defaults
        assert_eq!(cfg.run.eta, 0.5);
        assert_eq!(cfg.verify.angles, 256);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[model]\nname = \"homogeneous_kpp\"\nbogus = 1\n";
        assert!(toml::from_str::<ResolvedConfig>(text).is_err());
    }
}
