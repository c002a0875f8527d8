//! TOML configuration file. Every field is optional; values left out keep
//! the subcommand's defaults, and command-line flags override the file.

use std::path::Path;

use serde::Deserialize;
use spt_geometry::ed::EdOptions;
use spt_geometry::scan::{alpha_grid, float_list, CoordinateMode, Engine, SweepConfig};
use spt_geometry::tebd::TebdSchedule;
use spt_geometry::{Boundary, Error, Result};

#[derive(Clone, Debug, Default, Deserialize)]
pub struct FloatList(#[serde(with = "float_list")] pub Vec<f64>);

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_sites: Option<usize>,
    pub boundary: Option<Boundary>,
    pub mode: Option<CoordinateMode>,
    pub engine: Option<Engine>,
    pub j1: Option<Vec<f64>>,
    pub j2: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    /// Shorthand for a uniform grid of this many points on [-1, 1].
    pub alpha_steps: Option<usize>,
    pub bx: Option<FloatList>,
    pub bz: Option<f64>,
    pub seed: Option<u64>,
    pub width_threshold: Option<f64>,
    pub ed: Option<EdOptions>,
    pub tebd: Option<TebdSchedule>,
    #[serde(default)]
    pub fig5: Fig5Config,
    #[serde(default)]
    pub fig6: Fig6Config,
    #[serde(default)]
    pub fig7: Fig7Config,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5Config {
    pub d_list: Option<Vec<usize>>,
    pub alpha_window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig6Config {
    pub n_list: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig7Config {
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub j1: Option<f64>,
    pub j2: Option<f64>,
    pub alpha: Option<f64>,
    pub bx: Option<FloatList>,
    pub levels: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {}", path.display(), e.message())))
    }

    /// Applies the file on top of `cfg`.
    pub fn apply(&self, cfg: &mut SweepConfig) {
        if let Some(v) = self.n_sites {
            cfg.n_sites = v;
        }
        if let Some(v) = self.boundary {
            cfg.boundary = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.engine {
            cfg.engine = v;
        }
        if let Some(v) = &self.j1 {
            cfg.j1 = v.clone();
        }
        if let Some(v) = &self.j2 {
            cfg.j2 = v.clone();
        }
        if let Some(m) = self.alpha_steps {
            cfg.alpha = alpha_grid(m);
        }
        if let Some(v) = &self.alpha {
            cfg.alpha = v.clone();
        }
        if let Some(v) = &self.bx {
            cfg.bx = v.0.clone();
        }
        if let Some(v) = self.bz {
            cfg.bz = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.width_threshold {
            cfg.width_threshold = v;
        }
        if let Some(v) = &self.ed {
            cfg.ed = v.clone();
        }
        if let Some(v) = &self.tebd {
            cfg.tebd = v.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_file_with_infinite_field() {
        let text = r#"
            n_sites = 8
            boundary = "pbc"
            mode = "bulk_field_normalized"
            engine = { kind = "tebd", bond_dim = 16 }
            alpha_steps = 5
            bx = [0.0, 0.5, "inf"]

            [ed]
            deg_tol = 1e-9

            [tebd]
            order = 1

            [fig5]
            d_list = [8, 12]
        "#;
        let f: ConfigFile = toml::from_str(text).unwrap();
        let mut cfg = SweepConfig::ed(12, Boundary::Obc, CoordinateMode::BoundaryField);
        f.apply(&mut cfg);
        assert_eq!(cfg.n_sites, 8);
        assert_eq!(cfg.boundary, Boundary::Pbc);
        assert_eq!(cfg.engine, Engine::Tebd { bond_dim: 16 });
        assert_eq!(cfg.alpha, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(cfg.bx[2], f64::INFINITY);
        assert_eq!(cfg.ed.deg_tol, 1e-9);
        assert_eq!(cfg.ed.k, 6);
        assert_eq!(cfg.tebd.order, 1);
        assert_eq!(cfg.tebd.stages.len(), 5);
        assert_eq!(f.fig5.d_list, Some(vec![8, 12]));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<ConfigFile>("n_site = 8").is_err());
    }

    #[test]
    fn example_config_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
        ConfigFile::load(&path).unwrap();
    }
}
