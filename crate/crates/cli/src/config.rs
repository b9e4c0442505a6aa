//! Run configuration files and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use springy_core::ensemble::{EnsembleSpec, ModelKind};
use springy_core::geometry::{GeometryId, MushroomGeometry, RobGeometry, Table};

use crate::error::{CliError, Result};

/// Presets shipped with the binary, by name.
pub const PRESETS: [(&str, &str); 5] = [
    ("rob-fig3a", include_str!("../presets/rob-fig3a.toml")),
    ("stadium-fig4", include_str!("../presets/stadium-fig4.toml")),
    ("mushroom-fig4", include_str!("../presets/mushroom-fig4.toml")),
    ("rob-model", include_str!("../presets/rob-model.toml")),
    ("mushroom-model", include_str!("../presets/mushroom-model.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    pub emit_plots: bool,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub geometry: GeometryBlock,
    pub ensemble: EnsembleBlock,
    pub output: OutputBlock,
    pub trace: TraceBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Billiard,
            emit_plots: false,
            workers: 0,
            geometry: GeometryBlock::default(),
            ensemble: EnsembleBlock::default(),
            output: OutputBlock::default(),
            trace: TraceBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryBlock {
    pub id: GeometryId,
    pub rob: RobGeometry,
    /// Also used for the stadium, with the throat pinned open.
    pub mushroom: MushroomGeometry,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self {
            id: GeometryId::Rob,
            rob: RobGeometry::default(),
            mushroom: MushroomGeometry::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleBlock {
    pub n_particles: usize,
    pub m: f64,
    pub e_b0: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    pub seed: u64,
    pub runs: u32,
    pub failure_budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fermi_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bar_phase: Option<f64>,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        let s = EnsembleSpec::default();
        Self {
            n_particles: s.n_particles,
            m: s.m,
            e_b0: s.e_b0,
            t_end: s.t_end,
            sample_dt: s.sample_dt,
            seed: s.seed,
            runs: s.runs,
            failure_budget: s.failure_budget,
            fermi_exponent: s.fermi_exponent,
            bar_phase: s.bar_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Which realization `trace` follows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceBlock {
    pub run: u32,
    pub member: u64,
}

/// Command-line values that replace file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelKind>,
    pub geometry: Option<GeometryId>,
    pub m: Option<f64>,
    pub particles: Option<usize>,
    pub eb0: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub runs: Option<u32>,
    pub emit_plots: bool,
}

/// A configuration checked against every geometry and ensemble invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub spec: EnsembleSpec,
    pub table: Table,
    pub workers: usize,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            CliError::Config(format!("unknown preset '{name}' (one of {})", names.join(", ")))
        })?;
        Self::parse(text, &format!("preset {name}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        let e = &mut self.ensemble;
        if let Some(v) = o.seed {
            e.seed = v;
        }
        if let Some(v) = o.m {
            e.m = v;
        }
        if let Some(v) = o.particles {
            e.n_particles = v;
        }
        if let Some(v) = o.eb0 {
            e.e_b0 = v;
        }
        if let Some(v) = o.t_end {
            e.t_end = v;
        }
        if let Some(v) = o.dt {
            e.sample_dt = v;
        }
        if let Some(v) = o.runs {
            e.runs = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = &o.out {
            self.output.dir = v.clone();
        }
        if let Some(v) = o.model {
            self.model = v;
        }
        if let Some(v) = o.geometry {
            self.geometry.id = v;
        }
        self.emit_plots |= o.emit_plots;
    }

    pub fn table(&self) -> Result<Table> {
        let g = &self.geometry;
        let table = match g.id {
            GeometryId::Rob => Table::Rob(g.rob),
            GeometryId::Stadium => Table::Mushroom(MushroomGeometry {
                stadium_mode: true,
                ..g.mushroom
            }),
            GeometryId::Mushroom => {
                if g.mushroom.stadium_mode {
                    return Err(CliError::Config(
                        "[geometry.mushroom] stadium_mode = true needs geometry id \"stadium\"".into(),
                    ));
                }
                Table::Mushroom(g.mushroom)
            }
        };
        let section = match g.id {
            GeometryId::Rob => "geometry.rob",
            _ => "geometry.mushroom",
        };
        table
            .validate()
            .map_err(|e| CliError::Config(format!("[{section}] {e}")))?;
        Ok(table)
    }

    pub fn spec(&self) -> EnsembleSpec {
        let e = &self.ensemble;
        EnsembleSpec {
            geometry: self.geometry.id,
            model: self.model,
            n_particles: e.n_particles,
            m: e.m,
            e_b0: e.e_b0,
            t_end: e.t_end,
            sample_dt: e.sample_dt,
            seed: e.seed,
            runs: e.runs,
            failure_budget: e.failure_budget,
            fermi_exponent: e.fermi_exponent,
            bar_phase: e.bar_phase,
        }
    }

    pub fn resolve(self) -> Result<Resolved> {
        let table = self.table()?;
        let spec = self.spec();
        spec.validate()
            .map_err(|e| CliError::Config(format!("[ensemble] {e}")))?;
        if self.trace.member >= spec.n_particles as u64 || self.trace.run >= spec.runs {
            return Err(CliError::Config(format!(
                "[trace] run {} member {} outside the ensemble ({} runs of {})",
                self.trace.run, self.trace.member, spec.runs, spec.n_particles
            )));
        }
        let workers = match self.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        Ok(Resolved {
            config: self,
            spec,
            table,
            workers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_parameters() {
        let c = RunConfig::parse("", "empty").unwrap();
        assert_eq!(c, RunConfig::default());
        let r = c.resolve().unwrap();
        let Table::Rob(g) = r.table else { panic!() };
        assert_eq!((g.length, g.height, g.bar_length, g.spring), (2.0, 2.0, 1.0, 81.0));
        assert_eq!(g.horizontal_speed, 18.0 / 5f64.sqrt());
        let m = MushroomGeometry::default();
        assert_eq!((m.cap_radius, m.stem_length, m.tan_theta, m.spring), (1.0, 2.0, 0.17, 1.0));
    }

    #[test]
    fn presets_parse_and_validate() {
        for (name, _) in PRESETS {
            RunConfig::preset(name).unwrap().resolve().unwrap();
        }
        assert!(matches!(RunConfig::preset("fig9"), Err(CliError::Config(_))));
    }

    #[test]
    fn parse_errors_point_at_the_line() {
        let err = RunConfig::parse("model = \"billiard\"\n[ensemble]\nn_particles = \"many\"\n", "x.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.toml") && msg.contains("line 3"), "{msg}");
        let err = RunConfig::parse("[ensemble]\nparticles = 3\n", "x.toml").unwrap_err();
        assert!(err.to_string().contains("particles"), "{err}");
    }

    #[test]
    fn overrides_win_over_file_values() {
        let mut c = RunConfig::parse("[ensemble]\nseed = 4\nruns = 3\n", "x").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            geometry: Some(GeometryId::Stadium),
            ..Overrides::default()
        });
        assert_eq!((c.ensemble.seed, c.ensemble.runs), (9, 3));
        let r = c.resolve().unwrap();
        assert_eq!(r.table.id(), GeometryId::Stadium);
    }

    #[test]
    fn toml_echo_reparses() {
        let c = RunConfig::preset("mushroom-fig4").unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml(), "echo").unwrap(), c);
    }
}
