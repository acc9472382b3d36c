//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cablelife_core::constants::{celsius, HOUR, YEAR};
use cablelife_core::life::{compose_cycles, CycleMode};
use cablelife_core::pea::{Bound, FitBounds, FitParam, PeaCondition};
use cablelife_core::scenarios::{CaseStudyCable, CycleShape};
use cablelife_core::{BctParams, Geometry, GeometryKind, KleinParams, LifeParams, LoadProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    #[default]
    Micro,
    Macro,
    Both,
}

impl ModelSelection {
    pub fn micro(self) -> bool {
        matches!(self, ModelSelection::Micro | ModelSelection::Both)
    }

    pub fn macro_(self) -> bool {
        matches!(self, ModelSelection::Macro | ModelSelection::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub model: ModelSelection,
    pub nodes: usize,
    pub seed: u64,
    /// Interval between recorded field profiles (s).
    pub snapshot_interval_s: f64,
    /// Multiplies the stability-limited time step, in (0, 1].
    pub dt_scale: f64,
    /// Step budget of one transport simulation.
    pub max_steps: Option<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            model: ModelSelection::Micro,
            nodes: 100,
            seed: 0,
            snapshot_interval_s: 300.0,
            dt_scale: 1.0,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryKind,
    pub r_inner_m: f64,
    pub r_outer_m: f64,
    pub epsilon_r: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = CaseStudyCable::new().geometry;
        Self {
            kind: g.kind,
            r_inner_m: g.r_inner,
            r_outer_m: g.r_outer,
            epsilon_r: g.epsilon_r,
        }
    }
}

impl GeometrySection {
    pub fn geometry(&self) -> Result<Geometry> {
        Ok(match self.kind {
            GeometryKind::Cylindrical => Geometry::cylindrical(self.r_inner_m, self.r_outer_m, self.epsilon_r)?,
            GeometryKind::Planar => Geometry::planar(self.r_outer_m - self.r_inner_m, self.epsilon_r)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BctPreset {
    #[default]
    DcXlpeOptimum,
    LdpeLiterature,
}

/// A preset with optional per-field overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BctSection {
    pub preset: BctPreset,
    pub w_inj_e: Option<f64>,
    pub w_inj_h: Option<f64>,
    pub w_mob_e: Option<f64>,
    pub w_mob_h: Option<f64>,
    pub w_tr_e: Option<f64>,
    pub w_tr_h: Option<f64>,
    pub b_e: Option<f64>,
    pub b_h: Option<f64>,
    /// Sets all four base recombination rates; individual rates below override it.
    pub s_base: Option<f64>,
    pub s0_base: Option<f64>,
    pub s1_base: Option<f64>,
    pub s2_base: Option<f64>,
    pub s3_base: Option<f64>,
    pub rho_e0t: Option<f64>,
    pub rho_h0t: Option<f64>,
    pub a_trap: Option<f64>,
    pub f_s: Option<f64>,
}

impl BctSection {
    pub fn params(&self) -> Result<BctParams> {
        let mut p = match self.preset {
            BctPreset::DcXlpeOptimum => BctParams::dc_xlpe_optimum(),
            BctPreset::LdpeLiterature => BctParams::ldpe_literature(),
        };
        if let Some(s) = self.s_base {
            p = p.with_s_base(s);
        }
        let fields: [(Option<f64>, &mut f64); 16] = [
            (self.w_inj_e, &mut p.w_inj_e),
            (self.w_inj_h, &mut p.w_inj_h),
            (self.w_mob_e, &mut p.w_mob_e),
            (self.w_mob_h, &mut p.w_mob_h),
            (self.w_tr_e, &mut p.w_tr_e),
            (self.w_tr_h, &mut p.w_tr_h),
            (self.b_e, &mut p.b_e),
            (self.b_h, &mut p.b_h),
            (self.s0_base, &mut p.s0_base),
            (self.s1_base, &mut p.s1_base),
            (self.s2_base, &mut p.s2_base),
            (self.s3_base, &mut p.s3_base),
            (self.rho_e0t, &mut p.rho_e0t),
            (self.rho_h0t, &mut p.rho_h0t),
            (self.a_trap, &mut p.a_trap),
            (self.f_s, &mut p.f_s),
        ];
        for (v, slot) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        p.validate().context("[bct]")?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CycleKind {
    #[serde(rename = "24h")]
    Daily,
    #[default]
    #[serde(rename = "48h")]
    Long,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProgramSection {
    /// Load program file; when absent a load cycle is synthesized.
    pub file: Option<PathBuf>,
    pub cycle: CycleKind,
    pub voltage_v: f64,
    pub ambient_c: f64,
    pub t_max_c: f64,
    pub delta_t_k: f64,
}

impl Default for ProgramSection {
    fn default() -> Self {
        let cable = CaseStudyCable::new();
        Self {
            file: None,
            cycle: CycleKind::Long,
            voltage_v: cable.rated_voltage,
            ambient_c: 20.0,
            t_max_c: 70.0,
            delta_t_k: cablelife_core::scenarios::CASE_STUDY_DELTA_T,
        }
    }
}

impl ProgramSection {
    pub fn shape(&self, kind: CycleKind) -> CycleShape {
        let (a, t) = (celsius(self.ambient_c), celsius(self.t_max_c));
        match kind {
            CycleKind::Daily => CycleShape::tt_24h(a, t, self.delta_t_k),
            CycleKind::Long => CycleShape::tt_48h(a, t, self.delta_t_k),
        }
    }

    /// The configured program; a file is rescaled to peak voltage `u` when given.
    pub fn program(&self, base: &Path, u: Option<f64>) -> Result<LoadProgram> {
        match &self.file {
            Some(f) => {
                let path = base.join(f);
                let p = LoadProgram::load(&path).with_context(|| format!("reading {}", path.display()))?;
                let peak = p.samples().iter().map(|s| s.voltage.abs()).fold(0.0, f64::max);
                match u {
                    Some(u) if peak > 0.0 => Ok(p.scaled_voltage(u / peak)?),
                    _ => Ok(p),
                }
            }
            None => {
                let label = match self.cycle {
                    CycleKind::Daily => "24h",
                    CycleKind::Long => "48h",
                };
                Ok(self.shape(self.cycle).program(u.unwrap_or(self.voltage_v), label)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignField {
    Value(f64),
    Derived(AutoTag),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifeSection {
    /// Design field (V/m), or `"auto"` to derive it from a steady-state run at the design voltage.
    pub e_d: Option<DesignField>,
    pub design_voltage_v: f64,
    /// Voltage applied during the test program.
    pub test_voltage_v: Option<f64>,
    /// Hold time of the steady-state run that derives the design field (h).
    pub design_settle_h: f64,
    pub l_d_years: f64,
    pub t_d_c: f64,
    pub n_d: f64,
    pub b_k: f64,
    pub b_et: f64,
    pub e_0_v_per_m: Option<f64>,
    pub mode: CycleMode,
    pub cycles_24h: u32,
    pub cycles_48h: u32,
    /// Permits cycle counts other than the Type Test sequence.
    pub allow_nonstandard: bool,
}

impl Default for LifeSection {
    fn default() -> Self {
        Self {
            e_d: None,
            design_voltage_v: CaseStudyCable::new().rated_voltage,
            test_voltage_v: None,
            design_settle_h: 48.0,
            l_d_years: 40.0,
            t_d_c: 70.0,
            n_d: 10.0,
            b_k: 12430.0,
            b_et: 0.0,
            e_0_v_per_m: None,
            mode: CycleMode::Reuse,
            cycles_24h: 24,
            cycles_48h: 3,
            allow_nonstandard: false,
        }
    }
}

impl LifeSection {
    pub fn params(&self, e_d: f64) -> Result<LifeParams> {
        let p = LifeParams {
            l_d: self.l_d_years * YEAR,
            e_d,
            t_d: celsius(self.t_d_c),
            n_d: self.n_d,
            b_et: self.b_et,
            b: self.b_k,
            e_0: self.e_0_v_per_m.unwrap_or(e_d),
        };
        p.validate().context("[life]")?;
        Ok(p)
    }

    pub fn design_field(&self) -> Result<DesignField> {
        match self.e_d {
            Some(DesignField::Value(e)) if !(e > 0.0) => bail!("[life] e_d must be positive, got {e}"),
            Some(d) => Ok(d),
            None => bail!("[life] e_d is required (a field in V/m or \"auto\")"),
        }
    }

    pub fn test_voltage(&self) -> Result<f64> {
        match self.test_voltage_v {
            Some(u) if u > 0.0 => Ok(u),
            Some(u) => bail!("[life] test_voltage_v must be positive, got {u}"),
            None => bail!("[life] test_voltage_v is required"),
        }
    }

    /// Type Test sequence of synthesized cycles at voltage `u`.
    pub fn tt_program(&self, program: &ProgramSection, u: f64) -> Result<LoadProgram> {
        if !self.allow_nonstandard && (self.cycles_24h != 24 || self.cycles_48h != 3) {
            bail!(
                "[life] the Type Test needs 24 daily and 3 long cycles (got {} and {}); set allow_nonstandard to override",
                self.cycles_24h,
                self.cycles_48h
            );
        }
        let c24 = program.shape(CycleKind::Daily).program(u, "24h")?;
        let c48 = program.shape(CycleKind::Long).program(u, "48h")?;
        Ok(compose_cycles(&c24, self.cycles_24h, &c48, self.cycles_48h)?)
    }

    pub fn settle(&self) -> f64 {
        self.design_settle_h * HOUR
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    /// (E in kV/mm, T in °C) per measurement.
    pub conditions: Vec<[f64; 2]>,
    pub thickness_m: f64,
    pub horizon_s: f64,
    pub interval_s: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            conditions: cablelife_core::pea::REFERENCE_CONDITIONS
                .iter()
                .map(|(e, t)| [e / 1e6, *t])
                .collect(),
            thickness_m: 200e-6,
            horizon_s: 4000.0,
            interval_s: 100.0,
        }
    }
}

impl SyntheticSection {
    pub fn conditions(&self) -> Vec<PeaCondition> {
        self.conditions
            .iter()
            .map(|[e, t]| PeaCondition {
                e_mean: e * 1e6,
                temperature: celsius(*t),
            })
            .collect()
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.interval_s > 0.0 && self.horizon_s >= self.interval_s) {
            bail!("[fit.synthetic] needs 0 < interval_s <= horizon_s");
        }
        let n = (self.horizon_s / self.interval_s).round() as usize;
        Ok((0..=n).map(|k| k as f64 * self.interval_s).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// PEA files; ignored when `synthetic` is given.
    pub measurements: Vec<PathBuf>,
    /// Generate noiseless measurements from the `[bct]` parameters instead.
    pub synthetic: Option<SyntheticSection>,
    pub starts: usize,
    pub free: Vec<FitParam>,
    /// Search box as a relative half-width around the `[bct]` values.
    pub bounds_rel: f64,
    /// Explicit bounds; replaces `free`/`bounds_rel` when given.
    pub bounds: Vec<Bound>,
    pub nodes: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            measurements: Vec::new(),
            synthetic: None,
            starts: 4,
            free: FitParam::DEFAULT_FREE.to_vec(),
            bounds_rel: 0.25,
            bounds: Vec::new(),
            nodes: cablelife_core::pea::PEA_POINTS,
        }
    }
}

impl FitSection {
    pub fn bounds(&self, base: &BctParams) -> Result<FitBounds> {
        let b = if self.bounds.is_empty() {
            if !(self.bounds_rel >= 0.0 && self.bounds_rel < 1.0) {
                bail!("[fit] bounds_rel must lie in [0, 1)");
            }
            FitBounds::around(base, &self.free, self.bounds_rel)
        } else {
            FitBounds {
                bounds: self.bounds.clone(),
            }
        };
        b.validate().context("[fit] bounds")?;
        Ok(b)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub bct: BctSection,
    pub klein: Option<KleinParams>,
    #[serde(default)]
    pub program: ProgramSection,
    pub life: Option<LifeSection>,
    pub fit: Option<FitSection>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, text))
    }

    /// Checks that referenced files exist and parameter blocks are complete.
    pub fn validate(&self) -> Result<()> {
        if self.run.nodes < 3 {
            bail!("[run] nodes must be at least 3");
        }
        if !(self.run.snapshot_interval_s > 0.0) {
            bail!("[run] snapshot_interval_s must be positive");
        }
        if !(self.run.dt_scale > 0.0 && self.run.dt_scale <= 1.0) {
            bail!("[run] dt_scale must lie in (0, 1]");
        }
        self.geometry.geometry().context("[geometry]")?;
        self.bct.params()?;
        if self.run.model.macro_() {
            let k = self.klein.context("[klein] is required for the macroscopic model")?;
            k.validate().context("[klein]")?;
        }
        if let Some(f) = &self.program.file {
            let p = self.base_dir.join(f);
            if !p.is_file() {
                bail!("[program] file {} does not exist", p.display());
            }
        }
        if let Some(fit) = &self.fit {
            for m in &fit.measurements {
                let p = self.base_dir.join(m);
                if !p.is_file() {
                    bail!("[fit] measurement {} does not exist", p.display());
                }
            }
        }
        Ok(())
    }

    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.program.file.iter().map(|f| self.base_dir.join(f)).collect();
        if let Some(fit) = &self.fit {
            if fit.synthetic.is_none() {
                out.extend(fit.measurements.iter().map(|m| self.base_dir.join(m)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_case_study_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.run.nodes, 100);
        assert_eq!(cfg.bct.params().unwrap(), BctParams::dc_xlpe_optimum());
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let cfg: RunConfig = toml::from_str("[bct]\npreset = \"ldpe-literature\"\ns_base = 0.01\nb_e = 0.5\n").unwrap();
        let p = cfg.bct.params().unwrap();
        assert_eq!(p.b_e, 0.5);
        assert_eq!(p.s3_base, 0.01);
        assert!(toml::from_str::<RunConfig>("[run]\nnodez = 3\n").is_err());
    }

    #[test]
    fn macro_model_needs_conductivity_block() {
        let cfg: RunConfig = toml::from_str("[run]\nmodel = \"macro\"\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn design_field_is_required() {
        let cfg: RunConfig = toml::from_str("[life]\ntest_voltage_v = 925e3\n").unwrap();
        assert!(cfg.life.unwrap().design_field().is_err());
        let cfg: RunConfig = toml::from_str("[life]\ne_d = \"auto\"\n").unwrap();
        assert_eq!(
            cfg.life.unwrap().design_field().unwrap(),
            DesignField::Derived(AutoTag::Auto)
        );
        let cfg: RunConfig = toml::from_str("[life]\ne_d = 25e6\n").unwrap();
        assert_eq!(cfg.life.unwrap().design_field().unwrap(), DesignField::Value(25e6));
        assert!(toml::from_str::<RunConfig>("[life]\ne_d = \"guess\"\n").is_err());
    }

    #[test]
    fn type_test_requires_three_long_cycles() {
        let life = LifeSection {
            cycles_48h: 0,
            ..Default::default()
        };
        assert!(life.tt_program(&ProgramSection::default(), 1e5).is_err());
        let tt = LifeSection::default()
            .tt_program(&ProgramSection::default(), 1e5)
            .unwrap();
        assert_eq!(tt.cycles().len(), 27);
    }
}
