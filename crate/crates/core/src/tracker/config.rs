use serde::{Deserialize, Serialize};

use crate::distractor::DistractorConfig;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::keyfilter::Selection;
use crate::scale::ScaleConfig;
use crate::solver::AdmmConfig;

/// Where the reference filter of the temporal term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    None,
    Previous,
    FixedPeriod,
    Adaptive,
}

/// How frame-1 distractors are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstFrameDistractors {
    /// Detect on frame 1 with the freshly trained filter, then retrain.
    SelfResponse,
    /// Train frame 1 without context samples.
    Skip,
}

/// All tracker parameters in one flat record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Model update rate.
    pub alpha: f64,
    /// Search region side relative to the target.
    pub area_scale: f64,
    /// Search region is resampled to this many pixels per side.
    pub patch_size: usize,
    pub cell_size: usize,
    pub hog_orientations: usize,
    pub use_color_names: bool,
    /// Label bandwidth as a fraction of `sqrt(M * N)`.
    pub label_sigma_factor: f64,
    pub omega_inside: f64,
    pub omega_outside: f64,
    /// `lambda`, `mu0` and `mu_max` are per grid cell and get multiplied
    /// by M*N before reaching the solver.
    pub per_cell_penalties: bool,

    pub lambda: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub admm_iterations: usize,
    pub sherman_morrison: bool,
    pub denominator_floor: f64,

    pub acl: bool,
    pub eps: f64,
    pub p_max: usize,
    pub distance_scale: f64,
    pub mask_target: bool,
    pub first_frame_distractors: FirstFrameDistractors,

    pub reference: ReferenceMode,
    pub fks_period: usize,
    pub pool_capacity: usize,
    /// Target templates are resampled to this many pixels per side.
    pub template_size: usize,

    pub num_scales: usize,
    pub scale_step: f64,
    pub scale_learning_rate: f64,
    pub scale_model_size: usize,

    pub subpixel_steps: usize,
    pub subpixel_tolerance: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let admm = AdmmConfig::default();
        let acl = DistractorConfig::default();
        let scale = ScaleConfig::default();
        TrackerConfig {
            alpha: 0.019,
            area_scale: 4.0,
            patch_size: 200,
            cell_size: 4,
            hog_orientations: 9,
            use_color_names: true,
            label_sigma_factor: 1.0 / 16.0,
            omega_inside: 1e-3,
            omega_outside: 0.1,
            per_cell_penalties: true,
            lambda: admm.lambda,
            mu0: admm.mu0,
            rho: admm.rho,
            mu_max: admm.mu_max,
            admm_iterations: admm.iterations,
            sherman_morrison: admm.use_sherman_morrison,
            denominator_floor: admm.denominator_floor,
            acl: true,
            eps: acl.eps,
            p_max: acl.p_max,
            distance_scale: acl.distance_scale,
            mask_target: acl.mask_target,
            first_frame_distractors: FirstFrameDistractors::SelfResponse,
            reference: ReferenceMode::Adaptive,
            fks_period: 10,
            pool_capacity: 15,
            template_size: 48,
            num_scales: scale.num_scales,
            scale_step: scale.scale_step,
            scale_learning_rate: scale.learning_rate,
            scale_model_size: scale.model_size,
            subpixel_steps: 5,
            subpixel_tolerance: 1e-4,
        }
    }
}

/// Named ablation variants.
pub const VARIANTS: [&str; 7] = ["baseline", "acl", "aks", "acl_tr", "acl_fks", "full", "acl_plus"];

impl TrackerConfig {
    /// Default parameters with the modules of a named variant switched on.
    pub fn variant(name: &str) -> Option<TrackerConfig> {
        let (acl, reference, mask) = match name {
            "baseline" => (false, ReferenceMode::None, true),
            "acl" => (true, ReferenceMode::None, true),
            "aks" => (false, ReferenceMode::Adaptive, true),
            "acl_tr" => (true, ReferenceMode::Previous, true),
            "acl_fks" => (true, ReferenceMode::FixedPeriod, true),
            "full" => (true, ReferenceMode::Adaptive, true),
            "acl_plus" => (true, ReferenceMode::Adaptive, false),
            _ => return None,
        };
        Some(TrackerConfig {
            acl,
            reference,
            mask_target: mask,
            ..TrackerConfig::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::BadConfig(what.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.cell_size == 0 || !self.patch_size.is_multiple_of(self.cell_size) || self.patch_size < 2 * self.cell_size {
            return bad("patch_size must be a multiple of cell_size");
        }
        if !self.template_size.is_multiple_of(self.cell_size) || self.template_size < self.cell_size {
            return bad("template_size must be a multiple of cell_size");
        }
        if !self.scale_model_size.is_multiple_of(self.cell_size) || self.scale_model_size < self.cell_size {
            return bad("scale_model_size must be a multiple of cell_size");
        }
        if !(self.area_scale > 0.0) || !(self.label_sigma_factor > 0.0) {
            return bad("area_scale and label_sigma_factor must be positive");
        }
        if !(self.omega_inside > 0.0 && self.omega_outside > 0.0) {
            return bad("omega must be positive");
        }
        if !(self.mu0 > 0.0 && self.mu_max > 0.0 && self.rho >= 1.0 && self.lambda >= 0.0) {
            return bad("ADMM constants");
        }
        if self.num_scales == 0 || self.num_scales.is_multiple_of(2) || !(self.scale_step > 0.0) {
            return bad("num_scales must be odd");
        }
        if self.pool_capacity == 0 || self.fks_period == 0 {
            return bad("pool_capacity and fks_period must be positive");
        }
        Ok(())
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            cell_size: self.cell_size,
            hog_orientations: self.hog_orientations,
            use_color_names: self.use_color_names,
            window: true,
        }
    }

    pub fn admm(&self) -> AdmmConfig {
        AdmmConfig {
            lambda: self.lambda,
            mu0: self.mu0,
            rho: self.rho,
            mu_max: self.mu_max,
            iterations: self.admm_iterations,
            use_sherman_morrison: self.sherman_morrison,
            denominator_floor: self.denominator_floor,
        }
    }

    pub fn distractors(&self) -> DistractorConfig {
        DistractorConfig {
            eps: self.eps,
            p_max: self.p_max,
            distance_scale: self.distance_scale,
            mask_target: self.mask_target,
        }
    }

    pub fn selection(&self) -> Selection {
        match self.reference {
            ReferenceMode::None => Selection::None,
            ReferenceMode::Previous => Selection::Previous,
            ReferenceMode::FixedPeriod => Selection::FixedPeriod {
                period: self.fks_period,
            },
            ReferenceMode::Adaptive => Selection::Adaptive,
        }
    }

    pub fn scale(&self) -> ScaleConfig {
        ScaleConfig {
            num_scales: self.num_scales,
            scale_step: self.scale_step,
            learning_rate: self.scale_learning_rate,
            model_size: self.scale_model_size,
            cell_size: self.cell_size,
            ..ScaleConfig::default()
        }
    }

    /// Cells per side of the search grid.
    pub fn grid_cells(&self) -> usize {
        self.patch_size / self.cell_size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let cfg = TrackerConfig::variant("acl_fks").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: TrackerConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: TrackerConfig = serde_json::from_str(r#"{"alpha": 0.5}"#).unwrap();
        assert_eq!(partial.alpha, 0.5);
        assert_eq!(partial.pool_capacity, 15);
        assert!(serde_json::from_str::<TrackerConfig>(r#"{"alpah": 0.5}"#).is_err());
    }

    #[test]
    fn variants_are_config_changes() {
        for name in VARIANTS {
            let cfg = TrackerConfig::variant(name).unwrap();
            cfg.validate().unwrap();
        }
        assert_eq!(TrackerConfig::variant("full").unwrap(), TrackerConfig::default());
        assert!(TrackerConfig::variant("nope").is_none());
        let base = TrackerConfig::variant("baseline").unwrap();
        assert!(!base.acl && base.reference == ReferenceMode::None);
    }

    #[test]
    fn validation() {
        let mut cfg = TrackerConfig::default();
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = TrackerConfig::default();
        cfg.patch_size = 201;
        assert!(cfg.validate().is_err());
        let mut cfg = TrackerConfig::default();
        cfg.num_scales = 4;
        assert!(cfg.validate().is_err());
    }
}
