//! Gripper configuration document (JSON).
//!
//! Lengths are in mm and angles in degrees. Keys missing from a document are
//! taken from the preset it names; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::contact::Schedule;
use crate::drive::{DriveMode, GripperAssembly};
use crate::linkage::{Branch, LinkageParams, Prototype, SpringParams};

use super::IoError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    ScalR,
    ScalL,
}

impl PresetName {
    pub fn prototype(self) -> Prototype {
        match self {
            PresetName::ScalR => Prototype::ScalR,
            PresetName::ScalL => Prototype::ScalL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveModeName {
    Rotational,
    Linear,
}

impl From<DriveModeName> for DriveMode {
    fn from(m: DriveModeName) -> Self {
        match m {
            DriveModeName::Rotational => DriveMode::Rotational,
            DriveModeName::Linear => DriveMode::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageSection {
    pub base_unit_l: f64,
    pub len_ab: f64,
    pub len_cb: f64,
    pub len_bd: f64,
    pub len_ae: f64,
    pub len_bf: f64,
    pub len_bg: f64,
    pub len_di: f64,
    pub gamma: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta_t: f64,
    pub branch_b: i64,
    pub branch_d: i64,
    pub branch_t: i64,
    pub tip_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpringSection {
    pub k_slot: f64,
    pub preload: f64,
    pub k1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub mode: DriveModeName,
    /// Degrees for rotational drive, mm for linear drive.
    pub range: [f64; 2],
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperSection {
    /// Distance between the two base pivots (mm).
    pub aperture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema_version: u32,
    pub preset: PresetName,
    pub linkage: LinkageSection,
    pub spring: SpringSection,
    pub drive: DriveSection,
    pub gripper: GripperSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkagePatch {
    base_unit_l: Option<f64>,
    len_ab: Option<f64>,
    len_cb: Option<f64>,
    len_bd: Option<f64>,
    len_ae: Option<f64>,
    len_bf: Option<f64>,
    len_bg: Option<f64>,
    len_di: Option<f64>,
    gamma: Option<f64>,
    s_min: Option<f64>,
    s_max: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    theta_t: Option<f64>,
    branch_b: Option<i64>,
    branch_d: Option<i64>,
    branch_t: Option<i64>,
    tip_offset: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringPatch {
    k_slot: Option<f64>,
    preload: Option<f64>,
    k1: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrivePatch {
    mode: Option<DriveModeName>,
    range: Option<[f64; 2]>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GripperPatch {
    aperture: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigPatch {
    schema_version: u32,
    preset: Option<PresetName>,
    #[serde(default)]
    linkage: LinkagePatch,
    #[serde(default)]
    spring: SpringPatch,
    #[serde(default)]
    drive: DrivePatch,
    #[serde(default)]
    gripper: GripperPatch,
}

macro_rules! fill {
    ($dst:expr, $src:expr, $($f:ident),+) => {
        $( if let Some(v) = $src.$f { $dst.$f = v; } )+
    };
}

impl ConfigDocument {
    pub fn preset(preset: PresetName) -> Self {
        let p = LinkageParams::preset(preset.prototype());
        let (alpha, beta, theta_t) = preset.prototype().angles_deg();
        let mut tip_offset = -90.0 - alpha - theta_t;
        if tip_offset <= -180.0 {
            tip_offset += 360.0;
        }
        let spring = SpringParams::default();
        let (drive, aperture) = match preset {
            PresetName::ScalR => (DriveSection { mode: DriveModeName::Rotational, range: [0.0, 90.0], step: 0.1 }, 80.0),
            PresetName::ScalL => (DriveSection { mode: DriveModeName::Linear, range: [0.0, 90.0], step: 0.1 }, 180.0),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            preset,
            linkage: LinkageSection {
                base_unit_l: p.base_unit_l,
                len_ab: p.len_ab,
                len_cb: p.len_cb,
                len_bd: p.len_bd,
                len_ae: p.len_ae,
                len_bf: p.len_bf,
                len_bg: p.len_bg,
                len_di: p.len_di,
                gamma: 160.0,
                s_min: p.s_min,
                s_max: p.s_max,
                alpha,
                beta,
                theta_t,
                branch_b: p.branch_b.as_i64(),
                branch_d: p.branch_d.as_i64(),
                branch_t: p.branch_t.as_i64(),
                tip_offset,
            },
            spring: SpringSection { k_slot: spring.k_slot, preload: spring.preload, k1: spring.k1 },
            drive,
            gripper: GripperSection { aperture },
        }
    }

    /// Parses a document, filling missing keys from its preset (SCAL-R when
    /// no preset is named).
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let patch: ConfigPatch = serde_json::from_str(text).map_err(|e| IoError::json("config", e))?;
        if patch.schema_version != SCHEMA_VERSION {
            return Err(IoError::Document(format!(
                "config: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                patch.schema_version
            )));
        }
        let mut doc = Self::preset(patch.preset.unwrap_or(PresetName::ScalR));
        let (l, s, d, g) = (&mut doc.linkage, &mut doc.spring, &mut doc.drive, &mut doc.gripper);
        fill!(l, patch.linkage, base_unit_l, len_ab, len_cb, len_bd, len_ae, len_bf, len_bg, len_di);
        fill!(l, patch.linkage, gamma, s_min, s_max, alpha, beta, theta_t, branch_b, branch_d, branch_t, tip_offset);
        fill!(s, patch.spring, k_slot, preload, k1);
        fill!(d, patch.drive, mode, range, step);
        fill!(g, patch.gripper, aperture);
        doc.check_fields()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Structural checks. Geometric validity is left to the linkage checks so
    /// that `validate` can report it.
    fn check_fields(&self) -> Result<(), IoError> {
        for (key, v) in [("linkage.branch_b", self.linkage.branch_b), ("linkage.branch_d", self.linkage.branch_d), ("linkage.branch_t", self.linkage.branch_t)] {
            if Branch::from_sign(v).is_none() {
                return Err(IoError::Document(format!("config: {key} must be 1 or -1 (got {v})")));
            }
        }
        let [lo, hi] = self.drive.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(IoError::Document(format!("config: drive.range must be increasing (got [{lo}, {hi}])")));
        }
        if !(self.drive.step.is_finite() && self.drive.step > 0.0) {
            return Err(IoError::Document(format!("config: drive.step must be positive (got {})", self.drive.step)));
        }
        if !(self.gripper.aperture.is_finite() && self.gripper.aperture > 0.0) {
            return Err(IoError::Document(format!("config: gripper.aperture must be positive (got {})", self.gripper.aperture)));
        }
        Ok(())
    }

    pub fn linkage_params(&self) -> LinkageParams {
        let l = &self.linkage;
        let branch = |v: i64| Branch::from_sign(v).expect("checked on parse");
        LinkageParams {
            base_unit_l: l.base_unit_l,
            len_ab: l.len_ab,
            len_cb: l.len_cb,
            len_bd: l.len_bd,
            len_ae: l.len_ae,
            len_bf: l.len_bf,
            len_bg: l.len_bg,
            len_di: l.len_di,
            gamma: l.gamma.to_radians(),
            s_min: l.s_min,
            s_max: l.s_max,
            alpha: l.alpha.to_radians(),
            beta: l.beta.to_radians(),
            theta_t: l.theta_t.to_radians(),
            branch_b: branch(l.branch_b),
            branch_d: branch(l.branch_d),
            branch_t: branch(l.branch_t),
            tip_offset: l.tip_offset.to_radians(),
        }
    }

    pub fn spring_params(&self) -> SpringParams {
        SpringParams { k_slot: self.spring.k_slot, preload: self.spring.preload, k1: self.spring.k1 }
    }

    pub fn drive_mode(&self) -> DriveMode {
        self.drive.mode.into()
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { start: self.drive.range[0], end: self.drive.range[1], step: self.drive.step }
    }

    pub fn assembly(&self) -> GripperAssembly {
        GripperAssembly::symmetric(self.linkage_params(), self.gripper.aperture)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn missing_keys_come_from_the_preset() {
        let doc = ConfigDocument::parse(r#"{"schema_version": 1, "preset": "scal_l", "linkage": {"len_bd": 45}}"#).unwrap();
        let mut want = ConfigDocument::preset(PresetName::ScalL);
        want.linkage.len_bd = 45.0;
        assert_eq!(doc, want);
        assert_eq!(doc.linkage_params().beta, (-15f64).to_radians());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = ConfigDocument::parse("{\"schema_version\": 1,\n \"linkage\": {\"len_xy\": 3}}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("len_xy") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn bad_branch_and_schema_are_rejected() {
        assert!(ConfigDocument::parse(r#"{"schema_version": 1, "linkage": {"branch_b": 0}}"#).is_err());
        assert!(ConfigDocument::parse(r#"{"schema_version": 7}"#).is_err());
        assert!(ConfigDocument::parse(r#"{"preset": "scal_r"}"#).is_err());
    }

    #[test]
    fn preset_matches_linkage_preset() {
        for (name, proto) in [(PresetName::ScalR, Prototype::ScalR), (PresetName::ScalL, Prototype::ScalL)] {
            let got = ConfigDocument::preset(name).linkage_params();
            let want = LinkageParams::preset(proto);
            assert!((got.alpha - want.alpha).abs() < 1e-15);
            assert!((got.tip_offset - want.tip_offset).abs() < 1e-15);
            assert_eq!(got.len_ab, want.len_ab);
            assert!((got.gamma - want.gamma).abs() < 1e-15);
            assert!((got.beta - want.beta).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn json_round_trip(
            len in 1.0f64..500.0,
            gamma in 1.0f64..179.0,
            beta in -180.0f64..180.0,
            k1 in 0.0f64..1e4,
            ap in 1.0f64..400.0,
            linear in any::<bool>(),
            branch in prop_oneof![Just(1i64), Just(-1i64)],
        ) {
            let mut doc = ConfigDocument::preset(if linear { PresetName::ScalL } else { PresetName::ScalR });
            doc.linkage.len_bd = len;
            doc.linkage.gamma = gamma;
            doc.linkage.beta = beta;
            doc.linkage.branch_d = branch;
            doc.spring.k1 = k1;
            doc.gripper.aperture = ap;
            let back = ConfigDocument::parse(&doc.to_json()).unwrap();
            prop_assert_eq!(&back, &doc);
            let again = ConfigDocument::parse(&back.to_json()).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}
