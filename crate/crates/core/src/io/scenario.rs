//! Scenario document (JSON). Angles in degrees, lengths in mm.

use serde::{Deserialize, Serialize};

use crate::contact::{Approach, Behavior, Environment, ObjectShape, Scenario, Schedule, SimSettings, Support};
use crate::drive::DriveMode;

use super::config::{ConfigDocument, SCHEMA_VERSION};
use super::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorName {
    PinchLift,
    Envelope,
    PassiveOpen,
    ObliqueProbe,
}

impl From<BehaviorName> for Behavior {
    fn from(b: BehaviorName) -> Self {
        match b {
            BehaviorName::PinchLift => Behavior::PinchLift,
            BehaviorName::Envelope => Behavior::Envelope,
            BehaviorName::PassiveOpen => Behavior::PassiveOpen,
            BehaviorName::ObliqueProbe => Behavior::ObliqueProbe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    Flat,
    Ramp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDoc {
    pub support: SupportKind,
    #[serde(default)]
    pub ramp_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    Rectangle,
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub shape: ShapeName,
    /// Rectangle width or disk diameter.
    pub width: f64,
    /// Rectangle height; ignored for disks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    /// Arc position of the center along the support.
    #[serde(default)]
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproachDoc {
    pub center: f64,
    pub base_height: f64,
    /// Closing drive grid; the config drive section when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDoc>,
    pub fold_angle: f64,
    pub fold_step: f64,
    pub probe_tilt: f64,
    pub probe_carriage: f64,
    pub probe_depth: f64,
    pub probe_step: f64,
    pub aim_clearance: f64,
}

impl Default for ApproachDoc {
    fn default() -> Self {
        let a = Approach::default();
        Self {
            center: a.center,
            base_height: a.base_height,
            schedule: None,
            fold_angle: a.fold_angle.to_degrees(),
            fold_step: a.fold_step,
            probe_tilt: 0.0,
            probe_carriage: a.probe_carriage,
            probe_depth: a.probe_depth,
            probe_step: a.probe_step,
            aim_clearance: a.aim_clearance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SettingsDoc {
    pub lift_clearance: f64,
    pub secure_clearance: f64,
    pub attach_angle: f64,
    pub open_gate: f64,
}

impl Default for SettingsDoc {
    fn default() -> Self {
        let s = SimSettings::default();
        Self {
            lift_clearance: s.lift_clearance,
            secure_clearance: s.secure_clearance,
            attach_angle: s.attach_angle.to_degrees(),
            open_gate: s.open_gate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub behavior: BehaviorName,
    pub environment: EnvironmentDoc,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub approach: ApproachDoc,
    #[serde(default)]
    pub settings: SettingsDoc,
}

impl ScenarioDocument {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| IoError::json("scenario", e))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(IoError::Document(format!(
                "scenario: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Builds the runnable scenario and checks it against the config's drive
    /// mode.
    pub fn resolve(&self, config: &ConfigDocument) -> Result<Scenario, IoError> {
        let behavior: Behavior = self.behavior.into();
        let mode = config.drive_mode();
        let needs = match behavior {
            Behavior::Envelope => Some(DriveMode::Rotational),
            Behavior::PassiveOpen | Behavior::ObliqueProbe => Some(DriveMode::Linear),
            Behavior::PinchLift => None,
        };
        if let Some(want) = needs {
            if want != mode {
                return Err(IoError::Document(format!(
                    "scenario: behavior `{}` requires {:?} drive but the config selects {:?}",
                    behavior.name(),
                    want,
                    mode
                )));
            }
        }
        let support = match self.environment.support {
            SupportKind::Flat => Support::Flat,
            SupportKind::Ramp => Support::Ramp { angle: self.environment.ramp_angle.to_radians() },
        };
        let objects = self
            .objects
            .iter()
            .map(|o| match o.shape {
                ShapeName::Disk => Ok(ObjectShape::disk(o.width, o.position)),
                ShapeName::Rectangle => match o.height {
                    Some(h) => Ok(ObjectShape::rectangle(o.width, h, o.position)),
                    None => Err(IoError::Document("scenario: rectangle objects need a height".into())),
                },
            })
            .collect::<Result<Vec<_>, _>>()?;
        let a = &self.approach;
        let schedule = match &a.schedule {
            Some(s) => Schedule { start: s.start, end: s.end, step: s.step },
            None => config.schedule(),
        };
        let approach = Approach {
            center: a.center,
            base_height: a.base_height,
            schedule,
            fold_angle: a.fold_angle.to_radians(),
            fold_step: a.fold_step,
            probe_tilt: a.probe_tilt.to_radians(),
            probe_carriage: a.probe_carriage,
            probe_depth: a.probe_depth,
            probe_step: a.probe_step,
            aim_clearance: a.aim_clearance,
        };
        let s = &self.settings;
        let settings = SimSettings {
            lift_clearance: s.lift_clearance,
            secure_clearance: s.secure_clearance,
            attach_angle: s.attach_angle.to_radians(),
            open_gate: s.open_gate,
        };
        Ok(Scenario { environment: Environment { support, objects }, behavior, approach, settings })
    }
}
