//! Scenario documents: world, robots, radios, seed and an optional
//! operator script, encoded as JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fleet::{BaseStation, MissionConfig, RobotSpec, SimConfig};
use crate::netsim::{RadioNode, RadioProfile};
use crate::world::WorldModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario at {path}: {message}")]
    Invariant { path: String, message: String },
}

impl ScenarioError {
    pub fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> &str {
        match self {
            Self::Schema { path, .. } | Self::Invariant { path, .. } => path,
        }
    }
}

/// Radio profiles by name and the profile used by each node. Nodes without
/// an assignment use `default_profile`. The names `915mhz` and `5ghz` are
/// predefined and may be overridden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub profiles: BTreeMap<String, RadioProfile>,
    pub assignments: BTreeMap<String, String>,
    pub default_profile: String,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            profiles: BTreeMap::new(),
            assignments: BTreeMap::new(),
            default_profile: "915mhz".into(),
        }
    }
}

impl RadioConfig {
    pub fn all_profiles(&self) -> BTreeMap<String, RadioProfile> {
        let mut all = BTreeMap::from([
            ("915mhz".to_string(), RadioProfile::band_915mhz()),
            ("5ghz".to_string(), RadioProfile::band_5ghz()),
        ]);
        all.extend(self.profiles.clone());
        all
    }

    pub fn profile_for(&self, node: &str) -> Option<RadioProfile> {
        let name = self.assignments.get(node).unwrap_or(&self.default_profile);
        self.all_profiles().get(name).cloned()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub world: WorldModel,
    pub robots: Vec<RobotSpec>,
    pub base_station: BaseStation,
    pub mission: MissionConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sim: SimConfig,
    /// Interpreted by the station's script runner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_script: Option<Vec<serde_json::Value>>,
}

fn schema_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> ScenarioError {
    let path = e.path().to_string();
    ScenarioError::Schema {
        path: if path.is_empty() || path == "." { "$".into() } else { path },
        message: e.inner().to_string(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The bundled demonstration site.
    pub fn demo_site() -> Self {
        Self::from_json(DEMO_SITE).expect("bundled demo_site is valid")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.world.validate()?;
        let mut ids = vec![self.base_station.id.clone()];
        for (i, r) in self.robots.iter().enumerate() {
            let path = format!("robots[{i}]");
            r.validate().map_err(|m| ScenarioError::invariant(&path, m))?;
            if ids.contains(&r.id) {
                return Err(ScenarioError::invariant(path, format!("duplicate node id '{}'", r.id)));
            }
            ids.push(r.id.clone());
            let p = r.start_pose.translation();
            if !self.world.bounds.contains(p) {
                return Err(ScenarioError::invariant(path, "start pose outside world bounds"));
            }
            if self.world.clearance(p) <= r.footprint_radius {
                return Err(ScenarioError::invariant(path, "start pose collides with a wall"));
            }
        }
        if !self.world.bounds.contains(self.base_station.position) {
            return Err(ScenarioError::invariant("base_station.position", "outside world bounds"));
        }
        for (key, id) in [
            ("mission.mapping_robot", &self.mission.mapping_robot),
            ("mission.inspection_robot", &self.mission.inspection_robot),
        ] {
            if !self.robots.iter().any(|r| &r.id == id) {
                return Err(ScenarioError::invariant(key, format!("unknown robot '{id}'")));
            }
        }
        if self.mission.mapping_robot == self.mission.inspection_robot {
            return Err(ScenarioError::invariant("mission", "mapping and inspection robots must differ"));
        }
        let profiles = self.radio.all_profiles();
        for (name, p) in &profiles {
            p.validate().map_err(|m| ScenarioError::invariant(format!("radio.profiles.{name}"), m))?;
        }
        if !profiles.contains_key(&self.radio.default_profile) {
            return Err(ScenarioError::invariant("radio.default_profile", "unknown profile"));
        }
        for (node, name) in &self.radio.assignments {
            let path = format!("radio.assignments.{node}");
            if !ids.contains(node) {
                return Err(ScenarioError::invariant(path, "unknown node"));
            }
            if !profiles.contains_key(name) {
                return Err(ScenarioError::invariant(path, format!("unknown profile '{name}'")));
            }
        }
        self.sim.validate().map_err(|m| ScenarioError::invariant("sim", m))?;
        Ok(())
    }

    pub fn robot(&self, id: &str) -> Option<&RobotSpec> {
        self.robots.iter().find(|r| r.id == id)
    }

    /// Radio nodes at their starting positions: base station first, then robots.
    pub fn radio_nodes(&self) -> Vec<RadioNode> {
        let mut nodes = vec![RadioNode {
            id: self.base_station.id.clone(),
            position: self.base_station.position,
            profile: self.radio.profile_for(&self.base_station.id).expect("validated"),
        }];
        nodes.extend(self.robots.iter().map(|r| RadioNode {
            id: r.id.clone(),
            position: r.start_pose.translation(),
            profile: self.radio.profile_for(&r.id).expect("validated"),
        }));
        nodes
    }
}

pub const DEMO_SITE: &str = include_str!("../scenarios/demo_site.json");

/// Parses a scenario document and returns its validated world.
pub fn load_world(scenario_document: &str) -> Result<WorldModel, ScenarioError> {
    #[derive(Deserialize)]
    struct WorldOnly {
        world: WorldModel,
    }
    let de = &mut serde_json::Deserializer::from_str(scenario_document);
    let doc: WorldOnly = serde_path_to_error::deserialize(de).map_err(schema_error)?;
    doc.world.validate()?;
    Ok(doc.world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::RegionLabel;

    #[test]
    fn open_field_world() {
        let doc = r#"{"world":{"bounds":{"min":[0,0],"max":[100,100]},"segments":[],"lights":[],"regions":[]}}"#;
        let w = load_world(doc).unwrap();
        assert!(w.segments.is_empty() && w.lights.is_empty());
    }

    #[test]
    fn degenerate_segment_reports_path() {
        let doc = r#"{"world":{"bounds":{"min":[0,0],"max":[10,10]},
            "segments":[{"a":[1,1],"b":[2,2]},{"a":[3,3],"b":[3,3]}],"lights":[],"regions":[]}}"#;
        let e = load_world(doc).unwrap_err();
        assert_eq!(e.path(), "world.segments[1]");
        assert!(e.to_string().contains("degenerate segment"));
    }

    #[test]
    fn schema_error_has_path() {
        let doc = r#"{"world":{"bounds":{"min":[0,0],"max":[10,10]},"segments":[{"a":[1,1],"b":"x"}],"lights":[],"regions":[]}}"#;
        match load_world(doc).unwrap_err() {
            ScenarioError::Schema { path, .. } => assert_eq!(path, "world.segments[0].b"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn demo_site_shape() {
        let s = Scenario::demo_site();
        assert_eq!(s.world.lights.len(), 2);
        assert_eq!(s.world.regions.iter().filter(|r| r.label == RegionLabel::Indoor).count(), 2);
        assert_eq!(s.robots.len(), 2);
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn unknown_assignment_rejected() {
        let mut s = Scenario::demo_site();
        s.radio.assignments.insert("nobody".into(), "915mhz".into());
        assert_eq!(s.validate().unwrap_err().path(), "radio.assignments.nobody");
    }
}
