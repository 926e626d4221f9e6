use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    OutdoorMapping,
    MapTransfer,
    AwaitRelocalize,
    IndoorInspection,
    ReturnHome,
    Complete,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::OutdoorMapping,
        Phase::MapTransfer,
        Phase::AwaitRelocalize,
        Phase::IndoorInspection,
        Phase::ReturnHome,
        Phase::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::OutdoorMapping => "outdoor_mapping",
            Phase::MapTransfer => "map_transfer",
            Phase::AwaitRelocalize => "await_relocalize",
            Phase::IndoorInspection => "indoor_inspection",
            Phase::ReturnHome => "return_home",
            Phase::Complete => "complete",
        }
    }

    pub fn from_name(name: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionEvent {
    AdvancePhase,
    TransferComplete,
    RelocalizeSuccess,
    RepeatDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{event:?} not accepted during {phase}")]
pub struct TransitionError {
    pub phase: Phase,
    pub event: MissionEvent,
}

/// The phase that follows `phase` on `event`.
pub fn next_phase(phase: Phase, event: MissionEvent) -> Result<Phase, TransitionError> {
    use MissionEvent::*;
    use Phase::*;
    match (phase, event) {
        (OutdoorMapping, AdvancePhase) => Ok(MapTransfer),
        (MapTransfer, TransferComplete) => Ok(AwaitRelocalize),
        (AwaitRelocalize, RelocalizeSuccess) => Ok(IndoorInspection),
        (IndoorInspection, AdvancePhase | RepeatDone) => Ok(ReturnHome),
        (ReturnHome, RepeatDone) => Ok(Complete),
        _ => Err(TransitionError { phase, event }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn happy_path() {
        use MissionEvent::*;
        let mut p = Phase::OutdoorMapping;
        for e in [AdvancePhase, TransferComplete, RelocalizeSuccess, AdvancePhase, RepeatDone] {
            p = next_phase(p, e).unwrap();
        }
        assert_eq!(p, Phase::Complete);
    }

    #[test]
    fn out_of_order_rejected() {
        let e = next_phase(Phase::MapTransfer, MissionEvent::RelocalizeSuccess).unwrap_err();
        assert_eq!(e.phase, Phase::MapTransfer);
        assert!(next_phase(Phase::Complete, MissionEvent::AdvancePhase).is_err());
    }

    fn event() -> impl Strategy<Value = MissionEvent> {
        prop_oneof![
            Just(MissionEvent::AdvancePhase),
            Just(MissionEvent::TransferComplete),
            Just(MissionEvent::RelocalizeSuccess),
            Just(MissionEvent::RepeatDone),
        ]
    }

    proptest! {
        #[test]
        fn phases_only_move_forward(events in proptest::collection::vec(event(), 0..40)) {
            let mut p = Phase::OutdoorMapping;
            let mut visited = vec![p];
            for e in events {
                if let Ok(n) = next_phase(p, e) {
                    prop_assert!(n > p);
                    p = n;
                    prop_assert!(!visited.contains(&p));
                    visited.push(p);
                }
            }
        }
    }
}
