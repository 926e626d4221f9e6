#![allow(dead_code)]

use inspect_core::scenario::Scenario;
use serde_json::{json, Value};

pub fn wall(a: [f64; 2], b: [f64; 2], attenuation: f64) -> Value {
    json!({"a": a, "b": b, "radio_attenuation": attenuation, "opaque": true})
}

fn robots(warthog: [f64; 3], hd2: [f64; 3]) -> Value {
    json!([
        {"id": "warthog", "start_pose": {"x": warthog[0], "y": warthog[1], "theta": warthog[2]},
         "footprint_radius": 0.8, "v_max": 1.5, "omega_max": 1.0},
        {"id": "hd2", "start_pose": {"x": hd2[0], "y": hd2[1], "theta": hd2[2]},
         "footprint_radius": 0.35, "v_max": 0.8, "omega_max": 1.2, "camera": {}}
    ])
}

fn scenario(name: &str, world: Value, robots: Value, base: [f64; 2], script: Value) -> Scenario {
    let doc = json!({
        "name": name,
        "seed": 7,
        "world": world,
        "base_station": {"id": "base", "position": base},
        "robots": robots,
        "mission": {"mapping_robot": "warthog", "inspection_robot": "hd2"},
        "operator_script": script,
    });
    Scenario::from_json(&doc.to_string()).expect("fixture scenario is valid")
}

/// Single-storey building, 30 x 16 m: an east-west hallway with three
/// rooms on each side. Both robots start in the hallway.
pub fn building_world() -> Value {
    let a = 3.0;
    let segments = vec![
        wall([0.0, 0.0], [30.0, 0.0], 12.0),
        wall([30.0, 0.0], [30.0, 16.0], 12.0),
        wall([30.0, 16.0], [0.0, 16.0], 12.0),
        wall([0.0, 16.0], [0.0, 0.0], 12.0),
        wall([0.0, 10.0], [6.0, 10.0], a),
        wall([7.5, 10.0], [18.0, 10.0], a),
        wall([19.5, 10.0], [30.0, 10.0], a),
        wall([0.0, 6.0], [12.0, 6.0], a),
        wall([13.5, 6.0], [30.0, 6.0], a),
        wall([15.0, 10.0], [15.0, 16.0], a),
        wall([20.0, 0.0], [20.0, 6.0], a),
        wall([9.0, 0.0], [9.0, 3.0], a),
        wall([24.0, 12.5], [26.0, 12.5], a),
        wall([26.0, 12.5], [26.0, 14.0], a),
    ];
    json!({
        "bounds": {"min": [-1, -1], "max": [31, 17]},
        "segments": segments,
        "lights": [],
        "regions": [{"name": "building", "label": "indoor", "vertices": [[0, 0], [30, 0], [30, 16], [0, 16]]}],
    })
}

/// Teach path for the inspection robot through three rooms; 42 m long.
pub const TEACH_PATH: [[f64; 2]; 10] = [
    [6.75, 9.0],
    [6.75, 13.0],
    [6.75, 9.0],
    [12.75, 8.0],
    [12.75, 3.0],
    [12.75, 8.0],
    [18.75, 8.5],
    [18.75, 13.0],
    [18.75, 9.0],
    [16.0, 8.0],
];

pub fn teach_scenario() -> Scenario {
    let script = json!([
        {"at": 0.0, "drive": {"robot": "warthog", "waypoints": [[12, 7.5], [27, 7.5]]}},
        {"await": "drive_done:warthog", "command": {"type": "advance_phase"}},
        {"await": "phase:map_transfer", "command": {"type": "start_transfer", "from": "warthog", "to": "hd2"}},
        {"await": "phase:await_relocalize", "command": {"type": "reloc_guess", "robot_id": "hd2", "x": 1.7, "y": 1.8, "theta": 0.05}},
        {"await": "phase:indoor_inspection", "drive": {"robot": "hd2", "waypoints": TEACH_PATH}},
        {"await": "drive_done:hd2", "command": {"type": "advance_phase"}},
        {"await": "phase:complete", "wait": 1.0},
    ]);
    scenario("teach_building", building_world(), robots([2.0, 7.2, 0.0], [3.5, 9.2, 0.0]), [2.0, 3.0], script)
}

/// 45 m corridor, 3 m wide, with a cross wall at x = 20 leaving a 1.4 m
/// doorway in the middle and a cabinet against the south wall.
pub fn corridor_world() -> Value {
    let segments = vec![
        wall([0.0, 0.0], [45.0, 0.0], 3.0),
        wall([45.0, 0.0], [45.0, 3.0], 3.0),
        wall([45.0, 3.0], [0.0, 3.0], 3.0),
        wall([0.0, 3.0], [0.0, 0.0], 3.0),
        wall([20.0, 0.0], [20.0, 0.8], 3.0),
        wall([20.0, 2.2], [20.0, 3.0], 3.0),
        wall([30.0, 0.0], [30.0, 1.2], 3.0),
        wall([30.0, 1.2], [31.0, 1.2], 3.0),
        wall([31.0, 1.2], [31.0, 0.0], 3.0),
    ];
    json!({
        "bounds": {"min": [-1, -1], "max": [46, 10]},
        "segments": segments,
        "lights": [],
        "regions": [{"name": "corridor", "label": "indoor", "vertices": [[0, 0], [45, 0], [45, 3], [0, 3]]}],
    })
}

pub const CORRIDOR_START: [f64; 3] = [2.0, 1.0, 0.0];

pub fn corridor_scenario() -> Scenario {
    let script = json!([
        {"at": 0.0, "drive": {"robot": "hd2", "waypoints": [[38.0, 1.5]], "assist": true}},
        {"await": "drive_done:hd2", "wait": 0.5},
    ]);
    scenario("corridor_gap", corridor_world(), robots([40.0, 7.0, 0.0], CORRIDOR_START), [38.0, 8.0], script)
}

/// Open yard with a light straight ahead of the inspection robot's camera
/// and nothing in the lidar plane inside the camera cone. Walls behind the
/// robot give the tracker something to register against.
pub fn blind_light_scenario() -> Scenario {
    let world = json!({
        "bounds": {"min": [-30, -30], "max": [30, 30]},
        "segments": [
            wall([-4.0, -3.0], [-4.0, 3.0], 3.0),
            wall([-4.0, 3.0], [-1.0, 4.0], 3.0),
            wall([-4.0, -3.0], [-1.5, -4.0], 3.0),
        ],
        "lights": [{"position": [3.0, 0.0], "power": 1.0, "enabled": true}],
        "regions": [],
    });
    scenario("blind_light", world, robots([-2.0, -8.0, 0.0], [-0.3, 0.0, 0.0]), [-10.0, -10.0], json!([]))
}
