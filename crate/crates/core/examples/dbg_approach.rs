use tgin_core::goal::ingest_goal_str;
use tgin_core::harness::{run_episode, EpisodeOptions, MetricProfile};
use tgin_core::scene::load_scene_str;

fn main() {
    let scene_str = std::fs::read_to_string("/tmp/one_room.json").unwrap();
    let scene = load_scene_str(&scene_str).unwrap();
    let goal = ingest_goal_str(r#"{
        "target": "dresser",
        "attributes": {"color": "white"},
        "groups": {"bed": ["bed"]},
        "relations": [{"ref": "bed", "tgt": "dresser", "rtype": "near"}]
    }"#).unwrap();
    let opts = EpisodeOptions { profile: MetricProfile::Coin, seed: 1, ..EpisodeOptions::default() };
    let result = run_episode(&scene, &goal, &opts);
    println!("verdict {:?} steps {} path {:.2}", result.verdict, result.steps, result.path_length);
    for (i, (x, y, h)) in result.trajectory.iter().enumerate() {
        if i % 20 == 0 || i + 5 > result.trajectory.len() {
            println!("  t{i:3}: ({x:.2}, {y:.2}) h={:.0}", h.to_degrees());
        }
    }
}
