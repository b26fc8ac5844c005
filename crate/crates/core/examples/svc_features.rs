//! Turns a pen trajectory in SVC-2004 text format into the 47 global
//! features of the `svc47` recipe.

use std::error::Error;

use osvnet::features::{extract_globals, FeatureRecipe};
use osvnet::ingest::parse_svc_trajectory;

fn spiral() -> String {
    let n = 120;
    let mut text = format!("{n}\n");
    for i in 0..n {
        let a = i as f64 / 10.0;
        let (x, y) = ((3000.0 + 40.0 * a * a.cos()) as i64, (2000.0 + 40.0 * a * a.sin()) as i64);
        let pen = u8::from(i % 40 != 39);
        text += &format!("{x} {y} {} {pen} {} {} {}\n", i * 10, 1200 + i, 500 + i % 20, 300 + (i * 13) % 400);
    }
    text
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut traj = parse_svc_trajectory(&spiral())?;
    traj.writer_id = "U01".into();
    traj.sample_id = "S01".into();
    let recipe = FeatureRecipe::svc47();
    let features = extract_globals(&traj, &recipe)?;
    println!("{} points -> {} features", traj.samples.len(), features.values.len());
    for (name, v) in recipe.feature_names().iter().zip(&features.values).step_by(4) {
        println!("{name:<24} {v:>14.4}");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
