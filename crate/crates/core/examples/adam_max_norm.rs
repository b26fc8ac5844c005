//! Adam on a two-weight quadratic whose minimum lies outside the max-norm
//! ball. The projection holds the weights on the boundary. They do not land
//! on the boundary point nearest the target, because Adam rescales each
//! coordinate before the projection is applied.

use std::error::Error;

use osvnet::nn::{Param, ParamRole};
use osvnet::optim::{adam_step, AdamState, TrainConfig};

pub fn run() -> Result<(), Box<dyn Error>> {
    let cfg = TrainConfig { lr: 0.1, ..TrainConfig::default() };
    let mut params = vec![Param::zeros("w", vec![1, 2], ParamRole::Kernel)];
    let mut state = AdamState::new(&params);
    let target = [6.0, 3.0];
    for step in 1..=200 {
        let w = &params[0].data;
        let grad = vec![w.iter().zip(target).map(|(w, t)| 2.0 * (w - t)).collect()];
        adam_step(&mut params, &grad, &mut state, &cfg)?;
        if step % 40 == 0 {
            let w = &params[0].data;
            println!("step {step:>3}  w = ({:.4}, {:.4})  |w| = {:.6}", w[0], w[1], w[0].hypot(w[1]));
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
