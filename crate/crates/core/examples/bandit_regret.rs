//! EXP3 against a stochastic environment: one good arm, two bad ones.
//!
//! Prints the step size the study horizon implies, then the probability
//! trajectory and the realized regret of one long run.
//!
//!     cargo run --example bandit_regret

use hintbandit::bandit::step_size;
use hintbandit::{Exp3, Loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MEANS: [f64; 3] = [0.2, 0.6, 0.6];
const HORIZON: u32 = 300;

fn main() {
    println!("eta for 3 arms over 20 hints: {:.6}", step_size(3, 20));
    println!();

    let mut bandit = Exp3::new(MEANS.len(), HORIZON).expect("valid bandit");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut total_loss = 0.0;
    println!("{:>5} {:>8} {:>8} {:>8}", "t", "p(arm0)", "p(arm1)", "p(arm2)");
    for t in 1..=HORIZON {
        let arm = bandit.pull(&mut rng).expect("no pull outstanding");
        let loss = if rng.random_bool(MEANS[arm]) { Loss::One } else { Loss::Zero };
        total_loss += loss.value();
        bandit.record_loss(arm, loss).expect("pull outstanding");
        if t == 1 || t % 50 == 0 {
            let p = bandit.probabilities();
            println!("{t:>5} {:>8.3} {:>8.3} {:>8.3}", p[0], p[1], p[2]);
        }
    }

    let best = MEANS.iter().cloned().fold(f64::INFINITY, f64::min) * HORIZON as f64;
    let k = MEANS.len() as f64;
    let envelope = 2.0 * (2.0 * HORIZON as f64 * k * k.ln()).sqrt();
    println!();
    println!("total loss        {total_loss:>7.1}");
    println!("best arm expected {best:>7.1}");
    println!("regret            {:>7.1}  (envelope {envelope:.1})", total_loss - best);
}
