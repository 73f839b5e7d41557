//! Propose/validate traces under scripted validators.
//!
//! cargo run --example refinement_loop

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::agents::scripted::{AlwaysFail, AlwaysPass, BernoulliValidator, PassOnRound};
use deliberate::agents::{Paired, Perspective, Validator};
use deliberate::engine::assess_perspective;
use deliberate::host::default_hosts;
use deliberate::synth::{generate, SynthConfig};

fn trace(name: &str, validator: impl Validator, k: u32) -> Result<(), Box<dyn std::error::Error>> {
    let backend = Paired::new(name, RubricBackend::new(Rubric::default())?, validator);
    let profile = generate(&SynthConfig { minor_share: 0.0, ..SynthConfig::new(1, 5) })?.profiles.remove(0);
    let host = &default_hosts()[0];
    let a = assess_perspective(&profile, host, Perspective::Emotional, &backend, k)?;
    println!("{name} (K = {k}): {} round(s), converged {}", a.iterations_used, a.converged);
    for (i, score) in a.proposed_scores.iter().enumerate() {
        let verdict = a.verdicts.get(i).map_or("not validated".to_string(), |v| {
            if v.is_pass() {
                "pass".to_string()
            } else {
                format!("{:?}: {:?}", v.severity, v.kinds())
            }
        });
        println!("  proposal {}  score {:?}  {verdict}", i + 1, score);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    trace("always-pass", AlwaysPass, 3)?;
    trace("pass-on-round-2", PassOnRound(2), 3)?;
    trace("always-fail", AlwaysFail, 3)?;
    trace("bernoulli-0.5", BernoulliValidator::new(0.5, 9)?, 5)?;
    Ok(())
}
