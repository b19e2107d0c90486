//! The pre-analysis screen: flat or decreasing data never reach the sampler.

use bayes_bmd::data::cumene;
use bayes_bmd::screen::{empirical_extra_risk, screen};
use bayes_bmd::QuantalDataset;

fn main() -> bayes_bmd::Result<()> {
    let cases = [
        ("cumene", cumene()),
        (
            "flat",
            QuantalDataset::new(&[0.0, 10.0, 20.0], &[5, 5, 5], &[50, 50, 50])?,
        ),
        (
            "decreasing",
            QuantalDataset::new(&[0.0, 10.0, 20.0], &[20, 12, 6], &[50, 50, 50])?,
        ),
    ];
    for (name, data) in &cases {
        let extra = empirical_extra_risk(data)?;
        let s = screen(data)?;
        println!(
            "{name:<10} extra risk {:?}  s_max {:.4} at group {}  {}",
            extra
                .iter()
                .map(|v| (v * 1e4).round() / 1e4)
                .collect::<Vec<_>>(),
            s.s_max,
            s.argmax_index,
            if s.passed { "ok" } else { "data failure" }
        );
    }
    Ok(())
}
