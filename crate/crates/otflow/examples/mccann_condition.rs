//! Which internal energies are geodesically convex? Sweeps the exponent
//! of the power energy and reports, per dimension, where the pressure
//! conditions start holding (the threshold is m >= 1 - 1/n).

use otflow::entropy::{check_mccann, make_entropy, EntropyKind};

fn main() -> otflow::Result<()> {
    println!("{:<8} dim 1  dim 2  dim 3", "m");
    // m = 1 is excluded: that limit is the logarithmic energy below.
    for &m in &[0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.5, 2.0, 3.0] {
        let model = make_entropy(EntropyKind::Power { m })?;
        let verdicts: Vec<&str> = (1..=3)
            .map(|n| if check_mccann(&model, n).pass { "ok" } else { "--" })
            .collect();
        println!("{m:<8} {:<6} {:<6} {:<6}", verdicts[0], verdicts[1], verdicts[2]);
    }
    let log = make_entropy(EntropyKind::Log)?;
    let log_ok = (1..=3).all(|n| check_mccann(&log, n).pass);
    println!("log      {}", if log_ok { "ok in every dimension" } else { "violated" });
    assert!(log_ok);
    Ok(())
}
