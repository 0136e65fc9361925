//! Runs the default training configuration and prints the summary.

use lie_gdt::train::{train, TrainConfig};

fn main() -> lie_gdt::Result<()> {
    let report = train(&TrainConfig::default())?;
    let s = report.summary(true);
    println!(
        "loss {:.4} -> {:.4} (ratio {:.3}), eval angle {:.4} -> {:.4}, skipped {}, fallback {}, {:.1}s",
        s.initial_smoothed_loss,
        s.final_smoothed_loss,
        s.loss_ratio,
        s.eval_angle_error_untrained,
        s.eval_angle_error_trained,
        s.skipped_samples,
        s.fallback_samples,
        report.wall_clock_secs
    );
    Ok(())
}
