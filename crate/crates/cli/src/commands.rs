use std::fmt::Write as _;
use std::path::Path;

use lie_gdt::batch::{eval_loss, LossMode, LossRequest, LossResponse, LossStatus};
use lie_gdt::lie::{riem_exp_identity, GeodesicCurve, Homography, TangentVector};
use lie_gdt::linalg::Mat3;
use lie_gdt::sampler::{params_to_homography, sample_params, Rng, TransformParams};
use lie_gdt::train::{make_sample, train, LossKind, TrainConfig, TrainSummary};
use log::info;
use serde::Serialize;

use crate::io::{create_dir, read_matrix, read_train_config, to_json, write, CliError, CliResult};
use crate::{Command, LossWeights, TrainFlags};

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Loss {
            t,
            that,
            weights,
            mode,
            fixed_last,
        } => {
            let req = LossRequest {
                t: read_matrix(&t)?,
                that: read_matrix(&that)?,
                lambda: weights.lambda,
                angle_power: weights.angle_power.try_into()?,
                mode,
                fixed_last,
            };
            cmd_loss(&req)
        }
        Command::Gradcheck {
            seed,
            count,
            mode,
            weights,
            tol,
            step,
        } => cmd_gradcheck(seed, count, mode, weights, tol, step),
        Command::Sample { seed, size, out } => cmd_sample(seed, size, &out),
        Command::Geodesic {
            from,
            to,
            points,
            out,
        } => cmd_geodesic(&from, &to, points, out.as_deref()),
        Command::Train { flags, loss } => {
            let mut cfg = train_config(&flags)?;
            if let Some(kind) = loss {
                cfg.loss_kind = kind;
            }
            cmd_train(&cfg, &flags.out)
        }
        Command::Bench { flags } => cmd_bench(&train_config(&flags)?, &flags.out),
    }
}

fn cmd_loss(req: &LossRequest) -> CliResult<()> {
    let resp = eval_loss(req);
    print!("{}", to_json(&resp));
    match resp.status {
        LossStatus::Ok | LossStatus::NearSingularGradient => Ok(()),
        LossStatus::Invalid => Err(CliError::Usage(resp.error.unwrap_or_default())),
        LossStatus::Singular | LossStatus::NoConvergence => Err(CliError::Failed),
    }
}

#[derive(Serialize)]
struct GradcheckReport {
    mode: LossMode,
    seed: u64,
    count: usize,
    tol: f64,
    step: f64,
    max_rel_err: f64,
    mean_rel_err: f64,
    /// Index of the case with the largest error.
    worst_case: usize,
    /// Cases that exceeded the tolerance or could not be evaluated.
    failures: usize,
    pass: bool,
}

/// A random pair `(T, s · T · Exp(R))` with `‖R‖ ≤ r_max` and a scale `s`
/// that exercises the determinant normalisation.
fn gradcheck_pair(rng: &mut Rng, r_max: f64) -> CliResult<([f64; 9], [f64; 9])> {
    let t = params_to_homography(&sample_params(rng), 32, 32)?;
    let raw = Mat3::from_fn(|_, _| rng.uniform(-1.0, 1.0));
    let dir = TangentVector::project(&raw);
    let r = dir.scale(rng.uniform(0.05, r_max) / dir.norm());
    let that = t.compose(&riem_exp_identity(&r)?);
    let s = rng.uniform(0.5, 2.0);
    Ok((
        t.matrix().to_row_major(),
        that.matrix().scale(s).to_row_major(),
    ))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest relative deviation between the analytic gradient of `req` and
/// central differences, or `None` if the request cannot be evaluated.
fn gradient_error(req: &LossRequest, h: f64) -> Option<f64> {
    let base = eval_loss(req);
    let g = base.grad.filter(|_| base.status == LossStatus::Ok)?;
    let value = |r: &LossRequest| -> Option<f64> {
        let resp: LossResponse = eval_loss(r);
        resp.loss.filter(|_| resp.status != LossStatus::Singular)
    };
    let mut fd = [0.0; 9];
    for k in 0..9 {
        let (mut p, mut q) = (*req, *req);
        p.that[k] += h;
        q.that[k] -= h;
        fd[k] = (value(&p)? - value(&q)?) / (2.0 * h);
    }
    let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
    Some(norm(&diff) / norm(&fd).max(norm(&g)).max(1e-12))
}

fn cmd_gradcheck(
    seed: u64,
    count: usize,
    mode: LossMode,
    weights: LossWeights,
    tol: f64,
    step: f64,
) -> CliResult<()> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if !(step > 0.0 && tol > 0.0) {
        return Err(CliError::Usage("--step and --tol must be positive".into()));
    }
    let r_max = if mode == LossMode::Exact { 0.5 } else { 1.0 };
    let mut rng = Rng::new(seed);
    let (mut max_err, mut sum, mut worst, mut failures) = (0.0f64, 0.0, 0, 0);
    for case in 0..count {
        let (t, that) = gradcheck_pair(&mut rng, r_max)?;
        let req = LossRequest {
            t,
            that,
            lambda: weights.lambda,
            angle_power: weights.angle_power.try_into()?,
            mode,
            fixed_last: false,
        };
        let err = gradient_error(&req, step).unwrap_or(f64::INFINITY);
        if !(err <= tol) {
            failures += 1;
        }
        if err > max_err || case == 0 {
            max_err = err;
            worst = case;
        }
        sum += err;
    }
    let report = GradcheckReport {
        mode,
        seed,
        count,
        tol,
        step,
        max_rel_err: max_err,
        mean_rel_err: sum / count as f64,
        worst_case: worst,
        failures,
        pass: failures == 0,
    };
    print!("{}", to_json(&report));
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

#[derive(Serialize)]
struct SampleReport {
    seed: u64,
    width: usize,
    height: usize,
    params: TransformParams,
    /// Unit-determinant homography in the normalised frame, row-major.
    homography: [f64; 9],
    original: String,
    warped: String,
}

fn cmd_sample(seed: u64, size: usize, out: &Path) -> CliResult<()> {
    let s = make_sample(seed, 0, size)?;
    create_dir(out)?;
    write(&out.join("original.pgm"), s.image.to_pgm())?;
    write(&out.join("warped.pgm"), s.warped.to_pgm())?;
    let report = SampleReport {
        seed,
        width: size,
        height: size,
        params: s.params,
        homography: s.transform.matrix().to_row_major(),
        original: "original.pgm".into(),
        warped: "warped.pgm".into(),
    };
    let json = to_json(&report);
    write(&out.join("sample.json"), &json)?;
    print!("{json}");
    Ok(())
}

fn geodesic_csv(from: &Homography, to: &Homography, points: usize) -> CliResult<String> {
    let curve = GeodesicCurve::between(from, to)?;
    let mut csv = String::from("s,h00,h01,h02,h10,h11,h12,h20,h21,h22\n");
    for k in 0..points {
        let s = k as f64 / (points - 1) as f64;
        let h = curve.point_at(s)?;
        let row: Vec<String> = h
            .matrix()
            .to_row_major()
            .iter()
            .map(f64::to_string)
            .collect();
        writeln!(csv, "{s},{}", row.join(",")).expect("write to String");
    }
    Ok(csv)
}

fn cmd_geodesic(from: &Path, to: &Path, points: usize, out: Option<&Path>) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let a = Homography::try_from(Mat3::from_row_major(&read_matrix(from)?))?;
    let b = Homography::try_from(Mat3::from_row_major(&read_matrix(to)?))?;
    let csv = geodesic_csv(&a, &b, points)?;
    match out {
        Some(path) => write(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn train_config(flags: &TrainFlags) -> CliResult<TrainConfig> {
    let mut cfg = match &flags.config {
        Some(path) => read_train_config(path)?,
        None => TrainConfig::default(),
    };
    cfg.seed = flags.seed;
    if let Some(v) = flags.steps {
        cfg.steps = v;
    }
    if let Some(v) = flags.batch {
        cfg.minibatch_size = v;
    }
    if let Some(v) = flags.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = flags.angle_power {
        cfg.angle_power = v.try_into()?;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.image_size {
        cfg.image_size = v;
    }
    if let Some(v) = flags.eval_pairs {
        cfg.eval_pairs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(cfg: &TrainConfig, out: &Path) -> CliResult<()> {
    create_dir(out)?;
    let report = train(cfg)?;
    write(&out.join("report.csv"), report.to_csv())?;
    let json = to_json(&report.summary(true));
    write(&out.join("summary.json"), &json)?;
    print!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct BenchArm {
    loss_kind: LossKind,
    report_csv: String,
    summary: TrainSummary,
}

#[derive(Serialize)]
struct BenchComparison {
    seed: u64,
    arms: Vec<BenchArm>,
    /// Trained eval angle error of the surrogate arm minus that of the MSE arm.
    angle_error_difference: f64,
}

fn cmd_bench(base: &TrainConfig, out: &Path) -> CliResult<()> {
    create_dir(out)?;
    let mut arms = Vec::new();
    for kind in [LossKind::GdtSurrogate, LossKind::Mse] {
        let cfg = TrainConfig {
            loss_kind: kind,
            ..base.clone()
        };
        info!("bench arm {kind}");
        let report = train(&cfg)?;
        let name = format!("{kind}.csv");
        write(&out.join(&name), report.to_csv())?;
        arms.push(BenchArm {
            loss_kind: kind,
            report_csv: name,
            summary: report.summary(false),
        });
    }
    let comparison = BenchComparison {
        seed: base.seed,
        angle_error_difference: arms[0].summary.eval_angle_error_trained
            - arms[1].summary.eval_angle_error_trained,
        arms,
    };
    let json = to_json(&comparison);
    write(&out.join("comparison.json"), &json)?;
    print!("{json}");
    Ok(())
}
