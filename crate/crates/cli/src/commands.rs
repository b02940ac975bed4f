use std::fmt::Write as _;

use anyhow::{bail, Result};
use itpq_core::random;
use itpq_core::{
    born_assignment, coherence_curve, curve_csv, ks_search, orthogonalization_curve, same_sector,
    sample_outcome, sector_block_report, truncated_overlap, verify_frame_function,
    ConstantAssignment, Context, KsInstance, ProbabilityAssignment, Ray,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    AssignmentKind, Builtin, CascadeArgs, Command, Format, GleasonArgs, KsCheckArgs,
    OperatorBlockArgs, PairArgs,
};
use crate::input;

/// Result of a subcommand before anything touches the disk.
pub struct Outcome {
    /// Printed to stdout.
    pub summary: Value,
    /// (file name, contents), written in order.
    pub files: Vec<(String, String)>,
    pub seed: Option<u64>,
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::KsCheck(a) => ks_check(a),
        Command::GleasonTest(a) => gleason_test(a),
        Command::Sector(a) => sector(a),
        Command::Overlap(a) => overlap(a),
        Command::OperatorBlock(a) => operator_block(a),
        Command::Cascade(a) => cascade(a),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn ks_check(args: &KsCheckArgs) -> Result<Outcome> {
    let instance = match (&args.instance, args.builtin) {
        (_, Some(Builtin::Cabello18)) => KsInstance::cabello18(),
        (_, Some(Builtin::Control)) => KsInstance::control(),
        (Some(path), None) => input::ks_instance(path)?,
        (None, None) => bail!("give an instance file or --builtin"),
    };
    let outcome = ks_search(&instance);
    let summary = match &outcome.assignment {
        Some(assignment) => json!({
            "colorable": true,
            "assignment": assignment.vector_values(&instance).expect("search covers every vector"),
            "rays": outcome.rays,
            "contexts_checked": outcome.contexts_checked,
            "nodes": outcome.nodes,
        }),
        None => json!({
            "colorable": false,
            "rays": outcome.rays,
            "contexts_checked": outcome.contexts_checked,
            "nodes": outcome.nodes,
        }),
    };
    Ok(Outcome {
        files: vec![("ks.json".into(), pretty(&summary))],
        summary,
        seed: None,
    })
}

fn gleason_test(args: &GleasonArgs) -> Result<Outcome> {
    let state = args.state.as_deref().map(input::state_vector).transpose()?;
    let dim = match (&state, args.dim) {
        (Some(v), Some(d)) if v.dim() != d => bail!("--dim {d} but state has dim {}", v.dim()),
        (Some(v), _) => v.dim(),
        (None, Some(d)) => d,
        (None, None) => 4,
    };
    if dim < 2 {
        bail!("dim must be >= 2");
    }
    if args.contexts == 0 {
        bail!("--contexts must be >= 1");
    }
    let mut rng = random::rng(args.seed);
    let psi = match state {
        Some(v) => v,
        None => random::unit_vector(&mut rng, dim),
    };
    let contexts: Vec<Context> = (0..args.contexts)
        .map(|_| Context::new(random::orthonormal_basis(&mut rng, dim)))
        .collect::<Result<_, _>>()?;
    let assignment: Box<dyn ProbabilityAssignment> = match args.assignment {
        AssignmentKind::Born => Box::new(born_assignment(&Ray::new(&psi)?)),
        AssignmentKind::Uniform => Box::new(ConstantAssignment::uniform(dim)),
        AssignmentKind::Ones => Box::new(ConstantAssignment { dim, value: 1.0 }),
    };
    let report = verify_frame_function(assignment.as_ref(), &contexts)?;

    let summary = json!({
        "assignment": args.assignment,
        "dim": dim,
        "contexts": contexts.len(),
        "tolerance": report.tolerance,
        "passed": report.passed,
        "failures": report.failures().count(),
        "max_deviation": report.max_deviation(),
    });
    let table = match args.format {
        Format::Csv => {
            let mut out = String::from("context,sum,deviation,passed\n");
            for e in &report.entries {
                writeln!(
                    out,
                    "{},{},{:e},{}",
                    e.context, e.sum, e.deviation, e.passed
                )
                .expect("string write");
            }
            ("gleason-contexts.csv".to_string(), out)
        }
        Format::Json => ("gleason-contexts.json".to_string(), pretty(&report.entries)),
    };
    Ok(Outcome {
        files: vec![("gleason.json".into(), pretty(&summary)), table],
        summary,
        seed: Some(args.seed),
    })
}

fn sector(args: &PairArgs) -> Result<Outcome> {
    let a = input::product_state(&args.state_a)?;
    let b = input::product_state(&args.state_b)?;
    let n_list = input::n_list(&args.n_list)?;
    let verdict = same_sector(&a, &b)?;
    let curve = orthogonalization_curve(&a, &b, &n_list)?;
    let summary = serde_json::to_value(&verdict)?;
    let curve_file = match args.format {
        Format::Csv => ("curve.csv".to_string(), curve_csv(&curve)),
        Format::Json => ("curve.json".to_string(), pretty(&curve)),
    };
    Ok(Outcome {
        files: vec![("sector.json".into(), pretty(&summary)), curve_file],
        summary,
        seed: None,
    })
}

#[derive(Serialize)]
struct OverlapPoint {
    n: u64,
    magnitude: f64,
    log2_magnitude: f64,
    phase: f64,
}

fn overlap(args: &PairArgs) -> Result<Outcome> {
    let a = input::product_state(&args.state_a)?;
    let b = input::product_state(&args.state_b)?;
    let n_list = input::n_list(&args.n_list)?;
    orthogonalization_curve(&a, &b, &n_list)?;
    let points: Vec<OverlapPoint> = n_list
        .iter()
        .map(|&n| {
            let amp = truncated_overlap(&a, &b, n)?;
            Ok(OverlapPoint {
                n,
                magnitude: amp.magnitude(),
                log2_magnitude: amp.log2_magnitude(),
                phase: amp.phase(),
            })
        })
        .collect::<Result<_>>()?;
    let file = match args.format {
        Format::Csv => {
            let mut out = String::from("n,|overlap|,log2|overlap|,phase\n");
            for p in &points {
                writeln!(
                    out,
                    "{},{:e},{},{}",
                    p.n, p.magnitude, p.log2_magnitude, p.phase
                )
                .expect("string write");
            }
            ("overlap.csv".to_string(), out)
        }
        Format::Json => ("overlap.json".to_string(), pretty(&points)),
    };
    let summary = json!({"points": points.len(), "last": points.last()});
    Ok(Outcome {
        summary,
        files: vec![file],
        seed: None,
    })
}

fn operator_block(args: &OperatorBlockArgs) -> Result<Outcome> {
    let expr = input::operator(&args.expr)?;
    let reps = args
        .reps
        .iter()
        .map(|p| input::product_state(p))
        .collect::<Result<Vec<_>>>()?;
    if args.epsilon.is_nan() || args.epsilon <= 0.0 {
        bail!("--epsilon must be positive");
    }
    let report = sector_block_report(&expr, &reps, args.n, args.epsilon)?;
    let summary = json!({
        "n": report.n,
        "epsilon": report.epsilon,
        "sectors": report.sectors,
        "sector_count": report.sector_count(),
        "order": report.order,
        "cross_sector_max": report.cross_sector_max,
        "cross_below_epsilon": report.cross_below_epsilon,
    });
    let table = match args.format {
        Format::Csv => ("block.csv".to_string(), report.to_csv()),
        Format::Json => ("block.json".to_string(), pretty(&report)),
    };
    Ok(Outcome {
        files: vec![
            ("block-summary.json".into(), pretty(&summary)),
            table,
            ("block.txt".into(), report.render()),
        ],
        summary,
        seed: None,
    })
}

fn cascade(args: &CascadeArgs) -> Result<Outcome> {
    let config = input::cascade_config(&args.config)?;
    let last = args.depths.unwrap_or(config.max_depth);
    let depths: Vec<usize> = (0..=last).collect();
    let report = coherence_curve(&config, &depths)?;
    let histogram = sample_outcome(&config, args.samples, args.seed)?;
    let final_row = report.rows.last().expect("depth list is nonempty");
    let summary = json!({
        "depths": depths.len(),
        "final_device_size": final_row.device_size,
        "final_max_log2_coherence": final_row
            .coherences
            .iter()
            .map(|c| c.log2_magnitude)
            .reduce(f64::max),
        "trace": final_row.trace,
        "samples": histogram.samples,
        "frequencies": histogram.frequencies,
        "p_value": histogram.p_value,
        "seed": histogram.seed,
    });
    let curve = match args.format {
        Format::Csv => ("coherence.csv".to_string(), report.to_csv()),
        Format::Json => ("coherence.json".to_string(), pretty(&report)),
    };
    Ok(Outcome {
        files: vec![curve, ("histogram.json".into(), pretty(&histogram))],
        summary,
        seed: Some(args.seed),
    })
}
