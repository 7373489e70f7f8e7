//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are pinned below.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use orlicz_lab::estimates::{
    default_lambda_grid, default_u_grid, sample_with_norm, sandwich_check, small_norm_degeneracy_probe,
    theorem1_bound, theorem2_bound, theorem3_bound, theorem4_bound, verify_minorant, PhiDomain, PhiMinorant,
    Sandwich, Theorem2Options,
};
use orlicz_lab::hammerstein::{
    rothe_radius, sigma_estimate, solve, verify_minty, verify_rothe, HammersteinProblem, NonlinearitySpec,
    PointwiseRule, SolveOptions,
};
use orlicz_lab::modular::{char_norms, luxemburg_norm, modular, orlicz_norm};
use orlicz_lab::nfunction::{delta2_probe, growth_condition4_probe};
use orlicz_lab::rng::{gaussian_vec, log_uniform, seeded, uniform};
use orlicz_lab::scalar::log_grid;
use orlicz_lab::{GridFunction, MeasureSpace, NFunction, NFunctionSpec};

const SEED: u64 = 20_240_601;

const LP_IDENTITY_TOL: f64 = 1e-8;
const EQUIVALENCE_SLACK: f64 = 1e-9;
const ORLICZ_TWICE_TOL: f64 = 1e-8;
const CHAR_TOL: f64 = 1e-8;
const CONJUGATE_TOL: f64 = 1e-8;
const INVOLUTION_TOL: f64 = 1e-6;
const YOUNG_SLACK: f64 = 1e-10;
const SANDWICH_POINTS: usize = 200;
const DEGENERACY_FLOOR: f64 = 0.2499;
const SOLVE_RESIDUAL: f64 = 1e-8;
const SOLVE_MAX_ITER: usize = 200;
const LINEAR_SOLVE_TOL: f64 = 1e-12;
const MULTISTART_TOL: f64 = 1e-6;
const CERTIFICATE_FLOOR: f64 = -1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 lp identity", lp_identity),
        ("2 norm equivalence", norm_equivalence),
        ("3 characteristic functions", characteristic_functions),
        ("4 conjugation", conjugation),
        ("5 large-norm power minorant", large_norm_power),
        ("6 truncated large-norm minorant", truncated_large_norm),
        ("7 small-norm bounds and sandwiches", small_norm_and_sandwiches),
        ("8 probes", probes),
        ("9 small-norm degeneracy", degeneracy),
        ("10 hammerstein", hammerstein),
        ("11 determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<36} {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<36} {detail} ({secs:.2}s)");
            }
        }
    }
    println!("{} failed, total {:.2}s", failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn catalog() -> Vec<NFunction> {
    NFunctionSpec::catalog().into_iter().map(|s| NFunction::new(s).unwrap()).collect()
}

fn random_space(n: usize, seed: u64) -> MeasureSpace {
    let mut rng = seeded(seed);
    MeasureSpace::new((0..n).map(|_| uniform(&mut rng, 0.1, 1.0) / n as f64).collect()).unwrap()
}

fn lp_identity() -> Outcome {
    let space = random_space(64, SEED);
    let mut rng = seeded(SEED + 1);
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let m = NFunction::power(p).unwrap();
        for _ in 0..100 {
            let s = log_uniform(&mut rng, 0.1, 10.0);
            let x = GridFunction::new(gaussian_vec(&mut rng, 64).into_iter().map(|v| v * s).collect()).unwrap();
            let value = modular(&m, &space, &x).unwrap();
            let norm = luxemburg_norm(&m, &space, &x).unwrap();
            worst = worst.max((value - norm.powf(p)).abs() / value.max(1.0));
        }
    }
    ensure(worst <= LP_IDENTITY_TOL, format!("300 samples, worst scaled error {worst:.2e}"))
}

fn norm_equivalence() -> Outcome {
    let space = random_space(16, SEED + 2);
    let mut rng = seeded(SEED + 3);
    let (mut bad, mut worst_twice) = (0, 0.0_f64);
    for m in catalog() {
        let is_square = matches!(m.spec(), NFunctionSpec::Power { p } if *p == 2.0);
        for _ in 0..200 {
            let s = log_uniform(&mut rng, 0.1, 3.0);
            let x = GridFunction::new(gaussian_vec(&mut rng, 16).into_iter().map(|v| v * s).collect()).unwrap();
            let l = luxemburg_norm(&m, &space, &x).unwrap();
            let a = orlicz_norm(&m, &space, &x).unwrap();
            if !(l <= a * (1.0 + 1e-12) && a <= 2.0 * l + EQUIVALENCE_SLACK) {
                bad += 1;
            }
            if is_square {
                worst_twice = worst_twice.max((a - 2.0 * l).abs() / l);
            }
        }
    }
    ensure(
        bad == 0 && worst_twice <= ORLICZ_TWICE_TOL,
        format!("1000 samples, {bad} violations, p=2 |A-2L|/L {worst_twice:.2e}"),
    )
}

fn characteristic_functions() -> Outcome {
    // cells 0, 0+1, 0+1+2 carry measure 0.1, 1 and 4
    let space = MeasureSpace::new(vec![0.1, 0.9, 3.0]).unwrap();
    let mut worst: f64 = 0.0;
    for m in catalog() {
        for cells in [vec![0], vec![0, 1], vec![0, 1, 2]] {
            let (chi, measure) = space.indicator(&cells).unwrap();
            let closed = char_norms(&m, measure).unwrap();
            let l = luxemburg_norm(&m, &space, &chi).unwrap();
            let a = orlicz_norm(&m, &space, &chi).unwrap();
            worst = worst.max((l - closed.luxemburg).abs() / closed.luxemburg);
            worst = worst.max((a - closed.orlicz).abs() / closed.orlicz);
        }
    }
    ensure(worst <= CHAR_TOL, format!("15 sets, worst relative error {worst:.2e}"))
}

fn conjugation() -> Outcome {
    let numeric = NFunction::new_unchecked(NFunctionSpec::Conjugate(Box::new(NFunctionSpec::ExpMinusLinear)));
    let mut closed_err: f64 = 0.0;
    for v in log_grid(0.01, 10.0, 400) {
        let expected = (1.0 + v) * v.ln_1p() - v;
        closed_err = closed_err.max((numeric.value(v) - expected).abs() / expected.max(1.0));
    }
    let mut involution: f64 = 0.0;
    for m in catalog() {
        let double = NFunction::new_unchecked(NFunctionSpec::Conjugate(Box::new(NFunctionSpec::Conjugate(
            Box::new(m.spec().clone()),
        ))));
        for u in log_grid(0.01, 5.0, 60) {
            let want = m.value(u);
            involution = involution.max((double.value(u) - want).abs() / want);
        }
    }
    let mut rng = seeded(SEED + 4);
    let mut young = f64::INFINITY;
    let ms = catalog();
    let conj: Vec<NFunction> = ms.iter().map(NFunction::conjugate).collect();
    for k in 0..10_000 {
        let i = k % ms.len();
        let u = log_uniform(&mut rng, 1e-3, 1e2);
        let v = log_uniform(&mut rng, 1e-3, 1e2);
        let slack = ms[i].value(u) + conj[i].value(v) - u * v;
        if !slack.is_nan() {
            young = young.min(slack);
        }
    }
    ensure(
        closed_err <= CONJUGATE_TOL && involution <= INVOLUTION_TOL && young >= -YOUNG_SLACK,
        format!("closed form {closed_err:.2e}, involution {involution:.2e}, min Young slack {young:.2e}"),
    )
}

fn count_violations(
    m: &NFunction,
    lo: f64,
    hi: f64,
    samples: usize,
    seed: u64,
    bound: impl Fn(&MeasureSpace, &GridFunction) -> orlicz_lab::Result<orlicz_lab::estimates::BoundReport>,
) -> (usize, usize) {
    let space = MeasureSpace::uniform(16, 1.0).unwrap();
    let mut rng = seeded(seed);
    let (mut applicable, mut violations) = (0, 0);
    for _ in 0..samples {
        let target = log_uniform(&mut rng, lo, hi);
        let x = sample_with_norm(m, &space, &mut rng, target);
        let report = bound(&space, &x).unwrap();
        if report.applicable {
            applicable += 1;
        }
        if !report.pass || report.witness.as_ref().is_some_and(|w| !w.holds) {
            violations += 1;
        }
    }
    (applicable, violations)
}

fn large_norm_power() -> Outcome {
    let phi = PhiMinorant::power(2.0, PhiDomain::Large);
    let mut details = Vec::new();
    let mut ok = true;
    for (i, m) in [NFunction::exp_minus_linear(), NFunction::exp_square()].iter().enumerate() {
        let (applicable, bad) =
            count_violations(m, 1.0, 20.0, 1000, SEED + 10 + i as u64, |s, x| theorem1_bound(m, s, x, &phi));
        ok &= bad == 0 && applicable == 1000;
        details.push(format!("{}: {bad}/{applicable}", m.spec().label()));
    }
    ensure(ok, details.join(", "))
}

fn truncated_large_norm() -> Outcome {
    let m = NFunction::exp_minus_linear();
    let phi = PhiMinorant::exp_minus_linear_ratio();
    let (applicable, bad) = count_violations(&m, 2.0, 20.0, 1000, SEED + 20, |s, x| {
        theorem2_bound(&m, s, x, &phi, 2.0, Theorem2Options::default())
    });
    let grid = verify_minorant(&m, &phi, &default_lambda_grid(PhiDomain::Large), &default_u_grid()).unwrap();
    let monotone = grid.monotone_in_u == Some(true);
    ensure(
        bad == 0 && applicable == 1000 && grid.pass && monotone,
        format!("{bad}/{applicable} violations, minorant grid violations {}, monotone in u {monotone}", grid.violations),
    )
}

fn small_norm_and_sandwiches() -> Outcome {
    let lambdas = log_grid(1e-3, 0.999, SANDWICH_POINTS);
    let us = log_grid(1e-6, 1e6, SANDWICH_POINTS);
    let mut reports = vec![sandwich_check(Sandwich::M1, 2.0, &lambdas, &us).unwrap()];
    for p in [1.5, 2.0, 3.0] {
        reports.push(sandwich_check(Sandwich::M2, p, &lambdas, &us).unwrap());
        reports.push(sandwich_check(Sandwich::M3, p, &lambdas, &us).unwrap());
    }
    let sandwich_fail = reports.iter().filter(|r| !r.pass).count();

    let entropy = NFunction::entropy_like();
    let square = PhiMinorant::power(2.0, PhiDomain::Small);
    let (a1, b1) = count_violations(&entropy, 1e-3, 1.0, 1000, SEED + 30, |s, x| theorem3_bound(&entropy, s, x, &square));
    let power_log = NFunction::power_log(2.0).unwrap();
    let cube = PhiMinorant::power(3.0, PhiDomain::Small);
    let (a2, b2) =
        count_violations(&power_log, 1e-3, 1.0, 1000, SEED + 31, |s, x| theorem3_bound(&power_log, s, x, &cube));
    let space = MeasureSpace::uniform(16, 1.0).unwrap();
    let h = 0.5 / luxemburg_norm(&entropy, &space, &space.ones()).unwrap();
    let (a3, b3) =
        count_violations(&entropy, 1e-3, 1.0, 1000, SEED + 32, |s, x| theorem4_bound(&entropy, s, x, &square, h));
    ensure(
        sandwich_fail == 0 && b1 + b2 + b3 == 0 && a1 + a2 + a3 == 3000,
        format!("{} sandwich grids failed, small-norm violations {b1}+{b2}+{b3} over {} samples", sandwich_fail, a1 + a2 + a3),
    )
}

fn probes() -> Outcome {
    let expected = [
        (NFunctionSpec::Power { p: 2.0 }, true),
        (NFunctionSpec::EntropyLike, true),
        (NFunctionSpec::PowerLog { p: 2.0 }, true),
        (NFunctionSpec::ExpMinusLinear, false),
        (NFunctionSpec::ExpSquare, false),
    ];
    let mut wrong = Vec::new();
    for (spec, want) in expected {
        let m = NFunction::new(spec).unwrap();
        if delta2_probe(&m, 1e4).unwrap().verdict != want {
            wrong.push(format!("delta2 {}", m.spec().label()));
        }
    }
    if growth_condition4_probe(&NFunction::entropy_like(), 2.0, 1e6).unwrap().verdict {
        wrong.push("condition4 entropy_like".into());
    }
    if !growth_condition4_probe(&NFunction::power(2.0).unwrap(), 2.0, 1e6).unwrap().verdict {
        wrong.push("condition4 power".into());
    }
    ensure(wrong.is_empty(), if wrong.is_empty() { "all 7 verdicts as expected".into() } else { wrong.join(", ") })
}

fn degeneracy() -> Outcome {
    let eml = small_norm_degeneracy_probe(&NFunction::exp_minus_linear(), 0.5, 20).unwrap();
    let sq = small_norm_degeneracy_probe(&NFunction::power(2.0).unwrap(), 0.5, 20).unwrap();
    let floor = sq.modulars.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        eml.pass && floor >= DEGENERACY_FLOOR,
        format!(
            "exp_minus_linear below 1e-3 at step {:?} (last {:.3e}), power p=2 floor {floor:.6}",
            eml.reached_below,
            eml.modulars.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

fn hammerstein() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let cubic = HammersteinProblem::new(
        MeasureSpace::new(vec![1.0]).unwrap(),
        NFunction::power(2.0).unwrap(),
        diag(&[0.5]),
        diag(&[2.0]),
        NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, 0.0, 0.0, -1.0] }, 0.0)
            .with_coercivity(1.0, 1.0, vec![0.25]),
        GridFunction::new(vec![1.5]).unwrap(),
        2.0,
    )
    .unwrap();
    let options = SolveOptions {
        tol: SOLVE_RESIDUAL,
        max_iter: SOLVE_MAX_ITER,
        seed: SEED,
        rothe_phi: Some(PhiMinorant::power(2.0, PhiDomain::Large)),
        ..Default::default()
    };
    let res = solve(&cubic, &options).unwrap();
    let cubic_ok = res.converged && (res.x[0] - 1.0).abs() <= 1e-8 && res.iterations <= SOLVE_MAX_ITER;
    ok &= cubic_ok;
    notes.push(format!("cubic x={:.10} in {} it", res.x[0], res.iterations));

    // f = 0 on a nonuniform space with a dense S
    let space = random_space(12, SEED + 40);
    let mut rng = seeded(SEED + 41);
    let s = DMatrix::from_fn(12, 12, |i, j| if i == j { 1.0 } else { 0.0 }) + DMatrix::from_vec(12, 12, gaussian_vec(&mut rng, 144)) * 0.05;
    let t = s.clone().try_inverse().unwrap();
    let sigma = sigma_estimate(&t, &space, 0, 0).unwrap().sigma;
    let g = GridFunction::new(gaussian_vec(&mut rng, 12)).unwrap();
    let zero = HammersteinProblem::new(
        space.clone(),
        NFunction::exp_minus_linear(),
        s.clone(),
        t.clone(),
        NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![] }, 0.0),
        g.clone(),
        sigma,
    )
    .unwrap();
    let res = solve(&zero, &SolveOptions { seed: SEED, ..Default::default() }).unwrap();
    let dev = res.x.iter().zip(g.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ok &= dev <= LINEAR_SOLVE_TOL;
    notes.push(format!("f=0 dev {dev:.1e}"));

    // sigma - delta > 0 with a monotone cubic-plus-linear term
    ok &= sigma > 0.0;
    let delta = 0.5 * sigma;
    let unique = HammersteinProblem::new(
        space.clone(),
        NFunction::power(2.0).unwrap(),
        s,
        t,
        NonlinearitySpec::new(PointwiseRule::Polynomial { coeffs: vec![0.0, delta, 0.0, -1.0] }, delta)
            .with_coercivity(0.5, 1.0, vec![(delta + 0.5).powi(2) / 4.0; 12]),
        g,
        sigma,
    )
    .unwrap();
    let res = solve(&unique, &SolveOptions { seed: SEED, ..Default::default() }).unwrap();
    let cert = res.certificates.as_ref().unwrap();
    let spread = cert.multistart_spread.unwrap_or(f64::INFINITY);
    ok &= res.converged && cert.uniqueness && spread <= MULTISTART_TOL;
    notes.push(format!("10-start spread {spread:.1e}"));

    // every finite Rothe radius must verify; Minty whenever sigma >= delta
    let mut rothe_min = f64::INFINITY;
    let mut minty_min = f64::INFINITY;
    for (p, phi) in [
        (&cubic, PhiMinorant::power(2.0, PhiDomain::Large)),
        (&cubic, PhiMinorant::baseline()),
        (&unique, PhiMinorant::power(2.0, PhiDomain::Large)),
        (&unique, PhiMinorant::baseline()),
    ] {
        if let Some(r) = rothe_radius(p, &phi, 0.0).unwrap() {
            let rep = verify_rothe(p, r, 1000, SEED).unwrap();
            rothe_min = rothe_min.min(rep.min_inner);
        }
        if p.sigma >= p.f.delta {
            minty_min = minty_min.min(verify_minty(p, 1000, SEED).min_inner);
        }
    }
    ok &= rothe_min >= CERTIFICATE_FLOOR && minty_min >= CERTIFICATE_FLOOR && rothe_min.is_finite();
    notes.push(format!("Rothe min {rothe_min:.3e}, Minty min {minty_min:.3e}"));
    ensure(ok, notes.join("; "))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Runs every command (defaults and the bundled configs) into `dir`.
fn cli_suite(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let bin = env!("CARGO_BIN_EXE_orlicz-lab");
    let configs = configs_dir();
    let runs: Vec<(&str, Option<&str>, &str)> = vec![
        ("probe", None, "probe.csv"),
        ("conjugate-table", None, "conjugate.csv"),
        ("verify-theorems", None, "theorems.csv"),
        ("verify-theorems", None, "theorems.json"),
        ("verify-theorems", Some("theorems_bad_phi.json"), "theorems_bad.csv"),
        ("norm", Some("norm.json"), "norm.csv"),
        ("norm", Some("norm_lp.json"), "norm_lp.json"),
        ("norm", Some("norm_csv.json"), "norm_csv.csv"),
        ("solve", Some("solve_cubic.json"), "cubic.json"),
        ("solve", Some("solve_zero.json"), "zero.csv"),
        ("solve", Some("solve_adversarial.json"), "adversarial.json"),
    ];
    let mut outputs = Vec::new();
    for (cmd, config, out) in runs {
        let path = dir.join(out);
        let mut c = Command::new(bin);
        c.arg(cmd).arg("--seed").arg("7").arg("--out").arg(&path);
        if let Some(cfg) = config {
            c.arg("--config").arg(configs.join(cfg));
        }
        let status = c.status().expect("run cli");
        let bytes = fs::read(&path).unwrap_or_default();
        outputs.push((format!("{cmd} {out} exit {}", status.code().unwrap_or(-1)), bytes));
    }
    outputs
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = cli_suite(a.path());
    let second = cli_suite(b.path());
    let differing: Vec<&str> =
        first.iter().zip(&second).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let empty = first.iter().filter(|(_, bytes)| bytes.is_empty()).count();
    ensure(
        differing.is_empty() && empty == 0,
        format!("{} outputs, {} differ, {empty} empty", first.len(), differing.len()),
    )
}
