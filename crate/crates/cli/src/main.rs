mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use num::{BigInt, ToPrimitive};
use plim::chains;
use plim::density::{MeasureVerdict, PiecewiseConstDensity};
use plim::format::{parse_density, parse_plmap, parse_porbit, write_plmap, write_porbit, PorbitFile};
use plim::interval::RatInterval;
use plim::perturb::{self, blowup::BlowupPlan, blowup::CoreKind, cantor, WindowSpec};
use plim::rat::{self, format_rat, parse_rat, rat_int, Rat};
use plim::shadowing::{self, PseudoOrbit, TraceOutcome};
use plim::structure::{self, Verdict};
use plim::{Error as PlimError, PLMap};

#[derive(Parser, Debug)]
#[command(
    name = "plim",
    about = "Exact rational analysis and construction of piecewise-linear interval maps."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Emit a full cpreport-1 certificate record for a map.
    Analyze {
        map: PathBuf,
        /// Search fixed/periodic sets and dense periodicity up to this period.
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Comma-separated exact scales for chain certification and linking.
        #[arg(long, default_value = "1/4,1/10")]
        scales: String,
        /// Cell width for the dense-periodicity grid and chain mesh ceiling.
        #[arg(long, default_value = "1/32")]
        resolution: String,
        /// Iterate depth for entropy bounds and linking search.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Also write the report here (stdout always gets a copy).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structure-preserving perturbations; each writes a map file and
    /// prints its certificate.
    Perturb {
        #[command(subcommand)]
        op: PerturbOp,
    },
    /// Approximate a chain-recurrent map by an expanding map with dense
    /// periodic points, within 2ε.
    ApproximateCp {
        map: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace a pseudo-orbit file through exact interval tubes.
    Trace {
        map: PathBuf,
        porbit: PathBuf,
        #[arg(long)]
        eps: String,
        /// Tube radius; defaults to eps/2. Setting gamma = eps turns an
        /// empty tube into a refutation of strict eps-tracing.
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Tab-separated decimal graph samples (display only; the library
    /// never computes in floating point).
    Plot {
        map: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 6)]
        digits: u32,
    },
    /// Replay every witness embedded in a report against a map.
    Verify { report: PathBuf, map: PathBuf },
}

#[derive(Subcommand, Debug)]
enum PerturbOp {
    /// Replace f on a window J by m alternating rescaled copies of f|J.
    Window {
        map: PathBuf,
        /// Window endpoints, exact: --J lo hi
        #[arg(long = "J", num_args = 2, value_names = ["LO", "HI"])]
        j: Vec<String>,
        /// Number of copies (odd).
        #[arg(long)]
        m: usize,
        /// Equal-width fold cells (the only partition the CLI builds).
        #[arg(long)]
        regular: bool,
        /// Fold respecting this invariant density instead of Lebesgue.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Splice an n-branch horseshoe at a transverse fixed point.
    Horseshoe {
        map: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        width: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Blow up a finite invariant set into wandering intervals
    /// (Denjoy-style), optionally emitting a mixing approximant.
    Blowup {
        map: PathBuf,
        /// Seed point: a fixed point (preimage tree) or any point whose
        /// forward orbit is finite (--orbit).
        #[arg(long)]
        seed: String,
        /// Preimage-tree depth (ignored with --orbit).
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value = "1/8")]
        eta: String,
        /// Blow up the forward orbit of the seed instead of its preimages.
        #[arg(long)]
        orbit: bool,
        /// Contracting cores on fixed blocks instead of affine cycling.
        #[arg(long)]
        contracting: bool,
        /// Remove the wandering blocks again by an n-fold expanding core;
        /// writes the approximant instead of the blowup.
        #[arg(long)]
        approximant: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the collapse semiconjugacy as a map file.
        #[arg(long)]
        collapse: Option<PathBuf>,
    },
    /// Seed Cantor bundles of periodic points around representative orbits.
    Cantor {
        map: PathBuf,
        #[arg(long)]
        period: usize,
        /// Comma-separated representatives, one per orbit.
        #[arg(long)]
        reps: String,
        /// Folds per window (the map gets 2n+1 branches there).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        half_width: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Make 0 and 1 fixed by 2-fold boundary windows.
    FixBoundary {
        map: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fold near 0 so the map stays leo but loses linking (and with it
    /// shadowing) at fine scales.
    BreakShadowing {
        map: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write a pseudo-orbit no point can trace at fine scales.
        #[arg(long)]
        porbit_out: Option<PathBuf>,
    },
    /// Straight-line measure-preserving homotopy toward the identity.
    Homotopy {
        map: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

/// 2 for malformed input files, 3 for the piece-cap safety valve, 1 for
/// everything else.
fn exit_code_for(e: &anyhow::Error) -> ExitCode {
    match e.downcast_ref::<PlimError>() {
        Some(PlimError::Parse(_)) => ExitCode::from(2),
        Some(PlimError::PieceCapExceeded { .. }) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Analyze {
            map,
            k,
            scales,
            resolution,
            depth,
            out,
        } => cmd_analyze(&map, k, &scales, &resolution, depth, out.as_deref()),
        Cmd::Perturb { op } => cmd_perturb(op),
        Cmd::ApproximateCp { map, eps, out } => cmd_approximate_cp(&map, &eps, &out),
        Cmd::Trace {
            map,
            porbit,
            eps,
            gamma,
        } => cmd_trace(&map, &porbit, &eps, gamma.as_deref()),
        Cmd::Plot {
            map,
            samples,
            digits,
        } => cmd_plot(&map, samples, digits),
        Cmd::Verify { report, map } => cmd_verify(&report, &map),
    }
}

fn load_map(path: &Path) -> Result<PLMap> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read map file {}", path.display()))?;
    Ok(parse_plmap(&text)?)
}

fn write_map(path: &Path, map: &PLMap) -> Result<()> {
    fs::write(path, write_plmap(map))
        .with_context(|| format!("cannot write map file {}", path.display()))
}

fn arg_rat(s: &str) -> Result<Rat> {
    Ok(parse_rat(s)?)
}

fn arg_rats(s: &str) -> Result<Vec<Rat>> {
    s.split(',').map(|t| arg_rat(t.trim())).collect()
}

fn cmd_analyze(
    map: &Path,
    k: usize,
    scales: &str,
    resolution: &str,
    depth: usize,
    out: Option<&Path>,
) -> Result<()> {
    let f = load_map(map)?;
    let scales = arg_rats(scales)?;
    let resolution = arg_rat(resolution)?;
    let r = report::build(&f, k, &scales, &resolution, depth)?;
    let text = report::render(&r);
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, &text)
            .with_context(|| format!("cannot write report {}", path.display()))?;
    }
    Ok(())
}

fn cmd_perturb(op: PerturbOp) -> Result<()> {
    match op {
        PerturbOp::Window {
            map,
            j,
            m,
            regular: _,
            measure,
            out,
        } => {
            let f = load_map(&map)?;
            let window = RatInterval::new(arg_rat(&j[0])?, arg_rat(&j[1])?);
            let spec = WindowSpec::regular(window.clone(), m)?;
            let g = match &measure {
                None => perturb::window_perturb_lambda(&f, &spec)?,
                Some(mp) => {
                    let text = fs::read_to_string(mp)
                        .with_context(|| format!("cannot read density {}", mp.display()))?;
                    perturb::window_perturb_cp(&f, &parse_density(&text)?, &spec)?
                }
            };
            write_map(&out, &g)?;
            let rho = f.sup_distance(&g);
            let diam = f.image_interval(&window).len();
            assert!(rho <= diam, "fold exceeded the image diameter bound");
            println!("window [{},{}] folds {}", format_rat(&window.lo), format_rat(&window.hi), m);
            println!("rho {} bound {}", format_rat(&rho), format_rat(&diam));
            let mu = PiecewiseConstDensity::lebesgue();
            if measure.is_none() && matches!(mu.check_invariance(&f), MeasureVerdict::Preserved) {
                let kept = matches!(mu.check_invariance(&g), MeasureVerdict::Preserved);
                assert!(kept, "fold lost Lebesgue invariance");
                println!("lebesgue preserved");
            }
            Ok(())
        }
        PerturbOp::Horseshoe {
            map,
            p,
            n,
            width,
            out,
        } => {
            let f = load_map(&map)?;
            let (g, cert) = perturb::insert_horseshoe(&f, &arg_rat(&p)?, n, &arg_rat(&width)?)?;
            write_map(&out, &g)?;
            println!(
                "horseshoe [{},{}] branches {}",
                format_rat(&cert.window.lo),
                format_rat(&cert.window.hi),
                cert.full_branches
            );
            println!("entropy-lower log({})/{}", cert.bound.base, cert.bound.root);
            println!("rho {}", format_rat(&f.sup_distance(&g)));
            Ok(())
        }
        PerturbOp::Blowup {
            map,
            seed,
            depth,
            eta,
            orbit,
            contracting,
            approximant,
            out,
            collapse,
        } => {
            let f = load_map(&map)?;
            let seed = arg_rat(&seed)?;
            let eta = arg_rat(&eta)?;
            let core = if contracting {
                CoreKind::Contracting
            } else {
                CoreKind::AffineCycle
            };
            let plan = if orbit {
                BlowupPlan::forward_orbit(f.clone(), seed, eta, core)?
            } else {
                BlowupPlan::preimage_tree(f.clone(), seed, depth, eta, core)?
            };
            let b = perturb::blowup::blowup(&plan)?;
            println!("blowup points {} gamma {}", b.intervals.len(), format_rat(&b.gamma));
            println!("rho {}", format_rat(&b.rho));
            println!("note {}", b.note);
            if let Some(cp) = &collapse {
                write_map(cp, &b.collapse)?;
            }
            match approximant {
                None => write_map(&out, &b.map)?,
                Some(n) => {
                    let g = perturb::blowup::mixing_approximant(&b, n)?;
                    write_map(&out, &g)?;
                    println!("approximant n {} rho {}", n, format_rat(&b.map.sup_distance(&g)));
                    let verdict = match structure::certify_leo(&g) {
                        Verdict::Certified(_) => "certified",
                        Verdict::Disproved(_) => "disproved",
                        Verdict::Unknown(_) => "unknown",
                    };
                    println!("approximant leo {verdict}");
                }
            }
            Ok(())
        }
        PerturbOp::Cantor {
            map,
            period,
            reps,
            n,
            half_width,
            out,
        } => {
            let f = load_map(&map)?;
            let plan = cantor::CantorPlan {
                period,
                representatives: arg_rats(&reps)?,
                folds: n,
                half_width: half_width.as_deref().map(arg_rat).transpose()?,
            };
            let outcome = cantor::cantor_plan_perturb(&f, &plan)?;
            write_map(&out, &outcome.map)?;
            println!("half-width {}", format_rat(&outcome.half_width));
            for r in &outcome.reports {
                println!(
                    "rep {} period {} expected {} found {} branch-width {}",
                    format_rat(&r.representative),
                    r.minimal_period,
                    r.expected,
                    r.found,
                    format_rat(&r.branch_width)
                );
            }
            Ok(())
        }
        PerturbOp::FixBoundary { map, eps, out } => {
            let f = load_map(&map)?;
            let g = perturb::fix_boundary(&f, &arg_rat(&eps)?)?;
            write_map(&out, &g)?;
            println!(
                "endpoints g(0) {} g(1) {}",
                format_rat(&g.eval(&rat::zero())),
                format_rat(&g.eval(&rat::one()))
            );
            println!("rho {}", format_rat(&f.sup_distance(&g)));
            Ok(())
        }
        PerturbOp::BreakShadowing {
            map,
            eps,
            out,
            porbit_out,
        } => {
            let f = load_map(&map)?;
            let eps = arg_rat(&eps)?;
            let b = shadowing::break_shadowing(&f, &eps)?;
            write_map(&out, &b.map)?;
            println!(
                "window [{},{}] rho {}",
                format_rat(&b.window.lo),
                format_rat(&b.window.hi),
                format_rat(&b.rho)
            );
            println!("transient{}", joined(&b.transient));
            println!("cycle{}", joined(&b.cycle));
            println!("leo re-certified");
            for g in &b.linking.gaps {
                println!(
                    "linking-gap from {} scale {} searched-to {}",
                    format_rat(&g.from),
                    format_rat(&g.scale),
                    g.searched_to
                );
            }
            println!("note {}", b.linking.note);
            if let Some(pp) = &porbit_out {
                let delta = &eps / rat_int(8);
                let wit = shadowing::witness_pseudo_orbit(&b, &delta, 12)?;
                let file = PorbitFile {
                    delta,
                    period: None,
                    points: wit.points().to_vec(),
                };
                fs::write(pp, write_porbit(&file))
                    .with_context(|| format!("cannot write pseudo-orbit {}", pp.display()))?;
            }
            Ok(())
        }
        PerturbOp::Homotopy { map, alpha, out } => {
            let f = load_map(&map)?;
            let g = structure::homotopy_to_identity(&f, &arg_rat(&alpha)?)?;
            write_map(&out, &g)?;
            let mu = PiecewiseConstDensity::lebesgue();
            if matches!(mu.check_invariance(&g), MeasureVerdict::Preserved) {
                println!("lebesgue preserved");
            }
            Ok(())
        }
    }
}

fn joined(xs: &[Rat]) -> String {
    xs.iter().map(|x| format!(" {}", format_rat(x))).collect()
}

fn cmd_approximate_cp(map: &Path, eps: &str, out: &Path) -> Result<()> {
    let f = load_map(map)?;
    let eps = arg_rat(eps)?;
    let approx = chains::approximate_by_cp(&f, &eps)?;
    write_map(out, &approx.map)?;
    let budget = rat_int(2) * &eps;
    assert!(approx.rho < budget, "approximation exceeded its 2-eps budget");
    println!("rho {} budget {}", format_rat(&approx.rho), format_rat(&budget));
    println!("dots-rho {}", format_rat(&approx.rho_dots));
    println!("chain-points {}", approx.family.points.len());
    let verdict = match &approx.leo {
        Verdict::Certified(_) => "certified",
        Verdict::Disproved(_) => "disproved",
        Verdict::Unknown(_) => "unknown",
    };
    println!("leo {verdict}");
    Ok(())
}

fn cmd_trace(map: &Path, porbit: &Path, eps: &str, gamma: Option<&str>) -> Result<()> {
    let f = load_map(map)?;
    let text = fs::read_to_string(porbit)
        .with_context(|| format!("cannot read pseudo-orbit {}", porbit.display()))?;
    let file = parse_porbit(&text)?;
    let po = PseudoOrbit::new(&f, file.points, file.delta, file.period)?;
    let eps = arg_rat(eps)?;
    let gamma = match gamma {
        Some(g) => arg_rat(g)?,
        None => &eps / rat_int(2),
    };
    match shadowing::trace(&f, &po, &eps, &gamma)? {
        TraceOutcome::Traced(r) => {
            println!(
                "traced z {} eps {} gamma {} horizon {} periodic {}",
                format_rat(&r.z),
                format_rat(&r.eps),
                format_rat(&r.gamma),
                r.horizon,
                r.periodic
            );
        }
        TraceOutcome::NotFound { step } => {
            println!(
                "not-traced pinch-step {} gamma {} (no point of [0,1] stays within gamma)",
                step,
                format_rat(&gamma)
            );
        }
    }
    Ok(())
}

fn cmd_plot(map: &Path, samples: usize, digits: u32) -> Result<()> {
    let f = load_map(map)?;
    if samples < 2 {
        bail!("plot needs at least 2 samples");
    }
    println!("# x\tf(x)  decimals rounded to {digits} places, display only");
    println!("# the library computes exactly in rationals; breakpoints always included");
    let mut xs: Vec<Rat> = Vec::with_capacity(samples + f.breakpoints().len());
    let den = rat_int(samples as i64 - 1);
    for i in 0..samples {
        xs.push(rat_int(i as i64) / &den);
    }
    xs.extend(f.breakpoints().iter().map(|(x, _)| x.clone()));
    xs.sort();
    xs.dedup();
    for x in &xs {
        println!("{}\t{}", decimal(x, digits), decimal(&f.eval(x), digits));
    }
    Ok(())
}

/// Round-to-nearest decimal rendering of a nonnegative rational.
fn decimal(x: &Rat, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = (x * Rat::from(scale.clone()) + rat::rat(1, 2)).floor();
    let n = scaled.to_integer();
    let int = &n / &scale;
    let frac = &n % &scale;
    if digits == 0 || frac == BigInt::from(0) {
        return int.to_string();
    }
    let mut frac_s = format!("{:0width$}", frac, width = digits as usize);
    while frac_s.ends_with('0') {
        frac_s.pop();
    }
    format!("{int}.{frac_s}")
}

fn cmd_verify(report_path: &Path, map: &Path) -> Result<()> {
    let f = load_map(map)?;
    let text = fs::read_to_string(report_path)
        .with_context(|| format!("cannot read report {}", report_path.display()))?;
    let parsed = report::parse(&text)?;
    let checks = report::verify(&parsed, &f);
    let mut failed = 0usize;
    for c in &checks {
        if c.ok {
            println!("ok {}: {}", c.what, c.detail);
        } else {
            failed += 1;
            println!("FAIL {}: {}", c.what, c.detail);
        }
    }
    println!("verified {} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        return Err(anyhow!("{failed} report checks failed"));
    }
    Ok(())
}

// keep ToPrimitive linked in even though only tests use it directly
#[allow(dead_code)]
fn rat_to_f64(x: &Rat) -> Option<f64> {
    x.to_f64()
}
