//! Command line front end: verifier suites, instance construction, the
//! stability pipeline, and exact rank/segment/bound calculators.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num::BigUint;
use serde_json::json;

use harperlab_cli::{
    check_grid_keys, concat_csv, coords_text, grid_bound, parse_coords, parse_grid, CsvReport,
    CsvTable, VerificationRun,
};
use harperlab_core::counting::rational_from_uint;
use harperlab_core::cube::Vertex;
use harperlab_core::exec::{set_global_threads, ExecMode};
use harperlab_core::io::{
    instance_string, parse_instance, parse_mask, rational_string, vertex_set_string,
};
use harperlab_core::order::{
    colex_initial_segment, colex_rank, colex_reversed_initial_segment, colex_reversed_rank,
    colex_reversed_unrank, colex_unrank, lex_initial_segment, lex_rank, lex_unrank,
    simplicial_initial_segment, simplicial_rank, simplicial_unrank,
};
use harperlab_core::shadow::{
    colex_segment_shadow_size, harper_gamma_lower, harper_min_closed, kk_refined_bound,
    lex_segment_upper_shadow_size, lym_shadow_bound, lym_upper_bound,
};
use harperlab_core::stability::{stability_report, CenterMode, SearchClass};
use harperlab_core::sweeps;

const SCALE_GUARDS: &str = "Scale guards (hard limits; exceeding one exits with code 2):
  verify harper --exhaustive   n <= 4
  verify harper --samples      n <= 12
  verify kk                    C(n,r) <= 20 per layer
  verify lym                   n <= 10
  verify corollary2            n <= 4
  verify lemma3                n <= 12
  verify duality               n <= 8 (families), n <= 10 (segments)
  stability --center exact     n <= 24
  everything else              n <= 64 (one machine word per vertex)";

#[derive(Parser)]
#[command(
    name = "harperlab",
    version,
    about = "Exact vertex-isoperimetry toolkit for the hypercube",
    after_help = SCALE_GUARDS
)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// PRNG seed for every sampled scope.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to HARPERLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report format; csv only for sweep reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Lex,
    Colex,
    ColexReversed,
    Simplicial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Singletons,
    Pairs,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum CenterArg {
    Exact,
    Heuristic,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verifier against exhaustive oracles or seeded samples.
    Verify {
        #[command(subcommand)]
        target: Verify,
    },
    /// Build a vertex-set or instance file.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Full stability pipeline on an instance file.
    Stability {
        /// Instance file: {"n", "vertices", "params"}.
        #[arg(long)]
        instance: PathBuf,
        /// Which deletion candidates the discard loop scans.
        #[arg(long, value_enum, default_value_t = ClassArg::Singletons)]
        class: ClassArg,
        /// Center search strategy.
        #[arg(long, value_enum, default_value_t = CenterArg::Exact)]
        center: CenterArg,
        /// Restart count for the heuristic center search.
        #[arg(long, default_value_t = 8)]
        seeds: u32,
    },
    /// Position of a coordinate set in an ordering.
    Rank {
        #[arg(long, value_enum)]
        order: OrderArg,
        #[arg(long)]
        n: u32,
        /// 1-based coordinates, e.g. 2,4,5.
        #[arg(long)]
        set: String,
    },
    /// The coordinate set at a given position of an ordering.
    Unrank {
        #[arg(long, value_enum)]
        order: OrderArg,
        #[arg(long)]
        n: u32,
        /// Layer (ignored for simplicial).
        #[arg(long)]
        r: Option<u32>,
        /// 0-based position, exact integer.
        #[arg(long)]
        m: String,
    },
    /// Initial segment of an ordering, emitted as a vertex-set file.
    Segment {
        #[arg(long, value_enum)]
        order: OrderArg,
        #[arg(long)]
        n: u32,
        /// Layer (ignored for simplicial).
        #[arg(long)]
        r: Option<u32>,
        /// Segment size, exact integer.
        #[arg(long)]
        m: String,
    },
    /// Evaluate one exact bound (rationals print as num/den).
    Bound {
        #[command(subcommand)]
        kind: Bound,
    },
}

#[derive(Subcommand)]
enum Verify {
    /// Minimum closed neighbourhood per size against the segment profile.
    Harper {
        #[arg(long)]
        n: u32,
        /// Scan all 2^(2^n) subsets (n <= 4).
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Seeded random subsets instead (n <= 12).
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Minimum shadow per family size against segment and cascade values.
    Kk {
        #[arg(long)]
        n: u32,
        /// One layer; all layers of [n] when omitted.
        #[arg(long)]
        r: Option<u32>,
    },
    /// Both local LYM bounds on seeded random families.
    Lym {
        #[arg(long)]
        n: u32,
        /// One layer; all of 1..n when omitted.
        #[arg(long)]
        r: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
    /// Banded shadow bound on every lex segment, with endpoint equality.
    Lemma3 {
        #[arg(long, default_value = "n<=12")]
        grid: String,
    },
    /// Cleaned growth-factor inequality over every integer cut.
    Lemma4 {
        #[arg(long, default_value = "n<=40,r<=5")]
        grid: String,
    },
    /// Band factors non-increasing and eventually constant.
    CorMonotone {
        #[arg(long, default_value = "n<=40,r<=10")]
        grid: String,
    },
    /// Neighbourhood lower bound over every subset up to C(n,k).
    Corollary2 {
        #[arg(long)]
        n: u32,
        /// One layer parameter; both 1..=n when omitted.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Upper shadow via complements: sampled families plus all segments.
    Duality {
        #[arg(long)]
        n: u32,
        /// One layer; all of 0..n when omitted.
        #[arg(long)]
        r: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
    /// End-to-end pipeline on the built-in sharpness grid.
    Stability,
}

#[derive(Subcommand)]
enum Construct {
    /// Extremal-plus-far-spheres instance around the origin.
    Sharpness {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        /// Number of far centers (the integer part of the construction).
        #[arg(long)]
        p: u32,
    },
    /// Simplicial initial segment of l vertices.
    Segment {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: String,
    },
    /// Exact-distance layer around a vertex.
    Layer {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        /// Center vertex mask (hex 0x… or decimal); origin when omitted.
        #[arg(long, default_value = "0")]
        around: String,
    },
}

#[derive(Subcommand)]
enum Bound {
    /// Banded lower bound on the upper shadow of m lex-first r-sets.
    KkRefined {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        /// Band index; must contain m.
        #[arg(long)]
        i: u32,
        #[arg(long)]
        m: String,
    },
    /// Plain shadow bound m C(n,r-1)/C(n,r).
    LymLower {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        m: String,
    },
    /// Plain upper-shadow bound m C(n,r+1)/C(n,r).
    LymUpper {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        m: String,
    },
    /// Neighbourhood bound m n/(k+1) - 2 C(n,k).
    HarperGamma {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: String,
    },
    /// Minimum shadow of m r-sets (colex cascade value).
    Cascade {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        m: String,
    },
    /// Minimum upper shadow of the m-element lex segment of [n]^(r).
    LexUpper {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        m: String,
    },
    /// Minimum closed neighbourhood over l-element vertex sets.
    HarperMinClosed {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn big(s: &str) -> Result<BigUint> {
    s.parse()
        .map_err(|_| anyhow!("`{s}` is not a nonnegative integer"))
}

fn layer_arg(r: Option<u32>, order: OrderArg) -> Result<u32> {
    match (r, order) {
        (_, OrderArg::Simplicial) => Ok(0),
        (Some(r), _) => Ok(r),
        (None, _) => bail!("--r is required for layer orderings"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let threads = cli.threads.or_else(|| {
        std::env::var("HARPERLAB_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        set_global_threads(t);
    }
    let exec = ExecMode::Auto;
    if cli.format == Format::Csv && !matches!(cli.cmd, Cmd::Verify { .. }) {
        bail!("CSV output is only defined for sweep reports");
    }

    match cli.cmd {
        Cmd::Verify { target } => {
            let (run, csv) = run_verify(target, cli.seed, exec)?;
            let text = match cli.format {
                Format::Json => run.to_json()?,
                Format::Csv => {
                    csv.ok_or_else(|| anyhow!("CSV output is only defined for sweep reports"))?
                        .render()
                }
            };
            emit(&text, &cli.out)?;
            Ok(run.pass)
        }
        Cmd::Construct { kind } => {
            let (text, stats) = run_construct(kind)?;
            emit(&text, &cli.out)?;
            eprintln!("{stats}");
            Ok(true)
        }
        Cmd::Stability {
            instance,
            class,
            center,
            seeds,
        } => {
            let text = std::fs::read_to_string(&instance)
                .with_context(|| format!("reading {}", instance.display()))?;
            let (a, params) = parse_instance(&text)?;
            let class = match class {
                ClassArg::Singletons => SearchClass::Singletons,
                ClassArg::Pairs => SearchClass::SingletonsAndPairs,
                ClassArg::Exhaustive => SearchClass::Exhaustive,
            };
            let mode = match center {
                CenterArg::Exact => CenterMode::Exact,
                CenterArg::Heuristic => CenterMode::Heuristic {
                    seeds,
                    seed: cli.seed,
                },
            };
            let report = stability_report(&a, &params, class, mode, exec)?;
            emit(&(serde_json::to_string_pretty(&report)? + "\n"), &cli.out)?;
            Ok(true)
        }
        Cmd::Rank { order, n, set } => {
            let v = Vertex::from_coords(n, &parse_coords(&set)?)?;
            let value = match order {
                OrderArg::Lex => lex_rank(n, v.bits())?,
                OrderArg::Colex => colex_rank(v.bits()),
                OrderArg::ColexReversed => colex_reversed_rank(n, v.bits())?,
                OrderArg::Simplicial => simplicial_rank(n, v.bits())?,
            };
            emit(&format!("{value}\n"), &cli.out)?;
            Ok(true)
        }
        Cmd::Unrank { order, n, r, m } => {
            let rank = big(&m)?;
            let mask = match order {
                OrderArg::Lex => lex_unrank(n, layer_arg(r, order)?, &rank)?,
                OrderArg::Colex => colex_unrank(n, layer_arg(r, order)?, &rank)?,
                OrderArg::ColexReversed => colex_reversed_unrank(n, layer_arg(r, order)?, &rank)?,
                OrderArg::Simplicial => simplicial_unrank(n, &rank)?,
            };
            emit(&format!("{}\n", coords_text(mask)), &cli.out)?;
            Ok(true)
        }
        Cmd::Segment { order, n, r, m } => {
            let size = big(&m)?;
            let set = match order {
                OrderArg::Lex => lex_initial_segment(n, layer_arg(r, order)?, &size)?.to_vertex_set(),
                OrderArg::Colex => {
                    colex_initial_segment(n, layer_arg(r, order)?, &size)?.to_vertex_set()
                }
                OrderArg::ColexReversed => {
                    colex_reversed_initial_segment(n, layer_arg(r, order)?, &size)?.to_vertex_set()
                }
                OrderArg::Simplicial => simplicial_initial_segment(n, &size)?,
            };
            emit(&vertex_set_string(&set), &cli.out)?;
            Ok(true)
        }
        Cmd::Bound { kind } => {
            let line = match kind {
                Bound::KkRefined { n, r, i, m } => {
                    rational_string(&kk_refined_bound(n, r, i, &big(&m)?)?)
                }
                Bound::LymLower { n, r, m } => rational_string(&lym_shadow_bound(n, r, &big(&m)?)?),
                Bound::LymUpper { n, r, m } => rational_string(&lym_upper_bound(n, r, &big(&m)?)?),
                Bound::HarperGamma { n, k, m } => {
                    rational_string(&harper_gamma_lower(n, k, &big(&m)?)?)
                }
                Bound::Cascade { r, m } => colex_segment_shadow_size(r, &big(&m)?)?.to_string(),
                Bound::LexUpper { n, r, m } => {
                    lex_segment_upper_shadow_size(n, r, &big(&m)?)?.to_string()
                }
                Bound::HarperMinClosed { n, l } => harper_min_closed(n, &big(&l)?)?.to_string(),
            };
            emit(&(line + "\n"), &cli.out)?;
            Ok(true)
        }
    }
}

fn run_verify(target: Verify, seed: u64, exec: ExecMode) -> Result<(VerificationRun, Option<CsvTable>)> {
    match target {
        Verify::Harper {
            n,
            exhaustive: _,
            samples: None,
        } => {
            let sweep = sweeps::harper_exhaustive(n, exec)?;
            let scope = json!({"mode": "exhaustive", "subsets": sweep.subsets});
            let pass = sweep.all_match;
            Ok((
                VerificationRun::new("harper", scope, true, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
        Verify::Harper {
            n,
            exhaustive: _,
            samples: Some(count),
        } => {
            let sweep = sweeps::harper_sampled(n, count, seed, exec)?;
            let scope = json!({"mode": "sampled", "count": count, "seed": seed});
            let pass = sweep.violations == 0;
            Ok((
                VerificationRun::new("harper", scope, false, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
        Verify::Kk { n, r } => {
            let layers: Vec<u32> = match r {
                Some(r) => vec![r],
                None => (1..=n).collect(),
            };
            let mut reports = Vec::new();
            for &r in &layers {
                reports.push(sweeps::layer_family_sweep(n, r, exec)?);
            }
            let families: u64 = reports.iter().map(|s| s.families).sum();
            let scope = json!({"mode": "exhaustive", "layers": layers, "families": families});
            let pass = reports.iter().all(|s| s.all_ok);
            let csv = concat_csv(reports.iter().map(|s| s.csv()))?;
            Ok((
                VerificationRun::new("kk", scope, true, pass, &reports)?,
                Some(csv),
            ))
        }
        Verify::Lym { n, r, samples } => {
            let layers: Vec<u32> = match r {
                Some(r) => vec![r],
                None => (1..n).collect(),
            };
            let mut reports = Vec::new();
            for &r in &layers {
                reports.push(sweeps::lym_sampled(n, r, samples, seed, exec)?);
            }
            let scope =
                json!({"mode": "sampled", "count_per_layer": samples, "seed": seed, "layers": layers});
            let pass = reports
                .iter()
                .all(|s| s.lower_violations == 0 && s.upper_violations == 0);
            let csv = concat_csv(reports.iter().map(|s| s.csv()))?;
            Ok((
                VerificationRun::new("lym", scope, false, pass, &reports)?,
                Some(csv),
            ))
        }
        Verify::Lemma3 { grid } => {
            let grid = parse_grid(&grid)?;
            check_grid_keys(&grid, &["n"])?;
            let n_max = u32::try_from(grid_bound(&grid, "n", 12))?;
            let sweep = sweeps::refined_band_sweep(n_max)?;
            let scope = json!({"mode": "exhaustive", "n_max": n_max});
            let pass = sweep.all_ok;
            Ok((
                VerificationRun::new("lemma3", scope, true, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
        Verify::Lemma4 { grid } => {
            let grid = parse_grid(&grid)?;
            check_grid_keys(&grid, &["n", "r"])?;
            let n_max = u32::try_from(grid_bound(&grid, "n", 40))?;
            let r_max = u32::try_from(grid_bound(&grid, "r", 5))?;
            let sweep = sweeps::cleaned_factor_sweep(n_max, r_max)?;
            let scope = json!({"mode": "exhaustive", "n_max": n_max, "r_max": r_max});
            let pass = sweep.all_ok;
            Ok((
                VerificationRun::new("lemma4", scope, true, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
        Verify::CorMonotone { grid } => {
            let grid = parse_grid(&grid)?;
            check_grid_keys(&grid, &["n", "r"])?;
            let n_max = u32::try_from(grid_bound(&grid, "n", 40))?;
            let r_max = u32::try_from(grid_bound(&grid, "r", 10))?;
            let sweep = sweeps::monotone_sweep(n_max, r_max)?;
            let scope = json!({"mode": "exhaustive", "n_max": n_max, "r_max": r_max});
            let pass = sweep.all_ok;
            Ok((
                VerificationRun::new("cor-monotone", scope, true, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
        Verify::Corollary2 { n, k } => {
            let ks: Vec<u32> = match k {
                Some(k) => vec![k],
                None => (1..=n).collect(),
            };
            let mut reports = Vec::new();
            for &k in &ks {
                reports.push(sweeps::corollary2_exhaustive(n, k, exec)?);
            }
            let checked: u64 = reports.iter().map(|s| s.checked).sum();
            let scope = json!({"mode": "exhaustive", "k": ks, "checked": checked});
            let pass = reports.iter().all(|s| s.violations == 0);
            let csv = concat_csv(reports.iter().map(|s| s.csv()))?;
            Ok((
                VerificationRun::new("corollary2", scope, true, pass, &reports)?,
                Some(csv),
            ))
        }
        Verify::Duality { n, r, samples } => {
            let layers: Vec<u32> = match r {
                Some(r) => vec![r],
                None => (0..n).collect(),
            };
            let mut family_runs = Vec::new();
            for &r in &layers {
                family_runs.push(sweeps::duality_sampled(n, r, samples, seed, exec)?);
            }
            let segments = sweeps::segment_duality_exhaustive(n)?;
            let scope = json!({
                "mode": "sampled_families_plus_exhaustive_segments",
                "count_per_layer": samples,
                "seed": seed,
                "layers": layers,
            });
            let pass =
                family_runs.iter().all(|s| s.violations == 0) && segments.all_ok;
            let report = json!({"families": family_runs, "segments": segments});
            let csv = concat_csv(
                family_runs
                    .iter()
                    .map(|s| s.csv())
                    .chain(std::iter::once(segments.csv())),
            )?;
            Ok((
                VerificationRun::new("duality", scope, false, pass, &report)?,
                Some(csv),
            ))
        }
        Verify::Stability => {
            let sweep = sweeps::stability_grid_sweep(exec)?;
            let scope = json!({"mode": "exhaustive", "grid": sweeps::STABILITY_GRID});
            let pass = sweep.all_ok;
            Ok((
                VerificationRun::new("stability", scope, true, pass, &sweep)?,
                Some(sweep.csv()),
            ))
        }
    }
}

fn run_construct(kind: Construct) -> Result<(String, String)> {
    match kind {
        Construct::Sharpness { n, k, p } => {
            let (a, params) = sweeps::sharpness_instance(n, k, p)?;
            let gamma = a.neighbourhood().cardinality();
            let margin = params.gamma_budget() - rational_from_uint(&gamma);
            let stats = format!(
                "|A| = {}, |Γ(A)| = {}, hypothesis margin = {}",
                a.cardinality(),
                gamma,
                rational_string(&margin)
            );
            Ok((instance_string(&a, &params), stats))
        }
        Construct::Segment { n, l } => {
            let set = simplicial_initial_segment(n, &big(&l)?)?;
            let closed = set.closed_neighbourhood();
            let stats = format!(
                "|S| = {}, |S ∪ Γ(S)| = {}",
                set.cardinality(),
                closed.cardinality()
            );
            Ok((vertex_set_string(&set), stats))
        }
        Construct::Layer { n, r, around } => {
            let center = Vertex::new(n, parse_mask(&around)?)?;
            let set = center.kth_neighbourhood(r)?;
            let stats = format!(
                "|S| = {}, |Γ(S)| = {}",
                set.cardinality(),
                set.neighbourhood().cardinality()
            );
            Ok((vertex_set_string(&set), stats))
        }
    }
}
