use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use macc::io::{
    check_consistent, deserialize_caches, deserialize_transcript, emit_sweep_csv, generate_store,
    render_report, serialize_caches, serialize_transcript,
};
use macc::{
    build_user_view, decode_user, deliver_with, place, rate_of, sweep, verify_all_demands_with,
    DemandVector, ExtraRule, SystemParams, Transcript,
};

#[derive(Parser)]
#[command(name = "macc", version, about = "Multi-access coded caching: placement, delivery and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SystemArgs {
    /// Number of files N
    #[arg(short = 'N', long = "files")]
    files: usize,
    /// Number of users and caches K
    #[arg(short = 'K', long = "users")]
    users: usize,
    /// Consecutive caches per user L
    #[arg(short = 'L', long = "span")]
    span: usize,
    #[arg(long, default_value_t = 64)]
    subfile_bits: usize,
    /// Seed for the generated file contents
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SystemArgs {
    fn params(&self) -> Result<SystemParams> {
        let p = SystemParams::new(self.files, self.users, self.span, self.subfile_bits)?;
        if p.exceeds_users() {
            eprintln!("warning: N > K; rate N-1 does not beat the cache-free rate min(N,K)");
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Smallest,
    Largest,
}

impl From<Rule> for ExtraRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Smallest => ExtraRule::Smallest,
            Rule::Largest => ExtraRule::Largest,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the files and write the cache image
    Place {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build the broadcast for a demand vector and write the transcript
    Deliver {
        #[command(flatten)]
        system: SystemArgs,
        /// Comma-separated demands d(1),…,d(K)
        #[arg(short, long)]
        demand: String,
        #[arg(long, value_enum, default_value = "smallest")]
        rule: Rule,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode from a cache image and a transcript and compare to the source files
    Decode {
        #[arg(long)]
        caches: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        /// User to decode; all users when omitted
        #[arg(short, long)]
        user: Option<usize>,
        /// Seed the source files were generated with
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check every demand vector (or a seeded sample) end to end
    Verify {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, value_enum, default_value = "smallest")]
        rule: Rule,
        /// Also write the report to this path
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Verify a grid of (N,K,L) triples and emit CSV
    Sweep {
        /// Triples separated by ';', e.g. "2,5,2;2,7,3"
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 64)]
        subfile_bits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print cache contents and transmissions symbolically
    Demo {
        #[command(flatten)]
        system: SystemArgs,
        /// Demand vectors to show, ';'-separated; defaults depend on the system
        #[arg(short, long)]
        demand: Option<String>,
    },
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad integer {v:?}")))
        .collect()
}

fn parse_demand(s: &str, p: &SystemParams) -> Result<DemandVector> {
    Ok(DemandVector::new(parse_list(s)?, p)?)
}

fn parse_grid(s: &str) -> Result<Vec<(usize, usize, usize)>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match parse_list(t)?[..] {
            [n, k, l] => Ok((n, k, l)),
            _ => bail!("grid entry {t:?} is not N,K,L"),
        })
        .collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn render_transcript(t: &Transcript) -> String {
    t.labels()
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Place { system, out } => {
            let p = system.params()?;
            let caches = place(&generate_store(&p, system.seed));
            write(&out, &serialize_caches(&caches)?)?;
            println!("wrote cache image for {p} (M = {}) to {}", p.memory(), out.display());
        }
        Command::Deliver {
            system,
            demand,
            rule,
            out,
        } => {
            let p = system.params()?;
            let d = parse_demand(&demand, &p)?;
            let t = deliver_with(&d, &generate_store(&p, system.seed), rule.into());
            write(&out, &serialize_transcript(&t)?)?;
            println!(
                "wrote {} entries (R = {}) to {}",
                t.entries().len(),
                rate_of(&t)?,
                out.display()
            );
        }
        Command::Decode {
            caches,
            transcript,
            user,
            seed,
        } => {
            if caches == transcript {
                bail!("cache image and transcript paths must differ");
            }
            let cache_bytes = read(&caches)?;
            let cache_array = deserialize_caches(&cache_bytes)
                .with_context(|| format!("parsing {}", caches.display()))?;
            let t_bytes = read(&transcript)?;
            let t = deserialize_transcript(&t_bytes)
                .with_context(|| format!("parsing {}", transcript.display()))?;
            check_consistent(&cache_array, &t)?;
            let p = *cache_array.params();
            let store = generate_store(&p, seed);
            let users = match user {
                Some(u) => vec![p.index(u)?],
                None => p.indices().collect(),
            };
            let mut ok = true;
            for u in users {
                let view = build_user_view(u, &cache_array, &t);
                let want = t.demand().of(u);
                match decode_user(&view) {
                    Ok(file) if file == store.file(want) => {
                        println!("user {u}: W_{want} recovered, bit-exact match")
                    }
                    Ok(_) => {
                        ok = false;
                        println!("user {u}: W_{want} decoded but differs from the source");
                    }
                    Err(e) => {
                        ok = false;
                        println!("user {u}: {e}");
                    }
                }
            }
            return Ok(ok);
        }
        Command::Verify {
            system,
            budget,
            rule,
            out,
        } => {
            let p = system.params()?;
            let report = verify_all_demands_with(&p, system.seed, budget, rule.into());
            let text = render_report(&report);
            print!("{text}");
            if let Some(out) = out {
                write(&out, text.as_bytes())?;
            }
            return Ok(report.passed());
        }
        Command::Sweep {
            grid,
            subfile_bits,
            seed,
            budget,
            out,
        } => {
            let rows = sweep(&parse_grid(&grid)?, subfile_bits, seed, budget);
            let csv = emit_sweep_csv(&rows);
            match out {
                Some(out) => write(&out, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            return Ok(rows
                .iter()
                .all(|r| r.status != macc::SweepStatus::Failed));
        }
        Command::Demo { system, demand } => {
            let p = system.params()?;
            let store = generate_store(&p, system.seed);
            let caches = place(&store);
            println!("{p}: M = (K-1)/(KL) = {}, R = N-1 = {}", p.memory(), p.rate());
            println!();
            println!("cache contents");
            for (k, row) in p.indices().zip(caches.symbolic_table()) {
                println!("  Z_{k}: {}", row.join(", "));
            }
            let demands: Vec<DemandVector> = match demand {
                Some(s) => s
                    .split(';')
                    .map(|d| parse_demand(d, &p))
                    .collect::<Result<_>>()?,
                None => default_demands(&p),
            };
            println!();
            println!("transmissions");
            let mut ok = true;
            for d in demands {
                let t = deliver_with(&d, &store, ExtraRule::Smallest);
                let decoded = p.indices().all(|u| {
                    decode_user(&build_user_view(u, &caches, &t))
                        .is_ok_and(|f| f == store.file(d.of(u)))
                });
                ok &= decoded;
                let ds = d
                    .entries()
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                println!(
                    "  d=({ds}): X_d = ({})  [{}]",
                    render_transcript(&t),
                    if decoded { "all users decode" } else { "DECODE FAILURE" }
                );
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn default_demands(p: &SystemParams) -> Vec<DemandVector> {
    let lists: Vec<Vec<usize>> = match (p.files(), p.users()) {
        (2, 5) => vec![
            vec![1, 2, 1, 2, 2],
            vec![1, 1, 2, 2, 2],
            vec![1, 2, 2, 2, 2],
        ],
        (3, 5) => vec![vec![1, 2, 3, 1, 2]],
        (n, k) => vec![vec![1; k], (0..k).map(|u| u % n + 1).collect()],
    };
    lists
        .into_iter()
        .map(|d| DemandVector::new(d, p).expect("defaults fit the system"))
        .collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
