//! Batch front door: build markers, return-time functions, embeddings and
//! periodic immersions from system descriptors; verify any emitted
//! artifact; print combinatorial lemma outputs. Every artifact is JSON with
//! rationals as `"p/q"` strings, written atomically together with a run
//! manifest.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use meandim::combinat::greedy_separated_set;
use meandim::covers::{mdim_report, perdim_report, Cover, MdimEntry, PerdimEntry};
use meandim::dynsys::{SymbolicSystem, SystemDescriptor};
use meandim::embed::{
    build_embedding_pipeline, build_periodic_immersion, check_epsilon_embedding,
    EmbeddingArtifact, FactorMap, PeriodicImmersion,
};
use meandim::error::Error;
use meandim::manifest::{write_atomic, RunManifest};
use meandim::rat::{parse_rat, rat_int, rat_to_string, Rat};
use meandim::towers::{
    build_marker, rokhlin_from_marker, verify_marker, MarkerCertificate, RokhlinFunction,
};
use meandim::Result;

#[derive(Parser)]
#[command(name = "meandim", version, about = "certified symbolic-dynamics constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Args)]
struct Common {
    /// output path for the JSON artifact (stdout if omitted); a run
    /// manifest is written beside it as <out>.manifest.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// override the system descriptor's oracle window
    #[arg(long)]
    window: Option<usize>,
    /// output format
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Build a depth-N marker certificate for a symbolic system
    Marker {
        /// system descriptor JSON
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        d: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build a marker and its return-time function
    Rokhlin {
        #[arg(long)]
        system: PathBuf,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        d: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full embedding pipeline
    Embed {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// target accuracy as "p/q"
        #[arg(long, default_value = "1/8")]
        epsilon: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Build an injective map on the periodic points of period <= m_max
    Periodic {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Mean-dimension and periodic-dimension reports
    Mdim {
        #[arg(long)]
        system: PathBuf,
        /// width of the cylinder-partition cover
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        /// refinement search budget
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Combinatorial lemma outputs
    Lemmas {
        #[command(subcommand)]
        which: LemmaCommand,
    },
    /// Re-verify any emitted artifact from its own data
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive ε-embedding sweep against a stored embedding artifact
    VerifyEmbedding {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value = "1/8")]
        epsilon: String,
        /// sweep width (cylinder word length)
        #[arg(long, default_value_t = 6)]
        width: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum LemmaCommand {
    /// Separated subset of Z_N: 0 ∈ A, (y⊕A)∩A = ∅, |A| ≥ ⌈N/3⌉
    Znset {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        y: u64,
        #[command(flatten)]
        common: Common,
    },
}

// ---------------------------------------------------------------------------
// Artifact schema: one tagged JSON object per command, self-verifying
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Artifact {
    Marker {
        system: SystemDescriptor,
        cert: MarkerCertificate,
    },
    Rokhlin {
        system: SystemDescriptor,
        cert: MarkerCertificate,
        rokhlin: RokhlinFunction,
    },
    Embedding {
        #[serde(flatten)]
        artifact: EmbeddingArtifact,
    },
    Periodic {
        system: SystemDescriptor,
        immersion: PeriodicImmersion,
    },
    Znset {
        n: u64,
        y: u64,
        #[serde(rename = "A")]
        a: Vec<u64>,
        size: usize,
    },
    Mdim {
        system: SystemDescriptor,
        cover_width: usize,
        budget: usize,
        mdim: Vec<MdimEntry>,
        perdim: Vec<PerdimEntry>,
    },
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's help/version output is a success, not a usage error
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli, &argv[1..]) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Io(_) | Error::Json(_) | Error::Malformed(_) => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}

/// Load a system descriptor, honoring `--window` and the
/// `MEANDIM_MAX_WINDOW` cap.
fn load_system(
    path: &Path,
    window: Option<usize>,
    manifest: &mut RunManifest,
) -> Result<(SystemDescriptor, SymbolicSystem)> {
    let bytes = manifest.record_input(path)?;
    let mut desc: SystemDescriptor = serde_json::from_slice(&bytes)?;
    if let Some(w) = window {
        desc.max_window = w;
    }
    if let Ok(cap) = std::env::var("MEANDIM_MAX_WINDOW") {
        let cap: usize = cap
            .parse()
            .map_err(|_| Error::Malformed("MEANDIM_MAX_WINDOW must be an integer".into()))?;
        desc.max_window = desc.max_window.min(cap);
    }
    let sys = desc.build()?;
    Ok((desc, sys))
}

fn emit(artifact: &Artifact, common: &Common, mut manifest: RunManifest, started: Instant) -> Result<()> {
    let body = match common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(artifact)?;
            s.push('\n');
            s
        }
        Format::Csv => to_csv(artifact)?,
    };
    match &common.out {
        None => {
            print!("{body}");
        }
        Some(out) => {
            write_atomic(out, body.as_bytes())?;
            manifest.record_output(out, body.as_bytes());
            manifest.finish(started);
            let mpath = manifest_path(out);
            let mut mjson = serde_json::to_string_pretty(&manifest)?;
            mjson.push('\n');
            write_atomic(&mpath, mjson.as_bytes())?;
        }
    }
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// CSV rendering for the tabular artifacts.
fn to_csv(artifact: &Artifact) -> Result<String> {
    match artifact {
        Artifact::Mdim { mdim, perdim, .. } => {
            let mut s = String::from("table,index,value,ratio,flag\n");
            for e in mdim {
                s.push_str(&format!(
                    "mdim,{},{},{},{}\n",
                    e.n,
                    e.d_value,
                    rat_to_string(&e.ratio),
                    e.flagged
                ));
            }
            for e in perdim {
                s.push_str(&format!(
                    "perdim,{},{},{},{}\n",
                    e.m,
                    e.dim_pm,
                    rat_to_string(&e.ratio),
                    e.empty
                ));
            }
            Ok(s)
        }
        Artifact::Znset { a, .. } => {
            let mut s = String::from("element\n");
            for x in a {
                s.push_str(&format!("{x}\n"));
            }
            Ok(s)
        }
        _ => Err(Error::Malformed("csv output is only available for tabular artifacts".into())),
    }
}

fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(argv.to_vec());
    match cli.command {
        Command::Marker { system, n, d, common } => {
            let (desc, sys) = load_system(&system, common.window, &mut manifest)?;
            let cert = build_marker(&sys, n, d)?;
            emit(&Artifact::Marker { system: desc, cert }, &common, manifest, started)
        }
        Command::Rokhlin { system, n, d, common } => {
            let (desc, sys) = load_system(&system, common.window, &mut manifest)?;
            let cert = build_marker(&sys, n, d)?;
            let rokhlin = rokhlin_from_marker(&cert, &sys)?;
            emit(&Artifact::Rokhlin { system: desc, cert, rokhlin }, &common, manifest, started)
        }
        Command::Embed { system, d, epsilon, seed, common } => {
            manifest.seed = Some(seed);
            let (_, sys) = load_system(&system, common.window, &mut manifest)?;
            let eps = parse_rat(&epsilon)?;
            let pipe = build_embedding_pipeline(&sys, d, &eps, seed)?;
            let artifact = EmbeddingArtifact::from_pipeline(&sys, d, &pipe);
            emit(&Artifact::Embedding { artifact }, &common, manifest, started)
        }
        Command::Periodic { system, m_max, d, seed, common } => {
            manifest.seed = Some(seed);
            let (desc, sys) = load_system(&system, common.window, &mut manifest)?;
            let immersion = build_periodic_immersion(&sys, m_max, d, seed)?;
            emit(&Artifact::Periodic { system: desc, immersion }, &common, manifest, started)
        }
        Command::Mdim { system, width, n_max, m_max, budget, common } => {
            let (desc, sys) = load_system(&system, common.window, &mut manifest)?;
            let cover = Cover::cylinder_partition(&sys, width, 0)?;
            let mdim = mdim_report(&sys, &cover, n_max, budget)?;
            let perdim = perdim_report(&sys, m_max)?;
            emit(
                &Artifact::Mdim { system: desc, cover_width: width, budget, mdim, perdim },
                &common,
                manifest,
                started,
            )
        }
        Command::Lemmas { which } => match which {
            LemmaCommand::Znset { n, y, common } => {
                let s = greedy_separated_set(n, y)?;
                let a: Vec<u64> = s.a.iter().copied().collect();
                let size = a.len();
                emit(&Artifact::Znset { n, y, a, size }, &common, manifest, started)
            }
        },
        Command::Verify { cert, common } => {
            let bytes = manifest.record_input(&cert)?;
            let artifact: Artifact = serde_json::from_slice(&bytes)?;
            verify_artifact(&artifact, common.window)?;
            println!("ok: artifact verified");
            Ok(())
        }
        Command::VerifyEmbedding { cert, epsilon, width, common } => {
            let bytes = manifest.record_input(&cert)?;
            let artifact: Artifact = serde_json::from_slice(&bytes)?;
            let Artifact::Embedding { artifact } = artifact else {
                return Err(Error::Malformed("expected an embedding artifact".into()));
            };
            let (sys, f) = rebuild_with_window(artifact, common.window)?;
            let eps = parse_rat(&epsilon)?;
            let report = check_epsilon_embedding(&f, &FactorMap::Identity, &eps, width, &sys)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            if let Some(out) = &common.out {
                write_atomic(out, json.as_bytes())?;
                manifest.record_output(out, json.as_bytes());
                manifest.finish(started);
                let mut mjson = serde_json::to_string_pretty(&manifest)?;
                mjson.push('\n');
                write_atomic(&manifest_path(out), mjson.as_bytes())?;
            } else {
                print!("{json}");
            }
            if !report.ok {
                return Err(Error::VerificationFailed(format!(
                    "separation fails on window pair {:?}",
                    report.witness
                )));
            }
            Ok(())
        }
    }
}

fn rebuild_with_window(
    mut artifact: EmbeddingArtifact,
    window: Option<usize>,
) -> Result<(SymbolicSystem, meandim::embed::EmbeddingFunction)> {
    if let Some(w) = window {
        artifact.system.max_window = w;
    }
    artifact.rebuild()
}

/// Re-check every fact an artifact asserts, using only the artifact's own
/// data.
fn verify_artifact(artifact: &Artifact, window: Option<usize>) -> Result<()> {
    match artifact {
        Artifact::Marker { system, cert } => {
            let sys = with_window(system, window).build()?;
            verify_marker(cert, &sys)
        }
        Artifact::Rokhlin { system, cert, rokhlin } => {
            let sys = with_window(system, window).build()?;
            verify_marker(cert, &sys)?;
            let rebuilt = rokhlin_from_marker(cert, &sys)?;
            if rebuilt.w != rokhlin.w || rebuilt.n_depth != rokhlin.n_depth {
                return Err(Error::VerificationFailed(
                    "stored return-time function disagrees with its marker".into(),
                ));
            }
            Ok(())
        }
        Artifact::Embedding { artifact } => {
            rebuild_with_window(artifact.clone(), window).map(|_| ())
        }
        Artifact::Periodic { system, immersion } => {
            let sys = with_window(system, window).build()?;
            let pset = sys.enumerate_periodic_points(immersion.m_max)?;
            if pset.points.len() != immersion.orbits.len() {
                return Err(Error::VerificationFailed(
                    "orbit list disagrees with the system's periodic points".into(),
                ));
            }
            for t in &immersion.orbits {
                if t.word.len() != t.period || t.values.len() != t.period * immersion.d {
                    return Err(Error::VerificationFailed(format!(
                        "orbit table for {:?} has inconsistent shape",
                        t.word
                    )));
                }
                if t.values.iter().any(|v| v < &Rat::from_integer(0.into()) || v > &rat_int(1)) {
                    return Err(Error::VerificationFailed(
                        "orbit values leave the unit cube".into(),
                    ));
                }
            }
            immersion.check_injective()
        }
        Artifact::Znset { n, y, a, size } => {
            use std::collections::BTreeSet;
            let aset: BTreeSet<u64> = a.iter().copied().collect();
            if aset.len() != *size || !aset.contains(&0) {
                return Err(Error::VerificationFailed("0 must belong to the set".into()));
            }
            if aset.iter().any(|x| x >= n) {
                return Err(Error::VerificationFailed("set leaves Z_N".into()));
            }
            if aset.iter().any(|x| aset.contains(&((x + y) % n))) {
                return Err(Error::VerificationFailed(
                    "translate by y meets the set".into(),
                ));
            }
            if (*size as u64) < n.div_ceil(3) {
                return Err(Error::VerificationFailed("set smaller than ⌈N/3⌉".into()));
            }
            Ok(())
        }
        Artifact::Mdim { system, cover_width, budget, mdim, perdim } => {
            let sys = with_window(system, window).build()?;
            let cover = Cover::cylinder_partition(&sys, *cover_width, 0)?;
            let re_m = mdim_report(&sys, &cover, mdim.len(), *budget)?;
            let re_p = perdim_report(&sys, perdim.len())?;
            if &re_m != mdim || &re_p != perdim {
                return Err(Error::VerificationFailed(
                    "report rows do not reproduce".into(),
                ));
            }
            Ok(())
        }
    }
}

fn with_window(desc: &SystemDescriptor, window: Option<usize>) -> SystemDescriptor {
    let mut d = desc.clone();
    if let Some(w) = window {
        d.max_window = w;
    }
    d
}
