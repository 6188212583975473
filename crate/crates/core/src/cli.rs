//! Command-line front end. Machine output goes to `out`, diagnostics to
//! `err`. Exit codes: 0 success, 1 a validation or verification failure,
//! 2 a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::curves::in_order_walk;
use crate::interleaving::{distance_value, monotone_interleaving_distance, CertificateError};
use crate::io::{
    curve_csv, curve_svg, parse_certificate, parse_tree, serialise_certificate, serialise_tree, Certificate,
    DocumentError,
};
use crate::oracle::{build_partition_reduction, OracleError, PartitionInstance};
use crate::ordering::OrderedMergeTree;

#[derive(Debug, Parser)]
#[command(
    name = "mitree",
    version,
    about = "Monotone interleaving distance between ordered merge trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a tree document and check every invariant.
    Validate { tree: PathBuf },
    /// Print the distance between two trees to nine decimals.
    Distance {
        #[arg(required_unless_present = "all_pairs", conflicts_with = "all_pairs")]
        a: Option<PathBuf>,
        #[arg(required_unless_present = "all_pairs", conflicts_with = "all_pairs")]
        b: Option<PathBuf>,
        /// Directory to receive interleaving.json, goodmap.json and labelling.json.
        #[arg(long, value_name = "DIR", conflicts_with = "all_pairs")]
        emit_certificate: Option<PathBuf>,
        /// Every pair of tree files in a directory, one tab-separated line each.
        #[arg(long, value_name = "DIR")]
        all_pairs: Option<PathBuf>,
    },
    /// Write the in-order curve as CSV to stdout.
    Curve {
        tree: PathBuf,
        /// Also render the curve as an SVG polyline.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Check a certificate against two trees.
    Verify {
        kind: Kind,
        src: PathBuf,
        tgt: PathBuf,
        certificate: PathBuf,
        /// Threshold to check at; defaults to the one stored in the certificate.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Print the leaf order and the layer order at the given heights.
    Convert {
        tree: PathBuf,
        #[arg(long = "at", value_name = "HEIGHT")]
        heights: Vec<f64>,
    },
    /// Build the two reduction trees of a balanced-partition instance.
    Reduce {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = PartitionInstance::DEFAULT_LAMBDA)]
        lambda: f64,
        /// Write source.json and target.json here instead of stdout.
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Interleaving,
    Labelling,
    Goodmap,
}

impl Kind {
    fn tag(self) -> &'static str {
        match self {
            Kind::Interleaving => "interleaving",
            Kind::Labelling => "labelling",
            Kind::Goodmap => "goodmap",
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Document { path: PathBuf, source: DocumentError },
    #[error("{0}")]
    Certificate(#[from] CertificateError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_tree(path: &Path) -> Result<OrderedMergeTree> {
    parse_tree(&read(path)?).map_err(|source| CliError::Document {
        path: path.to_owned(),
        source,
    })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { tree } => {
            let t = load_tree(&tree)?;
            let tr = t.tree();
            emit(
                out,
                &format!("ok: {} vertices, {} leaves\n", tr.len(), tr.leaves().len()),
            )
        }
        Command::Distance {
            all_pairs: Some(dir), ..
        } => all_pairs(&dir, out),
        Command::Distance {
            a: Some(a),
            b: Some(b),
            emit_certificate,
            ..
        } => distance(&a, &b, emit_certificate.as_deref(), out),
        Command::Distance { .. } => Err(CliError::Usage("distance needs two trees or --all-pairs".into())),
        Command::Curve { tree, svg } => {
            let (_, curve) = in_order_walk(&load_tree(&tree)?);
            if let Some(path) = svg {
                write_file(&path, &curve_svg(&curve))?;
            }
            emit(out, &curve_csv(&curve))
        }
        Command::Verify {
            kind,
            src,
            tgt,
            certificate,
            delta,
        } => verify(kind, &src, &tgt, &certificate, delta, out),
        Command::Convert { tree, heights } => convert(&load_tree(&tree)?, &heights, out),
        Command::Reduce {
            set,
            m,
            lambda,
            output_dir,
        } => reduce(set, m, lambda, output_dir.as_deref(), out),
    }
}

fn distance(a: &Path, b: &Path, emit_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let (src, tgt) = (load_tree(a)?, load_tree(b)?);
    let Some(dir) = emit_dir else {
        return emit(out, &format!("{:.9}\n", distance_value(&src, &tgt)));
    };
    let cert = monotone_interleaving_distance(&src, &tgt);
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    for c in &Certificate::all_forms(&src, &tgt, &cert)? {
        let name = format!("{}.json", c.kind());
        write_file(&dir.join(name), &serialise_certificate(&src, &tgt, c))?;
    }
    emit(out, &format!("{:.9}\n", cert.delta))
}

fn all_pairs(dir: &Path, out: &mut dyn Write) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let trees = paths.iter().map(|p| load_tree(p)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..trees.len())
        .flat_map(|i| (i + 1..trees.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| distance_value(&trees[i], &trees[j]))
        .collect();
    let name = |i: usize| {
        paths[i]
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let text: String = pairs
        .iter()
        .zip(values)
        .map(|(&(i, j), d)| format!("{}\t{}\t{d:.9}\n", name(i), name(j)))
        .collect();
    emit(out, &text)
}

fn verify(
    kind: Kind,
    src: &Path,
    tgt: &Path,
    certificate: &Path,
    delta: Option<f64>,
    out: &mut dyn Write,
) -> Result<()> {
    let (s, t) = (load_tree(src)?, load_tree(tgt)?);
    let cert = parse_certificate(&s, &t, &read(certificate)?).map_err(|source| CliError::Document {
        path: certificate.to_owned(),
        source,
    })?;
    let d = delta.unwrap_or(cert.delta());
    if kind.tag() != cert.kind() {
        return Err(CliError::Usage(format!(
            "{} holds a {} certificate",
            certificate.display(),
            cert.kind()
        )));
    }
    cert.verify(&s, &t, d)?;
    emit(out, &format!("ok at delta {d}\n"))
}

fn convert(t: &OrderedMergeTree, heights: &[f64], out: &mut dyn Write) -> Result<()> {
    let tr = t.tree();
    let order: Vec<&str> = t.leaf_order().as_slice().iter().map(|&u| tr.name(u)).collect();
    let mut text = format!("leaf order: {}\n", order.join(" < "));
    for &h in heights {
        let layer: Vec<String> = t
            .level_set(h)
            .iter()
            .map(|p| format!("{}@{}", tr.name(p.edge()), p.height()))
            .collect();
        text.push_str(&format!("layer {h}: {}\n", layer.join(" < ")));
    }
    emit(out, &text)
}

fn reduce(set: Vec<u64>, m: u64, lambda: f64, dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let inst = PartitionInstance::new(set, m, lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let (t, t2) = build_partition_reduction(&inst)?;
    let order = |t| OrderedMergeTree::from_tree(t).expect("reduction trees are valid");
    let (a, b) = (serialise_tree(&order(t)), serialise_tree(&order(t2)));
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_owned(),
                source,
            })?;
            write_file(&dir.join("source.json"), &a)?;
            write_file(&dir.join("target.json"), &b)
        }
        None => emit(out, &format!("{a}{b}")),
    }
}
