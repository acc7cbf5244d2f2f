//! Experiment CLI: graph generation, positional-encoding dumps, tree-kernel
//! tables, the WL/spectral separation experiment, invariance checks, and
//! random-wave injectivity studies.
//!
//! Every command is deterministic given its full argument list (seeds are
//! explicit, never wall-clock). Data goes to files; diagnostics go to
//! stderr. The exit code is zero iff all internal assertions pass.

mod config;
mod plot;
mod svg;

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lapnode::diffusion::{tree_radial_kernel, DEFAULT_TAIL_EPS};
use lapnode::graph::{generate_random_regular, Graph};
use lapnode::identify::run_separation;
use lapnode::randomwave::{
    fit_alpha, min_separation_scaling, minsep_csv, smallball_csv, smallball_estimate,
    SmallBallPoint,
};
use lapnode::spectral::{
    apply_sign_flips, apply_subspace_rotation, build_psi, decompose_graph, random_orthogonal,
    PositionalEncoding,
};

#[derive(Parser)]
#[command(name = "lapnode", version, about = "Spectral node identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random r-regular graph and write its edge list.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the positional encoding of a graph and write it as CSV.
    Pe {
        #[arg(long)]
        graph: PathBuf,
        /// Spectral dimension M (clamped to n-1 with a warning).
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the infinite-tree radial heat kernel and the psi link.
    Treekernel {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        d_max: usize,
        #[arg(long, default_value_t = DEFAULT_TAIL_EPS)]
        tail_eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the separation experiment described by a config file.
    Separation {
        #[arg(long)]
        config: PathBuf,
        /// Write the default config to the --config path and exit.
        #[arg(long)]
        init: bool,
    },
    /// Check sign-flip and eigenspace-rotation invariance of the encoding.
    Invariance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random-wave injectivity: small-ball collision probabilities and
    /// exhaustive minimum separations.
    Injectivity {
        #[arg(long)]
        seed: u64,
        /// Output directory for smallball.csv and minsep.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        pair_trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        m_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.5")]
        eps_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
        n_list: Vec<usize>,
        /// Spectral dimension rule constant: M = ceil(c log2 n).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 20)]
        minsep_trials: usize,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { n, r, seed, out } => cmd_gen(n, r, seed, &out),
        Command::Pe { graph, m, out } => cmd_pe(&graph, m, &out),
        Command::Treekernel { r, t, d_max, tail_eps, out } => {
            cmd_treekernel(r, t, d_max, tail_eps, &out)
        }
        Command::Separation { config, init } => {
            if init {
                write_file(&config, config::default_config_text())?;
                eprintln!("separation: wrote default config to {}", config.display());
                Ok(())
            } else {
                cmd_separation(&config)
            }
        }
        Command::Invariance { graph, m, trials, seed, out } => {
            cmd_invariance(&graph, m, trials, seed, &out)
        }
        Command::Injectivity {
            seed,
            out,
            pair_trials,
            m_list,
            eps_list,
            n_list,
            c,
            minsep_trials,
        } => cmd_injectivity(seed, &out, pair_trials, &m_list, &eps_list, &n_list, c, minsep_trials),
    }
}

fn write_file(path: &PathBuf, bytes: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Graph::from_edge_list_str(&text)?)
}

fn cmd_gen(n: usize, r: usize, seed: u64, out: &PathBuf) -> Result<()> {
    let g = generate_random_regular(n, r, seed)?;
    write_file(out, &g.to_edge_list_string())?;
    eprintln!("gen: n={n} r={r} seed={seed} -> {} ({} edges)", out.display(), g.edge_count());
    Ok(())
}

/// Clamps the requested spectral dimension to the n-1 nonzero eigenpairs.
fn clamp_spectral_dim(n: usize, m: usize) -> usize {
    if m > n - 1 {
        eprintln!("warning: M={m} exceeds the {} nonzero eigenpairs; clamping", n - 1);
        n - 1
    } else {
        m
    }
}

fn cmd_pe(graph: &PathBuf, m: usize, out: &PathBuf) -> Result<()> {
    let g = load_graph(graph)?;
    let n = g.node_count();
    let m_eff = clamp_spectral_dim(n, m);
    let dec = decompose_graph(&g, m_eff + 1)?;
    let pe = build_psi(&dec, m_eff)?;
    write_file(out, &pe.to_csv_string())?;
    eprintln!("pe: {} nodes, M={m_eff}, dim={} -> {}", n, pe.dim(), out.display());
    Ok(())
}

fn cmd_treekernel(r: usize, t: f64, d_max: usize, tail_eps: f64, out: &PathBuf) -> Result<()> {
    let table = tree_radial_kernel(r, t, d_max, tail_eps)?;
    write_file(out, &table.to_csv_string())?;
    eprintln!(
        "treekernel: r={r} t={t} d_max={d_max} kappa={:.6e} mass={:.12} -> {}",
        table.kappa(),
        table.tabulated_mass(),
        out.display()
    );
    Ok(())
}

fn cmd_separation(config_path: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let cfg = match config::parse_config(&text) {
        Ok(cfg) => cfg,
        Err(errors) => {
            for e in &errors {
                eprintln!("config error: {e}");
            }
            bail!("{} config error(s) in {}", errors.len(), config_path.display());
        }
    };
    eprintln!(
        "separation: n={:?} r={} k={}..{} trials={} m={} t={} radius={}",
        cfg.separation.n_values,
        cfg.separation.r,
        cfg.separation.k_grid.iter().min().unwrap(),
        cfg.separation.k_grid.iter().max().unwrap(),
        cfg.separation.trials,
        cfg.separation.m,
        cfg.separation.t,
        cfg.separation.radius_source.as_str()
    );
    let result = run_separation(&cfg.separation)?;
    let csv_path = cfg.out_dir.join("separation.csv");
    let svg_path = cfg.out_dir.join("separation.svg");
    write_file(&csv_path, &result.to_csv_string())?;
    write_file(&svg_path, &plot::separation_svg(&result, &cfg.separation))?;
    eprintln!("separation: wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn max_entry_deviation(a: &PositionalEncoding, b: &PositionalEncoding) -> f64 {
    let mut worst = 0.0f64;
    for v in 0..a.n() {
        for (x, y) in a.psi(v).iter().zip(b.psi(v)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

fn cmd_invariance(graph: &PathBuf, m: usize, trials: usize, seed: u64, out: &PathBuf) -> Result<()> {
    let g = load_graph(graph)?;
    let n = g.node_count();
    let m_eff = clamp_spectral_dim(n, m);
    let dec = decompose_graph(&g, n)?;
    let pe = build_psi(&dec, m_eff)?;
    let base_sums = dec.group_sums_of_squares();

    // Groups that lie entirely within the encoding's eigenpair range can be
    // rotated as genuine eigenspaces.
    let rotatable: Vec<usize> = dec
        .groups()
        .iter()
        .enumerate()
        .filter(|(_, range)| range.start >= 1 && range.end <= m_eff + 1)
        .map(|(i, _)| i)
        .collect();
    let all_simple = rotatable.iter().all(|&gi| dec.groups()[gi].len() == 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sign_dev = 0.0f64;
    let mut group_sum_dev = 0.0f64;
    let mut entry_dev = 0.0f64;
    for _ in 0..trials {
        let signs: Vec<f64> =
            (0..dec.count()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let flipped = apply_sign_flips(&dec, &signs)?;
        sign_dev = sign_dev.max(max_entry_deviation(&pe, &build_psi(&flipped, m_eff)?));

        let mut rotated = dec.clone();
        for &gi in &rotatable {
            let dim = dec.groups()[gi].len();
            let q = random_orthogonal(dim, &mut rng);
            rotated = apply_subspace_rotation(&rotated, gi, &q)?;
        }
        let sums = rotated.group_sums_of_squares();
        group_sum_dev = group_sum_dev.max((&base_sums - &sums).abs().max());
        entry_dev = entry_dev.max(max_entry_deviation(&pe, &build_psi(&rotated, m_eff)?));
    }

    let mut report = String::from("check,value\n");
    report.push_str(&format!("sign_flip_entrywise_max,{sign_dev}\n"));
    report.push_str(&format!("rotation_group_sum_max,{group_sum_dev}\n"));
    report.push_str(&format!("rotation_entrywise_max,{entry_dev}\n"));
    report.push_str(&format!("rotatable_groups_all_simple,{}\n", u8::from(all_simple)));
    write_file(out, &report)?;
    eprintln!(
        "invariance: sign={sign_dev:.3e} group_sum={group_sum_dev:.3e} entrywise={entry_dev:.3e} simple={all_simple}"
    );

    if sign_dev != 0.0 {
        bail!("sign-flip deviation {sign_dev:.3e} should be exactly zero");
    }
    if group_sum_dev > 1e-10 {
        bail!("group-summed rotation deviation {group_sum_dev:.3e} exceeds 1e-10");
    }
    if all_simple && entry_dev > 1e-10 {
        bail!("entrywise rotation deviation {entry_dev:.3e} exceeds 1e-10 on a simple spectrum");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_injectivity(
    seed: u64,
    out: &PathBuf,
    pair_trials: usize,
    m_list: &[usize],
    eps_list: &[f64],
    n_list: &[usize],
    c: f64,
    minsep_trials: usize,
) -> Result<()> {
    let mut points: Vec<SmallBallPoint> = Vec::new();
    for (i, &m) in m_list.iter().enumerate() {
        points.extend(smallball_estimate(
            m,
            eps_list,
            pair_trials,
            lapnode::identify::derive_seed(seed, i as u64),
        )?);
    }
    let minsep = min_separation_scaling(n_list, c, minsep_trials, seed)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let sb_path = out.join("smallball.csv");
    let ms_path = out.join("minsep.csv");
    write_file(&sb_path, &smallball_csv(&points))?;
    write_file(&ms_path, &minsep_csv(&minsep))?;
    if let Some(alpha) = fit_alpha(&minsep) {
        eprintln!("injectivity: fitted separation decay exponent alpha = {alpha:.3}");
    }
    eprintln!("injectivity: wrote {} and {}", sb_path.display(), ms_path.display());

    // Collision probability must not grow with the spectral dimension.
    for &eps in eps_list {
        let probs: Vec<(usize, f64)> = points
            .iter()
            .filter(|p| p.eps == eps)
            .map(|p| (p.m, p.prob))
            .collect();
        for w in probs.windows(2) {
            if w[1].1 > w[0].1 {
                bail!(
                    "collision probability rose from M={} ({:.3e}) to M={} ({:.3e}) at eps={eps}",
                    w[0].0,
                    w[0].1,
                    w[1].0,
                    w[1].1
                );
            }
        }
    }
    if let Some(bad) = minsep.iter().find(|t| t.min_sep <= 0.0 || t.min_sep.is_nan()) {
        bail!("zero min separation at n={} trial={}", bad.n, bad.trial);
    }
    Ok(())
}
