//! Timing of learning iterations as `N` and `J` grow.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use soupdil::learn::{learn, overcomplete_dct, LearnConfig, LearnState, Penalty};
use soupdil::linalg::{DenseMatrix, Dictionary, C64};

use super::Stopwatch;
use crate::config::{Config, Resolver};
use crate::error::CliResult;
use crate::io::ensure_dir;
use crate::output::{Manifest, Table};
use crate::row;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchParams {
    pub patch: usize,
    pub n0: usize,
    pub j0: usize,
    pub lambda: f64,
    /// Timed iterations per repeat.
    pub iters: usize,
    /// The fastest of this many repeats is reported.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            patch: 6,
            n0: 5000,
            j0: 72,
            lambda: 1.2,
            iters: 4,
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchCase {
    pub label: &'static str,
    pub signals: usize,
    pub atoms: usize,
    pub seconds_per_iter: f64,
    pub sparsity_pct: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub cases: Vec<BenchCase>,
    /// `(name, ratio)` pairs: `N→2N`, `2N→4N` and `J→2J`.
    pub ratios: Vec<(&'static str, f64)>,
}

impl BenchReport {
    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.ratios.iter().find(|(n, _)| *n == name).map(|(_, r)| *r)
    }

    pub fn to_table(&self, n: usize) -> Table {
        let mut t = Table::new(&["case", "n", "N", "J", "seconds_per_iter", "sparsity_pct", "ratio_to_previous"]);
        let mut prev: Option<f64> = None;
        for c in &self.cases {
            let ratio = match c.label {
                "base" => None,
                "J->2J" => Some(c.seconds_per_iter / self.cases[0].seconds_per_iter),
                _ => prev.map(|p| c.seconds_per_iter / p),
            };
            t.push(row![c.label, n, c.signals, c.atoms, c.seconds_per_iter, c.sparsity_pct, ratio]);
            if c.label != "J->2J" {
                prev = Some(c.seconds_per_iter);
            }
        }
        t
    }
}

/// Signals that are sparse in a random dictionary (four atoms each) plus noise.
pub fn synthetic_signals(n: usize, count: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = 2 * n;
    let gauss = |rng: &mut ChaCha8Rng| -> C64 {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    };
    let truth = Dictionary::normalized(DenseMatrix::from_fn(n, atoms, |_, _| gauss(&mut rng)))
        .expect("gaussian columns are nonzero");
    let mut y = DenseMatrix::zeros(n, count);
    for i in 0..count {
        for _ in 0..4 {
            let k = rng.random_range(0..atoms);
            let a = gauss(&mut rng);
            for (v, d) in y.col_mut(i).iter_mut().zip(truth.atom(k)) {
                *v += d * a;
            }
        }
        for v in y.col_mut(i) {
            *v += gauss(&mut rng) * 0.05;
        }
    }
    y
}

fn time_case(y: &DenseMatrix, atoms: usize, p: &BenchParams) -> CliResult<(f64, f64)> {
    let n = y.rows();
    let cfg = LearnConfig::new(atoms, Penalty::l0(p.lambda)?, 1)?;
    // one untimed iteration moves off the all-zero start
    let warm = learn(y, LearnState::initial(overcomplete_dct(n, atoms)?, y.cols()), &cfg)?;
    let timed = LearnConfig::new(atoms, Penalty::l0(p.lambda)?, p.iters.max(1))?;
    let mut best = f64::INFINITY;
    let mut sparsity = 0.0;
    for _ in 0..p.repeats.max(1) {
        let start = warm.clone();
        let clock = Stopwatch::start();
        let out = learn(y, start, &timed)?;
        best = best.min(clock.secs() / p.iters.max(1) as f64);
        sparsity = 100.0 * out.coefs.nnz() as f64 / (n * y.cols()) as f64;
    }
    Ok((best, sparsity))
}

pub fn run_bench(p: &BenchParams) -> CliResult<BenchReport> {
    let n = p.patch * p.patch;
    let all = synthetic_signals(n, 4 * p.n0, p.seed);
    let take = |count: usize| DenseMatrix::from_col_major(n, count, all.as_slice()[..n * count].to_vec());
    let plan: [(&'static str, usize, usize); 4] = [
        ("base", p.n0, p.j0),
        ("N->2N", 2 * p.n0, p.j0),
        ("2N->4N", 4 * p.n0, p.j0),
        ("J->2J", p.n0, 2 * p.j0),
    ];
    let mut cases = Vec::new();
    for (label, signals, atoms) in plan {
        let y = take(signals)?;
        let (secs, sparsity_pct) = time_case(&y, atoms, p)?;
        cases.push(BenchCase {
            label,
            signals,
            atoms,
            seconds_per_iter: secs,
            sparsity_pct,
        });
    }
    let t = |i: usize| cases[i].seconds_per_iter;
    let ratios = vec![("N->2N", t(1) / t(0)), ("2N->4N", t(2) / t(1)), ("J->2J", t(3) / t(0))];
    Ok(BenchReport { cases, ratios })
}

pub fn run(cfg: &Config) -> CliResult<(BenchReport, Manifest)> {
    let mut r = Resolver::new(cfg, "bench");
    let d = BenchParams::default();
    let p = BenchParams {
        patch: r.get("patch", d.patch)?,
        n0: r.get("n0", d.n0)?,
        j0: r.get("j0", d.j0)?,
        lambda: r.get("lambda", d.lambda)?,
        iters: r.get("iters", d.iters)?,
        repeats: r.get("repeats", d.repeats)?,
        seed: r.get("seed", d.seed)?,
    };
    let out: Option<PathBuf> = r.optional_path("out")?;
    let used = r.finish()?;
    let report = run_bench(&p)?;
    let table = report.to_table(p.patch * p.patch);
    let mut manifest = Manifest::new("bench", used);
    for (name, ratio) in &report.ratios {
        manifest.notes.push(format!("ratio.{name}={ratio}"));
    }
    match out {
        Some(dir) => {
            ensure_dir(&dir)?;
            table.save(&dir.join("bench.csv"))?;
            manifest.save(&dir.join("manifest.txt"))?;
        }
        None => print!("{}", table.to_csv()),
    }
    Ok((report, manifest))
}
