use std::path::PathBuf;

use soupdil::formats;
use soupdil::learn::{learn, AtomOrder, LearnConfig, LearnState, Penalty};
use soupdil::linalg::DenseMatrix;
use soupdil::metrics::{nsre, sparsity_factor};

use super::{init_dictionary, order_from, path_list, penalty_from, sample_patches, Stopwatch};
use crate::config::{Config, Resolver};
use crate::error::{CliResult, WithPath};
use crate::io::ensure_dir;
use crate::output::{Manifest, Table};
use crate::row;

pub const TRACE_HEADER: [&str; 6] = ["iter", "objective", "nsre_pct", "sparsity_pct", "dict_diff", "coef_diff"];

/// Runs `iterations` learning iterations one at a time, recording one trace
/// row per iteration. With a random atom order, iteration `t` uses `seed + t`.
pub fn learn_with_trace(
    y: &DenseMatrix,
    mut state: LearnState,
    penalty: Penalty,
    iterations: usize,
    order: AtomOrder,
) -> CliResult<(LearnState, Table)> {
    nsre(y, state.dictionary.as_matrix(), &state.coefs)?;
    let mut table = Table::new(&TRACE_HEADER);
    let start = state.objective_trace.len();
    for t in 0..iterations {
        let order = match order {
            AtomOrder::Cyclic => AtomOrder::Cyclic,
            AtomOrder::Random { seed } => AtomOrder::Random {
                seed: seed.wrapping_add(t as u64),
            },
        };
        let cfg = LearnConfig::new(state.dictionary.num_atoms(), penalty, 1)?.with_order(order);
        state = learn(y, state, &cfg)?;
        let k = start + t;
        table.push(row![
            t + 1,
            state.objective_trace[k],
            100.0 * nsre(y, state.dictionary.as_matrix(), &state.coefs)?,
            100.0 * sparsity_factor(&state.coefs, y.rows())?,
            state.dict_diff_trace[k],
            state.coef_diff_trace[k],
        ]);
    }
    Ok((state, table))
}

pub struct LearnOutcome {
    pub state: LearnState,
    pub trace: Table,
    pub manifest: Manifest,
}

pub fn run(cfg: &Config) -> CliResult<LearnOutcome> {
    let mut r = Resolver::new(cfg, "learn");
    let images = path_list(&r.required::<String>("image")?);
    let side = r.get("patch", 8usize)?;
    let stride = r.get("stride", 1usize)?;
    let count = r.get("patches", 30_000usize)?;
    let atoms = r.get("atoms", 256usize)?;
    let iters = r.get("iters", 30usize)?;
    let seed = r.get("seed", 0u64)?;
    let init: String = r.get("init", "dct".to_string())?;
    let penalty = penalty_from(&mut r, "l0")?;
    let order = order_from(&mut r, seed)?;
    let out: Option<PathBuf> = r.optional_path("out")?;
    let used = r.finish()?;

    let clock = Stopwatch::start();
    let y = sample_patches(&images, side, stride, count, seed)?;
    let load_secs = clock.secs();
    let dict = init_dictionary(&init, side * side, atoms, seed)?;
    let state = LearnState::initial(dict, y.cols());
    let clock = Stopwatch::start();
    let (state, trace) = learn_with_trace(&y, state, penalty, iters, order)?;
    let learn_secs = clock.secs();

    let mut manifest = Manifest::new("learn", used);
    manifest.timings.push(("load", load_secs));
    manifest.timings.push(("learn", learn_secs));
    manifest.notes.push(format!("signals={}", y.cols()));
    manifest.notes.push(format!("rows={}", trace.len()));
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        let p = dir.join("dictionary.soupdic");
        formats::save_dictionary(&p, &state.dictionary).at(&p)?;
        let p = dir.join("coefs.soupcoe");
        formats::save_coefs(&p, &state.coefs).at(&p)?;
        trace.save(&dir.join("trace.csv"))?;
        manifest.save(&dir.join("manifest.txt"))?;
    }
    Ok(LearnOutcome { state, trace, manifest })
}
