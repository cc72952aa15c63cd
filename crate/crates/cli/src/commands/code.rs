use std::path::PathBuf;

use soupdil::baselines::{omp_code_all, OmpParams};
use soupdil::formats;
use soupdil::learn::{code_with_fixed_dictionary, Penalty};
use soupdil::linalg::CoefMatrix;
use soupdil::metrics::MetricReport;

use super::{path_list, sample_patches, square_side, Stopwatch};
use crate::config::{Config, Resolver};
use crate::error::{CliError, CliResult, WithPath};
use crate::io::{ensure_dir, write_text};
use crate::output::{Manifest, Table};
use crate::row;

pub struct CodeOutcome {
    pub coefs: CoefMatrix,
    pub report: MetricReport,
    /// Objective per sweep for block coordinate descent coding; empty for OMP.
    pub trace: Table,
    pub rank_deficient_signals: usize,
    pub manifest: Manifest,
}

pub fn run(cfg: &Config) -> CliResult<CodeOutcome> {
    let mut r = Resolver::new(cfg, "code");
    let dict_path = r.path("dict")?;
    let images = path_list(&r.required::<String>("image")?);
    let stride = r.get("stride", 1usize)?;
    let count = r.get("patches", 30_000usize)?;
    let seed = r.get("seed", 0u64)?;
    let method: String = r.get("method", "omp".to_string())?;
    enum Method {
        Omp(OmpParams),
        Bcd(Penalty, usize),
    }
    let method = match method.as_str() {
        "omp" => {
            let s = r.required("sparsity")?;
            let tol = r.get("err_tol", OmpParams::DEFAULT_ERR_TOL)?;
            Method::Omp(OmpParams::new(s, tol)?)
        }
        "l0" => Method::Bcd(Penalty::l0(r.required("lambda")?)?, r.get("sweeps", 60usize)?),
        "l1" => Method::Bcd(Penalty::l1(r.required("mu")?)?, r.get("sweeps", 60usize)?),
        other => return Err(CliError::usage(format!("method must be omp, l0 or l1, got '{other}'"))),
    };
    let out: Option<PathBuf> = r.optional_path("out")?;
    let used = r.finish()?;

    let dict = formats::load_dictionary(&dict_path).at(&dict_path)?;
    let side = square_side(dict.signal_dim(), &dict_path)?;
    let y = sample_patches(&images, side, stride, count, seed)?;
    let clock = Stopwatch::start();
    let mut trace = Table::new(&["sweep", "objective"]);
    let (coefs, objective, rank_deficient_signals) = match method {
        Method::Omp(p) => {
            let batch = omp_code_all(&dict, &y, &p)?;
            let obj = soupdil::learn::residual_sq(&y, dict.as_matrix(), &batch.coefs)?;
            (batch.coefs, obj, batch.rank_deficient_signals)
        }
        Method::Bcd(penalty, sweeps) => {
            let zero = CoefMatrix::zeros(y.cols(), dict.num_atoms());
            let (coefs, objs) = code_with_fixed_dictionary(&y, &dict, zero, &penalty, sweeps)?;
            for (i, v) in objs.iter().enumerate() {
                trace.push(row![i + 1, *v]);
            }
            let last = soupdil::learn::objective(&y, dict.as_matrix(), &coefs, &penalty)?;
            (coefs, last, 0)
        }
    };
    let secs = clock.secs();
    let report = MetricReport::from_fit(&y, dict.as_matrix(), &coefs, objective)?;

    let mut manifest = Manifest::new("code", used);
    manifest.timings.push(("code", secs));
    manifest.notes.extend(report.to_lines());
    manifest.notes.push(format!("rank_deficient_signals={rank_deficient_signals}"));
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        let p = dir.join("coefs.soupcoe");
        formats::save_coefs(&p, &coefs).at(&p)?;
        write_text(&dir.join("metrics.txt"), &(report.to_lines().join("\n") + "\n"))?;
        if !trace.is_empty() {
            trace.save(&dir.join("trace.csv"))?;
        }
        manifest.save(&dir.join("manifest.txt"))?;
    }
    Ok(CodeOutcome {
        coefs,
        report,
        trace,
        rank_deficient_signals,
        manifest,
    })
}
