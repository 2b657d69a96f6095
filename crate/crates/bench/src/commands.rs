use std::path::Path;

use ksvd::io::{load_matrix, save_klrm, write_csv_matrix};
use ksvd::linops::{ParallelDense, ORACLE_CAP};
use ksvd::manifold::{RsgdConfig, SvdBackend};
use ksvd::metrics::{err_rel, err_res, TripletQuality};
use ksvd::rsl::{load_pairs_csv, synth_task_with_floor, train_with, TrainOptions};
use ksvd::{
    dense_svd_oracle, estimate_rank, gaussian_matrix, low_rank_synth, BidiagConfig, DenseMatrix,
    RankMode, Seed,
};
use serde_json::json;

use crate::cli::*;
use crate::error::{BenchError, Result};
use crate::methods::{run_method, timed, MethodParams, ERR_RES_CAP};
use crate::report::{emit, emit_secondary, Cell, Document, CONFIG_PREFIX, SCHEMA_PREFIX};

pub const COMPARE_COLUMNS: &[&str] = &[
    "method", "m", "n", "rank_true", "r_extracted", "k_used", "k_prime", "repeats", "seconds",
    "seconds_mean", "err_res", "err_rel", "rank_estimated", "seed",
];
pub const RANK_COLUMNS: &[&str] = &[
    "m", "n", "eps", "mode", "rank", "k_prime", "threshold_used", "seconds", "seconds_mean",
    "oracle_rank", "oracle_seconds",
];
pub const SVD_COLUMNS: &[&str] = &["index", "sigma"];
pub const SVD_SUMMARY_COLUMNS: &[&str] = &[
    "method", "m", "n", "r_extracted", "k_used", "k_prime", "seconds", "seconds_mean", "err_rel",
    "err_res", "rank_estimated",
];
pub const TRIPLET_COLUMNS: &[&str] = &["method", "index", "q", "sigma_ref", "sigma", "sigma_dev"];
pub const TRIPLET_SUMMARY_COLUMNS: &[&str] =
    &["method", "triplets", "min_q", "max_sigma_dev", "seconds"];
pub const RSL_HISTORY_COLUMNS: &[&str] = &[
    "backend", "step", "loss", "seconds", "sigma_min", "sigma_max", "padded", "test_accuracy",
];
pub const RSL_SUMMARY_COLUMNS: &[&str] = &[
    "backend", "inner_k", "steps", "init_accuracy", "final_accuracy", "median_step_seconds",
    "total_seconds",
];
pub const GEN_COLUMNS: &[&str] = &["m", "n", "rank_true", "frobenius_norm"];

/// A main table and, for some verbs, a summary that goes to a sidecar file
/// (or inside the main document for JSON output).
pub struct Output {
    pub primary: Document,
    pub secondary: Option<Document>,
}

impl Output {
    fn single(primary: Document) -> Self {
        Output {
            primary,
            secondary: None,
        }
    }
}

/// Seed of the synthetic matrix of a given shape.
pub fn matrix_seed(seed: u64, size: Size) -> Seed {
    Seed(seed).derive(((size.rows as u64) << 32) ^ size.cols as u64)
}

fn method_seed(seed: u64, method: Method) -> Seed {
    Seed(seed).derive(method.tag())
}

fn check_elems(rows: usize, cols: usize, cap: u64) -> Result<()> {
    if (rows as u64).saturating_mul(cols as u64) > cap {
        return Err(BenchError::Config(format!(
            "{rows}x{cols} exceeds --max-elems {cap}"
        )));
    }
    Ok(())
}

pub fn synth_matrix(size: Size, rank_true: usize, seed: u64, cap: u64) -> Result<DenseMatrix> {
    check_elems(size.rows, size.cols, cap)?;
    let s = matrix_seed(seed, size);
    Ok(if rank_true == 0 {
        gaussian_matrix(size.rows, size.cols, 0.0, 1.0, s)?
    } else {
        low_rank_synth(size.rows, size.cols, rank_true, s)?
    })
}

fn load_source(src: &MatrixSource, seed: u64, cap: u64) -> Result<DenseMatrix> {
    match &src.input {
        Some(path) => {
            let a = load_matrix(path)?;
            check_elems(a.rows(), a.cols(), cap)?;
            Ok(a)
        }
        None => synth_matrix(src.size, src.rank_true, seed, cap),
    }
}

/// Runs a config and writes its outputs.
pub fn execute(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    if cfg.config_version != CONFIG_VERSION {
        return Err(BenchError::Config(format!(
            "config version {} is not supported (expected {CONFIG_VERSION})",
            cfg.config_version
        )));
    }
    if let CommandConfig::Gen(args) = &cfg.command {
        return gen(cfg, args, out);
    }
    let output = build(cfg)?;
    write_output(cfg, output, out)
}

/// Computes a verb's documents without writing anything.
pub fn build(cfg: &RunConfig) -> Result<Output> {
    match &cfg.command {
        CommandConfig::Gen(_) => Err(BenchError::Config("gen writes a matrix, not a table".into())),
        CommandConfig::Rank(a) => rank(cfg, a),
        CommandConfig::Svd(a) => svd(cfg, a),
        CommandConfig::Compare(a) => compare(cfg, a),
        CommandConfig::Triplets(a) => triplets(cfg, a),
        CommandConfig::Rsl(a) => rsl(cfg, a),
    }
}

pub fn write_output(cfg: &RunConfig, output: Output, out: Option<&Path>) -> Result<()> {
    let Output {
        mut primary,
        secondary,
    } = output;
    match (cfg.format, secondary) {
        (Format::Json, Some(sec)) => {
            let rows: Vec<serde_json::Value> = sec
                .rows
                .iter()
                .map(|r| {
                    sec.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), cell_json(v)))
                        .collect::<serde_json::Map<_, _>>()
                        .into()
                })
                .collect();
            let mut extra = primary.extra.take().unwrap_or_else(|| json!({}));
            extra["summary"] = json!({ "schema": sec.schema, "rows": rows });
            primary.extra = Some(extra);
            emit(&primary.render(cfg.format, cfg)?, out)
        }
        (_, Some(sec)) => {
            emit(&primary.render(cfg.format, cfg)?, out)?;
            emit_secondary(&sec.render(Format::Json, cfg)?, out, "summary.json")?;
            Ok(())
        }
        (_, None) => emit(&primary.render(cfg.format, cfg)?, out),
    }
}

fn cell_json(c: &Cell) -> serde_json::Value {
    match c {
        Cell::Str(s) => json!(s),
        Cell::Int(i) => json!(i),
        Cell::Float(x) if x.is_finite() => json!(x),
        _ => serde_json::Value::Null,
    }
}

fn gen(cfg: &RunConfig, args: &GenArgs, out: Option<&Path>) -> Result<()> {
    let out = out.ok_or_else(|| BenchError::Config("gen needs --out".into()))?;
    let a = synth_matrix(args.size, args.rank_true, cfg.seed, cfg.max_elems)?;
    let is_csv = out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut doc = Document::new("gen/v1", GEN_COLUMNS);
    doc.push(vec![
        a.rows().into(),
        a.cols().into(),
        args.rank_true.into(),
        a.frobenius_norm().into(),
    ]);
    if is_csv {
        let mut buf = format!(
            "{SCHEMA_PREFIX}matrix/v1\n{CONFIG_PREFIX}{}\n",
            serde_json::to_string(cfg)?
        )
        .into_bytes();
        write_csv_matrix(&mut buf, &a)?;
        std::fs::write(out, buf)?;
    } else {
        save_klrm(out, &a)?;
        // The binary layout has no room for metadata.
        emit_secondary(&doc.render(Format::Json, cfg)?, Some(out), "config.json")?;
    }
    Ok(())
}

fn rank(cfg: &RunConfig, args: &RankArgs) -> Result<Output> {
    let a = load_source(&args.source, cfg.seed, cfg.max_elems)?;
    if args.eps.is_empty() {
        return Err(BenchError::Config("--eps needs at least one value".into()));
    }
    let bcfg = BidiagConfig::new(a.rows().min(a.cols())).with_seed(Seed(cfg.seed));
    let oracle = if args.oracle && a.rows() <= ORACLE_CAP && a.cols() <= ORACLE_CAP {
        let (svd, t) = timed(cfg.repeats, || Ok(dense_svd_oracle(&a)?))?;
        Some((svd.sigma, t))
    } else {
        None
    };
    let mut doc = Document::new("rank/v1", RANK_COLUMNS);
    for &eps in &args.eps {
        let (report, t) = timed(cfg.repeats, || {
            Ok(estimate_rank(&ParallelDense(&a), eps, args.mode, &bcfg)?)
        })?;
        let (oracle_rank, oracle_seconds) = match &oracle {
            Some((sigma, t)) => {
                let s1 = sigma.first().copied().unwrap_or(0.0);
                let thr = match args.mode {
                    RankMode::Absolute => eps,
                    RankMode::Relative => eps * eps * s1 * s1,
                };
                let r = sigma.iter().filter(|&&s| s * s > thr).count();
                (Some(r), Some(t.median))
            }
            None => (None, None),
        };
        if doc.extra.is_none() {
            doc.extra = Some(json!({ "eigenvalues": report.eigenvalues }));
        }
        doc.push(vec![
            a.rows().into(),
            a.cols().into(),
            eps.into(),
            mode_name(args.mode).into(),
            report.rank.into(),
            report.k_prime.into(),
            report.threshold_used.into(),
            t.median.into(),
            t.mean.into(),
            oracle_rank.into(),
            oracle_seconds.into(),
        ]);
    }
    Ok(Output::single(doc))
}

fn mode_name(mode: RankMode) -> &'static str {
    match mode {
        RankMode::Absolute => "absolute",
        RankMode::Relative => "relative",
    }
}

fn residual(a: &DenseMatrix, svd: &ksvd::PartialSvd) -> Result<Option<f64>> {
    if (a.rows() as u64) * (a.cols() as u64) > ERR_RES_CAP {
        return Ok(None);
    }
    Ok(Some(err_res(a, svd)?))
}

fn svd(cfg: &RunConfig, args: &SvdArgs) -> Result<Output> {
    let a = load_source(&args.source, cfg.seed, cfg.max_elems)?;
    let params = MethodParams {
        r: args.r,
        k: args.k,
        oversampling: args.oversampling,
        seed: method_seed(cfg.seed, args.method),
    };
    let (run, t) = timed(cfg.repeats, || run_method(args.method, &a, &params))?;
    let mut doc = Document::new("svd/v1", SVD_COLUMNS);
    for (i, &s) in run.svd.sigma.iter().enumerate() {
        doc.push(vec![i.into(), s.into()]);
    }
    let mut summary = Document::new("svd-summary/v1", SVD_SUMMARY_COLUMNS);
    summary.push(vec![
        args.method.name().into(),
        a.rows().into(),
        a.cols().into(),
        run.svd.rank().into(),
        run.k_used.into(),
        run.k_prime.into(),
        t.median.into(),
        t.mean.into(),
        err_rel(&ParallelDense(&a), &run.svd)?.into(),
        residual(&a, &run.svd)?.into(),
        run.rank_estimated.into(),
    ]);
    Ok(Output {
        primary: doc,
        secondary: Some(summary),
    })
}

fn compare(cfg: &RunConfig, args: &CompareArgs) -> Result<Output> {
    if args.methods.is_empty() || args.sizes.is_empty() {
        return Err(BenchError::Config("need at least one size and one method".into()));
    }
    let mut doc = Document::new("compare/v1", COMPARE_COLUMNS);
    for &size in &args.sizes {
        let a = synth_matrix(size, args.rank_true, cfg.seed, cfg.max_elems)?;
        for &method in &args.methods {
            let params = MethodParams {
                r: args.r,
                k: args.k,
                oversampling: args.oversampling,
                seed: method_seed(cfg.seed, method),
            };
            let row_head: Vec<Cell> = vec![
                method.name().into(),
                size.rows.into(),
                size.cols.into(),
                args.rank_true.into(),
            ];
            let result = timed(cfg.repeats, || run_method(method, &a, &params));
            let row_tail: Vec<Cell> = match result {
                Ok((run, t)) => vec![
                    run.svd.rank().into(),
                    run.k_used.into(),
                    run.k_prime.into(),
                    cfg.repeats.into(),
                    t.median.into(),
                    t.mean.into(),
                    residual(&a, &run.svd)?.into(),
                    err_rel(&ParallelDense(&a), &run.svd)?.into(),
                    run.rank_estimated.into(),
                    params.seed.0.into(),
                ],
                // Too big for this method: an NA row, as in the published tables.
                Err(BenchError::Core(ksvd::Error::TooLarge { .. })) => vec![
                    Cell::Na,
                    Cell::Na,
                    Cell::Na,
                    cfg.repeats.into(),
                    Cell::Na,
                    Cell::Na,
                    Cell::Na,
                    Cell::Na,
                    Cell::Na,
                    params.seed.0.into(),
                ],
                Err(e) => return Err(e),
            };
            doc.push(row_head.into_iter().chain(row_tail).collect());
        }
    }
    Ok(Output::single(doc))
}

fn triplets(cfg: &RunConfig, args: &TripletsArgs) -> Result<Output> {
    if args.size.rows > ORACLE_CAP || args.size.cols > ORACLE_CAP {
        return Err(ksvd::Error::TooLarge {
            rows: args.size.rows,
            cols: args.size.cols,
            cap: ORACLE_CAP,
        }
        .into());
    }
    let a = synth_matrix(args.size, args.rank_true, cfg.seed, cfg.max_elems)?;
    let mut reference = dense_svd_oracle(&a)?.truncate(args.r);
    reference.normalize_signs();
    let mut doc = Document::new("triplets/v1", TRIPLET_COLUMNS);
    let mut summary = Document::new("triplets-summary/v1", TRIPLET_SUMMARY_COLUMNS);
    for &method in &args.methods {
        let params = MethodParams {
            r: args.r,
            k: args.k,
            oversampling: args.oversampling,
            seed: method_seed(cfg.seed, method),
        };
        let (run, t) = timed(cfg.repeats, || run_method(method, &a, &params))?;
        let tq = TripletQuality::compare(&reference, &run.svd)?;
        for i in 0..tq.q.len() {
            doc.push(vec![
                method.name().into(),
                i.into(),
                tq.q[i].into(),
                reference.sigma[i].into(),
                run.svd.sigma[i].into(),
                tq.sigma_dev[i].into(),
            ]);
        }
        summary.push(vec![
            method.name().into(),
            tq.q.len().into(),
            tq.min_q().into(),
            tq.max_sigma_dev().into(),
            t.median.into(),
        ]);
    }
    Ok(Output {
        primary: doc,
        secondary: Some(summary),
    })
}

/// `dense`, `fsvd:<k>` or `fsvd:<c>r`.
pub fn parse_backend(text: &str, rank: usize) -> Result<SvdBackend> {
    if let Some(mult) = text.strip_prefix("fsvd:").and_then(|k| k.strip_suffix('r')) {
        let c: usize = mult
            .parse()
            .map_err(|_| BenchError::Config(format!("bad backend '{text}'")))?;
        return Ok(SvdBackend::Fsvd { inner_k: c * rank });
    }
    text.parse::<SvdBackend>()
        .map_err(|e| BenchError::Config(e.to_string()))
}

fn rsl(cfg: &RunConfig, args: &RslArgs) -> Result<Output> {
    let backends = args
        .backends
        .iter()
        .map(|b| parse_backend(b, args.rank))
        .collect::<Result<Vec<_>>>()?;
    if backends.is_empty() {
        return Err(BenchError::Config("--backends is empty".into()));
    }
    let (train_set, test_set) = match (&args.train_csv, &args.test_csv) {
        (Some(tr), Some(te)) => (load_pairs_csv(tr)?, load_pairs_csv(te)?),
        _ => {
            if args.rank_true == 0 || args.rank_true > args.d1.min(args.d2) {
                return Err(BenchError::Config(format!(
                    "--rank-true must lie in 1..={}",
                    args.d1.min(args.d2)
                )));
            }
            check_elems(args.d1, args.d2, cfg.max_elems)?;
            let task = synth_task_with_floor(
                args.d1,
                args.d2,
                args.rank_true,
                args.n_train,
                args.n_test,
                args.margin_floor,
                Seed(cfg.seed).derive(0xDA7A),
            )?;
            (task.train, task.test)
        }
    };
    let mut history = Document::new("rsl-history/v1", RSL_HISTORY_COLUMNS);
    let mut summary = Document::new("rsl-summary/v1", RSL_SUMMARY_COLUMNS);
    for backend in backends {
        let inner_k = match backend {
            SvdBackend::Fsvd { inner_k } => inner_k,
            SvdBackend::Dense => args.d1.min(args.d2),
        };
        let rcfg = RsgdConfig {
            eta: args.eta,
            lambda: args.lambda,
            rank: args.rank,
            inner_k: inner_k.max(args.rank),
            steps: args.steps,
            batch: args.batch,
            gradient_projector: args.gradient_projector,
            seed: Seed(cfg.seed).derive(0x7EA1),
        };
        let opts = TrainOptions {
            eval_every: args.eval_every,
            ..TrainOptions::default()
        };
        let (_, hist) = train_with(&train_set, &test_set, &rcfg, backend, opts)?;
        let name = backend.to_string();
        for s in &hist.steps {
            history.push(vec![
                name.clone().into(),
                s.step.into(),
                s.loss.into(),
                s.seconds.into(),
                s.sigma_min.into(),
                s.sigma_max.into(),
                s.padded.into(),
                s.test_accuracy.into(),
            ]);
        }
        summary.push(vec![
            name.into(),
            inner_k.into(),
            hist.steps.len().into(),
            hist.init_accuracy.into(),
            hist.final_accuracy.into(),
            hist.median_step_seconds().into(),
            hist.steps.iter().map(|s| s.seconds).sum::<f64>().into(),
        ]);
    }
    Ok(Output {
        primary: history,
        secondary: Some(summary),
    })
}
