//! Bilinear similarity learning on the fixed-rank manifold: score
//! `x^T W v`, hinge loss, a synthetic paired-domain task and the RSGD
//! training loop.

use std::io::Read;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bidiag::BidiagConfig;
use crate::error::{Error, Result};
use crate::fsvd::fsvd;
use crate::linops::{gaussian_matrix, low_rank_synth, DenseMatrix};
use crate::manifold::{rsgd_step_with, FixedRankPoint, RsgdConfig, SvdBackend};
use crate::seed::{normal_vec, Seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Dissimilar,
    Similar,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Similar => 1.0,
            Label::Dissimilar => -1.0,
        }
    }

    /// `score >= 0` is classified as similar.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Similar
        } else {
            Label::Dissimilar
        }
    }

    pub fn from_value(y: f64) -> Result<Label> {
        match y {
            y if y == 1.0 => Ok(Label::Similar),
            y if y == -1.0 => Ok(Label::Dissimilar),
            other => Err(Error::InvalidArgument(format!(
                "labels must be -1 or +1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Label,
}

/// `x^T U diag(S) V^T v`, in `O((d1 + d2) r)`.
pub fn score(w: &FixedRankPoint, x: &[f64], v: &[f64]) -> Result<f64> {
    let (d1, d2) = w.dims();
    if x.len() != d1 || v.len() != d2 {
        return Err(Error::shape(
            "score operands",
            format!("x of length {d1}, v of length {d2}"),
            format!("x of length {}, v of length {}", x.len(), v.len()),
        ));
    }
    Ok(score_unchecked(w, x, v))
}

fn score_unchecked(w: &FixedRankPoint, x: &[f64], v: &[f64]) -> f64 {
    let r = w.rank();
    let mut xu = vec![0.0; r];
    for (i, &xi) in x.iter().enumerate() {
        for (acc, &u) in xu.iter_mut().zip(w.u.row(i)) {
            *acc += xi * u;
        }
    }
    let mut vv = vec![0.0; r];
    for (i, &vi) in v.iter().enumerate() {
        for (acc, &b) in vv.iter_mut().zip(w.v.row(i)) {
            *acc += vi * b;
        }
    }
    (0..r).map(|k| xu[k] * w.s[k] * vv[k]).sum()
}

/// Mean hinge loss `max(0, 1 - y f_W(x, v))` over the batch and its
/// Euclidean gradient in `W`. Samples with margin exactly 1 contribute zero.
pub fn hinge_grad(batch: &[PairSample], w: &FixedRankPoint) -> Result<(f64, DenseMatrix)> {
    hinge_grad_iter(batch.iter(), batch.len(), w)
}

fn hinge_grad_iter<'a>(
    batch: impl Iterator<Item = &'a PairSample>,
    len: usize,
    w: &FixedRankPoint,
) -> Result<(f64, DenseMatrix)> {
    if len == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (d1, d2) = w.dims();
    let mut g = vec![0.0; d1 * d2];
    let mut loss = 0.0;
    for sample in batch {
        let f = score(w, &sample.x, &sample.v)?;
        let y = sample.y.sign();
        let margin = y * f;
        if margin < 1.0 {
            loss += 1.0 - margin;
            for (i, &xi) in sample.x.iter().enumerate() {
                let c = -y * xi;
                if c == 0.0 {
                    continue;
                }
                for (gij, &vj) in g[i * d2..(i + 1) * d2].iter_mut().zip(&sample.v) {
                    *gij += c * vj;
                }
            }
        }
    }
    let n = len as f64;
    g.iter_mut().for_each(|x| *x /= n);
    Ok((loss / n, DenseMatrix::new(d1, d2, g)?))
}

/// Fraction of samples whose predicted label matches.
pub fn accuracy(w: &FixedRankPoint, data: &[PairSample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .iter()
        .filter(|s| Label::from_score(score_unchecked(w, &s.x, &s.v)) == s.y)
        .count();
    hits as f64 / data.len() as f64
}

#[derive(Debug, Clone)]
pub struct SynthTask {
    pub train: Vec<PairSample>,
    pub test: Vec<PairSample>,
    /// Ground-truth similarity matrix, `||W*||_F = 1`.
    pub w_star: DenseMatrix,
}

/// Fraction of the median `|x^T W* v|` below which draws are rejected.
pub const DEFAULT_MARGIN_FLOOR: f64 = 0.1;

pub fn synth_task(
    d1: usize,
    d2: usize,
    r_true: usize,
    n_train: usize,
    n_test: usize,
    seed: Seed,
) -> Result<SynthTask> {
    synth_task_with_floor(d1, d2, r_true, n_train, n_test, DEFAULT_MARGIN_FLOOR, seed)
}

pub fn synth_task_with_floor(
    d1: usize,
    d2: usize,
    r_true: usize,
    n_train: usize,
    n_test: usize,
    margin_floor: f64,
    seed: Seed,
) -> Result<SynthTask> {
    let mut w_star = low_rank_synth(d1, d2, r_true, seed)?;
    let nrm = w_star.frobenius_norm();
    w_star.scale_in_place(1.0 / nrm);

    let mut rng = seed.rng(Stream::Data);
    let raw_score = |x: &[f64], v: &[f64]| -> f64 {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let row = w_star.row(i);
            s += xi * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
        s
    };

    // Pilot draws fix the rejection threshold.
    let mut pilot: Vec<f64> = (0..501)
        .map(|_| {
            let x = normal_vec(&mut rng, d1, 0.0, 1.0);
            let v = normal_vec(&mut rng, d2, 0.0, 1.0);
            raw_score(&x, &v).abs()
        })
        .collect();
    pilot.sort_by(f64::total_cmp);
    let floor = margin_floor * pilot[pilot.len() / 2];

    let mut draw = |n: usize| -> Vec<PairSample> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = normal_vec(&mut rng, d1, 0.0, 1.0);
            let v = normal_vec(&mut rng, d2, 0.0, 1.0);
            let s = raw_score(&x, &v);
            if s.abs() < floor {
                continue;
            }
            out.push(PairSample {
                x,
                v,
                y: Label::from_score(s),
            });
        }
        out
    };
    let train = draw(n_train);
    let test = draw(n_test);
    Ok(SynthTask { train, test, w_star })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub seconds: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub padded: usize,
    /// Present on evaluation steps.
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    pub init_accuracy: f64,
    pub final_accuracy: f64,
}

impl TrainHistory {
    pub fn median_step_seconds(&self) -> f64 {
        let mut t: Vec<f64> = self.steps.iter().map(|s| s.seconds).collect();
        if t.is_empty() {
            return 0.0;
        }
        t.sort_by(f64::total_cmp);
        t[t.len() / 2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Evaluate test accuracy every this many steps (0: only at the end).
    pub eval_every: usize,
    /// Abort after this many consecutive rank-collapsed retractions.
    pub max_consecutive_padding: usize,
    /// Frobenius norm of the initial point.
    pub init_norm: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            eval_every: 0,
            max_consecutive_padding: 10,
            init_norm: 0.1,
        }
    }
}

/// Gaussian `d1 x d2` matrix truncated to rank `r` and rescaled.
pub fn initial_point(d1: usize, d2: usize, r: usize, norm: f64, seed: Seed) -> Result<FixedRankPoint> {
    if r == 0 || r > d1.min(d2) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} out of range for {d1}x{d2}"
        )));
    }
    let g = gaussian_matrix(d1, d2, 0.0, 1.0, seed.derive(Stream::Init as u64))?;
    let k = d1.min(d2).min(200).max(r);
    let out = fsvd(&g, k, r, &BidiagConfig::new(k).with_seed(seed))?;
    let p = FixedRankPoint::from_svd(out.svd)?;
    let c = norm / p.frobenius_norm();
    Ok(p.scaled(c))
}

pub fn train(
    train_set: &[PairSample],
    test_set: &[PairSample],
    cfg: &RsgdConfig,
    backend: SvdBackend,
) -> Result<(FixedRankPoint, TrainHistory)> {
    train_with(train_set, test_set, cfg, backend, TrainOptions::default())
}

pub fn train_with(
    train_set: &[PairSample],
    test_set: &[PairSample],
    cfg: &RsgdConfig,
    backend: SvdBackend,
    opts: TrainOptions,
) -> Result<(FixedRankPoint, TrainHistory)> {
    cfg.validate()?;
    let first = train_set
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    let (d1, d2) = (first.x.len(), first.v.len());
    if cfg.rank > d1.min(d2) {
        return Err(Error::InvalidArgument(format!(
            "rank {} exceeds min(d1, d2) = {}",
            cfg.rank,
            d1.min(d2)
        )));
    }
    if let Some(bad) = train_set
        .iter()
        .chain(test_set)
        .find(|s| s.x.len() != d1 || s.v.len() != d2)
    {
        return Err(Error::shape(
            "sample dimensions",
            format!("({d1}, {d2})"),
            format!("({}, {})", bad.x.len(), bad.v.len()),
        ));
    }

    let mut w = initial_point(d1, d2, cfg.rank, opts.init_norm, cfg.seed)?;
    let mut history = TrainHistory {
        init_accuracy: accuracy(&w, test_set),
        ..Default::default()
    };
    let mut batch_rng = cfg.seed.rng(Stream::Batch);
    let mut collapsed_run = 0;
    for step in 0..cfg.steps {
        let start = Instant::now();
        let idx: Vec<usize> = (0..cfg.batch)
            .map(|_| batch_rng.random_range(0..train_set.len()))
            .collect();
        let (loss, g) = hinge_grad_iter(idx.iter().map(|&i| &train_set[i]), idx.len(), &w)?;
        let next = rsgd_step_with(&w, &g, cfg, backend, cfg.seed.derive(step as u64))?;
        let seconds = start.elapsed().as_secs_f64();
        w = next.point;
        if next.padded > 0 {
            collapsed_run += 1;
            if collapsed_run >= opts.max_consecutive_padding {
                return Err(Error::Numerical(format!(
                    "retraction lost rank in {collapsed_run} consecutive steps (step {step}); \
                     try a smaller eta"
                )));
            }
        } else {
            collapsed_run = 0;
        }
        let test_accuracy = (opts.eval_every > 0 && (step + 1) % opts.eval_every == 0)
            .then(|| accuracy(&w, test_set));
        history.steps.push(StepRecord {
            step,
            loss,
            seconds,
            sigma_min: w.sigma_min(),
            sigma_max: w.sigma_max(),
            padded: next.padded,
            test_accuracy,
        });
    }
    history.final_accuracy = accuracy(&w, test_set);
    Ok((w, history))
}

/// Paired samples from CSV with header `x_0..x_{d1-1}, v_0..v_{d2-1}, y`.
pub fn read_pairs_csv<R: Read>(r: R) -> Result<Vec<PairSample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut y_col = None;
    for (i, h) in headers.iter().enumerate() {
        if let Some(k) = h.strip_prefix("x_") {
            xs.push((parse_index(k)?, i));
        } else if let Some(k) = h.strip_prefix("v_") {
            vs.push((parse_index(k)?, i));
        } else if h == "y" {
            y_col = Some(i);
        } else {
            return Err(Error::Format(format!("unexpected column '{h}'")));
        }
    }
    let y_col = y_col.ok_or_else(|| Error::Format("missing 'y' column".into()))?;
    xs.sort();
    vs.sort();
    for (expected, (got, _)) in xs.iter().enumerate().chain(vs.iter().enumerate()) {
        if expected != *got {
            return Err(Error::Format("x_/v_ columns must be numbered from 0 without gaps".into()));
        }
    }
    if xs.is_empty() || vs.is_empty() {
        return Err(Error::Format("need at least one x_ and one v_ column".into()));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Format("short record".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Format(e.to_string()))
        };
        let x = xs.iter().map(|&(_, i)| field(i)).collect::<Result<Vec<_>>>()?;
        let v = vs.iter().map(|&(_, i)| field(i)).collect::<Result<Vec<_>>>()?;
        out.push(PairSample {
            x,
            v,
            y: Label::from_value(field(y_col)?)?,
        });
    }
    Ok(out)
}

fn parse_index(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad column index '{s}'")))
}

pub fn load_pairs_csv(path: impl AsRef<Path>) -> Result<Vec<PairSample>> {
    read_pairs_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsvd::orthonormal_basis;

    fn point(d1: usize, d2: usize, r: usize, seed: u64) -> FixedRankPoint {
        let u = orthonormal_basis(&gaussian_matrix(d1, r, 0.0, 1.0, Seed(seed)).unwrap());
        let v = orthonormal_basis(&gaussian_matrix(d2, r, 0.0, 1.0, Seed(seed + 1)).unwrap());
        FixedRankPoint::new(u, (0..r).map(|i| 2.0 + i as f64).rev().collect(), v).unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn score_small_cases() {
        let w = FixedRankPoint::new(
            DenseMatrix::from_columns(3, &[e(3, 0)]),
            vec![1.0],
            DenseMatrix::from_columns(2, &[e(2, 0)]),
        )
        .unwrap();
        assert_eq!(score(&w, &e(3, 0), &e(2, 0)).unwrap(), 1.0);
        assert_eq!(score(&w, &[0.0; 3], &[5.0, 1.0]).unwrap(), 0.0);
        assert!(score(&w, &[0.0; 2], &[0.0; 2]).is_err());
    }

    #[test]
    fn score_matches_dense_and_is_bilinear() {
        let w = point(30, 20, 4, 1);
        let dense = w.to_dense();
        let mut rng = Seed(2).rng(Stream::Data);
        let x1 = normal_vec(&mut rng, 30, 0.0, 1.0);
        let x2 = normal_vec(&mut rng, 30, 0.0, 1.0);
        let v = normal_vec(&mut rng, 20, 0.0, 1.0);
        let wv = crate::linops::matvec(&dense, &v).unwrap();
        let want: f64 = x1.iter().zip(&wv).map(|(a, b)| a * b).sum();
        let got = score(&w, &x1, &v).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        let (a, b) = (0.7, -1.3);
        let mix: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
        let lhs = score(&w, &mix, &v).unwrap();
        let rhs = a * score(&w, &x1, &v).unwrap() + b * score(&w, &x2, &v).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn hinge_satisfied_and_single_violation() {
        let w = FixedRankPoint::new(
            DenseMatrix::from_columns(2, &[e(2, 0)]),
            vec![5.0],
            DenseMatrix::from_columns(2, &[e(2, 0)]),
        )
        .unwrap();
        let ok = vec![PairSample { x: e(2, 0), v: e(2, 0), y: Label::Similar }];
        let (loss, g) = hinge_grad(&ok, &w).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(g.max_abs(), 0.0);

        // f = 0 at x = e1 against a W living on e2.
        let w0 = FixedRankPoint::new(
            DenseMatrix::from_columns(2, &[e(2, 1)]),
            vec![1.0],
            DenseMatrix::from_columns(2, &[e(2, 1)]),
        )
        .unwrap();
        let (loss, g) = hinge_grad(&ok, &w0).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(g, DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        assert!(hinge_grad(&[], &w0).is_err());
    }

    #[test]
    fn hinge_gradient_matches_finite_differences() {
        let task = synth_task(12, 9, 3, 64, 1, Seed(3)).unwrap();
        let w = point(12, 9, 3, 5).scaled(0.3);
        let (_, g) = hinge_grad(&task.train, &w).unwrap();
        let dense = w.to_dense();
        // Loss as a function of dense W; no sample may sit near the kink.
        let loss_at = |m: &DenseMatrix| -> f64 {
            task.train
                .iter()
                .map(|s| {
                    let mv = crate::linops::matvec(m, &s.v).unwrap();
                    let f: f64 = s.x.iter().zip(&mv).map(|(a, b)| a * b).sum();
                    (1.0 - s.y.sign() * f).max(0.0)
                })
                .sum::<f64>()
                / task.train.len() as f64
        };
        let min_gap = task
            .train
            .iter()
            .map(|s| (1.0 - s.y.sign() * score(&w, &s.x, &s.v).unwrap()).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(min_gap > 1e-3, "sample too close to the kink: {min_gap}");
        let h = 1e-6;
        let mut rng = Seed(4).rng(Stream::Batch);
        for _ in 0..20 {
            let (i, j) = (rng.random_range(0..12), rng.random_range(0..9));
            let mut plus = dense.clone();
            plus.set(i, j, dense.get(i, j) + h);
            let mut minus = dense.clone();
            minus.set(i, j, dense.get(i, j) - h);
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let an = g.get(i, j);
            assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "({i},{j}): {fd} vs {an}");
        }
    }

    #[test]
    fn hinge_is_order_invariant() {
        let task = synth_task(10, 8, 2, 40, 1, Seed(6)).unwrap();
        let w = point(10, 8, 2, 7).scaled(0.2);
        let (l1, g1) = hinge_grad(&task.train, &w).unwrap();
        let mut rev = task.train.clone();
        rev.reverse();
        let (l2, g2) = hinge_grad(&rev, &w).unwrap();
        assert!((l1 - l2).abs() <= 1e-14);
        assert!(g1.sub(&g2).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn synthetic_labels_are_balanced_and_realizable() {
        for seed in 0..10 {
            let task = synth_task(16, 12, 3, 2000, 10, Seed(seed)).unwrap();
            let pos = task.train.iter().filter(|s| s.y == Label::Similar).count();
            let frac = pos as f64 / 2000.0;
            assert!((0.4..=0.6).contains(&frac), "seed {seed}: {frac}");
        }
        let task = synth_task(16, 12, 3, 500, 500, Seed(1)).unwrap();
        assert!((task.w_star.frobenius_norm() - 1.0).abs() < 1e-12);
        let svd = crate::linops::dense_svd_oracle(&task.w_star).unwrap();
        let star = FixedRankPoint::from_svd(svd.truncate(3)).unwrap();
        assert_eq!(accuracy(&star, &task.train), 1.0);
        assert_eq!(accuracy(&star, &task.test), 1.0);
    }

    #[test]
    fn zero_step_size_keeps_initial_point() {
        let task = synth_task(20, 15, 2, 200, 200, Seed(8)).unwrap();
        let mut cfg = RsgdConfig::new(2);
        cfg.eta = 0.0;
        cfg.steps = 5;
        cfg.seed = Seed(8);
        let (w, hist) = train(&task.train, &task.test, &cfg, SvdBackend::Fsvd { inner_k: 8 }).unwrap();
        let w0 = initial_point(20, 15, 2, 0.1, Seed(8)).unwrap();
        assert!(w.to_dense().sub(&w0.to_dense()).unwrap().max_abs() <= 1e-10);
        assert_eq!(hist.final_accuracy, hist.init_accuracy);
        assert_eq!(hist.steps.len(), 5);
    }

    #[test]
    fn zero_steps_reports_init_accuracy() {
        let task = synth_task(20, 15, 2, 50, 50, Seed(9)).unwrap();
        let mut cfg = RsgdConfig::new(2);
        cfg.steps = 0;
        let (_, hist) = train(&task.train, &task.test, &cfg, SvdBackend::Dense).unwrap();
        assert!(hist.steps.is_empty());
        assert_eq!(hist.final_accuracy, hist.init_accuracy);
    }

    #[test]
    fn training_learns_small_task() {
        let task = synth_task(24, 16, 2, 1000, 500, Seed(10)).unwrap();
        let mut cfg = RsgdConfig::new(2);
        cfg.steps = 600;
        cfg.seed = Seed(10);
        let (_, hist) = train(&task.train, &task.test, &cfg, SvdBackend::Fsvd { inner_k: 8 }).unwrap();
        assert!(hist.final_accuracy > 0.85, "{}", hist.final_accuracy);
        assert!(hist.steps.windows(2).all(|w| w[0].step < w[1].step));
        assert!(hist.steps.iter().all(|s| s.seconds >= 0.0));
    }

    #[test]
    fn pairs_csv() {
        let text = "x_0,x_1,v_0,y\n1,2,3,1\n0,0,1,-1\n";
        let pairs = read_pairs_csv(text.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].x, vec![1.0, 2.0]);
        assert_eq!(pairs[1].y, Label::Dissimilar);
        assert!(read_pairs_csv("x_0,v_0,y\n1,2,0\n".as_bytes()).is_err());
        assert!(read_pairs_csv("x_1,v_0,y\n1,2,1\n".as_bytes()).is_err());
        assert!(read_pairs_csv("x_0,v_0\n1,2\n".as_bytes()).is_err());
    }
}
