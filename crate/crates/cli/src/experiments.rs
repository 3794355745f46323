//! Built-in verification experiments. Each compares a Monte Carlo estimate
//! (or an exact computation) against a closed-form law from
//! `levy_prune::laws`, and computes all oracle values before sampling.

use levy_prune::laws;
use levy_prune::mechanism::Criticality;
use levy_prune::prune::{two_step, MarkedSampler};
use levy_prune::rng::Rng;
use levy_prune::sampler::{exact_sigma_quadratic, profile, tilted_profile};
use levy_prune::{AdmissibleFamily, GwScheme, Mechanism};
use serde::Serialize;

use crate::config::{ExperimentConfig, Params};
use crate::error::RunError;
use crate::report::{Report, Row};
use crate::runner::Runner;
use crate::stats::{column, ks_exponential, mean_se, ratio_se, Estimate, KOLMOGOROV_1PCT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    /// Function that supplies the oracle values.
    pub oracle: &'static str,
    pub description: &'static str,
}

pub const CATALOG: [ExperimentInfo; 12] = [
    ExperimentInfo {
        name: "height_law",
        oracle: "laws::exit_tail",
        description: "n P(H > a) for GW excursions against v(a) = N[H > a]",
    },
    ExperimentInfo {
        name: "sigma_laplace",
        oracle: "laws::sigma_laplace",
        description: "n E[1 - exp(-l sigma)] against psi^{-1}(l)",
    },
    ExperimentInfo {
        name: "prune_marginal",
        oracle: "laws::sigma_laplace, laws::exit_tail",
        description: "trees of psi_t pruned to q against trees of psi_q",
    },
    ExperimentInfo {
        name: "special_markov_intensity",
        oracle: "AdmissibleFamily::alpha, laws::exit_tail",
        description: "pruned-off components higher than eps per unit of retained mass",
    },
    ExperimentInfo {
        name: "two_step_markov",
        oracle: "laws::sigma_laplace, laws::exit_tail",
        description: "pruning t -> q in one pass against t -> theta -> q with fresh marks",
    },
    ExperimentInfo {
        name: "cond_sigma",
        oracle: "laws::cond_sigma_laplace",
        description: "joint Laplace transform of (sigma_t, sigma_q) through the conditional law",
    },
    ExperimentInfo {
        name: "ascension_tail",
        oracle: "laws::ascension_tail, laws::exit_tail",
        description: "N[A > q] = eta_q, and Girsanov-weighted N[H > a] for supercritical psi_q",
    },
    ExperimentInfo {
        name: "exit_tail_remark",
        oracle: "laws::exit_tail",
        description: "N[A_h >= q] from pruned trees against v^{psi_q}(h)",
    },
    ExperimentInfo {
        name: "size_bias",
        oracle: "laws::size_bias_identity",
        description: "size-biased pruned tree and pruned infinite tree against psi_q'(0) / psi_q'(psi_q^{-1}(l))",
    },
    ExperimentInfo {
        name: "spine_exponential",
        oracle: "laws::spine_rate",
        description: "spine cut of the pruned infinite tree is exponential with rate psi_q'(0)",
    },
    ExperimentInfo {
        name: "girsanov_gir2",
        oracle: "laws::gir2_value",
        description: "N^{psi^theta}[1 - exp(theta Z_a + psi(theta) int_0^a Z)] = -theta",
    },
    ExperimentInfo {
        name: "mz_cocycle",
        oracle: "AdmissibleFamily::mz",
        description: "m_z(t, q2) = m_z(t, q1) m_z(q1, q2), deterministic",
    },
];

type Levels = [Vec<Vec<f64>>; 2];
type Res<T> = Result<T, RunError>;

struct Ctx<'a> {
    name: &'static str,
    id: u64,
    fam: AdmissibleFamily,
    p: &'a Params,
    runner: Runner,
}

impl Ctx<'_> {
    fn n(&self) -> f64 {
        self.p.resolution as f64
    }

    fn sigmas(&self) -> f64 {
        self.p.tolerance_sigmas
    }

    fn stream(&self, arm: u64, level: u64) -> u64 {
        (self.id << 32) | (arm << 4) | level
    }

    /// Replicates at resolutions `n` and `2n`.
    fn two_levels<S, B, F>(&self, arm: u64, build: B, f: F) -> Res<Levels>
    where
        S: Sync,
        B: Fn(f64) -> levy_prune::Result<S>,
        F: Fn(&S, f64, &mut Rng) -> levy_prune::Result<Vec<f64>> + Sync,
    {
        self.two_levels_of(arm, self.p.replicates, build, f)
    }

    fn two_levels_of<S, B, F>(&self, arm: u64, count: u64, build: B, f: F) -> Res<Levels>
    where
        S: Sync,
        B: Fn(f64) -> levy_prune::Result<S>,
        F: Fn(&S, f64, &mut Rng) -> levy_prune::Result<Vec<f64>> + Sync,
    {
        let mut out: Levels = [Vec::new(), Vec::new()];
        for (level, slot) in out.iter_mut().enumerate() {
            let n = self.n() * (1 << level) as f64;
            let s = build(n)?;
            *slot = self.runner.replicates(self.stream(arm, level as u64), count, |rng| f(&s, n, rng))?;
        }
        Ok(out)
    }

    fn row(&self, param: String, levels: &Levels, j: usize, oracle: f64) -> Row {
        let [lo, hi] = levels;
        Row::monte_carlo(self.name, param, mean_se(&column(lo, j)), mean_se(&column(hi, j)), oracle, self.sigmas())
    }

    fn diff_row(&self, param: String, a: &Levels, b: &Levels, j: usize) -> Row {
        let d: Vec<Estimate> =
            (0..2).map(|l| mean_se(&column(&a[l], j)).minus(mean_se(&column(&b[l], j)))).collect();
        Row::monte_carlo(self.name, param, d[0], d[1], 0.0, self.sigmas())
    }

    fn cap(&self) -> Option<f64> {
        self.p.height_cap
    }
}

fn need<'a>(grid: &'a [f64], what: &str) -> Res<&'a [f64]> {
    if grid.is_empty() {
        Err(RunError::Config(format!("this experiment needs a non-empty {what}")))
    } else {
        Ok(grid)
    }
}

/// Pruning times, each after the marking time `t`.
fn later_times(p: &Params) -> Res<Vec<f64>> {
    let qs = need(&p.q_grid, "q_grid")?;
    if qs.iter().any(|&q| q <= p.t) {
        return Err(RunError::Config(format!("every q in q_grid must exceed t = {}", p.t)));
    }
    Ok(qs.to_vec())
}

fn times_or_t(p: &Params) -> Vec<f64> {
    if p.q_grid.is_empty() {
        vec![p.t]
    } else {
        p.q_grid.clone()
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Laplace and height-tail statistics of one tree, scaled to `N`.
fn tree_stats(n: f64, mass: f64, height: f64, lambdas: &[f64], heights: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = lambdas.iter().map(|&l| n * -(-l * mass).exp_m1()).collect();
    v.extend(heights.iter().map(|&a| if height > a { n } else { 0.0 }));
    v
}

fn stat_labels(q: f64, lambdas: &[f64], heights: &[f64]) -> Vec<String> {
    let mut v: Vec<String> = lambdas.iter().map(|&l| format!("q={};lambda={}", fmt(q), fmt(l))).collect();
    v.extend(heights.iter().map(|&a| format!("q={};a={}", fmt(q), fmt(a))));
    v
}

fn tree_oracles(fam: &AdmissibleFamily, q: f64, lambdas: &[f64], heights: &[f64]) -> Res<Vec<f64>> {
    let mech = fam.psi_at(q)?;
    let mut v = lambdas.iter().map(|&l| laws::sigma_laplace(&mech, l)).collect::<levy_prune::Result<Vec<_>>>()?;
    for &a in heights {
        v.push(laws::exit_tail(fam, q, a)?);
    }
    Ok(v)
}

/// Minimiser of `psi`; the tilt there is critical.
fn critical_tilt(mech: &Mechanism) -> levy_prune::Result<f64> {
    if mech.classify() != Criticality::Supercritical {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while mech.psi_d1(hi)? < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mech.psi_d1(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest root of `psi` by plain bisection.
fn largest_root(mech: &Mechanism) -> levy_prune::Result<f64> {
    let mut lo = critical_tilt(mech)?;
    if lo == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 2.0 * lo;
    while mech.psi(hi)? < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mech.psi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn height_law(cx: &Ctx) -> Res<Vec<Row>> {
    let heights = need(&cx.p.height_grid, "height_grid")?;
    let cap = max_of(heights);
    let mut rows = Vec::new();
    for (iq, q) in times_or_t(cx.p).into_iter().enumerate() {
        let oracle = tree_oracles(&cx.fam, q, &[], heights)?;
        let mech = cx.fam.psi_at(q)?;
        let lv = cx.two_levels(
            iq as u64,
            |n| GwScheme::new(&mech, n, None),
            |s, n, rng| {
                let pr = profile(s, 1, Some(cap), rng)?;
                // A capped profile is alive above the cap.
                let h = if pr.capped { f64::INFINITY } else { pr.height() };
                Ok(tree_stats(n, 0.0, h, &[], heights))
            },
        )?;
        for (j, label) in stat_labels(q, &[], heights).into_iter().enumerate() {
            rows.push(cx.row(label, &lv, j, oracle[j]));
        }
    }
    Ok(rows)
}

fn sigma_laplace(cx: &Ctx) -> Res<Vec<Row>> {
    let lambdas = need(&cx.p.lambda_grid, "lambda_grid")?;
    let mut rows = Vec::new();
    for (iq, q) in times_or_t(cx.p).into_iter().enumerate() {
        let oracle = tree_oracles(&cx.fam, q, lambdas, &[])?;
        let mech = cx.fam.psi_at(q)?;
        let lv = cx.two_levels(
            iq as u64,
            |n| GwScheme::new(&mech, n, None),
            |s, n, rng| {
                let pr = profile(s, 1, cx.cap(), rng)?;
                Ok(tree_stats(n, pr.total_mass(), 0.0, lambdas, &[]))
            },
        )?;
        for (j, label) in stat_labels(q, lambdas, &[]).into_iter().enumerate() {
            rows.push(cx.row(label, &lv, j, oracle[j]));
        }
    }
    Ok(rows)
}

fn prune_marginal(cx: &Ctx) -> Res<Vec<Row>> {
    let (lambdas, heights) = (&cx.p.lambda_grid[..], &cx.p.height_grid[..]);
    if lambdas.is_empty() && heights.is_empty() {
        return Err(RunError::Config("need lambda_grid or height_grid".into()));
    }
    let t = cx.p.t;
    let mut rows = Vec::new();
    for (iq, q) in later_times(cx.p)?.into_iter().enumerate() {
        let oracle = tree_oracles(&cx.fam, q, lambdas, heights)?;
        let mech = cx.fam.psi_at(q)?;
        let pruned = cx.two_levels(
            2 * iq as u64,
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, n, rng| {
                let st = s.tree(q, cx.cap(), rng)?.stats(q)?;
                Ok(tree_stats(n, st.mass, st.height, lambdas, heights))
            },
        )?;
        let direct = cx.two_levels(
            2 * iq as u64 + 1,
            |n| GwScheme::new(&mech, n, None),
            |s, n, rng| {
                let pr = profile(s, 1, cx.cap(), rng)?;
                Ok(tree_stats(n, pr.total_mass(), pr.height(), lambdas, heights))
            },
        )?;
        for (j, label) in stat_labels(q, lambdas, heights).into_iter().enumerate() {
            rows.push(cx.row(format!("{label};arm=pruned"), &pruned, j, oracle[j]));
            rows.push(cx.row(format!("{label};arm=direct"), &direct, j, oracle[j]));
            rows.push(cx.diff_row(format!("{label};arm=pruned-direct"), &pruned, &direct, j));
        }
    }
    Ok(rows)
}

fn special_markov_intensity(cx: &Ctx) -> Res<Vec<Row>> {
    let eps = need(&cx.p.height_grid, "height_grid")?;
    let t = cx.p.t;
    let qs = later_times(cx.p)?;
    let mut oracle = Vec::new();
    for &q in &qs {
        let alpha = cx.fam.alpha(t, q)?;
        for &e in eps {
            oracle.push(alpha * laws::exit_tail(&cx.fam, t, e)?);
        }
    }
    let q_max = max_of(&qs);
    let lv = cx.two_levels(
        0,
        |n| MarkedSampler::new(&cx.fam, n, t, q_max),
        |s, _, rng| {
            let m = s.tree(t, cx.cap(), rng)?;
            let mut v = Vec::new();
            for &q in &qs {
                v.push(m.stats(q)?.mass);
                let comps = m.pruned_components(q)?;
                for &e in eps {
                    v.push(comps.iter().filter(|c| !c.node_mark && c.height > e).count() as f64);
                }
            }
            Ok(v)
        },
    )?;
    let mut rows = Vec::new();
    let width = eps.len() + 1;
    for (iq, &q) in qs.iter().enumerate() {
        for (ie, &e) in eps.iter().enumerate() {
            let est: Vec<Estimate> = lv
                .iter()
                .map(|l| ratio_se(&column(l, iq * width + 1 + ie), &column(l, iq * width)))
                .collect();
            let label = format!("t={};q={};eps={}", fmt(t), fmt(q), fmt(e));
            rows.push(Row::monte_carlo(cx.name, label, est[0], est[1], oracle[iq * eps.len() + ie], cx.sigmas()));
        }
    }
    Ok(rows)
}

fn two_step_markov(cx: &Ctx) -> Res<Vec<Row>> {
    let (lambdas, heights) = (&cx.p.lambda_grid[..], &cx.p.height_grid[..]);
    let qs = later_times(cx.p)?;
    let &[mid, q] = &qs[..] else {
        return Err(RunError::Config("q_grid must be [theta, q] with t < theta < q".into()));
    };
    if mid >= q {
        return Err(RunError::Config("q_grid must be increasing".into()));
    }
    let t = cx.p.t;
    let oracle = tree_oracles(&cx.fam, q, lambdas, heights)?;
    let one = cx.two_levels(
        0,
        |n| MarkedSampler::new(&cx.fam, n, t, q),
        |s, n, rng| {
            let st = s.tree(q, cx.cap(), rng)?.stats(q)?;
            Ok(tree_stats(n, st.mass, st.height, lambdas, heights))
        },
    )?;
    let two = cx.two_levels(
        1,
        |n| MarkedSampler::new(&cx.fam, n, t, mid),
        |s, n, rng| {
            let m = s.tree(mid, cx.cap(), rng)?;
            let tree = two_step(&m, &cx.fam, mid, q, rng)?;
            Ok(tree_stats(n, tree.total_mass(), tree.height(), lambdas, heights))
        },
    )?;
    let mut rows = Vec::new();
    for (j, label) in stat_labels(q, lambdas, heights).into_iter().enumerate() {
        rows.push(cx.row(format!("{label};arm=one_pass"), &one, j, oracle[j]));
        rows.push(cx.row(format!("{label};arm=two_pass"), &two, j, oracle[j]));
        rows.push(cx.diff_row(format!("{label};arm=one-two"), &one, &two, j));
    }
    Ok(rows)
}

/// Weights on `sigma_q` in the joint transform `exp(-l sigma_t - mu sigma_q)`.
const MUS: [f64; 2] = [0.0, 1.0];

fn cond_sigma(cx: &Ctx) -> Res<Vec<Row>> {
    let lambdas = need(&cx.p.lambda_grid, "lambda_grid")?;
    let (t, r) = (cx.p.t, cx.p.r);
    let mut rows = Vec::new();
    for (iq, q) in later_times(cx.p)?.into_iter().enumerate() {
        let mq = cx.fam.psi_at(q)?;
        // Exponent of exp(-x sigma_q) after integrating out sigma_t.
        let mut xs = Vec::new();
        for &l in lambdas {
            let x = -laws::cond_sigma_laplace(&cx.fam, t, q, l, 1.0)?.ln();
            xs.extend(MUS.iter().map(|mu| x + mu));
        }
        let under_n = xs.iter().map(|&x| laws::sigma_laplace(&mq, x)).collect::<levy_prune::Result<Vec<_>>>()?;
        let under_pr =
            xs.iter().map(|&x| laws::sigma_laplace_pr(&mq, r, x)).collect::<levy_prune::Result<Vec<_>>>()?;
        let labels: Vec<String> = lambdas
            .iter()
            .flat_map(|&l| MUS.iter().map(move |&mu| format!("t={};q={};lambda={};mu={}", fmt(t), fmt(q), fmt(l), fmt(mu))))
            .collect();
        let lv = cx.two_levels(
            3 * iq as u64,
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, n, rng| {
                let m = s.tree(t, cx.cap(), rng)?;
                let (st, sq) = (m.stats(t)?.mass, m.stats(q)?.mass);
                Ok(lambdas
                    .iter()
                    .flat_map(|&l| MUS.iter().map(move |&mu| -n * (-l * st - mu * sq).exp_m1()))
                    .collect())
            },
        )?;
        for (j, label) in labels.iter().enumerate() {
            rows.push(cx.row(format!("{label};arm=pruned"), &lv, j, under_n[j]));
        }
        if mq.jumps().is_empty() {
            // Exact sigma_q under P_r, mixed over the conditional law.
            let (b, c) = (mq.b(), mq.c());
            let exact = cx.runner.replicates(cx.stream(3 * iq as u64 + 2, 0), cx.p.replicates, |rng| {
                let sq = exact_sigma_quadratic(b, c, r, rng)?;
                let mut v = Vec::new();
                for &l in lambdas {
                    let cond = laws::cond_sigma_laplace(&cx.fam, t, q, l, sq)?;
                    v.extend(MUS.iter().map(|mu| cond * (-mu * sq).exp()));
                }
                Ok(v)
            })?;
            for (j, label) in labels.iter().enumerate() {
                let est = mean_se(&column(&exact, j));
                rows.push(Row::banded(cx.name, format!("{label};r={};arm=exact", fmt(r)), est, 0.0, under_pr[j], cx.sigmas()));
            }
        }
    }
    Ok(rows)
}

fn ascension_tail(cx: &Ctx) -> Res<Vec<Row>> {
    let heights = need(&cx.p.height_grid, "height_grid")?;
    let qs = need(&cx.p.q_grid, "q_grid")?;
    let a_max = max_of(heights);
    let mut rows = Vec::new();
    for (iq, &q) in qs.iter().enumerate() {
        let mech = cx.fam.psi_at(q)?;
        let tail = laws::ascension_tail(&cx.fam, q)?;
        rows.push(Row::exact(cx.name, format!("q={};N[A>q]", fmt(q)), tail, largest_root(&mech)?, 1e-10));
        let oracle = tree_oracles(&cx.fam, q, &[], heights)?;
        let theta = match cx.p.theta {
            Some(th) => th,
            None => critical_tilt(&mech)?,
        };
        let lv = cx.two_levels(
            iq as u64,
            Ok,
            |&n, _, rng| {
                let w = tilted_profile(&mech, theta, n, a_max, rng)?;
                let pr = &w.profile;
                heights
                    .iter()
                    .map(|&a| {
                        if pr.capped || pr.height() > a {
                            let m = laws::girsanov_weight(&mech, theta, 0.0, pr.level_mass(a), pr.integrated_mass(a))?;
                            Ok(n / m)
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect()
            },
        )?;
        for (j, &a) in heights.iter().enumerate() {
            let label = format!("q={};a={};theta={}", fmt(q), fmt(a), fmt(theta));
            rows.push(cx.row(label, &lv, j, oracle[j]));
        }
    }
    Ok(rows)
}

fn exit_tail_remark(cx: &Ctx) -> Res<Vec<Row>> {
    let heights = need(&cx.p.height_grid, "height_grid")?;
    let t = cx.p.t;
    let mut rows = Vec::new();
    for (iq, q) in later_times(cx.p)?.into_iter().enumerate() {
        let oracle = tree_oracles(&cx.fam, q, &[], heights)?;
        let lv = cx.two_levels(
            iq as u64,
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, n, rng| {
                let st = s.tree(q, cx.cap(), rng)?.stats(q)?;
                Ok(tree_stats(n, 0.0, st.height, &[], heights))
            },
        )?;
        for (j, &h) in heights.iter().enumerate() {
            rows.push(cx.row(format!("q={};h={}", fmt(q), fmt(h)), &lv, j, oracle[j]));
        }
    }
    Ok(rows)
}

/// Spine length for infinite trees: the spine survives it with
/// probability `exp(-40)`.
fn spine_height(p: &Params, rate: f64) -> f64 {
    p.height_cap.unwrap_or(40.0 / rate)
}

fn size_bias(cx: &Ctx) -> Res<Vec<Row>> {
    let lambdas = need(&cx.p.lambda_grid, "lambda_grid")?;
    let t = cx.p.t;
    let mut rows = Vec::new();
    for (iq, q) in later_times(cx.p)?.into_iter().enumerate() {
        let oracle = lambdas
            .iter()
            .map(|&l| laws::size_bias_identity(&cx.fam, q, l))
            .collect::<levy_prune::Result<Vec<_>>>()?;
        let b = laws::spine_rate(&cx.fam, q)?;
        let h = spine_height(cx.p, b);
        let pruned = cx.two_levels(
            2 * iq as u64,
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, n, rng| {
                let sigma = s.tree(q, cx.cap(), rng)?.stats(q)?.mass;
                Ok(lambdas.iter().map(|&l| b * n * sigma * (-l * sigma).exp()).collect())
            },
        )?;
        let crt = cx.two_levels_of(
            2 * iq as u64 + 1,
            cx.p.infinite_tree_replicates.unwrap_or(cx.p.replicates),
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, _, rng| {
                let sigma = s.crt(q, h, rng)?.marked.stats(q)?.mass;
                Ok(lambdas.iter().map(|&l| (-l * sigma).exp()).collect())
            },
        )?;
        for (j, &l) in lambdas.iter().enumerate() {
            let label = format!("q={};lambda={}", fmt(q), fmt(l));
            rows.push(cx.row(format!("{label};arm=size_biased"), &pruned, j, oracle[j]));
            rows.push(cx.row(format!("{label};arm=infinite_tree"), &crt, j, oracle[j]));
        }
    }
    Ok(rows)
}

fn spine_exponential(cx: &Ctx) -> Res<Vec<Row>> {
    let t = cx.p.t;
    let mut rows = Vec::new();
    for (iq, q) in later_times(cx.p)?.into_iter().enumerate() {
        let rate = laws::spine_rate(&cx.fam, q)?;
        if !(rate > 0.0) {
            return Err(RunError::Numeric(levy_prune::Error::Domain(format!("psi_{q}'(0) must be positive"))));
        }
        let h = spine_height(cx.p, rate);
        let lv = cx.two_levels(
            iq as u64,
            |n| MarkedSampler::new(&cx.fam, n, t, q),
            |s, _, rng| Ok(vec![s.spine_cut(q, h, rng)?.unwrap_or(h)]),
        )?;
        rows.push(cx.row(format!("q={};mean", fmt(q)), &lv, 0, 1.0 / rate));
        let xs = column(&lv[0], 0);
        let d = ks_exponential(&xs, rate) * (xs.len() as f64).sqrt();
        rows.push(Row {
            experiment: cx.name.to_string(),
            parameter: format!("q={};ks_sqrt_n_d", fmt(q)),
            mc_estimate: d,
            mc_stderr: None,
            oracle_value: KOLMOGOROV_1PCT,
            z_score: None,
            pass: d <= KOLMOGOROV_1PCT,
        });
    }
    Ok(rows)
}

fn girsanov_gir2(cx: &Ctx) -> Res<Vec<Row>> {
    let heights = need(&cx.p.height_grid, "height_grid")?;
    let qs = times_or_t(cx.p);
    let a_max = max_of(heights);
    let mut rows = Vec::new();
    for (iq, q) in qs.into_iter().enumerate() {
        let mech = cx.fam.psi_at(q)?;
        let theta = match cx.p.theta {
            Some(th) => th,
            None => mech.eta()?,
        };
        let oracle = laws::gir2_value(&mech, theta)?;
        let lv = cx.two_levels(
            iq as u64,
            Ok,
            |&n, _, rng| {
                let w = tilted_profile(&mech, theta, n, a_max, rng)?;
                let pr = &w.profile;
                heights
                    .iter()
                    .map(|&a| {
                        let m = laws::girsanov_weight(&mech, theta, 0.0, pr.level_mass(a), pr.integrated_mass(a))?;
                        Ok(n * (1.0 - 1.0 / m))
                    })
                    .collect()
            },
        )?;
        for (j, &a) in heights.iter().enumerate() {
            rows.push(cx.row(format!("q={};theta={};a={}", fmt(q), fmt(theta), fmt(a)), &lv, j, oracle));
        }
    }
    Ok(rows)
}

fn mz_cocycle(cx: &Ctx) -> Res<Vec<Row>> {
    let t = cx.p.t;
    let mut times = later_times(cx.p)?;
    times.sort_by(f64::total_cmp);
    let mut sizes = vec![0.5, 1.0, 2.0];
    for p in cx.fam.psi_at(t)?.jumps() {
        if let levy_prune::Primitive::PointMass { z, .. } = *p {
            if !sizes.contains(&z) {
                sizes.push(z);
            }
        }
    }
    let mut rows = Vec::new();
    for &z in &sizes {
        for (i, &q1) in times.iter().enumerate() {
            for &q2 in &times[i + 1..] {
                let direct = cx.fam.mz(t, q2, z)?;
                let split = cx.fam.mz(t, q1, z)? * cx.fam.mz(q1, q2, z)?;
                let label = format!("z={};t={};q1={};q2={}", fmt(z), fmt(t), fmt(q1), fmt(q2));
                rows.push(Row::exact(cx.name, label, split, direct, 1e-12));
            }
        }
    }
    if rows.is_empty() {
        return Err(RunError::Config("q_grid needs at least two times after t".into()));
    }
    Ok(rows)
}

pub fn find(name: &str) -> Option<&'static ExperimentInfo> {
    CATALOG.iter().find(|e| e.name == name)
}

/// Runs experiment `name` on `workers` threads (0 for all cores).
pub fn run(cfg: &ExperimentConfig, name: &str, workers: usize) -> Res<Report> {
    let Some(id) = CATALOG.iter().position(|e| e.name == name) else {
        return Err(RunError::Config(format!("unknown experiment '{name}'")));
    };
    if let Some(named) = &cfg.experiment {
        if named != name {
            return Err(RunError::Config(format!("config is for '{named}', not '{name}'")));
        }
    }
    cfg.validate()?;
    let cx = Ctx {
        name: CATALOG[id].name,
        id: id as u64,
        fam: cfg.build_family()?,
        p: &cfg.params,
        runner: Runner::new(cfg.params.seed, workers)?,
    };
    let rows = match cx.name {
        "height_law" => height_law(&cx),
        "sigma_laplace" => sigma_laplace(&cx),
        "prune_marginal" => prune_marginal(&cx),
        "special_markov_intensity" => special_markov_intensity(&cx),
        "two_step_markov" => two_step_markov(&cx),
        "cond_sigma" => cond_sigma(&cx),
        "ascension_tail" => ascension_tail(&cx),
        "exit_tail_remark" => exit_tail_remark(&cx),
        "size_bias" => size_bias(&cx),
        "spine_exponential" => spine_exponential(&cx),
        "girsanov_gir2" => girsanov_gir2(&cx),
        _ => mz_cocycle(&cx),
    }?;
    Ok(Report { experiment: cx.name.to_string(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilt_and_root() {
        let m = Mechanism::quadratic(-1.0, 1.0).unwrap();
        assert!((critical_tilt(&m).unwrap() - 0.5).abs() < 1e-14);
        assert!((largest_root(&m).unwrap() - 1.0).abs() < 1e-14);
        let sub = Mechanism::quadratic(1.0, 1.0).unwrap();
        assert_eq!(largest_root(&sub).unwrap(), 0.0);
    }

    #[test]
    fn catalog_names_are_unique() {
        for (i, a) in CATALOG.iter().enumerate() {
            assert!(CATALOG[i + 1..].iter().all(|b| b.name != a.name));
            assert!(a.oracle.contains("::"));
        }
    }
}
