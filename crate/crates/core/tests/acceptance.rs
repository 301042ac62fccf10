//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Reference values are computed here from closed forms that do not go through the
//! library code paths being checked.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use edgeworth_core::corrector::corrector_terms;
use edgeworth_core::corrector::discrepancy_order;
use edgeworth_core::corrector::normalize;
use edgeworth_core::experiments::{
    density_experiment, kac_rice_roots, occupation_time, rate_experiment, DensityParams,
    ExperimentResult, OccupationParams, RateMode, RateParams, RootsParams, RowFlag,
};
use edgeworth_core::hermite::{duality_check, hermite_inner};
use edgeworth_core::kernels::{mollify, KernelParams, SuperKernel};
use edgeworth_core::multiindex::enumerate_up_to;
use edgeworth_core::sampling::{
    ks_critical_value_1pct, ks_two_sample, DoeblinCert, McConfig, NummelinSampler, RngStream,
};
use edgeworth_core::{
    ComponentDistribution, ModelSpec, MultiIndex, Polynomial, Summand, TestFunction,
};
use edgeworth_core::moments::ContinuousDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORKERS: usize = 4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec()).unwrap()
}

fn iid1(n: usize, dist: ComponentDistribution) -> ModelSpec {
    ModelSpec::iid(n, Summand::identity(1, dist)).unwrap()
}

/// Probabilists' Hermite polynomials up to degree 6.
fn he(m: u32, x: f64) -> f64 {
    let x2 = x * x;
    match m {
        0 => 1.0,
        1 => x,
        2 => x2 - 1.0,
        3 => x * (x2 - 3.0),
        4 => x2 * x2 - 6.0 * x2 + 3.0,
        5 => x * (x2 * x2 - 10.0 * x2 + 15.0),
        6 => x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0,
        _ => unreachable!(),
    }
}

fn random_component(rng: &mut ChaCha8Rng) -> ComponentDistribution {
    match rng.random_range(0..4) {
        0 => ComponentDistribution::two_point(rng.random_range(0.1..0.9)).unwrap(),
        1 => ComponentDistribution::UniformCentered,
        2 => ComponentDistribution::Rademacher,
        _ => ComponentDistribution::StandardNormal,
    }
}

fn random_model(rng: &mut ChaCha8Rng, d: usize, n: usize) -> ModelSpec {
    let summands = (0..n)
        .map(|_| {
            let c: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| rng.random_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 })
                        .collect()
                })
                .collect();
            let comps = (0..d).map(|_| random_component(rng)).collect();
            Summand::new(c, comps).unwrap()
        })
        .collect();
    normalize(&ModelSpec::from_summands(summands).unwrap()).unwrap()
}

/// `(1/6) Σ_{ordered (i,j,k)} c_n(i,j,k) He_{(i,j,k)}(x)` with
/// `c_n(i,j,k) = (1/n) Σ_r Σ_l C^r_{il} C^r_{jl} C^r_{kl} E[Y_l³]`.
fn first_order_oracle(model: &ModelSpec, x: &[f64]) -> f64 {
    let d = model.d();
    let n = model.n();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let mut c = 0.0;
                for r in 0..n {
                    let s = model.summand(r);
                    for (l, comp) in s.components.iter().enumerate() {
                        c += s.c[i][l] * s.c[j][l] * s.c[k][l] * comp.raw_moment(3);
                    }
                }
                c /= n as f64;
                let mut count = vec![0u32; d];
                for t in [i, j, k] {
                    count[t] += 1;
                }
                let h: f64 = count.iter().zip(x).map(|(&m, &xi)| he(m, xi)).product();
                total += c * h / 6.0;
            }
        }
    }
    total
}

fn criterion1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for (d, n) in [(1, 10), (2, 100), (2, 10), (1, 100), (2, 10)] {
        let model = random_model(&mut rng, d, n);
        let h_gamma = &corrector_terms(&model, 1).unwrap()[0];
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            worst = worst.max((h_gamma.eval(&x) - first_order_oracle(&model, &x)).abs());
            worst_gap = worst_gap.max(discrepancy_order(&model, 1, &x).unwrap().abs());
        }
    }
    verdict(
        worst <= 1e-12 && worst_gap <= 1e-12,
        format!("max |H_Γ1 − H_1| = {worst:.2e} vs oracle, {worst_gap:.2e} vs library explicit form (tol 1e-12)"),
    )
}

fn criterion2() -> Verdict {
    let p = 0.2;
    let (a, b) = (((1.0 - p) / p as f64).sqrt(), -(p / (1.0 - p) as f64).sqrt());
    let mu3 = p * a.powi(3) + (1.0 - p) * b.powi(3);
    let x = 0.7;
    let expected = -mu3 * mu3 / 72.0 * he(6, x);
    let scaled: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| {
            let model = iid1(n, ComponentDistribution::two_point(p).unwrap());
            n as f64 * discrepancy_order(&model, 2, &[x]).unwrap()
        })
        .collect();
    let spread = scaled.iter().fold(0.0f64, |m, v| m.max((v - scaled[0]).abs()));
    let off = scaled.iter().fold(0.0f64, |m, v| m.max((v - expected).abs()));
    verdict(
        spread <= 1e-9 && off <= 1e-9,
        format!(
            "n·gap = {:.12} at x = {x}; spread {spread:.2e}, distance to −μ3²H6(x)/72 {off:.2e} (tol 1e-9)",
            scaled[0]
        ),
    )
}

fn criterion3() -> Verdict {
    let p = 0.2;
    let dist = ComponentDistribution::two_point(p).unwrap();
    let (mu3, mu4) = (dist.raw_moment(3), dist.raw_moment(4));
    let mut f = Polynomial::zero(1);
    f.add_term(mi(&[3]), 1.0);
    f.add_term(mi(&[4]), 1.0);
    let params = RateParams {
        ns: vec![8, 16, 32, 64, 128, 256],
        f: TestFunction::Polynomial { poly: f },
        gamma: None,
        orders: vec![0, 1, 2, 3],
        mode: RateMode::Exact,
    };
    let r = rate_experiment(&iid1(1, dist), &params).unwrap();
    // E S_n³ + E S_n⁴ = μ3/√n + 3 + (μ4 − 3)/n for iid standardized summands
    let oracle_err = r
        .rows
        .iter()
        .map(|row| {
            let n = row.sweep;
            (row.estimate - (mu3 / n.sqrt() + 3.0 + (mu4 - 3.0) / n)).abs()
        })
        .fold(0.0, f64::max);
    let mut pass = oracle_err <= 1e-12;
    let mut parts = vec![format!("moment oracle {oracle_err:.1e}")];
    let mut prev = f64::INFINITY;
    for order in 0..=3usize {
        let fit = r.fit(&format!("N={order}")).unwrap();
        let bound = -((order + 1) as f64) / 2.0 + 0.3;
        // an identically vanishing error (to rounding) has no finite slope: it satisfies any rate
        let (slope, ok) = if fit.all_degenerate {
            let max_err = r.rows_of(&format!("N={order}")).map(|row| row.error).fold(0.0, f64::max);
            parts.push(format!("N={order}: exact (max err {max_err:.1e})"));
            (f64::NEG_INFINITY, true)
        } else {
            let s = fit.fitted_slope.unwrap_or(f64::NAN);
            parts.push(format!("N={order}: slope {s:.3} (≤ {bound:.2})"));
            (s, s <= bound)
        };
        pass &= ok && slope <= prev;
        prev = slope;
    }
    verdict(pass, parts.join("; "))
}

fn random_poly(rng: &mut ChaCha8Rng, d: usize) -> Polynomial {
    let mut p = Polynomial::zero(d);
    for beta in enumerate_up_to(d, 6) {
        if rng.random::<f64>() < 0.6 {
            p.add_term(beta, rng.random_range(-2.0..2.0));
        }
    }
    p
}

fn criterion4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for d in 1..=3 {
        for beta in enumerate_up_to(d, 4) {
            for _ in 0..5 {
                let (lhs, rhs) = duality_check(&beta, &random_poly(&mut rng, d));
                worst = worst.max((lhs - rhs).abs());
                checks += 1;
            }
        }
    }
    let mut exact = true;
    for d in 1..=3 {
        let all = enumerate_up_to(d, 6);
        for b1 in &all {
            for b2 in &all {
                let expected = if b1 == b2 {
                    b1.mult().iter().map(|&m| (1..=m as u64).product::<u64>() as f64).product()
                } else {
                    0.0
                };
                exact &= hermite_inner(b1, b2) == expected;
            }
        }
    }
    verdict(
        worst <= 1e-12 && exact,
        format!("duality max gap {worst:.1e} over {checks} pairs (tol 1e-12); orthogonality exact: {exact}"),
    )
}

fn criterion5() -> Verdict {
    let params = RootsParams {
        first: ComponentDistribution::UniformCentered,
        second: ComponentDistribution::UniformCentered,
        ns: vec![100],
        mc: McConfig::new(2000, 5, WORKERS),
        common_random_numbers: false,
    };
    let r = match kac_rice_roots(&params) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("aborted: {e}")),
    };
    let limit = 1.0 / 3f64.sqrt();
    let g = r.rows_of("G").next().unwrap();
    let y = r.rows_of("Y").next().unwrap();
    let (rg, ry) = ((g.estimate - limit).abs() / limit, (y.estimate - limit).abs() / limit);
    let max_count = r.summary["max_root_count"][0].as_u64().unwrap();
    verdict(
        rg <= 0.02 && ry <= 0.03 && max_count <= 200,
        format!(
            "E N/n: Gaussian {:.4} ({:.2}% off, tol 2%), uniform {:.4} ({:.2}% off, tol 3%); max count {max_count} ≤ 200",
            g.estimate,
            100.0 * rg,
            y.estimate,
            100.0 * ry
        ),
    )
}

fn criterion6() -> Verdict {
    let dist = ContinuousDistribution::try_from(ComponentDistribution::UniformCentered).unwrap();
    let cert = DoeblinCert::uniform_centered_default(&dist).unwrap();
    let sampler = NummelinSampler::new(dist.clone(), cert).unwrap();
    let m = 100_000;
    let mut rng = RngStream::new(6, 0);
    let mut split = Vec::with_capacity(m);
    let mut chi = 0usize;
    for _ in 0..m {
        let draw = sampler.sample(&mut rng).unwrap();
        chi += usize::from(draw.chi);
        split.push(draw.value);
    }
    let mut rng = RngStream::new(6, 1);
    let direct: Vec<f64> = (0..m).map(|_| dist.sample(&mut rng)).collect();
    let ks = ks_two_sample(&split, &direct);
    let crit = ks_critical_value_1pct(m, m);
    let q = cert.eps * cert.m_r;
    let phat = chi as f64 / m as f64;
    let se = (q * (1.0 - q) / m as f64).sqrt();
    verdict(
        ks < crit && (phat - q).abs() <= 3.0 * se,
        format!("KS {ks:.5} < {crit:.5}; P(χ=1) {phat:.5} vs ε·m_r {q:.5} (3 SE = {:.5})", 3.0 * se),
    )
}

fn criterion7() -> Verdict {
    let gauss = DensityParams {
        ns: vec![1],
        order: 0,
        point: vec![0.0],
        delta_scale: 0.01,
        min_hits: 100,
        mc: McConfig::new(1_000_000, 7, WORKERS),
        common_random_numbers: false,
    };
    let g = density_experiment(&iid1(1, ComponentDistribution::StandardNormal), &gauss).unwrap();
    let row = &g.rows[0];
    let density0 = 1.0 / (2.0 * PI).sqrt();
    let gauss_ok = (row.estimate - density0).abs() <= 3.0 * row.se.unwrap();

    let uniform = DensityParams {
        ns: vec![64, 256, 1024],
        order: 2,
        delta_scale: 1.0,
        ..gauss
    };
    let u = density_experiment(&iid1(1, ComponentDistribution::UniformCentered), &uniform).unwrap();
    let errs: Vec<f64> = u.rows.iter().map(|r| r.error).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let describe: Vec<String> = u
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={}: err {:.2e} (se {:.1e}, {:?})",
                r.sweep,
                r.error,
                r.se.unwrap(),
                r.flag
            )
        })
        .collect();
    verdict(
        gauss_ok && monotone,
        format!(
            "Gaussian {:.5} ± {:.5} vs {density0:.5}: {}; uniform N=2 errors decreasing: {monotone} [{}]",
            row.estimate,
            row.se.unwrap(),
            if gauss_ok { "within 3 SE" } else { "outside 3 SE" },
            describe.join(", ")
        ),
    )
}

fn criterion8() -> Verdict {
    let params = OccupationParams {
        distribution: ComponentDistribution::Rademacher,
        rho: 0.5,
        ns: vec![1_000, 10_000],
        brownian_steps: 10_000,
        mc: McConfig::new(10_000, 8, WORKERS),
        common_random_numbers: false,
    };
    let r = occupation_time(&params).unwrap();
    let at = |series: &str, n: f64| r.rows_of(series).find(|row| row.sweep == n).unwrap().clone();
    let g = at("G", 1e4);
    let b = at("brownian", 1e4);
    let local = (2.0 / PI).sqrt();
    let rel_gb = (g.estimate - b.estimate).abs() / b.estimate;
    let rel_b = (b.estimate - local).abs() / local;
    let gap3 = at("Y-G", 1e3).estimate.abs();
    let gap4 = at("Y-G", 1e4).estimate.abs();
    let (a, bb, c) = (rel_gb <= 0.05, rel_b <= 0.02, gap4 < gap3);
    verdict(
        a && bb && c,
        format!(
            "E L_n(G) {:.4} vs Brownian {:.4}: {:.2}% (tol 5%) {}; Brownian vs √(2/π) {:.4}: {:.2}% (tol 2%) {}; \
             rademacher gap n=1e3 {gap3:.4}, n=1e4 {gap4:.4} {}",
            g.estimate,
            b.estimate,
            100.0 * rel_gb,
            if a { "ok" } else { "FAIL" },
            local,
            100.0 * rel_b,
            if bb { "ok" } else { "FAIL" },
            if c { "ok" } else { "FAIL" },
        ),
    )
}

fn criterion9() -> Verdict {
    let k = SuperKernel::build(KernelParams::default()).unwrap();
    let mass_err = (k.moment(0) - 1.0).abs();
    let worst_moment = (1..=6).map(|j| k.moment(j).abs()).fold(0.0, f64::max);
    let f = |t: f64| 0.5 * t.powi(4) - t.powi(3) + 2.0 * t * t - 3.0 * t + 1.0;
    let mut repro: f64 = 0.0;
    for delta in [1.0, 0.5, 0.1, 0.01] {
        for x in [-2.0, -0.3, 0.0, 0.8, 2.5] {
            let v = mollify(f, f64::NEG_INFINITY..=f64::INFINITY, &k, delta, x).unwrap();
            repro = repro.max((v - f(x)).abs());
        }
    }
    verdict(
        mass_err <= 1e-8 && worst_moment <= 1e-6 && repro <= 1e-6,
        format!("|∫φ − 1| {mass_err:.1e}; max |∫y^kφ| {worst_moment:.1e}; degree-4 reproduction {repro:.1e}"),
    )
}

fn csv_bytes(r: &ExperimentResult) -> Vec<u8> {
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    buf
}

fn criterion10() -> Verdict {
    let rate = RateParams {
        ns: vec![8, 32],
        f: TestFunction::Cosine { omega: vec![1.0] },
        gamma: None,
        orders: vec![0, 2],
        mode: RateMode::MonteCarlo {
            mc: McConfig::new(20_000, 10, WORKERS),
            common_random_numbers: false,
        },
    };
    let model = iid1(1, ComponentDistribution::two_point(0.3).unwrap());
    let roots = RootsParams {
        first: ComponentDistribution::Rademacher,
        second: ComponentDistribution::UniformCentered,
        ns: vec![10, 30],
        mc: McConfig::new(300, 10, WORKERS),
        common_random_numbers: false,
    };
    let runs: [&dyn Fn() -> ExperimentResult; 2] = [
        &|| rate_experiment(&model, &rate).unwrap(),
        &|| kac_rice_roots(&roots).unwrap(),
    ];
    let same = runs.iter().all(|run| csv_bytes(&run()) == csv_bytes(&run()));
    let flags_ok = rate_experiment(&model, &rate)
        .unwrap()
        .rows
        .iter()
        .all(|r| r.flag != RowFlag::Degenerate);
    verdict(same && flags_ok, format!("rate and roots CSVs byte-identical on rerun: {same}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 10] = [
        ("corrector identity, order 1", criterion1, Duration::from_secs(1)),
        ("corrector discrepancy, order 2", criterion2, Duration::from_secs(5)),
        ("moment-oracle rate", criterion3, Duration::from_secs(10)),
        ("duality and orthogonality", criterion4, Duration::from_secs(1)),
        ("Kac-Rice limit", criterion5, Duration::from_secs(180)),
        ("Nummelin splitting", criterion6, Duration::from_secs(30)),
        ("approximate density", criterion7, Duration::from_secs(120)),
        ("occupation time", criterion8, Duration::from_secs(180)),
        ("super kernel", criterion9, Duration::from_secs(1)),
        ("determinism", criterion10, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = v.pass && in_time;
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} [{}] {name}: {} ({:.2}s, budget {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
