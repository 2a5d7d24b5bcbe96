//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bvlab::conjugation::{
    box_affine_decay, box_conjugator, cantor_weighted_map, conjugate, conjugate_log_deriv_variation,
    conjugate_proximity, geometric_mean_conjugator, parabolic_bump_pair, CantorWeightSpec,
    ParabolicBumpSpec,
};
use bvlab::distortion::{
    geometric_grid, mather_lower_bound, partition_series, stability_check, total_variation_fn,
    total_variation_log_deriv, var_log_deriv_iterate, var_log_deriv_multi, var_log_deriv_table,
    RefinementSchedule,
};
use bvlab::map::{CircleMap, FourierDiffeo, Order, SampledDiffeo};
use bvlab::mobius::MobiusMap;
use bvlab::pa::{minakawa_predicate, pa_var_sequence, rat, two_interval_map, DEFAULT_BREAKPOINT_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn smooth_h(eps: f64) -> CircleMap {
    FourierDiffeo::single_mode(0.0, eps).unwrap().into()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `(Dfⁿ(y))^{1/n}` as a plain product of derivatives along the orbit.
fn nth_root_of_iterate_derivative(f: &CircleMap, y: f64, n: usize) -> f64 {
    let mut x = y;
    let mut log_sum = 0.0;
    for _ in 0..n {
        log_sum += f.deriv(x).unwrap().ln();
        x = f.eval(x).unwrap();
    }
    (log_sum / n as f64).exp()
}

fn conjugate_derivative_identity() -> Outcome {
    let maps: Vec<CircleMap> = vec![
        FourierDiffeo::new(0.2, vec![(0.03, 0.05), (0.01, -0.005)]).unwrap().into(),
        FourierDiffeo::single_mode(golden(), 0.3).unwrap().into(),
        FourierDiffeo::new(0.7, vec![(0.02, 0.0), (0.0, 0.01), (0.003, 0.002)]).unwrap().into(),
    ];
    let grid = 4096;
    let mut worst = 0.0f64;
    for f in &maps {
        for n in [1, 2, 5, 10, 20, 50] {
            let h: CircleMap = geometric_mean_conjugator(f, n, grid).unwrap().into();
            let g = conjugate(&h, f);
            for i in 0..grid {
                let y = i as f64 / grid as f64;
                let target = nth_root_of_iterate_derivative(f, y, n);
                let d = g.deriv(h.lift(y).unwrap()).unwrap();
                worst = worst.max((d / target - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-6, format!("max relative error {worst:.3e} (tol 1e-6)"))
}

fn rotation_approximation_trend() -> Outcome {
    let rho = golden();
    let f = conjugate(&smooth_h(0.05), &CircleMap::Rotation(rho));
    let schedule = RefinementSchedule::default();
    let var_f = total_variation_log_deriv(&f, &schedule).unwrap().value;
    let dlog_f = (0..4096)
        .map(|i| f.deriv(i as f64 / 4096.0).unwrap().ln().abs())
        .fold(0.0, f64::max);
    let ns = [1, 2, 5, 10, 20, 50];
    let mut var = Vec::new();
    let mut dlog = Vec::new();
    for n in ns {
        let h: CircleMap = geometric_mean_conjugator(&f, n, 4096).unwrap().into();
        let p = conjugate_proximity(&h, &f, rho, &schedule, 4096).unwrap();
        var.push(p.var.value);
        dlog.push(p.dlog);
    }
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let last = ns.len() - 1;
    let ok = var[last] <= var_f / 10.0 && dlog[last] <= dlog_f / 5.0 && monotone(&var) && monotone(&dlog);
    ensure(
        ok,
        format!(
            "var {:.3e} -> {:.3e} (bound {:.3e}), dlog {:.3e} -> {:.3e} (bound {:.3e}), monotone {}/{}",
            var[0],
            var[last],
            var_f / 10.0,
            dlog[0],
            dlog[last],
            dlog_f / 5.0,
            monotone(&var),
            monotone(&dlog)
        ),
    )
}

/// Hyperbolic translation taking 0 to `r`, then a rotation.
fn mobius_with_origin_image(r: f64, phi: f64) -> MobiusMap {
    let k = ((1.0 + r) / (1.0 - r)).sqrt();
    MobiusMap::rotation_matrix(phi).compose(&MobiusMap::new([[k, 0.0], [0.0, 1.0 / k]]).unwrap())
}

fn disk_variation_closed_form() -> Outcome {
    let schedule = RefinementSchedule::default();
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        let m = mobius_with_origin_image(r, 0.37 * i as f64);
        let numeric = total_variation_log_deriv(&CircleMap::Mobius(m), &schedule).unwrap().value;
        let closed = 4.0 * ((1.0 + r) / (1.0 - r)).ln();
        worst = worst.max((numeric / closed - 1.0).abs());
    }
    ensure(worst <= 1e-6, format!("max relative error {worst:.3e} over r = 0.1..0.9 (tol 1e-6)"))
}

fn mobius_growth_trichotomy() -> Outcome {
    let schedule = RefinementSchedule::default();
    // elliptic: closed form for every n, partition estimate on a grid
    let d = MobiusMap::new([[1.5, 0.0], [0.0, 1.0 / 1.5]]).unwrap();
    let ell = MobiusMap::rotation_matrix(std::f64::consts::PI / 5.0).conjugate_by(&d);
    let ell_map = CircleMap::Mobius(ell);
    let var1 = total_variation_log_deriv(&ell_map, &schedule).unwrap().value;
    let closed_max = (1..=500u64)
        .map(|n| ell.pow(n).var_log_deriv_closed())
        .fold(0.0, f64::max);
    let ns = geometric_grid(500);
    let numeric_max = var_log_deriv_multi(&ell_map, &ns, &schedule.clone().with_max_level(16))
        .unwrap()
        .iter()
        .map(|e| e.value)
        .fold(0.0, f64::max);
    let elliptic_ok = closed_max <= 2.0 * var1 && numeric_max <= 2.0 * var1;

    // parabolic: a dyadic partition cannot resolve the 1/n² peak of Df^500, so
    // the closed form is used at n = 500 and cross-checked at n = 20 with the
    // extremal points added
    let par = MobiusMap::new([[1.0, 1.0], [0.0, 1.0]]).unwrap();
    let par_map = CircleMap::Mobius(par);
    let par1 = total_variation_log_deriv(&par_map, &schedule).unwrap().value;
    let par500 = par.pow(500).var_log_deriv_closed() / 500.0;
    let (hi, lo) = par.pow(20).extremal_points().unwrap();
    let peaks = schedule.clone().with_extra_points(vec![hi, lo]);
    let par20_num = var_log_deriv_iterate(&par_map, 20, &peaks).unwrap().value;
    let par20_closed = par.pow(20).var_log_deriv_closed();
    let parabolic_ok = par500 <= par1 / 20.0 && (par20_num / par20_closed - 1.0).abs() < 1e-4;

    // hyperbolic: orbit partition estimate at n = 200
    let hyp = CircleMap::Mobius(MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap());
    let hyp200 = var_log_deriv_iterate(&hyp, 200, &schedule).unwrap().value / 200.0;
    let expected = 4.0 * 2.0 * 2f64.ln();
    let hyperbolic_ok = (hyp200 / expected - 1.0).abs() <= 0.01;
    ensure(
        elliptic_ok && parabolic_ok && hyperbolic_ok,
        format!(
            "elliptic max var {:.4} / {:.4} (bound {:.4}); parabolic var/n {:.4} (bound {:.4}, n=20 check {:.2e}); hyperbolic var/n {:.6} vs {:.6}",
            closed_max,
            numeric_max,
            2.0 * var1,
            par500,
            par1 / 20.0,
            (par20_num / par20_closed - 1.0).abs(),
            hyp200,
            expected
        ),
    )
}

fn pa_exact_distortion() -> Outcome {
    let f = two_interval_map(rat(2, 1), rat(1, 3), rat(4, 5)).unwrap();
    let seq = pa_var_sequence(&f, 100, DEFAULT_BREAKPOINT_CAP).unwrap();
    let target = 4.0 * 2f64.ln();
    let limit_err = (seq.per_n[99] - target).abs();
    let float = var_log_deriv_table(&CircleMap::from(f.clone()), 30, 20).unwrap();
    let agree = (0..30)
        .map(|i| (float[i] - seq.var_values[i]).abs())
        .fold(0.0, f64::max);
    let balanced = two_interval_map(rat(3, 1), rat(1, 9), rat(2, 3)).unwrap();
    let bseq = pa_var_sequence(&balanced, 200, DEFAULT_BREAKPOINT_CAP).unwrap();
    let bmax = bseq.var_values.iter().cloned().fold(0.0, f64::max);
    let bound = 2.0 * bseq.var_values[0];
    let report = minakawa_predicate(&balanced, 40).unwrap();
    ensure(
        limit_err <= 0.05 && agree <= 1e-8 && bmax <= bound && report.holds,
        format!(
            "|var/n - 4 log 2| at n=100: {limit_err:.3e}; exact vs float (n<=30): {agree:.3e}; balanced max var {bmax:.4} (bound {bound:.4}), balanced predicate {}",
            report.holds
        ),
    )
}

fn parabolic_bump_lower_bound() -> Outcome {
    let pair = parabolic_bump_pair(&ParabolicBumpSpec::default()).unwrap();
    let schedule = RefinementSchedule::default();
    let ns = geometric_grid(200);
    let series = partition_series(&pair.f, &ns, &schedule).unwrap();
    let plain = var_log_deriv_iterate(&pair.fhat, 200, &schedule).unwrap().value / 200.0;
    let delta = pair.delta;
    ensure(
        series.fekete_estimate >= 0.95 * delta / 2.0 && plain <= delta / 20.0,
        format!(
            "delta {delta:.4}; modified fekete {:.4} (bound {:.4}); unmodified var/n {plain:.4} (bound {:.4})",
            series.fekete_estimate,
            0.95 * delta / 2.0,
            delta / 20.0
        ),
    )
}

fn singular_distortion_persists() -> Outcome {
    let schedule = RefinementSchedule::default();
    let ns = geometric_grid(100);
    let singular = cantor_weighted_map(&CantorWeightSpec {
        weight: 0.5,
        amplitude: 0.0,
        shift: golden(),
        depth: 12,
    })
    .unwrap();
    let s = mather_lower_bound(&singular, &ns, &schedule, 12).unwrap();
    let min = s.per_n.iter().cloned().fold(f64::INFINITY, f64::min);
    let control = cantor_weighted_map(&CantorWeightSpec {
        weight: 0.0,
        amplitude: 0.05,
        shift: golden(),
        depth: 12,
    })
    .unwrap();
    let c100 = var_log_deriv_iterate(&control, 100, &schedule).unwrap().value / 100.0;
    ensure(
        min >= 0.45 && c100 <= 0.05,
        format!("weighted min var/n {min:.4} (bound 0.45); control var/n at 100 {c100:.4} (bound 0.05)"),
    )
}

fn commuting_pair() -> (Vec<CircleMap>, CircleMap) {
    let h = smooth_h(0.1);
    let gens = vec![
        conjugate(&h, &CircleMap::Rotation(golden())),
        conjugate(&h, &CircleMap::Rotation(2f64.sqrt() - 1.0)),
    ];
    (gens, h)
}

fn box_conjugator_flattens() -> Outcome {
    let (gens, _) = commuting_pair();
    let schedule = RefinementSchedule::default();
    let max_var = |n: usize| -> f64 {
        let h: CircleMap = box_conjugator(&gens, n, 4096).unwrap().into();
        gens.iter()
            .map(|g| conjugate_log_deriv_variation(&h, g, &schedule).unwrap().value)
            .fold(0.0, f64::max)
    };
    let (v1, v10) = (max_var(1), max_var(10));
    ensure(v10 <= v1 / 5.0, format!("max var n=1 {v1:.4e}, n=10 {v10:.4e} (bound {:.4e})", v1 / 5.0))
}

fn box_affine_derivative_decays() -> Outcome {
    let (gens, _) = commuting_pair();
    let rows = box_affine_decay(&gens, &[3, 6, 12], 4096, 4096).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.max).collect();
    ensure(
        v[2] < v[0] && v.windows(2).all(|w| w[1] < w[0]),
        format!("sup |affine| at n = 3, 6, 12: {:.3e}, {:.3e}, {:.3e}", v[0], v[1], v[2]),
    )
}

fn random_fourier(rng: &mut ChaCha8Rng) -> FourierDiffeo {
    loop {
        let k = rng.gen_range(1..=3);
        let coeffs = (0..k)
            .map(|_| (rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02)))
            .collect();
        if let Ok(f) = FourierDiffeo::new(rng.gen_range(0.0..1.0), coeffs) {
            return f;
        }
    }
}

fn invariant_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut notes = Vec::new();

    // cocycle identity for the affine derivative
    let mut cocycle = 0.0f64;
    let mut fd = 0.0f64;
    for _ in 0..10 {
        let g1: CircleMap = random_fourier(&mut rng).into();
        let g2: CircleMap = random_fourier(&mut rng).into();
        let c = CircleMap::compose(g1.clone(), g2.clone());
        for _ in 0..100 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let formula = g1.affine_deriv(g2.lift(x).unwrap()).unwrap() * g2.deriv(x).unwrap()
                + g2.affine_deriv(x).unwrap();
            cocycle = cocycle.max((c.affine_deriv(x).unwrap() - formula).abs());
            let h = 1e-5;
            let num = (c.deriv(x + h).unwrap().ln() - c.deriv(x - h).unwrap().ln()) / (2.0 * h);
            fd = fd.max((num - formula).abs());
        }
    }
    notes.push(format!("cocycle {cocycle:.1e}, fd {fd:.1e}"));
    let mut ok = cocycle <= 1e-8 && fd <= 1e-6;

    // subadditivity on a common partition
    let mut sub = 0.0f64;
    for _ in 0..3 {
        let f: CircleMap = random_fourier(&mut rng).into();
        let t = var_log_deriv_table(&f, 40, 16).unwrap();
        for m in 1..40 {
            for n in 1..=40 - m {
                sub = sub.max(t[m + n - 1] - t[m - 1] - t[n - 1]);
            }
        }
    }
    notes.push(format!("subadditivity excess {sub:.1e}"));
    ok &= sub <= 1e-6;

    // distortion scales with the power on exact paths
    let hyp = CircleMap::Mobius(MobiusMap::new([[2.0, 0.0], [0.0, 0.5]]).unwrap());
    let s1 = stability_check(&hyp, 3, 0).unwrap();
    let pa = CircleMap::from(two_interval_map(rat(2, 1), rat(1, 3), rat(4, 5)).unwrap());
    let s2 = stability_check(&pa, 2, 60).unwrap();
    let r1 = s1.ratio.unwrap();
    let r2 = s2.ratio.unwrap();
    notes.push(format!("power ratios {r1:.9}, {r2:.9}"));
    ok &= (r1 - 3.0).abs() < 1e-6 && (r2 - 2.0).abs() < 1e-6;

    // inverse round trips for every variant
    let sampled = SampledDiffeo::from_log_derivative(
        &(0..=256).map(|i| 0.2 * (std::f64::consts::TAU * i as f64 / 256.0).cos()).collect::<Vec<_>>(),
        &(0..=256)
            .map(|i| -0.2 * std::f64::consts::TAU * (std::f64::consts::TAU * i as f64 / 256.0).sin())
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let fourier: CircleMap = random_fourier(&mut rng).into();
    let variants: Vec<CircleMap> = vec![
        CircleMap::Rotation(0.3),
        fourier.clone(),
        CircleMap::Mobius(MobiusMap::new([[1.2, 0.7], [0.1, 0.9]]).unwrap()),
        pa.clone(),
        CircleMap::Sampled(Arc::new(sampled)),
        cantor_weighted_map(&CantorWeightSpec {
            weight: 0.5,
            amplitude: 0.1,
            shift: 0.2,
            depth: 10,
        })
        .unwrap(),
        CircleMap::compose(fourier.clone(), pa.clone()),
        CircleMap::inverse(fourier),
    ];
    let mut round = 0.0f64;
    for f in &variants {
        let inv = CircleMap::inverse(f.clone());
        for i in 0..200 {
            let x = (i as f64 + 0.37) / 200.0;
            round = round.max((inv.eval(f.eval(x).unwrap()).unwrap() - x).abs());
        }
    }
    notes.push(format!("round trip {round:.1e}"));
    ok &= round <= 1e-10;

    // refinement monotonicity
    let schedule = RefinementSchedule {
        rel_tol: 1e-14,
        max_level: 16,
        ..Default::default()
    };
    let mut drop = 0.0f64;
    for f in [&variants[1], &variants[2], &variants[5]] {
        let e = var_log_deriv_iterate(f, 5, &schedule).unwrap();
        for w in e.history.windows(2) {
            drop = drop.max(w[0].1 - w[1].1);
        }
    }
    let e = total_variation_fn(|x| Ok((std::f64::consts::TAU * 3.0 * x).sin()), true, &schedule).unwrap();
    for w in e.history.windows(2) {
        drop = drop.max(w[0].1 - w[1].1);
    }
    notes.push(format!("refinement drop {drop:.1e}"));
    ok &= drop <= 1e-12;

    // conjugacy sandwich
    let h = smooth_h(0.2);
    let var_h = total_variation_log_deriv(&h, &RefinementSchedule::default()).unwrap().value;
    let f: CircleMap = random_fourier(&mut rng).into();
    let g = conjugate(&h, &f);
    let ns: Vec<usize> = (1..=20).collect();
    let s14 = RefinementSchedule::default().with_max_level(14);
    let vf = var_log_deriv_multi(&f, &ns, &s14).unwrap();
    let vg = var_log_deriv_multi(&g, &ns, &s14).unwrap();
    let excess = vf
        .iter()
        .zip(vg.iter())
        .map(|(a, b)| (a.value - b.value).abs() - 2.0 * var_h)
        .fold(f64::NEG_INFINITY, f64::max);
    notes.push(format!("sandwich excess {excess:.2e}"));
    ok &= excess <= 1e-6;

    // exact and partition paths agree on PA maps
    let series = partition_series(&pa, &(1..=30).collect::<Vec<_>>(), &RefinementSchedule::default()).unwrap();
    let exact = match &pa {
        CircleMap::Pa(p) => pa_var_sequence(&p.exact, 30, DEFAULT_BREAKPOINT_CAP).unwrap(),
        _ => unreachable!(),
    };
    let dispatch = (0..30)
        .map(|i| (series.var_values[i] - exact.var_values[i]).abs())
        .fold(0.0, f64::max);
    notes.push(format!("dispatch {dispatch:.1e}"));
    ok &= dispatch <= 1e-8;

    // right derivative defined at a PA breakpoint
    ok &= pa.jet(1.0 / 3.0, Order::RightDeriv).is_ok();

    ensure(ok, notes.join("; "))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "conjugate derivative is the n-th root of Df^n",
            budget: Duration::from_secs(60),
            run: conjugate_derivative_identity,
        },
        Criterion {
            id: 2,
            name: "geometric-mean conjugates approach the rotation",
            budget: Duration::from_secs(120),
            run: rotation_approximation_trend,
        },
        Criterion {
            id: 3,
            name: "disk-map variation equals 4 log((1+r)/(1-r))",
            budget: Duration::from_secs(30),
            run: disk_variation_closed_form,
        },
        Criterion {
            id: 4,
            name: "elliptic/parabolic/hyperbolic growth",
            budget: Duration::from_secs(120),
            run: mobius_growth_trichotomy,
        },
        Criterion {
            id: 5,
            name: "piecewise-affine exact distortion",
            budget: Duration::from_secs(120),
            run: pa_exact_distortion,
        },
        Criterion {
            id: 6,
            name: "bump on a parabolic map forces distortion",
            budget: Duration::from_secs(120),
            run: parabolic_bump_lower_bound,
        },
        Criterion {
            id: 7,
            name: "singular derivative keeps distortion positive",
            budget: Duration::from_secs(180),
            run: singular_distortion_persists,
        },
        Criterion {
            id: 8,
            name: "box conjugator flattens commuting pair",
            budget: Duration::from_secs(120),
            run: box_conjugator_flattens,
        },
        Criterion {
            id: 9,
            name: "box conjugates lose affine derivative",
            budget: Duration::from_secs(180),
            run: box_affine_derivative_decays,
        },
        Criterion {
            id: 10,
            name: "invariant suites",
            budget: Duration::from_secs(300),
            run: invariant_suites,
        },
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} | {} | {} | {:.1} s of {} s{}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
