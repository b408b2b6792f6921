//! Acceptance criteria 1 to 12. Each test writes one `criterion N: PASS|FAIL`
//! line to stderr (uncaptured) and then asserts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use rayon::prelude::*;

use psos::experiments::{d_of_p, estimate_h, tail::default_proxy_side, tail_rates, CiPolicy, TailSettings};
use psos::experiments::{hitting_time_experiment, HittingSettings};
use psos_core::contour::{extract_h_contours, is_h_contour, shift_down};
use psos_core::oracle::{
    occupation_tv, threshold_events, verify_coupling, verify_detailed_balance, verify_fkg, verify_peierls,
    verify_peierls_nested, verify_sandwich, ExactMeasure, SandwichEvents, TransferMeasure, Window,
};
use psos_core::rng::{uniform01, StreamId};
use psos_core::{BoundaryCondition, HeightField, Location, Mode, Model, ModelParams};

const PS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

fn line(n: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {n:>2} [{verdict}] {title}: {detail}");
}

fn model(p: f64, beta: f64, l: usize, mode: Mode) -> Model {
    Model::new(ModelParams::new(p, beta, l, mode)).unwrap()
}

fn ceiling(p: f64, beta: f64, l: usize, n_plus: i32) -> ExactMeasure {
    let m = model(p, beta, l, Mode::FloorCeiling { n_plus });
    ExactMeasure::enumerate(&m, Window::for_model(&m, 0).unwrap(), 10_000_000).unwrap()
}

fn grid(ps: &[f64], betas: &[f64]) -> Vec<(f64, f64)> {
    ps.iter().flat_map(|&p| betas.iter().map(move |&b| (p, b))).collect()
}

#[test]
fn criterion_01_detailed_balance() {
    let mut worst = 0.0f64;
    let mut violations = 0;
    for (p, beta) in grid(&PS, &[0.5, 2.0]) {
        let r = verify_detailed_balance(&ceiling(p, beta, 2, 2), 1e-12).unwrap();
        violations += r.violations;
        worst = worst.max(r.entries.iter().find(|e| e.name == "max_residual").unwrap().value);
    }
    let pass = violations == 0 && worst <= 1e-12;
    line(1, "detailed balance", pass, &format!("max residual {worst:.3e} (tol 1e-12), {violations} violations"));
    assert!(pass);
}

#[test]
fn criterion_02_sampler_vs_oracle() {
    let sweeps = 1_000_000u64;
    let cases: Vec<(usize, f64, f64, i32)> = grid(&PS, &[0.5, 2.0])
        .into_iter()
        .enumerate()
        .flat_map(|(k, (p, b))| [(k, p, b, 0), (k, p, b, 2)])
        .collect();
    let tvs: Vec<(f64, f64, i32, f64)> = cases
        .par_iter()
        .map(|&(k, p, beta, start)| {
            let e = ceiling(p, beta, 2, 2);
            let g = *e.model().geometry();
            let steps = sweeps * g.num_sites() as u64;
            let tv = occupation_tv(&e, HeightField::constant(&g, start), steps, StreamId::new(2024, &[k as u64, start as u64]))
                .unwrap();
            (p, beta, start, tv)
        })
        .collect();
    let worst = tvs.iter().map(|t| t.3).fold(0.0, f64::max);
    let pass = worst <= 0.01;
    line(2, "sampler vs oracle TV", pass, &format!("max TV {worst:.2e} over {} runs of 1e6 sweeps (tol 0.01)", tvs.len()));
    assert!(pass, "{tvs:?}");
}

#[test]
fn criterion_03_peierls() {
    let results: Vec<(u64, u64, u64, u64)> = grid(&[1.0, 2.0, 3.0], &[1.0, 2.0])
        .par_iter()
        .map(|&(p, beta)| {
            let m = model(p, beta, 3, Mode::Free);
            let w = Window::certified(&m).unwrap();
            let t = TransferMeasure::new(&m, w, 100_000_000).unwrap();
            let t1 = TransferMeasure::new(&m, w.widened(1, Mode::Free), 100_000_000).unwrap();
            let basic = verify_peierls(&t, &[1, 2], 8, Some(&t1)).unwrap();
            let nested = verify_peierls_nested(&t, 2, 1, 8).unwrap();
            (basic.checks, basic.violations, nested.checks, nested.violations)
        })
        .collect();
    let (c, v, nc, nv) = results.iter().fold((0, 0, 0, 0), |a, r| (a.0 + r.0, a.1 + r.1, a.2 + r.2, a.3 + r.3));
    let pass = v == 0 && nv == 0 && c > 0 && nc > 0;
    line(3, "Peierls bound", pass, &format!("basic {c} checks / {v} violations, nested {nc} checks / {nv} violations"));
    assert!(pass);
}

/// `Σ_bonds |∇η|^p` over changed bonds only, bond by bond, without the model's
/// energy routines.
fn energy_drop(p: f64, before: &HeightField, after: &HeightField, bc: &BoundaryCondition) -> f64 {
    let g = before.geometry();
    let l = g.side() as i32;
    let height = |f: &HeightField, x: i32, y: i32| -> i64 {
        match g.locate(psos_core::Site::new(x, y)) {
            Some(Location::Interior(i)) => f.get(i) as i64,
            Some(Location::Boundary(b)) => bc.value(b) as i64,
            None => unreachable!(),
        }
    };
    let mut drop = 0.0;
    for x in 0..=l {
        for y in 0..=l {
            // bonds to the right and downwards, skipping boundary-boundary pairs
            for (dx, dy) in [(1, 0), (0, 1)] {
                let (u, v) = ((x, y), (x + dx, y + dy));
                let inside = |(a, b): (i32, i32)| (1..=l).contains(&a) && (1..=l).contains(&b);
                let on_box = |(a, b): (i32, i32)| (0..=l + 1).contains(&a) && (0..=l + 1).contains(&b);
                if !(inside(u) || inside(v)) || !on_box(u) || !on_box(v) {
                    continue;
                }
                let g0 = (height(before, u.0, u.1) - height(before, v.0, v.1)).unsigned_abs();
                let g1 = (height(after, u.0, u.1) - height(after, v.0, v.1)).unsigned_abs();
                if g0 != g1 {
                    drop += (g0 as f64).powf(p) - (g1 as f64).powf(p);
                }
            }
        }
    }
    drop
}

#[test]
fn criterion_04_shift_map_energy() {
    let mut rng = StreamId::new(404, &[]).rng();
    let mut pick = |n: u64| (uniform01(&mut rng) * n as f64) as u64;
    let mut triples = 0u64;
    let mut violations = 0u64;
    let mut min_margin = f64::INFINITY;
    while triples < 10_000 {
        let l = 2 + pick(6) as usize;
        let geom = psos_core::BoxGeometry::new(l).unwrap();
        let top = 1 + pick(4);
        let field = HeightField::from_vec(&geom, (0..l * l).map(|_| pick(top + 1) as i32).collect()).unwrap();
        let bc = BoundaryCondition::constant(0);
        let h = 1 + pick(top) as i64;
        let contours = extract_h_contours(&field, &bc, h);
        if contours.is_empty() {
            continue;
        }
        let c = &contours[pick(contours.len() as u64) as usize];
        assert!(is_h_contour(c, &field, &bc, h));
        let shifted = shift_down(&field, c);
        // holes inside γ may drop below zero; the energy law does not see the floor
        assert!(!shifted.encloses_exterior);
        triples += 1;
        for p in PS {
            let perim = c.perimeter() as f64;
            let m = model(p, 1.0, l, Mode::Free);
            let ok = match (m.total_energy_exact(&field).unwrap(), m.total_energy_exact(&shifted.field).unwrap()) {
                (Some(a), Some(b)) => b + c.perimeter() as u128 <= a,
                _ => energy_drop(p, &field, &shifted.field, &bc) >= perim,
            };
            // both routes for every p
            let drop = energy_drop(p, &field, &shifted.field, &bc);
            min_margin = min_margin.min(drop - perim);
            if !ok || drop < perim {
                violations += 1;
            }
        }
    }
    let pass = violations == 0;
    line(4, "shift-map energy law", pass, &format!("{triples} triples x 4 p, {violations} violations, min H(η)-H(Tη)-|γ| = {min_margin}"));
    assert!(pass);
}

#[test]
fn criterion_05_fkg() {
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (p, beta) in grid(&PS, &[0.5, 2.0]) {
        let e = ceiling(p, beta, 2, 2);
        let r = verify_fkg(&e, &threshold_events(&e)).unwrap();
        checks += r.checks;
        violations += r.violations;
        worst = worst.min(r.entries.iter().filter(|x| x.name == "covariance_increasing").map(|x| x.value).fold(f64::INFINITY, f64::min));
    }
    let pass = violations == 0;
    line(5, "FKG", pass, &format!("{checks} checks, {violations} violations, min covariance {worst:.3e} (tol -1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_06_sandwich() {
    let results: Vec<(u64, u64)> = grid(&PS, &[0.5, 1.0, 2.0])
        .par_iter()
        .map(|&(p, beta)| {
            let fm = model(p, beta, 2, Mode::Floor);
            let floor = ExactMeasure::enumerate(&fm, Window::certified(&fm).unwrap(), 100_000_000).unwrap();
            let r = verify_sandwich(&floor, &ceiling(p, beta, 2, 1), SandwichEvents::All).unwrap();
            (r.checks, r.violations)
        })
        .collect();
    let (c, v) = results.iter().fold((0, 0), |a, r| (a.0 + r.0, a.1 + r.1));
    let pass = v == 0;
    line(6, "sandwich", pass, &format!("{c} checks over all 2^16 - 1 events per instance, {v} violations"));
    assert!(pass);
}

#[test]
fn criterion_07_monotone_coupling() {
    let results: Vec<(f64, u64, u64)> = PS
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let m = model(p, 1.0, 8, Mode::FloorCeiling { n_plus: 5 });
            let g = *m.geometry();
            let starts = vec![HeightField::zeros(&g), HeightField::constant(&g, 2), HeightField::constant(&g, 5)];
            let r = verify_coupling(&m, starts, 10_000 * 64, StreamId::new(707, &[k as u64])).unwrap();
            (p, r.checks, r.violations)
        })
        .collect();
    let v: u64 = results.iter().map(|r| r.2).sum();
    let pass = v == 0;
    line(7, "monotone coupling", pass, &format!("8x8, n+=5, 1e4 sweeps, p in {PS:?}: {v} violations"));
    assert!(pass);
}

#[test]
fn criterion_08_tail_rate_p1() {
    let s = TailSettings::new(1.0, 1.5, 64, 808);
    let r = tail_rates(&s, &[1, 2, 3]).unwrap();
    let slope = r.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    let (lo, hi) = (0.8 * 6.0, 1.2 * 6.0);
    let pass = slope >= lo && slope <= hi;
    line(8, "tail rate p=1", pass, &format!("slope {slope:.3} vs [{lo}, {hi}], -log p_hat = {:?}", r.neg_log));
    assert!(pass);
}

#[test]
fn criterion_09_typical_height_p1() {
    let l = 1000;
    let s = TailSettings::new(1.0, 1.5, default_proxy_side(l), 909);
    let r = estimate_h(&s, l, CiPolicy::Point, 30).unwrap();
    let expected = ((l as f64).ln() / 6.0).floor() as i64;
    let pass = (r.h - expected).abs() <= 1;
    let tails: Vec<String> = r.tails.iter().take(4).map(|t| format!("{}:{:.3e}", t.h, t.p_hat)).collect();
    line(9, "typical height p=1", pass, &format!("H = {} vs {expected} +- 1, threshold {:.4}, tails {}", r.h, r.threshold, tails.join(" ")));
    assert!(pass);
}

#[test]
fn criterion_10_hitting_time_trend() {
    let mut s = HittingSettings::new(2.0, 2.0, 0.5, vec![4, 6, 8], 1010);
    s.n_seeds = 32;
    s.t_max_sweeps = 1_000_000;
    let r = hitting_time_experiment(&s).unwrap();
    let medians: Vec<String> = r
        .sides
        .iter()
        .map(|x| format!("L={} H={} level={} median={:?}", x.side, x.schedule.typical_height, x.schedule.target_level, x.median_sweeps))
        .collect();
    let spearman = r.spearman_median_vs_l.unwrap_or(f64::NAN);
    let pass = r.strictly_increasing && spearman == 1.0;
    line(10, "hitting-time trend", pass, &format!("{}; spearman {spearman}", medians.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_11_d_of_p() {
    let expected = [(1.2, 1.2), (1.9, 1.9), (2.0, 2.0), (2.1, 2.0), (5.0, 2.0)];
    let got: Vec<(f64, f64)> = expected.iter().map(|&(p, _)| (p, d_of_p(p).unwrap())).collect();
    let pass = got.iter().zip(&expected).all(|(g, e)| g.1 == e.1);
    line(11, "d(p) schedule", pass, &format!("{got:?}"));
    assert!(pass);
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for run in fs::read_dir(dir).unwrap() {
        let run = run.unwrap();
        for f in fs::read_dir(run.path()).unwrap() {
            let f = f.unwrap();
            let key = format!("{}/{}", run.file_name().to_string_lossy(), f.file_name().to_string_lossy());
            out.insert(key, fs::read(f.path()).unwrap());
        }
    }
    out
}

#[test]
fn criterion_12_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let hitting = [
        "experiment", "hitting-time", "--p", "2", "--beta", "0.5", "--a", "0.5", "--L", "6,8", "--n-seeds", "4", "--T-max",
        "2000", "--M", "16", "--seed", "12",
    ];
    let mut snaps = Vec::new();
    for (run, workers) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{run}"));
        for args in [&["verify", "all", "--seed", "12"][..], &hitting[..]] {
            let o = Command::new(env!("CARGO_BIN_EXE_psos"))
                .args(args)
                .arg("--out")
                .arg(&out)
                .env("PSOS_WORKERS", workers)
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        }
        snaps.push(snapshot(&out));
    }
    let files = snaps[0].len();
    let differing: Vec<&String> = snaps[0].keys().filter(|k| snaps[1].get(*k) != snaps[0].get(*k)).collect();
    let pass = files > 0 && snaps[0] == snaps[1];
    line(12, "determinism", pass, &format!("{files} files compared across two runs (1 and 4 workers), differing: {differing:?}"));
    assert!(pass);
}
