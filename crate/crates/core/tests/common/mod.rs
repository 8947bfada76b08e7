//! Independent oracles, frozen goldens and reusable checks shared by the
//! integration tests and the acceptance binary.

#![allow(dead_code, clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use stbem_core::assembly::{
    assemble, assemble_uniform_toeplitz, entry_vanishes, matrix_entry, update_after_refinement,
};
use stbem_core::driver::{adaptive_run, mark, uniform_study, AdaptiveConfig, UniformStudy};
use stbem_core::linsolve::solve_dense;
use stbem_core::residual::element_indicators;
use stbem_core::{
    DirichletDatum, DiscreteSolution, ElementId, IndicatorKind, IndicatorReport, QuadConfig, SpaceTimeElement,
    SpaceTimeMesh,
};

/// Outcome of a check: a short detail string either way.
pub type Check = Result<String, String>;

// ---------------------------------------------------------------------------
// Tanh-sinh quadrature

/// `int_a^b f` by double-exponential quadrature, refined until two levels
/// agree. Handles integrable endpoint singularities; interior kinks must be
/// split off by the caller.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    // f at distance `d` from the left or right end
    let eval = |t: f64| -> f64 {
        let s = 0.5 * PI * t.sinh();
        // 1 - |x| written without cancellation
        let d = 1.0 / (s.abs().exp() * s.cosh());
        let w = 0.5 * PI * t.cosh() / (s.cosh() * s.cosh());
        if d * half <= 0.0 || !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        let x = if s < 0.0 { a + half * d } else { b - half * d };
        if x <= a || x >= b {
            return 0.0;
        }
        w * f(x)
    };
    let t_max = 3.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += eval(k as f64 * h) + eval(-(k as f64) * h);
        k += 1;
    }
    let mut estimate = half * h * sum;
    for _ in 0..9 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += eval(k as f64 * h) + eval(-(k as f64) * h);
            k += 2;
        }
        let next = half * h * sum;
        let done = (next - estimate).abs() <= 1e-15 * next.abs().max(1e-300);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Tanh-sinh over `[a, b]` split at the given interior points.
pub fn tanh_sinh_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64]) -> f64 {
    let mut pts = vec![a, b];
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).map(|w| tanh_sinh(&f, w[0], w[1])).sum()
}

// ---------------------------------------------------------------------------
// Oracles

fn element(t_lo: f64, t_hi: f64, x_lo: f64, x_hi: f64) -> SpaceTimeElement {
    SpaceTimeElement {
        id: ElementId(1),
        t_lo,
        t_hi,
        x_lo,
        x_hi,
        level: 0,
    }
}

/// Matrix entry through the one-dimensional reduction
/// `(1 / 2 pi) sum sign int_0^L W(r) acosh(L / r) dr`, where `W(r)` is the
/// measure of `{(x, y) : |x - y| = r}`, integrated numerically.
pub fn entry_oracle(test: &SpaceTimeElement, trial: &SpaceTimeElement) -> f64 {
    let overlap = |s: f64| (test.x_hi.min(trial.x_hi + s) - test.x_lo.max(trial.x_lo + s)).max(0.0);
    let weight = |r: f64| overlap(r) + overlap(-r);
    let cuts = [
        (test.x_lo - trial.x_hi).abs(),
        (test.x_lo - trial.x_lo).abs(),
        (test.x_hi - trial.x_hi).abs(),
        (test.x_hi - trial.x_lo).abs(),
    ];
    let lags = [
        (test.t_hi - trial.t_lo, 1.0),
        (test.t_hi - trial.t_hi, -1.0),
        (test.t_lo - trial.t_lo, -1.0),
        (test.t_lo - trial.t_hi, 1.0),
    ];
    let mut total = 0.0;
    for (lag, sign) in lags {
        if lag <= 0.0 {
            continue;
        }
        total += sign * tanh_sinh_split(|r| weight(r) * (lag / r).acosh(), 0.0, lag, &cuts);
    }
    total / (2.0 * PI)
}

/// Brute-force retarded single-layer potential of `psi(t, x) = x t` on the
/// unit segment. The time integral uses `t - tau = r cosh u`, which removes
/// the inverse square root; both integrals are then done numerically.
pub fn smooth_datum_oracle(t: f64, x: f64) -> f64 {
    let inner = |y: f64| {
        let r = (x - y).abs();
        if r >= t {
            return 0.0;
        }
        let u_max = (t / r).acosh();
        y * tanh_sinh(|u| t - r * u.cosh(), 0.0, u_max)
    };
    tanh_sinh_split(inner, 0.0, 1.0, &[x, x - t, x + t]) / (2.0 * PI)
}

// ---------------------------------------------------------------------------
// Goldens, evaluated at 40 to 50 significant digits and rounded to f64

/// `(t, tau, x, y, F)`.
pub const KERNEL_F_GOLDEN: [(f64, f64, f64, f64, f64); 5] = [
    (1.0, 0.5, 0.5, 0.75, 2.094395102393195492308429),
    (2.0, 0.3, 0.6, 1.1, 0.659244921548401086630376),
    (1.5, 1.0, 0.2, 0.9, 1.98231317286238463861606),
    (3.0, 0.5, 0.4, 0.35, 0.140689319378520108605102),
    (1.2, 0.4, 0.9, 0.2, 0.5053605102841573069713149),
];

/// `(t, tau, x, y, S)`.
pub const KERNEL_S_GOLDEN: [(f64, f64, f64, f64, f64); 5] = [
    (1.0, 0.5, 0.25, 0.5, 0.7464791719707438381022348),
    (2.0, 1.2, 0.3, 0.7, 0.975473772636360979175741),
    (1.7, 0.9, 0.8, 0.1, 1.006726342962596647264491),
    (0.9, 0.8, 0.3, 0.5, 2.184643791605108726676278),
    (2.5, 0.3, 0.0, 1.0, 0.1413822939017984948137898),
];

/// `([t_lo, t_hi, x_lo, x_hi] of test, same of trial, entry)`.
pub const ENTRY_GOLDEN: [([f64; 4], [f64; 4], f64); 5] = [
    ([0.0, 0.25, 0.0, 0.25], [0.0, 0.25, 0.0, 0.25], 0.02130281605675654151444),
    ([0.25, 0.5, 0.25, 0.5], [0.0, 0.25, 0.0, 0.25], 0.004055772199829911640386),
    ([0.5, 0.625, 0.75, 0.875], [0.0, 0.25, 0.5, 0.75], -0.00161623449007763466662),
    ([0.25, 0.5, 0.0, 0.125], [0.125, 0.375, 0.125, 0.5], 0.005144842635389374945266),
    ([0.75, 1.0, 0.3, 0.55], [0.1, 0.35, 0.8, 0.9], -0.001511581920990133120195),
];

/// `(t, x, f)` for the datum of `psi = x t`.
pub const SMOOTH_DATUM_GOLDEN: [(f64, f64, f64); 10] = [
    (0.1, 0.5, 0.00125),
    (0.3, 0.2, 0.004510872486408388092359),
    (0.5, 0.5, 0.03125),
    (0.7, 0.05, 0.01269456219675167339329),
    (0.9, 0.9, 0.1107754068552285946838),
    (1.0, 0.33, 0.0831324737288255348),
    (0.25, 0.0, 0.0004144659976351441035648),
    (0.6, 1.0, 0.03927042204869176791232),
    (0.45, 0.7, 0.03451868278014341472926),
    (0.8, 0.6, 0.08685669670450007508038),
];

pub fn golden_element(c: [f64; 4]) -> SpaceTimeElement {
    element(c[0], c[1], c[2], c[3])
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Random meshes

/// A square 2x2 to 4x4 uniform mesh refined a few times at random
/// elements, so every cell keeps `dt = dx`.
pub fn random_mesh(rng: &mut StdRng) -> SpaceTimeMesh {
    let n = rng.gen_range(2..=4);
    let mut mesh = SpaceTimeMesh::uniform(n, n, 1.0).unwrap();
    for _ in 0..rng.gen_range(0..=2) {
        let marked: BTreeSet<ElementId> =
            (0..rng.gen_range(1..=3)).map(|_| ElementId(rng.gen_range(1..=mesh.len()))).collect();
        mesh = mesh.refine(&marked).unwrap().0;
    }
    mesh
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// Property checks

pub fn check_causality_zeros() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let mut zeros = 0;
    for _ in 0..20 {
        let mesh = random_mesh(&mut rng);
        for a in mesh.elements() {
            for b in mesh.elements() {
                let later = b.t_lo >= a.t_hi;
                let gap = (b.x_lo - a.x_hi).max(a.x_lo - b.x_hi).max(0.0);
                let outside = gap >= a.t_hi - b.t_lo;
                if later || outside {
                    let v = matrix_entry(a, b);
                    if v != 0.0 || !entry_vanishes(a, b) {
                        return Err(format!("entry {:?} x {:?} = {v:e}", a, b));
                    }
                    zeros += 1;
                }
            }
        }
    }
    Ok(format!("{zeros} causal or out-of-cone entries exactly zero"))
}

pub fn check_diagonal_positive() -> Check {
    let mut rng = StdRng::seed_from_u64(12);
    let mut min = f64::INFINITY;
    for _ in 0..20 {
        let mesh = random_mesh(&mut rng);
        for e in mesh.elements() {
            let v = matrix_entry(e, e);
            if !(v > 0.0) {
                return Err(format!("diagonal entry of {e:?} is {v:e}"));
            }
            min = min.min(v);
        }
    }
    Ok(format!("smallest diagonal entry {min:.3e}"))
}

pub fn check_quadratic_form_positive() -> Check {
    let mut rng = StdRng::seed_from_u64(13);
    let mut min_ratio = f64::INFINITY;
    for trial in 0..100 {
        let mesh = random_mesh(&mut rng);
        let sys = assemble(&mesh, &DirichletDatum::Smooth, &QuadConfig::default()).map_err(|e| e.to_string())?;
        let n = sys.size();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: f64 = (0..n).map(|i| v[i] * (0..n).map(|j| sys.entry(i, j) * v[j]).sum::<f64>()).sum();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if !(q > 0.0) {
            return Err(format!("vector {trial}: v^T E v = {q:e} on {n} elements"));
        }
        min_ratio = min_ratio.min(q / norm2);
    }
    Ok(format!("100 random vectors, min v^T E v / |v|^2 = {min_ratio:.3e}"))
}

pub fn check_toeplitz_matches_dense() -> Check {
    let quad = QuadConfig::default();
    let mut worst: f64 = 0.0;
    for (n_x, n_t) in [(3, 5), (6, 4), (5, 5)] {
        let ts = assemble_uniform_toeplitz(n_x, n_t, 1.0, &DirichletDatum::Peak, &quad).map_err(|e| e.to_string())?;
        let mesh = SpaceTimeMesh::uniform(n_x, n_t, 1.0).unwrap();
        let dense = assemble(&mesh, &DirichletDatum::Peak, &quad).map_err(|e| e.to_string())?;
        let expanded = ts.expand();
        let scale = max_abs(dense.matrix());
        for (a, b) in expanded.iter().zip(dense.matrix()) {
            worst = worst.max((a - b).abs() / scale);
        }
        let rs = max_abs(dense.rhs()).max(f64::MIN_POSITIVE);
        for (a, b) in ts.rhs().iter().zip(dense.rhs()) {
            worst = worst.max((a - b).abs() / rs);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max relative deviation {worst:.2e}"))
    } else {
        Err(format!("max relative deviation {worst:.2e} > 1e-10"))
    }
}

pub fn check_incremental_update() -> Check {
    let quad = QuadConfig::default();
    let mut rng = StdRng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for datum in [DirichletDatum::Smooth, DirichletDatum::Peak, DirichletDatum::TimePower] {
        let mut mesh = SpaceTimeMesh::uniform(4, 4, 1.0).unwrap();
        let mut sys = assemble(&mesh, &datum, &quad).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let marked: BTreeSet<ElementId> =
                (0..3).map(|_| ElementId(rng.gen_range(1..=mesh.len()))).collect();
            let (fine, map) = mesh.refine(&marked).map_err(|e| e.to_string())?;
            sys = update_after_refinement(&sys, &mesh, &fine, &map, &datum, &quad).map_err(|e| e.to_string())?;
            let full = assemble(&fine, &datum, &quad).map_err(|e| e.to_string())?;
            let scale = max_abs(full.matrix());
            for (a, b) in sys.matrix().iter().zip(full.matrix()) {
                worst = worst.max((a - b).abs() / scale);
            }
            let rs = max_abs(full.rhs()).max(f64::MIN_POSITIVE);
            for (a, b) in sys.rhs().iter().zip(full.rhs()) {
                worst = worst.max((a - b).abs() / rs);
            }
            mesh = fine;
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max relative deviation {worst:.2e}"))
    } else {
        Err(format!("max relative deviation {worst:.2e} > 1e-12"))
    }
}

pub fn check_theoretical_below_heuristic() -> Check {
    let mut rng = StdRng::seed_from_u64(15);
    let mut count = 0;
    for datum in [DirichletDatum::Smooth, DirichletDatum::Peak, DirichletDatum::TimePower] {
        let mesh = random_mesh(&mut rng);
        let sys = assemble(&mesh, &datum, &QuadConfig::default()).map_err(|e| e.to_string())?;
        let alpha = solve_dense(&sys).map_err(|e| e.to_string())?;
        let sol = DiscreteSolution::new(mesh.clone(), alpha).map_err(|e| e.to_string())?;
        let report = element_indicators(&mesh, &sol, &datum, 8).map_err(|e| e.to_string())?;
        for e in report.entries() {
            if e.eta_sq > e.eta_heur_sq {
                return Err(format!("element {}: {:e} > {:e}", e.id, e.eta_sq, e.eta_heur_sq));
            }
            count += 1;
        }
    }
    Ok(format!("eta^2 <= heuristic eta^2 on {count} elements"))
}

pub fn check_mark_refine_examples() -> Check {
    let indicator = |values: &[f64]| {
        let mesh = SpaceTimeMesh::uniform(values.len(), 1, 1.0).unwrap();
        let entries = mesh
            .elements()
            .iter()
            .zip(values)
            .map(|(e, &v)| stbem_core::ElementIndicator {
                id: e.id,
                norm_dt_sq: 0.0,
                norm_dx_sq: 0.0,
                eta_sq: v,
                eta_heur_sq: v,
            })
            .collect();
        IndicatorReport::new(entries)
    };
    let ids = |v: &[usize]| v.iter().map(|&i| ElementId(i)).collect::<BTreeSet<_>>();
    let report = indicator(&[4.0, 1.0, 1.0, 1.0]);
    if mark(&report, 0.5, IndicatorKind::Theoretical) != ids(&[1]) {
        return Err("theta 0.5 on [4,1,1,1] should mark {1}".into());
    }
    if mark(&report, 0.2, IndicatorKind::Theoretical) != ids(&[1, 2, 3, 4]) {
        return Err("theta 0.2 on [4,1,1,1] should mark all".into());
    }
    if mark(&indicator(&[0.0, 2.0, 0.5]), 0.0, IndicatorKind::Theoretical) != ids(&[2, 3]) {
        return Err("theta 0 should mark every positive indicator".into());
    }

    let mesh = SpaceTimeMesh::uniform(4, 4, 1.0).unwrap();
    let (fine, map) = mesh.refine(&ids(&[11])).map_err(|e| e.to_string())?;
    let parent = mesh.get(ElementId(11)).unwrap();
    let kept = fine.get(ElementId(11)).unwrap();
    let quarter = |e: &SpaceTimeElement| (e.dt() - 0.5 * parent.dt()).abs() < 1e-15 && (e.dx() - 0.5 * parent.dx()).abs() < 1e-15;
    if fine.len() != 19 || !quarter(kept) || map.splits.len() != 1 || map.splits[0].appended != [ElementId(17), ElementId(18), ElementId(19)] {
        return Err("marking {11} on 4x4 should give 19 elements with 17..19 appended".into());
    }
    if !(17..=19).all(|i| quarter(fine.get(ElementId(i)).unwrap())) {
        return Err("appended children are not quarters".into());
    }
    let (same, map) = mesh.refine(&BTreeSet::new()).map_err(|e| e.to_string())?;
    if !map.is_empty() || same.elements() != mesh.elements() {
        return Err("empty marking changed the mesh".into());
    }
    let small = SpaceTimeMesh::uniform(2, 2, 1.0).unwrap();
    let (all, _) = small.refine(&ids(&[1, 2, 3, 4])).map_err(|e| e.to_string())?;
    if all.len() != 16 || all.elements().iter().any(|e| e.level != 1) || (all.total_area() - 1.0).abs() > 1e-15 || all.find_overlap().is_some() {
        return Err("refining all of 2x2 should give 16 level-1 elements covering the domain".into());
    }
    Ok("marking and refinement micro-examples reproduced".into())
}

pub fn check_theta_zero_is_uniform() -> Check {
    let datum = DirichletDatum::Smooth;
    let mut cfg = AdaptiveConfig::new(datum);
    cfg.theta = 0.0;
    cfg.epsilon = 1e-30;
    cfg.max_iterations = 2;
    cfg.quad.indicator_order = 4;
    let adaptive = adaptive_run(&cfg).map_err(|e| e.to_string())?;
    let mut study = UniformStudy::new(datum, 4, 3);
    study.indicators = false;
    let uniform = uniform_study(&study).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (a, u) in adaptive.records.iter().zip(&uniform.records) {
        if a.dofs != u.dofs {
            return Err(format!("dofs {} vs {}", a.dofs, u.dofs));
        }
        worst = worst.max(rel_err(a.energy, u.energy));
    }
    if adaptive.records.len() != 3 {
        return Err(format!("expected 3 records, got {}", adaptive.records.len()));
    }
    if worst <= 1e-8 {
        Ok(format!("energies at 16, 64, 256 DoFs agree to {worst:.2e}"))
    } else {
        Err(format!("relative energy deviation {worst:.2e} > 1e-8"))
    }
}

// ---------------------------------------------------------------------------
// Oracle checks

pub fn check_entry_goldens() -> Check {
    let mut worst: f64 = 0.0;
    for (a, b, want) in ENTRY_GOLDEN {
        let (test, trial) = (golden_element(a), golden_element(b));
        let got = matrix_entry(&test, &trial);
        let oracle = entry_oracle(&test, &trial);
        worst = worst.max(rel_err(got, want)).max(rel_err(oracle, want));
    }
    let single = SpaceTimeMesh::uniform(1, 1, 1.0).unwrap();
    let e = &single.elements()[0];
    worst = worst.max(rel_err(matrix_entry(e, e), entry_oracle(e, e)));
    if worst <= 1e-8 {
        Ok(format!("closed form and 1D-reduction oracle within {worst:.2e}"))
    } else {
        Err(format!("relative deviation {worst:.2e} > 1e-8"))
    }
}

pub fn check_kernel_goldens() -> Check {
    let mut worst: f64 = 0.0;
    for (t, tau, x, y, want) in KERNEL_F_GOLDEN {
        worst = worst.max(rel_err(stbem_core::kernels::kernel_f(t, tau, x, y), want));
    }
    for (t, tau, x, y, want) in KERNEL_S_GOLDEN {
        worst = worst.max(rel_err(stbem_core::kernels::kernel_s(t, tau, x, y), want));
    }
    if worst <= 1e-10 {
        Ok(format!("10 smoke points within {worst:.2e}"))
    } else {
        Err(format!("relative deviation {worst:.2e} > 1e-10"))
    }
}

pub fn check_smooth_datum() -> Check {
    let datum = DirichletDatum::Smooth;
    let mut worst: f64 = 0.0;
    for (t, x, want) in SMOOTH_DATUM_GOLDEN {
        let oracle = smooth_datum_oracle(t, x);
        worst = worst.max(rel_err(datum.f(t, x), want)).max(rel_err(oracle, want));
    }
    if worst <= 1e-6 {
        Ok(format!("10 probe points within {worst:.2e}"))
    } else {
        Err(format!("relative deviation {worst:.2e} > 1e-6"))
    }
}

pub fn check_galerkin_orthogonality() -> Check {
    let mut rng = StdRng::seed_from_u64(16);
    let mut worst: f64 = 0.0;
    for datum in [DirichletDatum::Smooth, DirichletDatum::Peak, DirichletDatum::Ramp { k: 0.0 }, DirichletDatum::TimePower] {
        let mesh = random_mesh(&mut rng);
        let sys = assemble(&mesh, &datum, &QuadConfig::default()).map_err(|e| e.to_string())?;
        let alpha = solve_dense(&sys).map_err(|e| e.to_string())?;
        let n = sys.size();
        let scale = max_abs(sys.rhs());
        for i in 0..n {
            let r: f64 = (0..n).map(|j| sys.entry(i, j) * alpha[j]).sum::<f64>() - sys.rhs()[i];
            worst = worst.max(r.abs() / scale);
        }
    }
    if worst <= 1e-6 {
        Ok(format!("max |E alpha - beta|_i / |beta|_inf = {worst:.2e}"))
    } else {
        Err(format!("residual {worst:.2e} > 1e-6"))
    }
}
