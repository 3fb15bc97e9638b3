//! Nelder-Mead on the unit box, with every trial point clamped into the box.

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub initial_step: f64,
    pub max_iters: usize,
    pub x_tol: f64,
    pub f_tol: f64,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` over `[0, 1]^n` starting from `x0`.
///
/// Stops when both the spread of simplex values is below `f_tol` and every
/// vertex lies within `x_tol` of the best one, or after `max_iters`.
pub fn minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: NmOptions) -> NmResult {
    let n = x0.len();
    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    if n == 0 {
        return NmResult { f: eval(&f, &start), x: start, iterations: 0 };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.clone(), eval(&f, &start)));
    for i in 0..n {
        let mut v = start.clone();
        v[i] = if v[i] + opts.initial_step <= 1.0 { v[i] + opts.initial_step } else { v[i] - opts.initial_step };
        let fv = eval(&f, &v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    while iterations < opts.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
        let best = &simplex[0];
        let worst_f = simplex[n].1;
        let f_spread = if best.1.is_finite() && worst_f.is_finite() { worst_f - best.1 } else { f64::INFINITY };
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect();
            clamp_unit(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = eval(&f, &xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(&f, &xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&f, &xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&x_best) {
                *x = b + 0.5 * (*x - b);
            }
            *fv = eval(&f, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
    let (x, f) = simplex.swap_remove(0);
    NmResult { x, f, iterations }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c.is_ne() {
            return c;
        }
    }
    a.len().cmp(&b.len())
}
