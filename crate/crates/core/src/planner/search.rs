//! Derivative-free local search used by both planning stages.

/// Outcome of a bounded local search (maximization).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Nelder-Mead simplex search for a maximum inside the box `[lo, hi]`.
///
/// Trial points are clamped onto the box. Converges when every vertex lies
/// within `tol` (max-norm) of the best vertex.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_evals: usize,
) -> SearchResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    clamp_into(&mut start, lo, hi);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(&start, &mut evals);
    simplex.push((start.clone(), v0));
    for i in 0..dim {
        let mut x = start.clone();
        x[i] = if x[i] + step[i] <= hi[i] { x[i] + step[i] } else { x[i] - step[i] };
        clamp_into(&mut x, lo, hi);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let spread = |s: &[(Vec<f64>, f64)]| {
        s[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        if spread(&simplex) < tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }
        let worst = simplex[dim].clone();
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for i in 0..dim {
                centroid[i] += x[i] / dim as f64;
            }
        }
        let along = |coef: f64| {
            let mut p: Vec<f64> = (0..dim).map(|i| centroid[i] + coef * (centroid[i] - worst.0[i])).collect();
            clamp_into(&mut p, lo, hi);
            p
        };

        let reflected = along(1.0);
        let fr = eval(&reflected, &mut evals);
        if fr > simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded, &mut evals);
            simplex[dim] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr > worst.1 {
            let p = along(0.5);
            let v = eval(&p, &mut evals);
            (p, v)
        } else {
            let p = along(-0.5);
            let v = eval(&p, &mut evals);
            (p, v)
        };
        let accept = if fr > worst.1 { fc >= fr } else { fc > worst.1 };
        if accept {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = vertex.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
            clamp_into(&mut p, lo, hi);
            let v = eval(&p, &mut evals);
            *vertex = (p, v);
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = simplex.swap_remove(0);
    SearchResult { x, value, evaluations: evals, converged }
}
