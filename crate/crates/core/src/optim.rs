//! Derivative-free minimization with the Nelder-Mead simplex method.

/// Outcome of one [`nelder_mead`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of the given
/// `step`, stopping after `max_evals` evaluations or when the simplex values
/// agree to `tol`. Standard coefficients: reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, max_evals: usize, tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let first = eval(x0, &mut evals);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), first)];
    for k in 0..d {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[k] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let best_of = |s: &[(Vec<f64>, f64)]| {
        s.iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .expect("simplex is nonempty")
    };
    if simplex.len() < d + 1 || d == 0 {
        let (x, value) = best_of(&simplex);
        return Minimum { x, value, evaluations: evals };
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[d].1 - simplex[0].1).abs() <= tol {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            if evals >= max_evals {
                simplex[d] = (xr, fr);
                break;
            }
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            if evals >= max_evals {
                break;
            }
            let (xc, fc) = if fr < simplex[d].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    if evals >= max_evals {
                        break;
                    }
                    let x: Vec<f64> = best.iter().zip(&entry.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let v = eval(&x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
    }
    let (x, value) = best_of(&simplex);
    Minimum { x, value, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_bowl() {
        let m = nelder_mead(|x| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2), &[0.0, 0.0], 0.5, 500, 1e-14);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] + 0.5).abs() < 1e-4, "{m:?}");
        assert!(m.evaluations <= 500);
    }

    #[test]
    fn rosenbrock_progress() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], 0.1, 2000, 1e-16);
        assert!(m.value < 1e-6, "{m:?}");
    }

    #[test]
    fn respects_budget() {
        let mut calls = 0;
        let m = nelder_mead(
            |x| {
                calls += 1;
                x.iter().map(|v| v.sin()).sum()
            },
            &[0.3, 0.2, 0.1, 0.0],
            0.2,
            7,
            0.0,
        );
        assert_eq!(calls, 7);
        assert_eq!(m.evaluations, 7);
        let m = nelder_mead(|x| x[0] * x[0], &[2.0], 1.0, 1, 0.0);
        assert_eq!((m.x.clone(), m.value), (vec![2.0], 4.0));
    }
}
