//! Derivative-free minimization with the Nelder-Mead simplex method.

/// Tuning for [`minimize`]. Coefficients are the standard ones.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop once every vertex is within this distance of the best vertex.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            diameter_tol: 1e-8,
            max_evals: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], evals: &mut usize) -> f64 {
    *evals += 1;
    let v = f(x);
    // NaN compares badly in the ordering below; treat it as +inf
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn blend(a: &[f64], b: &[f64], coeff: f64) -> Vec<f64> {
    // a + coeff * (a - b)
    a.iter().zip(b).map(|(x, y)| x + coeff * (x - y)).collect()
}

impl NelderMead {
    /// Minimizes `f` starting from `x0`, with initial simplex vertices at
    /// `x0 + steps[i] * e_i`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], steps: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        assert_eq!(x0.len(), steps.len());
        let n = x0.len();
        let mut evals = 0;
        let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
        simplex.push(Vertex {
            x: x0.to_vec(),
            f: eval(&mut f, x0, &mut evals),
        });
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += steps[i];
            let fx = eval(&mut f, &x, &mut evals);
            simplex.push(Vertex { x, f: fx });
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    v.x.iter()
                        .zip(&simplex[0].x)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            if diameter < self.diameter_tol {
                converged = true;
                break;
            }
            if evals >= self.max_evals {
                break;
            }

            let mut centroid = vec![0.0; n];
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(&v.x) {
                    *c += x / n as f64;
                }
            }
            let worst = &simplex[n];
            let best_f = simplex[0].f;
            let second_worst_f = simplex[n - 1].f;

            let xr = blend(&centroid, &worst.x, self.reflection);
            let fr = eval(&mut f, &xr, &mut evals);

            if fr < best_f {
                let xe = blend(&centroid, &worst.x, self.reflection * self.expansion);
                let fe = eval(&mut f, &xe, &mut evals);
                simplex[n] = if fe < fr {
                    Vertex { x: xe, f: fe }
                } else {
                    Vertex { x: xr, f: fr }
                };
                continue;
            }
            if fr < second_worst_f {
                simplex[n] = Vertex { x: xr, f: fr };
                continue;
            }

            // contraction, outside if the reflected point beat the worst
            let (xc, fc, accept) = if fr < worst.f {
                let xc = blend(&centroid, &worst.x, self.reflection * self.contraction);
                let fc = eval(&mut f, &xc, &mut evals);
                (xc, fc, fc <= fr)
            } else {
                let xc = blend(&centroid, &worst.x, -self.contraction);
                let fc = eval(&mut f, &xc, &mut evals);
                (xc, fc, fc < worst.f)
            };
            if accept {
                simplex[n] = Vertex { x: xc, f: fc };
                continue;
            }

            let best = simplex[0].x.clone();
            for v in simplex.iter_mut().skip(1) {
                for (x, b) in v.x.iter_mut().zip(&best) {
                    *x = b + self.shrink * (*x - b);
                }
                v.f = eval(&mut f, &v.x, &mut evals);
            }
        }

        let best = simplex.swap_remove(0);
        Minimum {
            x: best.x,
            value: best.f,
            evals,
            converged,
        }
    }
}
