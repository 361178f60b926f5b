//! Exact inference on a single chain of log-potentials.
//!
//! A chain of length `T` over `J` states scores a path `y` as
//!
//! ```text
//! init[y_1] + node[1, y_1] + Σ_{t≥2} (trans[y_{t-1}, y_t] + node[t, y_t])
//! ```
//!
//! HMMs (log-probabilities), linear-chain CRFs (weighted feature sums) and
//! the merged clique chain of factorial models all reduce to this form.

use ndarray::{Array2, ArrayView2};

/// `log Σ exp(x)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainPotentials {
    /// Start scores, length `J`.
    pub init: Vec<f64>,
    /// `J × J`, shared by every step.
    pub trans: Array2<f64>,
    /// `T × J`.
    pub node: Array2<f64>,
}

impl ChainPotentials {
    pub fn len(&self) -> usize {
        self.node.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.node.nrows() == 0
    }

    pub fn states(&self) -> usize {
        self.init.len()
    }

    /// Score of one path, summed left to right in the same order as
    /// [`viterbi`].
    pub fn path_score(&self, path: &[usize]) -> f64 {
        let mut s = self.init[path[0]] + self.node[[0, path[0]]];
        for t in 1..path.len() {
            s = s + self.trans[[path[t - 1], path[t]]] + self.node[[t, path[t]]];
        }
        s
    }
}

/// Best path and its score. At every step the lowest-index predecessor wins
/// ties, and the lowest-index final state wins ties at the end.
pub fn viterbi(init: &[f64], trans: ArrayView2<f64>, node: ArrayView2<f64>) -> (f64, Vec<usize>) {
    let (len, states) = node.dim();
    assert!(len > 0, "viterbi on an empty sequence");
    // trans transposed so the predecessor scan is contiguous
    let trans_t = trans.t().as_standard_layout().into_owned();
    let mut delta: Vec<f64> = (0..states).map(|j| init[j] + node[[0, j]]).collect();
    let mut next = vec![0.0; states];
    let mut back = vec![0u32; (len - 1) * states];
    for t in 1..len {
        let bp = &mut back[(t - 1) * states..t * states];
        for j in 0..states {
            let col = trans_t.row(j);
            let col = col.as_slice().expect("standard layout");
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (i, (&d, &a)) in delta.iter().zip(col).enumerate() {
                let s = d + a;
                if s > best {
                    best = s;
                    arg = i;
                }
            }
            next[j] = best + node[[t, j]];
            bp[j] = arg as u32;
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut last = 0;
    for j in 1..states {
        if delta[j] > delta[last] {
            last = j;
        }
    }
    let score = delta[last];
    let mut path = vec![0; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[(t - 1) * states + path[t]] as usize;
    }
    (score, path)
}

/// Forward-backward results in log space.
#[derive(Clone, Debug)]
pub struct ChainMarginals {
    pub log_z: f64,
    /// Log forward messages `T × J`.
    pub alpha: Array2<f64>,
    /// Log backward messages `T × J`.
    pub beta: Array2<f64>,
}

/// `exp(trans - max)` together with `max`, for scaled matrix products.
struct ScaledTrans {
    exp: Array2<f64>,
    shift: f64,
}

impl ScaledTrans {
    fn new(trans: ArrayView2<f64>) -> Self {
        let shift = trans.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        Self { exp: trans.mapv(|v| (v - shift).exp()), shift }
    }
}

fn scaled(v: &[f64]) -> (Vec<f64>, f64) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max = if max.is_finite() { max } else { 0.0 };
    (v.iter().map(|&x| (x - max).exp()).collect(), max)
}

// Sums below this are recomputed with an exact log-sum-exp.
const UNDERFLOW: f64 = 1e-280;

pub fn forward_backward(pot: &ChainPotentials) -> ChainMarginals {
    let (len, states) = pot.node.dim();
    assert!(len > 0, "forward-backward on an empty sequence");
    let st = ScaledTrans::new(pot.trans.view());
    let mut alpha = Array2::<f64>::zeros((len, states));
    for j in 0..states {
        alpha[[0, j]] = pot.init[j] + pot.node[[0, j]];
    }
    let mut buf = vec![0.0; states];
    for t in 1..len {
        let prev = alpha.row(t - 1).to_vec();
        let (u, m) = scaled(&prev);
        for j in 0..states {
            let mut s = 0.0;
            for i in 0..states {
                s += u[i] * st.exp[[i, j]];
            }
            let lse = if s > UNDERFLOW {
                m + st.shift + s.ln()
            } else {
                for i in 0..states {
                    buf[i] = prev[i] + pot.trans[[i, j]];
                }
                log_sum_exp(&buf)
            };
            alpha[[t, j]] = pot.node[[t, j]] + lse;
        }
    }
    let log_z = log_sum_exp(alpha.row(len - 1).as_slice().expect("standard layout"));

    let mut beta = Array2::<f64>::zeros((len, states));
    for t in (0..len - 1).rev() {
        let ahead: Vec<f64> = (0..states).map(|j| pot.node[[t + 1, j]] + beta[[t + 1, j]]).collect();
        let (v, m) = scaled(&ahead);
        for i in 0..states {
            let mut s = 0.0;
            for j in 0..states {
                s += st.exp[[i, j]] * v[j];
            }
            beta[[t, i]] = if s > UNDERFLOW {
                m + st.shift + s.ln()
            } else {
                for j in 0..states {
                    buf[j] = pot.trans[[i, j]] + ahead[j];
                }
                log_sum_exp(&buf)
            };
        }
    }
    ChainMarginals { log_z, alpha, beta }
}

impl ChainMarginals {
    /// `p(y_t = j | x)`, `T × J`.
    pub fn node_marginals(&self) -> Array2<f64> {
        let mut p = &self.alpha + &self.beta;
        p.mapv_inplace(|v| (v - self.log_z).exp());
        p
    }

    /// `p(y_{t-1} = i, y_t = j | x)` for `t ≥ 1`.
    pub fn edge_marginal(&self, pot: &ChainPotentials, t: usize) -> Array2<f64> {
        assert!(t >= 1 && t < pot.len());
        let states = pot.states();
        Array2::from_shape_fn((states, states), |(i, j)| {
            (self.alpha[[t - 1, i]] + pot.trans[[i, j]] + pot.node[[t, j]] + self.beta[[t, j]] - self.log_z).exp()
        })
    }

    /// `Σ_t p(y_{t-1} = i, y_t = j | x)`, computed with scaled products.
    pub fn expected_transitions(&self, pot: &ChainPotentials) -> Array2<f64> {
        let (len, states) = pot.node.dim();
        let st = ScaledTrans::new(pot.trans.view());
        let mut acc = Array2::<f64>::zeros((states, states));
        for t in 1..len {
            let (u, mu) = scaled(self.alpha.row(t - 1).as_slice().unwrap());
            let ahead: Vec<f64> = (0..states).map(|j| pot.node[[t, j]] + self.beta[[t, j]]).collect();
            let (v, mv) = scaled(&ahead);
            let scale = (mu + mv + st.shift - self.log_z).exp();
            if scale.is_finite() && scale > 0.0 {
                for i in 0..states {
                    let ui = u[i] * scale;
                    if ui == 0.0 {
                        continue;
                    }
                    for j in 0..states {
                        acc[[i, j]] += ui * st.exp[[i, j]] * v[j];
                    }
                }
            } else {
                acc += &self.edge_marginal(pot, t);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_chain(rng: &mut ChaCha8Rng, states: usize, len: usize, scale: f64) -> ChainPotentials {
        ChainPotentials {
            init: (0..states).map(|_| rng.gen_range(-scale..scale)).collect(),
            trans: Array2::from_shape_fn((states, states), |_| rng.gen_range(-scale..scale)),
            node: Array2::from_shape_fn((len, states), |_| rng.gen_range(-scale..scale)),
        }
    }

    fn all_paths(states: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| (0..states).map(move |s| [p.clone(), vec![s]].concat()))
                .collect();
        }
        out
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let pot = random_chain(&mut rng, 3, 4, 2.0);
            let scores: Vec<f64> = all_paths(3, 4).iter().map(|p| pot.path_score(p)).collect();
            let fb = forward_backward(&pot);
            let brute = log_sum_exp(&scores);
            assert!(((fb.log_z - brute) / brute).abs() < 1e-10);
        }
    }

    #[test]
    fn expected_transitions_match_explicit_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pot = random_chain(&mut rng, 4, 7, 3.0);
        let fb = forward_backward(&pot);
        let mut direct = Array2::zeros((4, 4));
        for t in 1..7 {
            direct += &fb.edge_marginal(&pot, t);
        }
        let fast = fb.expected_transitions(&pot);
        for (a, b) in direct.iter().zip(fast.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn underflow_fallback_keeps_log_z_finite() {
        let mut pot = ChainPotentials {
            init: vec![0.0, 0.0],
            trans: Array2::from_shape_vec((2, 2), vec![0.0, -2000.0, -2000.0, 0.0]).unwrap(),
            node: Array2::from_shape_vec((2, 2), vec![0.0, -5000.0, -5000.0, 0.0]).unwrap(),
        };
        let fb = forward_backward(&pot);
        assert!(fb.log_z.is_finite());
        let paths = all_paths(2, 2);
        let brute = log_sum_exp(&paths.iter().map(|p| pot.path_score(p)).collect::<Vec<_>>());
        assert!((fb.log_z - brute).abs() < 1e-9);
        pot.node[[1, 1]] = 0.0;
        assert!(forward_backward(&pot).log_z.is_finite());
    }

    #[test]
    fn viterbi_tie_rule() {
        let pot = ChainPotentials { init: vec![0.0; 3], trans: Array2::zeros((3, 3)), node: Array2::zeros((5, 3)) };
        assert_eq!(viterbi(&pot.init, pot.trans.view(), pot.node.view()).1, vec![0; 5]);
    }
}
