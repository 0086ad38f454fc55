//! Reduced-basis flow map model
//!
//! ```text
//! V_{n+1} = P_out P_in V_n + P_out M(P_in V_n, ..., P_in V_{n-n_mem+1})
//! ```
//!
//! With `project_skip = false` the first term is `V_n` itself.

use serde::{Deserialize, Serialize};

use super::FlowModel;
use crate::dense::{gemm, Matrix, Op, Rng};
use crate::error::{Error, Result};
use crate::nn::{glorot, param_count, Mlp, MlpGrads, Tape};
use crate::reduction::ReducedBasis;

pub const MLP_HIDDEN_LAYERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `P_in = V_red^T`, `P_out = V_red`, frozen.
    Fixed,
    /// One trainable matrix, `P_out = P_in^T`.
    Constrained,
    /// Independent trainable `P_in` and `P_out`.
    Unconstrained,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Constrained => "constrained",
            Mode::Unconstrained => "unconstrained",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcfmlConfig {
    pub n_full: usize,
    pub n_red: usize,
    pub n_mem: usize,
    pub hidden: usize,
    pub mode: Mode,
    pub project_skip: bool,
}

impl PcfmlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_red == 0 || self.n_mem == 0 || self.hidden == 0 {
            return Err(Error::config("n_red, n_mem and hidden width must be at least 1"));
        }
        if self.n_red >= self.n_full {
            return Err(Error::config(format!(
                "n_red = {} must be below n_full = {}",
                self.n_red, self.n_full
            )));
        }
        Ok(())
    }

    pub fn mlp_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_mem * self.n_red];
        s.extend([self.hidden; MLP_HIDDEN_LAYERS]);
        s.push(self.n_red);
        s
    }

    pub fn param_count(&self) -> usize {
        let proj = self.n_full * self.n_red;
        param_count(&self.mlp_sizes())
            + match self.mode {
                Mode::Fixed => 0,
                Mode::Constrained => proj,
                Mode::Unconstrained => 2 * proj,
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcfmlModel {
    cfg: PcfmlConfig,
    /// `P_in`, `n_red x n_full`. Also `P_out^T` in fixed and constrained mode.
    p: Matrix,
    /// `n_full x n_red`, unconstrained mode only.
    p_out: Option<Matrix>,
    mlp: Mlp,
}

#[derive(Debug, Clone)]
pub struct PcfmlGrads {
    pub mlp: MlpGrads,
    pub p: Option<Matrix>,
    pub p_out: Option<Matrix>,
}

#[derive(Debug)]
pub struct PcfmlTape {
    mlp: Tape,
    y: Matrix,
}

impl PcfmlModel {
    /// Fixed mode takes its projections from `basis`; the other modes draw
    /// them Glorot-uniform after the MLP weights.
    pub fn new(cfg: PcfmlConfig, basis: Option<&ReducedBasis>, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let mlp = Mlp::new(&cfg.mlp_sizes(), rng)?;
        let (p, p_out) = match cfg.mode {
            Mode::Fixed => {
                let b = basis.ok_or_else(|| Error::config("fixed mode requires a reduced basis"))?;
                if b.v_red.shape() != (cfg.n_full, cfg.n_red) {
                    return Err(Error::config(format!(
                        "basis is {}x{}, model needs {}x{}",
                        b.v_red.rows(),
                        b.v_red.cols(),
                        cfg.n_full,
                        cfg.n_red
                    )));
                }
                (b.v_red.transpose(), None)
            }
            Mode::Constrained => (glorot(cfg.n_red, cfg.n_full, rng), None),
            Mode::Unconstrained => {
                let p = glorot(cfg.n_red, cfg.n_full, rng);
                (p, Some(glorot(cfg.n_full, cfg.n_red, rng)))
            }
        };
        Ok(Self { cfg, p, p_out, mlp })
    }

    /// Assembles a model from explicit parts. `p_out` must be given exactly
    /// in unconstrained mode.
    pub fn from_parts(cfg: PcfmlConfig, p_in: Matrix, p_out: Option<Matrix>, mlp: Mlp) -> Result<Self> {
        cfg.validate()?;
        if p_in.shape() != (cfg.n_red, cfg.n_full) {
            return Err(Error::shape(format!("P_in is {}x{}", p_in.rows(), p_in.cols())));
        }
        if mlp.sizes() != cfg.mlp_sizes().as_slice() {
            return Err(Error::shape(format!("MLP sizes {:?} do not match config", mlp.sizes())));
        }
        match (cfg.mode, &p_out) {
            (Mode::Unconstrained, Some(m)) if m.shape() == (cfg.n_full, cfg.n_red) => {}
            (Mode::Unconstrained, _) => return Err(Error::shape("unconstrained mode needs an n_full x n_red P_out")),
            (_, Some(_)) => return Err(Error::config("P_out is tied to P_in in this mode")),
            (_, None) => {}
        }
        Ok(Self {
            cfg,
            p: p_in,
            p_out,
            mlp,
        })
    }

    pub fn config(&self) -> &PcfmlConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.cfg.mode
    }

    pub fn p_in(&self) -> &Matrix {
        &self.p
    }

    pub fn p_out(&self) -> Matrix {
        match &self.p_out {
            Some(m) => m.clone(),
            None => self.p.transpose(),
        }
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    /// `(lambda / 2) ||P P^T - I||_F^2`
    pub fn orthogonality_penalty(&self, lambda: f64) -> f64 {
        let mut a = self.p.matmul_t(&self.p);
        for k in 0..self.cfg.n_red {
            a[(k, k)] -= 1.0;
        }
        0.5 * lambda * a.as_slice().iter().map(|v| v * v).sum::<f64>()
    }

    fn p_trainable(&self) -> bool {
        self.cfg.mode != Mode::Fixed
    }
}

impl FlowModel for PcfmlModel {
    type Grads = PcfmlGrads;
    type Tape = PcfmlTape;

    fn n_full(&self) -> usize {
        self.cfg.n_full
    }

    fn n_mem(&self) -> usize {
        self.cfg.n_mem
    }

    fn count_params(&self) -> usize {
        self.cfg.param_count()
    }

    fn trainable(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        self.mlp.append_flat(&mut out);
        if self.p_trainable() {
            out.extend_from_slice(self.p.as_slice());
        }
        if let Some(m) = &self.p_out {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    fn set_trainable(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.count_params() {
            return Err(Error::shape(format!(
                "model has {} trainable parameters, got {}",
                self.count_params(),
                flat.len()
            )));
        }
        let mut at = self.mlp.load_flat(flat)?;
        if self.p_trainable() {
            let n = self.p.as_slice().len();
            self.p.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        if let Some(m) = &mut self.p_out {
            let n = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&flat[at..at + n]);
        }
        Ok(())
    }

    fn zero_grads(&self) -> PcfmlGrads {
        PcfmlGrads {
            mlp: MlpGrads::zeros_like(&self.mlp),
            p: self
                .p_trainable()
                .then(|| Matrix::zeros(self.cfg.n_red, self.cfg.n_full)),
            p_out: self
                .p_out
                .as_ref()
                .map(|m| Matrix::zeros(m.rows(), m.cols())),
        }
    }

    fn flatten_grads(&self, g: &PcfmlGrads) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_params());
        g.mlp.append_flat(&mut out);
        if let Some(p) = &g.p {
            out.extend_from_slice(p.as_slice());
        }
        if let Some(p) = &g.p_out {
            out.extend_from_slice(p.as_slice());
        }
        out
    }

    /// `C = S P_in^T`
    fn encode(&self, state: &Matrix) -> Matrix {
        state.matmul_t(&self.p)
    }

    fn encode_backward(&self, state: &Matrix, d_feat: &Matrix, g: &mut PcfmlGrads) -> Matrix {
        if let Some(gp) = &mut g.p {
            gemm(1.0, d_feat, Op::T, state, Op::N, 1.0, gp);
        }
        d_feat.matmul(&self.p)
    }

    fn advance(&self, states: &[&Matrix], feats: &[&Matrix]) -> Result<(Matrix, PcfmlTape)> {
        let (n_mem, n_red) = (self.cfg.n_mem, self.cfg.n_red);
        if feats.len() != n_mem || states.is_empty() {
            return Err(Error::shape(format!(
                "window holds {} encoded states, model memory is {n_mem}",
                feats.len()
            )));
        }
        let batch = feats[0].rows();
        if feats.iter().any(|f| f.shape() != (batch, n_red)) {
            return Err(Error::shape("encoded window has inconsistent shapes"));
        }
        // most recent code first
        let x = Matrix::from_fn(batch, n_mem * n_red, |b, c| feats[c / n_red][(b, c % n_red)]);
        let (mut y, tape) = self.mlp.forward_batch(&x)?;
        if self.cfg.project_skip {
            y.add_assign(feats[0]);
        }
        let mut out = match &self.p_out {
            Some(m) => y.matmul_t(m),
            None => y.matmul(&self.p),
        };
        if !self.cfg.project_skip {
            if states[0].shape() != out.shape() {
                return Err(Error::shape("current state does not match model width"));
            }
            out.add_assign(states[0]);
        }
        Ok((out, PcfmlTape { mlp: tape, y }))
    }

    fn advance_backward(
        &self,
        tape: &PcfmlTape,
        d_out: &Matrix,
        g: &mut PcfmlGrads,
    ) -> Result<(Option<Matrix>, Vec<Matrix>)> {
        let (n_mem, n_red) = (self.cfg.n_mem, self.cfg.n_red);
        let dy = match &self.p_out {
            Some(m) => {
                if let Some(gp) = &mut g.p_out {
                    gemm(1.0, d_out, Op::T, &tape.y, Op::N, 1.0, gp);
                }
                d_out.matmul(m)
            }
            None => {
                if let Some(gp) = &mut g.p {
                    gemm(1.0, &tape.y, Op::T, d_out, Op::N, 1.0, gp);
                }
                d_out.matmul_t(&self.p)
            }
        };
        let dx = self.mlp.backward_batch(&tape.mlp, &dy, &mut g.mlp)?;
        let batch = dx.rows();
        let mut d_feats: Vec<Matrix> = (0..n_mem)
            .map(|j| Matrix::from_fn(batch, n_red, |b, c| dx[(b, j * n_red + c)]))
            .collect();
        let direct = if self.cfg.project_skip {
            d_feats[0].add_assign(&dy);
            None
        } else {
            Some(d_out.clone())
        };
        Ok((direct, d_feats))
    }

    /// Constrained mode: `(lambda / 2) ||P P^T - I||_F^2`, gradient
    /// `2 lambda (P P^T - I) P`.
    fn regularize(&self, lambda: f64, g: &mut PcfmlGrads) -> f64 {
        if self.cfg.mode != Mode::Constrained || lambda == 0.0 {
            return 0.0;
        }
        let mut a = self.p.matmul_t(&self.p);
        for k in 0..self.cfg.n_red {
            a[(k, k)] -= 1.0;
        }
        if let Some(gp) = &mut g.p {
            gemm(2.0 * lambda, &a, Op::N, &self.p, Op::N, 1.0, gp);
        }
        0.5 * lambda * a.as_slice().iter().map(|v| v * v).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Window;
    use crate::reduction::fixed_basis;

    fn cfg(mode: Mode, project_skip: bool) -> PcfmlConfig {
        PcfmlConfig {
            n_full: 9,
            n_red: 3,
            n_mem: 4,
            hidden: 5,
            mode,
            project_skip,
        }
    }

    fn basis(n_full: usize, n_red: usize, seed: u64) -> ReducedBasis {
        let mut rng = Rng::new(seed);
        let d = Matrix::from_fn(40, n_full, |_, _| rng.uniform(-1.0, 1.0));
        fixed_basis(&d, n_red).unwrap()
    }

    fn random_window(n_full: usize, n_mem: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Rng::new(seed);
        (0..n_mem)
            .map(|_| (0..n_full).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect()
    }

    fn zero_mlp(m: &mut PcfmlModel) {
        let sizes = m.mlp.sizes().to_vec();
        m.mlp = Mlp::zeros(&sizes).unwrap();
    }

    #[test]
    fn table_counts() {
        let c = |n_full, n_red, hidden, mode| {
            PcfmlConfig {
                n_full,
                n_red,
                n_mem: 20,
                hidden,
                mode,
                project_skip: true,
            }
            .param_count()
        };
        use Mode::*;
        let rows = [
            ((100, 2, 10), [652, 852, 1052]),
            ((50, 5, 15), [2075, 2325, 2575]),
            ((1537, 13, 15), [4603, 24584, 44565]),
            ((1537, 5, 15), [2075, 9760, 17445]),
        ];
        for ((n_full, n_red, h), expect) in rows {
            let got = [Fixed, Constrained, Unconstrained].map(|m| c(n_full, n_red, h, m));
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn construction_errors() {
        let mut rng = Rng::new(0);
        assert!(PcfmlModel::new(cfg(Mode::Fixed, true), None, &mut rng).is_err());
        let wrong = basis(9, 2, 1);
        assert!(PcfmlModel::new(cfg(Mode::Fixed, true), Some(&wrong), &mut rng).is_err());
        let mut c = cfg(Mode::Unconstrained, true);
        c.n_red = 9;
        assert!(PcfmlModel::new(c, None, &mut rng).is_err());
    }

    #[test]
    fn zero_network_without_projection_is_identity() {
        for mode in [Mode::Constrained, Mode::Unconstrained] {
            let mut m = PcfmlModel::new(cfg(mode, false), None, &mut Rng::new(3)).unwrap();
            zero_mlp(&mut m);
            let w = random_window(9, 4, 4);
            let out = m.step(&Window::from_vectors(&w).unwrap()).unwrap();
            assert_eq!(out, w[0]);
        }
    }

    #[test]
    fn fixed_projection_fixes_basis_span() {
        let b = basis(9, 3, 7);
        let mut m = PcfmlModel::new(cfg(Mode::Fixed, true), Some(&b), &mut Rng::new(3)).unwrap();
        zero_mlp(&mut m);
        let mut w = random_window(9, 4, 5);
        w[0] = b.v_red.matvec(&[0.3, -1.2, 0.7]);
        let out = m.step(&Window::from_vectors(&w).unwrap()).unwrap();
        for (a, e) in out.iter().zip(&w[0]) {
            assert!((a - e).abs() < 1e-12);
        }
        // idempotent on the span
        let mut w2 = w.clone();
        w2.insert(0, out.clone());
        w2.pop();
        let again = m.step(&Window::from_vectors(&w2).unwrap()).unwrap();
        for (a, e) in again.iter().zip(&out) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn step_matches_hand_composition() {
        for (mode, skip) in [
            (Mode::Constrained, true),
            (Mode::Unconstrained, true),
            (Mode::Unconstrained, false),
        ] {
            let m = PcfmlModel::new(cfg(mode, skip), None, &mut Rng::new(21)).unwrap();
            let w = random_window(9, 4, 22);
            let got = m.step(&Window::from_vectors(&w).unwrap()).unwrap();
            let p_in = m.p_in();
            let p_out = m.p_out();
            let codes: Vec<Vec<f64>> = w.iter().map(|s| p_in.matvec(s)).collect();
            let x: Vec<f64> = codes.concat();
            let (r, _) = m.mlp().forward(&x).unwrap();
            let expect: Vec<f64> = if skip {
                let y: Vec<f64> = codes[0].iter().zip(&r).map(|(a, b)| a + b).collect();
                p_out.matvec(&y)
            } else {
                let e = p_out.matvec(&r);
                w[0].iter().zip(&e).map(|(a, b)| a + b).collect()
            };
            for (a, e) in got.iter().zip(&expect) {
                assert!((a - e).abs() < 1e-14, "{mode}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn constrained_projections_share_storage() {
        let mut m = PcfmlModel::new(cfg(Mode::Constrained, true), None, &mut Rng::new(5)).unwrap();
        let mut flat = m.trainable();
        let n = flat.len();
        for v in &mut flat[n - 27..] {
            *v += 0.25;
        }
        m.set_trainable(&flat).unwrap();
        assert_eq!(m.p_out(), m.p_in().transpose());
        assert_eq!(m.count_params(), n);
        assert_eq!(m.trainable(), flat);
    }

    #[test]
    fn orthonormal_projection_has_zero_penalty() {
        let b = basis(9, 3, 2);
        let m = PcfmlModel::from_parts(
            cfg(Mode::Constrained, true),
            b.v_red.transpose(),
            None,
            Mlp::zeros(&cfg(Mode::Constrained, true).mlp_sizes()).unwrap(),
        )
        .unwrap();
        assert!(m.orthogonality_penalty(1e-2) < 1e-28);
    }

    #[test]
    fn window_length_checked() {
        let m = PcfmlModel::new(cfg(Mode::Unconstrained, true), None, &mut Rng::new(5)).unwrap();
        let w = random_window(9, 3, 1);
        assert!(m.step(&Window::from_vectors(&w).unwrap()).is_err());
        let w = random_window(8, 4, 1);
        assert!(m.step(&Window::from_vectors(&w).unwrap()).is_err());
    }
}
