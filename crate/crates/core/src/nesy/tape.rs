//! A small reverse-mode autodiff tape over dense row-major matrices.

use std::rc::Rc;

use super::circuit::CircuitProgram;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn scalar(x: f64) -> Self {
        Mat {
            rows: 1,
            cols: 1,
            data: vec![x],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn add_assign(&mut self, o: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }
}

/// `a (n×k) · b (k×m)`.
fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows, "matmul shape mismatch");
    let mut out = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let o = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let x = a.data[i * a.cols + k];
            if x == 0.0 {
                continue;
            }
            let br = &b.data[k * b.cols..(k + 1) * b.cols];
            for (oj, bj) in o.iter_mut().zip(br) {
                *oj += x * bj;
            }
        }
    }
    out
}

/// `aᵀ · b`.
fn matmul_tn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows);
    let mut out = Mat::zeros(a.cols, b.cols);
    for r in 0..a.rows {
        let br = b.row(r);
        for i in 0..a.cols {
            let x = a.data[r * a.cols + i];
            if x == 0.0 {
                continue;
            }
            let o = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (oj, bj) in o.iter_mut().zip(br) {
                *oj += x * bj;
            }
        }
    }
    out
}

/// `a · bᵀ`.
fn matmul_nt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols);
    let mut out = Mat::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let ar = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = ar.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// Numerically stable `ln σ(z)`.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn bce_count(rows: usize, mask: &[bool]) -> f64 {
    (rows * mask.iter().filter(|&&m| m).count()).max(1) as f64
}

/// Handle to a tape value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Relu(Var),
    Add(Var, Var),
    Scale(Var, f64),
    /// Binary cross-entropy averaged over every masked entry.
    BceLogits {
        logits: Var,
        targets: Rc<Vec<Vec<bool>>>,
        mask: Rc<Vec<bool>>,
    },
    /// Mean over rows of `-ln max(mass, floor)` where `mass` is the
    /// probability that independent Bernoulli labels satisfy the circuit.
    SemanticLoss {
        logits: Var,
        program: Rc<CircuitProgram>,
        evidence: Rc<Vec<Vec<Option<bool>>>>,
        floor: f64,
    },
    /// Mean over rows of `-ln p(y | evidence)` under gated sum weights.
    SplNll {
        gates: Var,
        program: Rc<CircuitProgram>,
        targets: Rc<Vec<Vec<bool>>>,
        evidence: Rc<Vec<Vec<Option<bool>>>>,
    },
}

struct Node {
    value: Mat,
    op: Op,
}

/// Parameter values and their accumulated gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub values: Vec<Mat>,
    pub grads: Vec<Mat>,
}

impl Params {
    pub fn new(values: Vec<Mat>) -> Self {
        let grads = values.iter().map(|m| Mat::zeros(m.rows, m.cols)).collect();
        Params { values, grads }
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.data.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn count(&self) -> usize {
        self.values.iter().map(|m| m.data.len()).sum()
    }

    /// All parameters as one flat vector.
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|m| m.data.iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.grads.iter().flat_map(|m| m.data.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for m in &mut self.values {
            for x in &mut m.data {
                *x = *it.next().expect("flat vector is long enough");
            }
        }
    }
}

/// Records operations for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn input(&mut self, m: Mat) -> Var {
        self.push(m, Op::Input)
    }

    pub fn param(&mut self, params: &Params, i: usize) -> Var {
        self.push(params.values[i].clone(), Op::Param(i))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = matmul(self.value(a), self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let mut v = self.value(a).clone();
        let b = self.value(bias);
        assert_eq!(b.data.len(), v.cols, "bias width");
        for r in 0..v.rows {
            for c in 0..v.cols {
                v.data[r * v.cols + c] += b.data[c];
            }
        }
        self.push(v, Op::AddBias(a, bias))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x = x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x *= c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn bce_logits(&mut self, logits: Var, targets: Rc<Vec<Vec<bool>>>, mask: Rc<Vec<bool>>) -> Var {
        let z = self.value(logits);
        let mut total = 0.0;
        for r in 0..z.rows {
            for c in 0..z.cols {
                if mask[c] {
                    let x = z.at(r, c);
                    total -= if targets[r][c] { log_sigmoid(x) } else { log_sigmoid(-x) };
                }
            }
        }
        let v = Mat::scalar(total / bce_count(z.rows, &mask));
        self.push(v, Op::BceLogits { logits, targets, mask })
    }

    pub fn semantic_loss(
        &mut self,
        logits: Var,
        program: Rc<CircuitProgram>,
        evidence: Rc<Vec<Vec<Option<bool>>>>,
        floor: f64,
    ) -> Var {
        let z = self.value(logits);
        let mut total = 0.0;
        for r in 0..z.rows {
            let lm = program.bernoulli_log_mass(z.row(r), &evidence[r]);
            total -= lm.max(floor.ln());
        }
        let v = Mat::scalar(total / z.rows.max(1) as f64);
        self.push(
            v,
            Op::SemanticLoss {
                logits,
                program,
                evidence,
                floor,
            },
        )
    }

    pub fn spl_nll(
        &mut self,
        gates: Var,
        program: Rc<CircuitProgram>,
        targets: Rc<Vec<Vec<bool>>>,
        evidence: Rc<Vec<Vec<Option<bool>>>>,
    ) -> Var {
        let g = self.value(gates);
        let mut total = 0.0;
        for r in 0..g.rows {
            total -= program.gated_log_prob(g.row(r), &targets[r], &evidence[r]);
        }
        let v = Mat::scalar(total / g.rows.max(1) as f64);
        self.push(
            v,
            Op::SplNll {
                gates,
                program,
                targets,
                evidence,
            },
        )
    }

    /// Back-propagates from scalar `out`, adding parameter gradients into
    /// `params.grads`.
    pub fn backward(&self, out: Var, params: &mut Params) {
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Mat::scalar(1.0));
        let acc = |grads: &mut Vec<Option<Mat>>, v: Var, g: Mat| match &mut grads[v.0] {
            Some(x) => x.add_assign(&g),
            slot @ None => *slot = Some(g),
        };
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(p) => params.grads[*p].add_assign(&g),
                Op::MatMul(a, b) => {
                    let ga = matmul_nt(&g, self.value(*b));
                    let gb = matmul_tn(self.value(*a), &g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddBias(a, bias) => {
                    let mut gb = Mat::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for c in 0..g.cols {
                            gb.data[c] += g.at(r, c);
                        }
                    }
                    let shape = self.value(*bias);
                    gb.rows = shape.rows;
                    gb.cols = shape.cols;
                    acc(&mut grads, *bias, gb);
                    acc(&mut grads, *a, g);
                }
                Op::Relu(a) => {
                    let mut ga = g;
                    for (x, y) in ga.data.iter_mut().zip(&self.nodes[i].value.data) {
                        if *y <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Scale(a, c) => {
                    let mut ga = g;
                    ga.data.iter_mut().for_each(|x| *x *= c);
                    acc(&mut grads, *a, ga);
                }
                Op::BceLogits { logits, targets, mask } => {
                    let z = self.value(*logits);
                    let s = g.data[0] / bce_count(z.rows, mask);
                    let mut gz = Mat::zeros(z.rows, z.cols);
                    for r in 0..z.rows {
                        for c in 0..z.cols {
                            if mask[c] {
                                let t = targets[r][c] as u8 as f64;
                                gz.data[r * z.cols + c] = s * (sigmoid(z.at(r, c)) - t);
                            }
                        }
                    }
                    acc(&mut grads, *logits, gz);
                }
                Op::SemanticLoss {
                    logits,
                    program,
                    evidence,
                    floor,
                } => {
                    let z = self.value(*logits);
                    let s = g.data[0] / z.rows.max(1) as f64;
                    let mut gz = Mat::zeros(z.rows, z.cols);
                    for r in 0..z.rows {
                        let (lm, dz) = program.bernoulli_log_mass_grad(z.row(r), &evidence[r]);
                        if lm < floor.ln() {
                            continue;
                        }
                        for (c, d) in dz.into_iter().enumerate() {
                            gz.data[r * z.cols + c] = -s * d;
                        }
                    }
                    acc(&mut grads, *logits, gz);
                }
                Op::SplNll {
                    gates,
                    program,
                    targets,
                    evidence,
                } => {
                    let gm = self.value(*gates);
                    let s = g.data[0] / gm.rows.max(1) as f64;
                    let mut gg = Mat::zeros(gm.rows, gm.cols);
                    for r in 0..gm.rows {
                        let (_, d) = program.gated_log_prob_grad(gm.row(r), &targets[r], &evidence[r]);
                        for (c, x) in d.into_iter().enumerate() {
                            gg.data[r * gm.cols + c] = -s * x;
                        }
                    }
                    acc(&mut grads, *gates, gg);
                }
            }
        }
    }
}

/// Adam with the usual defaults.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Mat>,
    v: Vec<Mat>,
}

impl Adam {
    pub fn new(params: &Params, lr: f64) -> Self {
        let z: Vec<Mat> = params.values.iter().map(|m| Mat::zeros(m.rows, m.cols)).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: z.clone(),
            v: z,
        }
    }

    pub fn step(&mut self, params: &mut Params) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((w, g), (m, v)) in params
            .values
            .iter_mut()
            .zip(&params.grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for j in 0..w.data.len() {
                let gj = g.data[j];
                m.data[j] = self.beta1 * m.data[j] + (1.0 - self.beta1) * gj;
                v.data[j] = self.beta2 * v.data[j] + (1.0 - self.beta2) * gj * gj;
                let mh = m.data[j] / c1;
                let vh = v.data[j] / c2;
                w.data[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}
