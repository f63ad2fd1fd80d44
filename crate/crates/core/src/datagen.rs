//! Synthetic data: random ontologies, knowledge graphs sampled from a
//! compiled circuit, and noisy observation datasets built on top of them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cnf::Side;
use crate::dl::{ConceptExpr, Ontology, Part, RoleExpr, SubClassOf};
use crate::error::{Error, Result};
use crate::infer::{sample_many, sample, wmc, Parameterization};
use crate::pipeline::CompiledOntology;

/// Parameters of the random ontology generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_concepts: usize,
    pub n_roles: usize,
    /// Probability of a concept entering a role's domain.
    pub p_domain: f64,
    /// Probability of a concept entering a role's range.
    pub p_range: f64,
    /// Probability of two concepts being disjoint.
    pub p_disjoint: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_concepts == 0 {
            return Err(Error::InvalidParameter("at least one concept is required".into()));
        }
        for (name, p) in [("p_domain", self.p_domain), ("p_range", self.p_range), ("p_disjoint", self.p_disjoint)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Seeded generator shared by every sampling step.
pub fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn union(concepts: &[String]) -> ConceptExpr {
    let mut it = concepts.iter().map(ConceptExpr::atomic);
    let first = it.next().expect("non-empty union");
    it.fold(first, ConceptExpr::or)
}

/// Random ontology with pairwise disjointness and role domain/range axioms.
///
/// Concepts are `A1..An` and roles `R1..Rm`. Coins are drawn in a fixed
/// order: one per unordered concept pair, then for each role one per concept
/// for the domain and one per concept for the range.
pub fn generate_ontology(cfg: &GenConfig) -> Result<Ontology> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let concepts: Vec<String> = (1..=cfg.n_concepts).map(|i| format!("A{i}")).collect();
    let roles: Vec<String> = (1..=cfg.n_roles).map(|i| format!("R{i}")).collect();
    let mut o = Ontology {
        concepts: concepts.clone(),
        roles: roles.clone(),
        tbox: Vec::new(),
    };
    for i in 0..concepts.len() {
        for j in i + 1..concepts.len() {
            if rng.random::<f64>() < cfg.p_disjoint {
                o.tbox.push(SubClassOf::new(
                    ConceptExpr::atomic(&concepts[i]),
                    ConceptExpr::not(ConceptExpr::atomic(&concepts[j])),
                ));
            }
        }
    }
    for r in &roles {
        let domain: Vec<String> = concepts.iter().filter(|_| rng.random::<f64>() < cfg.p_domain).cloned().collect();
        let range: Vec<String> = concepts.iter().filter(|_| rng.random::<f64>() < cfg.p_range).cloned().collect();
        if !domain.is_empty() {
            o.tbox.push(SubClassOf::new(
                ConceptExpr::Top,
                ConceptExpr::forall(RoleExpr::inverse_of(r), union(&domain)),
            ));
        }
        if !range.is_empty() {
            o.tbox.push(SubClassOf::new(
                ConceptExpr::Top,
                ConceptExpr::forall(RoleExpr::atomic(r), union(&range)),
            ));
        }
    }
    Ok(o)
}

/// Individuals and the dominoes sampled between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticKg {
    /// Side-1 part block of each individual.
    pub individuals: Vec<Vec<bool>>,
    /// Full domino per pair `(i, j)` with `i <= j`.
    pub pairs: BTreeMap<(usize, usize), Vec<bool>>,
    /// Pairs with no consistent domino.
    pub skipped: Vec<(usize, usize)>,
}

/// Draws `m` individual types: full dominoes are sampled with every input
/// Marginalized and unit weights, then cut to their side-1 part block.
pub fn sample_individuals<R: Rng + ?Sized>(co: &CompiledOntology, m: usize, rng: &mut R) -> Result<Vec<Vec<bool>>> {
    if co.is_unsatisfiable() {
        return Err(Error::Unsatisfiable);
    }
    let n = co.varmap.total();
    let theta = Parameterization::marginalized(n);
    let block = co.varmap.side_vars(Side::One);
    Ok(sample_many(&co.smooth_circuit, &theta, &vec![None; n], m, rng)?
        .into_iter()
        .map(|x| x[block.clone()].to_vec())
        .collect())
}

/// Samples one domino per pair `i <= j` with the two types as evidence.
pub fn sample_kg<R: Rng + ?Sized>(co: &CompiledOntology, individuals: &[Vec<bool>], rng: &mut R) -> Result<SyntheticKg> {
    let n = co.varmap.total();
    let theta = Parameterization::marginalized(n);
    let s1 = co.varmap.side_vars(Side::One);
    let s2 = co.varmap.side_vars(Side::Two);
    let mut kg = SyntheticKg {
        individuals: individuals.to_vec(),
        pairs: BTreeMap::new(),
        skipped: Vec::new(),
    };
    for i in 0..individuals.len() {
        for j in i..individuals.len() {
            let mut ev = vec![None; n];
            for (k, v) in s1.clone().enumerate() {
                ev[v] = Some(individuals[i][k]);
            }
            for (k, v) in s2.clone().enumerate() {
                ev[v] = Some(individuals[j][k]);
            }
            match sample(&co.smooth_circuit, &theta, &ev, rng) {
                Ok(x) => {
                    kg.pairs.insert((i, j), x);
                }
                Err(Error::ZeroProbabilityEvidence) => {
                    let empty: Vec<bool> = ev.iter().map(|e| e.unwrap_or(false)).collect();
                    if co.circuit.evaluate(&empty)? {
                        kg.pairs.insert((i, j), empty);
                    } else {
                        kg.skipped.push((i, j));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(kg)
}

fn bits(xs: impl IntoIterator<Item = bool>) -> String {
    xs.into_iter().map(|b| if b { '1' } else { '0' }).collect()
}

impl SyntheticKg {
    /// TSV with header `i j roles domino`; bit columns are 0/1 strings in
    /// variable order.
    pub fn to_tsv(&self, co: &CompiledOntology) -> String {
        let roles = co.varmap.role_var_range();
        let mut out = String::from("i\tj\troles\tdomino\n");
        for (&(i, j), x) in &self.pairs {
            let _ = writeln!(out, "{i}\t{j}\t{}\t{}", bits(x[roles.clone()].iter().copied()), bits(x.iter().copied()));
        }
        out
    }

    /// Parses [`SyntheticKg::to_tsv`] output. Individuals are recovered from
    /// the pair dominoes.
    pub fn from_tsv(text: &str, co: &CompiledOntology) -> Result<Self> {
        let n = co.varmap.total();
        let s1 = co.varmap.side_vars(Side::One);
        let s2 = co.varmap.side_vars(Side::Two);
        let mut pairs = BTreeMap::new();
        let mut types: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("i\tj\troles\tdomino") {
            return Err(Error::Schema("knowledge graph header must be `i\tj\troles\tdomino`".into()));
        }
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            let bad = |m: &str| Error::Schema(format!("knowledge graph line {}: {m}", ln + 2));
            if cells.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let i: usize = cells[0].parse().map_err(|_| bad("bad subject index"))?;
            let j: usize = cells[1].parse().map_err(|_| bad("bad object index"))?;
            if cells[3].len() != n || !cells[3].bytes().all(|b| b == b'0' || b == b'1') {
                return Err(bad("domino bits have the wrong width"));
            }
            let x: Vec<bool> = cells[3].bytes().map(|b| b == b'1').collect();
            types.insert(i, x[s1.clone()].to_vec());
            types.insert(j, x[s2.clone()].to_vec());
            pairs.insert((i, j), x);
        }
        let count = types.keys().next_back().map_or(0, |&k| k + 1);
        if types.len() != count {
            return Err(Error::Schema("knowledge graph does not cover every individual".into()));
        }
        Ok(SyntheticKg {
            individuals: types.into_values().collect(),
            pairs,
            skipped: Vec::new(),
        })
    }
}

/// How covariance matrices are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceScheme {
    Identity,
    /// Identity with `|N(0, 1)|` diagonal, floored at 1e-3.
    DiagNormal,
    /// Wishart with `dim + 2` degrees of freedom and identity scale.
    Wishart,
    /// Inverse of a [`CovarianceScheme::Wishart`] draw.
    InvWishart,
    /// All zeros: no noise. For tests.
    Zero,
}

impl CovarianceScheme {
    pub const STANDARD: [CovarianceScheme; 4] = [
        CovarianceScheme::Identity,
        CovarianceScheme::DiagNormal,
        CovarianceScheme::Wishart,
        CovarianceScheme::InvWishart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovarianceScheme::Identity => "identity",
            CovarianceScheme::DiagNormal => "diag-normal",
            CovarianceScheme::Wishart => "wishart",
            CovarianceScheme::InvWishart => "inv-wishart",
            CovarianceScheme::Zero => "zero",
        }
    }

    /// Short label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            CovarianceScheme::Identity => "I",
            CovarianceScheme::DiagNormal => "N(0,1)",
            CovarianceScheme::Wishart => "W",
            CovarianceScheme::InvWishart => "W^-1",
            CovarianceScheme::Zero => "0",
        }
    }
}

impl std::str::FromStr for CovarianceScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => CovarianceScheme::Identity,
            "diag-normal" => CovarianceScheme::DiagNormal,
            "wishart" => CovarianceScheme::Wishart,
            "inv-wishart" => CovarianceScheme::InvWishart,
            "zero" => CovarianceScheme::Zero,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown covariance scheme `{other}` (expected identity, diag-normal, wishart, inv-wishart or zero)"
                )))
            }
        })
    }
}

fn wishart<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    // Bartlett decomposition with identity scale.
    let df = (dim + 2) as f64;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let chi = ChiSquared::new(df - i as f64).expect("positive degrees of freedom");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    &a * a.transpose()
}

/// Draws one covariance matrix. The mean vector does not influence any
/// scheme; it is accepted so callers can pass the generator's mean.
pub fn sample_covariance<R: Rng + ?Sized>(
    scheme: CovarianceScheme,
    dim: usize,
    _mean: &[f64],
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(Error::InvalidParameter("covariance dimension must be at least 1".into()));
    }
    const ATTEMPTS: usize = 8;
    for _ in 0..ATTEMPTS {
        let m = match scheme {
            CovarianceScheme::Identity => DMatrix::identity(dim, dim),
            CovarianceScheme::Zero => return Ok(DMatrix::zeros(dim, dim)),
            CovarianceScheme::DiagNormal => {
                let d: Vec<f64> = (0..dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z.abs().max(1e-3)
                    })
                    .collect();
                DMatrix::from_diagonal(&DVector::from_vec(d))
            }
            CovarianceScheme::Wishart => wishart(dim, rng),
            CovarianceScheme::InvWishart => match wishart(dim, rng).try_inverse() {
                Some(inv) => inv,
                None => continue,
            },
        };
        let sym = (&m + m.transpose()) * 0.5;
        if sym.clone().cholesky().is_some() {
            return Ok(sym);
        }
    }
    Err(Error::NotPositiveDefinite { attempts: ATTEMPTS })
}

/// A multivariate normal with a precomputed Cholesky factor.
#[derive(Clone, Debug)]
struct Gaussian {
    mean: DVector<f64>,
    chol: Option<DMatrix<f64>>,
}

impl Gaussian {
    fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Self {
        let chol = if cov.iter().all(|&x| x == 0.0) {
            None
        } else {
            Some(cov.clone().cholesky().expect("covariance is positive definite").l())
        };
        Gaussian {
            mean: DVector::from_vec(mean),
            chol,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.chol {
            None => self.mean.iter().copied().collect(),
            Some(l) => {
                let z = DVector::from_fn(self.mean.len(), |_, _| StandardNormal.sample(rng));
                (&self.mean + l * z).iter().copied().collect()
            }
        }
    }
}

/// Noisy observations of knowledge-graph pairs with their label vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationDataset {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<Vec<bool>>,
    /// `(subject, object)` individual per row.
    pub ids: Vec<(usize, usize)>,
    /// SHA-256 over every covariance matrix used, hex encoded.
    pub covariance_digest: String,
}

impl ObservationDataset {
    pub fn width(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First `n` rows and the rest.
    pub fn split(&self, n: usize) -> (ObservationDataset, ObservationDataset) {
        let n = n.min(self.len());
        let part = |r: std::ops::Range<usize>| ObservationDataset {
            rows: self.rows[r.clone()].to_vec(),
            targets: self.targets[r.clone()].to_vec(),
            ids: self.ids[r].to_vec(),
            covariance_digest: self.covariance_digest.clone(),
        };
        (part(0..n), part(n..self.len()))
    }

    /// CSV with header `x_0..x_{n-1},y_0..y_{n-1},subj_id,obj_id`.
    pub fn to_csv(&self) -> String {
        let n = self.width();
        let mut out = String::new();
        let header: Vec<String> = (0..n)
            .map(|i| format!("x_{i}"))
            .chain((0..n).map(|i| format!("y_{i}")))
            .chain(["subj_id".to_string(), "obj_id".to_string()])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for ((x, y), (s, o)) in self.rows.iter().zip(&self.targets).zip(&self.ids) {
            for v in x {
                let _ = write!(out, "{v},");
            }
            for &b in y {
                out.push(if b { '1' } else { '0' });
                out.push(',');
            }
            let _ = writeln!(out, "{s},{o}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Schema("empty dataset file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 2 || !cols.len().is_multiple_of(2) || cols[cols.len() - 2..] != ["subj_id", "obj_id"] {
            return Err(Error::Schema("dataset header must end with subj_id,obj_id".into()));
        }
        let n = (cols.len() - 2) / 2;
        for i in 0..n {
            if cols[i] != format!("x_{i}") || cols[n + i] != format!("y_{i}") {
                return Err(Error::Schema(format!("dataset header column {} is malformed", i + 1)));
            }
        }
        let mut ds = ObservationDataset {
            rows: Vec::new(),
            targets: Vec::new(),
            ids: Vec::new(),
            covariance_digest: String::new(),
        };
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Schema(format!("dataset line {} is malformed", ln + 2));
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != cols.len() {
                return Err(bad());
            }
            let x = cells[..n].iter().map(|c| c.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
            let y = cells[n..2 * n]
                .iter()
                .map(|c| match *c {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<_>>>()?;
            let s = cells[2 * n].parse().map_err(|_| bad())?;
            let o = cells[2 * n + 1].parse().map_err(|_| bad())?;
            ds.rows.push(x);
            ds.targets.push(y);
            ds.ids.push((s, o));
        }
        Ok(ds)
    }
}

/// Which pairs get observation rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowPlan {
    /// This many rows for every pair, pairs in order.
    PerPair(usize),
    /// This many rows in total, each from a pair drawn uniformly.
    Total(usize),
}

/// Projects an individual's part block onto the label layout's concepts.
pub fn project_individual(co: &CompiledOntology, e: &[bool]) -> Vec<bool> {
    co.label_layout
        .concepts
        .iter()
        .map(|c| {
            let i = co.varmap.part_index(&Part::Atomic(c.clone())).expect("concept is a part");
            e[i]
        })
        .collect()
}

/// Label vector of a pair's domino.
pub fn pair_target(co: &CompiledOntology, kg: &SyntheticKg, i: usize, j: usize, x: &[bool]) -> Vec<bool> {
    let mut y = project_individual(co, &kg.individuals[i]);
    y.extend(co.varmap.role_var_range().map(|v| x[v]));
    y.extend(project_individual(co, &kg.individuals[j]));
    y
}

/// Builds observation rows `[s; r; o]` where `s` and `o` come from one
/// Gaussian per individual centred on its concept bits and `r` from one
/// Gaussian per occurring role combination centred on its multi-hot vector.
///
/// Covariances are drawn first, individuals in order and then role
/// combinations in order of first occurrence over the sorted pairs; rows
/// are drawn afterwards.
pub fn synthesize_dataset<R: Rng + ?Sized>(
    kg: &SyntheticKg,
    co: &CompiledOntology,
    scheme: CovarianceScheme,
    plan: RowPlan,
    rng: &mut R,
) -> Result<ObservationDataset> {
    let nc = co.label_layout.concepts.len();
    let nr = co.label_layout.roles.len();
    let mut digest = Sha256::new();
    let mut absorb = |m: &DMatrix<f64>| {
        for v in m.iter() {
            digest.update(v.to_le_bytes());
        }
    };
    let mut ind_gen = Vec::with_capacity(kg.individuals.len());
    for e in &kg.individuals {
        let mean: Vec<f64> = project_individual(co, e).iter().map(|&b| b as u8 as f64).collect();
        if nc == 0 {
            ind_gen.push(None);
            continue;
        }
        let cov = sample_covariance(scheme, nc, &mean, rng)?;
        absorb(&cov);
        ind_gen.push(Some(Gaussian::new(mean, &cov)));
    }
    let roles = co.varmap.role_var_range();
    let mut role_gen: BTreeMap<Vec<bool>, Option<Gaussian>> = BTreeMap::new();
    for x in kg.pairs.values() {
        let k: Vec<bool> = x[roles.clone()].to_vec();
        if role_gen.contains_key(&k) {
            continue;
        }
        let mean: Vec<f64> = k.iter().map(|&b| b as u8 as f64).collect();
        let g = if nr == 0 {
            None
        } else {
            let cov = sample_covariance(scheme, nr, &mean, rng)?;
            absorb(&cov);
            Some(Gaussian::new(mean, &cov))
        };
        role_gen.insert(k, g);
    }
    let pairs: Vec<(&(usize, usize), &Vec<bool>)> = kg.pairs.iter().collect();
    let schedule: Vec<usize> = match plan {
        RowPlan::PerPair(k) => (0..pairs.len()).flat_map(|p| std::iter::repeat_n(p, k)).collect(),
        RowPlan::Total(n) => {
            if pairs.is_empty() && n > 0 {
                return Err(Error::InvalidParameter("the knowledge graph has no pairs".into()));
            }
            (0..n).map(|_| rng.random_range(0..pairs.len())).collect()
        }
    };
    let mut ds = ObservationDataset {
        rows: Vec::with_capacity(schedule.len()),
        targets: Vec::with_capacity(schedule.len()),
        ids: Vec::with_capacity(schedule.len()),
        covariance_digest: String::new(),
    };
    let draw = |g: &Option<Gaussian>, rng: &mut R| g.as_ref().map_or_else(Vec::new, |g| g.draw(rng));
    for p in schedule {
        let (&(i, j), x) = pairs[p];
        let mut row = draw(&ind_gen[i], rng);
        row.extend(draw(&role_gen[&x[roles.clone()]], rng));
        row.extend(draw(&ind_gen[j], rng));
        ds.rows.push(row);
        ds.targets.push(pair_target(co, kg, i, j, x));
        ds.ids.push((i, j));
    }
    ds.covariance_digest = digest.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    Ok(ds)
}

/// Probability that the Bernoulli-distributed label vector `probs` is
/// consistent, used by tests and reports.
pub fn label_consistency_mass(co: &CompiledOntology, probs: &[f64]) -> Result<f64> {
    wmc(&co.label_circuit, &Parameterization::bernoulli(probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::MUSIC_DSL;
    use crate::pipeline::{compile_ontology, compile_text, CompileOptions};

    fn cfg(seed: u64) -> GenConfig {
        GenConfig {
            n_concepts: 5,
            n_roles: 3,
            p_domain: 0.5,
            p_range: 0.5,
            p_disjoint: 1.0,
            seed,
        }
    }

    #[test]
    fn full_disjointness() {
        let o = generate_ontology(&cfg(1)).unwrap();
        let disjoint = o
            .tbox
            .iter()
            .filter(|ax| matches!(&ax.rhs, ConceptExpr::Not(_)))
            .count();
        assert_eq!(disjoint, 10);
        assert_eq!(o, generate_ontology(&cfg(1)).unwrap());
    }

    #[test]
    fn zero_probabilities_give_no_axioms() {
        let mut c = cfg(3);
        c.p_domain = 0.0;
        c.p_range = 0.0;
        c.p_disjoint = 0.0;
        let o = generate_ontology(&c).unwrap();
        assert!(o.tbox.is_empty());
        assert_eq!((o.concepts.len(), o.roles.len()), (5, 3));
        c.p_range = 1.5;
        assert!(generate_ontology(&c).is_err());
    }

    #[test]
    fn music_individuals_and_pairs() {
        let co = compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap();
        let mut rng = rng_from_seed(5);
        let inds = sample_individuals(&co, 30, &mut rng).unwrap();
        let a = co.varmap.part_index(&Part::Atomic("Artist".into())).unwrap();
        let l = co.varmap.part_index(&Part::Atomic("Label".into())).unwrap();
        assert!(inds.iter().all(|e| !(e[a] && e[l])));
        let kg = sample_kg(&co, &inds, &mut rng).unwrap();
        assert_eq!(kg.pairs.len() + kg.skipped.len(), 30 * 31 / 2);
        let infl = co.varmap.role_var(&RoleExpr::atomic("influence")).unwrap();
        for (&(i, j), x) in &kg.pairs {
            assert!(co.circuit.evaluate(x).unwrap());
            assert_eq!(x[co.varmap.side_vars(Side::One)], inds[i][..]);
            assert_eq!(x[co.varmap.side_vars(Side::Two)], inds[j][..]);
            if inds[i][a] && inds[j][l] {
                assert!(!x[infl]);
            }
        }
        assert!(kg.pairs.contains_key(&(0, 0)));
        let back = SyntheticKg::from_tsv(&kg.to_tsv(&co), &co).unwrap();
        assert_eq!(back.pairs, kg.pairs);
        assert_eq!(back.individuals, kg.individuals);
    }

    #[test]
    fn covariance_shapes() {
        let mut rng = rng_from_seed(2);
        let i = sample_covariance(CovarianceScheme::Identity, 3, &[0.0; 3], &mut rng).unwrap();
        assert_eq!(i, DMatrix::identity(3, 3));
        let d = sample_covariance(CovarianceScheme::DiagNormal, 4, &[0.0; 4], &mut rng).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r == c {
                    assert!(d[(r, c)] >= 1e-3);
                } else {
                    assert_eq!(d[(r, c)], 0.0);
                }
            }
        }
        for s in [CovarianceScheme::Wishart, CovarianceScheme::InvWishart] {
            let m = sample_covariance(s, 5, &[0.0; 5], &mut rng).unwrap();
            assert_eq!(m, m.transpose());
            assert!(m.cholesky().is_some());
        }
        assert!(sample_covariance(CovarianceScheme::Identity, 0, &[], &mut rng).is_err());
    }

    #[test]
    fn wishart_mean() {
        let mut rng = rng_from_seed(9);
        let dim = 3;
        let n = 10_000;
        let mut acc = DMatrix::<f64>::zeros(dim, dim);
        for _ in 0..n {
            acc += sample_covariance(CovarianceScheme::Wishart, dim, &[0.0; 3], &mut rng).unwrap();
        }
        acc /= n as f64;
        let df = (dim + 2) as f64;
        for r in 0..dim {
            for c in 0..dim {
                let want = if r == c { df } else { 0.0 };
                // 5% of the diagonal scale for every entry.
                assert!((acc[(r, c)] - want).abs() < 0.05 * df, "{r},{c}: {}", acc[(r, c)]);
            }
        }
    }

    #[test]
    fn noiseless_rows_equal_targets() {
        let o = generate_ontology(&cfg(4)).unwrap();
        let co = compile_ontology(&o, &CompileOptions::default()).unwrap();
        let mut rng = rng_from_seed(4);
        let inds = sample_individuals(&co, 5, &mut rng).unwrap();
        let kg = sample_kg(&co, &inds, &mut rng).unwrap();
        let ds = synthesize_dataset(&kg, &co, CovarianceScheme::Zero, RowPlan::PerPair(2), &mut rng).unwrap();
        assert_eq!(ds.len(), 2 * kg.pairs.len());
        assert_eq!(ds.width(), 2 * 5 + 3);
        for (x, y) in ds.rows.iter().zip(&ds.targets) {
            let yf: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
            assert_eq!(x, &yf);
            assert!(co.label_circuit.evaluate(y).unwrap());
            // Full disjointness: exactly one concept per individual.
            assert_eq!(y[..5].iter().filter(|&&b| b).count(), 1);
        }
        let back = ObservationDataset::from_csv(&ds.to_csv()).unwrap();
        assert_eq!(back.rows, ds.rows);
        assert_eq!(back.targets, ds.targets);
        assert_eq!(back.ids, ds.ids);
    }

    #[test]
    fn column_means_converge() {
        let o = generate_ontology(&cfg(6)).unwrap();
        let co = compile_ontology(&o, &CompileOptions::default()).unwrap();
        let mut rng = rng_from_seed(6);
        let inds = sample_individuals(&co, 2, &mut rng).unwrap();
        let kg = sample_kg(&co, &inds, &mut rng).unwrap();
        let n = 4000;
        let ds = synthesize_dataset(&kg, &co, CovarianceScheme::Identity, RowPlan::PerPair(n), &mut rng).unwrap();
        let rows: Vec<usize> = (0..ds.len()).filter(|&r| ds.ids[r] == (0, 0)).collect();
        for c in 0..5 {
            let mean: f64 = rows.iter().map(|&r| ds.rows[r][c]).sum::<f64>() / rows.len() as f64;
            let target = ds.targets[rows[0]][c] as u8 as f64;
            assert!((mean - target).abs() < 3.0 / (rows.len() as f64).sqrt(), "column {c}: {mean}");
        }
    }
}
