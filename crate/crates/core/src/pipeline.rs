//! Ontology compilation: normalization, the initial domino set, fixpoint
//! refinement, and the label circuit used for learning.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cnf::{build_d0_cnf, varmap_for, Cnf, Side, VarMap};
use crate::dl::{normalize, parse_ontology, Ontology, Part, Quantifier, RoleExpr};
use crate::error::{Error, Result};
use crate::sdd::{
    build_vtree, compile_cnf, smooth, Circuit, NodeId, SddManager, VTree, VTreeStrategy,
    DEFAULT_NODE_CAP,
};

/// Environment variable overriding the default node cap.
pub const NODE_CAP_ENV: &str = "DLCIRCUIT_NODE_CAP";

/// Knobs for [`compile_ontology`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub vtree: VTreeStrategyName,
    pub split_inverses: bool,
    pub node_cap: usize,
    /// Safety net against non-termination; refinement is monotone so the
    /// loop always stops well before this in practice.
    pub max_rounds: usize,
}

/// Serializable name of a vtree strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VTreeStrategyName {
    #[default]
    Balanced,
    RightLinear,
}

impl From<VTreeStrategyName> for VTreeStrategy {
    fn from(v: VTreeStrategyName) -> Self {
        match v {
            VTreeStrategyName::Balanced => VTreeStrategy::Balanced,
            VTreeStrategyName::RightLinear => VTreeStrategy::RightLinear,
        }
    }
}

impl From<VTreeStrategy> for VTreeStrategyName {
    fn from(v: VTreeStrategy) -> Self {
        match v {
            VTreeStrategy::Balanced => VTreeStrategyName::Balanced,
            VTreeStrategy::RightLinear => VTreeStrategyName::RightLinear,
        }
    }
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            vtree: VTreeStrategyName::Balanced,
            split_inverses: false,
            node_cap: default_node_cap(),
            max_rounds: 10_000,
        }
    }
}

/// The node cap from [`NODE_CAP_ENV`], or [`DEFAULT_NODE_CAP`].
pub fn default_node_cap() -> usize {
    std::env::var(NODE_CAP_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_NODE_CAP)
}

/// Positions of the label vector: subject concepts, roles, object concepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelLayout {
    pub concepts: Vec<String>,
    pub roles: Vec<RoleExpr>,
}

impl LabelLayout {
    pub fn width(&self) -> usize {
        2 * self.concepts.len() + self.roles.len()
    }

    pub fn subject(&self, concept: usize) -> usize {
        concept
    }

    pub fn role(&self, role: usize) -> usize {
        self.concepts.len() + role
    }

    pub fn object(&self, concept: usize) -> usize {
        self.concepts.len() + self.roles.len() + concept
    }

    pub fn subject_range(&self) -> std::ops::Range<usize> {
        0..self.concepts.len()
    }

    pub fn role_range(&self) -> std::ops::Range<usize> {
        self.concepts.len()..self.concepts.len() + self.roles.len()
    }

    pub fn object_range(&self) -> std::ops::Range<usize> {
        let s = self.concepts.len() + self.roles.len();
        s..s + self.concepts.len()
    }

    /// Column names, e.g. `s:Artist`, `r:influence`, `o:Label`.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.concepts.iter().map(|c| format!("s:{c}")).collect();
        out.extend(self.roles.iter().map(|r| format!("r:{r}")));
        out.extend(self.concepts.iter().map(|c| format!("o:{c}")));
        out
    }

    /// Domino variable behind each label position.
    pub fn domino_vars(&self, vm: &VarMap) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.width());
        for side in [Side::One, Side::Two] {
            let block: Vec<usize> = self
                .concepts
                .iter()
                .map(|c| vm.var_of_part(&Part::Atomic(c.clone()), side).expect("label concept is a part"))
                .collect();
            if side == Side::Two {
                out.extend(self.roles.iter().map(|r| vm.role_var(r).expect("label role is a key")));
            }
            out.extend(block);
        }
        out
    }
}

/// Sizes and timings gathered during compilation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompileStats {
    pub cnf_vars: usize,
    pub cnf_clauses: usize,
    pub d0_nodes: usize,
    pub circuit_nodes: usize,
    pub label_nodes: usize,
    pub allocated_nodes: usize,
    pub refinement_rounds: usize,
    pub seconds: f64,
}

/// An ontology compiled to its domino circuit.
#[derive(Clone, Debug)]
pub struct CompiledOntology {
    /// The ontology as given.
    pub ontology: Ontology,
    /// NNF, flattened form the circuit was built from.
    pub normalized: Ontology,
    pub varmap: VarMap,
    pub options: CompileOptions,
    /// Canonical diagram of the consistent dominoes.
    pub circuit: Circuit,
    /// Smoothed copy of `circuit`, used for probabilistic queries.
    pub smooth_circuit: Circuit,
    /// Smoothed circuit over the label variables only.
    pub label_circuit: Circuit,
    pub label_layout: LabelLayout,
    pub refinement_rounds: usize,
    pub stats: CompileStats,
}

impl CompiledOntology {
    pub fn parts(&self) -> &[Part] {
        self.varmap.parts()
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.circuit.is_false()
    }

    /// Number of original (non-auxiliary) atomic concepts.
    pub fn num_concepts(&self) -> usize {
        self.label_layout.concepts.len()
    }
}

/// Compiles a D0 CNF that may carry Tseitin auxiliaries into `m`, whose
/// vtree covers only the domino variables.
fn compile_d0(cnf: &Cnf, vm: &VarMap, m: &mut SddManager, strategy: VTreeStrategy) -> Result<NodeId> {
    if cnf.num_vars <= vm.total() {
        return compile_cnf(cnf, m);
    }
    let wide = VTree::build(cnf.num_vars, strategy);
    let mut big = SddManager::with_cap(wide, m.node_cap());
    let root = compile_cnf(cnf, &mut big)?;
    let aux: Vec<usize> = (vm.total()..cnf.num_vars).collect();
    let projected = big.exists(root, &aux)?;
    m.transfer_from(&big, projected, &|v| v)
}

/// One refinement step: every restriction type must have its witness (for
/// existentials) or its counter-witness (for negated universals) among the
/// current dominoes.
fn refine_once(d: NodeId, vm: &VarMap, m: &mut SddManager) -> Result<NodeId> {
    let mut constraints = Vec::new();
    let roles: Vec<usize> = vm.role_var_range().collect();
    for (i, part) in vm.parts().iter().enumerate() {
        let Part::Restriction {
            quantifier,
            role,
            filler,
        } = part
        else {
            continue;
        };
        let filler_part = Part::Atomic(filler.clone());
        for rd in vm.readings(role)? {
            let holder_var = vm.part_var(i, rd.holder);
            // A type that must show a witness: ∃ holds, or ∀ fails.
            let needs = *quantifier == Quantifier::Exists;
            if m.condition(d, holder_var, needs)?.is_false() {
                continue;
            }
            let target = vm
                .var_of_part(&filler_part, rd.target)
                .ok_or_else(|| Error::UnknownSymbol(filler.clone()))?;
            let edge = m.literal(rd.role_var, true)?;
            let a = m.literal(target, needs)?;
            let edge_a = m.and(edge, a)?;
            let x = m.and(d, edge_a)?;
            let mut block: Vec<usize> = vm.side_vars(rd.target).collect();
            block.extend(&roles);
            let w = m.exists(x, &block)?;
            let trigger = m.literal(holder_var, needs)?;
            constraints.push(m.implies(trigger, w)?);
            if !vm.split_inverses() {
                // The same type may sit on the other side of a domino.
                let w2 = m.rename(w, &|v| vm.swap_sides(v))?;
                let trigger2 = m.literal(vm.part_var(i, rd.target), needs)?;
                constraints.push(m.implies(trigger2, w2)?);
            }
        }
    }
    let mut acc = d;
    for c in constraints {
        acc = m.and(acc, c)?;
        if acc.is_false() {
            break;
        }
    }
    Ok(acc)
}

/// Runs the whole pipeline on an ontology.
pub fn compile_ontology(o: &Ontology, options: &CompileOptions) -> Result<CompiledOntology> {
    let start = Instant::now();
    let normalized = normalize(o);
    let vm = varmap_for(&normalized, options.split_inverses);
    let strategy: VTreeStrategy = options.vtree.into();
    let vt = build_vtree(&vm, strategy);
    let cnf = build_d0_cnf(&normalized, &vm)?;
    let mut m = SddManager::with_cap(vt, options.node_cap);
    let mut d = compile_d0(&cnf, &vm, &mut m, strategy)?;
    let mut stats = CompileStats {
        cnf_vars: cnf.num_vars,
        cnf_clauses: cnf.clauses.len(),
        d0_nodes: m.size(d),
        ..Default::default()
    };
    let mut rounds = 0;
    let gc_threshold = (options.node_cap / 4).max(1 << 16);
    loop {
        if rounds >= options.max_rounds {
            return Err(Error::InvalidParameter(format!(
                "refinement did not converge within {} rounds",
                options.max_rounds
            )));
        }
        rounds += 1;
        let next = refine_once(d, &vm, &mut m)?;
        if next == d {
            break;
        }
        d = next;
        if m.allocated() > gc_threshold {
            d = m.collect_garbage(&[d])[0];
        }
    }
    stats.allocated_nodes = m.allocated();
    let circuit = m.export(d);
    let layout = LabelLayout {
        concepts: o.concepts.clone(),
        roles: vm.role_keys().to_vec(),
    };
    let label_circuit = derive_label(&m, d, &vm, &layout)?;
    stats.circuit_nodes = circuit.node_count();
    stats.label_nodes = label_circuit.node_count();
    stats.refinement_rounds = rounds;
    stats.seconds = start.elapsed().as_secs_f64();
    let smooth_circuit = smooth(&circuit);
    Ok(CompiledOntology {
        ontology: o.clone(),
        normalized,
        varmap: vm,
        options: options.clone(),
        circuit,
        smooth_circuit,
        label_circuit,
        label_layout: layout,
        refinement_rounds: rounds,
        stats,
    })
}

/// Parses DSL text and compiles it.
pub fn compile_text(text: &str, options: &CompileOptions) -> Result<CompiledOntology> {
    let (o, _) = parse_ontology(text)?;
    compile_ontology(&o, options)
}

fn derive_label(m: &SddManager, d: NodeId, vm: &VarMap, layout: &LabelLayout) -> Result<Circuit> {
    let label_vars = layout.domino_vars(vm);
    let mut to_label = vec![usize::MAX; vm.total()];
    for (l, &v) in label_vars.iter().enumerate() {
        to_label[v] = l;
    }
    let hidden: Vec<usize> = (0..vm.total()).filter(|&v| to_label[v] == usize::MAX).collect();
    let width = layout.width().max(1);
    let vt = VTree::build(width, VTreeStrategy::Balanced);
    let mut lm = SddManager::with_cap(vt, m.node_cap());
    // Quantify in a scratch manager so the caller's stays untouched.
    let mut scratch = SddManager::with_cap(m.vtree().clone(), m.node_cap());
    let d2 = scratch.transfer_from(m, d, &|v| v)?;
    let projected = scratch.exists(d2, &hidden)?;
    let root = lm.transfer_from(&scratch, projected, &|v| to_label[v])?;
    Ok(smooth(&lm.export(root)))
}

/// Recomputes the label circuit of a compiled ontology.
pub fn derive_label_circuit(co: &CompiledOntology) -> Result<Circuit> {
    let (m, root) = co.circuit.to_manager()?;
    derive_label(&m, root, &co.varmap, &co.label_layout)
}

#[derive(Serialize, Deserialize)]
struct Meta {
    format: String,
    options: CompileOptions,
    stats: CompileStats,
    num_vars: usize,
    label_width: usize,
    unsatisfiable: bool,
    /// How refinement quantifies role variables.
    role_quantification: String,
}

/// Writes the bundle directory: `ontology.dsl`, `varmap.tsv`, `vtree.txt`,
/// `circuit.sdd`, `label_vtree.txt`, `label_circuit.sdd`, `meta.json`.
pub fn write_bundle(co: &CompiledOntology, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("ontology.dsl"), co.ontology.to_dsl())?;
    fs::write(dir.join("varmap.tsv"), co.varmap.to_tsv())?;
    fs::write(dir.join("vtree.txt"), co.circuit.vtree().to_text())?;
    fs::write(dir.join("circuit.sdd"), co.circuit.to_text())?;
    fs::write(dir.join("label_vtree.txt"), co.label_circuit.vtree().to_text())?;
    fs::write(dir.join("label_circuit.sdd"), co.label_circuit.to_text())?;
    let meta = Meta {
        format: "dlcircuit-bundle-1".into(),
        options: co.options.clone(),
        stats: co.stats.clone(),
        num_vars: co.varmap.total(),
        label_width: co.label_layout.width(),
        unsatisfiable: co.is_unsatisfiable(),
        role_quantification: "witness sets quantify all role variables together with the \
                              target-side part block"
            .into(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Loads a bundle written by [`write_bundle`] without recompiling.
pub fn read_bundle(dir: &Path) -> Result<CompiledOntology> {
    let text = fs::read_to_string(dir.join("ontology.dsl"))?;
    let (o, _) = parse_ontology(&text)?;
    let meta: Meta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    if meta.format != "dlcircuit-bundle-1" {
        return Err(Error::Schema(format!("unknown bundle format `{}`", meta.format)));
    }
    let normalized = normalize(&o);
    let vm = varmap_for(&normalized, meta.options.split_inverses);
    if vm.to_tsv() != fs::read_to_string(dir.join("varmap.tsv"))? {
        return Err(Error::Schema("varmap.tsv does not match the ontology".into()));
    }
    let vt = VTree::from_text(fs::read_to_string(dir.join("vtree.txt"))?.as_bytes())?;
    let circuit = Circuit::from_text(fs::read_to_string(dir.join("circuit.sdd"))?.as_bytes(), vt)?;
    let lvt = VTree::from_text(fs::read_to_string(dir.join("label_vtree.txt"))?.as_bytes())?;
    let label_circuit =
        Circuit::from_text(fs::read_to_string(dir.join("label_circuit.sdd"))?.as_bytes(), lvt)?;
    let layout = LabelLayout {
        concepts: o.concepts.clone(),
        roles: vm.role_keys().to_vec(),
    };
    if circuit.num_vars() != vm.total().max(1) || label_circuit.num_vars() != layout.width().max(1) {
        return Err(Error::Schema("circuit variable counts do not match the varmap".into()));
    }
    let smooth_circuit = smooth(&circuit);
    Ok(CompiledOntology {
        ontology: o,
        normalized,
        varmap: vm,
        options: meta.options,
        refinement_rounds: meta.stats.refinement_rounds,
        stats: meta.stats,
        circuit,
        smooth_circuit,
        label_circuit,
        label_layout: layout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::MUSIC_DSL;

    #[test]
    fn music_compiles_to_fourteen_variables() {
        let co = compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap();
        assert_eq!(co.varmap.total(), 14);
        assert_eq!(co.circuit.num_vars(), 14);
        assert_eq!(co.label_layout.width(), 6);
        assert!(co.refinement_rounds >= 1);
    }

    #[test]
    fn contradictions() {
        let co = compile_text("concept A. axiom top subclassof A and not A.", &CompileOptions::default())
            .unwrap();
        assert!(co.is_unsatisfiable());
        // A ⊑ ¬A only empties A.
        let co = compile_text("concept A. axiom A subclassof not A.", &CompileOptions::default()).unwrap();
        assert!(!co.is_unsatisfiable());
        assert_eq!(co.circuit.model_count(), 1u32.into());
    }

    #[test]
    fn bundle_round_trip() {
        let co = compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&co, dir.path()).unwrap();
        let back = read_bundle(dir.path()).unwrap();
        assert_eq!(back.circuit, co.circuit);
        assert_eq!(back.label_circuit, co.label_circuit);
        assert_eq!(back.varmap, co.varmap);
    }
}
