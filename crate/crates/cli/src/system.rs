//! System description format: parsing, strict-mode schema checks, and
//! construction of the spectral machinery from a description.
//!
//! A description is a JSON object:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "alphabet_size": 2,
//!   "transitions": [1, 1, 1, 0],
//!   "potential": {"range": 1, "values": {"1": 0.0, "2": 0.0}},
//!   "observables": {"g": {"range": 1, "values": {"1": 1.0, "2": 0.0}}},
//!   "options": {"seed": 42}
//! }
//! ```
//!
//! Word keys are 1-based symbol strings: digits concatenated for alphabets
//! up to 9 symbols, '-'-separated numbers from 10 symbols on. Value maps
//! must cover exactly the admissible words of the declared range.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sftlab::{
    gibbs_chain, recode_to_blocks, rpf_solve, BlockFn, BlockSystem, GibbsChain,
    LocallyConstantFn, RpfData, Sft, TransferMatrix,
};

use crate::error::{CliError, Result};

/// The description schema revision this tool reads.
pub const SCHEMA_VERSION: u32 = 1;

/// A locally constant function given as a word-value table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FnDescription {
    pub range: usize,
    pub values: BTreeMap<String, f64>,
}

/// Optional analysis parameters; command-line flags override these, and
/// built-in defaults fill whatever remains.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub t_max: Option<f64>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub q_max: Option<u64>,
    pub a: Option<f64>,
    pub eps: Option<f64>,
}

/// A complete system description as read from disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDescription {
    pub schema_version: Option<u32>,
    pub alphabet_size: usize,
    pub transitions: Vec<u8>,
    pub potential: FnDescription,
    #[serde(default)]
    pub observables: BTreeMap<String, FnDescription>,
    #[serde(default)]
    pub options: AnalysisOptions,
}

const ROOT_KEYS: &[&str] = &[
    "schema_version",
    "alphabet_size",
    "transitions",
    "potential",
    "observables",
    "options",
];
const FN_KEYS: &[&str] = &["range", "values"];
const OPTION_KEYS: &[&str] = &[
    "t_max", "grid", "seed", "chains", "n", "n_max", "q_max", "a", "eps",
];

fn first_unknown(obj: &serde_json::Value, allowed: &[&str], at: &str) -> Option<String> {
    obj.as_object()?
        .keys()
        .find(|k| !allowed.contains(&k.as_str()))
        .map(|k| format!("unknown field {k:?} at {at}"))
}

/// Reject any field outside the published schema, naming the first
/// offender and where it sits.
fn check_strict(root: &serde_json::Value) -> Result<()> {
    let mut findings = Vec::new();
    findings.push(first_unknown(root, ROOT_KEYS, "the top level"));
    if let Some(p) = root.get("potential") {
        findings.push(first_unknown(p, FN_KEYS, "potential"));
    }
    if let Some(obs) = root.get("observables").and_then(|o| o.as_object()) {
        for (name, fd) in obs {
            findings.push(first_unknown(fd, FN_KEYS, &format!("observables.{name}")));
        }
    }
    if let Some(o) = root.get("options") {
        findings.push(first_unknown(o, OPTION_KEYS, "options"));
    }
    match findings.into_iter().flatten().next() {
        Some(msg) => Err(CliError::Parse(format!(
            "{msg}; strict mode rejects unrecognised fields (pass --allow-unknown to ignore them)"
        ))),
        None => Ok(()),
    }
}

/// Parse a description from JSON text. With `allow_unknown` false, any
/// field outside the schema is an error; otherwise extra fields pass
/// through unread.
pub fn parse_description(text: &str, allow_unknown: bool) -> Result<SystemDescription> {
    let root: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("system description is not valid JSON: {e}")))?;
    if !root.is_object() {
        return Err(CliError::Parse(
            "system description must be a JSON object".into(),
        ));
    }
    if !allow_unknown {
        check_strict(&root)?;
    }
    let desc: SystemDescription = serde_json::from_value(root)
        .map_err(|e| CliError::Parse(format!("system description does not fit the schema: {e}")))?;
    validate(&desc)?;
    Ok(desc)
}

fn validate(desc: &SystemDescription) -> Result<()> {
    if let Some(v) = desc.schema_version {
        if v != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {v}; this tool reads version {SCHEMA_VERSION}"
            )));
        }
    }
    let n = desc.alphabet_size;
    if n == 0 {
        return Err(CliError::Validation(
            "alphabet_size must be at least 1".into(),
        ));
    }
    let expected = n * n;
    if desc.transitions.len() != expected {
        return Err(CliError::Validation(format!(
            "transitions must list alphabet_size^2 = {expected} row-major entries, got {}",
            desc.transitions.len()
        )));
    }
    for (i, &t) in desc.transitions.iter().enumerate() {
        if t > 1 {
            return Err(CliError::Validation(format!(
                "transitions[{i}] = {t} (row {}, column {}) is not 0 or 1",
                i / n + 1,
                i % n + 1
            )));
        }
    }
    if desc.potential.range == 0 {
        return Err(CliError::Validation("potential range must be >= 1".into()));
    }
    for (name, fd) in &desc.observables {
        if fd.range == 0 {
            return Err(CliError::Validation(format!(
                "observable {name:?}: range must be >= 1"
            )));
        }
    }
    Ok(())
}

/// A description lifted to the block graph with every function recoded to
/// edge form, ready for the spectral solvers.
pub struct BuiltSystem {
    pub desc: SystemDescription,
    pub sft: Sft,
    pub system: BlockSystem,
    pub phi: BlockFn,
    pub phi_recoded: LocallyConstantFn,
    pub observables: BTreeMap<String, BlockFn>,
    pub observables_recoded: BTreeMap<String, LocallyConstantFn>,
}

pub fn build(desc: SystemDescription) -> Result<BuiltSystem> {
    let sft = Sft::new(desc.alphabet_size, desc.transitions.clone())?;
    let phi_lc = LocallyConstantFn::from_word_table(
        &sft,
        desc.potential.range,
        desc.potential.values.clone(),
    )
    .map_err(|e| CliError::Validation(format!("potential: {e}")))?;
    let mut fns = vec![phi_lc];
    for (name, fd) in &desc.observables {
        fns.push(
            LocallyConstantFn::from_word_table(&sft, fd.range, fd.values.clone())
                .map_err(|e| CliError::Validation(format!("observable {name:?}: {e}")))?,
        );
    }
    let (system, recoded) = recode_to_blocks(&sft, &fns)?;
    let bs = system.block_sft();
    let mut recoded = recoded.into_iter();
    let phi_recoded = recoded.next().expect("recode preserves arity");
    let phi = BlockFn::new(bs, &phi_recoded)?;
    let mut observables = BTreeMap::new();
    let mut observables_recoded = BTreeMap::new();
    for (name, lc) in desc.observables.keys().zip(recoded) {
        observables.insert(name.clone(), BlockFn::new(bs, &lc)?);
        observables_recoded.insert(name.clone(), lc);
    }
    Ok(BuiltSystem {
        desc,
        sft,
        system,
        phi,
        phi_recoded,
        observables,
        observables_recoded,
    })
}

impl BuiltSystem {
    pub fn block_sft(&self) -> &Sft {
        self.system.block_sft()
    }

    /// Resolve `--observable`: an explicit name must exist; with no flag a
    /// single defined observable is used implicitly.
    pub fn select_observable(&self, name: Option<&str>) -> Result<(&str, &BlockFn)> {
        match name {
            Some(n) => match self.observables.get_key_value(n) {
                Some((k, v)) => Ok((k.as_str(), v)),
                None => Err(CliError::Core(sftlab::Error::UnknownObservable(n.into()))),
            },
            None => {
                let mut it = self.observables.iter();
                match (it.next(), it.next()) {
                    (Some((k, v)), None) => Ok((k.as_str(), v)),
                    (None, _) => Err(CliError::Validation(
                        "the system defines no observables; this command needs one".into(),
                    )),
                    (Some(_), Some(_)) => {
                        let names: Vec<&str> =
                            self.observables.keys().map(String::as_str).collect();
                        Err(CliError::Validation(format!(
                            "several observables are defined; pass --observable with one of: {}",
                            names.join(", ")
                        )))
                    }
                }
            }
        }
    }

    /// True when the description is the two-symbol graph forbidding the
    /// repeated second symbol with an identically zero potential — the
    /// worked example whose published constant table carries errata.
    pub fn is_golden_mean_mme(&self) -> bool {
        self.desc.alphabet_size == 2
            && self.desc.transitions == [1, 1, 1, 0]
            && self.desc.potential.values.values().all(|&v| v == 0.0)
    }
}

/// Solved spectral data of a built system.
pub struct Solved {
    pub tm: TransferMatrix,
    pub rpf: RpfData,
    pub chain: GibbsChain,
}

pub fn solve(built: &BuiltSystem) -> Result<Solved> {
    let tm = TransferMatrix::from_block_fn(built.block_sft(), built.phi.clone());
    let rpf = rpf_solve(&tm)?;
    let chain = gibbs_chain(&tm, &rpf);
    Ok(Solved { tm, rpf, chain })
}
