//! Model files: JSON documents describing either a finite subshift or a
//! countable shift with an eventually constant column rule.

use std::collections::BTreeMap;

use serde::Deserialize;

use rpfkit_core::cms::{CmsPotential, GeometricWeights, PredSet, TailMatrixSpec};
use rpfkit_core::{build_model, Alphabet, AprioriMeasure, Potential, SubshiftModel, Word};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub alphabet: Option<AlphabetSpec>,
    pub admissibility: AdmissibilitySpec,
    #[serde(default)]
    pub apriori: Option<AprioriSpec>,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub run: RunSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSpec {
    pub symbols: Vec<String>,
    #[serde(default)]
    pub coords: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum AdmissibilitySpec {
    Matrix(Vec<Vec<u8>>),
    Pairs(Vec<(String, String)>),
    TailSpec(TailSpecFile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpecFile {
    #[serde(default)]
    pub head_columns: Vec<PredSetSpec>,
    pub tail_column: PredSetSpec,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    0.5
}

/// `"all"`, `"only b_1, b_3"`, `"all except b_2"`, or `{"only": [1, 3]}`,
/// `{"all_except": [2]}`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PredSetSpec {
    Named(String),
    Listed(PredSetList),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PredSetList {
    Only(Vec<usize>),
    AllExcept(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum AprioriSpec {
    Weights(Vec<f64>),
    Rule(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub entries: Option<Vec<PotentialEntry>>,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub head: Option<Vec<f64>>,
    #[serde(default)]
    pub tail: Option<f64>,
    #[serde(default)]
    pub table: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialEntry {
    pub word: Vec<String>,
    pub value: f64,
}

/// Command parameters; flags override these.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub depth: Option<usize>,
    pub t_list: Option<Vec<f64>>,
    pub method: Option<String>,
    pub levels: Option<Vec<usize>>,
    pub renormalize: Option<bool>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub recurrence_symbol: Option<String>,
    pub recurrence_n_max: Option<usize>,
    pub ground_state_tol: Option<f64>,
    pub bilateral_depths: Option<(usize, usize)>,
    pub lemma_samples: Option<usize>,
}

/// A parsed model ready for computation.
#[derive(Debug, Clone)]
pub enum Loaded {
    Finite {
        model: SubshiftModel,
        potential: Potential,
    },
    Tail {
        spec: TailMatrixSpec,
        rule: CmsPotential,
    },
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

pub fn parse(text: &str) -> Result<(ModelFile, Loaded), CliError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| parse_err(format!("model file: {e}")))?;
    let loaded = match &file.admissibility {
        AdmissibilitySpec::TailSpec(t) => load_tail(&file, t)?,
        _ => load_finite(&file)?,
    };
    Ok((file, loaded))
}

fn load_finite(file: &ModelFile) -> Result<Loaded, CliError> {
    let alph = file
        .alphabet
        .as_ref()
        .ok_or_else(|| parse_err("finite models need an 'alphabet' section"))?;
    let n = alph.symbols.len();
    let alphabet = match &alph.coords {
        Some(c) => Alphabet::new(alph.symbols.clone(), c.clone())?,
        None => {
            let even = Alphabet::indexed(n)?;
            Alphabet::new(alph.symbols.clone(), even.coords().to_vec())?
        }
    };
    let matrix: Vec<Vec<bool>> = match &file.admissibility {
        AdmissibilitySpec::Matrix(rows) => {
            for row in rows {
                if row.iter().any(|&v| v > 1) {
                    return Err(parse_err("admissibility matrix entries must be 0 or 1"));
                }
            }
            rows.iter().map(|r| r.iter().map(|&v| v == 1).collect()).collect()
        }
        AdmissibilitySpec::Pairs(pairs) => {
            let mut m = vec![vec![false; n]; n];
            for (a, b) in pairs {
                m[alphabet.index_of(a)?][alphabet.index_of(b)?] = true;
            }
            m
        }
        AdmissibilitySpec::TailSpec(_) => unreachable!(),
    };
    let apriori = match &file.apriori {
        None => AprioriMeasure::uniform(n),
        Some(AprioriSpec::Weights(w)) => AprioriMeasure::new(w.clone()),
        Some(AprioriSpec::Rule(r)) => match r.as_str() {
            "uniform" => AprioriMeasure::uniform(n),
            "ones" | "counting" => AprioriMeasure::ones(n),
            other => return Err(parse_err(format!("unknown apriori rule '{other}'"))),
        },
    };
    let model = build_model(alphabet, matrix, apriori)?;
    let potential = load_potential(&model, &file.potential)?;
    Ok(Loaded::Finite { model, potential })
}

fn load_potential(model: &SubshiftModel, spec: &PotentialSpec) -> Result<Potential, CliError> {
    if let Some(entries) = &spec.entries {
        if spec.rule.is_some() {
            return Err(parse_err("potential has both 'entries' and 'rule'"));
        }
        let depth = spec
            .depth
            .or_else(|| entries.first().map(|e| e.word.len()))
            .ok_or_else(|| parse_err("potential entries are empty"))?;
        let mut table = BTreeMap::new();
        for e in entries {
            if e.word.len() != depth {
                return Err(parse_err(format!(
                    "potential word {:?} does not have length {depth}",
                    e.word
                )));
            }
            let refs: Vec<&str> = e.word.iter().map(String::as_str).collect();
            let w: Word = model.parse_word(&refs)?;
            if !model.is_admissible(&w) {
                return Err(rpfkit_core::Error::InadmissibleWord(e.word.join(" ")).into());
            }
            if table.insert(w, e.value).is_some() {
                return Err(parse_err(format!("duplicate potential entry {:?}", e.word)));
            }
        }
        return Ok(Potential::from_table(model, depth, "table", &table)?);
    }
    let rule = spec
        .rule
        .as_deref()
        .ok_or_else(|| parse_err("potential needs 'entries' or 'rule'"))?;
    let depth = spec.depth.unwrap_or(1);
    Ok(match rule {
        "zero" => Potential::zero(model, depth)?,
        "constant" => Potential::constant(
            model,
            depth,
            spec.value.ok_or_else(|| parse_err("constant rule needs 'value'"))?,
        )?,
        "first_coord" => Potential::first_coordinate(model, spec.scale.unwrap_or(1.0))?,
        "pair_coord_sum" => Potential::pair_coordinate_sum(model, spec.scale.unwrap_or(1.0))?,
        other => return Err(parse_err(format!("unknown potential rule '{other}'"))),
    })
}

fn pred_set(spec: &PredSetSpec) -> Result<PredSet, CliError> {
    let list = |s: &str| -> Result<Vec<usize>, CliError> {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                t.strip_prefix("b_")
                    .or_else(|| t.strip_prefix('b'))
                    .unwrap_or(t)
                    .parse::<usize>()
                    .map_err(|_| parse_err(format!("bad symbol '{t}' in predecessor rule")))
            })
            .collect()
    };
    Ok(match spec {
        PredSetSpec::Named(s) => {
            let s = s.trim();
            if s == "all" {
                PredSet::All
            } else if let Some(rest) = s.strip_prefix("all except ") {
                PredSet::AllExcept(list(rest)?)
            } else if let Some(rest) = s.strip_prefix("only ") {
                PredSet::Only(list(rest)?)
            } else {
                return Err(parse_err(format!("unknown predecessor rule '{s}'")));
            }
        }
        PredSetSpec::Listed(PredSetList::Only(v)) => PredSet::Only(v.clone()),
        PredSetSpec::Listed(PredSetList::AllExcept(v)) => PredSet::AllExcept(v.clone()),
    })
}

fn load_tail(file: &ModelFile, t: &TailSpecFile) -> Result<Loaded, CliError> {
    if file.alphabet.is_some() || file.apriori.is_some() {
        return Err(parse_err(
            "tail_spec models define their own alphabet and weights",
        ));
    }
    let head = t.head_columns.iter().map(pred_set).collect::<Result<_, _>>()?;
    let spec = TailMatrixSpec::new(head, pred_set(&t.tail_column)?, GeometricWeights { ratio: t.ratio })?;
    let p = &file.potential;
    let rule = match p.rule.as_deref() {
        Some("zero") => CmsPotential::Zero,
        Some("constant") => CmsPotential::Constant(
            p.value.ok_or_else(|| parse_err("constant rule needs 'value'"))?,
        ),
        Some("head_tail") => CmsPotential::Depth1 {
            head: p.head.clone().unwrap_or_default(),
            tail: p.tail.ok_or_else(|| parse_err("head_tail rule needs 'tail'"))?,
        },
        Some("class_table") => CmsPotential::Depth2 {
            table: p.table.clone().ok_or_else(|| parse_err("class_table rule needs 'table'"))?,
        },
        Some("first_coord") => CmsPotential::FirstCoord(p.scale.unwrap_or(1.0)),
        Some(other) => return Err(parse_err(format!("unknown tail potential rule '{other}'"))),
        None => return Err(parse_err("tail_spec models need a potential 'rule'")),
    };
    let finite = |v: f64| v.is_finite();
    let ok = match &rule {
        CmsPotential::Constant(c) | CmsPotential::FirstCoord(c) => finite(*c),
        CmsPotential::Depth1 { head, tail } => head.iter().all(|v| finite(*v)) && finite(*tail),
        CmsPotential::Depth2 { table } => table.iter().flatten().all(|v| finite(*v)),
        CmsPotential::Zero => true,
    };
    if !ok {
        return Err(parse_err("potential values must be finite"));
    }
    Ok(Loaded::Tail { spec, rule })
}
