use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ngrams::Counts;
use super::FeatureError;
use crate::corpus::Sentence;

/// How a dependency arc is rendered as a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepMode {
    /// `headPOS_rel_depPOS`
    Triple,
    /// `headPOS_depPOS`
    Pos,
    /// `rel`
    Label,
    /// As `Triple`, with function-word tokens shown by their surface form.
    Funclex,
}

/// Closed-class tags whose words are kept lexical in [`DepMode::Funclex`].
pub const DEFAULT_FUNCTION_TAGS: [&str; 19] = [
    "PN", "DT", "DEG", "DEC", "DEV", "DER", "AS", "SP", "P", "CC", "CS", "LC", "MSP", "BA", "LB",
    "SB", "ETC", "PU", "AD",
];

pub fn default_function_tags() -> BTreeSet<String> {
    DEFAULT_FUNCTION_TAGS.iter().map(|s| s.to_string()).collect()
}

/// Dependency features of one sentence. The root arc has no head token and
/// is skipped in every mode.
pub fn dep_features(
    sentence: &Sentence,
    mode: DepMode,
    function_tags: &BTreeSet<String>,
) -> Result<Counts, FeatureError> {
    let arcs = sentence.arcs.as_ref().ok_or(FeatureError::MissingArcs)?;
    let mut out = Counts::new();
    for arc in arcs.iter().filter(|a| a.head != 0) {
        let head = &sentence.tokens[arc.head - 1];
        let dep = &sentence.tokens[arc.dependent - 1];
        let key = match mode {
            DepMode::Triple => format!("{}_{}_{}", head.pos, arc.relation, dep.pos),
            DepMode::Pos => format!("{}_{}", head.pos, dep.pos),
            DepMode::Label => arc.relation.clone(),
            DepMode::Funclex => {
                let show = |t: &crate::corpus::Token| {
                    if function_tags.contains(&t.pos) {
                        t.surface.clone()
                    } else {
                        t.pos.clone()
                    }
                };
                format!("{}_{}_{}", show(head), arc.relation, show(dep))
            }
        };
        *out.entry(key).or_insert(0) += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{read_dependency_table, Sentence};

    const FIGURE3: &str = "1\t我们\tPN\t3\tnsubj\n2\t一起\tAD\t3\tadvmod\n3\t照\tVV\t0\troot\n4\t幅\tM\t5\tnummod\n5\t像\tNN\t3\tdobj\n6\t。\tPU\t3\tpunct\n";

    fn figure3() -> Sentence {
        Sentence::from_deps(read_dependency_table(FIGURE3).unwrap().remove(0))
    }

    fn keys(c: &Counts) -> Vec<&str> {
        c.keys().map(String::as_str).collect()
    }

    #[test]
    fn triple_mode() {
        let c = dep_features(&figure3(), DepMode::Triple, &default_function_tags()).unwrap();
        assert_eq!(
            keys(&c),
            vec!["NN_nummod_M", "VV_advmod_AD", "VV_dobj_NN", "VV_nsubj_PN", "VV_punct_PU"]
        );
        assert!(c.values().all(|&n| n == 1));
    }

    #[test]
    fn funclex_mode() {
        let tags: BTreeSet<String> = ["PN", "PU"].iter().map(|s| s.to_string()).collect();
        let c = dep_features(&figure3(), DepMode::Funclex, &tags).unwrap();
        assert!(c.contains_key("VV_nsubj_我们"));
        assert!(c.contains_key("VV_punct_。"));
        assert!(c.contains_key("VV_advmod_AD"));
        let c = dep_features(&figure3(), DepMode::Funclex, &default_function_tags()).unwrap();
        assert!(c.contains_key("VV_advmod_一起"));
    }

    #[test]
    fn pos_and_label_modes() {
        let s = figure3();
        let tags = default_function_tags();
        let pos = dep_features(&s, DepMode::Pos, &tags).unwrap();
        assert_eq!(pos["VV_PN"], 1);
        assert_eq!(pos.values().sum::<u64>(), 5);
        let label = dep_features(&s, DepMode::Label, &tags).unwrap();
        assert_eq!(label.values().sum::<u64>(), 5);
        assert!(!label.contains_key("root"));
    }

    #[test]
    fn missing_arcs() {
        let mut s = figure3();
        s.arcs = None;
        assert!(matches!(
            dep_features(&s, DepMode::Label, &default_function_tags()),
            Err(FeatureError::MissingArcs)
        ));
    }
}
