//! Bounded verification of the hereditary, joint embedding and amalgamation
//! properties.

use serde::Serialize;

use super::{locate_checked, search_amalgam, search_member, Age};
use crate::coding::{idx, Index};
use crate::error::Error;
use crate::structure::{visit_embeddings, Elem, PartialMap};

#[derive(Clone, Debug)]
pub struct AxiomCheck {
    /// Members larger than this are skipped.
    pub size_bound: usize,
    /// Members `0..=index_bound` are examined.
    pub index_bound: usize,
    /// Index horizon for locating substructures when the age has no locator.
    pub hp_horizon: usize,
    /// Index budget for brute-force amalgam search.
    pub amalgam_budget: usize,
}

impl AxiomCheck {
    pub fn new(size_bound: usize, index_bound: usize) -> Self {
        AxiomCheck {
            size_bound,
            index_bound,
            hp_horizon: 64,
            amalgam_budget: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// A substructure of `member` on `subset` matches no located member.
    Hp { member: String, subset: Vec<Elem> },
    /// No joint embedding found for `a` and `b`.
    Jep { a: String, b: String, reason: String },
    /// No amalgam found for `f: C -> A`, `g: C -> B`.
    Ap {
        a: String,
        b: String,
        c: String,
        f: String,
        g: String,
        reason: String,
    },
    /// An amalgam was returned but failed validation.
    Certificate {
        a: String,
        b: String,
        c: String,
        f: String,
        g: String,
        reason: String,
    },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub members_examined: usize,
    pub substructures_checked: usize,
    pub amalgam_queries: usize,
    pub certificates_validated: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.counterexamples.is_empty()
    }

    /// One JSON object per counterexample, then a summary line.
    pub fn json_lines(&self, age: &str) -> Vec<String> {
        let mut out: Vec<String> = self
            .counterexamples
            .iter()
            .map(|c| serde_json::to_string(&super::ReportLine { age, body: c }).expect("serializable"))
            .collect();
        let summary = serde_json::json!({
            "kind": "summary",
            "verdict": if self.is_clean() { "none found" } else { "counterexamples" },
            "members_examined": self.members_examined,
            "substructures_checked": self.substructures_checked,
            "amalgam_queries": self.amalgam_queries,
            "certificates_validated": self.certificates_validated,
            "counterexamples": self.counterexamples.len(),
        });
        out.push(serde_json::to_string(&super::ReportLine { age, body: summary }).expect("serializable"));
        out
    }
}

/// Checks HP, JEP and AP over all members with index at most `index_bound`
/// and size at most `size_bound`. AP is checked for every triple of such
/// members and every pair of embeddings; JEP is the case of an empty `C`.
pub fn check_age_axioms(age: &dyn Age, cfg: &AxiomCheck) -> AxiomReport {
    let mut report = AxiomReport::default();
    let members: Vec<Index> = (0..=cfg.index_bound as u64)
        .map(idx)
        .filter(|i| age.member(i).len() <= cfg.size_bound)
        .collect();
    report.members_examined = members.len();

    for i in &members {
        let m = age.member(i);
        let elems: Vec<Elem> = m.universe().iter().copied().collect();
        for mask in 0..(1u64 << elems.len()) - 1 {
            let subset = elems
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let sub = m.restrict_unchecked(&subset);
            report.substructures_checked += 1;
            let found = locate_checked(age, &sub).or_else(|| search_member(age, &sub, cfg.hp_horizon));
            if found.is_none() {
                report.counterexamples.push(Counterexample::Hp {
                    member: i.to_string(),
                    subset: subset.into_iter().collect(),
                });
            }
        }
    }

    for c in &members {
        let mc = age.member(c);
        for a in &members {
            let ma = age.member(a);
            let mut fs = Vec::new();
            visit_embeddings(&mc, &ma, |f| {
                fs.push(f.clone());
                false
            });
            if fs.is_empty() {
                continue;
            }
            for b in &members {
                let mb = age.member(b);
                let mut gs = Vec::new();
                visit_embeddings(&mc, &mb, |g| {
                    gs.push(g.clone());
                    false
                });
                for f in &fs {
                    for g in &gs {
                        report.amalgam_queries += 1;
                        check_triple(age, cfg, &mut report, (a, b, c), f, g, mc.is_empty());
                    }
                }
            }
        }
    }
    report
}

fn check_triple(
    age: &dyn Age,
    cfg: &AxiomCheck,
    report: &mut AxiomReport,
    (a, b, c): (&Index, &Index, &Index),
    f: &PartialMap,
    g: &PartialMap,
    joint: bool,
) {
    let (ma, mb, mc) = (age.member(a), age.member(b), age.member(c));
    let q = super::AmalgamQuery {
        a: &ma,
        b: &mb,
        c: &mc,
        f,
        g,
    };
    match search_amalgam(age, a, b, c, f, g, cfg.amalgam_budget) {
        Ok(cert) => match cert.as_amalgam().verify(age, &q) {
            Ok(()) => report.certificates_validated += 1,
            Err(reason) => report.counterexamples.push(Counterexample::Certificate {
                a: a.to_string(),
                b: b.to_string(),
                c: c.to_string(),
                f: f.to_string(),
                g: g.to_string(),
                reason,
            }),
        },
        Err(e) => {
            let reason = match e {
                Error::BudgetExhausted { budget } => format!("no amalgam among the first {} members", budget + 1),
                other => other.to_string(),
            };
            report.counterexamples.push(if joint {
                Counterexample::Jep {
                    a: a.to_string(),
                    b: b.to_string(),
                    reason,
                }
            } else {
                Counterexample::Ap {
                    a: a.to_string(),
                    b: b.to_string(),
                    c: c.to_string(),
                    f: f.to_string(),
                    g: g.to_string(),
                    reason,
                }
            });
        }
    }
}
