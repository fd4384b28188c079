//! Choosing a true statement and a contradicting one for a scene.

use serde::{Deserialize, Serialize};

use super::scenes::CogObjects;
use super::templates::{claim_row, evaluate, prompts, render_claim, Claim, ObjRef};
use super::{CogError, CogMeta, CogTask, Outcome};
use crate::geometry::RandomStream;

/// How the rejected response contradicts the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Same template, bound to the other object.
    WrongBinding,
    /// A statement of a different relation.
    OppositeRelation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realized {
    pub prompt: String,
    pub prompt_index: usize,
    pub chosen: String,
    pub rejected: String,
    pub chosen_row: u8,
    pub rejected_row: u8,
    pub strategy: Strategy,
}

/// Reference to object `i`; angle and length scenes can name it by color or
/// by letter.
fn obj_ref(objects: &CogObjects, i: usize, by_letter: bool) -> ObjRef {
    let info = &objects.refs()[i];
    match (&info.noun, info.letter) {
        (Some(noun), _) => ObjRef::ColorShape(info.color, noun.clone()),
        (None, Some(l)) if by_letter => ObjRef::Letter(l),
        _ => ObjRef::Color(info.color),
    }
}

fn same_claim(task: CogTask, objects: &CogObjects) -> Claim {
    if task == CogTask::Quantity {
        Claim::SameCount { a: obj_ref(objects, 0, false), b: obj_ref(objects, 1, false) }
    } else {
        Claim::Same
    }
}

/// (chosen, rejected, position-wrong flag for rejected, strategy)
fn pick_claims(
    task: CogTask,
    outcome: Outcome,
    objects: &CogObjects,
    st: &mut RandomStream,
) -> Result<(Claim, Claim, bool, Strategy), CogError> {
    let want_wrong_binding = st.coin();
    let by_letter = matches!(task, CogTask::Angle | CogTask::Length) && st.coin();
    let r = |i| obj_ref(objects, i, by_letter);
    let no_true = || CogError::NoTrueTemplate { task, outcome: outcome.name().into() };
    Ok(match outcome {
        Outcome::AGreater | Outcome::BGreater => {
            let (w, l) = if outcome == Outcome::AGreater { (0, 1) } else { (1, 0) };
            let say_greater = st.coin();
            let chosen = if say_greater { Claim::Greater { subject: r(w) } } else { Claim::Smaller { subject: r(l) } };
            if want_wrong_binding {
                let rejected =
                    if say_greater { Claim::Greater { subject: r(l) } } else { Claim::Smaller { subject: r(w) } };
                (chosen, rejected, false, Strategy::WrongBinding)
            } else {
                let rejected = if st.coin() {
                    same_claim(task, objects)
                } else if say_greater {
                    Claim::Smaller { subject: r(w) }
                } else {
                    Claim::Greater { subject: r(l) }
                };
                (chosen, rejected, false, Strategy::OppositeRelation)
            }
        }
        Outcome::Same => {
            let i = st.index(2);
            let rejected = if st.coin() { Claim::Greater { subject: r(i) } } else { Claim::Smaller { subject: r(i) } };
            (same_claim(task, objects), rejected, false, Strategy::OppositeRelation)
        }
        Outcome::LeftOf | Outcome::RightOf | Outcome::Above | Outcome::Below => {
            let rel = outcome.rel().ok_or_else(no_true)?;
            // state it as A-rel-B or, equivalently, B-opposite-A
            let (x, y, rel) = if st.coin() { (0, 1, rel) } else { (1, 0, rel.opposite()) };
            let chosen = Claim::Position { a: r(x), rel, b: r(y) };
            if want_wrong_binding {
                (chosen, Claim::Position { a: r(y), rel, b: r(x) }, false, Strategy::WrongBinding)
            } else if st.index(4) == 0 {
                (chosen, Claim::SamePosition, false, Strategy::OppositeRelation)
            } else {
                (chosen, Claim::Position { a: r(x), rel: rel.opposite(), b: r(y) }, true, Strategy::OppositeRelation)
            }
        }
        Outcome::OnlyA | Outcome::OnlyB => {
            let (p, q) = if outcome == Outcome::OnlyA { (0, 1) } else { (1, 0) };
            let color = |i: usize| objects.refs()[i].color;
            let chosen = Claim::SlopeOnly { color: color(p) };
            if want_wrong_binding {
                (chosen, Claim::SlopeOnly { color: color(q) }, false, Strategy::WrongBinding)
            } else {
                let rejected = if st.coin() { Claim::SlopeBoth } else { Claim::SlopeNeither };
                (chosen, rejected, false, Strategy::OppositeRelation)
            }
        }
        // a single-line statement is avoided here: with both lines parallel it
        // would read as partly true
        Outcome::Both => (Claim::SlopeBoth, Claim::SlopeNeither, false, Strategy::OppositeRelation),
        Outcome::Neither => {
            let rejected = match st.index(3) {
                0 => Claim::SlopeBoth,
                i => Claim::SlopeOnly { color: objects.refs()[i - 1].color },
            };
            (Claim::SlopeNeither, rejected, false, Strategy::OppositeRelation)
        }
        Outcome::Yes | Outcome::No => {
            let yes = outcome == Outcome::Yes;
            let target = r(0);
            (
                Claim::Intersects { yes, target: target.clone() },
                Claim::Intersects { yes: !yes, target },
                false,
                Strategy::OppositeRelation,
            )
        }
    })
}

/// Prompt, true statement and contradicting statement for a scene.
pub fn realize_templates(task: CogTask, meta: &CogMeta, stream: &mut RandomStream) -> Result<Realized, CogError> {
    let objects = &meta.objects;
    if objects.task() != task {
        return Err(CogError::WrongTask(task));
    }
    let prompt_index = stream.index(5);
    let (chosen, rejected, wrong_pos, strategy) = pick_claims(task, meta.outcome, objects, stream)?;
    let chosen_row = claim_row(task, &chosen, false)?;
    let rejected_row = claim_row(task, &rejected, wrong_pos)?;
    if !evaluate(&chosen, objects)? || evaluate(&rejected, objects)? {
        return Err(CogError::NoTrueTemplate { task, outcome: meta.outcome.name().into() });
    }
    Ok(Realized {
        prompt: prompts(task)[prompt_index].to_string(),
        prompt_index,
        chosen: render_claim(task, &chosen, chosen_row),
        rejected: render_claim(task, &rejected, rejected_row),
        chosen_row,
        rejected_row,
        strategy,
    })
}
