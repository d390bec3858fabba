//! Intrinsic attribute verification. Every question is scored once on the
//! detection frame; an attribute is satisfied by any Yes. Attributes left
//! unsatisfied (all No, or Unknowns) get exactly one re-query round on the
//! most informative of the next five frames, then the verdict is final.

use super::predicates::bin_score;
use super::VerifyError;
use crate::goal::{AttributeQuestion, GoalSpec};

/// Discretized VQA answer bands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bin {
    No,
    Unknown,
    Yes,
}

/// Frames buffered before the re-query round.
pub const REQUERY_WINDOW: usize = 5;

/// Scores one attribute question against a given frame (0 is the detection
/// frame; later ids come from the episode's frame log).
pub trait AttributeScorer {
    fn score(&mut self, question: &AttributeQuestion, frame: usize) -> Result<u8, VerifyError>;
}

impl<F> AttributeScorer for F
where
    F: FnMut(&AttributeQuestion, usize) -> Result<u8, VerifyError>,
{
    fn score(&mut self, question: &AttributeQuestion, frame: usize) -> Result<u8, VerifyError> {
        self(question, frame)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntrinsicVerdict {
    Accepted,
    Rejected,
    Deferred { frames_remaining: usize },
}

/// One scored question: which question, on which frame, and how it binned.
#[derive(Clone, Debug, PartialEq)]
pub struct QuestionEvent {
    pub question_index: usize,
    pub frame: usize,
    pub score: u8,
    pub bin: Bin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AttrStatus {
    Satisfied,
    Pending,
    Failed,
}

#[derive(Clone, Debug)]
struct AttributeCheck {
    question_indices: Vec<usize>,
    status: AttrStatus,
}

/// Re-entrant verification state for one candidate. The episode loop feeds
/// one frame per step until the verdict resolves.
#[derive(Clone, Debug)]
pub struct IntrinsicSession {
    questions: Vec<AttributeQuestion>,
    attributes: Vec<AttributeCheck>,
    frames: Vec<(usize, f64)>,
    pub history: Vec<QuestionEvent>,
    resolved: Option<bool>,
}

impl IntrinsicSession {
    /// Runs the first query round on the detection frame (frame 0).
    pub fn start<S: AttributeScorer>(goal: &GoalSpec, scorer: &mut S) -> Result<Self, VerifyError> {
        let mut session = IntrinsicSession {
            questions: goal.questions.clone(),
            attributes: Vec::new(),
            frames: Vec::new(),
            history: Vec::new(),
            resolved: None,
        };
        for (&atype, _) in &goal.intrinsic {
            let question_indices: Vec<usize> = goal
                .questions
                .iter()
                .enumerate()
                .filter(|(_, q)| q.atype == atype)
                .map(|(i, _)| i)
                .collect();
            if question_indices.is_empty() {
                continue; // attribute without prompts cannot gate the verdict
            }
            session.attributes.push(AttributeCheck {
                question_indices,
                status: AttrStatus::Pending,
            });
        }
        if session.attributes.is_empty() {
            session.resolved = Some(true); // nothing to check
            return Ok(session);
        }
        for a in 0..session.attributes.len() {
            let mut any_yes = false;
            for qi in session.attributes[a].question_indices.clone() {
                let score = scorer.score(&session.questions[qi], 0)?;
                let bin = bin_score(score as u16)?;
                session.history.push(QuestionEvent {
                    question_index: qi,
                    frame: 0,
                    score,
                    bin,
                });
                any_yes |= bin == Bin::Yes;
            }
            if any_yes {
                session.attributes[a].status = AttrStatus::Satisfied;
            }
        }
        if session.all_satisfied() {
            session.resolved = Some(true);
        }
        Ok(session)
    }

    fn all_satisfied(&self) -> bool {
        self.attributes
            .iter()
            .all(|a| a.status == AttrStatus::Satisfied)
    }

    pub fn verdict(&self) -> IntrinsicVerdict {
        match self.resolved {
            Some(true) => IntrinsicVerdict::Accepted,
            Some(false) => IntrinsicVerdict::Rejected,
            None => IntrinsicVerdict::Deferred {
                frames_remaining: REQUERY_WINDOW - self.frames.len(),
            },
        }
    }

    pub fn is_resolved(&self) -> bool {
        self.resolved.is_some()
    }

    /// Buffers one subsequent frame (`similarity` ranks informativeness).
    /// Once five frames are logged, pending attributes are re-queried on the
    /// best frame and the verdict becomes final.
    pub fn push_frame<S: AttributeScorer>(
        &mut self,
        frame: usize,
        similarity: f64,
        scorer: &mut S,
    ) -> Result<IntrinsicVerdict, VerifyError> {
        if self.resolved.is_some() {
            return Ok(self.verdict());
        }
        self.frames.push((frame, similarity));
        if self.frames.len() >= REQUERY_WINDOW {
            self.resolve(scorer)?;
        }
        Ok(self.verdict())
    }

    /// Forces the re-query round on whatever frames are buffered (the
    /// detection frame when none are). Used when the episode cannot supply
    /// the full window.
    pub fn resolve<S: AttributeScorer>(
        &mut self,
        scorer: &mut S,
    ) -> Result<IntrinsicVerdict, VerifyError> {
        if self.resolved.is_some() {
            return Ok(self.verdict());
        }
        let best_frame = self
            .frames
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(f, _)| f)
            .unwrap_or(0);
        for a in 0..self.attributes.len() {
            if self.attributes[a].status != AttrStatus::Pending {
                continue;
            }
            let mut any_yes = false;
            for qi in self.attributes[a].question_indices.clone() {
                let score = scorer.score(&self.questions[qi], best_frame)?;
                let bin = bin_score(score as u16)?;
                self.history.push(QuestionEvent {
                    question_index: qi,
                    frame: best_frame,
                    score,
                    bin,
                });
                any_yes |= bin == Bin::Yes;
            }
            self.attributes[a].status = if any_yes {
                AttrStatus::Satisfied
            } else {
                AttrStatus::Failed
            };
        }
        self.resolved = Some(self.all_satisfied());
        Ok(self.verdict())
    }
}

/// One-shot protocol driver: round one on the detection frame, then the
/// buffered `frame_log` of `(frame id, similarity)` records. Returns the
/// verdict plus the per-question bin history.
pub fn verify_intrinsic<S: AttributeScorer>(
    goal: &GoalSpec,
    scorer: &mut S,
    frame_log: &[(usize, f64)],
) -> Result<(IntrinsicVerdict, Vec<QuestionEvent>), VerifyError> {
    let mut session = IntrinsicSession::start(goal, scorer)?;
    for &(frame, sim) in frame_log.iter().take(REQUERY_WINDOW) {
        if session.is_resolved() {
            break;
        }
        session.push_frame(frame, sim, scorer)?;
    }
    Ok((session.verdict(), session.history.clone()))
}
