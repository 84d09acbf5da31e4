//! Nearest-neighbor reference classifiers working on raw dissimilarities.

use crate::error::{GtgError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainingMember {
    pub player: usize,
    pub class: usize,
}

/// Labeled exemplars. Member order is the order of the query dissimilarity
/// vectors handed to the classifiers; ties never depend on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingSet {
    classes: usize,
    members: Vec<TrainingMember>,
}

impl TrainingSet {
    pub fn new(classes: usize, members: Vec<TrainingMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(GtgError::input("training set is empty"));
        }
        let mut count = vec![0usize; classes];
        for m in &members {
            if m.class >= classes {
                return Err(GtgError::input(format!(
                    "training member {} has class {} outside 0..{classes}",
                    m.player, m.class
                )));
            }
            count[m.class] += 1;
        }
        if let Some(c) = count.iter().position(|&c| c == 0) {
            return Err(GtgError::input(format!("class {c} has no training member")));
        }
        let mut players: Vec<usize> = members.iter().map(|m| m.player).collect();
        players.sort_unstable();
        if let Some(w) = players.windows(2).find(|w| w[0] == w[1]) {
            return Err(GtgError::input(format!("player {} appears twice in the training set", w[0])));
        }
        Ok(TrainingSet { classes, members })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn members(&self) -> &[TrainingMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, player: usize) -> bool {
        self.members.iter().any(|m| m.player == player)
    }

    /// Number of members in class `c`.
    pub fn class_size(&self, c: usize) -> usize {
        self.members.iter().filter(|m| m.class == c).count()
    }
}

fn check_query(query: &[f64], train: &TrainingSet) -> Result<()> {
    if train.is_empty() {
        return Err(GtgError::input("training set is empty"));
    }
    if query.len() != train.len() {
        return Err(GtgError::input(format!(
            "{} dissimilarities for {} training members",
            query.len(),
            train.len()
        )));
    }
    if let Some(bad) = query.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(GtgError::input(format!("invalid dissimilarity {bad}")));
    }
    Ok(())
}

/// Class of the single closest training member. Ties go to the member with
/// the lower player index.
pub fn nn_classify(query: &[f64], train: &TrainingSet) -> Result<usize> {
    check_query(query, train)?;
    let best = train
        .members()
        .iter()
        .zip(query)
        .min_by(|(a, da), (b, db)| da.total_cmp(db).then(a.player.cmp(&b.player)))
        .map(|(m, _)| m.class)
        .expect("non-empty training set");
    Ok(best)
}

/// Class with the smallest summed dissimilarity over its members. Ties go to
/// the lower class index.
pub fn accumulated_nn_classify(query: &[f64], train: &TrainingSet) -> Result<usize> {
    check_query(query, train)?;
    let mut per_class: Vec<Vec<(usize, f64)>> = vec![Vec::new(); train.classes()];
    for (m, &d) in train.members().iter().zip(query) {
        per_class[m.class].push((m.player, d));
    }
    let mut best: Option<(usize, f64)> = None;
    for (c, items) in per_class.iter_mut().enumerate() {
        // player order makes the sum independent of presentation order
        items.sort_unstable_by_key(|&(p, _)| p);
        let score: f64 = items.iter().map(|&(_, d)| d).sum();
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((c, score));
        }
    }
    Ok(best.expect("at least one class").0)
}
