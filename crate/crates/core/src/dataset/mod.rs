//! Sample extraction, labelling, balancing, splitting, and persistence.
//!
//! A sample is a 3-second, 30-channel EEG window (384 points at 128 Hz) cut
//! ahead of one lane-departure event. Labelling follows the reaction-time
//! rule: with `alertRT` the 5th percentile of a session's local RTs, a trial
//! is *alert* when both its local and global RT fall below `1.5 * alertRT`,
//! *drowsy* when both exceed `2.5 * alertRT`, and discarded otherwise
//! (boundary equality discards).

mod container;
mod npy;
mod synth;

pub use container::{export_container, export_metadata_csv, import_container};
pub use npy::{import_arrays, read_npy, NpyArray};
pub use synth::{synth_generate, synth_generate_traced, SynthBundle, CENTRAL_CHANNELS};

use std::collections::BTreeMap;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Electrode count per sample.
pub const CHANNELS: usize = 30;
/// Points per 3-second window at 128 Hz.
pub const WINDOW_LEN: usize = 384;
/// Sampling rate of the ingested representation.
pub const RATE_HZ: usize = 128;

/// The 30-channel 10-20 montage used by the recordings.
pub const MONTAGE: [&str; CHANNELS] = [
    "FP1", "FP2", "F7", "F3", "FZ", "F4", "F8", "FT7", "FC3", "FCZ", "FC4", "FT8", "T3", "C3",
    "CZ", "C4", "T4", "TP7", "CP3", "CPZ", "CP4", "TP8", "T5", "P3", "PZ", "P4", "T6", "O1", "OZ",
    "O2",
];

pub fn montage_names() -> Vec<String> {
    MONTAGE.iter().map(|s| s.to_string()).collect()
}

/// Binary vigilance state; the wire encoding is `alert = 0`, `drowsy = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Alert,
    Drowsy,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Alert => 0,
            Label::Drowsy => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Label> {
        match v {
            0 => Ok(Label::Alert),
            1 => Ok(Label::Drowsy),
            other => Err(Error::Format(format!("label byte {other} not in {{0,1}}"))),
        }
    }
}

/// One lane-departure trial before labelling.
#[derive(Debug, Clone)]
pub struct Trial {
    pub subject_id: u16,
    pub session_id: u32,
    /// `30 x 384` window in microvolts.
    pub signal: Array2<f32>,
    /// Reaction time to this event, seconds.
    pub local_rt: f64,
    /// Mean reaction time over the 90 s window before the event, seconds.
    pub global_rt: f64,
}

/// One labelled EEG window.
#[derive(Debug, Clone, PartialEq)]
pub struct EegSample {
    pub subject_id: u16,
    /// `30 x 384` window in microvolts.
    pub signal: Array2<f32>,
    pub label: Label,
    /// Originating reaction time; `None` for imported containers, which do
    /// not persist it.
    pub local_rt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleKind {
    Balanced,
    Unbalanced,
    Synthetic,
}

impl BundleKind {
    pub fn name(&self) -> &'static str {
        match self {
            BundleKind::Balanced => "balanced",
            BundleKind::Unbalanced => "unbalanced",
            BundleKind::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Result<BundleKind> {
        match s {
            "balanced" => Ok(BundleKind::Balanced),
            "unbalanced" => Ok(BundleKind::Unbalanced),
            "synthetic" => Ok(BundleKind::Synthetic),
            other => Err(Error::Format(format!("unknown bundle kind '{other}'"))),
        }
    }
}

/// A collection of labelled samples with shared channel naming.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub kind: BundleKind,
    pub channel_names: Vec<String>,
    pub samples: Vec<EegSample>,
}

impl DatasetBundle {
    pub fn new(kind: BundleKind, samples: Vec<EegSample>) -> Self {
        Self {
            kind,
            channel_names: montage_names(),
            samples,
        }
    }

    /// `(alert, drowsy)` counts per subject, keyed in ascending subject order.
    pub fn per_subject_counts(&self) -> BTreeMap<u16, (usize, usize)> {
        let mut counts: BTreeMap<u16, (usize, usize)> = BTreeMap::new();
        for s in &self.samples {
            let e = counts.entry(s.subject_id).or_insert((0, 0));
            match s.label {
                Label::Alert => e.0 += 1,
                Label::Drowsy => e.1 += 1,
            }
        }
        counts
    }

    /// Sorted unique subject ids.
    pub fn subject_ids(&self) -> Vec<u16> {
        self.per_subject_counts().keys().copied().collect()
    }

    pub fn is_balanced_per_subject(&self) -> bool {
        self.per_subject_counts().values().all(|&(a, d)| a == d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel_names.len() != CHANNELS {
            return Err(Error::Shape(format!(
                "{} channel names, expected {CHANNELS}",
                self.channel_names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &self.channel_names {
            if !seen.insert(name) {
                return Err(Error::Invalid(format!("duplicate channel name {name}")));
            }
        }
        for (idx, s) in self.samples.iter().enumerate() {
            if s.signal.dim() != (CHANNELS, WINDOW_LEN) {
                return Err(Error::Shape(format!(
                    "sample {idx}: signal {:?}, expected ({CHANNELS}, {WINDOW_LEN})",
                    s.signal.dim()
                )));
            }
            if s.signal.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("sample {idx}: non-finite signal")));
            }
        }
        Ok(())
    }

    /// Assemble selected samples into a `batch x 30 x 384` double-precision
    /// input plus wire labels.
    pub fn batch(&self, indices: &[usize]) -> (Array3<f64>, Vec<u8>) {
        let mut x = Array3::zeros((indices.len(), CHANNELS, WINDOW_LEN));
        let mut labels = Vec::with_capacity(indices.len());
        for (row, &idx) in indices.iter().enumerate() {
            let s = &self.samples[idx];
            for c in 0..CHANNELS {
                for j in 0..WINDOW_LEN {
                    x[[row, c, j]] = f64::from(s.signal[[c, j]]);
                }
            }
            labels.push(s.label.as_u8());
        }
        (x, labels)
    }

    /// All samples of one subject, in stored order.
    pub fn subject_indices(&self, subject_id: u16) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.subject_id == subject_id)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Labelled output of one recording session.
#[derive(Debug, Clone)]
pub struct LabeledSession {
    pub subject_id: u16,
    pub session_id: u32,
    pub samples: Vec<EegSample>,
}

impl LabeledSession {
    pub fn class_counts(&self) -> (usize, usize) {
        let alert = self
            .samples
            .iter()
            .filter(|s| s.label == Label::Alert)
            .count();
        (alert, self.samples.len() - alert)
    }
}

/// Counters emitted by the labelling pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub alert: usize,
    pub drowsy: usize,
    pub discarded: usize,
    pub rejected_nonfinite: usize,
}

/// 5th percentile by linear interpolation between order statistics.
pub fn alert_rt(local_rts: &[f64]) -> Result<f64> {
    percentile(local_rts, 0.05)
}

fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Invalid("percentile of empty set".into()));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    let frac = h - lo as f64;
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Mean local RT over the trailing 90 s window (prefix mean when the session
/// is younger than 90 s). `event_times_s` must be ascending.
pub fn compute_global_rts(event_times_s: &[f64], local_rts: &[f64]) -> Result<Vec<f64>> {
    if event_times_s.len() != local_rts.len() {
        return Err(Error::Invalid("event/RT length mismatch".into()));
    }
    let mut out = Vec::with_capacity(local_rts.len());
    for (k, &t) in event_times_s.iter().enumerate() {
        let window_start = t - 90.0;
        let mut acc = 0.0;
        let mut n = 0usize;
        for i in 0..=k {
            if event_times_s[i] >= window_start {
                acc += local_rts[i];
                n += 1;
            }
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

/// Label one session's trials against its own alert-RT baseline.
pub fn label_session(trials: &[Trial]) -> Result<(LabeledSession, LabelSummary)> {
    if trials.is_empty() {
        return Err(Error::Invalid("empty session".into()));
    }
    let mut summary = LabelSummary::default();
    let finite: Vec<&Trial> = trials
        .iter()
        .filter(|t| {
            let ok = t.local_rt.is_finite() && t.global_rt.is_finite();
            if !ok {
                summary.rejected_nonfinite += 1;
            }
            ok
        })
        .collect();
    if finite.is_empty() {
        return Err(Error::Invalid(
            "session has no finite reaction times".into(),
        ));
    }
    let rts: Vec<f64> = finite.iter().map(|t| t.local_rt).collect();
    let baseline = alert_rt(&rts)?;
    let lo = 1.5 * baseline;
    let hi = 2.5 * baseline;

    let mut samples = Vec::new();
    for t in &finite {
        let label = if t.local_rt < lo && t.global_rt < lo {
            Some(Label::Alert)
        } else if t.local_rt > hi && t.global_rt > hi {
            Some(Label::Drowsy)
        } else {
            None
        };
        match label {
            Some(Label::Alert) => summary.alert += 1,
            Some(Label::Drowsy) => summary.drowsy += 1,
            None => summary.discarded += 1,
        }
        if let Some(label) = label {
            samples.push(EegSample {
                subject_id: t.subject_id,
                signal: t.signal.clone(),
                label,
                local_rt: Some(t.local_rt),
            });
        }
    }
    Ok((
        LabeledSession {
            subject_id: finite[0].subject_id,
            session_id: finite[0].session_id,
            samples,
        },
        summary,
    ))
}

/// Label every session independently.
pub fn label_by_reaction_time(
    sessions: &[Vec<Trial>],
) -> Result<(Vec<LabeledSession>, LabelSummary)> {
    let mut out = Vec::with_capacity(sessions.len());
    let mut total = LabelSummary::default();
    for trials in sessions {
        let (labeled, summary) = label_session(trials)?;
        total.alert += summary.alert;
        total.drowsy += summary.drowsy;
        total.discarded += summary.discarded;
        total.rejected_nonfinite += summary.rejected_nonfinite;
        out.push(labeled);
    }
    Ok((out, total))
}

/// Drop sessions with fewer than 50 samples of either class, then keep one
/// session per subject: the one minimising `|alert - drowsy|` (first wins on
/// ties).
pub fn filter_and_select_sessions(sessions: Vec<LabeledSession>) -> Result<DatasetBundle> {
    let mut best: BTreeMap<u16, LabeledSession> = BTreeMap::new();
    for session in sessions {
        let (alert, drowsy) = session.class_counts();
        if alert < 50 || drowsy < 50 {
            continue;
        }
        let imbalance = alert.abs_diff(drowsy);
        match best.get(&session.subject_id) {
            Some(current) => {
                let (ca, cd) = current.class_counts();
                if imbalance < ca.abs_diff(cd) {
                    best.insert(session.subject_id, session);
                }
            }
            None => {
                best.insert(session.subject_id, session);
            }
        }
    }
    if best.is_empty() {
        return Err(Error::Invalid(
            "no session has at least 50 samples of each class".into(),
        ));
    }
    let samples = best.into_values().flat_map(|s| s.samples).collect();
    Ok(DatasetBundle::new(BundleKind::Unbalanced, samples))
}

/// Per subject, trim the majority class to the minority count, keeping the
/// most representative samples: shortest local RT for alert, longest for
/// drowsy. Ties and retained samples keep their original order.
pub fn build_balanced(unbalanced: &DatasetBundle) -> Result<DatasetBundle> {
    let counts = unbalanced.per_subject_counts();
    for (&subject, &(alert, drowsy)) in &counts {
        if alert == 0 || drowsy == 0 {
            return Err(Error::Invalid(format!(
                "subject {subject} has no samples of one class"
            )));
        }
    }

    let mut keep = vec![false; unbalanced.samples.len()];
    for (&subject, &(alert, drowsy)) in &counts {
        let indices = unbalanced.subject_indices(subject);
        let minority = alert.min(drowsy);
        let (majority_label, trim_longest) = if alert > drowsy {
            (Label::Alert, false)
        } else {
            (Label::Drowsy, true)
        };
        let mut majority_idx: Vec<usize> = Vec::new();
        for &i in &indices {
            if unbalanced.samples[i].label == majority_label {
                majority_idx.push(i);
            } else {
                keep[i] = true;
            }
        }
        if majority_idx.len() == minority {
            for &i in &majority_idx {
                keep[i] = true;
            }
            continue;
        }
        for &i in &majority_idx {
            if unbalanced.samples[i].local_rt.is_none() {
                return Err(Error::Invalid(format!(
                    "subject {subject}: majority-class sample lacks local RT, cannot balance"
                )));
            }
        }
        // Stable sort: equal RTs keep original trial order.
        majority_idx.sort_by(|&a, &b| {
            let ra = unbalanced.samples[a].local_rt.unwrap();
            let rb = unbalanced.samples[b].local_rt.unwrap();
            if trim_longest {
                rb.partial_cmp(&ra).unwrap()
            } else {
                ra.partial_cmp(&rb).unwrap()
            }
        });
        for &i in majority_idx.iter().take(minority) {
            keep[i] = true;
        }
    }

    let samples = unbalanced
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, s)| s.clone())
        .collect();
    Ok(DatasetBundle {
        kind: BundleKind::Balanced,
        channel_names: unbalanced.channel_names.clone(),
        samples,
    })
}

/// Partition a bundle into (train, test) by held-out subject.
pub fn loso_split(bundle: &DatasetBundle, held_out: u16) -> Result<(DatasetBundle, DatasetBundle)> {
    if !bundle.samples.iter().any(|s| s.subject_id == held_out) {
        return Err(Error::Invalid(format!(
            "subject {held_out} not present in bundle"
        )));
    }
    let (test, train): (Vec<EegSample>, Vec<EegSample>) = bundle
        .samples
        .iter()
        .cloned()
        .partition(|s| s.subject_id == held_out);
    let make = |samples| DatasetBundle {
        kind: bundle.kind,
        channel_names: bundle.channel_names.clone(),
        samples,
    };
    Ok((make(train), make(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(subject: u16, session: u32, local: f64, global: f64) -> Trial {
        Trial {
            subject_id: subject,
            session_id: session,
            signal: Array2::zeros((CHANNELS, WINDOW_LEN)),
            local_rt: local,
            global_rt: global,
        }
    }

    fn sample(subject: u16, label: Label, rt: f64) -> EegSample {
        EegSample {
            subject_id: subject,
            signal: Array2::zeros((CHANNELS, WINDOW_LEN)),
            label,
            local_rt: Some(rt),
        }
    }

    #[test]
    fn percentile_interpolates_between_order_statistics() {
        // 5th percentile of 1..=21 at h = 20*0.05 = 1.0 -> second value.
        let v: Vec<f64> = (1..=21).map(f64::from).collect();
        assert_eq!(alert_rt(&v).unwrap(), 2.0);
        // Two values: h = 0.05, interpolated.
        assert!((alert_rt(&[1.0, 2.0]).unwrap() - 1.05).abs() < 1e-12);
        assert_eq!(alert_rt(&[3.0]).unwrap(), 3.0);
    }

    #[test]
    fn labelling_applies_both_thresholds() {
        // Padding trials hold the 5th percentile at 0.6 s.
        let mut trials = vec![trial(1, 1, 0.6, 0.6); 30];
        trials.push(trial(1, 1, 0.7, 0.8)); // both < 0.9 -> alert
        trials.push(trial(1, 1, 2.0, 1.9)); // both > 1.5 -> drowsy
        trials.push(trial(1, 1, 1.0, 2.0)); // mixed -> discarded
        trials.push(trial(1, 1, 0.9, 0.8)); // local at boundary -> discarded
        let (labeled, summary) = label_session(&trials).unwrap();
        assert_eq!(summary.alert, 31); // padding counts as alert too
        assert_eq!(summary.drowsy, 1);
        assert_eq!(summary.discarded, 2);
        assert_eq!(labeled.samples.len(), 32);
    }

    #[test]
    fn labelling_rejects_nonfinite_and_is_order_independent() {
        let mut trials = vec![
            trial(1, 1, 0.6, 0.6),
            trial(1, 1, 0.65, 0.6),
            trial(1, 1, 2.0, 2.2),
            trial(1, 1, f64::NAN, 1.0),
        ];
        let (a, summary) = label_session(&trials).unwrap();
        assert_eq!(summary.rejected_nonfinite, 1);
        trials.swap(0, 2);
        let (b, _) = label_session(&trials).unwrap();
        let count =
            |s: &LabeledSession, l: Label| s.samples.iter().filter(|x| x.label == l).count();
        assert_eq!(count(&a, Label::Alert), count(&b, Label::Alert));
        assert_eq!(count(&a, Label::Drowsy), count(&b, Label::Drowsy));
    }

    #[test]
    fn empty_session_errors() {
        assert!(label_session(&[]).is_err());
    }

    #[test]
    fn global_rt_prefix_window() {
        // Events at 0, 60, 120 s; 90 s window at t=120 excludes t=0.
        let times = [0.0, 60.0, 120.0];
        let rts = [1.0, 2.0, 4.0];
        let g = compute_global_rts(&times, &rts).unwrap();
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 1.5);
        assert_eq!(g[2], 3.0);
    }

    fn session_of(subject: u16, session: u32, alert: usize, drowsy: usize) -> LabeledSession {
        let mut samples = Vec::new();
        for _ in 0..alert {
            samples.push(sample(subject, Label::Alert, 0.5));
        }
        for _ in 0..drowsy {
            samples.push(sample(subject, Label::Drowsy, 2.5));
        }
        LabeledSession {
            subject_id: subject,
            session_id: session,
            samples,
        }
    }

    #[test]
    fn session_filter_drops_small_and_keeps_most_balanced() {
        let sessions = vec![
            session_of(1, 1, 49, 120), // dropped: under 50 alert
            session_of(2, 1, 94, 96),
            session_of(2, 2, 200, 60),
        ];
        let bundle = filter_and_select_sessions(sessions).unwrap();
        let counts = bundle.per_subject_counts();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&2], (94, 96));
    }

    #[test]
    fn session_filter_errors_when_nothing_survives() {
        assert!(filter_and_select_sessions(vec![session_of(1, 1, 10, 10)]).is_err());
    }

    #[test]
    fn balancing_trims_majority_by_rt() {
        // Subject with 4 alert (majority) and 2 drowsy: keep the 2 shortest
        // alert RTs.
        let mut samples = vec![
            sample(1, Label::Alert, 0.9),
            sample(1, Label::Alert, 0.5),
            sample(1, Label::Alert, 0.7),
            sample(1, Label::Alert, 0.6),
            sample(1, Label::Drowsy, 2.0),
            sample(1, Label::Drowsy, 2.5),
        ];
        // Tag signals so retained samples are identifiable.
        for (i, s) in samples.iter_mut().enumerate() {
            s.signal[[0, 0]] = i as f32;
        }
        let bundle = DatasetBundle::new(BundleKind::Unbalanced, samples);
        let balanced = build_balanced(&bundle).unwrap();
        assert!(balanced.is_balanced_per_subject());
        let kept: Vec<f32> = balanced.samples.iter().map(|s| s.signal[[0, 0]]).collect();
        // Alert RTs 0.5 (idx 1) and 0.6 (idx 3) survive, original order kept.
        assert_eq!(kept, vec![1.0, 3.0, 4.0, 5.0]);
        // Idempotent.
        assert_eq!(build_balanced(&balanced).unwrap(), balanced);
    }

    #[test]
    fn balancing_trims_drowsy_by_longest_rt() {
        let samples = vec![
            sample(1, Label::Alert, 0.5),
            sample(1, Label::Drowsy, 2.0),
            sample(1, Label::Drowsy, 3.0),
        ];
        let bundle = DatasetBundle::new(BundleKind::Unbalanced, samples);
        let balanced = build_balanced(&bundle).unwrap();
        assert_eq!(balanced.samples.len(), 2);
        assert_eq!(balanced.samples[1].local_rt, Some(3.0));
    }

    #[test]
    fn balancing_requires_both_classes() {
        let bundle = DatasetBundle::new(
            BundleKind::Unbalanced,
            vec![sample(1, Label::Alert, 0.5); 3],
        );
        assert!(build_balanced(&bundle).is_err());
    }

    #[test]
    fn loso_split_partitions() {
        let mut samples = Vec::new();
        for subject in 1..=4u16 {
            samples.push(sample(subject, Label::Alert, 0.5));
            samples.push(sample(subject, Label::Drowsy, 2.0));
        }
        let bundle = DatasetBundle::new(BundleKind::Balanced, samples);
        let (train, test) = loso_split(&bundle, 3).unwrap();
        assert_eq!(test.samples.len(), 2);
        assert_eq!(train.samples.len(), 6);
        assert!(test.samples.iter().all(|s| s.subject_id == 3));
        assert!(train.samples.iter().all(|s| s.subject_id != 3));
        assert_eq!(
            train.samples.len() + test.samples.len(),
            bundle.samples.len()
        );
        assert!(train.is_balanced_per_subject());
        assert!(loso_split(&bundle, 99).is_err());
    }
}
