//! Pairwise judging. Screenplays are segmented by top-level plot, each pair
//! is shown to a judge in a seeded random order per dimension, verdicts are
//! de-randomized, and counts fold into win rates with an exact sign test.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::{ChatRequest, Gateway, GenParams, Stage, StageFailureRecord};
use crate::prompts;
use crate::story::{
    render_episode_text, verdict_schema, word_count, Genre, Outline, Screenplay,
};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Dimensions and verdicts

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Coherence,
    Relevance,
    Interestingness,
    Overall,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Coherence,
        Dimension::Relevance,
        Dimension::Interestingness,
        Dimension::Overall,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Coherence => "Coherence",
            Dimension::Relevance => "Relevance",
            Dimension::Interestingness => "Interestingness",
            Dimension::Overall => "Overall",
        }
    }

    /// The judge's focus paragraph for this dimension.
    pub fn focus_text(self) -> &'static str {
        match self {
            Dimension::Coherence => prompts::FOCUS_COHERENCE,
            Dimension::Relevance => prompts::FOCUS_RELEVANCE,
            Dimension::Interestingness => prompts::FOCUS_INTERESTINGNESS,
            Dimension::Overall => prompts::FOCUS_OVERALL,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What the judge literally said about the presented pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A,
    B,
    #[serde(rename = "TIE")]
    Tie,
}

impl Verdict {
    /// Only the exact bodies "A", "B", "TIE" count.
    pub fn parse(body: &str) -> Result<Verdict> {
        match body {
            "A" => Ok(Verdict::A),
            "B" => Ok(Verdict::B),
            "TIE" => Ok(Verdict::Tie),
            other => Err(Error::MalformedVerdict { raw: other.into() }),
        }
    }
}

/// Which method went first in the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentedOrder {
    XY,
    YX,
}

/// The verdict mapped back onto the methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalVerdict {
    MethodX,
    MethodY,
    Tie,
}

pub fn canonical_verdict(order: PresentedOrder, verdict: Verdict) -> CanonicalVerdict {
    match (order, verdict) {
        (_, Verdict::Tie) => CanonicalVerdict::Tie,
        (PresentedOrder::XY, Verdict::A) | (PresentedOrder::YX, Verdict::B) => {
            CanonicalVerdict::MethodX
        }
        (PresentedOrder::XY, Verdict::B) | (PresentedOrder::YX, Verdict::A) => {
            CanonicalVerdict::MethodY
        }
    }
}

/// Seeded coin flip, stable per (pair, dimension).
pub fn presented_order(seed: u64, pair_id: &str, dimension: Dimension) -> PresentedOrder {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(pair_id.as_bytes());
    hasher.update(b":");
    hasher.update(dimension.label().as_bytes());
    if hasher.finalize()[0] & 1 == 0 {
        PresentedOrder::XY
    } else {
        PresentedOrder::YX
    }
}

// ---------------------------------------------------------------------------
// Segmentation and pairing

/// One top-level plot's worth of screenplay text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub top_plot_label: String,
    pub text: String,
}

/// Splits a screenplay into one segment per top plot, episodes concatenated
/// in order with a blank line between them.
pub fn segment_by_top_plot(screenplay: &Screenplay, outline: &Outline) -> Result<Vec<Segment>> {
    let mut segments = Vec::with_capacity(outline.top_plots().len());
    let mut covered = 0;
    for top in outline.top_plots() {
        let episodes: Vec<_> = screenplay
            .episodes
            .iter()
            .filter(|e| e.subplot_label.top_index == top.label.top_index)
            .collect();
        for subplot in &top.subplots {
            if !episodes.iter().any(|e| e.subplot_label == subplot.label) {
                return Err(Error::CoverageGap {
                    label: subplot.label.to_string(),
                });
            }
        }
        covered += episodes.len();
        let text = episodes
            .iter()
            .map(|e| render_episode_text(e))
            .collect::<Vec<_>>()
            .join("\n");
        segments.push(Segment {
            top_plot_label: top.label.to_string(),
            text,
        });
    }
    if covered != screenplay.episodes.len() {
        let stray = screenplay
            .episodes
            .iter()
            .find(|e| {
                !outline
                    .top_plots()
                    .iter()
                    .any(|t| t.label.top_index == e.subplot_label.top_index)
            })
            .map(|e| e.subplot_label.to_string())
            .unwrap_or_else(|| "unknown".into());
        return Err(Error::CoverageGap { label: stray });
    }
    Ok(segments)
}

/// Two methods' takes on the same top plot of the same story.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPair {
    pub pair_id: String,
    pub top_plot_label: String,
    pub x: Segment,
    pub y: Segment,
}

/// Matches segments of two methods by top-plot label. Labels present on only
/// one side are dropped and reported.
pub fn align_pairs(
    story_id: &str,
    x_segments: &[Segment],
    y_segments: &[Segment],
) -> (Vec<SegmentPair>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for sx in x_segments {
        match y_segments.iter().find(|sy| sy.top_plot_label == sx.top_plot_label) {
            Some(sy) => pairs.push(SegmentPair {
                pair_id: format!("{story_id}:{}", sx.top_plot_label),
                top_plot_label: sx.top_plot_label.clone(),
                x: sx.clone(),
                y: sy.clone(),
            }),
            None => dropped.push(sx.top_plot_label.clone()),
        }
    }
    for sy in y_segments {
        if !x_segments.iter().any(|sx| sx.top_plot_label == sy.top_plot_label) {
            dropped.push(sy.top_plot_label.clone());
        }
    }
    (pairs, dropped)
}

// ---------------------------------------------------------------------------
// Judging

/// Story-level context both methods share, shown to the judge once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedContext {
    pub storyline: String,
    pub characters_block: String,
    pub story_summary: String,
}

impl SharedContext {
    /// The summary shown to the judge is the outline's top-plot texts.
    pub fn new(
        storyline: impl Into<String>,
        characters_block: impl Into<String>,
        outline: &Outline,
    ) -> SharedContext {
        let story_summary = outline
            .top_plots()
            .iter()
            .map(|t| format!("{}: {}", t.label, t.plot_text))
            .collect::<Vec<_>>()
            .join("\n");
        SharedContext {
            storyline: storyline.into(),
            characters_block: characters_block.into(),
            story_summary,
        }
    }
}

/// One judged (pair, dimension) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairResult {
    pub pair_id: String,
    pub dimension: Dimension,
    pub presented_order: PresentedOrder,
    pub verdict_raw: Verdict,
    pub verdict_canonical: CanonicalVerdict,
    pub explanation: String,
    pub judge_model: String,
}

pub struct Judge<'g> {
    gateway: &'g Gateway,
    params: GenParams,
    seed: u64,
}

impl<'g> Judge<'g> {
    pub fn new(gateway: &'g Gateway, params: GenParams, seed: u64) -> Judge<'g> {
        Judge {
            gateway,
            params,
            seed,
        }
    }

    /// Judges one pair on one dimension. A verdict that stays malformed after
    /// one retry excludes the pair: it is logged as a judge failure and
    /// `Ok(None)` is returned.
    pub fn judge_pair(
        &self,
        pair: &SegmentPair,
        dimension: Dimension,
        shared: &SharedContext,
    ) -> Result<Option<PairResult>> {
        let order = presented_order(self.seed, &pair.pair_id, dimension);
        let (first, second) = match order {
            PresentedOrder::XY => (&pair.x.text, &pair.y.text),
            PresentedOrder::YX => (&pair.y.text, &pair.x.text),
        };
        let request = ChatRequest::user(
            self.params.clone(),
            prompts::judge_system(
                &shared.storyline,
                &shared.characters_block,
                &shared.story_summary,
                dimension.focus_text(),
            ),
            prompts::judge_user(first, second),
        );
        let outcome = self.gateway.complete_extract(
            &request,
            &verdict_schema(),
            1,
            Stage::Eval,
            &pair.pair_id,
            |doc| {
                let body = doc.root("verdict").map(|n| n.text.as_str()).unwrap_or("");
                let verdict = Verdict::parse(body)?;
                let explanation = doc
                    .root("explanation")
                    .map(|n| n.text.clone())
                    .unwrap_or_default();
                Ok((verdict, explanation))
            },
        );
        match outcome {
            Ok((verdict_raw, explanation)) => Ok(Some(PairResult {
                pair_id: pair.pair_id.clone(),
                dimension,
                presented_order: order,
                verdict_raw,
                verdict_canonical: canonical_verdict(order, verdict_raw),
                explanation,
                judge_model: self.params.model_id.clone(),
            })),
            Err(Error::StructuredOutputFailure { last, .. }) => {
                self.gateway.failures().record_stage_failure(StageFailureRecord {
                    stage: Stage::Eval,
                    story_id: pair.pair_id.clone(),
                    error_kind: last.kind().to_string(),
                });
                log::warn!(
                    "excluding pair {} on {} after retry: {last}",
                    pair.pair_id,
                    dimension
                );
                Ok(None)
            }
            Err(other) => Err(other),
        }
    }
}

// ---------------------------------------------------------------------------
// Aggregation

/// One dimension's aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateRow {
    pub dimension: Dimension,
    pub n_pairs: usize,
    pub x_wins: usize,
    pub y_wins: usize,
    pub ties: usize,
    pub x_win_pct: f64,
    pub y_win_pct: f64,
    pub tie_pct: f64,
    pub p_value: f64,
    /// True when every pair tied, leaving the sign test nothing to work with.
    pub zero_information: bool,
}

/// 100*count/n to one decimal place.
pub fn round_pct(count: usize, n: usize) -> f64 {
    (100.0 * count as f64 / n as f64 * 10.0).round() / 10.0
}

/// Two-sided exact binomial sign test against p=0.5, ties already excluded.
/// Exact for any n that fits f64 without underflow (comfortably past 500).
pub fn sign_test_p(x_wins: usize, y_wins: usize) -> f64 {
    let n = x_wins + y_wins;
    if n == 0 {
        return 1.0;
    }
    let k = x_wins.min(y_wins);
    let mut pmf = 0.5_f64.powi(n as i32);
    let mut tail = pmf;
    for i in 0..k {
        pmf *= (n - i) as f64 / (i + 1) as f64;
        tail += pmf;
    }
    (2.0 * tail).min(1.0)
}

pub fn aggregate(results: &[PairResult], dimension: Dimension) -> Result<WinRateRow> {
    let (mut x_wins, mut y_wins, mut ties) = (0usize, 0usize, 0usize);
    for result in results.iter().filter(|r| r.dimension == dimension) {
        match result.verdict_canonical {
            CanonicalVerdict::MethodX => x_wins += 1,
            CanonicalVerdict::MethodY => y_wins += 1,
            CanonicalVerdict::Tie => ties += 1,
        }
    }
    let n_pairs = x_wins + y_wins + ties;
    if n_pairs == 0 {
        return Err(Error::EmptyResults);
    }
    let zero_information = x_wins + y_wins == 0;
    Ok(WinRateRow {
        dimension,
        n_pairs,
        x_wins,
        y_wins,
        ties,
        x_win_pct: round_pct(x_wins, n_pairs),
        y_win_pct: round_pct(y_wins, n_pairs),
        tie_pct: round_pct(ties, n_pairs),
        p_value: if zero_information {
            1.0
        } else {
            sign_test_p(x_wins, y_wins)
        },
        zero_information,
    })
}

/// The full four-dimension comparison between two methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateTable {
    pub x_method: String,
    pub y_method: String,
    pub rows: Vec<WinRateRow>,
}

pub fn win_rate_table(
    x_method: impl Into<String>,
    y_method: impl Into<String>,
    results: &[PairResult],
) -> Result<WinRateTable> {
    let rows = Dimension::ALL
        .iter()
        .map(|d| aggregate(results, *d))
        .collect::<Result<Vec<_>>>()?;
    Ok(WinRateTable {
        x_method: x_method.into(),
        y_method: y_method.into(),
        rows,
    })
}

impl WinRateTable {
    /// Plain-text report, one dimension per row.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "Pairwise win rates: {} (X) vs {} (Y)\n\
             Two-sided exact binomial sign test on wins, ties excluded; * marks p < 0.05.\n\n\
             {:<16} {:>6} {:>8} {:>8} {:>8}  {}\n",
            self.x_method, self.y_method, "dimension", "n", "X %", "Y %", "tie %", "p-value"
        );
        for row in &self.rows {
            let significance = if !row.zero_information && row.p_value < 0.05 {
                " *"
            } else {
                ""
            };
            let p = if row.zero_information {
                "ties only".to_string()
            } else {
                format!("{:.3e}", row.p_value)
            };
            out.push_str(&format!(
                "{:<16} {:>6} {:>8.1} {:>8.1} {:>8.1}  {}{}\n",
                row.dimension.label(),
                row.n_pairs,
                row.x_win_pct,
                row.y_win_pct,
                row.tie_pct,
                p,
                significance
            ));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "dimension,n_pairs,x_wins,y_wins,ties,x_win_pct,y_win_pct,tie_pct,p_value,zero_information\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.1},{:.1},{:.1},{:e},{}\n",
                row.dimension.label(),
                row.n_pairs,
                row.x_wins,
                row.y_wins,
                row.ties,
                row.x_win_pct,
                row.y_win_pct,
                row.tie_pct,
                row.p_value,
                row.zero_information
            ));
        }
        out
    }
}

fn tenths(pct: f64) -> i64 {
    (pct * 10.0).round() as i64
}

/// Every count triple over n whose one-decimal percentages match the row.
/// Recovers integer counts from published percentages.
pub fn reconstruct_counts(
    n: usize,
    x_pct: f64,
    y_pct: f64,
    tie_pct: f64,
) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for x in 0..=n {
        if tenths(round_pct(x, n)) != tenths(x_pct) {
            continue;
        }
        for y in 0..=(n - x) {
            let t = n - x - y;
            if tenths(round_pct(y, n)) == tenths(y_pct) && tenths(round_pct(t, n)) == tenths(tie_pct)
            {
                out.push((x, y, t));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Length statistics and failure rates

/// One rendered screenplay's worth of length data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthItem {
    pub method: String,
    pub genre: Genre,
    pub words: usize,
}

impl LengthItem {
    pub fn from_text(method: impl Into<String>, genre: Genre, text: &str) -> LengthItem {
        LengthItem {
            method: method.into(),
            genre,
            words: word_count(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthCell {
    pub method: String,
    pub genre: Genre,
    pub count: usize,
    pub avg_words: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LengthTable {
    pub cells: Vec<LengthCell>,
    /// Per-method overall mean over all its items.
    pub method_averages: Vec<(String, f64)>,
}

/// Average rendered word counts per method and genre, methods alphabetical,
/// genres in declaration order.
pub fn length_stats(items: &[LengthItem]) -> LengthTable {
    let mut groups: BTreeMap<(String, Genre), Vec<usize>> = BTreeMap::new();
    let mut by_method: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for item in items {
        groups
            .entry((item.method.clone(), item.genre))
            .or_default()
            .push(item.words);
        by_method.entry(item.method.clone()).or_default().push(item.words);
    }
    let avg = |words: &[usize]| words.iter().sum::<usize>() as f64 / words.len() as f64;
    LengthTable {
        cells: groups
            .into_iter()
            .map(|((method, genre), words)| LengthCell {
                method,
                genre,
                count: words.len(),
                avg_words: avg(&words),
            })
            .collect(),
        method_averages: by_method
            .into_iter()
            .map(|(method, words)| (method, avg(&words)))
            .collect(),
    }
}

impl LengthTable {
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<20} {:<16} {:>6} {:>10}\n", "method", "genre", "n", "avg words");
        for cell in &self.cells {
            out.push_str(&format!(
                "{:<20} {:<16} {:>6} {:>10.1}\n",
                cell.method,
                cell.genre,
                cell.count,
                cell.avg_words
            ));
        }
        for (method, avg) in &self.method_averages {
            out.push_str(&format!("{:<20} {:<16} {:>6} {:>10.1}\n", method, "(all)", "", avg));
        }
        out
    }
}

/// One stage's failure rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRate {
    pub stage: Stage,
    pub failures: usize,
    pub attempts: usize,
    pub pct: f64,
}

/// Percentage of attempted stories each stage gave up on, one decimal.
pub fn failure_rates(
    stage_failures: &[StageFailureRecord],
    attempted: &[(Stage, usize)],
) -> Vec<FailureRate> {
    attempted
        .iter()
        .map(|(stage, attempts)| {
            let failures = stage_failures.iter().filter(|r| r.stage == *stage).count();
            FailureRate {
                stage: *stage,
                failures,
                attempts: *attempts,
                pct: if *attempts == 0 {
                    0.0
                } else {
                    round_pct(failures, *attempts)
                },
            }
        })
        .collect()
}

pub fn render_failure_rates(rates: &[FailureRate]) -> String {
    let mut out = format!("{:<10} {:>9} {:>9} {:>7}\n", "stage", "failures", "attempts", "rate");
    for rate in rates {
        out.push_str(&format!(
            "{:<10} {:>9} {:>9} {:>6.1}%\n",
            rate.stage.table_name(),
            rate.failures,
            rate.attempts,
            rate.pct
        ));
    }
    out
}
