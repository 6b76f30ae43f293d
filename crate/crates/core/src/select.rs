//! Order identification: differencing choice, grid search and the
//! parsimony-aware selection rule.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{check_roots, fit_mle, EngineError, FitOptions, FittedModel, ModelOrder, RootReport};
use crate::scalar::Scalar;
use crate::series::{apply_transform, SeriesError, TimeSeries, TransformSpec};
use crate::stats::sample_acf;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("search grid is empty")]
    EmptyGrid,
    #[error("series of length {len} is too short for differencing that consumes {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("no candidate fit converged")]
    AllCandidatesFailed,
    #[error("no converged candidate passed the root check")]
    NoAdmissibleCandidate,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    pub max_p: usize,
    pub max_q: usize,
    pub max_seasonal_p: usize,
    pub max_seasonal_q: usize,
    pub d_choices: Vec<usize>,
    pub seasonal_d_choices: Vec<usize>,
    pub period: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_q: 3,
            max_seasonal_p: 2,
            max_seasonal_q: 2,
            d_choices: vec![0, 1],
            seasonal_d_choices: vec![0, 1],
            period: 12,
        }
    }
}

impl SearchBounds {
    /// Every `(p, q, P, Q)` in the bounds at the given differencing, in
    /// lexicographic order.
    pub fn candidates(&self, d: usize, seasonal_d: usize) -> Vec<ModelOrder> {
        let mut out = Vec::new();
        for p in 0..=self.max_p {
            for q in 0..=self.max_q {
                for sp in 0..=self.max_seasonal_p {
                    for sq in 0..=self.max_seasonal_q {
                        out.push(ModelOrder::new((p, d, q), (sp, seasonal_d, sq), self.period));
                    }
                }
            }
        }
        out
    }

    fn deepest_loss(&self) -> usize {
        let d = self.d_choices.iter().copied().max().unwrap_or(0);
        let sd = self.seasonal_d_choices.iter().copied().max().unwrap_or(0);
        d + sd * self.period
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferencingCandidate<T> {
    pub d: usize,
    pub seasonal_d: usize,
    /// Centered variance without differencing, mean square otherwise.
    pub measure: T,
    pub lag1_acf: T,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferencingChoice<T> {
    pub d: usize,
    pub seasonal_d: usize,
    pub trail: Vec<DifferencingCandidate<T>>,
}

/// A further difference must shrink the measure below this fraction of the
/// current value to count as a reduction.
pub const VARIANCE_REDUCTION_RATIO: f64 = 0.75;
/// Lag-1 autocorrelation at or below this value signals over-differencing.
pub const OVERDIFFERENCING_ACF: f64 = -0.5;

fn spread<T: Scalar>(x: &[T], centered: bool) -> T {
    let n = T::of_usize(x.len());
    let mean = if centered {
        x.iter().copied().sum::<T>() / n
    } else {
        T::zero()
    };
    x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n
}

/// Picks `(d, D)` with the variance-reduction heuristic.
///
/// Candidates are visited seasonal order first. One passes when neither a
/// further ordinary nor a further seasonal difference (within the allowed
/// choices) reduces the measure below [`VARIANCE_REDUCTION_RATIO`] of its
/// current value, and its lag-1 autocorrelation exceeds
/// [`OVERDIFFERENCING_ACF`]. If none passes, the guard-passing candidate
/// with the smallest measure is used, else `(0, 0)`.
pub fn choose_differencing<T: Scalar>(
    series: &TimeSeries<T>,
    bounds: &SearchBounds,
) -> Result<DifferencingChoice<T>, SelectError> {
    let needed = bounds.deepest_loss() + 3;
    if series.len() < needed {
        return Err(SelectError::SeriesTooShort {
            len: series.len(),
            needed,
        });
    }
    let mut ds = bounds.d_choices.clone();
    ds.sort_unstable();
    ds.dedup();
    let mut sds = bounds.seasonal_d_choices.clone();
    sds.sort_unstable();
    sds.dedup();

    let measure = |d: usize, sd: usize| -> Result<(T, T), SelectError> {
        let spec = TransformSpec::new(false, d, sd, bounds.period);
        let diffed = apply_transform(series, spec)?;
        let x = diffed.core.values();
        let m = spread(x, d + sd == 0);
        let acf = sample_acf(x, 1)
            .map(|a| a.at(1))
            .unwrap_or_else(|_| T::zero());
        Ok((m, acf))
    };

    let ratio = T::of(VARIANCE_REDUCTION_RATIO);
    let guard = T::of(OVERDIFFERENCING_ACF);
    let mut trail = Vec::new();
    for &sd in &sds {
        for &d in &ds {
            let (m, acf) = measure(d, sd)?;
            let mut further = Vec::new();
            if ds.contains(&(d + 1)) {
                further.push((d + 1, sd));
            }
            if sds.contains(&(sd + 1)) {
                further.push((d, sd + 1));
            }
            let mut reduced = false;
            for (fd, fsd) in further {
                let (fm, _) = measure(fd, fsd)?;
                if fm < ratio * m {
                    reduced = true;
                }
            }
            let passes = !reduced && acf > guard;
            trail.push(DifferencingCandidate {
                d,
                seasonal_d: sd,
                measure: m,
                lag1_acf: acf,
                passes,
            });
            if passes {
                return Ok(DifferencingChoice {
                    d,
                    seasonal_d: sd,
                    trail,
                });
            }
        }
    }
    let fallback = trail
        .iter()
        .filter(|c| c.lag1_acf > guard)
        .min_by(|a, b| a.measure.partial_cmp(&b.measure).unwrap_or(Ordering::Equal))
        .map(|c| (c.d, c.seasonal_d))
        .unwrap_or((0, 0));
    Ok(DifferencingChoice {
        d: fallback.0,
        seasonal_d: fallback.1,
        trail,
    })
}

/// Outcome of fitting one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult<T> {
    /// Position in the enumeration order of the grid.
    pub index: usize,
    pub order: ModelOrder,
    pub model: Option<FittedModel<T>>,
    pub error: Option<String>,
    pub converged: bool,
    pub roots_ok: bool,
    pub significant: bool,
    pub roots: Option<RootReport<T>>,
}

impl<T: Scalar> CandidateResult<T> {
    pub fn aic(&self) -> Option<T> {
        self.model.as_ref().map(|m| m.aic)
    }

    pub fn admissible(&self) -> bool {
        self.model.is_some() && self.converged && self.roots_ok
    }

    fn n_params(&self) -> usize {
        self.model
            .as_ref()
            .map_or(self.order.n_coefficients() + 1, |m| m.n_params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionRule<T> {
    /// Two-sided level every coefficient must meet to count as significant.
    pub significance_level: T,
    /// Width of the AIC band treated as indistinguishable.
    pub aic_band: T,
}

impl<T: Scalar> Default for SelectionRule<T> {
    fn default() -> Self {
        Self {
            significance_level: T::of(0.10),
            aic_band: T::of(2.0),
        }
    }
}

/// All grid candidates: admissible ones first by ascending AIC, then the
/// rest in grid order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRanking<T> {
    pub candidates: Vec<CandidateResult<T>>,
    pub rule: SelectionRule<T>,
}

fn aic_order<T: Scalar>(a: &CandidateResult<T>, b: &CandidateResult<T>) -> Ordering {
    match (a.admissible(), b.admissible()) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a
            .aic()
            .partial_cmp(&b.aic())
            .unwrap_or(Ordering::Equal)
            .then(a.order.cmp(&b.order)),
        (false, false) => a.index.cmp(&b.index),
    }
}

impl<T: Scalar> CandidateRanking<T> {
    pub fn new(mut candidates: Vec<CandidateResult<T>>, rule: SelectionRule<T>) -> Self {
        candidates.sort_by(aic_order);
        Self { candidates, rule }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Position (0-based) of `order` among admissible candidates by AIC.
    pub fn aic_rank(&self, order: &ModelOrder) -> Option<usize> {
        self.candidates
            .iter()
            .filter(|c| c.admissible())
            .position(|c| &c.order == order)
    }
}

fn evaluate_candidate<T: Scalar>(
    index: usize,
    order: ModelOrder,
    train: &crate::series::DifferencedSeries<T>,
    opts: &FitOptions<T>,
    rule: &SelectionRule<T>,
) -> CandidateResult<T> {
    match fit_mle(train, &order, opts) {
        Ok(model) => {
            let roots = check_roots(&order, &model.coefficients).ok();
            let roots_ok = roots.as_ref().is_some_and(|r| r.passes());
            CandidateResult {
                index,
                order,
                converged: model.converged,
                significant: model.all_significant(rule.significance_level),
                roots_ok,
                roots,
                error: None,
                model: Some(model),
            }
        }
        Err(e) => CandidateResult {
            index,
            order,
            model: None,
            error: Some(e.to_string()),
            converged: false,
            roots_ok: false,
            significant: false,
            roots: None,
        },
    }
}

/// Fits every `(p, q, P, Q)` in `bounds` at the differencing in `transform`.
///
/// Fits run in parallel; the ranking does not depend on scheduling.
pub fn grid_search<T: Scalar>(
    train: &TimeSeries<T>,
    bounds: &SearchBounds,
    transform: TransformSpec,
    opts: &FitOptions<T>,
    rule: SelectionRule<T>,
) -> Result<CandidateRanking<T>, SelectError> {
    let grid = bounds.candidates(transform.d, transform.seasonal_d);
    if grid.is_empty() {
        return Err(SelectError::EmptyGrid);
    }
    let spec = TransformSpec {
        period: bounds.period,
        ..transform
    };
    let diffed = apply_transform(train, spec)?;
    let results: Vec<CandidateResult<T>> = grid
        .into_par_iter()
        .enumerate()
        .map(|(i, order)| evaluate_candidate(i, order, &diffed, opts, &rule))
        .collect();
    if !results.iter().any(|c| c.converged) {
        return Err(SelectError::AllCandidatesFailed);
    }
    Ok(CandidateRanking::new(results, rule))
}

/// The chosen model and how it was reached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection<T> {
    pub model: FittedModel<T>,
    pub min_aic_order: ModelOrder,
    /// Orders within the AIC band, in tie-break order.
    pub band: Vec<ModelOrder>,
    pub trail: Vec<String>,
}

fn parsimony_order<T: Scalar>(a: &CandidateResult<T>, b: &CandidateResult<T>) -> Ordering {
    a.n_params()
        .cmp(&b.n_params())
        .then(a.order.n_seasonal().cmp(&b.order.n_seasonal()))
        .then(a.aic().partial_cmp(&b.aic()).unwrap_or(Ordering::Equal))
        .then(a.order.cmp(&b.order))
}

/// Minimum AIC among admissible candidates, then parsimony within the band.
///
/// Within `aic_band` of the minimum, candidates are ordered by coefficient
/// count, seasonal coefficient count, AIC and finally the order tuple. If
/// the first has an insignificant coefficient, the first fully significant
/// candidate in the band replaces it.
pub fn select_best<T: Scalar>(ranking: &CandidateRanking<T>) -> Result<Selection<T>, SelectError> {
    let admissible: Vec<&CandidateResult<T>> =
        ranking.candidates.iter().filter(|c| c.admissible()).collect();
    let best = admissible
        .iter()
        .min_by(|a, b| {
            a.aic()
                .partial_cmp(&b.aic())
                .unwrap_or(Ordering::Equal)
                .then(a.order.cmp(&b.order))
        })
        .ok_or(SelectError::NoAdmissibleCandidate)?;
    let min_aic = best.aic().expect("admissible has a model");
    let limit = min_aic + ranking.rule.aic_band;
    let mut band: Vec<&CandidateResult<T>> = admissible
        .iter()
        .copied()
        .filter(|c| c.aic().is_some_and(|a| a <= limit))
        .collect();
    band.sort_by(|a, b| parsimony_order(a, b));

    let mut trail = vec![
        format!(
            "{} of {} candidates admissible (converged, roots outside the unit circle)",
            admissible.len(),
            ranking.len()
        ),
        format!("minimum AIC {:.4} at {}", min_aic, best.order),
        format!(
            "{} candidate(s) within {} AIC: {}",
            band.len(),
            ranking.rule.aic_band,
            band.iter()
                .map(|c| c.order.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ];
    let mut chosen = band[0];
    trail.push(format!(
        "parsimony pick {} ({} parameters, AIC {:.4})",
        chosen.order,
        chosen.n_params(),
        chosen.aic().expect("admissible")
    ));
    if !chosen.significant {
        if let Some(sig) = band.iter().find(|c| c.significant) {
            trail.push(format!(
                "{} has a coefficient with p >= {}; preferring significant {}",
                chosen.order, ranking.rule.significance_level, sig.order
            ));
            chosen = sig;
        } else {
            trail.push(format!(
                "no fully significant candidate in the band; keeping {}",
                chosen.order
            ));
        }
    }
    trail.push(format!("selected {}", chosen.order));
    Ok(Selection {
        model: chosen.model.clone().expect("admissible has a model"),
        min_aic_order: best.order,
        band: band.iter().map(|c| c.order).collect(),
        trail,
    })
}

/// Differencing choice, grid search and selection in one call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutoSelection<T> {
    pub differencing: DifferencingChoice<T>,
    pub transform: TransformSpec,
    pub ranking: CandidateRanking<T>,
    pub selection: Selection<T>,
}

/// Runs the identification steps on a training series. With `apply_log`
/// the differencing heuristic sees the log series.
pub fn auto_select<T: Scalar>(
    train: &TimeSeries<T>,
    bounds: &SearchBounds,
    apply_log: bool,
    opts: &FitOptions<T>,
    rule: SelectionRule<T>,
) -> Result<AutoSelection<T>, SelectError> {
    let inspected = if apply_log {
        crate::series::log_transform(train)?
    } else {
        train.clone()
    };
    let differencing = choose_differencing(&inspected, bounds)?;
    let transform = TransformSpec::new(apply_log, differencing.d, differencing.seasonal_d, bounds.period);
    let ranking = grid_search(train, bounds, transform, opts, rule)?;
    let selection = select_best(&ranking)?;
    Ok(AutoSelection {
        differencing,
        transform,
        ranking,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, CoefficientSet};
    use crate::series::MonthStamp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ts(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new(MonthStamp::new(2005, 1).unwrap(), values).unwrap()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    const PATTERN: [f64; 12] = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, -2.0, 6.0, -5.0, 3.0, 5.0, -8.0];

    #[test]
    fn seasonal_pattern_needs_seasonal_difference() {
        let e = noise(180, 1);
        let x: Vec<f64> = (0..180).map(|t| PATTERN[t % 12] + 0.5 * e[t]).collect();
        let c = choose_differencing(&ts(x), &SearchBounds::default()).unwrap();
        assert_eq!((c.d, c.seasonal_d), (0, 1));
    }

    #[test]
    fn white_noise_needs_none() {
        let c = choose_differencing(&ts(noise(180, 2)), &SearchBounds::default()).unwrap();
        assert_eq!((c.d, c.seasonal_d), (0, 0));
        assert_eq!(c.trail.len(), 1);
    }

    #[test]
    fn trend_season_and_level_drift_need_both() {
        // A random-walk level on top of trend and season survives the
        // seasonal difference as a persistent component.
        let e = noise(180, 3);
        let w = noise(180, 4);
        let mut level = 0.0;
        let x: Vec<f64> = (0..180)
            .map(|t| {
                level += 0.8 * w[t];
                0.5 * t as f64 + PATTERN[t % 12] + level + 0.3 * e[t]
            })
            .collect();
        let c = choose_differencing(&ts(x), &SearchBounds::default()).unwrap();
        assert_eq!((c.d, c.seasonal_d), (1, 1));
    }

    #[test]
    fn too_short_for_differencing() {
        assert!(matches!(
            choose_differencing(&ts(noise(10, 1)), &SearchBounds::default()),
            Err(SelectError::SeriesTooShort { .. })
        ));
    }

    fn fake(index: usize, order: ModelOrder, aic: f64, significant: bool) -> CandidateResult<f64> {
        let x = ts(noise(40, index as u64));
        let diffed = apply_transform(&x, TransformSpec::new(false, 0, 0, 12)).unwrap();
        let mut model = fit_mle(&diffed, &ModelOrder::arima(0, 0, 0), &FitOptions::default()).unwrap();
        model.order = order;
        model.n_params = order.n_coefficients() + 1;
        model.aic = aic;
        CandidateResult {
            index,
            order,
            model: Some(model),
            error: None,
            converged: true,
            roots_ok: true,
            significant,
            roots: None,
        }
    }

    fn pick(cands: Vec<CandidateResult<f64>>) -> ModelOrder {
        select_best(&CandidateRanking::new(cands, SelectionRule::default()))
            .unwrap()
            .model
            .order
    }

    #[test]
    fn parsimony_band() {
        let big = ModelOrder::new((2, 0, 1), (1, 0, 0), 12);
        let small = ModelOrder::arima(1, 0, 1);
        assert_eq!(pick(vec![fake(0, big, 100.0, true), fake(1, small, 101.5, true)]), small);
        assert_eq!(pick(vec![fake(0, big, 100.0, true), fake(1, small, 103.0, true)]), big);
        assert_eq!(pick(vec![fake(0, small, 103.0, false)]), small);
    }

    #[test]
    fn significance_overrides_parsimony_inside_band() {
        let a = ModelOrder::arima(1, 0, 0);
        let b = ModelOrder::arima(2, 0, 0);
        let c = ModelOrder::arima(3, 0, 0);
        let sel = select_best(&CandidateRanking::new(
            vec![fake(0, a, 100.5, false), fake(1, b, 100.0, true), fake(2, c, 99.5, true)],
            SelectionRule::default(),
        ))
        .unwrap();
        assert_eq!(sel.model.order, b);
        assert_eq!(sel.min_aic_order, c);
        assert!(sel.trail.iter().any(|l| l.contains("preferring significant")));
    }

    #[test]
    fn inadmissible_candidates_are_skipped() {
        let a = ModelOrder::arima(1, 0, 0);
        let b = ModelOrder::arima(2, 0, 0);
        let mut bad = fake(0, a, 50.0, true);
        bad.roots_ok = false;
        assert_eq!(pick(vec![bad.clone(), fake(1, b, 100.0, true)]), b);
        assert!(matches!(
            select_best(&CandidateRanking::new(vec![bad], SelectionRule::default())),
            Err(SelectError::NoAdmissibleCandidate)
        ));
    }

    #[test]
    fn grid_of_one() {
        let bounds = SearchBounds {
            max_p: 0,
            max_q: 0,
            max_seasonal_p: 0,
            max_seasonal_q: 0,
            ..SearchBounds::default()
        };
        let r = grid_search(
            &ts(noise(60, 5)),
            &bounds,
            TransformSpec::new(false, 0, 0, 12),
            &FitOptions::default(),
            SelectionRule::default(),
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(select_best(&r).unwrap().model.order, ModelOrder::arima(0, 0, 0));
    }

    fn small_bounds() -> SearchBounds {
        SearchBounds {
            max_p: 1,
            max_q: 1,
            max_seasonal_p: 1,
            max_seasonal_q: 1,
            ..SearchBounds::default()
        }
    }

    #[test]
    fn grid_lists_every_candidate_once_and_enlarging_helps_aic() {
        let order = ModelOrder::new((1, 0, 0), (1, 0, 0), 12);
        let truth = CoefficientSet::from_vector(&order, &[0.5, 0.3], 1.0).unwrap();
        let x = simulate(&order, &truth, 240, 6).unwrap();
        let spec = TransformSpec::new(false, 0, 0, 12);
        let run = |b: &SearchBounds| {
            grid_search(&x, b, spec, &FitOptions::default(), SelectionRule::default()).unwrap()
        };
        let narrow_bounds = SearchBounds {
            max_seasonal_p: 0,
            ..small_bounds()
        };
        let narrow = run(&narrow_bounds);
        let wide = run(&small_bounds());
        let mut seen: Vec<ModelOrder> = wide.candidates.iter().map(|c| c.order).collect();
        seen.sort();
        let mut expected = small_bounds().candidates(0, 0);
        expected.sort();
        assert_eq!(seen, expected);

        let min_aic = |r: &CandidateRanking<f64>| {
            r.candidates
                .iter()
                .filter(|c| c.admissible())
                .filter_map(|c| c.aic())
                .fold(f64::INFINITY, f64::min)
        };
        assert!(min_aic(&wide) <= min_aic(&narrow));
        let chosen = select_best(&wide).unwrap().model;
        assert!(chosen.converged);
        assert!(chosen.aic <= min_aic(&narrow) + 2.0);
        assert!(wide.aic_rank(&order).unwrap() < 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn selection_ignores_input_order(
            aics in prop::collection::vec(90.0f64..110.0, 2..7),
            sig in prop::collection::vec(any::<bool>(), 7),
            seed in any::<u64>(),
        ) {
            let orders: Vec<ModelOrder> = (0..aics.len())
                .map(|i| ModelOrder::new((i % 3, 0, i / 3), (i % 2, 0, 0), 12))
                .collect();
            let cands: Vec<CandidateResult<f64>> = aics
                .iter()
                .enumerate()
                .map(|(i, &a)| fake(i, orders[i], a, sig[i]))
                .collect();
            let mut shuffled = cands.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled.swap(i, j);
            }
            prop_assert_eq!(pick(cands), pick(shuffled));
        }
    }
}
