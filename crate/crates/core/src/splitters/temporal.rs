use super::{ResamplingPlan, Scheme, Split};
use crate::error::{Error, Result};

/// Number of seasons S, requiring every season 1..=S to be populated.
fn season_count(season: &[u32]) -> Result<u32> {
    let s_max = *season.iter().max().ok_or_else(|| Error::split("no season indices"))?;
    if season.contains(&0) {
        return Err(Error::split("season indices start at 1"));
    }
    let mut present = vec![false; s_max as usize + 1];
    for &s in season {
        present[s as usize] = true;
    }
    if let Some(empty) = (1..=s_max as usize).find(|&s| !present[s]) {
        return Err(Error::split(format!("season {empty} has no observations")));
    }
    Ok(s_max)
}

fn rows_where(season: &[u32], f: impl Fn(u32) -> bool) -> Vec<usize> {
    season.iter().enumerate().filter(|(_, &s)| f(s)).map(|(i, _)| i).collect()
}

/// Season-level prequential validation: split j trains on seasons 1..=j and
/// tests on season j + 1 + gap, for j = 1..=S-1-gap.
///
/// Eight seasons with gap 0 give seven evaluations.
pub fn timeseries_cv(season: &[u32], gap: u32) -> Result<ResamplingPlan> {
    let s = season_count(season)?;
    if s < 2 + gap {
        return Err(Error::split(format!("{s} seasons are too few for gap {gap}")));
    }
    let splits = (1..=s - 1 - gap)
        .map(|j| Split {
            train: rows_where(season, |x| x <= j),
            test: rows_where(season, |x| x == j + 1 + gap),
            repeat: 0,
        })
        .collect();
    ResamplingPlan::new(Scheme::TimeseriesCv { gap, seasons: None }, 0, season.len(), splits)
}

/// One chronological split: the last `test_seasons` seasons are tested; the
/// `gap` seasons before them are dropped; everything earlier trains.
pub fn out_of_sample(season: &[u32], test_seasons: u32, gap: u32) -> Result<ResamplingPlan> {
    let s = season_count(season)?;
    if test_seasons == 0 {
        return Err(Error::split("need at least one test season"));
    }
    if s < test_seasons + gap + 1 {
        return Err(Error::split(format!(
            "no training seasons remain: {s} seasons, {test_seasons} test, gap {gap}"
        )));
    }
    let first_test = s - test_seasons + 1;
    let last_train = first_test - 1 - gap;
    let split = Split {
        train: rows_where(season, |x| x <= last_train),
        test: rows_where(season, |x| x >= first_test),
        repeat: 0,
    };
    ResamplingPlan::new(Scheme::OutOfSample { test_seasons, gap, seasons: None }, 0, season.len(), vec![split])
}
