//! End-to-end scheduling: pluto-ilp, pluto-lp, or the permutation search
//! followed by scaling, shifting and skewing (pluto-lp-dfp).

use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fcg::{permute_and_fuse, Permutation};
use crate::model::{annotate, permutable_bands, satisfaction_levels, AffineTransform, Ddg, Program};
use crate::pluto::{finish_with_cuts, schedule, CutState, HyperplaneRecord, Mode, SchedulerConfig};
use crate::postpass::{introduce_skew, scale_and_shift, Skewed};
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ilp,
    Lp,
    Dfp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ilp, Algorithm::Lp, Algorithm::Dfp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ilp => "ilp",
            Algorithm::Lp => "lp",
            Algorithm::Dfp => "dfp",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ilp" => Ok(Algorithm::Ilp),
            "lp" => Ok(Algorithm::Lp),
            "dfp" => Ok(Algorithm::Dfp),
            other => Err(format!("unknown algorithm `{other}` (expected ilp, lp or dfp)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleResult {
    pub algorithm: Algorithm,
    pub transform: AffineTransform,
    /// Dependences marked with their satisfaction level in `transform`.
    pub ddg: Ddg,
    /// Hyperplanes found by the scheduler core (ilp and lp only).
    pub trace: Vec<HyperplaneRecord>,
    pub permutation: Option<Permutation>,
    /// The scaled and shifted transform before skewing (dfp only).
    pub unskewed: Option<AffineTransform>,
    pub skew: Option<Skewed>,
    pub solves: usize,
    pub elapsed: Duration,
}

pub fn run(program: &Program, ddg: &Ddg, algorithm: Algorithm) -> Result<ScheduleResult> {
    let session = Session::new(program);
    run_in(&session, ddg, algorithm)
}

/// Schedules within an existing session so its LP log can be inspected.
pub fn run_in(session: &Session, ddg: &Ddg, algorithm: Algorithm) -> Result<ScheduleResult> {
    let start = Instant::now();
    let before = session.solves();
    let program = session.program;
    let mut result = match algorithm {
        Algorithm::Ilp | Algorithm::Lp => {
            let mode = if algorithm == Algorithm::Ilp { Mode::Ilp } else { Mode::Lp };
            let s = schedule(session, ddg, &SchedulerConfig::new(mode))?;
            ScheduleResult {
                algorithm,
                transform: s.transform,
                ddg: s.ddg,
                trace: s.trace,
                permutation: None,
                unskewed: None,
                skew: None,
                solves: 0,
                elapsed: Duration::ZERO,
            }
        }
        Algorithm::Dfp => {
            let perm = permute_and_fuse(session, ddg)?;
            let scaled = scale_and_shift(session, ddg, &perm)?;
            let skewed = introduce_skew(session, ddg, &scaled)?;
            let mut transform = skewed.transform.clone();
            transform.bands = permutable_bands(program, ddg, &transform);
            let mut remaining = mark_satisfied(program, ddg, &transform);
            let mut state = CutState { open_scalar: false };
            finish_with_cuts(program, &mut remaining, &mut transform, &mut state)?;
            annotate(program, ddg, &mut transform);
            ScheduleResult {
                algorithm,
                transform,
                ddg: ddg.clone(),
                trace: Vec::new(),
                permutation: Some(perm),
                unskewed: Some(scaled),
                skew: Some(skewed),
                solves: 0,
                elapsed: Duration::ZERO,
            }
        }
    };
    result.ddg = mark_satisfied(program, ddg, &result.transform);
    if let Some(e) = result
        .ddg
        .deps
        .iter()
        .position(|d| d.kind.constrains_order() && !d.is_satisfied())
    {
        return Err(Error::internal(format!(
            "dependence {} is not satisfied by the final transform",
            result.ddg.deps[e]
        )));
    }
    result.solves = session.solves() - before;
    result.elapsed = start.elapsed();
    Ok(result)
}

/// Copy of `ddg` with every dependence marked at its satisfaction level.
pub fn mark_satisfied(program: &Program, ddg: &Ddg, transform: &AffineTransform) -> Ddg {
    let mut out = ddg.clone();
    for (d, s) in out.deps.iter_mut().zip(satisfaction_levels(program, ddg, transform)) {
        d.satisfied_at = s;
    }
    out
}
