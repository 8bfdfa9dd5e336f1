use serde::{Deserialize, Serialize};

use super::BackendError;
use crate::strategy::{Strategy, StrategySpace};

/// Restart regime of the embedded solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestartMode {
    /// Luby sequence with a unit of 64 conflicts.
    Luby,
    /// Epochs of 1000 conflicts alternating Luby restarts and no restarts,
    /// starting with Luby.
    Alternating,
    Never,
}

pub const LUBY_UNIT: u64 = 64;
pub const MODE_EPOCH: u64 = 1000;

/// Knobs of the embedded CDCL solver, decoded from a [`Strategy`].
///
/// Token conventions follow the kissat options of the same name:
/// `bump=0` freezes variable scores, `tumble=0` keeps file order as the
/// initial branching order, `phase` is the initial decision polarity,
/// `forcephase=1` disables phase saving and `stable` picks the restart
/// regime (`0` Luby, `1` alternating, `2` none).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniSolverParams {
    pub bump: bool,
    pub tumble: bool,
    pub phase: bool,
    pub forcephase: bool,
    pub restarts: RestartMode,
}

impl Default for MiniSolverParams {
    fn default() -> Self {
        MiniSolverParams {
            bump: true,
            tumble: true,
            phase: true,
            forcephase: false,
            restarts: RestartMode::Alternating,
        }
    }
}

fn flag(name: &str, value: &str) -> Result<bool, BackendError> {
    match value {
        "1" | "on" | "true" => Ok(true),
        "0" | "off" | "false" => Ok(false),
        _ => Err(BackendError::Decode(format!("{name}={value}"))),
    }
}

impl MiniSolverParams {
    /// Parameters absent from the space keep their defaults; parameters the
    /// solver does not know are rejected.
    pub fn decode(space: &StrategySpace, strategy: &Strategy) -> Result<Self, BackendError> {
        if !space.contains(strategy) {
            return Err(BackendError::Decode("strategy not in space".into()));
        }
        let mut params = MiniSolverParams::default();
        for (name, value) in space.assignment(strategy) {
            match name {
                "bump" => params.bump = flag(name, value)?,
                "tumble" => params.tumble = flag(name, value)?,
                "phase" => params.phase = flag(name, value)?,
                "forcephase" => params.forcephase = flag(name, value)?,
                "stable" => {
                    params.restarts = match value {
                        "0" => RestartMode::Luby,
                        "1" => RestartMode::Alternating,
                        "2" => RestartMode::Never,
                        _ => return Err(BackendError::Decode(format!("stable={value}"))),
                    }
                }
                _ => return Err(BackendError::Decode(format!("unknown parameter {name:?}"))),
            }
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{presets, ParamDef};

    #[test]
    fn default_strategy_decodes_to_defaults() {
        let space = presets::mini_cdcl();
        let p = MiniSolverParams::decode(&space, &space.default_strategy()).unwrap();
        assert_eq!(p, MiniSolverParams::default());
    }

    #[test]
    fn decodes_alternatives() {
        let space = presets::mini_cdcl();
        let s = space.parse("bump=0,tumble=0,stable=2,forcephase=1,phase=0").unwrap();
        let p = MiniSolverParams::decode(&space, &s).unwrap();
        assert!(!p.bump && !p.tumble && !p.phase && p.forcephase);
        assert_eq!(p.restarts, RestartMode::Never);
    }

    #[test]
    fn unknown_parameter_is_a_decode_error() {
        let space = presets::kissat();
        let err = MiniSolverParams::decode(&space, &space.default_strategy()).unwrap_err();
        assert!(matches!(err, BackendError::Decode(_)));
        let odd = StrategySpace::new(vec![ParamDef::new("bump", "1", ["maybe"]).unwrap()], None)
            .unwrap();
        let s = odd.parse("bump=maybe").unwrap();
        assert!(MiniSolverParams::decode(&odd, &s).is_err());
    }
}
