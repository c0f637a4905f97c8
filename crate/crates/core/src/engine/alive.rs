use std::collections::BTreeMap;

use super::trace::GrowthTrace;
use crate::error::AliveError;
use crate::instance::NodeId;
use crate::scalar::Cost;

/// Alive (`true`) or dead (`false`) for every terminal.
pub type AliveState = BTreeMap<NodeId, bool>;

/// Replays the kill events of a trace.
///
/// Entry `l` is the state at the start of iteration `l`; the final entry is
/// the state after the growth phase. Every active moat must hold exactly one
/// alive terminal, and no terminal may stay alive once no moat is left.
pub fn alive_report<C: Cost>(trace: &GrowthTrace<C>) -> Result<Vec<AliveState>, AliveError> {
    let mut state: AliveState = trace.terminal_set().into_iter().map(|t| (t, true)).collect();
    let mut states = Vec::with_capacity(trace.iterations.len() + 1);
    for it in &trace.iterations {
        let alive_count = state.values().filter(|&&a| a).count();
        if alive_count != it.moats.len() {
            return Err(AliveError::InvariantBreach {
                iteration: it.index,
                detail: format!("{alive_count} alive terminals but {} active moats", it.moats.len()),
            });
        }
        for moat in &it.moats {
            let inside = moat.vertices().iter().filter(|v| state.get(v) == Some(&true)).count();
            if inside != 1 {
                return Err(AliveError::InvariantBreach {
                    iteration: it.index,
                    detail: format!("moat {moat} holds {inside} alive terminals"),
                });
            }
        }
        states.push(state.clone());
        for t in &it.kills {
            match state.get_mut(t) {
                Some(flag @ true) => *flag = false,
                _ => {
                    return Err(AliveError::InvariantBreach {
                        iteration: it.index,
                        detail: format!("terminal {t} killed while not alive"),
                    })
                }
            }
        }
    }
    if let Some(t) = state.iter().find_map(|(t, &a)| a.then_some(*t)) {
        return Err(AliveError::InvariantBreach {
            iteration: trace.iterations.len(),
            detail: format!("terminal {t} still alive after growth ended"),
        });
    }
    states.push(state);
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::solve;
    use crate::instance::{Arc, FamilyTag, Instance};
    use crate::Rational;

    #[test]
    fn single_terminal_stays_alive_until_end() {
        let inst = Instance::new(
            2,
            1,
            [2],
            vec![Arc::new(1, 2, Rational::from_integer(5.into()))],
            FamilyTag::Unknown,
        );
        let (_, trace) = solve(&inst).unwrap();
        let states = alive_report(&trace).unwrap();
        assert_eq!(states.len(), 2);
        assert!(states[0][&2]);
        assert!(!states[1][&2]);
    }

    #[test]
    fn tampered_kills_are_reported() {
        let inst = Instance::new(
            3,
            1,
            [2, 3],
            vec![
                Arc::new(1, 2, Rational::from_integer(1.into())),
                Arc::new(1, 3, Rational::from_integer(2.into())),
            ],
            FamilyTag::Unknown,
        );
        let (_, mut trace) = solve(&inst).unwrap();
        assert!(alive_report(&trace).is_ok());
        trace.iterations[0].kills.clear();
        let err = alive_report(&trace).unwrap_err();
        assert!(matches!(err, AliveError::InvariantBreach { iteration: 1, .. }), "{err}");
    }
}
