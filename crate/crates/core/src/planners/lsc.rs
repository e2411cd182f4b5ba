use crate::error::Result;
use crate::grid_map::{GridMap, Path};
use crate::scalar::Scalar;

/// Drops interior states whose neighbours see each other, sweeping until nothing changes.
///
/// Endpoints are kept, the result never costs more than the input, and every segment
/// of the result is collision free when the input's were.
pub fn lsc_shorten<T: Scalar>(path: &Path<T>, map: &GridMap) -> Result<Path<T>> {
    let mut states = path.states().to_vec();
    loop {
        let mut changed = false;
        let mut i = 1;
        while i + 1 < states.len() {
            if map.free_edge(&states[i - 1], &states[i + 1])? {
                states.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            return Path::from_states_dedup(states);
        }
    }
}
