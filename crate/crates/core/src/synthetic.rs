//! Random poses for tests, benchmarks and smoke runs.

use rand::Rng;

use crate::geometry::{RawPose, Vec3};
use crate::skeleton::{JointId, NUM_JOINTS, PAIR_CATALOG};

/// Joints drawn uniformly from the unit cube.
pub fn uniform_pose<R: Rng + ?Sized>(rng: &mut R) -> RawPose {
    let mut joints = [[0.0; 3]; NUM_JOINTS];
    for p in joints.iter_mut() {
        *p = [rng.gen(), rng.gen(), rng.gen()];
    }
    RawPose::new(joints)
}

/// Minimum per-axis gap between the two joints of every catalog pair in
/// [`separated_pose`], before normalization (which can only enlarge it).
pub const PAIR_SEPARATION: f64 = 0.17;

/// A pose in the unit cube where every catalog pair differs by at least
/// [`PAIR_SEPARATION`] on every axis, so no relative position is aligned.
///
/// Joints are placed one at a time (the heavily paired thumb tip first) by
/// rejection sampling each coordinate; a dead end restarts the pose.
pub fn separated_pose<R: Rng + ?Sized>(rng: &mut R) -> RawPose {
    let mut order: Vec<JointId> = JointId::all().collect();
    order.sort_by_key(|&j| std::cmp::Reverse(PAIR_CATALOG.iter().filter(|(a, b)| *a == j || *b == j).count()));
    'restart: loop {
        let mut placed: [Option<Vec3>; NUM_JOINTS] = [None; NUM_JOINTS];
        for &j in &order {
            let neighbours: Vec<Vec3> = PAIR_CATALOG
                .iter()
                .filter_map(|&(a, b)| match (a == j, b == j) {
                    (true, _) => placed[b.index()],
                    (_, true) => placed[a.index()],
                    _ => None,
                })
                .collect();
            let mut p = [0.0; 3];
            for (axis, coord) in p.iter_mut().enumerate() {
                let mut found = None;
                for _ in 0..64 {
                    let v: f64 = rng.gen();
                    if neighbours.iter().all(|n| (n[axis] - v).abs() >= PAIR_SEPARATION) {
                        found = Some(v);
                        break;
                    }
                }
                match found {
                    Some(v) => *coord = v,
                    None => continue 'restart,
                }
            }
            placed[j.index()] = Some(p);
        }
        return RawPose::new(placed.map(|p| p.expect("every joint placed")));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize_pose;
    use crate::geometry::{relative_offset, Axis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separated_pairs_survive_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let pose = normalize_pose(&separated_pose(&mut rng)).unwrap();
            for &(a, b) in &PAIR_CATALOG {
                for axis in Axis::ALL {
                    assert!(relative_offset(&pose, a, b, axis).abs() >= PAIR_SEPARATION);
                }
            }
        }
    }
}
