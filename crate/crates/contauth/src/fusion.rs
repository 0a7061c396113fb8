//! Dataset fusion and per-user train/test split construction.
//!
//! Fusion joins each pseudo-user's i-th stroke with the i-th
//! stride-decimated motion snapshot of its paired sensor-dataset user
//! (stride = floor(snapshot_count / stroke_count)). Splits give every
//! target user 80 genuine + 80 impostor training samples and 20 genuine +
//! 50 impostor test samples, with train/test index pools kept disjoint.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fnv1a64;
use crate::ingest::{MotionRecord, StrokeRecord};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("user `{user}` has no pairing entry")]
    UnpairedUser { user: String },
    #[error("pairing names motion user `{user}` but no motion data exists for them")]
    MissingMotionUser { user: String },
    #[error("motion user `{user}` has {available} snapshots, needs at least {needed}")]
    InsufficientMotion {
        user: String,
        needed: usize,
        available: usize,
    },
    #[error("user `{user}` has {found} samples, split needs at least 100")]
    TooFewGenuine { user: String, found: usize },
    #[error("only {found} non-target users available, split needs at least 50")]
    TooFewImpostorUsers { found: usize },
    #[error("impostor user `{user}` ran out of unused samples")]
    ImpostorPoolExhausted { user: String },
    #[error("target user `{user}` not present in dataset")]
    UnknownTarget { user: String },
}

/// One labeled observation: 15 touch features followed by 9 motion
/// features, in canonical column order.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSample {
    user_id: String,
    features: [f64; 24],
}

impl FusedSample {
    pub fn new(user_id: String, features: [f64; 24]) -> Self {
        Self { user_id, features }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn features(&self) -> &[f64; 24] {
        &self.features
    }

    pub fn touch(&self) -> &[f64] {
        &self.features[..15]
    }

    pub fn motion(&self) -> &[f64] {
        &self.features[15..]
    }

    pub(crate) fn set_user_id(&mut self, user_id: String) {
        self.user_id = user_id;
    }
}

/// An ordered collection of fused samples plus the distinct user roster
/// (sorted lexicographically).
#[derive(Debug, Clone, PartialEq)]
pub struct FusedDataset {
    samples: Vec<FusedSample>,
    roster: Vec<String>,
}

impl FusedDataset {
    pub fn from_samples(samples: Vec<FusedSample>) -> Self {
        let mut roster: Vec<String> = samples.iter().map(|s| s.user_id.clone()).collect();
        roster.sort();
        roster.dedup();
        Self { samples, roster }
    }

    pub fn samples(&self) -> &[FusedSample] {
        &self.samples
    }

    pub fn roster(&self) -> &[String] {
        &self.roster
    }

    /// Indices of all samples belonging to `user`, in dataset order.
    pub fn user_indices(&self, user: &str) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.user_id == user)
            .map(|(i, _)| i)
            .collect()
    }

    /// SHA-256 of the canonical CSV rendering; ties reports to exact
    /// inputs.
    pub fn content_hash(&self) -> String {
        let text = crate::ingest::write_canonical(self);
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            use std::fmt::Write as _;
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }

    pub(crate) fn samples_mut(&mut self) -> &mut Vec<FusedSample> {
        &mut self.samples
    }

    pub(crate) fn rebuild_roster(&mut self) {
        let mut roster: Vec<String> = self.samples.iter().map(|s| s.user_id.clone()).collect();
        roster.sort();
        roster.dedup();
        self.roster = roster;
    }
}

/// Default pairing map: the j-th touch user (sorted) is paired with the
/// j-th motion user (sorted). The motion roster may be larger; extras are
/// unused.
pub fn identity_pairing(
    touch_users: &[String],
    motion_users: &[String],
) -> Result<BTreeMap<String, String>, FusionError> {
    if motion_users.len() < touch_users.len() {
        return Err(FusionError::TooFewImpostorUsers {
            found: motion_users.len(),
        });
    }
    let mut touch: Vec<&String> = touch_users.iter().collect();
    touch.sort();
    let mut motion: Vec<&String> = motion_users.iter().collect();
    motion.sort();
    Ok(touch
        .into_iter()
        .zip(motion)
        .map(|(t, m)| (t.clone(), m.clone()))
        .collect())
}

/// Fuses strokes with stride-decimated motion snapshots into one dataset.
///
/// Output samples are grouped by touch user in sorted roster order;
/// within a user, stroke order is preserved. The result depends only on
/// per-user record order, not on how user blocks were interleaved in the
/// source files. `seed` is recorded for provenance; the join rule itself
/// is deterministic.
pub fn fuse(
    strokes: &[StrokeRecord],
    motions: &[MotionRecord],
    pairing: &BTreeMap<String, String>,
    _seed: u64,
) -> Result<FusedDataset, FusionError> {
    // group preserving within-user order
    let mut strokes_by_user: BTreeMap<&str, Vec<&StrokeRecord>> = BTreeMap::new();
    for s in strokes {
        strokes_by_user.entry(&s.user_id).or_default().push(s);
    }
    let mut motions_by_user: BTreeMap<&str, Vec<&MotionRecord>> = BTreeMap::new();
    for m in motions {
        motions_by_user.entry(&m.user_id).or_default().push(m);
    }

    let mut samples = Vec::with_capacity(strokes.len());
    for (user, user_strokes) in &strokes_by_user {
        let motion_user = pairing
            .get(*user)
            .ok_or_else(|| FusionError::UnpairedUser { user: user.to_string() })?;
        let snapshots = motions_by_user.get(motion_user.as_str()).ok_or_else(|| {
            FusionError::MissingMotionUser {
                user: motion_user.clone(),
            }
        })?;
        let n = user_strokes.len();
        let m = snapshots.len();
        if m < n {
            return Err(FusionError::InsufficientMotion {
                user: motion_user.clone(),
                needed: n,
                available: m,
            });
        }
        let stride = m / n;
        for (i, stroke) in user_strokes.iter().enumerate() {
            let snapshot = snapshots[i * stride];
            let mut features = [0.0f64; 24];
            features[..15].copy_from_slice(&stroke.features());
            features[15..].copy_from_slice(&snapshot.features());
            samples.push(FusedSample::new(user.to_string(), features));
        }
    }
    Ok(FusedDataset::from_samples(samples))
}

/// Per-target train/test index sets over a fused dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSplit {
    pub target: String,
    pub train_genuine: Vec<usize>,
    pub train_impostor: Vec<usize>,
    pub test_genuine: Vec<usize>,
    pub test_impostor: Vec<usize>,
    pub seed: u64,
}

impl UserSplit {
    /// Plain-text audit manifest: one `(target, phase, index)` line per
    /// sample.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for (phase, indices) in [
            ("train_genuine", &self.train_genuine),
            ("train_impostor", &self.train_impostor),
            ("test_genuine", &self.test_genuine),
            ("test_impostor", &self.test_impostor),
        ] {
            for i in indices {
                out.push_str(&format!("{} {} {}\n", self.target, phase, i));
            }
        }
        out
    }
}

/// Builds one target user's split.
///
/// Genuine samples: seeded Fisher-Yates shuffle of the user's indices,
/// first 80 train, next 20 test. Impostors: 50 non-target users in seeded
/// order, each with a seeded per-user sample order; training draws 80
/// round-robin (30 users contribute 2, 20 contribute 1), testing takes
/// each user's next unused sample.
pub fn build_user_split(
    dataset: &FusedDataset,
    target: &str,
    seed: u64,
) -> Result<UserSplit, FusionError> {
    if !dataset.roster().iter().any(|u| u == target) {
        return Err(FusionError::UnknownTarget { user: target.to_string() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut genuine = dataset.user_indices(target);
    if genuine.len() < 100 {
        return Err(FusionError::TooFewGenuine {
            user: target.to_string(),
            found: genuine.len(),
        });
    }
    genuine.shuffle(&mut rng);
    let train_genuine = genuine[..80].to_vec();
    let test_genuine = genuine[80..100].to_vec();

    let mut others: Vec<&String> = dataset.roster().iter().filter(|u| *u != target).collect();
    if others.len() < 50 {
        return Err(FusionError::TooFewImpostorUsers { found: others.len() });
    }
    others.shuffle(&mut rng);
    let impostor_users = &others[..50];

    let mut pools: Vec<Vec<usize>> = Vec::with_capacity(50);
    for user in impostor_users {
        let mut pool = dataset.user_indices(user);
        pool.shuffle(&mut rng);
        pools.push(pool);
    }

    // round-robin over the 50 users until 80 training impostors are drawn
    let mut cursors = vec![0usize; 50];
    let mut train_impostor = Vec::with_capacity(80);
    let mut u = 0usize;
    while train_impostor.len() < 80 {
        if cursors[u] >= pools[u].len() {
            return Err(FusionError::ImpostorPoolExhausted {
                user: impostor_users[u].clone(),
            });
        }
        train_impostor.push(pools[u][cursors[u]]);
        cursors[u] += 1;
        u = (u + 1) % 50;
    }

    // one test sample per impostor user, disjoint from training draws
    let mut test_impostor = Vec::with_capacity(50);
    for (u, pool) in pools.iter().enumerate() {
        if cursors[u] >= pool.len() {
            return Err(FusionError::ImpostorPoolExhausted {
                user: impostor_users[u].clone(),
            });
        }
        test_impostor.push(pool[cursors[u]]);
    }

    Ok(UserSplit {
        target: target.to_string(),
        train_genuine,
        train_impostor,
        test_genuine,
        test_impostor,
        seed,
    })
}

/// Seed for `target`'s split, derived from the experiment seed.
pub fn user_seed(seed: u64, target: &str) -> u64 {
    seed ^ fnv1a64(target.as_bytes())
}

/// Builds one split per roster user. Per-target seeds are independent, so
/// the result does not depend on execution order.
pub fn split_all(dataset: &FusedDataset, seed: u64) -> Result<Vec<UserSplit>, FusionError> {
    let build = |target: &String| build_user_split(dataset, target, user_seed(seed, target));

    #[cfg(feature = "parallel")]
    {
        dataset.roster().par_iter().map(build).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        dataset.roster().iter().map(build).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stroke(user: &str, tag: f64) -> StrokeRecord {
        StrokeRecord {
            user_id: user.to_string(),
            stroke_duration: 0.5,
            start_x: tag,
            start_y: 0.0,
            stop_x: 1.0,
            stop_y: 1.0,
            direct_end_to_end_distance: 1.0,
            mean_resultant_length: 0.5,
            up_down_left_right: 1.0,
            direction_of_end_to_end_line: 0.1,
            largest_deviation_from_end_to_end: 0.2,
            average_direction: 0.3,
            length_of_trajectory: 2.0,
            average_velocity: 4.0,
            mid_stroke_pressure: 0.4,
            mid_stroke_area_covered: 0.05,
        }
    }

    fn motion(user: &str, tag: f64) -> MotionRecord {
        MotionRecord {
            user_id: user.to_string(),
            acc_x: tag,
            acc_y: 0.0,
            acc_z: 9.8,
            gyro_x: 0.0,
            gyro_y: 0.0,
            gyro_z: 0.0,
            mag_x: 30.0,
            mag_y: 0.0,
            mag_z: 0.0,
        }
    }

    /// 51 users, 100 samples each.
    pub(crate) fn toy_dataset() -> FusedDataset {
        let mut samples = Vec::new();
        for u in 0..51 {
            for i in 0..100 {
                let mut f = [0.0f64; 24];
                f[0] = u as f64;
                f[1] = i as f64;
                samples.push(FusedSample::new(format!("user{u:03}"), f));
            }
        }
        FusedDataset::from_samples(samples)
    }

    #[test]
    fn stride_decimation_joins_expected_snapshots() {
        // 2 strokes, 4 snapshots -> stride 2, snapshots 0 and 2
        let strokes = vec![stroke("a", 10.0), stroke("a", 11.0)];
        let motions = vec![
            motion("m", 0.0),
            motion("m", 1.0),
            motion("m", 2.0),
            motion("m", 3.0),
        ];
        let pairing = BTreeMap::from([("a".to_string(), "m".to_string())]);
        let d = fuse(&strokes, &motions, &pairing, 0).unwrap();
        assert_eq!(d.samples().len(), 2);
        assert_eq!(d.samples()[0].motion()[0], 0.0);
        assert_eq!(d.samples()[1].motion()[0], 2.0);
    }

    #[test]
    fn fuse_is_invariant_to_user_block_order() {
        let strokes = vec![stroke("a", 1.0), stroke("b", 2.0), stroke("a", 3.0)];
        let motions_ab = vec![motion("ma", 0.0), motion("ma", 1.0), motion("mb", 5.0)];
        let motions_ba = vec![motion("mb", 5.0), motion("ma", 0.0), motion("ma", 1.0)];
        let pairing = BTreeMap::from([
            ("a".to_string(), "ma".to_string()),
            ("b".to_string(), "mb".to_string()),
        ]);
        let d1 = fuse(&strokes, &motions_ab, &pairing, 0).unwrap();
        let d2 = fuse(&strokes, &motions_ba, &pairing, 0).unwrap();
        assert_eq!(d1.content_hash(), d2.content_hash());
    }

    #[test]
    fn fuse_errors() {
        let strokes = vec![stroke("a", 1.0), stroke("a", 2.0)];
        let motions = vec![motion("m", 0.0)];
        let pairing = BTreeMap::from([("a".to_string(), "m".to_string())]);
        assert!(matches!(
            fuse(&strokes, &motions, &pairing, 0),
            Err(FusionError::InsufficientMotion { needed: 2, available: 1, .. })
        ));
        assert!(matches!(
            fuse(&strokes, &motions, &BTreeMap::new(), 0),
            Err(FusionError::UnpairedUser { .. })
        ));
    }

    #[test]
    fn identity_pairing_zips_sorted_rosters() {
        let touch = vec!["b".to_string(), "a".to_string()];
        let motion = vec!["y".to_string(), "x".to_string(), "z".to_string()];
        let p = identity_pairing(&touch, &motion).unwrap();
        assert_eq!(p["a"], "x");
        assert_eq!(p["b"], "y");
    }

    #[test]
    fn split_shape_and_balance() {
        let d = toy_dataset();
        let s = build_user_split(&d, "user000", 42).unwrap();
        assert_eq!(s.train_genuine.len(), 80);
        assert_eq!(s.train_impostor.len(), 80);
        assert_eq!(s.test_genuine.len(), 20);
        assert_eq!(s.test_impostor.len(), 50);
        for &i in s.train_genuine.iter().chain(&s.test_genuine) {
            assert_eq!(d.samples()[i].user_id(), "user000");
        }
        for &i in s.train_impostor.iter().chain(&s.test_impostor) {
            assert_ne!(d.samples()[i].user_id(), "user000");
        }
    }

    #[test]
    fn split_leakage_freedom_and_spread() {
        use std::collections::{HashMap, HashSet};
        let d = toy_dataset();
        let s = build_user_split(&d, "user017", 7).unwrap();

        let tg: HashSet<_> = s.train_genuine.iter().collect();
        assert!(s.test_genuine.iter().all(|i| !tg.contains(i)));
        let ti: HashSet<_> = s.train_impostor.iter().collect();
        assert!(s.test_impostor.iter().all(|i| !ti.contains(i)));

        // per-user training contribution is 1 or 2
        let mut per_user: HashMap<&str, usize> = HashMap::new();
        for &i in &s.train_impostor {
            *per_user.entry(d.samples()[i].user_id()).or_default() += 1;
        }
        assert!(per_user.values().all(|&c| c == 1 || c == 2));
        assert_eq!(per_user.values().filter(|&&c| c == 2).count(), 30);
        assert_eq!(per_user.len(), 50);

        // exactly one test sample per impostor user
        let mut test_users: Vec<&str> = s
            .test_impostor
            .iter()
            .map(|&i| d.samples()[i].user_id())
            .collect();
        test_users.sort();
        test_users.dedup();
        assert_eq!(test_users.len(), 50);
    }

    #[test]
    fn split_is_deterministic() {
        let d = toy_dataset();
        let a = build_user_split(&d, "user005", 99).unwrap();
        let b = build_user_split(&d, "user005", 99).unwrap();
        assert_eq!(a, b);
        let c = build_user_split(&d, "user005", 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_all_covers_roster() {
        let d = toy_dataset();
        let splits = split_all(&d, 1).unwrap();
        assert_eq!(splits.len(), 51);
        let total_test: usize = splits
            .iter()
            .map(|s| s.test_genuine.len() + s.test_impostor.len())
            .collect::<Vec<_>>()
            .iter()
            .sum();
        assert_eq!(total_test, 51 * 70);
    }

    #[test]
    fn ineligible_user_is_named() {
        let mut samples = toy_dataset().samples().to_vec();
        samples.retain(|s| s.user_id() != "user050");
        // user050 now has 0 samples; add back just a few
        for i in 0..5 {
            let mut f = [0.0f64; 24];
            f[1] = i as f64;
            samples.push(FusedSample::new("user050".to_string(), f));
        }
        let d = FusedDataset::from_samples(samples);
        match split_all(&d, 1) {
            Err(FusionError::TooFewGenuine { user, found }) => {
                assert_eq!(user, "user050");
                assert_eq!(found, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn manifest_lists_every_index() {
        let d = toy_dataset();
        let s = build_user_split(&d, "user001", 3).unwrap();
        let manifest = s.manifest();
        assert_eq!(manifest.lines().count(), 230);
        assert!(manifest.lines().all(|l| l.starts_with("user001 ")));
    }
}
