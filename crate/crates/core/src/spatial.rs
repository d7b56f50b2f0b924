//! Discrete spatial lattice, UAV actions and BS-task plane geometry.
//!
//! UAV positions live on a cubic lattice with spacing `delta` inside a
//! cylinder of radius `r_max` and a height band `[h_min, h_max]`. Once per
//! cycle a UAV picks one of at most 27 moves (one lattice step in each axis,
//! including hovering), so the maximum per-cycle flight distance is
//! `sqrt(3) * delta`. Lattice indices are exact integers; meters are always
//! derived, never stored, so that positions can serve as Q-table keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice geometry and flight envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Spacing between adjacent lattice points, meters.
    pub delta: f64,
    /// Minimum flying height, meters.
    pub h_min: f64,
    /// Maximum flying height, meters.
    pub h_max: f64,
    /// Radius of the cylindrical flight region, meters.
    pub r_max: f64,
    /// Base-station antenna height, meters.
    pub bs_height: f64,
}

impl LatticeConfig {
    pub fn new(delta: f64, h_min: f64, h_max: f64, r_max: f64, bs_height: f64) -> Result<Self> {
        let cfg = LatticeConfig {
            delta,
            h_min,
            h_max,
            r_max,
            bs_height,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::config(format!(
                "lattice.delta must be > 0, got {}",
                self.delta
            )));
        }
        if !(self.h_min < self.h_max) {
            return Err(Error::config(format!(
                "lattice.h_min ({}) must be < lattice.h_max ({})",
                self.h_min, self.h_max
            )));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::config(format!(
                "lattice.r_max must be > 0, got {}",
                self.r_max
            )));
        }
        if self.bs_height < 0.0 {
            return Err(Error::config(format!(
                "lattice.bs_height must be >= 0, got {}",
                self.bs_height
            )));
        }
        Ok(())
    }

    /// Maximum distance a UAV can cover in one cycle (the cube diagonal).
    pub fn max_cycle_distance(&self) -> f64 {
        3f64.sqrt() * self.delta
    }

    /// Base-station position; the BS defines the horizontal origin.
    pub fn bs_position(&self) -> Position {
        Position {
            x: 0.0,
            y: 0.0,
            h: self.bs_height,
        }
    }

    /// Largest valid height index: `h_min + ih * delta <= h_max`.
    pub fn max_height_index(&self) -> i32 {
        ((self.h_max - self.h_min) / self.delta).floor() as i32
    }

    /// Nearest lattice point to a cartesian position (indices clamped to the
    /// height band, not to the cylinder).
    pub fn snap(&self, pos: Position) -> GridPoint {
        GridPoint {
            ix: (pos.x / self.delta).round() as i32,
            iy: (pos.y / self.delta).round() as i32,
            ih: (((pos.h - self.h_min) / self.delta).round() as i32)
                .clamp(0, self.max_height_index()),
        }
    }
}

/// Continuous position in meters. `h` is height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Position { x, y, h }
    }

    /// Ground-level position, e.g. a sensing task.
    pub fn ground(x: f64, y: f64) -> Self {
        Position { x, y, h: 0.0 }
    }

    /// Horizontal distance to the vertical axis through the origin.
    pub fn horizontal_radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Horizontal (2-D) distance to another position.
    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Full 3-D distance to another position.
    pub fn distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dh = self.h - other.h;
        (dx * dx + dy * dy + dh * dh).sqrt()
    }
}

/// Lattice position: signed horizontal indices, non-negative height index.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct GridPoint {
    pub ix: i32,
    pub iy: i32,
    pub ih: i32,
}

impl GridPoint {
    pub fn new(ix: i32, iy: i32, ih: i32) -> Self {
        GridPoint { ix, iy, ih }
    }

    /// True when the point lies inside the cylinder and the height band.
    pub fn is_valid(&self, cfg: &LatticeConfig) -> bool {
        if self.ih < 0 || self.ih > cfg.max_height_index() {
            return false;
        }
        let r2 = (self.ix as f64).powi(2) + (self.iy as f64).powi(2);
        r2.sqrt() * cfg.delta <= cfg.r_max + 1e-9
    }

    pub fn apply(&self, a: Action) -> GridPoint {
        GridPoint {
            ix: self.ix + a.ax as i32,
            iy: self.iy + a.ay as i32,
            ih: self.ih + a.ah as i32,
        }
    }
}

/// One lattice step per axis; `(0, 0, 0)` is hovering.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct Action {
    pub ax: i8,
    pub ay: i8,
    pub ah: i8,
}

impl Action {
    pub const ZERO: Action = Action {
        ax: 0,
        ay: 0,
        ah: 0,
    };

    pub fn new(ax: i8, ay: i8, ah: i8) -> Self {
        Action { ax, ay, ah }
    }

    /// All 27 candidate moves in a fixed canonical order.
    pub fn cube() -> impl Iterator<Item = Action> {
        (-1i8..=1).flat_map(move |ah| {
            (-1i8..=1).flat_map(move |ay| (-1i8..=1).map(move |ax| Action { ax, ay, ah }))
        })
    }

    /// Canonical index in `0..27`: `(ax+1) + 3*(ay+1) + 9*(ah+1)`.
    pub fn index(&self) -> usize {
        (self.ax + 1) as usize + 3 * (self.ay + 1) as usize + 9 * (self.ah + 1) as usize
    }

    pub fn from_index(idx: usize) -> Action {
        debug_assert!(idx < 27);
        Action {
            ax: (idx % 3) as i8 - 1,
            ay: ((idx / 3) % 3) as i8 - 1,
            ah: ((idx / 9) % 3) as i8 - 1,
        }
    }
}

/// Maps a lattice point to meters: `(ix*delta, iy*delta, h_min + ih*delta)`.
///
/// Rejects points outside the cylinder or the height band.
pub fn to_cartesian(p: GridPoint, cfg: &LatticeConfig) -> Result<Position> {
    if !p.is_valid(cfg) {
        return Err(Error::InvalidGridPoint {
            ix: p.ix,
            iy: p.iy,
            ih: p.ih,
        });
    }
    Ok(Position {
        x: p.ix as f64 * cfg.delta,
        y: p.iy as f64 * cfg.delta,
        h: cfg.h_min + p.ih as f64 * cfg.delta,
    })
}

/// All moves from `p` that land on a valid lattice point, hovering included.
///
/// At most 27; fewer at the edges of the region. `p` itself must be valid.
pub fn full_action_set(p: GridPoint, cfg: &LatticeConfig) -> Vec<Action> {
    debug_assert!(p.is_valid(cfg), "full_action_set called on invalid point");
    Action::cube().filter(|&a| p.apply(a).is_valid(cfg)).collect()
}

/// Horizontal distance from `s` to the vertical plane through `task` and `bs`.
///
/// Fails when task and BS are horizontally coincident (the plane through a
/// single vertical line is undefined).
pub fn plane_distance(s: &Position, task: &Position, bs: &Position) -> Result<f64> {
    let ux = task.x - bs.x;
    let uy = task.y - bs.y;
    let len = ux.hypot(uy);
    if len == 0.0 {
        return Err(Error::DegeneratePlane);
    }
    let px = s.x - bs.x;
    let py = s.y - bs.y;
    Ok((px * uy - py * ux).abs() / len)
}

/// The reduced available action set used by the enhanced learner.
///
/// Keeps a candidate move `a` from `p` when both hold:
///
/// 1. the resulting distance to the BS-task plane does not increase, or is
///    at most one lattice spacing `delta`;
/// 2. the resulting x (resp. y) coordinate stays in the interval spanned by
///    the current coordinate, the task's coordinate snapped to the lattice,
///    and 0, and the resulting height stays within the height band.
///
/// The hovering action always survives both conditions.
pub fn reduced_action_set(
    p: GridPoint,
    task: &Position,
    bs: &Position,
    cfg: &LatticeConfig,
) -> Result<Vec<Action>> {
    let pos = to_cartesian(p, cfg)?;
    let here = plane_distance(&pos, task, bs)?;

    // Box bounds at lattice resolution; the task column is snapped to the
    // nearest lattice index so the comparison stays integer-exact.
    let task_ix = (task.x / cfg.delta).round() as i32;
    let task_iy = (task.y / cfg.delta).round() as i32;
    let bs_ix = (bs.x / cfg.delta).round() as i32;
    let bs_iy = (bs.y / cfg.delta).round() as i32;
    let x_lo = p.ix.min(task_ix).min(bs_ix);
    let x_hi = p.ix.max(task_ix).max(bs_ix);
    let y_lo = p.iy.min(task_iy).min(bs_iy);
    let y_hi = p.iy.max(task_iy).max(bs_iy);

    let tol = 1e-9 * cfg.delta;
    let mut kept = Vec::new();
    for a in full_action_set(p, cfg) {
        let q = p.apply(a);
        let qpos = to_cartesian(q, cfg)?;
        let there = plane_distance(&qpos, task, bs)?;
        let cond1 = there <= here + tol || there <= cfg.delta + tol;
        let cond2 = (x_lo..=x_hi).contains(&q.ix) && (y_lo..=y_hi).contains(&q.iy);
        if cond1 && cond2 {
            kept.push(a);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_cfg() -> LatticeConfig {
        LatticeConfig::new(25.0, 50.0, 150.0, 500.0, 25.0).unwrap()
    }

    #[test]
    fn to_cartesian_examples() {
        let cfg = table_cfg();
        let origin = to_cartesian(GridPoint::new(0, 0, 0), &cfg).unwrap();
        assert_eq!((origin.x, origin.y, origin.h), (0.0, 0.0, 50.0));

        let p = to_cartesian(GridPoint::new(20, 0, 0), &cfg).unwrap();
        assert_eq!((p.x, p.y, p.h), (500.0, 0.0, 50.0));

        // Direct evaluation of the affine map.
        let p = to_cartesian(GridPoint::new(1, 1, 4), &cfg).unwrap();
        assert_eq!((p.x, p.y, p.h), (25.0, 25.0, 150.0));
    }

    #[test]
    fn to_cartesian_rejects_out_of_bounds() {
        let cfg = table_cfg();
        assert!(to_cartesian(GridPoint::new(0, 0, 5), &cfg).is_err());
        assert!(to_cartesian(GridPoint::new(0, 0, -1), &cfg).is_err());
        // 15^2 + 15^2 = 450 > 400 = (r_max/delta)^2
        assert!(to_cartesian(GridPoint::new(15, 15, 0), &cfg).is_err());
    }

    #[test]
    fn to_cartesian_injective_on_sample() {
        let cfg = table_cfg();
        let mut seen = std::collections::HashSet::new();
        for ix in -3..=3 {
            for iy in -3..=3 {
                for ih in 0..=4 {
                    let p = GridPoint::new(ix, iy, ih);
                    let pos = to_cartesian(p, &cfg).unwrap();
                    assert!(seen.insert((pos.x.to_bits(), pos.y.to_bits(), pos.h.to_bits())));
                }
            }
        }
    }

    /// Brute-force oracle: count cube moves that land on valid points.
    fn count_valid_moves(p: GridPoint, cfg: &LatticeConfig) -> usize {
        Action::cube().filter(|&a| p.apply(a).is_valid(cfg)).count()
    }

    #[test]
    fn full_action_set_interior_has_27() {
        let cfg = table_cfg();
        let p = GridPoint::new(2, 3, 2);
        let set = full_action_set(p, &cfg);
        assert_eq!(set.len(), 27);
        assert!(set.contains(&Action::ZERO));
    }

    #[test]
    fn full_action_set_floor_has_18() {
        let cfg = table_cfg();
        let p = GridPoint::new(2, 3, 0);
        assert_eq!(full_action_set(p, &cfg).len(), 18);
    }

    #[test]
    fn full_action_set_floor_rim_below_18() {
        let cfg = table_cfg();
        // On the cylinder rim: ix = 20 -> x = 500 = r_max.
        let p = GridPoint::new(20, 0, 0);
        let set = full_action_set(p, &cfg);
        assert!(set.len() < 18, "rim point keeps {} actions", set.len());
        assert_eq!(set.len(), count_valid_moves(p, &cfg));
    }

    #[test]
    fn full_action_set_matches_enumeration_everywhere_sampled() {
        let cfg = table_cfg();
        for ix in [-20, -14, -1, 0, 7, 19, 20] {
            for iy in [-12, 0, 5] {
                for ih in 0..=4 {
                    let p = GridPoint::new(ix, iy, ih);
                    if !p.is_valid(&cfg) {
                        continue;
                    }
                    assert_eq!(full_action_set(p, &cfg).len(), count_valid_moves(p, &cfg));
                }
            }
        }
    }

    #[test]
    fn plane_distance_examples() {
        let bs = Position::ground(0.0, 0.0);
        // Point on the BS-task line.
        let task = Position::ground(500.0, 0.0);
        let s = Position::new(250.0, 0.0, 80.0);
        assert_eq!(plane_distance(&s, &task, &bs).unwrap(), 0.0);

        // Axis-aligned offset.
        let s = Position::new(250.0, 30.0, 80.0);
        assert!((plane_distance(&s, &task, &bs).unwrap() - 30.0).abs() < 1e-12);

        // 2-D point-line distance: line to (300,400), point (0,100) -> 60.
        let task = Position::ground(300.0, 400.0);
        let s = Position::new(0.0, 100.0, 80.0);
        assert!((plane_distance(&s, &task, &bs).unwrap() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn plane_distance_degenerate() {
        let bs = Position::new(0.0, 0.0, 25.0);
        let task = Position::ground(0.0, 0.0);
        let s = Position::new(10.0, 10.0, 80.0);
        assert!(matches!(
            plane_distance(&s, &task, &bs),
            Err(Error::DegeneratePlane)
        ));
    }

    /// Independent enumeration of the reduced-set definition over all 27
    /// candidates, written against the definition rather than the library
    /// routine.
    fn reduced_oracle(
        p: GridPoint,
        task: &Position,
        bs: &Position,
        cfg: &LatticeConfig,
    ) -> Vec<Action> {
        let pos = to_cartesian(p, cfg).unwrap();
        let here = plane_distance(&pos, task, bs).unwrap();
        let tix = (task.x / cfg.delta).round() as i32;
        let tiy = (task.y / cfg.delta).round() as i32;
        let mut out = Vec::new();
        for a in Action::cube() {
            let q = p.apply(a);
            if !q.is_valid(cfg) {
                continue;
            }
            let qpos = to_cartesian(q, cfg).unwrap();
            let there = plane_distance(&qpos, task, bs).unwrap();
            if !(there <= here + 1e-9 || there <= cfg.delta + 1e-9) {
                continue;
            }
            if q.ix < p.ix.min(tix).min(0) || q.ix > p.ix.max(tix).max(0) {
                continue;
            }
            if q.iy < p.iy.min(tiy).min(0) || q.iy > p.iy.max(tiy).max(0) {
                continue;
            }
            out.push(a);
        }
        out
    }

    #[test]
    fn reduced_set_on_axis_pins_lateral_moves() {
        // With the task on the x axis the coordinate box degenerates to
        // y = 0, so lateral moves are excluded by condition 2 even though
        // they would end within one spacing of the plane.
        let cfg = table_cfg();
        let bs = cfg.bs_position();
        let task = Position::ground(500.0, 0.0);
        let p = GridPoint::new(10, 0, 2); // (250, 0, 100)
        let set = reduced_action_set(p, &task, &bs, &cfg).unwrap();
        assert_eq!(set, reduced_oracle(p, &task, &bs, &cfg));
        assert!(set.iter().all(|a| a.ay == 0));
        assert_eq!(set.len(), 9);
        assert!(set.contains(&Action::ZERO));
    }

    #[test]
    fn reduced_set_diagonal_task_allows_near_plane_band() {
        let cfg = table_cfg();
        let bs = cfg.bs_position();
        let task = Position::ground(-250.0 * std::f64::consts::SQRT_2, 250.0 * std::f64::consts::SQRT_2);
        let p = GridPoint::new(-5, 5, 1); // (-125, 125, 75), on the plane
        let set = reduced_action_set(p, &task, &bs, &cfg).unwrap();
        assert_eq!(set, reduced_oracle(p, &task, &bs, &cfg));
        assert!(set.contains(&Action::ZERO));
        // Off-plane by one step: |x+y| = 25 -> distance 25/sqrt(2) < delta.
        assert!(set.contains(&Action::new(1, 0, 0)));
        assert!(set.contains(&Action::new(0, -1, 0)));
        // Along the plane: x+y stays 0.
        assert!(set.contains(&Action::new(1, -1, 0)));
        // Two steps off the plane in one move: distance 50/sqrt(2) > delta.
        assert!(!set.contains(&Action::new(1, 1, 0)));
    }

    #[test]
    fn reduced_set_far_from_plane_excludes_retreat() {
        let cfg = table_cfg();
        let bs = cfg.bs_position();
        let task = Position::ground(500.0, 0.0);
        // Three spacings away from the plane.
        let p = GridPoint::new(10, 3, 2);
        let set = reduced_action_set(p, &task, &bs, &cfg).unwrap();
        assert_eq!(set, reduced_oracle(p, &task, &bs, &cfg));
        // Moving further from the plane is excluded...
        assert!(!set.iter().any(|a| a.ay == 1));
        // ...moving back toward it is kept.
        assert!(set.iter().any(|a| a.ay == -1));
    }

    #[test]
    fn reduced_subset_of_full_and_distance_bound() {
        let cfg = table_cfg();
        let bs = cfg.bs_position();
        let task = Position::ground(300.0, 400.0);
        for ix in [-2, 0, 3, 9] {
            for iy in [-1, 0, 4, 12] {
                for ih in [0, 2, 4] {
                    let p = GridPoint::new(ix, iy, ih);
                    if !p.is_valid(&cfg) {
                        continue;
                    }
                    let full = full_action_set(p, &cfg);
                    let reduced = reduced_action_set(p, &task, &bs, &cfg).unwrap();
                    assert!(reduced.iter().all(|a| full.contains(a)));
                    assert!(reduced.contains(&Action::ZERO));
                    let pos = to_cartesian(p, &cfg).unwrap();
                    let here = plane_distance(&pos, &task, &bs).unwrap();
                    for a in &reduced {
                        let qpos = to_cartesian(p.apply(*a), &cfg).unwrap();
                        let there = plane_distance(&qpos, &task, &bs).unwrap();
                        assert!(there <= here.max(cfg.delta) + 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn action_index_round_trip() {
        for (i, a) in Action::cube().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), a);
        }
    }
}
