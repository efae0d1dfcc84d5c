//! Effective / ineffective attack labels from shot context.
//!
//! An attack is effective when its shot is taken
//! - from the restricted area, regardless of defender distance;
//! - from the paint or mid-range with the nearest defender at least 6 ft away;
//! - from beyond the three-point line, wide open, by a shooter whose
//!   distance-adjusted three-point success probability is at least 0.35.
//!
//! Attacks that end without a shot (turnovers) are ineffective.
//!
//! Zone radii are kept in meters; court coordinates are converted with
//! [`CourtGeometry::unit_scale`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Label, Point2D};

pub const METERS_PER_FOOT: f64 = 0.3048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("point ({x}, {y}) lies outside the court")]
    OutOfBounds { x: f64, y: f64 },
    #[error("negative defender distance {0}")]
    NegativeDistance(f64),
    #[error("no three-point probability for player `{0}`")]
    UnknownPlayer(String),
    #[error("player `{player}` has fewer than {min_attempts} attempts and no {position} default")]
    MissingPositionDefault {
        player: String,
        position: Position,
        min_attempts: u32,
    },
    #[error("invalid court geometry: {0}")]
    Geometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourtGeometry {
    /// Court extent in coordinate units.
    pub court_length: f64,
    pub court_width: f64,
    /// Centre of the attacked hoop, coordinate units.
    pub hoop_center: Point2D,
    pub restricted_radius_m: f64,
    pub paint_radius_m: f64,
    pub three_point_arc_radius_m: f64,
    pub three_point_corner_distance_m: f64,
    pub half_court_distance_m: f64,
    /// Meters per coordinate unit.
    pub unit_scale: f64,
}

impl Default for CourtGeometry {
    /// NBA court in feet: 94 x 50, hoop 5.25 ft from the baseline on the
    /// midline, three-point arc 23.75 ft with 22 ft corners.
    fn default() -> Self {
        Self {
            court_length: 94.0,
            court_width: 50.0,
            hoop_center: Point2D::new(5.25, 25.0),
            restricted_radius_m: 2.44,
            paint_radius_m: 5.46,
            three_point_arc_radius_m: 23.75 * METERS_PER_FOOT,
            three_point_corner_distance_m: 22.0 * METERS_PER_FOOT,
            half_court_distance_m: 12.73,
            unit_scale: METERS_PER_FOOT,
        }
    }
}

impl CourtGeometry {
    pub fn validate(&self) -> Result<(), LabelError> {
        let all = [
            self.court_length,
            self.court_width,
            self.restricted_radius_m,
            self.paint_radius_m,
            self.three_point_arc_radius_m,
            self.three_point_corner_distance_m,
            self.half_court_distance_m,
            self.unit_scale,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabelError::Geometry("all lengths must be positive".into()));
        }
        if !(self.restricted_radius_m < self.paint_radius_m
            && self.paint_radius_m < self.three_point_arc_radius_m
            && self.three_point_arc_radius_m < self.half_court_distance_m)
        {
            return Err(LabelError::Geometry(
                "need restricted < paint < arc < half court".into(),
            ));
        }
        if self.three_point_corner_distance_m > self.three_point_arc_radius_m {
            return Err(LabelError::Geometry("corner distance exceeds arc radius".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.is_finite() && (0.0..=self.court_length).contains(&p.x) && (0.0..=self.court_width).contains(&p.y)
    }

    /// Offsets from the hoop in meters: `along` points toward half court,
    /// `lateral` is the unsigned sideways offset.
    fn hoop_frame(&self, p: Point2D) -> (f64, f64) {
        let dx = p.x - self.hoop_center.x;
        let along = if self.hoop_center.x <= self.court_length / 2.0 {
            dx
        } else {
            -dx
        };
        let lateral = (p.y - self.hoop_center.y).abs();
        (along * self.unit_scale, lateral * self.unit_scale)
    }

    pub fn hoop_distance_m(&self, p: Point2D) -> f64 {
        let (a, l) = self.hoop_frame(p);
        a.hypot(l)
    }

    /// Along-court offset where the straight corner lines meet the arc.
    fn arc_break_m(&self) -> f64 {
        let r = self.three_point_arc_radius_m;
        let c = self.three_point_corner_distance_m;
        (r * r - c * c).max(0.0).sqrt()
    }

    /// Distance from the hoop to the three-point line along the bearing of
    /// `p`: the arc radius, or the distance to the straight corner segment
    /// when the bearing crosses it first.
    pub fn three_point_line_distance_m(&self, p: Point2D) -> f64 {
        let (along, lateral) = self.hoop_frame(p);
        let c = self.three_point_corner_distance_m;
        let corner_bearing = if lateral > 0.0 {
            along * c <= self.arc_break_m() * lateral
        } else {
            along <= 0.0
        };
        if corner_bearing {
            if lateral > 0.0 {
                c * along.hypot(lateral) / lateral
            } else {
                f64::INFINITY
            }
        } else {
            self.three_point_arc_radius_m
        }
    }

    pub fn is_beyond_three_point_line(&self, p: Point2D) -> bool {
        self.hoop_distance_m(p) > self.three_point_line_distance_m(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotZone {
    Restricted,
    InThePaint,
    MidRange,
    ThreePoint,
}

impl ShotZone {
    pub fn name(self) -> &'static str {
        match self {
            ShotZone::Restricted => "restricted",
            ShotZone::InThePaint => "in_the_paint",
            ShotZone::MidRange => "mid_range",
            ShotZone::ThreePoint => "three_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenderDistanceCategory {
    VeryTight,
    Tight,
    Open,
    WideOpen,
}

impl DefenderDistanceCategory {
    pub fn name(self) -> &'static str {
        match self {
            DefenderDistanceCategory::VeryTight => "very_tight",
            DefenderDistanceCategory::Tight => "tight",
            DefenderDistanceCategory::Open => "open",
            DefenderDistanceCategory::WideOpen => "wide_open",
        }
    }
}

/// Registered playing position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    Guard,
    Forward,
    Center,
    GuardForward,
    ForwardCenter,
}

impl Position {
    pub fn code(self) -> &'static str {
        match self {
            Position::Guard => "G",
            Position::Forward => "F",
            Position::Center => "C",
            Position::GuardForward => "G-F",
            Position::ForwardCenter => "F-C",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Some(match s {
            "G" => Position::Guard,
            "F" => Position::Forward,
            "C" => Position::Center,
            "G-F" => Position::GuardForward,
            "F-C" => Position::ForwardCenter,
            _ => return None,
        })
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerShotStats {
    pub player_id: String,
    pub position: Position,
    pub three_point_attempts: u32,
    pub three_point_success_prob: f64,
}

/// Player three-point table plus attempt-weighted position averages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShotStatsTable {
    players: BTreeMap<String, PlayerShotStats>,
    position_defaults: BTreeMap<Position, f64>,
}

impl ShotStatsTable {
    pub fn from_players(players: impl IntoIterator<Item = PlayerShotStats>) -> Self {
        let players: BTreeMap<String, PlayerShotStats> =
            players.into_iter().map(|p| (p.player_id.clone(), p)).collect();
        let mut sums: BTreeMap<Position, (f64, f64)> = BTreeMap::new();
        for p in players.values() {
            let e = sums.entry(p.position).or_insert((0.0, 0.0));
            e.0 += p.three_point_attempts as f64 * p.three_point_success_prob;
            e.1 += p.three_point_attempts as f64;
        }
        let position_defaults = sums
            .into_iter()
            .filter(|(_, (_, n))| *n > 0.0)
            .map(|(pos, (made, n))| (pos, made / n))
            .collect();
        Self {
            players,
            position_defaults,
        }
    }

    /// Replaces the computed position averages.
    pub fn with_position_defaults(mut self, defaults: BTreeMap<Position, f64>) -> Self {
        self.position_defaults = defaults;
        self
    }

    pub fn player(&self, id: &str) -> Option<&PlayerShotStats> {
        self.players.get(id)
    }

    pub fn position_default(&self, pos: Position) -> Option<f64> {
        self.position_defaults.get(&pos).copied()
    }

    pub fn position_defaults(&self) -> &BTreeMap<Position, f64> {
        &self.position_defaults
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }
}

/// Labeling thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRules {
    pub geometry: CourtGeometry,
    pub three_point_threshold: f64,
    /// Players with fewer attempts use their position average.
    pub min_attempts: u32,
    /// Probability reduction reached at the half-court distance.
    pub long_range_reduction: f64,
}

impl Default for LabelRules {
    fn default() -> Self {
        Self {
            geometry: CourtGeometry::default(),
            three_point_threshold: 0.35,
            min_attempts: 10,
            long_range_reduction: 0.2,
        }
    }
}

/// The shot (or turnover) that ends an attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotEvent {
    pub attack_id: String,
    pub shooter_id: String,
    pub shot_point: Point2D,
    /// Feet.
    pub nearest_defender_distance: f64,
    pub shot_attempted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDecision {
    pub attack_id: String,
    pub label: Label,
    pub zone: Option<ShotZone>,
    pub defender: Option<DefenderDistanceCategory>,
    pub raw_three_point_prob: Option<f64>,
    pub adjusted_three_point_prob: Option<f64>,
}

pub fn classify_zone(shot_point: Point2D, geom: &CourtGeometry) -> Result<ShotZone, LabelError> {
    if !geom.contains(shot_point) {
        return Err(LabelError::OutOfBounds {
            x: shot_point.x,
            y: shot_point.y,
        });
    }
    let d = geom.hoop_distance_m(shot_point);
    Ok(if d <= geom.restricted_radius_m {
        ShotZone::Restricted
    } else if geom.is_beyond_three_point_line(shot_point) {
        ShotZone::ThreePoint
    } else if d <= geom.paint_radius_m {
        ShotZone::InThePaint
    } else {
        ShotZone::MidRange
    })
}

/// Buckets `[0,2)`, `[2,4)`, `[4,6)`, `[6,inf)` feet.
pub fn defender_category(feet: f64) -> Result<DefenderDistanceCategory, LabelError> {
    if feet.is_nan() || feet < 0.0 {
        return Err(LabelError::NegativeDistance(feet));
    }
    Ok(if feet < 2.0 {
        DefenderDistanceCategory::VeryTight
    } else if feet < 4.0 {
        DefenderDistanceCategory::Tight
    } else if feet < 6.0 {
        DefenderDistanceCategory::Open
    } else {
        DefenderDistanceCategory::WideOpen
    })
}

/// The player's own three-point probability, or the position average when
/// the player has fewer than `min_attempts` attempts.
pub fn three_point_prob(player_id: &str, stats: &ShotStatsTable, min_attempts: u32) -> Result<f64, LabelError> {
    let p = stats
        .player(player_id)
        .ok_or_else(|| LabelError::UnknownPlayer(player_id.to_string()))?;
    if p.three_point_attempts >= min_attempts {
        return Ok(p.three_point_success_prob);
    }
    stats
        .position_default(p.position)
        .ok_or(LabelError::MissingPositionDefault {
            player: player_id.to_string(),
            position: p.position,
            min_attempts,
        })
}

/// Linearly lowers `p` from no reduction at the three-point line to
/// `rules.long_range_reduction` at the half-court distance, floored at 0.
pub fn adjusted_three_point_prob(p: f64, shot_hoop_distance_m: f64, line_distance_m: f64, rules: &LabelRules) -> f64 {
    let span = rules.geometry.half_court_distance_m - line_distance_m;
    let frac = if span > 0.0 {
        ((shot_hoop_distance_m - line_distance_m) / span).clamp(0.0, 1.0)
    } else if shot_hoop_distance_m >= line_distance_m {
        1.0
    } else {
        0.0
    };
    (p - rules.long_range_reduction * frac).max(0.0)
}

pub fn label_attack(
    event: &ShotEvent,
    stats: &ShotStatsTable,
    rules: &LabelRules,
) -> Result<LabelDecision, LabelError> {
    let mut decision = LabelDecision {
        attack_id: event.attack_id.clone(),
        label: Label::Negative,
        zone: None,
        defender: None,
        raw_three_point_prob: None,
        adjusted_three_point_prob: None,
    };
    if !event.shot_attempted {
        return Ok(decision);
    }
    let geom = &rules.geometry;
    let zone = classify_zone(event.shot_point, geom)?;
    let defender = defender_category(event.nearest_defender_distance)?;
    decision.zone = Some(zone);
    decision.defender = Some(defender);
    let wide_open = defender == DefenderDistanceCategory::WideOpen;
    let effective = match zone {
        ShotZone::Restricted => true,
        ShotZone::InThePaint | ShotZone::MidRange => wide_open,
        ShotZone::ThreePoint => {
            if wide_open {
                let raw = three_point_prob(&event.shooter_id, stats, rules.min_attempts)?;
                let adjusted = adjusted_three_point_prob(
                    raw,
                    geom.hoop_distance_m(event.shot_point),
                    geom.three_point_line_distance_m(event.shot_point),
                    rules,
                );
                decision.raw_three_point_prob = Some(raw);
                decision.adjusted_three_point_prob = Some(adjusted);
                adjusted >= rules.three_point_threshold
            } else {
                false
            }
        }
    };
    decision.label = if effective { Label::Positive } else { Label::Negative };
    Ok(decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> CourtGeometry {
        CourtGeometry::default()
    }

    /// Point `meters` from the hoop straight toward half court.
    fn toward_half(meters: f64) -> Point2D {
        let g = geom();
        Point2D::new(g.hoop_center.x + meters / g.unit_scale, g.hoop_center.y)
    }

    fn table() -> ShotStatsTable {
        ShotStatsTable::from_players([
            PlayerShotStats {
                player_id: "shooter".into(),
                position: Position::Guard,
                three_point_attempts: 200,
                three_point_success_prob: 0.41,
            },
            PlayerShotStats {
                player_id: "rookie".into(),
                position: Position::Guard,
                three_point_attempts: 4,
                three_point_success_prob: 0.9,
            },
            PlayerShotStats {
                player_id: "brick".into(),
                position: Position::Center,
                three_point_attempts: 50,
                three_point_success_prob: 0.30,
            },
        ])
    }

    fn shot(shooter: &str, p: Point2D, defender_ft: f64) -> ShotEvent {
        ShotEvent {
            attack_id: "a".into(),
            shooter_id: shooter.into(),
            shot_point: p,
            nearest_defender_distance: defender_ft,
            shot_attempted: true,
        }
    }

    #[test]
    fn default_geometry_is_valid() {
        geom().validate().unwrap();
        let mut g = geom();
        g.paint_radius_m = 1.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn zone_examples() {
        let g = geom();
        assert_eq!(classify_zone(toward_half(1.0), &g).unwrap(), ShotZone::Restricted);
        assert_eq!(classify_zone(toward_half(5.0), &g).unwrap(), ShotZone::InThePaint);
        assert_eq!(classify_zone(toward_half(6.0), &g).unwrap(), ShotZone::MidRange);
        assert_eq!(classify_zone(toward_half(8.0), &g).unwrap(), ShotZone::ThreePoint);
        assert!(classify_zone(Point2D::new(-1.0, 3.0), &g).is_err());
    }

    #[test]
    fn corner_three_uses_straight_segment() {
        let g = geom();
        // 22.5 ft sideways from the hoop at the baseline end: beyond the 22 ft
        // corner line but well inside the 23.75 ft arc radius.
        let corner = Point2D::new(g.hoop_center.x, g.hoop_center.y + 22.5);
        assert_eq!(classify_zone(corner, &g).unwrap(), ShotZone::ThreePoint);
        let inside = Point2D::new(g.hoop_center.x, g.hoop_center.y + 21.5);
        assert_eq!(classify_zone(inside, &g).unwrap(), ShotZone::MidRange);
        assert!((g.three_point_line_distance_m(corner) - 22.0 * METERS_PER_FOOT).abs() < 1e-12);
    }

    #[test]
    fn line_distance_continuous_at_break() {
        let g = geom();
        let brk = g.arc_break_m() / g.unit_scale;
        let on_break = Point2D::new(g.hoop_center.x + brk, g.hoop_center.y + 22.0);
        assert!((g.three_point_line_distance_m(on_break) - g.three_point_arc_radius_m).abs() < 1e-9);
    }

    #[test]
    fn defender_boundaries() {
        use DefenderDistanceCategory::*;
        assert_eq!(defender_category(6.0).unwrap(), WideOpen);
        assert_eq!(defender_category(0.0).unwrap(), VeryTight);
        assert_eq!(defender_category(3.99).unwrap(), Tight);
        assert_eq!(defender_category(2.0).unwrap(), Tight);
        assert_eq!(defender_category(4.0).unwrap(), Open);
        assert!(defender_category(-0.1).is_err());
    }

    #[test]
    fn probability_lookup() {
        let t = table().with_position_defaults([(Position::Guard, 0.36)].into_iter().collect());
        assert_eq!(three_point_prob("shooter", &t, 10).unwrap(), 0.41);
        assert_eq!(three_point_prob("rookie", &t, 10).unwrap(), 0.36);
        let empty = ShotStatsTable::default();
        assert!(matches!(
            three_point_prob("nobody", &empty, 10),
            Err(LabelError::UnknownPlayer(_))
        ));
        let no_defaults = table().with_position_defaults(BTreeMap::new());
        assert!(matches!(
            three_point_prob("rookie", &no_defaults, 10),
            Err(LabelError::MissingPositionDefault { .. })
        ));
    }

    #[test]
    fn weighted_position_defaults() {
        let t = ShotStatsTable::from_players([
            PlayerShotStats {
                player_id: "g1".into(),
                position: Position::Guard,
                three_point_attempts: 10,
                three_point_success_prob: 0.30,
            },
            PlayerShotStats {
                player_id: "g2".into(),
                position: Position::Guard,
                three_point_attempts: 30,
                three_point_success_prob: 0.50,
            },
        ]);
        assert!((t.position_default(Position::Guard).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(t.position_default(Position::Center), None);
    }

    #[test]
    fn adjustment_examples() {
        let rules = LabelRules::default();
        let arc = rules.geometry.three_point_arc_radius_m;
        assert_eq!(adjusted_three_point_prob(0.40, arc, arc, &rules), 0.40);
        assert_eq!(adjusted_three_point_prob(0.40, 12.73, arc, &rules), 0.20);
        let mid = (arc + 12.73) / 2.0;
        assert!((adjusted_three_point_prob(0.40, mid, arc, &rules) - 0.30).abs() < 1e-12);
        assert_eq!(adjusted_three_point_prob(0.10, 30.0, arc, &rules), 0.0);
    }

    #[test]
    fn label_examples() {
        let t = table();
        let r = LabelRules::default();
        let lab = |e: &ShotEvent| label_attack(e, &t, &r).unwrap().label;
        assert_eq!(lab(&shot("brick", toward_half(1.0), 1.0)), Label::Positive);
        assert_eq!(lab(&shot("brick", toward_half(6.0), 6.5)), Label::Positive);
        assert_eq!(lab(&shot("brick", toward_half(6.0), 5.9)), Label::Negative);
        // center shoots 0.30 from deep: below threshold even before adjustment
        assert_eq!(lab(&shot("brick", toward_half(8.0), 8.0)), Label::Negative);
        assert_eq!(lab(&shot("shooter", toward_half(7.5), 8.0)), Label::Positive);
        assert_eq!(lab(&shot("shooter", toward_half(7.5), 3.0)), Label::Negative);
        let turnover = ShotEvent {
            shot_attempted: false,
            ..shot("", Point2D::default(), 0.0)
        };
        assert_eq!(lab(&turnover), Label::Negative);
    }

    #[test]
    fn deep_three_loses_effectiveness() {
        let t = table();
        let r = LabelRules::default();
        // 0.41 - 0.2 * frac < 0.35 once frac > 0.3
        let d = label_attack(&shot("shooter", toward_half(11.0), 10.0), &t, &r).unwrap();
        assert_eq!(d.label, Label::Negative);
        assert_eq!(d.raw_three_point_prob, Some(0.41));
        assert!(d.adjusted_three_point_prob.unwrap() < 0.35);
    }

    proptest! {
        #[test]
        fn zones_cover_court(x in 0.0f64..=94.0, y in 0.0f64..=50.0) {
            prop_assert!(classify_zone(Point2D::new(x, y), &geom()).is_ok());
        }

        #[test]
        fn label_monotone_in_defender_distance(
            x in 0.0f64..=47.0, y in 0.0f64..=50.0, d1 in 0.0f64..20.0, d2 in 0.0f64..20.0,
            who in 0usize..3
        ) {
            let shooter = ["shooter", "rookie", "brick"][who];
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let t = table();
            let r = LabelRules::default();
            let p = Point2D::new(x, y);
            let a = label_attack(&shot(shooter, p, lo), &t, &r).unwrap().label;
            let b = label_attack(&shot(shooter, p, hi), &t, &r).unwrap().label;
            prop_assert!(!(a == Label::Positive && b == Label::Negative));
        }

        #[test]
        fn adjustment_non_increasing(p in 0.0f64..=1.0, d1 in 7.0f64..20.0, d2 in 7.0f64..20.0) {
            let r = LabelRules::default();
            let arc = r.geometry.three_point_arc_radius_m;
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let a = adjusted_three_point_prob(p, lo, arc, &r);
            let b = adjusted_three_point_prob(p, hi, arc, &r);
            prop_assert!(b <= a);
            prop_assert!(b >= 0.0);
        }
    }
}
