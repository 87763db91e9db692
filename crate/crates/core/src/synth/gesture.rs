//! Gesture classes and their kinematic axis templates.

use serde::{Deserialize, Serialize};

use crate::signal::Vec3;

/// The seven command gestures plus a free-motion "no gesture" class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GestureClass {
    Approach,
    Retreat,
    Left,
    Right,
    Ascend,
    Descend,
    Summon,
    NoGesture,
}

impl GestureClass {
    pub const ALL: [GestureClass; 8] = [
        GestureClass::Approach,
        GestureClass::Retreat,
        GestureClass::Left,
        GestureClass::Right,
        GestureClass::Ascend,
        GestureClass::Descend,
        GestureClass::Summon,
        GestureClass::NoGesture,
    ];

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|c| c == self).unwrap()
    }

    pub fn name(&self) -> &'static str {
        match self {
            GestureClass::Approach => "approach",
            GestureClass::Retreat => "retreat",
            GestureClass::Left => "left",
            GestureClass::Right => "right",
            GestureClass::Ascend => "ascend",
            GestureClass::Descend => "descend",
            GestureClass::Summon => "summon",
            GestureClass::NoGesture => "no_gesture",
        }
    }

    pub fn from_name(name: &str) -> Option<GestureClass> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Dominant motion axis in camera coordinates (x lateral, y vertical,
    /// z radial/depth). Every template keeps both a tangential and a radial
    /// component so image-plane speed tracks 3D speed.
    pub fn axis_template(&self) -> Vec3 {
        let v = match self {
            GestureClass::Approach => Vec3::new(0.30, 0.32, 0.90),
            GestureClass::Retreat => Vec3::new(0.34, 0.26, -0.90),
            GestureClass::Left => Vec3::new(-0.86, 0.18, 0.48),
            GestureClass::Right => Vec3::new(0.88, 0.14, 0.45),
            GestureClass::Ascend => Vec3::new(0.18, 0.88, 0.44),
            GestureClass::Descend => Vec3::new(0.14, -0.90, 0.42),
            GestureClass::Summon => Vec3::new(0.55, 0.60, 0.58),
            GestureClass::NoGesture => Vec3::new(0.58, 0.58, 0.58),
        };
        v.normalized().unwrap()
    }
}
