//! Worlds and skill libraries shipped with the crate.

/// Four rooms around the lab; the flask starts in the lab, the book in the
/// library. There is no exit north of the lab.
pub const MOVE_TAKE_WORLD: &str = include_str!("../worlds/move-take.world");

/// Farm, quarry, town, shop and pond, with the farming tool table.
pub const FARM_WORLD: &str = include_str!("../worlds/farm.world");

/// `till`, `plant`, `mine`, `talk` and `enter_shop` as unparameterized
/// one-liners.
pub const BASIC_SKILLS: &str = include_str!("../skills/basic.skills");

/// Resource-typed farming skills: `mine`, `grow_crop`,
/// `water_until_harvestable` and their helpers.
pub const FARM_SKILLS: &str = include_str!("../skills/farm.skills");

/// `water_until_harvestable` with a single retry instead of a loop. It does
/// not typecheck: its retry branch produces `crop(t) + growing(t)`.
pub const WATER_SINGLE_RETRY: &str = include_str!("../skills/water_single_retry.skills");

/// Looks up a shipped world by name (`move-take` or `farm`).
pub fn world(name: &str) -> Option<&'static str> {
    match name {
        "move-take" | "move_take" => Some(MOVE_TAKE_WORLD),
        "farm" => Some(FARM_WORLD),
        _ => None,
    }
}

/// Looks up a shipped skill library by name (`basic` or `farm`).
pub fn skills(name: &str) -> Option<&'static str> {
    match name {
        "basic" => Some(BASIC_SKILLS),
        "farm" => Some(FARM_SKILLS),
        _ => None,
    }
}
