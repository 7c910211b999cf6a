from _gridnav import (
    Action,
    ConvexPolygon,
    DStarPlanner,
    EnvConfig,
    Environment,
    FootprintLibrary,
    GridMap,
    Scenario,
    check_collision,
    check_static_collision,
    covered_cells,
    generate_suite,
    parse_map,
    parse_scenario,
    plan,
    run_baseline,
    serialize_map,
)

__all__ = [
    "Action",
    "ConvexPolygon",
    "DStarPlanner",
    "EnvConfig",
    "Environment",
    "FootprintLibrary",
    "GridMap",
    "Scenario",
    "check_collision",
    "check_static_collision",
    "covered_cells",
    "generate_suite",
    "parse_map",
    "parse_scenario",
    "plan",
    "run_baseline",
    "serialize_map",
]
