#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/scoring-rules.md")]
mod scoring_rules {}
#[doc = include_str!("../../../book/src/environments.md")]
mod environments {}
#[doc = include_str!("../../../book/src/optimal-reports.md")]
mod optimal_reports {}
#[doc = include_str!("../../../book/src/bounds.md")]
mod bounds {}
#[doc = include_str!("../../../book/src/designing-rules.md")]
mod designing_rules {}
#[doc = include_str!("../../../book/src/games.md")]
mod games {}
#[doc = include_str!("../../../book/src/experiments.md")]
mod experiments {}
