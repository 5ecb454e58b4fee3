//! Exact double oracle dynamics on partially-observable stochastic games.
//!
//! Everything is exact rational arithmetic: games ([`posg`]), equilibria of
//! normal-form games ([`equilibrium`]), best responses ([`response`]), the
//! iterative dynamics ([`dynamics`]) and the lower-bound game families
//! ([`families`]).

pub mod dynamics;
pub mod equilibrium;
pub mod families;
pub mod game_format;
pub mod lp;
pub mod normal_form;
pub mod posg;
pub mod rational;
pub mod response;

pub use normal_form::NormalFormGame;
pub use posg::{MixedPolicy, Player, Posg, PosgError, PosgSpec, PurePolicy, StateSpec};
pub use rational::Q;
