//! Ricci curvature of warped products, canonical variations of Riemannian
//! submersions, and the class-certificate calculus for iterated bundles, each
//! closed form checked against a finite-difference chart oracle.

pub mod bundlecalc;
pub mod exprs;
pub mod lie;
pub mod oracle;
pub mod parallel;
pub mod positivity;
pub mod variation;
pub mod warped;
