pub mod fidelity;
pub mod oracle;
pub mod reference;
