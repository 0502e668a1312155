pub mod annotations;
pub mod flo;
pub mod index_store;
pub mod pnm;
