pub mod dempster;
