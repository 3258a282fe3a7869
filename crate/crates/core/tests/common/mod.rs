pub mod brute;
pub mod fd;
pub mod tdist;
