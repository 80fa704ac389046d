pub mod density;
pub mod price;
pub mod verify;
