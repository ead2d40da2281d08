#![allow(dead_code)]

pub mod calibration;
