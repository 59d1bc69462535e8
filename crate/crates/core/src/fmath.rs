//! Float math shims: `std` intrinsics when available, `libm` otherwise.

#![allow(dead_code)]

macro_rules! shim {
    ($name:ident, $libm:ident, 1) => {
        #[cfg(feature = "std")]
        #[inline]
        pub fn $name(x: f64) -> f64 {
            f64::$name(x)
        }
        #[cfg(not(feature = "std"))]
        #[inline]
        pub fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    };
    ($name:ident, $libm:ident, 2) => {
        #[cfg(feature = "std")]
        #[inline]
        pub fn $name(x: f64, y: f64) -> f64 {
            f64::$name(x, y)
        }
        #[cfg(not(feature = "std"))]
        #[inline]
        pub fn $name(x: f64, y: f64) -> f64 {
            libm::$libm(x, y)
        }
    };
}

shim!(exp, exp, 1);
shim!(ln, log, 1);
shim!(sqrt, sqrt, 1);
shim!(sin, sin, 1);
shim!(cos, cos, 1);
shim!(abs, fabs, 1);
shim!(floor, floor, 1);
shim!(ceil, ceil, 1);
shim!(round, round, 1);
shim!(atan2, atan2, 2);
shim!(powf, pow, 2);

#[inline]
pub fn hypot2(x: f64, y: f64) -> f64 {
    sqrt(x * x + y * y)
}
