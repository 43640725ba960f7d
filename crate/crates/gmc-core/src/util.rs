//! Small numeric helpers shared across modules.

/// Ceiling in double precision with a guard: values within 1e-9 of an
/// integer are taken as that integer, so representation noise just above
/// an exact integer target does not inflate the result, while values just
/// below it still round up.
pub(crate) fn ceil_guarded(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r
    } else {
        x.ceil()
    }
}

/// `base^e`, routed through `powi` for integer exponents. The libm
/// `powf` can be an ulp off even on integer powers, which would break
/// exact reproduction of published parameter values like `eta = 6400`;
/// negative integer exponents go through the reciprocal so that e.g.
/// `0.1^-2` lands exactly on 100.
pub(crate) fn pow_checked(base: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() <= 64.0 {
        let n = e as i32;
        if n >= 0 {
            base.powi(n)
        } else {
            (1.0 / base).powi(-n)
        }
    } else {
        base.powf(e)
    }
}

/// Least odd integer >= x, with the same integer-snap guard; at least 1.
pub(crate) fn least_odd_geq(x: f64) -> u64 {
    let v = ceil_guarded(x).max(1.0) as u64;
    if v % 2 == 0 {
        v + 1
    } else {
        v
    }
}
