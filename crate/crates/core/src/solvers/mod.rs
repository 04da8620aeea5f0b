pub mod lp;
pub mod nnls;
pub mod phase;

pub use crate::numerics::golden_section as golden_section_min;

#[cfg(test)]
mod tests {
    use super::golden_section_min;
    use crate::statdim::recipe_integrand_l1;

    #[test]
    fn golden_section_examples() {
        let (x, _) = golden_section_min(|t| (t - 2.0).powi(2), 0.0, 5.0, 1e-10);
        assert!((x - 2.0).abs() <= 1e-8);
        let (x, _) = golden_section_min(|t| (t - 1.0).abs(), 0.0, 5.0, 1e-8);
        assert!((x - 1.0).abs() <= 1e-8);
        let (tau, v) = golden_section_min(|t| recipe_integrand_l1(100, 10, t), 0.0, 20.0, 1e-10);
        assert!(tau > 0.0 && v < recipe_integrand_l1(100, 10, 0.0));
        assert_eq!(recipe_integrand_l1(100, 10, 0.0), 100.0);
    }
}
