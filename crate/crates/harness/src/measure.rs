//! Exact complexity measures of an instance as a flat `key=value` report.

use amdl_core::complexity::{
    disagreement_coefficient, star_number, star_number_max, theta_max, vc_dimension, DEFAULT_STAR_CAP,
};
use amdl_core::domain::{best_nu, MdlInstance};

use crate::error::Result;
use crate::run::VC_CAP;

/// Measures at radius `r0`. θ is taken around the lowest-index optimal
/// hypothesis; the averaged distribution uses radius `r0 / k`.
pub fn measure(inst: &MdlInstance, r0: f64) -> Result<Vec<(String, String)>> {
    let class = inst.class();
    let (best, nu) = best_nu(inst);
    let hstar = class.hypothesis(best);
    let vc = vc_dimension(class, VC_CAP.min(inst.num_points()))?;
    let star_ref = star_number(class, hstar, DEFAULT_STAR_CAP)?;
    let star = star_number_max(class, DEFAULT_STAR_CAP)?;
    let mut out = vec![
        ("m".to_string(), inst.num_points().to_string()),
        ("hypotheses".into(), class.len().to_string()),
        ("k".into(), inst.k().to_string()),
        ("noiseless".into(), inst.is_noiseless().to_string()),
        ("nu".into(), nu.to_string()),
        ("nu_hypothesis".into(), best.to_string()),
        ("vc_dim".into(), vc.to_string()),
        ("star_number".into(), star.value.to_string()),
        ("star_number_lower_bound_only".into(), star.lower_bound_only.to_string()),
        ("star_number_ref".into(), star_ref.value.to_string()),
        ("r0".into(), r0.to_string()),
    ];
    for (i, d) in inst.distributions().iter().enumerate() {
        out.push((format!("theta_{i}"), disagreement_coefficient(d, class, hstar, r0)?.to_string()));
    }
    out.push(("theta_max".into(), theta_max(inst, hstar, r0)?.to_string()));
    let avg = inst.average_distribution()?;
    let r_avg = r0 / inst.k() as f64;
    out.push(("theta_avg".into(), disagreement_coefficient(&avg, class, hstar, r_avg)?.to_string()));
    Ok(out)
}

pub fn format_report(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
