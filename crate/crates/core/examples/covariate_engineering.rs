//! Read a panel CSV, center a treatment within patient and lag it, then
//! look at the QR-rotated design the sampler works with.

use comorbidity_hmm::data::{center_within, lag_covariate, read_panel, CovariateSpec};
use comorbidity_hmm::transforms::CovariateDesign;

const PANEL: &str = "\
patient_id,t,y_a,y_b,treatment,age
a,1,4.56,2.90,0,61
a,2,4.71,3.40,1,61
a,3,4.55,3.38,1,61
b,1,4.69,3.45,1,48
b,2,4.70,2.85,0,48
b,3,4.54,2.88,0,48
b,4,4.56,2.84,1,48
";

fn main() -> comorbidity_hmm::Result<()> {
    let raw = read_panel(PANEL.as_bytes(), &CovariateSpec::default())?;
    let centered = center_within(&raw, "treatment")?;
    let lagged = lag_covariate(&centered, "treatment_centered", 1)?;
    let data = lagged.select_covariates(&[
        "treatment_centered".into(),
        "treatment_centered_lag1".into(),
        "age".into(),
    ])?;
    for p in &data.patients {
        for (t, x) in p.t.iter().zip(&p.x) {
            println!("{} t={t}: {x:.3?}", p.id);
        }
    }

    let design = CovariateDesign::from_data(&data)?;
    println!("grand means {:.3?}", design.means);
    for p in &data.patients {
        println!("{} rotated first row {:.3?}", p.id, design.rotate_row(&p.x[0]));
    }
    Ok(())
}
