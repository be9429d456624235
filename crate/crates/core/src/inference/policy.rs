use rand::Rng;

use super::{Categorical, InferenceError, Policy};

/// How the executed policy is picked from the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Deterministic,
    Sampled,
}

/// `softmax(ln prior - precision * G)`; `+inf` entries of `G` get zero mass.
pub fn policy_posterior(
    g: &[f64],
    policy_prior: &Categorical,
    precision: f64,
) -> Result<Categorical, InferenceError> {
    if g.len() != policy_prior.len() {
        return Err(InferenceError::Dimension(format!(
            "{} EFE values for a prior over {} policies",
            g.len(),
            policy_prior.len()
        )));
    }
    if !(precision > 0.0) || !precision.is_finite() {
        return Err(InferenceError::InvalidModel(format!(
            "policy precision must be positive, got {precision}"
        )));
    }
    if g.iter().any(|x| x.is_nan() || *x == f64::NEG_INFINITY) {
        return Err(InferenceError::InvalidModel(
            "EFE values must be finite or +inf".into(),
        ));
    }
    let logits: Vec<f64> = g
        .iter()
        .zip(policy_prior.probs())
        .map(|(&gi, &p)| {
            if gi == f64::INFINITY || p == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln() - precision * gi
            }
        })
        .collect();
    if logits.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(InferenceError::NoFeasiblePolicy);
    }
    Categorical::softmax(&logits)
}

/// Index of the executed policy.
pub fn select_policy<R: Rng + ?Sized>(
    posterior: &Categorical,
    mode: SelectionMode,
    rng: &mut R,
) -> usize {
    match mode {
        SelectionMode::Deterministic => posterior.argmax(),
        SelectionMode::Sampled => {
            let u: f64 = rng.random();
            let mut cum = 0.0;
            let mut last_nonzero = 0;
            for (i, &p) in posterior.probs().iter().enumerate() {
                if p > 0.0 {
                    last_nonzero = i;
                    cum += p;
                    if u < cum {
                        return i;
                    }
                }
            }
            last_nonzero
        }
    }
}

/// First action of the selected policy.
pub fn select_action<R: Rng + ?Sized>(
    posterior: &Categorical,
    policies: &[Policy],
    mode: SelectionMode,
    rng: &mut R,
) -> Result<usize, InferenceError> {
    if posterior.len() != policies.len() {
        return Err(InferenceError::Dimension(format!(
            "posterior over {} policies, {} policies given",
            posterior.len(),
            policies.len()
        )));
    }
    Ok(policies[select_policy(posterior, mode, rng)].first_action())
}
