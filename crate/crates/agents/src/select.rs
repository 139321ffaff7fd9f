use crate::AgentError;

/// Number of candidates kept for `keep_fraction` of `n` when rewards are
/// distinct.
pub fn keep_count(n: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize
}

/// Keeps the candidates whose reward reaches the reward of the k-th best,
/// with k = ceil(keep_fraction·n). Ties at the threshold are kept and the
/// input order is preserved.
pub fn select_models<T: Clone>(candidates: &[(T, f64)], keep_fraction: f64) -> Result<Vec<T>, AgentError> {
    if candidates.is_empty() {
        return Err(AgentError::EmptyCandidates);
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(AgentError::InvalidConfig(format!("keep fraction {keep_fraction} outside (0, 1]")));
    }
    if candidates.iter().any(|(_, r)| !r.is_finite()) {
        return Err(AgentError::InvalidConfig("non-finite candidate reward".into()));
    }
    let k = keep_count(candidates.len(), keep_fraction).max(1);
    let mut rewards: Vec<f64> = candidates.iter().map(|(_, r)| *r).collect();
    rewards.sort_by(|a, b| b.total_cmp(a));
    let threshold = rewards[k - 1];
    Ok(candidates.iter().filter(|(_, r)| *r >= threshold).map(|(c, _)| c.clone()).collect())
}
