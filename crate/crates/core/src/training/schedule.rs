/// Step-decay learning rate: `base · factor^k`, where `k` counts the milestones
/// already reached (`iteration >= milestone`).
pub fn learning_rate(base: f64, milestones: &[u64], factor: f64, iteration: u64) -> f64 {
    milestones
        .iter()
        .filter(|&&m| iteration >= m)
        .fold(base, |lr, _| lr * factor)
}
