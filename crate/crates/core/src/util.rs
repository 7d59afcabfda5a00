/// Median of a slice; even counts average the two central values.
/// Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based child seed: `splitmix64(master + golden * (counter + 1))`.
/// Child streams depend only on (master, counter), never on scheduling.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    splitmix64(master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(counter.wrapping_add(1))))
}
