use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Poisson-distributed number of harvested units with mean `rate`.
pub fn sample_energy<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u32 {
    if rate <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(rate)
        .expect("energy rate must be finite and positive")
        .sample(rng);
    n as u32
}

/// 1 iff the battery covers the transmit power.
pub fn transmit_indicator(battery: u32, tx_power: u32) -> u8 {
    u8::from(battery >= tx_power)
}

/// `min{C, B + E - z*I*P}`.
///
/// Panics if the transmission would draw more energy than the battery holds;
/// that can only happen through a bug in the caller.
pub fn battery_step(
    battery: u32,
    arrival: u32,
    transmitted: u8,
    scheduled: u8,
    tx_power: u32,
    capacity: u32,
) -> u32 {
    let spent = u64::from(transmitted) * u64::from(scheduled) * u64::from(tx_power);
    assert!(
        spent <= u64::from(battery),
        "transmission feasibility violated: spending {spent} from battery {battery}"
    );
    let next = u64::from(battery) + u64::from(arrival) - spent;
    next.min(u64::from(capacity)) as u32
}
