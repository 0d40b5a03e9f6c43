//! Counter-based random streams.
//!
//! Every random quantity in a simulation is addressed by
//! `(master seed, user index, stream tag, block counter)` and produced by the
//! Philox4x32-10 bijection. A user's draws therefore do not depend on how many
//! other users exist, which worker simulates them, or in which order.
//!
//! Layout of one Philox invocation:
//!
//! * key     = the 64-bit master seed, split into two words
//! * counter = `[block_lo, block_hi, user_lo, user_hi | tag << 24]`
//!
//! User indices are limited to 56 bits.

use rand_core::RngCore;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Largest user index a stream can address.
pub const MAX_USER_INDEX: u64 = (1 << 56) - 1;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One application of Philox4x32 with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Independent sub-streams of one user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StreamTag {
    /// Multiplicative attention noise.
    Noise = 1,
    /// Fan recruitment draws.
    Fans = 2,
    /// Inter-submission gaps.
    Gaps = 3,
    /// The user's arrival time.
    Arrival = 4,
    /// Free for analysis code (shuffles, resampling).
    Aux = 5,
}

/// Identifies one simulated user: the run's master seed plus the user's index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UserSeed {
    pub master: u64,
    pub user: u64,
}

impl UserSeed {
    pub fn new(master: u64, user: u64) -> Self {
        assert!(user <= MAX_USER_INDEX, "user index {user} exceeds 56 bits");
        UserSeed { master, user }
    }

    pub fn stream(&self, tag: StreamTag) -> PhiloxStream {
        PhiloxStream::new(self.master, self.user, tag)
    }
}

/// A sequential generator over one `(seed, user, tag)` address.
#[derive(Clone, Debug)]
pub struct PhiloxStream {
    key: [u32; 2],
    counter: [u32; 4],
    block: u64,
    buf: [u32; 4],
    pos: usize,
}

impl PhiloxStream {
    pub fn new(master: u64, user: u64, tag: StreamTag) -> Self {
        debug_assert!(user <= MAX_USER_INDEX);
        let key = [master as u32, (master >> 32) as u32];
        let counter = [
            0,
            0,
            user as u32,
            ((user >> 32) as u32 & 0x00FF_FFFF) | (u32::from(tag as u8) << 24),
        ];
        PhiloxStream {
            key,
            counter,
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    /// Index of the next block that will be generated.
    pub fn block(&self) -> u64 {
        self.block
    }

    fn refill(&mut self) {
        self.counter[0] = self.block as u32;
        self.counter[1] = (self.block >> 32) as u32;
        self.buf = philox4x32_10(self.counter, self.key);
        self.block = self.block.wrapping_add(1);
        self.pos = 0;
    }

    #[inline]
    pub fn next_word(&mut self) -> u32 {
        if self.pos == 4 {
            self.refill();
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        let bits = RngCore::next_u64(self) >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for PhiloxStream {
    fn next_u32(&mut self) -> u32 {
        self.next_word()
    }

    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_word());
        let hi = u64::from(self.next_word());
        lo | (hi << 32)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let w = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
