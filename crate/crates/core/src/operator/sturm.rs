//! Real symmetric tridiagonal eigenproblems by Sturm counts.
//!
//! Eigenvalues are found by bisection on the Sturm count (sign changes of the leading
//! principal minors). Eight bisection lanes advance together through one division-free
//! recurrence, which the compiler vectorises.

/// Absolute eigenvalue tolerance.
pub const EIGEN_TOL: f64 = 1e-10;

const LANES: usize = 8;
const RESCALE: usize = 16;

/// Replaces an exact zero minor by a tiny value of opposite sign to its predecessor, so it
/// counts as one sign change.
#[inline(always)]
fn fix_zero(v: f64, prev: f64) -> f64 {
    if v == 0.0 {
        -prev * f64::EPSILON
    } else {
        v
    }
}

/// `(2^-e, e)` with `m = 1.x * 2^e`; exact for normal inputs.
#[inline(always)]
fn pow2_normalizer(m: f64) -> (f64, i64) {
    let e = (((m.to_bits() >> 52) & 0x7ff) as i64).clamp(1, 2045);
    (f64::from_bits(((2046 - e) as u64) << 52), e - 1023)
}

/// Sturm count and scaled determinant `det * 2^exp2` at a shift.
#[derive(Debug, Clone, Copy)]
struct Probe {
    x: f64,
    count: usize,
    det: f64,
    exp2: i64,
}

/// Bracket `lo < lambda_k <= hi` for one eigenvalue index.
#[derive(Debug, Clone, Copy)]
struct Lane {
    k: usize,
    lo: Probe,
    hi: Probe,
    tol: f64,
    /// Side updated last (`Some(true)` = hi), for the Illinois halving rule.
    last_hi: Option<bool>,
    /// Illinois weights applied to the retained endpoint values.
    w_lo: f64,
    w_hi: f64,
}

impl Lane {
    fn new(k: usize, lo: Probe, hi: Probe, tol: f64) -> Self {
        Self { k, lo, hi, tol, last_hi: None, w_lo: 1.0, w_hi: 1.0 }
    }

    fn width_tol(&self) -> f64 {
        self.tol.max(4.0 * f64::EPSILON * self.lo.x.abs().max(self.hi.x.abs()))
    }

    fn done(&self) -> bool {
        self.hi.x - self.lo.x <= self.width_tol()
    }

    fn isolated(&self) -> bool {
        self.lo.count == self.k && self.hi.count == self.k + 1 && self.lo.det.is_finite() && self.hi.det.is_finite()
    }

    fn estimate(&self) -> f64 {
        0.5 * (self.lo.x + self.hi.x)
    }

    fn next_point(&self) -> f64 {
        let mid = self.estimate();
        if self.done() || !self.isolated() {
            return mid;
        }
        // Regula falsi weight |f_lo| / (|f_lo| + |f_hi|) from scaled determinants.
        let (a, b) = (self.lo.det.abs() * self.w_lo, self.hi.det.abs() * self.w_hi);
        let shift = (self.lo.exp2 - self.hi.exp2).clamp(-1000, 1000) as i32;
        let ratio = a / b * 2f64.powi(shift);
        let w = if ratio.is_finite() { ratio / (1.0 + ratio) } else { 1.0 };
        let width = self.hi.x - self.lo.x;
        let nudge = 0.5 * self.width_tol();
        let x = self.lo.x + width * w;
        if !(x > self.lo.x && x < self.hi.x) {
            return mid;
        }
        // Step past a pinned root so the far end closes in.
        x.clamp(self.lo.x + nudge.min(0.5 * width), self.hi.x - nudge.min(0.5 * width))
    }

    fn update(&mut self, p: &Probe) {
        if !(p.x > self.lo.x && p.x < self.hi.x) {
            return;
        }
        let moved_hi = p.count > self.k;
        if self.isolated() {
            if self.last_hi == Some(moved_hi) {
                if moved_hi {
                    self.w_lo *= 0.5;
                } else {
                    self.w_hi *= 0.5;
                }
            } else {
                self.w_lo = 1.0;
                self.w_hi = 1.0;
            }
            self.last_hi = Some(moved_hi);
        }
        self.set(p, moved_hi);
    }

    /// Tightens the bracket with a probe made for another lane.
    fn absorb(&mut self, p: &Probe) {
        if p.x > self.lo.x && p.x < self.hi.x {
            let moved_hi = p.count > self.k;
            self.set(p, moved_hi);
        }
    }

    fn set(&mut self, p: &Probe, moved_hi: bool) {
        if moved_hi {
            if p.count < self.hi.count || !self.isolated() {
                self.w_lo = 1.0;
                self.w_hi = 1.0;
                self.last_hi = None;
            }
            self.hi = *p;
        } else {
            if p.count > self.lo.count || !self.isolated() {
                self.w_lo = 1.0;
                self.w_hi = 1.0;
                self.last_hi = None;
            }
            self.lo = *p;
        }
    }
}

/// Symmetric tridiagonal matrix with diagonal `d`, off-diagonal `e` and its squares `e2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub e2: Vec<f64>,
}

impl SymTridiagonal {
    /// # Panics
    /// When `e.len() + 1 != d.len()` for nonempty `d`.
    #[must_use]
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert!(d.is_empty() || e.len() + 1 == d.len(), "off-diagonal length mismatch");
        let e2: Vec<f64> = e.iter().map(|x| x * x).collect();
        Self { d, e, e2 }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.d.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Gershgorin interval containing the spectrum.
    #[must_use]
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - left - right);
            hi = hi.max(self.d[i] + left + right);
        }
        (lo, hi)
    }

    /// Sign changes of the leading principal minors `p_i(x) = det(T_i - x)`, and the scaled
    /// determinant `p_n(x)`.
    ///
    /// The three-term recurrence has no divisions; every [`RESCALE`] steps each lane is
    /// multiplied by an exact power of two so signs are those of the unscaled sequence.
    fn probe_lanes(&self, x: &[f64; LANES]) -> [Probe; LANES] {
        let n = self.d.len();
        let mut prev = [1.0f64; LANES];
        let mut cur = [0.0f64; LANES];
        let mut c = [0u64; LANES];
        let mut exp2 = [0i64; LANES];
        for l in 0..LANES {
            cur[l] = fix_zero(self.d[0] - x[l], 1.0);
            c[l] = cur[l].to_bits() >> 63;
        }
        let mut i = 1;
        while i < n {
            let end = (i + RESCALE).min(n);
            for j in i..end {
                let dj = self.d[j];
                let ej = self.e2[j - 1];
                for l in 0..LANES {
                    let next = fix_zero((dj - x[l]) * cur[l] - ej * prev[l], cur[l]);
                    c[l] += (next.to_bits() ^ cur[l].to_bits()) >> 63;
                    prev[l] = cur[l];
                    cur[l] = next;
                }
            }
            for l in 0..LANES {
                let (s, e) = pow2_normalizer(cur[l].abs().max(prev[l].abs()));
                cur[l] *= s;
                prev[l] *= s;
                exp2[l] += e;
            }
            i = end;
        }
        std::array::from_fn(|l| Probe { x: x[l], count: c[l] as usize, det: cur[l], exp2: exp2[l] })
    }

    /// Number of eigenvalues below `x`.
    #[must_use]
    pub fn count_below(&self, x: f64) -> usize {
        self.probe_lanes(&[x; LANES])[0].count
    }

    /// All eigenvalues in ascending order, each within `tol` (absolute).
    ///
    /// Each lane bisects on the Sturm count until its eigenvalue is the only one in the
    /// bracket, then switches to the Illinois variant of regula falsi on the determinant.
    /// Eigenvalues closer than `tol` are returned as a repeated midpoint.
    #[must_use]
    pub fn eigenvalues(&self, tol: f64) -> Vec<f64> {
        let n = self.d.len();
        if n <= 1 {
            return self.d.clone();
        }
        let (g_lo, g_hi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * g_lo.abs().max(g_hi.abs()) + tol;
        let bottom = Probe { x: g_lo - pad, count: 0, det: f64::NAN, exp2: 0 };
        let top = Probe { x: g_hi + pad, count: n, det: f64::NAN, exp2: 0 };
        let mut out = vec![0.0; n];
        // Probes from the previous chunk tighten the next chunk's brackets.
        let mut probes: Vec<Probe> = Vec::new();
        let mut floor = bottom;
        let mut start = 0;
        while start < n {
            let mut lanes: [Lane; LANES] =
                std::array::from_fn(|l| Lane::new((start + l).min(n - 1), floor, top, tol));
            for p in &probes {
                for lane in &mut lanes {
                    lane.absorb(p);
                }
            }
            probes.clear();
            while !lanes.iter().all(Lane::done) {
                let xs: [f64; LANES] = std::array::from_fn(|l| lanes[l].next_point());
                let results = self.probe_lanes(&xs);
                for (l, p) in results.iter().enumerate() {
                    lanes[l].update(p);
                }
                for p in &results {
                    for lane in &mut lanes {
                        lane.absorb(p);
                    }
                }
                probes.extend_from_slice(&results);
            }
            let end = (start + LANES).min(n);
            for l in 0..end - start {
                out[start + l] = lanes[l].estimate();
            }
            floor = lanes[end - start - 1].lo;
            start = end;
        }
        out
    }

    /// Eigenvector for the eigenvalue `mu` by inverse iteration, unit 2-norm.
    #[must_use]
    pub fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.d.len();
        if n == 1 {
            return vec![1.0];
        }
        let scale = self.d.iter().map(|x| x.abs()).chain(self.e.iter().map(|x| x.abs())).fold(1.0, f64::max);
        let shift = mu + scale * 4.0 * f64::EPSILON;
        let lu = TridiagonalLu::factor(&self.d, &self.e, shift, scale * f64::EPSILON);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 97) as f64 / 97.0).collect();
        normalize(&mut v);
        for _ in 0..4 {
            lu.solve(&mut v);
            normalize(&mut v);
        }
        v
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// LU factorisation with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(d: &[f64], e: &[f64], shift: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swap = vec![false; n];
        // Row i of the working matrix: (a, b, c) at columns (i, i+1, i+2).
        let mut a = d[0] - shift;
        let mut b = if n > 1 { e[0] } else { 0.0 };
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            let sub = e[i];
            let next_diag = d[i + 1] - shift;
            let next_sup = if i + 2 < n { e[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                // Swap rows i and i+1.
                swap[i] = true;
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_sup;
                let m = a / sub;
                l[i] = m;
                a = b - m * next_diag;
                b = -m * next_sup;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = 0.0;
                let m = sub / piv;
                l[i] = m;
                a = next_diag - m * b;
                b = next_sup;
            }
        }
        Self { u0, u1, u2, l, swap }
    }

    fn solve(&self, v: &mut [f64]) {
        let n = v.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                v.swap(i, i + 1);
            }
            v[i + 1] -= self.l[i] * v[i];
        }
        for i in (0..n).rev() {
            let mut s = v[i];
            if i + 1 < n {
                s -= self.u1[i] * v[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * v[i + 2];
            }
            v[i] = s / self.u0[i];
            if !v[i].is_finite() {
                v[i] = if v[i] > 0.0 { f64::MAX.sqrt() } else { -f64::MAX.sqrt() };
            }
        }
    }
}
