use llcp::cones::{in_exp_cone, in_exp_dual};

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Best point of the ray family `y·(t, 1, eᵗ)` for fixed `t`.
fn ray_point(v: [f64; 3], t: f64) -> [f64; 3] {
    let d = [t, 1.0, t.exp()];
    let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let y = ((v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / dd).max(0.0);
    [y * d[0], y * d[1], y * d[2]]
}

/// Stationarity of `⟨v, d(t)⟩² / ‖d(t)‖²` in `t`.
fn stationarity(v: [f64; 3], t: f64) -> f64 {
    let e = t.exp();
    let a = v[0] * t + v[1] + v[2] * e;
    let da = v[0] + v[2] * e;
    let q = t * t + 1.0 + e * e;
    let dq = 2.0 * t + 2.0 * e * e;
    2.0 * da * q - a * dq
}

fn bisect(v: [f64; 3], mut a: f64, mut b: f64) -> f64 {
    let mut fa = stationarity(v, a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = stationarity(v, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Projection oracle from the optimality conditions `p ∈ K`, `p - v ∈ K*`,
/// `⟨p, p - v⟩ = 0`: the trivial cases are tested directly, otherwise the
/// projection lies on a boundary ray `y·(t, 1, eᵗ)`, found by scanning `t`
/// for sign changes of the stationarity condition and bisecting.
pub fn oracle(v: [f64; 3]) -> [f64; 3] {
    let neg = [-v[0], -v[1], -v[2]];
    if in_exp_cone(v, 0.0) {
        return v;
    }
    if in_exp_dual(neg, 0.0) {
        return [0.0; 3];
    }
    let face = [v[0].min(0.0), 0.0, v[2].max(0.0)];
    let face_dual = [face[0] - v[0], face[1] - v[1], face[2] - v[2]];
    if in_exp_dual(face_dual, 1e-14) {
        return face;
    }
    let lo = if v[1] > 0.0 {
        (v[0] / v[1] - 10.0).min(-300.0)
    } else {
        -300.0
    };
    let (hi, steps) = (40.0, 200_000);
    let h = (hi - lo) / steps as f64;
    let mut best: Option<[f64; 3]> = None;
    let mut prev = stationarity(v, lo);
    for k in 1..=steps {
        let t1 = lo + h * k as f64;
        let cur = stationarity(v, t1);
        if prev.signum() != cur.signum() {
            let t = bisect(v, t1 - h, t1);
            let p = ray_point(v, t);
            let normal = [t.exp(), (1.0 - t) * t.exp(), -1.0];
            let outward: f64 = (0..3).map(|i| (v[i] - p[i]) * normal[i]).sum();
            if p[1] > 0.0 && outward >= 0.0 && best.is_none_or(|b| dist(v, p) < dist(v, b)) {
                best = Some(p);
            }
        }
        prev = cur;
    }
    best.expect("oracle found no boundary point")
}
