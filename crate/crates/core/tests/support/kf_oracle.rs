//! Reference Kalman filter written with explicit loops over plain arrays.
//! State order is `[x, y, vx, vy]`; only the position is measured.

pub type M4 = [[f64; 4]; 4];

pub fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &M4) -> M4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn predict(x: [f64; 4], p: &M4, dt: f64, q: [f64; 2], u: [f64; 2]) -> ([f64; 4], M4) {
    let a: M4 = [[1.0, 0.0, dt, 0.0], [0.0, 1.0, 0.0, dt], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let h = dt * dt / 2.0;
    let b = [[h, 0.0], [0.0, h], [dt, 0.0], [0.0, dt]];
    let mut xn = [0.0; 4];
    for i in 0..4 {
        for k in 0..4 {
            xn[i] += a[i][k] * x[k];
        }
        xn[i] += b[i][0] * u[0] + b[i][1] * u[1];
    }
    let mut pn = mul(&mul(&a, p), &transpose(&a));
    for i in 0..4 {
        for j in 0..4 {
            pn[i][j] += b[i][0] * q[0] * b[j][0] + b[i][1] * q[1] * b[j][1];
        }
    }
    (xn, pn)
}

pub fn update(x: [f64; 4], p: &M4, r: [[f64; 2]; 2], z: [f64; 2]) -> ([f64; 4], M4) {
    let s = [[p[0][0] + r[0][0], p[0][1] + r[0][1]], [p[1][0] + r[1][0], p[1][1] + r[1][1]]];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let si = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let mut g = [[0.0; 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            g[i][j] = p[i][0] * si[0][j] + p[i][1] * si[1][j];
        }
    }
    let inn = [z[0] - x[0], z[1] - x[1]];
    let mut xn = x;
    for i in 0..4 {
        xn[i] += g[i][0] * inn[0] + g[i][1] * inn[1];
    }
    let mut pn = *p;
    for i in 0..4 {
        for j in 0..4 {
            pn[i][j] -= g[i][0] * p[0][j] + g[i][1] * p[1][j];
        }
    }
    (xn, pn)
}
