use num_complex::Complex64;

/// Determinant of a square matrix (row-major) by LU with partial pivoting.
pub fn determinant(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .expect("nonempty range");
        if m[p][k] == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        let pivot = m[k][k];
        det *= pivot;
        for i in k + 1..n {
            let f = m[i][k] / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k + 1..n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
    }
    det
}
