//! Dense f64 polynomials in the monomial basis, lowest degree first.

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(p, a)| p as f64 * a).collect()
}

pub fn pow(a: &[f64], n: u32) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| mul(&acc, a))
}

/// Shifted Legendre polynomials `L_p(2x − 1)`, p = 0..=n.
pub fn shifted_legendre(n: usize) -> Vec<Vec<f64>> {
    let z = [-1.0, 2.0];
    let mut out = vec![vec![1.0]];
    if n >= 1 {
        out.push(z.to_vec());
    }
    for p in 1..n {
        let pf = p as f64;
        let a = mul(&z, &out[p]);
        let b = &out[p - 1];
        let len = a.len().max(b.len());
        let next: Vec<f64> = (0..len)
            .map(|i| ((2.0 * pf + 1.0) * a.get(i).unwrap_or(&0.0) - pf * b.get(i).unwrap_or(&0.0)) / (pf + 1.0))
            .collect();
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_values() {
        let l = shifted_legendre(4);
        // L_2(z) = (3z² − 1)/2 at z = 2x − 1, x = 0.75 → z = 0.5
        assert!((eval(&l[2], 0.75) - (3.0 * 0.25 - 1.0) / 2.0).abs() < 1e-14);
        for p in 0..=4 {
            assert!((eval(&l[p], 1.0) - 1.0).abs() < 1e-13);
        }
    }
}
