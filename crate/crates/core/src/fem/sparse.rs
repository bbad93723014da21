use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sparsity; each row's columns are sorted and
    /// deduplicated here.
    pub fn from_pattern(mut rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let val = vec![0.0; col.len()];
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j as u32);
        }
        let mut m = Self::from_pattern(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &triplets)
    }

    #[inline]
    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col[lo..hi].binary_search(&(j as u32)).ok().map(|k| lo + k)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.position(i, j).expect("entry outside sparsity pattern");
        self.val[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.val[k])
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|K_ij - K_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k] as usize;
                worst = worst.max((self.val[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `xᵀ K x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖b - Kx‖ / ‖b‖`.
    pub tol: f64,
    /// Defaults to `50 sqrt(n) + 1000`.
    pub max_iter: Option<usize>,
    /// The system is singular with the constant vector as kernel; the right
    /// hand side is projected onto its range.
    pub constant_kernel: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: None,
            constant_kernel: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
    /// `|1ᵀb| / (‖b‖₁)` before projection, for singular systems.
    pub kernel_defect: f64,
}

fn project_constants(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Jacobi preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<(Vec<f64>, CgReport)> {
    pcg_from(a, b, None, opts)
}

/// [`pcg`] started from `x0`; the residual is still measured relative to
/// `‖b‖`, so a good start can finish in zero iterations.
pub fn pcg_from(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: CgOptions) -> Result<(Vec<f64>, CgReport)> {
    let n = a.n;
    assert_eq!(b.len(), n, "right hand side length");
    let mut report = CgReport::default();
    if n == 0 {
        return Ok((Vec::new(), report));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularSystem(i));
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    if opts.constant_kernel {
        let l1: f64 = r.iter().map(|x| x.abs()).sum();
        if l1 > 0.0 {
            report.kernel_defect = r.iter().sum::<f64>().abs() / l1;
        }
        project_constants(&mut r);
    }
    let bnorm = dot(&r, &r).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, report));
    }
    if let Some(x0) = x0 {
        x.copy_from_slice(x0);
        let ax = a.mul_vec(&x);
        for (ri, ai) in r.iter_mut().zip(&ax) {
            *ri -= ai;
        }
        if opts.constant_kernel {
            project_constants(&mut r);
        }
        if dot(&r, &r).sqrt() <= opts.tol * bnorm {
            report.residual = dot(&r, &r).sqrt() / bnorm;
            return Ok((x, report));
        }
    }
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| (50.0 * (n as f64).sqrt()) as usize + 1000);
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rnorm = dot(&r, &r).sqrt();
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            report.iterations = it;
            report.residual = rnorm / bnorm;
            if rnorm / bnorm <= opts.tol {
                break;
            }
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if opts.constant_kernel {
            project_constants(&mut r);
        }
        rnorm = dot(&r, &r).sqrt();
        report.iterations = it;
        report.residual = rnorm / bnorm;
        if rnorm <= opts.tol * bnorm {
            return Ok((x, report));
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if report.residual <= opts.tol {
        return Ok((x, report));
    }
    Err(Error::NoConvergence {
        iterations: report.iterations,
        residual: report.residual,
    })
}
