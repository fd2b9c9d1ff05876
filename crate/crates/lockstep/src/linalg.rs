//! Minimal 2x2 linear algebra used by the error model and the certificate
//! machinery.
//!
//! Everything in this crate lives in two dimensions, and every eigenvalue we
//! need has a closed form, so we hand-roll the handful of operations instead
//! of pulling in a general linear-algebra dependency. This keeps the
//! arithmetic transparent: each quantity is computed by exactly the formula
//! stated in its doc comment, with no hidden pivoting or iteration.
//!
//! Conventions:
//!
//! ```text
//! Mat2    general real 2x2 matrix, row-major fields m11 m12 / m21 m22
//! SymMat2 symmetric 2x2 matrix, stored as p11, p12 (= p21), p22
//! vectors are [f64; 2] arrays, index 0 first component
//! ```

// =========================================================================
// General 2x2 matrices
// =========================================================================

/// A general real 2x2 matrix in row-major layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    /// Builds a matrix from its four entries in row-major order.
    #[must_use]
    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    /// The identity matrix.
    #[must_use]
    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    /// Matrix product `self * rhs`.
    #[must_use]
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }

    /// Matrix-vector product `self * v`.
    #[must_use]
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Transpose.
    #[must_use]
    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Determinant.
    #[must_use]
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Entrywise maximum absolute difference to `other`.
    #[must_use]
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let d = [
            (self.m11 - other.m11).abs(),
            (self.m12 - other.m12).abs(),
            (self.m21 - other.m21).abs(),
            (self.m22 - other.m22).abs(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }
}

// =========================================================================
// Symmetric 2x2 matrices
// =========================================================================

/// A symmetric real 2x2 matrix, stored by its upper triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat2 {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
}

impl SymMat2 {
    /// Builds a symmetric matrix from its upper triangle.
    #[must_use]
    pub const fn new(p11: f64, p12: f64, p22: f64) -> Self {
        Self { p11, p12, p22 }
    }

    /// The zero matrix.
    #[must_use]
    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Diagonal matrix `diag(a, b)`.
    #[must_use]
    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    /// Trace.
    #[must_use]
    pub fn trace(&self) -> f64 {
        self.p11 + self.p22
    }

    /// Determinant.
    #[must_use]
    pub fn det(&self) -> f64 {
        self.p11 * self.p22 - self.p12 * self.p12
    }

    /// Eigenvalues in ascending order, by the exact closed form
    ///
    /// ```text
    /// lambda = tr/2 -+ sqrt((tr/2)^2 - det)
    ///        = tr/2 -+ sqrt(((p11 - p22)/2)^2 + p12^2)
    /// ```
    ///
    /// The second radicand is used because it is a sum of squares and never
    /// cancels, so the result stays accurate for nearly defective inputs.
    #[must_use]
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.p11 + self.p22);
        let half_gap = 0.5 * (self.p11 - self.p22);
        let radius = (half_gap * half_gap + self.p12 * self.p12).sqrt();
        (mid - radius, mid + radius)
    }

    /// Smallest eigenvalue.
    #[must_use]
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues().0
    }

    /// Largest eigenvalue.
    #[must_use]
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues().1
    }

    /// Whether the matrix is (strictly) positive definite: `p11 > 0` and
    /// `det > 0`, both by closed form. NaN entries fail the test.
    #[must_use]
    pub fn is_positive_definite(&self) -> bool {
        self.p11 > 0.0 && self.det() > 0.0
    }

    /// The quadratic form `v^T P v`.
    #[must_use]
    pub fn quadratic_form(&self, v: [f64; 2]) -> f64 {
        self.p11 * v[0] * v[0] + 2.0 * self.p12 * v[0] * v[1] + self.p22 * v[1] * v[1]
    }

    /// The congruence transform `B^T P B`, which is symmetric again.
    #[must_use]
    pub fn congruence(&self, b: &Mat2) -> SymMat2 {
        // P B first, then B^T (P B); the (1,2) and (2,1) entries of the
        // product agree exactly because both are computed from the same
        // factored expressions.
        let pb11 = self.p11 * b.m11 + self.p12 * b.m21;
        let pb12 = self.p11 * b.m12 + self.p12 * b.m22;
        let pb21 = self.p12 * b.m11 + self.p22 * b.m21;
        let pb22 = self.p12 * b.m12 + self.p22 * b.m22;
        SymMat2::new(
            b.m11 * pb11 + b.m21 * pb21,
            b.m11 * pb12 + b.m21 * pb22,
            b.m12 * pb12 + b.m22 * pb22,
        )
    }

    /// Difference `self - other`.
    #[must_use]
    pub fn sub(&self, other: &SymMat2) -> SymMat2 {
        SymMat2::new(
            self.p11 - other.p11,
            self.p12 - other.p12,
            self.p22 - other.p22,
        )
    }

    /// Conversion to a general matrix.
    #[must_use]
    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.p11, self.p12, self.p12, self.p22)
    }

    /// Eigenvalues of the (similar-to-symmetric) product `P^{-1} S` for a
    /// positive definite `P`, returned in ascending order.
    ///
    /// These are the generalized eigenvalues of the pencil `(S, P)`: roots of
    /// `det(S - lambda P) = 0`, expanded as the quadratic
    ///
    /// ```text
    /// det(P) lambda^2 - (s11 p22 - 2 s12 p12 + s22 p11) lambda + det(S) = 0
    /// ```
    ///
    /// Both roots are real because `P > 0` makes the pencil definite.
    #[must_use]
    pub fn generalized_eigenvalues(&self, p: &SymMat2) -> (f64, f64) {
        let a = p.det();
        let b = -(self.p11 * p.p22 - 2.0 * self.p12 * p.p12 + self.p22 * p.p11);
        let c = self.det();
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        // Stable quadratic roots: compute the larger-magnitude root first.
        let q = -0.5 * (b + b.signum() * disc);
        let (r1, r2) = if q == 0.0 {
            (0.0, 0.0)
        } else {
            (q / a, c / q)
        };
        if r1 <= r2 {
            (r1, r2)
        } else {
            (r2, r1)
        }
    }

    /// Entrywise maximum absolute difference to `other`.
    #[must_use]
    pub fn max_abs_diff(&self, other: &SymMat2) -> f64 {
        let d = [
            (self.p11 - other.p11).abs(),
            (self.p12 - other.p12).abs(),
            (self.p22 - other.p22).abs(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }
}

// =========================================================================
// Tests
// =========================================================================
