#include "agebif/grid.hpp"

#include <cmath>

namespace agebif {

Vector DirichletLaplacian::apply(const Vector& z) const {
    if (z.size() != n_) throw InvalidArgument("Laplacian: field size mismatch");
    Vector out(n_);
    for (int i = 0; i < n_; ++i) {
        const double left = (i > 0) ? z[i - 1] : 0.0;
        const double right = (i + 1 < n_) ? z[i + 1] : 0.0;
        out[i] = (left - 2.0 * z[i] + right) * inv_h2_;
    }
    return out;
}

Matrix DirichletLaplacian::dense() const {
    Matrix L = Matrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
        L(i, i) = -2.0 * inv_h2_;
        if (i > 0) L(i, i - 1) = inv_h2_;
        if (i + 1 < n_) L(i, i + 1) = inv_h2_;
    }
    return L;
}

namespace {

// Thomas solve for (diag, off) symmetric tridiagonal SPD system A x = rhs,
// A = tridiag(-inv_h2, diag_i, -inv_h2) is used only by the eigen solver here.
Vector solve_tridiag_const(double sub, const Vector& diag, double sup, Vector rhs) {
    const int n = static_cast<int>(diag.size());
    Vector c(n);
    double piv = diag[0];
    if (piv == 0.0) throw InternalError("tridiagonal pivot vanished");
    c[0] = sup / piv;
    rhs[0] /= piv;
    for (int i = 1; i < n; ++i) {
        piv = diag[i] - sub * c[i - 1];
        if (piv == 0.0) throw InternalError("tridiagonal pivot vanished");
        c[i] = sup / piv;
        rhs[i] = (rhs[i] - sub * rhs[i - 1]) / piv;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

} // namespace

EigenPair principal_eigenpair(const DirichletLaplacian& lap) {
    const int n = lap.size();
    const double q = lap.inv_h2();
    const Vector diag = Vector::Constant(n, 2.0 * q); // -L diagonal
    Vector v = Vector::Constant(n, 1.0);

    const int max_iter = 100000;
    const double tol = 1e-12;
    int iter = 0;
    double lambda = 0.0;
    for (; iter < max_iter; ++iter) {
        Vector w = solve_tridiag_const(-q, diag, -q, v);
        const double nw = w.cwiseAbs().maxCoeff();
        if (nw == 0.0) throw InternalError("inverse iteration collapsed to zero");
        w /= nw;
        const double diff = (w - v).cwiseAbs().maxCoeff();
        v = w;
        lambda = 1.0 / nw;
        if (diff <= tol) break;
    }
    if (v[n / 2] < 0) v = -v;
    // Rayleigh quotient sharpens the eigenvalue beyond the iterate tolerance.
    const Vector Av = -lap.apply(v);
    lambda = v.dot(Av) / v.dot(v);
    EigenPair out;
    out.value = lambda;
    out.vector = v / v.cwiseAbs().maxCoeff();
    out.iterations = iter + 1;
    out.residual = (Av - lambda * v).cwiseAbs().maxCoeff();
    return out;
}

BirthProfile BirthProfile::constant(const AgeGrid& ages) {
    BirthProfile b;
    b.samples = Vector::Constant(ages.n_a + 1, 1.0);
    return b;
}

BirthProfile BirthProfile::ramp(const AgeGrid& ages) {
    BirthProfile b;
    b.samples = ages.nodes() / ages.a_m;
    return b;
}

BirthProfile BirthProfile::from_samples(Vector samples) {
    BirthProfile b;
    b.samples = std::move(samples);
    return b;
}

void validate_birth(const BirthProfile& b, const AgeGrid& ages) {
    const int n = ages.n_a;
    if (b.samples.size() != n + 1)
        throw InvalidArgument("birth profile: expected " + std::to_string(n + 1) +
                              " samples, got " + std::to_string(b.samples.size()));
    for (int k = 0; k <= n; ++k)
        if (!(b.samples[k] >= 0.0))
            throw InvalidArgument("birth profile: negative sample at index " + std::to_string(k));
    if (!(b.samples[n] > 0.0))
        throw InvalidArgument("birth profile: must be positive at maximal age");
    // Positive on the final quarter: ages a >= (3/4) a_m.
    const int start = (3 * n + 3) / 4; // ceil(3 n / 4)
    for (int k = start; k <= n; ++k)
        if (!(b.samples[k] > 0.0))
            throw InvalidArgument("birth profile: must be positive on the final quarter of ages");
}

Vector age_integral(const AgeField& f, const BirthProfile& b, const AgeGrid& ages) {
    if (f.rows() != ages.n_a + 1)
        throw InvalidArgument("age_integral: field has wrong number of age rows");
    if (b.samples.size() != f.rows())
        throw InvalidArgument("age_integral: birth profile length mismatch");
    const Vector wb = ages.weights().cwiseProduct(b.samples);
    return f.transpose() * wb;
}

Vector age_integral(const AgeField& f, const AgeGrid& ages) {
    if (f.rows() != ages.n_a + 1)
        throw InvalidArgument("age_integral: field has wrong number of age rows");
    return f.transpose() * ages.weights();
}

double field_l2(const AgeField& f, const AgeGrid& ages, const SpatialGrid& grid) {
    const Vector w = ages.weights();
    double acc = 0.0;
    for (int k = 0; k < f.rows(); ++k) acc += w[k] * f.row(k).squaredNorm();
    return std::sqrt(acc * grid.h);
}

double trace_l2(const Vector& z, const SpatialGrid& grid) {
    return std::sqrt(z.squaredNorm() * grid.h);
}

} // namespace agebif
