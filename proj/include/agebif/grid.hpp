#pragma once

#include <Eigen/Dense>

#include "agebif/errors.hpp"

namespace agebif {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Values of a scalar field at the interior spatial nodes.
using SpatialField = Vector;

// One row per age node (n_a + 1 rows), one column per interior spatial node.
// Row k holds the field at age a_k = k * da.
using AgeField = Matrix;

// Interior nodes of (0,1): x_i = (i+1) h, i = 0..n_x-1, h = 1/(n_x+1).
// Homogeneous Dirichlet values at x = 0 and x = 1 are eliminated.
struct SpatialGrid {
    int n_x;
    double h;

    explicit SpatialGrid(int n_x_) : n_x(n_x_), h(1.0 / (n_x_ + 1)) {
        if (n_x_ < 3) throw InvalidArgument("SpatialGrid: n_x must be >= 3");
    }

    Vector nodes() const {
        Vector x(n_x);
        for (int i = 0; i < n_x; ++i) x[i] = (i + 1) * h;
        return x;
    }
};

// Uniform age grid on [0, a_m] with n_a intervals and trapezoid weights.
struct AgeGrid {
    int n_a;
    double a_m;
    double da;

    AgeGrid(int n_a_, double a_m_) : n_a(n_a_), a_m(a_m_), da(a_m_ / n_a_) {
        if (n_a_ < 1) throw InvalidArgument("AgeGrid: n_a must be >= 1");
        if (!(a_m_ > 0)) throw InvalidArgument("AgeGrid: a_m must be > 0");
    }

    Vector nodes() const {
        Vector a(n_a + 1);
        for (int k = 0; k <= n_a; ++k) a[k] = k * da;
        return a;
    }

    // Trapezoid quadrature weights; they sum to a_m exactly up to rounding.
    Vector weights() const {
        Vector w = Vector::Constant(n_a + 1, da);
        w[0] = 0.5 * da;
        w[n_a] = 0.5 * da;
        return w;
    }
};

// Second-difference Dirichlet Laplacian on the interior nodes:
// (L z)_i = (z_{i-1} - 2 z_i + z_{i+1}) / h^2 with z_{-1} = z_{n_x} = 0.
//
// Consumers should go through apply()/dense()/the band accessors rather than
// re-deriving the stencil, so a richer domain (e.g. a 2-D rectangle with a
// sparse operator) stays a local swap inside this class and the steppers.
class DirichletLaplacian {
  public:
    explicit DirichletLaplacian(const SpatialGrid& grid)
        : n_(grid.n_x), inv_h2_(1.0 / (grid.h * grid.h)) {}

    int size() const { return n_; }
    // Off-diagonal stencil weight 1/h^2; diagonal is -2/h^2.
    double inv_h2() const { return inv_h2_; }

    Vector apply(const Vector& z) const;
    Matrix dense() const;

  private:
    int n_;
    double inv_h2_;
};

inline DirichletLaplacian build_laplacian(const SpatialGrid& grid) {
    return DirichletLaplacian(grid);
}

struct EigenPair {
    double value;      // principal eigenvalue of -L (smallest, positive)
    Vector vector;     // positive eigenvector, sup-norm 1
    int iterations;
    double residual;   // ||(-L) v - value * v||_inf
};

// Principal Dirichlet eigenpair of -L by inverse power iteration.
// Discrete value: lambda_1^h = (2/h^2) (1 - cos(pi h)).
EigenPair principal_eigenpair(const DirichletLaplacian& lap);

// Birth profile sampled at the age nodes, together with the scale applied
// by normalization (1 until normalize_birth has run).
struct BirthProfile {
    Vector samples;    // length n_a + 1, nonnegative
    double scale = 1.0;

    static BirthProfile constant(const AgeGrid& ages);
    static BirthProfile ramp(const AgeGrid& ages);
    static BirthProfile from_samples(Vector samples);
};

// Enforces: nonnegative, positive at a_m and on the final quarter of the
// grid (the profile must actually weight late ages).
void validate_birth(const BirthProfile& b, const AgeGrid& ages);

// Weighted age integral of an age field: sum_k w_k b_k f(a_k, .) as a
// spatial field.  Shapes must match the grids.
Vector age_integral(const AgeField& f, const BirthProfile& b, const AgeGrid& ages);

// Unweighted variant (b identically 1).
Vector age_integral(const AgeField& f, const AgeGrid& ages);

// Discrete L2(age x space) norm: sqrt( sum_k w_k h sum_i f(k,i)^2 ).
double field_l2(const AgeField& f, const AgeGrid& ages, const SpatialGrid& grid);

// Discrete L2(space) norm of a trace: sqrt( h sum_i z_i^2 ).
double trace_l2(const Vector& z, const SpatialGrid& grid);

} // namespace agebif
