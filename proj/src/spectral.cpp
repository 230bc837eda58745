#include "agebif/spectral.hpp"

#include <sstream>

namespace agebif {

NonlocalOperator assemble_H(const DirichletLaplacian& lap, const AgeGrid& ages,
                            const CoefficientPath& h, const BirthProfile& b,
                            const StepperConfig& cfg) {
    const int n = lap.size();
    validate_birth(b, ages);
    NonlocalOperator op;
    op.M.resize(n, n);
    for (int j = 0; j < n; ++j) {
        Vector e = Vector::Zero(n);
        e[j] = 1.0;
        op.M.col(j) = age_integral(evolve_linear(lap, ages, h, e, cfg), b, ages);
    }
    std::ostringstream tag;
    tag << "H[h], h in [" << h.minCoeff() << ", " << h.maxCoeff() << "]";
    op.tag = tag.str();
    return op;
}

NonlocalOperator assemble_G(const DirichletLaplacian& lap, const AgeGrid& ages,
                            const CoefficientPath& d, const CoefficientPath& c,
                            const BirthProfile& b, const StepperConfig& cfg) {
    const int n = lap.size();
    validate_birth(b, ages);
    NonlocalOperator op;
    op.M.resize(n, n);
    for (int j = 0; j < n; ++j) {
        Vector e = Vector::Zero(n);
        e[j] = 1.0;
        op.M.col(j) = age_integral(evolve_conservative(lap, ages, d, c, e, cfg), b, ages);
    }
    std::ostringstream tag;
    tag << "G[d,c], d in [" << d.minCoeff() << ", " << d.maxCoeff() << "]";
    op.tag = tag.str();
    return op;
}

SpectralResult spectral_radius(const Matrix& M) {
    if (M.rows() != M.cols() || M.rows() == 0)
        throw InvalidArgument("spectral_radius: matrix must be square and nonempty");
    if (M.minCoeff() < 0.0)
        throw InvalidArgument("spectral_radius: matrix must be entrywise nonnegative");

    const int max_iter = 100000;
    const double tol = 1e-12;
    Vector x = Vector::Constant(M.rows(), 1.0);
    double r = 0.0;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        Vector y = M * x;
        const double ny = y.cwiseAbs().maxCoeff();
        if (ny == 0.0)
            throw InvalidArgument("spectral_radius: operator annihilated the positive cone");
        y /= ny;
        const double diff = (y - x).cwiseAbs().maxCoeff();
        x = std::move(y);
        r = ny;
        if (diff <= tol) break;
    }
    SpectralResult out;
    out.radius = r;
    out.eigvec = x / x.cwiseAbs().maxCoeff();
    out.iterations = iter + 1;
    out.residual = (M * out.eigvec - r * out.eigvec).cwiseAbs().maxCoeff();
    return out;
}

NormalizedBirth normalize_birth(const DirichletLaplacian& lap, const AgeGrid& ages,
                                const BirthProfile& b_raw, const StepperConfig& cfg) {
    validate_birth(b_raw, ages);
    if (b_raw.samples.maxCoeff() <= 0.0)
        throw InvalidArgument("normalize_birth: profile is identically zero");
    const CoefficientPath zero = constant_path(ages, lap.size(), 0.0);
    const SpectralResult s = spectral_radius(assemble_H(lap, ages, zero, b_raw, cfg));
    if (!(s.radius > 0.0))
        throw InternalError("normalize_birth: nonpositive spectral radius");
    NormalizedBirth out;
    out.constant = 1.0 / s.radius;
    out.profile.samples = b_raw.samples * out.constant;
    out.profile.scale = b_raw.scale * out.constant;
    return out;
}

} // namespace agebif
