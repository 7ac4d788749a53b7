// Thin wrapper over Eigen's Levenberg-Marquardt with forward-difference Jacobians.
#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <functional>
#include <utility>

namespace qimpact::stats {

using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals)>;

struct LeastSquaresResult {
    Eigen::VectorXd params;
    double cost = 0.0;  // sum of squared residuals
    bool converged = false;
};

namespace detail {

struct LmFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    ResidualFn fn;
    int n_inputs = 0;
    int n_values = 0;

    int inputs() const { return n_inputs; }
    int values() const { return n_values; }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        fn(x, r);
        return 0;
    }
};

} // namespace detail

/// Minimizes the sum of squared residuals starting from `x0`.
inline LeastSquaresResult least_squares(ResidualFn fn, Eigen::VectorXd x0, int n_residuals) {
    detail::LmFunctor functor{std::move(fn), static_cast<int>(x0.size()), n_residuals};
    Eigen::NumericalDiff<detail::LmFunctor> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::LmFunctor>> lm(numdiff);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-10;
    lm.parameters.ftol = 1e-12;
    const auto status = lm.minimize(x0);
    LeastSquaresResult out;
    out.params = x0;
    Eigen::VectorXd r(n_residuals);
    functor(x0, r);
    out.cost = r.squaredNorm();
    out.converged = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                    status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
    return out;
}

} // namespace qimpact::stats
