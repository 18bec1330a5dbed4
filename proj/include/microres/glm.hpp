#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "microres/error.hpp"

namespace microres::glm {

/// Encoded predictors with per-row class counts. Column 0 is the intercept.
/// A row with counts (0, 1, 0) is one observation of class 1; aggregated rows carry
/// several observations.
struct DesignMatrix {
    Eigen::MatrixXd X;       // n x p
    Eigen::MatrixXd counts;  // n x K
    std::vector<std::string> class_names;
    std::vector<std::string> column_names;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(X.rows()); }
    std::size_t predictors() const noexcept { return static_cast<std::size_t>(X.cols()); }
    std::size_t classes() const noexcept { return static_cast<std::size_t>(counts.cols()); }

    /// One row per observation; labels in [0, K).
    static DesignMatrix from_labels(Eigen::MatrixXd X, const std::vector<int>& labels,
                                    std::vector<std::string> class_names) {
        DesignMatrix d;
        const auto K = static_cast<Eigen::Index>(class_names.size());
        d.counts = Eigen::MatrixXd::Zero(X.rows(), K);
        if (static_cast<Eigen::Index>(labels.size()) != X.rows())
            throw ModelError("label count does not match design rows");
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const int y = labels[static_cast<std::size_t>(i)];
            if (y < 0 || y >= K) throw ModelError("class label out of range");
            d.counts(i, y) = 1.0;
        }
        d.X = std::move(X);
        d.class_names = std::move(class_names);
        for (Eigen::Index c = 0; c < d.X.cols(); ++c)
            d.column_names.push_back(c == 0 ? "(Intercept)" : "x" + std::to_string(c));
        return d;
    }
};

/// Collapses identical predictor rows, summing their counts. Rows come out in
/// lexicographic order, so the result does not depend on the input row order.
inline DesignMatrix aggregate(const DesignMatrix& d) {
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
            if (d.X(a, c) < d.X(b, c)) return true;
            if (d.X(b, c) < d.X(a, c)) return false;
        }
        return false;
    };
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d.X.rows()));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), less);
    std::vector<Eigen::Index> firsts;
    for (std::size_t k = 0; k < order.size(); ++k)
        if (k == 0 || less(order[k - 1], order[k])) firsts.push_back(order[k]);
    DesignMatrix out;
    out.class_names = d.class_names;
    out.column_names = d.column_names;
    out.X.resize(static_cast<Eigen::Index>(firsts.size()), d.X.cols());
    out.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(firsts.size()), d.counts.cols());
    Eigen::Index u = -1;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || less(order[k - 1], order[k])) {
            ++u;
            out.X.row(u) = d.X.row(order[k]);
        }
        out.counts.row(u) += d.counts.row(order[k]);
    }
    return out;
}

struct FitOptions {
    int max_iter = 200;
    double tol = 1e-8;
    double ridge = 1e-8;
};

/// Multinomial logit with class 0 as reference: coefficients has K-1 rows, one per
/// non-reference class, and one column per design column.
struct MultinomialFit {
    std::vector<std::string> class_names;
    std::vector<std::string> column_names;
    Eigen::MatrixXd coefficients;
    int iterations = 0;
    double gradient_norm = 0.0;  // max |score| / total weight at the solution
    double log_likelihood = 0.0;
    bool converged = false;
    bool separation = false;
    double ridge = 0.0;
    std::vector<double> trace;   // penalised log-likelihood per iteration

    std::size_t classes() const noexcept { return class_names.size(); }
};

namespace detail {

inline void softmax_row(const Eigen::MatrixXd& coef, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        Eigen::Ref<Eigen::RowVectorXd> out) {
    const Eigen::Index K = coef.rows() + 1;
    double mx = 0.0;
    out(0) = 0.0;
    for (Eigen::Index k = 1; k < K; ++k) {
        out(k) = coef.row(k - 1).dot(x);
        mx = std::max(mx, out(k));
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        out(k) = std::exp(out(k) - mx);
        s += out(k);
    }
    out /= s;
}

inline Eigen::MatrixXd unpack(const Eigen::VectorXd& theta, Eigen::Index km1, Eigen::Index p) {
    Eigen::MatrixXd c(km1, p);
    for (Eigen::Index k = 0; k < km1; ++k) c.row(k) = theta.segment(k * p, p).transpose();
    return c;
}

inline Eigen::VectorXd pack(const Eigen::MatrixXd& c) {
    Eigen::VectorXd t(c.size());
    for (Eigen::Index k = 0; k < c.rows(); ++k) t.segment(k * c.cols(), c.cols()) = c.row(k).transpose();
    return t;
}

/// Unpenalised log-likelihood of coefficients on a design.
inline double log_likelihood(const DesignMatrix& d, const Eigen::MatrixXd& coef) {
    Eigen::RowVectorXd pr(d.counts.cols());
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        softmax_row(coef, d.X.row(i), pr);
        for (Eigen::Index k = 0; k < d.counts.cols(); ++k)
            if (d.counts(i, k) > 0) ll += d.counts(i, k) * std::log(pr(k));
    }
    return ll;
}

/// Score of the unpenalised log-likelihood, packed like `pack`.
inline Eigen::VectorXd score(const DesignMatrix& d, const Eigen::MatrixXd& coef) {
    const Eigen::Index K = d.counts.cols(), p = d.X.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero((K - 1) * p);
    Eigen::RowVectorXd pr(K);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        softmax_row(coef, d.X.row(i), pr);
        const double n = d.counts.row(i).sum();
        for (Eigen::Index k = 1; k < K; ++k)
            g.segment((k - 1) * p, p) += (d.counts(i, k) - n * pr(k)) * d.X.row(i).transpose();
    }
    return g;
}

}  // namespace detail

inline Eigen::VectorXd predict_probs(const MultinomialFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(fit.classes()));
    detail::softmax_row(fit.coefficients, x, out);
    return out.transpose();
}

/// Maximum likelihood (optionally ridge-penalised) multinomial logit by damped Newton
/// with step halving, falling back to gradient ascent when the Newton system fails.
inline MultinomialFit fit_multinomial(const DesignMatrix& input, const FitOptions& opt = {}) {
    const Eigen::Index K = input.counts.cols();
    if (K < 2 || input.class_names.size() != static_cast<std::size_t>(K))
        throw ModelError("multinomial fit needs at least two classes; use a constant model instead");
    if (input.X.rows() == 0 || input.X.cols() == 0) throw ModelError("empty design matrix");
    const Eigen::VectorXd class_totals = input.counts.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < K; ++k)
        if (!(class_totals(k) > 0))
            throw ModelError("class '" + input.class_names[static_cast<std::size_t>(k)] +
                             "' has no observations; drop it before fitting");
    const DesignMatrix d = aggregate(input);
    const Eigen::Index p = d.X.cols(), n = d.X.rows(), m = (K - 1) * p;
    const double total = class_totals.sum();
    if (total < static_cast<double>(K))
        throw ModelError("multinomial fit needs at least as many observations as classes");

    MultinomialFit fit;
    fit.class_names = d.class_names;
    fit.column_names = d.column_names;
    fit.ridge = opt.ridge;

    // Start at the intercept-only solution when column 0 is constant.
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(K - 1, p);
    const bool intercept = (d.X.col(0).array() == 1.0).all();
    if (intercept)
        for (Eigen::Index k = 1; k < K; ++k) coef(k - 1, 0) = std::log(class_totals(k) / class_totals(0));

    auto objective = [&](const Eigen::MatrixXd& c) {
        return detail::log_likelihood(d, c) - 0.5 * opt.ridge * c.squaredNorm();
    };
    Eigen::VectorXd theta = detail::pack(coef);
    double obj = objective(coef);
    fit.trace.push_back(obj);

    Eigen::MatrixXd H(m, m);
    Eigen::RowVectorXd pr(K);
    Eigen::VectorXd w(n);
    Eigen::MatrixXd P(n, K);
    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        fit.iterations = iter;
        for (Eigen::Index i = 0; i < n; ++i) {
            detail::softmax_row(coef, d.X.row(i), pr);
            P.row(i) = pr;
        }
        const Eigen::VectorXd rowsum = d.counts.rowwise().sum();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
        for (Eigen::Index k = 1; k < K; ++k)
            g.segment((k - 1) * p, p) =
                d.X.transpose() * (d.counts.col(k) - rowsum.cwiseProduct(P.col(k)));
        g -= opt.ridge * theta;
        fit.gradient_norm = g.cwiseAbs().maxCoeff() / total;
        if (fit.gradient_norm <= opt.tol) {
            fit.converged = true;
            break;
        }
        // Negative Hessian: blocks X' diag(n p_k (delta_kl - p_l)) X.
        for (Eigen::Index k = 1; k < K; ++k) {
            for (Eigen::Index l = k; l < K; ++l) {
                for (Eigen::Index i = 0; i < n; ++i)
                    w(i) = rowsum(i) * P(i, k) * ((k == l ? 1.0 : 0.0) - P(i, l));
                const Eigen::MatrixXd block = d.X.transpose() * w.asDiagonal() * d.X;
                H.block((k - 1) * p, (l - 1) * p, p, p) = block;
                if (l != k) H.block((l - 1) * p, (k - 1) * p, p, p) = block.transpose();
            }
        }
        H.diagonal().array() += opt.ridge;

        Eigen::VectorXd step;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        bool newton = ldlt.info() == Eigen::Success && ldlt.isPositive();
        if (newton) {
            step = ldlt.solve(g);
            newton = step.allFinite() && step.dot(g) > 0;
        }
        if (!newton) step = g / std::max(1.0, H.diagonal().maxCoeff());

        double t = 1.0;
        bool improved = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            const Eigen::VectorXd cand = theta + t * step;
            const Eigen::MatrixXd cc = detail::unpack(cand, K - 1, p);
            const double o = objective(cc);
            if (std::isfinite(o) && o >= obj) {
                theta = cand;
                coef = cc;
                improved = o > obj || t * step.norm() == 0.0;
                obj = o;
                break;
            }
        }
        fit.trace.push_back(obj);
        if (!improved) {
            // No representable ascent left: at the optimum up to rounding.
            fit.converged = fit.gradient_norm <= std::sqrt(opt.tol);
            break;
        }
    }
    if (!fit.converged && fit.iterations == opt.max_iter) {
        // Refresh the reported gradient at the final iterate.
        Eigen::VectorXd g = detail::score(d, coef) - opt.ridge * theta;
        fit.gradient_norm = g.cwiseAbs().maxCoeff() / total;
        fit.converged = fit.gradient_norm <= opt.tol;
    }
    fit.coefficients = coef;
    fit.log_likelihood = detail::log_likelihood(d, coef);
    fit.separation = coef.cwiseAbs().maxCoeff() > 12.0 || !fit.converged;
    return fit;
}

/// Two-class specialisation; class 0 is the reference ("failure").
inline MultinomialFit fit_binomial(const DesignMatrix& d, const FitOptions& opt = {}) {
    if (d.counts.cols() != 2) throw ModelError("binomial fit needs exactly two classes");
    return fit_multinomial(d, opt);
}

/// Max |analytic score - central finite difference| of the unpenalised log-likelihood.
inline double check_gradient(const DesignMatrix& d, const Eigen::MatrixXd& coefficients, double h = 1e-5) {
    const Eigen::VectorXd g = detail::score(d, coefficients);
    Eigen::VectorXd theta = detail::pack(coefficients);
    const Eigen::Index km1 = coefficients.rows(), p = coefficients.cols();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double orig = theta(j);
        theta(j) = orig + h;
        const double up = detail::log_likelihood(d, detail::unpack(theta, km1, p));
        theta(j) = orig - h;
        const double dn = detail::log_likelihood(d, detail::unpack(theta, km1, p));
        theta(j) = orig;
        worst = std::max(worst, std::abs((up - dn) / (2 * h) - g(j)));
    }
    return worst;
}

inline Eigen::VectorXd analytic_gradient(const DesignMatrix& d, const Eigen::MatrixXd& coefficients) {
    return detail::score(d, coefficients);
}

inline void to_json(nlohmann::json& j, const MultinomialFit& f) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index k = 0; k < f.coefficients.rows(); ++k) {
        std::vector<double> r(static_cast<std::size_t>(f.coefficients.cols()));
        for (Eigen::Index c = 0; c < f.coefficients.cols(); ++c) r[static_cast<std::size_t>(c)] = f.coefficients(k, c);
        rows.push_back(std::move(r));
    }
    j = nlohmann::json{{"class_names", f.class_names},
                       {"column_names", f.column_names},
                       {"coefficients", rows},
                       {"iterations", f.iterations},
                       {"gradient_norm", f.gradient_norm},
                       {"log_likelihood", f.log_likelihood},
                       {"converged", f.converged},
                       {"separation", f.separation},
                       {"ridge", f.ridge}};
}

inline void from_json(const nlohmann::json& j, MultinomialFit& f) {
    j.at("class_names").get_to(f.class_names);
    j.at("column_names").get_to(f.column_names);
    const auto rows = j.at("coefficients").get<std::vector<std::vector<double>>>();
    const auto K = static_cast<Eigen::Index>(f.class_names.size());
    const auto p = static_cast<Eigen::Index>(f.column_names.size());
    if (static_cast<Eigen::Index>(rows.size()) != K - 1) throw ModelError("coefficient rows do not match classes");
    f.coefficients.resize(K - 1, p);
    for (Eigen::Index k = 0; k < K - 1; ++k) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)].size()) != p)
            throw ModelError("coefficient columns do not match design");
        for (Eigen::Index c = 0; c < p; ++c) f.coefficients(k, c) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    }
    f.iterations = j.value("iterations", 0);
    f.gradient_norm = j.value("gradient_norm", 0.0);
    f.log_likelihood = j.value("log_likelihood", 0.0);
    f.converged = j.value("converged", true);
    f.separation = j.value("separation", false);
    f.ridge = j.value("ridge", 0.0);
}

}  // namespace microres::glm
