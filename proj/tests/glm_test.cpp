#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "microres/glm.hpp"

using namespace microres;
using glm::DesignMatrix;

namespace {

double logit(double p) { return std::log(p / (1 - p)); }

glm::FitOptions exact() {
    glm::FitOptions o;
    o.ridge = 0.0;
    o.tol = 1e-12;
    return o;
}

DesignMatrix two_by_two() {
    // x = 0: 10 of 40 successes; x = 1: 30 of 50.
    DesignMatrix d;
    d.X.resize(2, 2);
    d.X << 1, 0, 1, 1;
    d.counts.resize(2, 2);
    d.counts << 30, 10, 20, 30;
    d.class_names = {"no", "yes"};
    d.column_names = {"(Intercept)", "x"};
    return d;
}

DesignMatrix random_design(std::mt19937_64& rng, int n, int p, int K) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, p);
    Eigen::MatrixXd beta(K - 1, p);
    for (int k = 0; k < K - 1; ++k)
        for (int j = 0; j < p; ++j) beta(k, j) = 0.5 * z(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) X(i, j) = z(rng);
        std::vector<double> w(static_cast<std::size_t>(K), 1.0);
        for (int k = 1; k < K; ++k) w[static_cast<std::size_t>(k)] = std::exp(beta.row(k - 1).dot(X.row(i)));
        std::discrete_distribution<int> pick(w.begin(), w.end());
        labels[static_cast<std::size_t>(i)] = pick(rng);
    }
    // Guarantee every class is present.
    for (int k = 0; k < K; ++k) labels[static_cast<std::size_t>(k)] = k;
    std::vector<std::string> names;
    for (int k = 0; k < K; ++k) names.push_back("c" + std::to_string(k));
    return DesignMatrix::from_labels(X, labels, names);
}

}  // namespace

TEST(Glm, TwoByTwoLogitClosedForm) {
    const auto fit = glm::fit_binomial(two_by_two(), exact());
    ASSERT_TRUE(fit.converged);
    EXPECT_NEAR(fit.coefficients(0, 0), logit(0.25), 1e-9);
    EXPECT_NEAR(fit.coefficients(0, 1), logit(0.6) - logit(0.25), 1e-9);
    const double ll = 10 * std::log(0.25) + 30 * std::log(0.75) + 30 * std::log(0.6) + 20 * std::log(0.4);
    EXPECT_NEAR(fit.log_likelihood, ll, 1e-9);
}

TEST(Glm, InterceptOnlyEqualsFrequencies) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(100, 1);
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i < 62 ? 0 : i < 97 ? 1 : 3);
    labels[0] = 2;  // one TN
    const auto d = DesignMatrix::from_labels(X, labels, {"N", "P", "TN", "TP"});
    const auto fit = glm::fit_multinomial(d, exact());
    const auto p = glm::predict_probs(fit, Eigen::RowVectorXd::Ones(1));
    EXPECT_NEAR(p(0), 0.61, 1e-10);
    EXPECT_NEAR(p(1), 0.35, 1e-10);
    EXPECT_NEAR(p(2), 0.01, 1e-10);
    EXPECT_NEAR(p(3), 0.03, 1e-10);
}

TEST(Glm, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_design(rng, 80, 3, 4);
        Eigen::MatrixXd coef = Eigen::MatrixXd::Random(3, 3) * 0.7;
        EXPECT_LE(glm::check_gradient(d, coef), 1e-6);
    }
}

TEST(Glm, GridSearchNeverBeatsFit) {
    const auto d = two_by_two();
    const auto fit = glm::fit_binomial(d, exact());
    double best = -1e300;
    for (double a = -3; a <= 1; a += 0.01)
        for (double b = -1; b <= 3; b += 0.01) {
            Eigen::MatrixXd c(1, 2);
            c << a, b;
            best = std::max(best, glm::detail::log_likelihood(d, c));
        }
    EXPECT_LE(best, fit.log_likelihood + 1e-6);
    EXPECT_GT(best, fit.log_likelihood - 1e-2);
}

TEST(Glm, ScoreVanishesAtSolution) {
    std::mt19937_64 rng(5);
    const auto d = random_design(rng, 500, 3, 3);
    const auto fit = glm::fit_multinomial(d, exact());
    ASSERT_TRUE(fit.converged);
    EXPECT_LT(glm::analytic_gradient(d, fit.coefficients).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Glm, AggregationDoesNotChangeFit) {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd X(300, 2);
    std::vector<int> labels;
    std::bernoulli_distribution coin(0.4);
    for (int i = 0; i < 300; ++i) {
        X(i, 0) = 1;
        X(i, 1) = i % 3;
        labels.push_back(coin(rng) ? 1 : 0);
    }
    const auto d = DesignMatrix::from_labels(X, labels, {"a", "b"});
    const auto agg = glm::aggregate(d);
    EXPECT_EQ(agg.rows(), 3u);
    const auto f1 = glm::fit_binomial(d, exact());
    const auto f2 = glm::fit_binomial(agg, exact());
    EXPECT_NEAR((f1.coefficients - f2.coefficients).cwiseAbs().maxCoeff(), 0.0, 1e-9);
}

TEST(Glm, SeparationIsFlagged) {
    DesignMatrix d;
    d.X.resize(2, 2);
    d.X << 1, 0, 1, 1;
    d.counts.resize(2, 2);
    d.counts << 10, 0, 0, 10;
    d.class_names = {"a", "b"};
    d.column_names = {"(Intercept)", "x"};
    const auto fit = glm::fit_binomial(d, exact());
    EXPECT_TRUE(fit.separation || !fit.converged);
    const auto p = glm::predict_probs(fit, Eigen::RowVector2d(1, 1));
    EXPECT_GT(p(1), 0.99);
}

TEST(Glm, RejectsEmptyClasses) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
    const auto d = DesignMatrix::from_labels(X, {0, 0, 0}, {"a", "b"});
    EXPECT_THROW(glm::fit_multinomial(d), ModelError);
}

TEST(Glm, JsonRoundTrip) {
    const auto fit = glm::fit_binomial(two_by_two(), exact());
    nlohmann::json j = fit;
    const auto back = j.get<glm::MultinomialFit>();
    EXPECT_EQ(back.class_names, fit.class_names);
    EXPECT_EQ(back.coefficients, fit.coefficients);
}
