#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "microres/claims_data.hpp"
#include "microres/config.hpp"
#include "microres/synthetic.hpp"

namespace microres::testing {

inline std::string data_path(const std::string& name) { return std::string(MICRORES_TEST_DATA) + "/" + name; }

inline ModelConfig dmy_config() {
    ModelConfig c;
    c.dateFormat = DateFormat::DayMonthYear;
    return c;
}

inline ParsedPortfolio load_log(const std::string& name, const ModelConfig& c) {
    std::ifstream in(data_path(name));
    if (!in) throw Error("missing fixture " + name);
    return parse_transactions(in, c);
}

inline ParsedPortfolio parse_text(const std::string& text, const ModelConfig& c) {
    std::istringstream in(text);
    return parse_transactions(in, c);
}

inline Date ymd(int y, unsigned m, unsigned d) { return Date::from_ymd(y, m, d); }

/// Covariate-free weight model with the given class probabilities.
inline CategoricalModel constant_weights(const std::vector<double>& probs) {
    CategoricalModel m;
    for (std::size_t k = 0; k < probs.size(); ++k) m.outcomes.push_back(static_cast<int>(k));
    m.fit.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(probs.size()) - 1, 1);
    for (std::size_t k = 1; k < probs.size(); ++k)
        m.fit.coefficients(static_cast<Eigen::Index>(k) - 1, 0) = std::log(probs[k] / probs[0]);
    for (std::size_t k = 0; k < probs.size(); ++k) m.fit.class_names.push_back("B" + std::to_string(k + 1));
    m.fit.column_names = {"(Intercept)"};
    m.rebuild_table();
    return m;
}

inline synth::Spec toy_spec() { return synth::read_spec_file(data_path("toy_spec.json")); }

}  // namespace microres::testing
