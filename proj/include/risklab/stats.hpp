#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "risklab/common.hpp"

namespace risklab {

/// Column-oriented table feeding the regression layer. Numeric and string
/// columns share the row count; rows are observations.
class DataTable {
public:
    void add_numeric(const std::string& name, std::vector<double> values);
    void add_string(const std::string& name, std::vector<std::string> values);

    std::size_t rows() const { return rows_; }
    bool has_numeric(const std::string& name) const;
    bool has_string(const std::string& name) const;
    const std::vector<double>& numeric(const std::string& name) const;
    const std::vector<std::string>& strings(const std::string& name) const;

private:
    std::size_t rows_ = 0;
    bool empty_ = true;
    std::vector<std::pair<std::string, std::vector<double>>> numeric_;
    std::vector<std::pair<std::string, std::vector<std::string>>> string_;
};

struct UnknownColumn : Error {
    explicit UnknownColumn(const std::string& name);
    std::string name;
};

struct RankDeficient : Error {
    explicit RankDeficient(std::vector<std::string> columns);
    std::vector<std::string> columns;
};

struct CategoricalTerm {
    std::string name;
    std::string reference;  // level dropped under treatment coding
};

struct Interaction {
    std::string a;
    std::string b;
};

struct DesignSpec {
    std::string response;
    std::vector<std::string> numeric_terms;
    std::vector<CategoricalTerm> categorical_terms;
    std::vector<Interaction> interactions;
    bool intercept = true;

    // accuracy ~ example_count + C(model_type) + model_size
    //          + example_count:C(model_type) + example_count:model_size,
    // treatment coding with "gemma" as the reference level.
    static DesignSpec paper_model();
};

struct DesignMatrix {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;     // column order: intercept, numeric
                                        // mains, categorical dummies,
                                        // interactions
    std::vector<std::string> warnings;  // degenerate categories etc.
};

DesignMatrix build_design(const DataTable& records, const DesignSpec& spec);

struct OlsFit {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;
    double r_squared = 0.0;
    int df_resid = 0;
    int n = 0;
    bool condition_warning = false;
    double condition_number = 0.0;
};

/// Least squares through Householder QR (never the normal equations).
/// Standard errors come from the R factor, p-values from the t
/// distribution. Throws RankDeficient when the numerical rank (singular
/// values below max_sv * 1e-10) is short, naming the dependent columns.
OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const std::vector<std::string>& names);

OlsFit fit_ols(const DesignMatrix& design);

/// Convenience: builds DesignSpec::paper_model() over the records and fits.
/// Expects columns accuracy, example_count, model_size, model_type.
OlsFit fit_paper_model(const DataTable& records);

nlohmann::json fit_to_json(const OlsFit& fit);
std::string fit_to_text(const OlsFit& fit);

}  // namespace risklab
