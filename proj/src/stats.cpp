#include "risklab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "risklab/tdist.hpp"

namespace risklab {

namespace {

constexpr double kRankTol = 1e-10;       // relative to largest singular value
constexpr double kConditionWarn = 1e8;

const double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void DataTable::add_numeric(const std::string& name, std::vector<double> values) {
    if (has_numeric(name) || has_string(name))
        throw Error("duplicate column '" + name + "'");
    if (!empty_ && values.size() != rows_)
        throw Error("column '" + name + "' has " + std::to_string(values.size()) +
                    " rows, expected " + std::to_string(rows_));
    rows_ = values.size();
    empty_ = false;
    numeric_.emplace_back(name, std::move(values));
}

void DataTable::add_string(const std::string& name, std::vector<std::string> values) {
    if (has_numeric(name) || has_string(name))
        throw Error("duplicate column '" + name + "'");
    if (!empty_ && values.size() != rows_)
        throw Error("column '" + name + "' has " + std::to_string(values.size()) +
                    " rows, expected " + std::to_string(rows_));
    rows_ = values.size();
    empty_ = false;
    string_.emplace_back(name, std::move(values));
}

bool DataTable::has_numeric(const std::string& name) const {
    for (const auto& c : numeric_)
        if (c.first == name) return true;
    return false;
}

bool DataTable::has_string(const std::string& name) const {
    for (const auto& c : string_)
        if (c.first == name) return true;
    return false;
}

const std::vector<double>& DataTable::numeric(const std::string& name) const {
    for (const auto& c : numeric_)
        if (c.first == name) return c.second;
    throw UnknownColumn(name);
}

const std::vector<std::string>& DataTable::strings(const std::string& name) const {
    for (const auto& c : string_)
        if (c.first == name) return c.second;
    throw UnknownColumn(name);
}

UnknownColumn::UnknownColumn(const std::string& n)
    : Error("unknown column '" + n + "'"), name(n) {}

namespace {

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

}  // namespace

RankDeficient::RankDeficient(std::vector<std::string> cols)
    : Error("design matrix is rank deficient; dependent columns: " + join_names(cols)),
      columns(std::move(cols)) {}

DesignSpec DesignSpec::paper_model() {
    DesignSpec spec;
    spec.response = "accuracy";
    spec.numeric_terms = {"example_count", "model_size"};
    spec.categorical_terms = {{"model_type", "gemma"}};
    spec.interactions = {{"example_count", "model_type"},
                         {"example_count", "model_size"}};
    return spec;
}

namespace {

// One resolved side of an interaction: either a single numeric column or a
// block of dummy columns from a categorical.
struct TermColumns {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
};

std::vector<std::string> sorted_levels(const std::vector<std::string>& values) {
    std::set<std::string> levels(values.begin(), values.end());
    return {levels.begin(), levels.end()};
}

TermColumns dummy_block(const DataTable& records, const std::string& column,
                        const std::string& reference,
                        std::vector<std::string>* warnings) {
    const auto& raw = records.strings(column);
    auto levels = sorted_levels(raw);
    std::string ref = reference;
    if (ref.empty()) {
        ref = levels.front();
    } else if (std::find(levels.begin(), levels.end(), ref) == levels.end()) {
        throw Error("reference level '" + ref + "' not present in column '" +
                    column + "'");
    }
    TermColumns block;
    if (levels.size() < 2) {
        if (warnings)
            warnings->push_back("categorical column '" + column +
                                "' has a single level; no dummies emitted");
        return block;
    }
    for (const auto& level : levels) {
        if (level == ref) continue;
        std::vector<double> col(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            col[i] = raw[i] == level ? 1.0 : 0.0;
        block.names.push_back("C(" + column + ")[T." + level + "]");
        block.values.push_back(std::move(col));
    }
    return block;
}

TermColumns resolve_term(const DataTable& records, const DesignSpec& spec,
                         const std::string& name,
                         std::vector<std::string>* warnings) {
    if (records.has_numeric(name)) {
        TermColumns t;
        t.names.push_back(name);
        t.values.push_back(records.numeric(name));
        return t;
    }
    if (records.has_string(name)) {
        std::string reference;
        for (const auto& term : spec.categorical_terms)
            if (term.name == name) reference = term.reference;
        return dummy_block(records, name, reference, warnings);
    }
    throw UnknownColumn(name);
}

}  // namespace

DesignMatrix build_design(const DataTable& records, const DesignSpec& spec) {
    if (records.rows() == 0) throw Error("design has no rows");

    for (const auto& pair : spec.interactions) {
        for (const auto& side : {pair.a, pair.b}) {
            bool is_main =
                std::find(spec.numeric_terms.begin(), spec.numeric_terms.end(),
                          side) != spec.numeric_terms.end();
            for (const auto& term : spec.categorical_terms)
                if (term.name == side) is_main = true;
            if (!is_main)
                throw Error("interaction operand '" + side +
                            "' is not a main effect");
        }
    }

    DesignMatrix design;
    const std::size_t n = records.rows();

    if (!records.has_numeric(spec.response)) throw UnknownColumn(spec.response);
    const auto& response = records.numeric(spec.response);
    design.y = Eigen::Map<const Eigen::VectorXd>(response.data(),
                                                 static_cast<Eigen::Index>(n));

    std::vector<std::vector<double>> columns;
    if (spec.intercept) {
        design.names.push_back("Intercept");
        columns.emplace_back(n, 1.0);
    }
    for (const auto& term : spec.numeric_terms) {
        if (!records.has_numeric(term)) throw UnknownColumn(term);
        design.names.push_back(term);
        columns.push_back(records.numeric(term));
    }
    for (const auto& term : spec.categorical_terms) {
        auto block = dummy_block(records, term.name, term.reference,
                                 &design.warnings);
        for (std::size_t i = 0; i < block.names.size(); ++i) {
            design.names.push_back(block.names[i]);
            columns.push_back(std::move(block.values[i]));
        }
    }
    for (const auto& pair : spec.interactions) {
        auto left = resolve_term(records, spec, pair.a, nullptr);
        auto right = resolve_term(records, spec, pair.b, nullptr);
        for (std::size_t i = 0; i < left.names.size(); ++i) {
            for (std::size_t j = 0; j < right.names.size(); ++j) {
                std::vector<double> col(n);
                for (std::size_t r = 0; r < n; ++r)
                    col[r] = left.values[i][r] * right.values[j][r];
                design.names.push_back(left.names[i] + ":" + right.names[j]);
                columns.push_back(std::move(col));
            }
        }
    }

    if (columns.empty()) throw Error("design has no columns");
    for (std::size_t i = 0; i < design.names.size(); ++i)
        for (std::size_t j = i + 1; j < design.names.size(); ++j)
            if (design.names[i] == design.names[j])
                throw Error("duplicate design column '" + design.names[i] + "'");
    design.X.resize(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (std::size_t i = 0; i < n; ++i)
            design.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                columns[j][i];
    return design;
}

namespace {

// Walk the columns left to right, projecting each onto the span of the ones
// accepted so far; a column whose residual all but vanishes is flagged. Used
// only to attach names to a rank failure the SVD already established.
std::vector<std::string> dependent_columns(const Eigen::MatrixXd& X,
                                           const std::vector<std::string>& names) {
    std::vector<std::string> offending;
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        Eigen::VectorXd v = X.col(j);
        const double orig = v.norm();
        for (const auto& b : basis) v -= b.dot(v) * b;
        if (orig == 0.0 || v.norm() <= orig * 1e-8) {
            offending.push_back(names[static_cast<std::size_t>(j)]);
        } else {
            basis.push_back(v / v.norm());
        }
    }
    if (offending.empty()) offending.push_back(names.back());
    return offending;
}

}  // namespace

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               const std::vector<std::string>& names) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n == 0 || p == 0) throw Error("empty design matrix");
    if (y.size() != n) throw Error("response length does not match design rows");
    if (names.size() != static_cast<std::size_t>(p))
        throw Error("column name count does not match design columns");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    const double tol = sv(0) * kRankTol;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    if (rank < p) throw RankDeficient(dependent_columns(X, names));

    OlsFit fit;
    fit.names = names;
    fit.n = static_cast<int>(n);
    fit.df_resid = static_cast<int>(n - p);
    fit.condition_number = sv(0) / sv(sv.size() - 1);
    fit.condition_warning = fit.condition_number > kConditionWarn;

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    fit.coef = qr.solve(y);

    const Eigen::VectorXd resid = y - X * fit.coef;
    const double ssr = resid.squaredNorm();

    bool has_intercept = false;
    for (const auto& name : names)
        if (name == "Intercept") has_intercept = true;
    double sst;
    if (has_intercept) {
        const double mean = y.mean();
        sst = (y.array() - mean).matrix().squaredNorm();
    } else {
        sst = y.squaredNorm();
    }
    fit.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;

    fit.se = Eigen::VectorXd::Constant(p, kNan);
    fit.t_stats = Eigen::VectorXd::Constant(p, kNan);
    fit.p_values = Eigen::VectorXd::Constant(p, kNan);
    if (fit.df_resid > 0) {
        const double s2 = ssr / fit.df_resid;
        // (X'X)^-1 = R^-1 R^-T, so the diagonal is the squared row norms
        // of R^-1.
        Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
        Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(
            Eigen::MatrixXd::Identity(p, p));
        for (Eigen::Index j = 0; j < p; ++j) {
            fit.se(j) = std::sqrt(s2 * rinv.row(j).squaredNorm());
            if (fit.se(j) > 0.0) {
                fit.t_stats(j) = fit.coef(j) / fit.se(j);
                fit.p_values(j) = t_two_sided_p(fit.t_stats(j), fit.df_resid);
            }
        }
    }
    return fit;
}

OlsFit fit_ols(const DesignMatrix& design) {
    return fit_ols(design.X, design.y, design.names);
}

namespace {

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

OlsFit fit_paper_model(const DataTable& records) {
    return fit_ols(build_design(records, DesignSpec::paper_model()));
}

nlohmann::json fit_to_json(const OlsFit& fit) {
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        terms.push_back({{"name", fit.names[j]},
                         {"coef", finite_or_null(fit.coef(i))},
                         {"se", finite_or_null(fit.se(i))},
                         {"t", finite_or_null(fit.t_stats(i))},
                         {"p", finite_or_null(fit.p_values(i))}});
    }
    return {{"n", fit.n},
            {"df_resid", fit.df_resid},
            {"r_squared", fit.r_squared},
            {"condition_number", fit.condition_number},
            {"condition_warning", fit.condition_warning},
            {"terms", terms}};
}

std::string fit_to_text(const OlsFit& fit) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "OLS fit: n=%d  df_resid=%d  R^2=%.4f\n",
                  fit.n, fit.df_resid, fit.r_squared);
    out << line;

    std::size_t width = 4;
    for (const auto& name : fit.names) width = std::max(width, name.size());

    auto cell = [](double v, const char* fmt) {
        char buf[32];
        if (std::isfinite(v))
            std::snprintf(buf, sizeof(buf), fmt, v);
        else
            std::snprintf(buf, sizeof(buf), "%10s", "nan");
        return std::string(buf);
    };

    out << std::string(width, ' ') << "        coef          se           t       P>|t|\n";
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        out << fit.names[j] << std::string(width - fit.names[j].size(), ' ')
            << "  " << cell(fit.coef(i), "%10.6f") << "  "
            << cell(fit.se(i), "%10.6f") << "  " << cell(fit.t_stats(i), "%10.3f")
            << "  " << cell(fit.p_values(i), "%10.4f") << "\n";
    }
    if (fit.condition_warning) {
        std::snprintf(line, sizeof(line),
                      "warning: condition number %.3g suggests strong "
                      "multicollinearity\n",
                      fit.condition_number);
        out << line;
    }
    return out.str();
}

}  // namespace risklab
