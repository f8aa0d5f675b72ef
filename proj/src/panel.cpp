#include "synthctl/panel.hpp"

#include "synthctl/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_map>

namespace synthctl {

void PanelData::validate() const {
    const Index rows = outcomes.rows();
    const Index cols = outcomes.cols();
    if (rows < 2) {
        throw Error(ErrorCode::DimensionMismatch,
                    "panel needs a treated unit and at least one untreated unit");
    }
    if (t0 < 2 || t0 >= cols) {
        throw Error(ErrorCode::BadT0, "t0=" + std::to_string(t0) +
                                          " outside [2, T-1] with T=" + std::to_string(cols));
    }
    if (static_cast<Index>(units.size()) != rows) {
        throw Error(ErrorCode::DimensionMismatch, "unit labels do not match outcome rows");
    }
    if (static_cast<Index>(period_labels.size()) != cols) {
        throw Error(ErrorCode::DimensionMismatch, "period labels do not match outcome columns");
    }
    if (covariate_names.size() != covariates.size()) {
        throw Error(ErrorCode::DimensionMismatch, "covariate names do not match covariates");
    }
    for (const auto& x : covariates) {
        if (x.rows() != rows || x.cols() != cols) {
            throw Error(ErrorCode::DimensionMismatch, "covariate matrix has wrong shape");
        }
        if (!x.allFinite()) throw Error(ErrorCode::MissingCell, "non-finite covariate value");
    }
    if (!outcomes.allFinite()) throw Error(ErrorCode::MissingCell, "non-finite outcome value");
    for (std::size_t i = 1; i < units.size(); ++i) {
        if (units[i] == units[0]) {
            throw Error(ErrorCode::UnknownTreated, "treated unit appears more than once");
        }
    }
}

PanelData make_panel(Eigen::MatrixXd outcomes, Index t0, std::vector<std::string> units,
                     std::vector<Eigen::MatrixXd> covariates,
                     std::vector<std::string> covariate_names) {
    PanelData panel;
    if (units.empty()) {
        units.reserve(static_cast<std::size_t>(outcomes.rows()));
        for (Index j = 0; j < outcomes.rows(); ++j) units.push_back("u" + std::to_string(j));
    }
    if (covariate_names.empty()) {
        for (std::size_t k = 0; k < covariates.size(); ++k)
            covariate_names.push_back("x" + std::to_string(k + 1));
    }
    panel.period_labels.reserve(static_cast<std::size_t>(outcomes.cols()));
    for (Index t = 0; t < outcomes.cols(); ++t) panel.period_labels.push_back(std::to_string(t + 1));
    panel.units = std::move(units);
    panel.outcomes = std::move(outcomes);
    panel.covariates = std::move(covariates);
    panel.covariate_names = std::move(covariate_names);
    panel.t0 = t0;
    panel.validate();
    return panel;
}

namespace {

struct PeriodKey {
    std::string label;
    long long number = 0;
};

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw Error(ErrorCode::ParseError, "row 1: missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

PanelData load_panel(std::istream& source, const PanelSchema& schema,
                     const std::string& treated, Index t0) {
    std::string line;
    std::size_t row_number = 0;
    std::vector<std::string> header;
    while (std::getline(source, line)) {
        ++row_number;
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::ParseError, "row 1: empty input, header required");
    for (auto& h : header) h = std::string(detail::trim(h));

    const std::size_t unit_col = require_column(header, schema.unit_column);
    const std::size_t period_col = require_column(header, schema.period_column);
    const std::size_t outcome_col = require_column(header, schema.outcome_column);
    std::vector<std::size_t> cov_cols;
    for (const auto& c : schema.covariate_columns) cov_cols.push_back(require_column(header, c));

    std::vector<std::string> unit_order;
    std::unordered_map<std::string, std::size_t> unit_index;
    std::map<std::string, PeriodKey> periods;
    // (unit, period) -> outcome and covariate cells
    struct Cell {
        double outcome;
        std::vector<std::optional<double>> covariates;
    };
    std::vector<std::map<std::string, Cell>> cells;

    while (std::getline(source, line)) {
        ++row_number;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const auto row_tag = "row " + std::to_string(row_number) + ": ";
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::ParseError, row_tag + "expected " + std::to_string(header.size()) +
                                                   " fields, found " + std::to_string(fields.size()));
        }
        const std::string unit(detail::trim(fields[unit_col]));
        const std::string period(detail::trim(fields[period_col]));
        if (unit.empty() || period.empty()) {
            throw Error(ErrorCode::ParseError, row_tag + "empty unit or period");
        }
        PeriodKey key{period, 0};
        if (schema.period_kind == PeriodKind::Integer) {
            auto n = detail::parse_integer(period);
            if (!n) throw Error(ErrorCode::ParseError, row_tag + "period '" + period + "' is not an integer");
            key.number = *n;
        }
        auto value = detail::parse_double(fields[outcome_col]);
        if (!value) {
            throw Error(ErrorCode::ParseError,
                        row_tag + "outcome '" + fields[outcome_col] + "' is not a number");
        }
        Cell cell{*value, {}};
        for (std::size_t c : cov_cols) {
            if (detail::trim(fields[c]).empty()) {
                cell.covariates.emplace_back(std::nullopt);
                continue;
            }
            auto x = detail::parse_double(fields[c]);
            if (!x) throw Error(ErrorCode::ParseError, row_tag + "covariate '" + fields[c] + "' is not a number");
            cell.covariates.emplace_back(*x);
        }
        auto [it, inserted] = unit_index.try_emplace(unit, unit_order.size());
        if (inserted) {
            unit_order.push_back(unit);
            cells.emplace_back();
        }
        auto& unit_cells = cells[it->second];
        if (!unit_cells.emplace(period, std::move(cell)).second) {
            throw Error(ErrorCode::ParseError,
                        row_tag + "duplicate row for unit '" + unit + "' period '" + period + "'");
        }
        periods.try_emplace(period, key);
    }

    auto treated_it = unit_index.find(treated);
    if (treated_it == unit_index.end()) {
        throw Error(ErrorCode::UnknownTreated, "treated unit '" + treated + "' not found");
    }

    std::vector<PeriodKey> sorted;
    sorted.reserve(periods.size());
    for (const auto& [label, key] : periods) sorted.push_back(key);
    if (schema.period_kind == PeriodKind::Integer) {
        std::sort(sorted.begin(), sorted.end(),
                  [](const PeriodKey& a, const PeriodKey& b) { return a.number < b.number; });
    }
    const Index num_periods = static_cast<Index>(sorted.size());
    if (t0 < 2 || t0 >= num_periods) {
        throw Error(ErrorCode::BadT0, "t0=" + std::to_string(t0) + " outside [2, T-1] with T=" +
                                          std::to_string(num_periods));
    }

    std::vector<std::size_t> order{treated_it->second};
    for (std::size_t i = 0; i < unit_order.size(); ++i)
        if (i != treated_it->second) order.push_back(i);

    const Index num_units = static_cast<Index>(order.size());
    const std::size_t num_cov = cov_cols.size();
    PanelData panel;
    panel.t0 = t0;
    panel.outcomes.resize(num_units, num_periods);
    panel.covariate_names = schema.covariate_columns;
    panel.covariates.assign(num_cov, Eigen::MatrixXd(num_units, num_periods));
    for (const auto& p : sorted) panel.period_labels.push_back(p.label);

    for (Index r = 0; r < num_units; ++r) {
        const std::size_t src = order[static_cast<std::size_t>(r)];
        panel.units.push_back(unit_order[src]);
        const auto& unit_cells = cells[src];
        std::vector<std::vector<std::optional<double>>> cov_series(num_cov);
        for (Index t = 0; t < num_periods; ++t) {
            const auto& label = sorted[static_cast<std::size_t>(t)].label;
            auto it = unit_cells.find(label);
            if (it == unit_cells.end()) {
                throw Error(ErrorCode::MissingCell,
                            "unit '" + unit_order[src] + "' has no row for period '" + label + "'");
            }
            panel.outcomes(r, t) = it->second.outcome;
            for (std::size_t k = 0; k < num_cov; ++k) cov_series[k].push_back(it->second.covariates[k]);
        }
        for (std::size_t k = 0; k < num_cov; ++k) {
            const auto& series = cov_series[k];
            const auto given = std::count_if(series.begin(), series.end(),
                                             [](const auto& v) { return v.has_value(); });
            if (given == num_periods) {
                for (Index t = 0; t < num_periods; ++t)
                    panel.covariates[k](r, t) = *series[static_cast<std::size_t>(t)];
            } else if (given == 1) {
                const double v = std::find_if(series.begin(), series.end(),
                                              [](const auto& x) { return x.has_value(); })->value();
                panel.covariates[k].row(r).setConstant(v);
            } else {
                throw Error(ErrorCode::MissingCell, "unit '" + unit_order[src] + "' covariate '" +
                                                        schema.covariate_columns[k] +
                                                        "' must be given once or for every period");
            }
        }
    }
    panel.validate();
    return panel;
}

PanelData load_panel_file(const std::string& path, const PanelSchema& schema,
                          const std::string& treated, Index t0) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoNotFound, "cannot open '" + path + "'");
    return load_panel(in, schema, treated, t0);
}

void write_panel_csv(std::ostream& out, const PanelData& panel, const PanelSchema& schema) {
    out << schema.unit_column << ',' << schema.period_column << ',' << schema.outcome_column;
    for (const auto& name : panel.covariate_names) out << ',' << name;
    out << '\n';
    for (Index j = 0; j < panel.outcomes.rows(); ++j) {
        for (Index t = 0; t < panel.outcomes.cols(); ++t) {
            out << panel.units[static_cast<std::size_t>(j)] << ','
                << panel.period_labels[static_cast<std::size_t>(t)] << ','
                << detail::format_double(panel.outcomes(j, t));
            for (const auto& x : panel.covariates) out << ',' << detail::format_double(x(j, t));
            out << '\n';
        }
    }
}

Eigen::VectorXd window_means(const Eigen::MatrixXd& outcomes, Index window) {
    return outcomes.leftCols(window).rowwise().mean();
}

DemeanedPanel demean(const PanelData& panel) {
    DemeanedPanel d{panel, window_means(panel.outcomes, panel.t0), {}};
    d.demeaned_outcomes = panel.outcomes.colwise() - d.unit_means;
    return d;
}

}  // namespace synthctl
