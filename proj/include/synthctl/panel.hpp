#pragma once

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace synthctl {

using Index = Eigen::Index;

enum class PeriodKind { Integer, String };

/// Column bindings for long-format panel CSV files.
struct PanelSchema {
    std::string unit_column = "unit";
    std::string period_column = "period";
    std::string outcome_column = "outcome";
    std::vector<std::string> covariate_columns;
    PeriodKind period_kind = PeriodKind::Integer;
};

/// Outcome panel for one treated unit and J untreated donors.
///
/// Row 0 of `outcomes` is always the treated unit; rows 1..J are donors in
/// the order they first appear in the source. Columns are periods 1..T in
/// ascending order, and the first `t0` columns are pre-treatment.
/// Covariates, when present, hold one (J+1) x T matrix per covariate.
struct PanelData {
    std::vector<std::string> units;
    std::vector<std::string> period_labels;
    Eigen::MatrixXd outcomes;
    std::vector<std::string> covariate_names;
    std::vector<Eigen::MatrixXd> covariates;
    Index t0 = 0;

    Index num_donors() const { return outcomes.rows() - 1; }
    Index num_periods() const { return outcomes.cols(); }
    Index num_post() const { return outcomes.cols() - t0; }
    Index num_covariates() const { return static_cast<Index>(covariates.size()); }
    const std::string& treated_unit() const { return units.front(); }

    /// Throws BadT0 / DimensionMismatch / MissingCell when an invariant fails.
    void validate() const;
};

/// Builds a validated panel from in-memory data; row 0 must be treated.
PanelData make_panel(Eigen::MatrixXd outcomes, Index t0,
                     std::vector<std::string> units = {},
                     std::vector<Eigen::MatrixXd> covariates = {},
                     std::vector<std::string> covariate_names = {});

/// Parses a long-format CSV (one row per unit-period). The treated unit is
/// moved to index 0 and periods are sorted ascending per `schema.period_kind`.
/// A covariate given for only one period of a unit is broadcast across all
/// periods of that unit; empty covariate cells are allowed in that case.
PanelData load_panel(std::istream& source, const PanelSchema& schema,
                     const std::string& treated, Index t0);

PanelData load_panel_file(const std::string& path, const PanelSchema& schema,
                          const std::string& treated, Index t0);

/// Writes the panel in the long format understood by load_panel, using
/// shortest round-trip float formatting.
void write_panel_csv(std::ostream& out, const PanelData& panel,
                     const PanelSchema& schema = {});

struct DemeanedPanel {
    PanelData base;
    Eigen::VectorXd unit_means;
    Eigen::MatrixXd demeaned_outcomes;
};

/// Subtracts each unit's pre-period mean from all of its periods.
DemeanedPanel demean(const PanelData& panel);

/// Pre-period means of each row over the first `window` columns.
Eigen::VectorXd window_means(const Eigen::MatrixXd& outcomes, Index window);

}  // namespace synthctl
