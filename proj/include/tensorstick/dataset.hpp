#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "tensorstick/common.hpp"

namespace tensorstick {

// Clustered binomial data: counts over I subjects x J types plus
// subject-level covariates. X is held standardized (each column mean 0,
// variance 1); the affine statistics that produced it are kept so new
// covariate profiles can be mapped into the same scale.
struct Dataset {
  Eigen::MatrixXi Y;  // diseased-site counts, I x J
  Eigen::MatrixXi n;  // trial counts, I x J
  Eigen::MatrixXd X;  // standardized covariates, I x D

  std::vector<std::string> subjects;
  std::vector<std::string> types;
  std::vector<std::string> covariate_names;

  Eigen::VectorXd x_mean;  // column stats applied at standardization
  Eigen::VectorXd x_sd;

  int I() const { return static_cast<int>(Y.rows()); }
  int J() const { return static_cast<int>(Y.cols()); }
  int D() const { return static_cast<int>(X.cols()); }

  void validate() const;  // 0 <= Y <= n, matching dims
  std::uint64_t hash() const;

  // Row subset (e.g. a CV fold); keeps names, copies stats.
  Dataset subset(const std::vector<int>& rows) const;
};

// Center and scale each column to mean 0, variance 1 (population variance).
// Returns the stats used; throws on a constant column.
void standardize_columns(Eigen::MatrixXd& X, Eigen::VectorXd* mean_out,
                         Eigen::VectorXd* sd_out);

// Ingest the two-file CSV format:
//   outcomes:   header "subject,type,y,n", one row per (subject,type) cell
//   covariates: header "subject,<name1>,...,<nameD>", one row per subject
// Subject identifiers must match across files; types are indexed by first
// appearance. Cells absent from the outcomes file get y = n = 0. Covariates
// are standardized on load. Errors cite the offending file line.
Dataset load_dataset(const std::string& outcomes_csv,
                     const std::string& covariates_csv);

void write_dataset_csv(const Dataset& data, const std::string& outcomes_csv,
                       const std::string& covariates_csv);

}  // namespace tensorstick
