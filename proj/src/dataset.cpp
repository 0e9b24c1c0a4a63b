#include "tensorstick/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace tensorstick {

void Dataset::validate() const {
  if (Y.rows() != n.rows() || Y.cols() != n.cols())
    throw input_error("Dataset: Y and n dimensions differ");
  if (X.rows() != Y.rows()) throw input_error("Dataset: X row count differs from Y");
  for (int i = 0; i < I(); ++i)
    for (int j = 0; j < J(); ++j) {
      if (n(i, j) < 0) throw input_error("Dataset: negative trial count");
      if (Y(i, j) < 0 || Y(i, j) > n(i, j))
        throw input_error("Dataset: Y outside [0, n] at subject " +
                          std::to_string(i) + ", type " + std::to_string(j));
    }
  if (!X.allFinite()) throw input_error("Dataset: non-finite covariate");
}

std::uint64_t Dataset::hash() const {
  std::string s = std::to_string(I()) + "," + std::to_string(J()) + "," +
                  std::to_string(D()) + ";";
  std::uint64_t h = fnv1a64(s);
  for (int i = 0; i < I(); ++i)
    for (int j = 0; j < J(); ++j) {
      int yn[2] = {Y(i, j), n(i, j)};
      h = fnv1a64(yn, sizeof(yn), h);
    }
  for (int i = 0; i < I(); ++i)
    for (int d = 0; d < D(); ++d) h = fnv1a64(fmt_g17(X(i, d)), h);
  return h;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  const int m = static_cast<int>(rows.size());
  out.Y.resize(m, J());
  out.n.resize(m, J());
  out.X.resize(m, D());
  out.subjects.reserve(m);
  for (int k = 0; k < m; ++k) {
    out.Y.row(k) = Y.row(rows[k]);
    out.n.row(k) = n.row(rows[k]);
    out.X.row(k) = X.row(rows[k]);
    out.subjects.push_back(subjects.empty() ? std::to_string(rows[k])
                                            : subjects[rows[k]]);
  }
  out.types = types;
  out.covariate_names = covariate_names;
  out.x_mean = x_mean;
  out.x_sd = x_sd;
  return out;
}

void standardize_columns(Eigen::MatrixXd& X, Eigen::VectorXd* mean_out,
                         Eigen::VectorXd* sd_out) {
  const long I = X.rows(), D = X.cols();
  Eigen::VectorXd mu(D), sd(D);
  for (long d = 0; d < D; ++d) {
    mu[d] = X.col(d).mean();
    double var = (X.col(d).array() - mu[d]).square().sum() / static_cast<double>(I);
    sd[d] = std::sqrt(var);
    if (!(sd[d] > 1e-12))
      throw input_error("standardize_columns: column " + std::to_string(d + 1) +
                        " is constant");
    X.col(d) = (X.col(d).array() - mu[d]) / sd[d];
  }
  if (mean_out) *mean_out = mu;
  if (sd_out) *sd_out = sd;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

long parse_count(const std::string& s, const std::string& file, int line_no,
                 const char* what) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw input_error(file + " line " + std::to_string(line_no) + ": cannot parse " +
                      what + " '" + s + "'");
  }
}

double parse_real(const std::string& s, const std::string& file, int line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw input_error(file + " line " + std::to_string(line_no) +
                      ": cannot parse value '" + s + "'");
  }
}

}  // namespace

Dataset load_dataset(const std::string& outcomes_csv,
                     const std::string& covariates_csv) {
  std::ifstream cov(covariates_csv);
  if (!cov) throw input_error("cannot open covariates file " + covariates_csv);
  std::string line;
  if (!std::getline(cov, line))
    throw input_error(covariates_csv + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "subject")
    throw input_error(covariates_csv +
                      " line 1: expected header 'subject,<name1>,...'");
  const int D = static_cast<int>(header.size()) - 1;

  Dataset data;
  data.covariate_names.assign(header.begin() + 1, header.end());
  std::unordered_map<std::string, int> subject_index;
  std::vector<Eigen::VectorXd> xrows;
  int line_no = 1;
  while (std::getline(cov, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != D + 1)
      throw input_error(covariates_csv + " line " + std::to_string(line_no) +
                        ": expected " + std::to_string(D + 1) + " fields, got " +
                        std::to_string(f.size()));
    if (subject_index.count(f[0]))
      throw input_error(covariates_csv + " line " + std::to_string(line_no) +
                        ": duplicate subject '" + f[0] + "'");
    subject_index[f[0]] = static_cast<int>(xrows.size());
    data.subjects.push_back(f[0]);
    Eigen::VectorXd x(D);
    for (int d = 0; d < D; ++d) x[d] = parse_real(f[d + 1], covariates_csv, line_no);
    xrows.push_back(x);
  }
  const int I = static_cast<int>(xrows.size());
  if (I == 0) throw input_error(covariates_csv + ": no subject rows");

  std::ifstream out(outcomes_csv);
  if (!out) throw input_error("cannot open outcomes file " + outcomes_csv);
  if (!std::getline(out, line)) throw input_error(outcomes_csv + ": empty file");
  {
    auto h = split_csv_line(line);
    if (h.size() != 4 || h[0] != "subject" || h[1] != "type" || h[2] != "y" ||
        h[3] != "n")
      throw input_error(outcomes_csv + " line 1: expected header 'subject,type,y,n'");
  }

  std::unordered_map<std::string, int> type_index;
  struct Cell {
    int i, j, y, n, line;
  };
  std::vector<Cell> cells;
  line_no = 1;
  while (std::getline(out, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4)
      throw input_error(outcomes_csv + " line " + std::to_string(line_no) +
                        ": expected 4 fields, got " + std::to_string(f.size()));
    auto it = subject_index.find(f[0]);
    if (it == subject_index.end())
      throw input_error(outcomes_csv + " line " + std::to_string(line_no) +
                        ": subject '" + f[0] + "' not present in covariates file");
    int j;
    auto tt = type_index.find(f[1]);
    if (tt == type_index.end()) {
      j = static_cast<int>(data.types.size());
      type_index[f[1]] = j;
      data.types.push_back(f[1]);
    } else {
      j = tt->second;
    }
    long y = parse_count(f[2], outcomes_csv, line_no, "y");
    long nn = parse_count(f[3], outcomes_csv, line_no, "n");
    if (nn < 0)
      throw input_error(outcomes_csv + " line " + std::to_string(line_no) +
                        ": negative n");
    if (y < 0 || y > nn)
      throw input_error(outcomes_csv + " line " + std::to_string(line_no) + ": y (" +
                        std::to_string(y) + ") outside [0, n=" + std::to_string(nn) +
                        "]");
    cells.push_back({it->second, j, static_cast<int>(y), static_cast<int>(nn),
                     line_no});
  }
  const int J = static_cast<int>(data.types.size());
  if (J == 0) throw input_error(outcomes_csv + ": no outcome rows");

  data.Y = Eigen::MatrixXi::Zero(I, J);
  data.n = Eigen::MatrixXi::Zero(I, J);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(I, J);
  for (const auto& c : cells) {
    if (seen(c.i, c.j))
      throw input_error(outcomes_csv + " line " + std::to_string(c.line) +
                        ": duplicate cell for subject '" + data.subjects[c.i] +
                        "', type '" + data.types[c.j] + "'");
    seen(c.i, c.j) = 1;
    data.Y(c.i, c.j) = c.y;
    data.n(c.i, c.j) = c.n;
  }

  data.X.resize(I, D);
  for (int i = 0; i < I; ++i) data.X.row(i) = xrows[i];
  standardize_columns(data.X, &data.x_mean, &data.x_sd);
  data.validate();
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& outcomes_csv,
                       const std::string& covariates_csv) {
  std::ofstream out(outcomes_csv);
  if (!out) throw input_error("cannot write " + outcomes_csv);
  out << "subject,type,y,n\n";
  for (int i = 0; i < data.I(); ++i)
    for (int j = 0; j < data.J(); ++j)
      out << data.subjects[i] << "," << data.types[j] << "," << data.Y(i, j) << ","
          << data.n(i, j) << "\n";

  std::ofstream cov(covariates_csv);
  if (!cov) throw input_error("cannot write " + covariates_csv);
  cov << "subject";
  for (const auto& name : data.covariate_names) cov << "," << name;
  cov << "\n";
  for (int i = 0; i < data.I(); ++i) {
    cov << data.subjects[i];
    for (int d = 0; d < data.D(); ++d) cov << "," << fmt_g17(data.X(i, d));
    cov << "\n";
  }
}

}  // namespace tensorstick
