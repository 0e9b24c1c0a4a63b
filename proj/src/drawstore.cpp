#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tensorstick/gibbs.hpp"

namespace tensorstick {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw input_error("cannot write " + path.string());
  for (size_t k = 0; k < header.size(); ++k)
    f << (k ? "," : "") << header[k];
  f << "\n";
  for (size_t t = 0; t < rows.size(); ++t) {
    f << (t + 1);
    for (double x : rows[t]) f << "," << fmt_g17(x);
    f << "\n";
  }
}

std::vector<std::vector<double>> read_csv(const fs::path& path, size_t cols) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot read " + path.string());
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(cols);
    size_t pos = 0;
    int field = 0;
    while (pos <= line.size()) {
      size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      if (field > 0)  // field 0 is the draw index
        row.push_back(std::strtod(line.substr(pos, next - pos).c_str(), nullptr));
      ++field;
      pos = next + 1;
    }
    if (row.size() != cols)
      throw input_error(path.string() + ": expected " + std::to_string(cols) +
                        " value columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> block_header(const std::string& stem, int rows, int cols) {
  std::vector<std::string> h{"draw"};
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b)
      h.push_back(stem + "_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
  return h;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(m.size());
  for (long a = 0; a < m.rows(); ++a)
    for (long b = 0; b < m.cols(); ++b) v.push_back(m(a, b));
  return v;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int a = 0; a < rows; ++a)
    for (int b = 0; b < cols; ++b) m(a, b) = v[static_cast<size_t>(a) * cols + b];
  return m;
}

}  // namespace

void DrawStore::save(const std::string& dir) const {
  fs::create_directories(dir);
  const auto& m = meta;
  const int T = static_cast<int>(draws.size());
  const int H = m.model.H, J = m.J, I = m.I, D = m.D;

  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["model"] = {{"H", m.model.H},
                {"coef_structure", to_string(m.model.coef)},
                {"rank", m.model.rank},
                {"error_structure", to_string(m.model.error)},
                {"error_rank", m.model.error_rank},
                {"beta_a", m.model.beta_a},
                {"beta_b", m.model.beta_b},
                {"ig_shape", m.model.ig_shape},
                {"ig_rate", m.model.ig_rate}};
  j["chain"] = {{"iterations", m.chain.iterations},
                {"burn_in", m.chain.burn_in},
                {"thin", m.chain.thin},
                {"seed", m.chain.seed},
                {"store_latents", m.chain.store_latents}};
  j["dims"] = {{"I", I}, {"J", J}, {"D", D}};
  j["dataset_hash"] = hex_u64(m.dataset_hash);
  j["config_hash"] = hex_u64(m.config_hash);
  j["covariate_names"] = m.covariate_names;
  j["type_names"] = m.type_names;
  j["x_mean"] = std::vector<double>(m.x_mean.data(), m.x_mean.data() + m.x_mean.size());
  j["x_sd"] = std::vector<double>(m.x_sd.data(), m.x_sd.data() + m.x_sd.size());
  j["draw_count"] = T;
  {
    std::ofstream f(fs::path(dir) / "meta.json");
    if (!f) throw input_error("cannot write meta.json in " + dir);
    f << j.dump(2) << "\n";
  }

  auto rows_of = [&](auto&& get) {
    std::vector<std::vector<double>> rows;
    rows.reserve(T);
    for (const auto& s : draws) rows.push_back(get(s));
    return rows;
  };

  write_csv(fs::path(dir) / "theta.csv", block_header("theta", 1, H),
            rows_of([](const Snapshot& s) {
              return std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size());
            }));
  write_csv(fs::path(dir) / "zjh.csv", block_header("z", J, H),
            rows_of([](const Snapshot& s) { return flatten(s.Zjh); }));
  write_csv(fs::path(dir) / "alpha.csv", {"draw", "alpha"},
            rows_of([](const Snapshot& s) { return std::vector<double>{s.alpha}; }));
  write_csv(fs::path(dir) / "loglik.csv", {"draw", "loglik"},
            rows_of([](const Snapshot& s) { return std::vector<double>{s.loglik}; }));
  write_csv(fs::path(dir) / "c.csv", block_header("c", I, J),
            rows_of([](const Snapshot& s) {
              std::vector<double> v;
              v.reserve(s.C.size());
              for (long a = 0; a < s.C.rows(); ++a)
                for (long b = 0; b < s.C.cols(); ++b) v.push_back(s.C(a, b));
              return v;
            }));

  switch (m.model.coef) {
    case CoefStructure::low_rank:
      write_csv(fs::path(dir) / "b1.csv", block_header("b1", D, m.model.rank),
                rows_of([](const Snapshot& s) { return flatten(s.coef.cp.F1); }));
      write_csv(fs::path(dir) / "b2.csv", block_header("b2", J, m.model.rank),
                rows_of([](const Snapshot& s) { return flatten(s.coef.cp.F2); }));
      write_csv(fs::path(dir) / "b3.csv", block_header("b3", H, m.model.rank),
                rows_of([](const Snapshot& s) { return flatten(s.coef.cp.F3); }));
      break;
    case CoefStructure::full: {
      std::vector<std::string> h{"draw"};
      for (int d = 0; d < D; ++d)
        for (int jj = 0; jj < J; ++jj)
          for (int hh = 0; hh < H; ++hh)
            h.push_back("b_" + std::to_string(d + 1) + "_" + std::to_string(jj + 1) +
                        "_" + std::to_string(hh + 1));
      write_csv(fs::path(dir) / "b_full.csv", h, rows_of([](const Snapshot& s) {
                  return std::vector<double>(s.coef.dense.v.data(),
                                             s.coef.dense.v.data() + s.coef.dense.v.size());
                }));
      break;
    }
    case CoefStructure::shared_types:
      write_csv(fs::path(dir) / "b_shared.csv", block_header("b", D, H),
                rows_of([](const Snapshot& s) { return flatten(s.coef.shared); }));
      break;
    case CoefStructure::none:
      break;
  }

  if (m.model.error == ErrorStructure::low_rank) {
    const int Re = m.model.error_rank;
    write_csv(fs::path(dir) / "e1.csv", block_header("e1", I, Re),
              rows_of([](const Snapshot& s) { return flatten(s.err.cp.F1); }));
    write_csv(fs::path(dir) / "e2.csv", block_header("e2", J, Re),
              rows_of([](const Snapshot& s) { return flatten(s.err.cp.F2); }));
    write_csv(fs::path(dir) / "e3.csv", block_header("e3", H, Re),
              rows_of([](const Snapshot& s) { return flatten(s.err.cp.F3); }));
    write_csv(fs::path(dir) / "sigma2.csv", block_header("sigma2", 1, Re),
              rows_of([](const Snapshot& s) {
                return std::vector<double>(s.sigma2.data(),
                                           s.sigma2.data() + s.sigma2.size());
              }));
  }

  if (m.chain.store_latents) {
    std::vector<std::string> h{"draw"};
    for (int i = 0; i < I; ++i)
      for (int jj = 0; jj < J; ++jj)
        for (int hh = 0; hh < H; ++hh)
          h.push_back("zstar_" + std::to_string(i + 1) + "_" + std::to_string(jj + 1) +
                      "_" + std::to_string(hh + 1));
    write_csv(fs::path(dir) / "zstar.csv", h, rows_of([](const Snapshot& s) {
                return std::vector<double>(s.Zstar.v.data(),
                                           s.Zstar.v.data() + s.Zstar.v.size());
              }));
  }
}

DrawStore DrawStore::load(const std::string& dir) {
  std::ifstream f(fs::path(dir) / "meta.json");
  if (!f) throw input_error("cannot read meta.json in " + dir);
  ordered_json j = ordered_json::parse(f);
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw input_error("unsupported draw-store format version in " + dir);

  DrawStore store;
  auto& m = store.meta;
  const auto& jm = j.at("model");
  m.model.H = jm.at("H").get<int>();
  m.model.coef = coef_structure_from_string(jm.at("coef_structure").get<std::string>());
  m.model.rank = jm.at("rank").get<int>();
  m.model.error =
      error_structure_from_string(jm.at("error_structure").get<std::string>());
  m.model.error_rank = jm.at("error_rank").get<int>();
  m.model.beta_a = jm.at("beta_a").get<double>();
  m.model.beta_b = jm.at("beta_b").get<double>();
  m.model.ig_shape = jm.at("ig_shape").get<double>();
  m.model.ig_rate = jm.at("ig_rate").get<double>();
  const auto& jc = j.at("chain");
  m.chain.iterations = jc.at("iterations").get<int>();
  m.chain.burn_in = jc.at("burn_in").get<int>();
  m.chain.thin = jc.at("thin").get<int>();
  m.chain.seed = jc.at("seed").get<std::uint64_t>();
  m.chain.store_latents = jc.at("store_latents").get<bool>();
  m.I = j.at("dims").at("I").get<int>();
  m.J = j.at("dims").at("J").get<int>();
  m.D = j.at("dims").at("D").get<int>();
  m.dataset_hash = std::stoull(j.at("dataset_hash").get<std::string>(), nullptr, 16);
  m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
  m.type_names = j.at("type_names").get<std::vector<std::string>>();
  auto xm = j.at("x_mean").get<std::vector<double>>();
  auto xs = j.at("x_sd").get<std::vector<double>>();
  m.x_mean = Eigen::Map<Eigen::VectorXd>(xm.data(), xm.size());
  m.x_sd = Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size());
  const int T = j.at("draw_count").get<int>();
  const int H = m.model.H, I = m.I, J = m.J, D = m.D;

  auto theta = read_csv(fs::path(dir) / "theta.csv", H);
  auto zjh = read_csv(fs::path(dir) / "zjh.csv", static_cast<size_t>(J) * H);
  auto alpha = read_csv(fs::path(dir) / "alpha.csv", 1);
  auto ll = read_csv(fs::path(dir) / "loglik.csv", 1);
  auto c = read_csv(fs::path(dir) / "c.csv", static_cast<size_t>(I) * J);

  store.draws.resize(T);
  for (int t = 0; t < T; ++t) {
    Snapshot& s = store.draws[t];
    s.theta = Eigen::Map<Eigen::VectorXd>(theta[t].data(), H);
    s.Zjh = unflatten(zjh[t], J, H);
    s.alpha = alpha[t][0];
    s.loglik = ll[t][0];
    s.C.resize(I, J);
    for (int a = 0; a < I; ++a)
      for (int b = 0; b < J; ++b)
        s.C(a, b) = static_cast<int>(c[t][static_cast<size_t>(a) * J + b]);
    s.coef.kind = m.model.coef;
    s.err.kind = m.model.error;
  }

  switch (m.model.coef) {
    case CoefStructure::low_rank: {
      auto b1 = read_csv(fs::path(dir) / "b1.csv", static_cast<size_t>(D) * m.model.rank);
      auto b2 = read_csv(fs::path(dir) / "b2.csv", static_cast<size_t>(J) * m.model.rank);
      auto b3 = read_csv(fs::path(dir) / "b3.csv", static_cast<size_t>(H) * m.model.rank);
      for (int t = 0; t < T; ++t) {
        store.draws[t].coef.cp.F1 = unflatten(b1[t], D, m.model.rank);
        store.draws[t].coef.cp.F2 = unflatten(b2[t], J, m.model.rank);
        store.draws[t].coef.cp.F3 = unflatten(b3[t], H, m.model.rank);
      }
      break;
    }
    case CoefStructure::full: {
      auto bf = read_csv(fs::path(dir) / "b_full.csv",
                         static_cast<size_t>(D) * J * H);
      for (int t = 0; t < T; ++t) {
        store.draws[t].coef.dense = Array3(D, J, H);
        for (size_t k = 0; k < bf[t].size(); ++k) store.draws[t].coef.dense.v[k] = bf[t][k];
      }
      break;
    }
    case CoefStructure::shared_types: {
      auto bs = read_csv(fs::path(dir) / "b_shared.csv", static_cast<size_t>(D) * H);
      for (int t = 0; t < T; ++t) store.draws[t].coef.shared = unflatten(bs[t], D, H);
      break;
    }
    case CoefStructure::none:
      break;
  }

  if (m.model.error == ErrorStructure::low_rank) {
    const int Re = m.model.error_rank;
    auto e1 = read_csv(fs::path(dir) / "e1.csv", static_cast<size_t>(I) * Re);
    auto e2 = read_csv(fs::path(dir) / "e2.csv", static_cast<size_t>(J) * Re);
    auto e3 = read_csv(fs::path(dir) / "e3.csv", static_cast<size_t>(H) * Re);
    auto s2 = read_csv(fs::path(dir) / "sigma2.csv", Re);
    for (int t = 0; t < T; ++t) {
      store.draws[t].err.cp.F1 = unflatten(e1[t], I, Re);
      store.draws[t].err.cp.F2 = unflatten(e2[t], J, Re);
      store.draws[t].err.cp.F3 = unflatten(e3[t], H, Re);
      store.draws[t].sigma2 = Eigen::Map<Eigen::VectorXd>(s2[t].data(), Re);
    }
  }

  if (m.chain.store_latents) {
    auto zs = read_csv(fs::path(dir) / "zstar.csv", static_cast<size_t>(I) * J * H);
    for (int t = 0; t < T; ++t) {
      store.draws[t].Zstar = Array3(I, J, H);
      for (size_t k = 0; k < zs[t].size(); ++k) store.draws[t].Zstar.v[k] = zs[t][k];
    }
  }
  return store;
}

}  // namespace tensorstick
