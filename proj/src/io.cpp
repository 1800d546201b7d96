#include "spatfactor/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "spatfactor/errors.hpp"

namespace spatfactor::io {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp);
    out << content;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " -> " + path);
}

std::uint64_t fnv64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for digest: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  const int p = data.p();
  out << "location_id,x,y,type,time,value";
  for (int c = 0; c < p; ++c) out << ",cov" << (c + 1);
  out << "\n";
  for (int i = 0; i < data.m(); ++i)
    for (int o = 0; o < data.O; ++o)
      for (int t = 0; t < data.T(); ++t) {
        const int s = widx(i, o, data.m());
        out << (i + 1) << ',' << fmt(data.coords(i, 0)) << ','
            << fmt(data.coords.cols() > 1 ? data.coords(i, 1) : 0.0) << ','
            << (o + 1) << ',' << fmt(data.timepoints[t]) << ','
            << fmt(data.y(s, t));
        for (int c = 0; c < p; ++c) out << ',' << fmt(data.X[t](s, c));
        out << "\n";
      }
  write_text_atomic(path, out.str());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, int lineno, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError("dataset line " + std::to_string(lineno) + ": bad " + what +
                    " value '" + s + "'");
  }
}

}  // namespace

LoadedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw DataError("dataset is empty: " + path);
  ++lineno;
  auto header = split_csv(line);
  if (header.size() < 6 || header[0] != "location_id" || header[1] != "x" ||
      header[2] != "y" || header[3] != "type" || header[4] != "time" ||
      header[5] != "value")
    throw DataError("dataset line 1: expected header "
                    "location_id,x,y,type,time,value[,cov...]");
  const int p = static_cast<int>(header.size()) - 6;

  struct Row {
    int loc, type;
    double x, y, time, value;
    std::vector<double> cov;
    int lineno;
  };
  std::vector<Row> rows;
  std::map<double, int> times;
  int max_loc = 0, max_type = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (static_cast<int>(f.size()) != 6 + p)
      throw DataError("dataset line " + std::to_string(lineno) + ": expected " +
                      std::to_string(6 + p) + " fields, got " +
                      std::to_string(f.size()));
    Row r;
    r.loc = static_cast<int>(parse_num(f[0], lineno, "location_id"));
    r.x = parse_num(f[1], lineno, "x");
    r.y = parse_num(f[2], lineno, "y");
    r.type = static_cast<int>(parse_num(f[3], lineno, "type"));
    r.time = parse_num(f[4], lineno, "time");
    r.value = parse_num(f[5], lineno, "value");
    r.lineno = lineno;
    for (int c = 0; c < p; ++c) r.cov.push_back(parse_num(f[6 + c], lineno, "covariate"));
    if (r.loc < 1) throw DataError("dataset line " + std::to_string(lineno) +
                                   ": location_id must be >= 1");
    if (r.type < 1) throw DataError("dataset line " + std::to_string(lineno) +
                                    ": type must be >= 1");
    max_loc = std::max(max_loc, r.loc);
    max_type = std::max(max_type, r.type);
    times.emplace(r.time, 0);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("dataset has no data rows: " + path);

  const int m = max_loc, O = max_type, T = static_cast<int>(times.size());
  int ti = 0;
  for (auto& [tv, idx] : times) idx = ti++;

  LoadedDataset out;
  out.raw_timepoints.reserve(T);
  for (const auto& [tv, idx] : times) out.raw_timepoints.push_back(tv);

  // uniform-spacing detection; equispaced grids are normalized to unit steps
  bool equi = true;
  if (T > 1) {
    const double d0 = out.raw_timepoints[1] - out.raw_timepoints[0];
    if (!(d0 > 0)) equi = false;
    for (int t = 1; t + 1 < T && equi; ++t) {
      double d = out.raw_timepoints[t + 1] - out.raw_timepoints[t];
      if (std::fabs(d - d0) > 1e-9 * std::max(1.0, std::fabs(d0))) equi = false;
    }
  }
  out.data.equispaced = equi;
  out.rescaled_timepoints = equi;
  out.data.timepoints.resize(T);
  for (int t = 0; t < T; ++t)
    out.data.timepoints[t] = equi ? t + 1.0 : out.raw_timepoints[t];

  out.data.O = O;
  out.data.coords = MatrixXd::Constant(m, 2, std::nan(""));
  out.data.y = MatrixXd::Constant(m * O, T, std::nan(""));
  if (p > 0) out.data.X.assign(T, MatrixXd::Zero(m * O, p));

  for (const auto& r : rows) {
    const int i = r.loc - 1, o = r.type - 1, t = times[r.time];
    if (std::isnan(out.data.coords(i, 0))) {
      out.data.coords(i, 0) = r.x;
      out.data.coords(i, 1) = r.y;
    } else if (out.data.coords(i, 0) != r.x || out.data.coords(i, 1) != r.y) {
      throw DataError("dataset line " + std::to_string(r.lineno) +
                      ": inconsistent coordinates for location " +
                      std::to_string(r.loc));
    }
    const int s = widx(i, o, m);
    if (!std::isnan(out.data.y(s, t)))
      throw DataError("dataset line " + std::to_string(r.lineno) +
                      ": duplicate cell (location " + std::to_string(r.loc) +
                      ", type " + std::to_string(r.type) + ", time " +
                      fmt(r.time) + ")");
    out.data.y(s, t) = r.value;
    for (int c = 0; c < p; ++c) out.data.X[t](s, c) = r.cov[c];
  }
  for (int i = 0; i < m; ++i)
    if (std::isnan(out.data.coords(i, 0)))
      throw DataError("dataset: location " + std::to_string(i + 1) +
                      " never appears");
  for (int s = 0; s < m * O; ++s)
    for (int t = 0; t < T; ++t)
      if (std::isnan(out.data.y(s, t)))
        throw DataError("dataset: missing cell (location " +
                        std::to_string(s % m + 1) + ", type " +
                        std::to_string(s / m + 1) + ", time index " +
                        std::to_string(t + 1) + ")");
  out.data.validate();
  return out;
}

void write_truth_csv(const std::string& path, const sim::GroundTruth& truth,
                     const Eigen::MatrixXd& coords, int O) {
  std::ostringstream out;
  const int m = static_cast<int>(coords.rows());
  const int k = static_cast<int>(truth.labels.cols());
  out << "# generating parameters: psi=" << fmt(truth.psi)
      << " rho=" << fmt(truth.rho) << " sigma2=" << fmt(truth.sigma2) << "\n";
  out << "# atoms per factor:";
  for (int j = 0; j < k; ++j) {
    out << " f" << (j + 1) << "=(";
    for (int l = 0; l < truth.atoms[j].size(); ++l)
      out << (l ? ";" : "") << fmt(truth.atoms[j][l]);
    out << ")";
  }
  out << "\n";
  out << "location_id,x,y,type";
  for (int j = 0; j < k; ++j) out << ",label_f" << (j + 1);
  out << "\n";
  for (int i = 0; i < m; ++i)
    for (int o = 0; o < O; ++o) {
      out << (i + 1) << ',' << fmt(coords(i, 0)) << ',' << fmt(coords(i, 1))
          << ',' << (o + 1);
      for (int j = 0; j < k; ++j) out << ',' << (truth.labels(widx(i, o, m), j) + 1);
      out << "\n";
    }
  // eta trace appended as comment block keeps the file single-artifact
  out << "# eta rows t=1..T:";
  out << "\n";
  for (int t = 0; t < truth.eta.rows(); ++t) {
    out << "# eta";
    for (int j = 0; j < truth.eta.cols(); ++j) out << ',' << fmt(truth.eta(t, j));
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

namespace {

void write_matrix_family(const std::string& dir, const std::string& name,
                         const std::string& comment,
                         const std::vector<std::string>& cols,
                         const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  out << "# " << comment << "\n";
  out << "iter";
  for (const auto& c : cols) out << ',' << c;
  out << "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << (r + 1);
    for (const auto& v : rows[r]) out << ',' << v;
    out << "\n";
  }
  write_text_atomic(dir + "/" + name, out.str());
}

std::vector<std::string> csv_data_rows(std::ifstream& in, const std::string& file,
                                       std::vector<std::string>* header) {
  std::string line;
  std::vector<std::string> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty()) continue;
    if (!have_header) {
      if (header) {
        for (auto& h : split_csv(line)) header->push_back(h);
      }
      have_header = true;
      continue;
    }
    rows.push_back(line);
  }
  if (!have_header) throw IoError("missing header in " + file);
  return rows;
}

double cell_num(const std::string& s, const std::string& file) {
  if (s.empty()) throw IoError("unexpected empty cell in " + file);
  return std::stod(s);
}

}  // namespace

void write_store(const std::string& dir, const gibbs::PosteriorStore& store,
                 const Dataset& data) {
  fs::create_directories(dir);
  const int m = store.m, O = store.O, T = store.T, k = store.k, p = store.p;
  const int mO = m * O;
  const long W = store.W();

  {  // store_meta: dimensions + geometry needed to reload
    std::ostringstream out;
    out << "meta.m = " << m << "\nmeta.O = " << O << "\nmeta.T = " << T
        << "\nmeta.k = " << k << "\nmeta.p = " << p << "\nmeta.W = " << W
        << "\nmeta.variant = " << variant_to_string(store.variant)
        << "\nmeta.L_init = " << store.L_init << "\nmeta.seed = " << store.seed
        << "\nmeta.equispaced = " << (data.equispaced ? "true" : "false") << "\n";
    write_text_atomic(dir + "/store_meta.txt", out.str());
  }
  {  // coordinates and timepoints
    std::ostringstream out;
    out << "location_id,x,y\n";
    for (int i = 0; i < m; ++i)
      out << (i + 1) << ',' << fmt(data.coords(i, 0)) << ','
          << fmt(data.coords(i, 1)) << "\n";
    write_text_atomic(dir + "/coords.csv", out.str());
    std::ostringstream tp;
    tp << "time\n";
    for (double v : data.timepoints) tp << fmt(v) << "\n";
    write_text_atomic(dir + "/timepoints.csv", tp.str());
  }

  auto col_site = [&](const std::string& stem, int i, int o) {
    return stem + "_loc" + std::to_string(i + 1) + "_type" + std::to_string(o + 1);
  };

  {  // eta
    std::vector<std::string> cols;
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < k; ++j)
        cols.push_back("eta_t" + std::to_string(t + 1) + "_f" + std::to_string(j + 1));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int t = 0; t < T; ++t)
        for (int j = 0; j < k; ++j) rows[w].push_back(fmt(store.eta[w](t, j)));
    write_matrix_family(dir, "eta.csv",
                        "temporal factors; column eta_t{t}_f{j}, t fastest outer",
                        cols, rows);
  }
  if (p > 0) {
    std::vector<std::string> cols;
    for (int c = 0; c < p; ++c) cols.push_back("beta" + std::to_string(c + 1));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int c = 0; c < p; ++c) rows[w].push_back(fmt(store.beta[w][c]));
    write_matrix_family(dir, "beta.csv", "regression coefficients", cols, rows);
  }
  {
    std::vector<std::string> cols;
    for (int o = 0; o < O; ++o)
      for (int i = 0; i < m; ++i) cols.push_back(col_site("sigma2", i, o));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int s = 0; s < mO; ++s) rows[w].push_back(fmt(store.sigma2[w][s]));
    write_matrix_family(dir, "sigma2.csv",
                        "error variances; space varies fastest within type",
                        cols, rows);
  }
  {
    std::vector<std::string> cols;
    for (int a = 0; a < O; ++a)
      for (int b = 0; b < O; ++b)
        cols.push_back("kappa_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int a = 0; a < O; ++a)
        for (int b = 0; b < O; ++b) rows[w].push_back(fmt(store.kappa[w](a, b)));
    write_matrix_family(dir, "kappa.csv", "observation-type covariance", cols, rows);
  }
  {
    std::vector<std::string> cols;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        cols.push_back("upsilon_" + std::to_string(a + 1) + "_" + std::to_string(b + 1));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) rows[w].push_back(fmt(store.Upsilon[w](a, b)));
    write_matrix_family(dir, "upsilon.csv", "factor covariance", cols, rows);
  }
  if (!store.psi.empty()) {
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w) rows[w].push_back(fmt(store.psi[w]));
    write_matrix_family(dir, "psi.csv", "temporal tuning parameter", {"psi"}, rows);
  }
  if (!store.rho.empty()) {
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w) rows[w].push_back(fmt(store.rho[w]));
    write_matrix_family(dir, "rho.csv", "spatial tuning parameter", {"rho"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w) rows[w].push_back(fmt(store.deviance[w]));
    write_matrix_family(dir, "deviance.csv", "-2 log likelihood per kept iteration",
                        {"deviance"}, rows);
  }

  if (store.clustering()) {
    const int L0 = store.L_init;
    {
      std::vector<std::string> cols;
      for (int j = 0; j < k; ++j) cols.push_back("L_f" + std::to_string(j + 1));
      std::vector<std::vector<std::string>> rows(W);
      for (long w = 0; w < W; ++w)
        for (int j = 0; j < k; ++j) rows[w].push_back(std::to_string(store.L[w][j]));
      write_matrix_family(dir, "L.csv", "truncation level per factor", cols, rows);
    }
    {
      std::vector<std::string> cols;
      for (int j = 0; j < k; ++j)
        for (int l = 0; l < L0; ++l)
          cols.push_back("theta_f" + std::to_string(j + 1) + "_l" + std::to_string(l + 1));
      std::vector<std::vector<std::string>> rows(W);
      for (long w = 0; w < W; ++w)
        for (int j = 0; j < k; ++j)
          for (int l = 0; l < L0; ++l)
            rows[w].push_back(l < store.L[w][j] ? fmt(store.theta[w][j][l]) : "");
      write_matrix_family(dir, "theta.csv",
                          "atoms; cells beyond the iteration's L_j are empty",
                          cols, rows);
    }
    {
      std::vector<std::string> cols;
      for (int j = 0; j < k; ++j)
        for (int o = 0; o < O; ++o)
          for (int i = 0; i < m; ++i)
            cols.push_back(col_site("xi_f" + std::to_string(j + 1), i, o));
      std::vector<std::vector<std::string>> rows(W);
      for (long w = 0; w < W; ++w)
        for (int j = 0; j < k; ++j)
          for (int s = 0; s < mO; ++s)
            rows[w].push_back(std::to_string(store.labels[w](s, j) + 1));
      write_matrix_family(dir, "labels.csv", "cluster labels, 1-based", cols, rows);
    }
    {
      std::vector<std::string> cols;
      for (int j = 0; j < k; ++j)
        for (int l = 0; l < L0; ++l)
          for (int o = 0; o < O; ++o)
            for (int i = 0; i < m; ++i)
              cols.push_back("w_f" + std::to_string(j + 1) + "_l" +
                             std::to_string(l + 1) + "_loc" + std::to_string(i + 1) +
                             "_type" + std::to_string(o + 1));
      std::vector<std::vector<std::string>> rows(W);
      for (long w = 0; w < W; ++w)
        for (int j = 0; j < k; ++j)
          for (int l = 0; l < L0; ++l)
            for (int s = 0; s < mO; ++s)
              rows[w].push_back(l < store.L[w][j] ? fmt(store.w[w][j](s, l)) : "");
      write_matrix_family(dir, "weights.csv",
                          "stick-breaking weights; space-then-type ordering; "
                          "cells beyond the iteration's L_j are empty",
                          cols, rows);
    }
    {
      std::vector<std::string> cols;
      for (int j = 0; j < k; ++j)
        for (int l = 0; l + 1 < L0; ++l)
          for (int i = 0; i < m; ++i)
            for (int o = 0; o < O; ++o)
              cols.push_back("alpha_f" + std::to_string(j + 1) + "_l" +
                             std::to_string(l + 1) + "_loc" + std::to_string(i + 1) +
                             "_type" + std::to_string(o + 1));
      std::vector<std::vector<std::string>> rows(W);
      for (long w = 0; w < W; ++w)
        for (int j = 0; j < k; ++j)
          for (int l = 0; l + 1 < L0; ++l)
            for (int a = 0; a < mO; ++a)
              rows[w].push_back(l + 1 < store.L[w][j] ? fmt(store.alpha[w][j][l][a]) : "");
      write_matrix_family(dir, "alpha.csv",
                          "latent stick-breaking surfaces; type-then-space "
                          "ordering; cells beyond the iteration's L_j-1 are empty",
                          cols, rows);
    }
  } else {
    std::vector<std::string> cols;
    for (int j = 0; j < k; ++j)
      for (int o = 0; o < O; ++o)
        for (int i = 0; i < m; ++i)
          cols.push_back(col_site("lambda_f" + std::to_string(j + 1), i, o));
    std::vector<std::vector<std::string>> rows(W);
    for (long w = 0; w < W; ++w)
      for (int j = 0; j < k; ++j)
        for (int s = 0; s < mO; ++s) rows[w].push_back(fmt(store.lambda[w](s, j)));
    write_matrix_family(dir, "lambda.csv",
                        "baseline loadings; space-then-type ordering", cols, rows);
  }
}

StoreBundle load_store(const std::string& dir) {
  auto read_kv = [&](const std::string& file) {
    std::ifstream in(dir + "/" + file);
    if (!in) throw IoError("cannot open " + dir + "/" + file);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
  };
  auto meta = read_kv("store_meta.txt");
  StoreBundle b;
  auto& st = b.store;
  st.m = std::stoi(meta.at("meta.m"));
  st.O = std::stoi(meta.at("meta.O"));
  st.T = std::stoi(meta.at("meta.T"));
  st.k = std::stoi(meta.at("meta.k"));
  st.p = std::stoi(meta.at("meta.p"));
  st.variant = variant_from_string(meta.at("meta.variant"));
  st.L_init = std::stoi(meta.at("meta.L_init"));
  st.seed = std::stoull(meta.at("meta.seed"));
  b.equispaced = meta.at("meta.equispaced") == "true";
  const long W = std::stol(meta.at("meta.W"));
  const int m = st.m, O = st.O, T = st.T, k = st.k, mO = m * O, L0 = st.L_init;

  auto open_rows = [&](const std::string& file) {
    std::ifstream in(dir + "/" + file);
    if (!in) throw IoError("cannot open " + dir + "/" + file);
    return csv_data_rows(in, file, nullptr);
  };

  {
    std::ifstream in(dir + "/coords.csv");
    if (!in) throw IoError("cannot open " + dir + "/coords.csv");
    auto rows = csv_data_rows(in, "coords.csv", nullptr);
    b.coords.resize(rows.size(), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto f = split_csv(rows[i]);
      b.coords(i, 0) = cell_num(f[1], "coords.csv");
      b.coords(i, 1) = cell_num(f[2], "coords.csv");
    }
  }
  {
    auto rows = open_rows("timepoints.csv");
    for (const auto& r : rows) b.timepoints.push_back(std::stod(r));
  }

  auto rows_to_matrix = [&](const std::string& file, long nrows, int ncols) {
    auto rows = open_rows(file);
    if (static_cast<long>(rows.size()) != nrows)
      throw IoError(file + ": expected " + std::to_string(nrows) + " rows");
    std::vector<std::vector<std::string>> cells(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      cells[r] = split_csv(rows[r]);
      if (static_cast<int>(cells[r].size()) != ncols + 1)
        throw IoError(file + ": wrong column count");
    }
    return cells;
  };

  {
    auto cells = rows_to_matrix("eta.csv", W, T * k);
    for (long w = 0; w < W; ++w) {
      MatrixXd e(T, k);
      int c = 1;
      for (int t = 0; t < T; ++t)
        for (int j = 0; j < k; ++j) e(t, j) = cell_num(cells[w][c++], "eta.csv");
      st.eta.push_back(std::move(e));
    }
  }
  if (st.p > 0) {
    auto cells = rows_to_matrix("beta.csv", W, st.p);
    for (long w = 0; w < W; ++w) {
      VectorXd v(st.p);
      for (int c = 0; c < st.p; ++c) v[c] = cell_num(cells[w][c + 1], "beta.csv");
      st.beta.push_back(std::move(v));
    }
  }
  {
    auto cells = rows_to_matrix("sigma2.csv", W, mO);
    for (long w = 0; w < W; ++w) {
      VectorXd v(mO);
      for (int s = 0; s < mO; ++s) v[s] = cell_num(cells[w][s + 1], "sigma2.csv");
      st.sigma2.push_back(std::move(v));
    }
  }
  {
    auto cells = rows_to_matrix("kappa.csv", W, O * O);
    for (long w = 0; w < W; ++w) {
      MatrixXd kap(O, O);
      int c = 1;
      for (int a = 0; a < O; ++a)
        for (int bb = 0; bb < O; ++bb) kap(a, bb) = cell_num(cells[w][c++], "kappa.csv");
      st.kappa.push_back(std::move(kap));
    }
  }
  {
    auto cells = rows_to_matrix("upsilon.csv", W, k * k);
    for (long w = 0; w < W; ++w) {
      MatrixXd u(k, k);
      int c = 1;
      for (int a = 0; a < k; ++a)
        for (int bb = 0; bb < k; ++bb) u(a, bb) = cell_num(cells[w][c++], "upsilon.csv");
      st.Upsilon.push_back(std::move(u));
    }
  }
  if (fs::exists(dir + "/psi.csv")) {
    auto cells = rows_to_matrix("psi.csv", W, 1);
    for (long w = 0; w < W; ++w) st.psi.push_back(cell_num(cells[w][1], "psi.csv"));
  }
  if (fs::exists(dir + "/rho.csv")) {
    auto cells = rows_to_matrix("rho.csv", W, 1);
    for (long w = 0; w < W; ++w) st.rho.push_back(cell_num(cells[w][1], "rho.csv"));
  }
  {
    auto cells = rows_to_matrix("deviance.csv", W, 1);
    for (long w = 0; w < W; ++w)
      st.deviance.push_back(cell_num(cells[w][1], "deviance.csv"));
  }

  if (variant_is_clustering(st.variant)) {
    auto Lcells = rows_to_matrix("L.csv", W, k);
    for (long w = 0; w < W; ++w) {
      std::vector<int> Ls(k);
      for (int j = 0; j < k; ++j)
        Ls[j] = static_cast<int>(cell_num(Lcells[w][j + 1], "L.csv"));
      st.L.push_back(std::move(Ls));
    }
    auto tcells = rows_to_matrix("theta.csv", W, k * L0);
    for (long w = 0; w < W; ++w) {
      std::vector<VectorXd> th(k);
      for (int j = 0; j < k; ++j) {
        th[j].resize(st.L[w][j]);
        for (int l = 0; l < st.L[w][j]; ++l)
          th[j][l] = cell_num(tcells[w][1 + j * L0 + l], "theta.csv");
      }
      st.theta.push_back(std::move(th));
    }
    auto lcells = rows_to_matrix("labels.csv", W, k * mO);
    for (long w = 0; w < W; ++w) {
      Eigen::MatrixXi lab(mO, k);
      for (int j = 0; j < k; ++j)
        for (int s = 0; s < mO; ++s)
          lab(s, j) =
              static_cast<int>(cell_num(lcells[w][1 + j * mO + s], "labels.csv")) - 1;
      st.labels.push_back(std::move(lab));
    }
    auto wcells = rows_to_matrix("weights.csv", W, k * L0 * mO);
    for (long w = 0; w < W; ++w) {
      std::vector<MatrixXd> ws(k);
      for (int j = 0; j < k; ++j) {
        ws[j].resize(mO, st.L[w][j]);
        for (int l = 0; l < st.L[w][j]; ++l)
          for (int s = 0; s < mO; ++s)
            ws[j](s, l) =
                cell_num(wcells[w][1 + (j * L0 + l) * mO + s], "weights.csv");
      }
      st.w.push_back(std::move(ws));
    }
    if (L0 > 1) {
      auto acells = rows_to_matrix("alpha.csv", W, k * (L0 - 1) * mO);
      for (long w = 0; w < W; ++w) {
        std::vector<std::vector<VectorXd>> al(k);
        for (int j = 0; j < k; ++j) {
          al[j].resize(st.L[w][j] - 1);
          for (int l = 0; l + 1 < st.L[w][j]; ++l) {
            al[j][l].resize(mO);
            for (int a = 0; a < mO; ++a)
              al[j][l][a] =
                  cell_num(acells[w][1 + (j * (L0 - 1) + l) * mO + a], "alpha.csv");
          }
        }
        st.alpha.push_back(std::move(al));
      }
    } else {
      st.alpha.assign(W, std::vector<std::vector<VectorXd>>(k));
    }
  } else {
    auto cells = rows_to_matrix("lambda.csv", W, k * mO);
    for (long w = 0; w < W; ++w) {
      MatrixXd lam(mO, k);
      for (int j = 0; j < k; ++j)
        for (int s = 0; s < mO; ++s)
          lam(s, j) = cell_num(cells[w][1 + j * mO + s], "lambda.csv");
      st.lambda.push_back(std::move(lam));
    }
  }
  return b;
}

void write_prediction_csv(const std::string& path,
                          const std::vector<Eigen::MatrixXd>& draws, int n_sites,
                          int O, int n_times, const std::string& time_prefix) {
  std::ostringstream out;
  out << "# posterior predictive draws; one row per kept iteration\n";
  out << "iter";
  for (int i = 0; i < n_sites; ++i)
    for (int o = 0; o < O; ++o)
      for (int t = 0; t < n_times; ++t)
        out << ",y_loc" << (i + 1) << "_type" << (o + 1) << '_' << time_prefix
            << (t + 1);
  out << "\n";
  for (std::size_t w = 0; w < draws.size(); ++w) {
    out << (w + 1);
    for (int i = 0; i < n_sites; ++i)
      for (int o = 0; o < O; ++o)
        for (int t = 0; t < n_times; ++t)
          out << ',' << fmt(draws[w](widx(i, o, n_sites), t));
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

void write_labels_csv(const std::string& path, const Eigen::MatrixXd& coords,
                      const std::vector<int>& labels) {
  std::ostringstream out;
  out << "location_id,x,y,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << (i + 1) << ',' << fmt(coords(i, 0)) << ',' << fmt(coords(i, 1)) << ','
        << (labels[i] + 1) << "\n";
  write_text_atomic(path, out.str());
}

}  // namespace spatfactor::io
