#include "dsbm/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dsbm/error.hpp"

namespace dsbm {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'D', 'S', 'B', 'M'};

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("truncated file '" + path.string() + "'");
  return value;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

template <class T>
T parse_number(const std::string& text, const fs::path& path, int line_no) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + text + "'");
  }
  return value;
}

/// Reads a CSV with the given header; returns the data rows.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split(line) != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw IoError("'" + path.string() + "' does not start with header " + expected);
  }
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                    " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw IoError("cannot format double");
  return std::string(buf.data(), ptr);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void write_dense_binary(const fs::path& path, const std::vector<Matrix>& mats, double diag_value) {
  const auto n = mats.empty() ? 0 : mats.front().rows();
  std::ostringstream out(std::ios::binary);
  out.write(kMagic.data(), kMagic.size());
  put(out, kBinaryVersion);
  put(out, static_cast<std::uint32_t>(n));
  put(out, static_cast<std::uint32_t>(mats.size()));
  put(out, diag_value);
  for (const Matrix& M : mats) {
    if (M.rows() != n || M.cols() != n) throw DimensionMismatch("matrices to write differ in size");
    // Eigen stores column-major; the file is row-major.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = M;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  write_text(path, out.str());
}

SnapshotSequence read_dense_binary(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("'" + path.string() + "' is not a dense DSBM file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kBinaryVersion) throw IoError("unsupported DSBM version " + std::to_string(version));
  const auto n = get<std::uint32_t>(in, path);
  const auto T = get<std::uint32_t>(in, path);
  SnapshotSequence seq;
  seq.diag_value = get<double>(in, path);
  seq.A.reserve(T);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
  for (std::uint32_t t = 0; t < T; ++t) {
    if (!in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)))) {
      throw IoError("truncated file '" + path.string() + "'");
    }
    seq.A.emplace_back(rm);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in '" + path.string() + "'");
  return seq;
}

void write_edge_list(const fs::path& path, const SnapshotSequence& snapshots) {
  std::ostringstream out;
  out << "t,i,j\n";
  for (int t = 0; t < snapshots.T(); ++t) {
    const Matrix& A = snapshots.A[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < A.cols(); ++j) {
        if (A(i, j) != 0.0) out << t + 1 << ',' << i + 1 << ',' << j + 1 << '\n';
      }
    }
  }
  write_text(path, out.str());
}

SnapshotSequence read_edge_list(const fs::path& path, double diag_value, std::optional<int> n, std::optional<int> T) {
  const auto rows = read_csv(path, {"t", "i", "j"});
  struct Edge {
    int t, i, j;
  };
  std::vector<Edge> edges;
  int max_t = 0;
  int max_node = 0;
  int line_no = 1;
  for (const auto& row : rows) {
    ++line_no;
    Edge e{parse_number<int>(row[0], path, line_no), parse_number<int>(row[1], path, line_no),
           parse_number<int>(row[2], path, line_no)};
    if (e.t < 1 || e.i < 1 || e.j <= e.i) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": need t >= 1 and 1 <= i < j");
    }
    max_t = std::max(max_t, e.t);
    max_node = std::max(max_node, e.j);
    edges.push_back(e);
  }
  const int nn = n.value_or(max_node);
  const int TT = T.value_or(max_t);
  if (max_node > nn || max_t > TT) throw IoError("edge list '" + path.string() + "' exceeds the stated n or T");
  SnapshotSequence seq;
  seq.diag_value = diag_value;
  seq.A.assign(static_cast<std::size_t>(TT), Matrix::Zero(nn, nn));
  for (Matrix& A : seq.A) A.diagonal().setConstant(diag_value);
  for (const Edge& e : edges) {
    Matrix& A = seq.A[static_cast<std::size_t>(e.t - 1)];
    A(e.i - 1, e.j - 1) = 1.0;
    A(e.j - 1, e.i - 1) = 1.0;
  }
  return seq;
}

SnapshotSequence read_snapshots(const fs::path& path, double edge_list_diag) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 4 && magic == kMagic) return read_dense_binary(path);
  return read_edge_list(path, edge_list_diag);
}

void write_memberships(const fs::path& path, const std::vector<Labels>& labels) {
  std::ostringstream out;
  out << "t,node,label\n";
  for (std::size_t t = 0; t < labels.size(); ++t) {
    for (std::size_t i = 0; i < labels[t].size(); ++i) out << t + 1 << ',' << i + 1 << ',' << labels[t][i] + 1 << '\n';
  }
  write_text(path, out.str());
}

std::map<int, Labels> read_label_table(const fs::path& path) {
  const auto rows = read_csv(path, {"t", "node", "label"});
  std::map<int, Labels> table;
  int line_no = 1;
  for (const auto& row : rows) {
    ++line_no;
    const int t = parse_number<int>(row[0], path, line_no);
    const int node = parse_number<int>(row[1], path, line_no);
    const int label = parse_number<int>(row[2], path, line_no);
    if (t < 1 || node < 1 || label < 1) throw IoError(path.string() + ":" + std::to_string(line_no) + ": entries are 1-based");
    Labels& lt = table[t - 1];
    if (static_cast<std::size_t>(node) > lt.size()) lt.resize(static_cast<std::size_t>(node), -1);
    lt[static_cast<std::size_t>(node - 1)] = label - 1;
  }
  std::size_t n = 0;
  for (const auto& [t, lt] : table) {
    if (n == 0) n = lt.size();
    if (lt.size() != n || std::find(lt.begin(), lt.end(), -1) != lt.end()) {
      throw IoError("'" + path.string() + "' is missing labels at t = " + std::to_string(t + 1));
    }
  }
  return table;
}

MembershipSequence read_memberships(const fs::path& path, std::optional<int> K) {
  std::map<int, Labels> table = read_label_table(path);
  std::vector<Labels> labels;
  int max_label = 0;
  for (auto& [t, lt] : table) {
    if (t != static_cast<int>(labels.size())) {
      throw IoError("'" + path.string() + "' is missing labels at t = " + std::to_string(labels.size() + 1));
    }
    max_label = std::max(max_label, *std::max_element(lt.begin(), lt.end()) + 1);
    labels.push_back(std::move(lt));
  }
  const int k = K.value_or(max_label);
  if (max_label > k) throw LabelOutOfRange("label " + std::to_string(max_label) + " exceeds K = " + std::to_string(k));
  return MembershipSequence(k, std::move(labels));
}

void write_clustering_csv(const fs::path& path, const ClusteringResult& result) {
  std::ostringstream out;
  out << "node,label\n";
  for (std::size_t i = 0; i < result.labels.size(); ++i) out << i + 1 << ',' << result.labels[i] + 1 << '\n';
  write_text(path, out.str());
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "t,R_t,R_t_literal,Rtilde_t,K_hat,r_hat\n";
  for (const MetricsRow& r : rows) {
    out << r.t + 1 << ',' << format_double(r.R) << ',' << format_double(r.R_literal) << ','
        << format_double(r.Rtilde) << ',' << r.K_hat << ',' << r.r_hat << '\n';
  }
  write_text(path, out.str());
}

std::vector<MetricsRow> read_metrics(const fs::path& path) {
  const auto rows = read_csv(path, {"t", "R_t", "R_t_literal", "Rtilde_t", "K_hat", "r_hat"});
  std::vector<MetricsRow> out;
  int line_no = 1;
  for (const auto& row : rows) {
    ++line_no;
    MetricsRow m;
    m.t = parse_number<int>(row[0], path, line_no) - 1;
    m.R = parse_number<double>(row[1], path, line_no);
    m.R_literal = parse_number<double>(row[2], path, line_no);
    m.Rtilde = parse_number<double>(row[3], path, line_no);
    m.K_hat = parse_number<int>(row[4], path, line_no);
    m.r_hat = parse_number<int>(row[5], path, line_no);
    out.push_back(m);
  }
  return out;
}

void write_lepskii_trace(const fs::path& path, const LepskiiTrace& trace) {
  std::ostringstream out;
  out << "r,rho,statistic,threshold,pass\n";
  for (const LepskiiTest& test : trace.tests) {
    out << test.r << ',' << test.rho << ',' << format_double(test.statistic) << ',' << format_double(test.threshold)
        << ',' << (test.pass ? 1 : 0) << '\n';
  }
  write_text(path, out.str());
}

nlohmann::json estimate_sidecar(const EstimatedMatrix& estimate, const std::string& constant_mode, double c) {
  return {{"t", estimate.t + 1},
          {"r", estimate.r},
          {"window", std::string(to_string(estimate.window))},
          {"l", estimate.l},
          {"constant_mode", constant_mode},
          {"c", c}};
}

nlohmann::json clustering_metadata(int t, const ClusteringResult& result, std::optional<int> K_hat,
                                   const std::vector<std::string>& extra_flags) {
  std::vector<std::string> flags = result.flags;
  flags.insert(flags.end(), extra_flags.begin(), extra_flags.end());
  return {{"t", t + 1},
          {"K_used", result.K_used},
          {"K_hat", K_hat ? nlohmann::json(*K_hat) : nlohmann::json(nullptr)},
          {"r_used", result.r_used},
          {"objective", result.objective},
          {"epsilon_target", result.epsilon_target},
          {"flags", flags}};
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace dsbm
