#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "dsbm/error.hpp"
#include "dsbm/io.hpp"
#include "support.hpp"

namespace dsbm {
namespace {

namespace fs = std::filesystem;

SnapshotSequence sample_sequence(int n, int T, std::uint64_t seed) {
  return sample_adjacency(ProbabilityTensor(static_cast<std::size_t>(T), Matrix::Constant(n, n, 0.3)), 10.0, seed);
}

void write_raw(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

TEST(DenseBinary, RoundTrip) {
  test::TempDir dir;
  const auto S = sample_sequence(7, 3, 1);
  write_dense_binary(dir.path() / "a.bin", S.A, S.diag_value);
  const auto back = read_dense_binary(dir.path() / "a.bin");
  EXPECT_EQ(back.diag_value, 10.0);
  ASSERT_EQ(back.T(), 3);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(back.A[static_cast<std::size_t>(t)], S.A[static_cast<std::size_t>(t)]);
  EXPECT_EQ(fs::file_size(dir.path() / "a.bin"), 4u + 4 + 4 + 4 + 8 + 3 * 49 * 8);
}

TEST(DenseBinary, NaNDiagonalHeader) {
  test::TempDir dir;
  const ProbabilityTensor P(2, Matrix::Constant(3, 3, 0.25));
  write_dense_binary(dir.path() / "P.bin", P, std::numeric_limits<double>::quiet_NaN());
  const auto back = read_dense_binary(dir.path() / "P.bin");
  EXPECT_TRUE(std::isnan(back.diag_value));
  EXPECT_EQ(back.A[1], P[1]);
}

TEST(DenseBinary, CorruptFiles) {
  test::TempDir dir;
  const auto S = sample_sequence(5, 2, 2);
  write_dense_binary(dir.path() / "a.bin", S.A, 10.0);
  fs::resize_file(dir.path() / "a.bin", fs::file_size(dir.path() / "a.bin") - 8);
  EXPECT_THROW(read_dense_binary(dir.path() / "a.bin"), IoError);
  write_raw(dir.path() / "b.bin", "NOPE0000000000000000");
  EXPECT_THROW(read_dense_binary(dir.path() / "b.bin"), IoError);
  EXPECT_THROW(read_dense_binary(dir.path() / "missing.bin"), IoError);
}

TEST(EdgeList, RoundTripAndSniffing) {
  test::TempDir dir;
  const auto S = sample_sequence(9, 4, 3);
  write_edge_list(dir.path() / "e.csv", S);
  const auto back = read_edge_list(dir.path() / "e.csv", 10.0, 9, 4);
  for (int t = 0; t < 4; ++t) EXPECT_EQ(back.A[static_cast<std::size_t>(t)], S.A[static_cast<std::size_t>(t)]);

  const auto sniffed = read_snapshots(dir.path() / "e.csv", 10.0);
  EXPECT_LE(sniffed.n(), 9);
  write_dense_binary(dir.path() / "d.bin", S.A, 10.0);
  EXPECT_EQ(read_snapshots(dir.path() / "d.bin").A[2], S.A[2]);
}

TEST(EdgeList, Errors) {
  test::TempDir dir;
  write_raw(dir.path() / "bad.csv", "t,i,j\n1,2,2\n");
  EXPECT_THROW(read_edge_list(dir.path() / "bad.csv", 10.0), IoError);
  write_raw(dir.path() / "hdr.csv", "a,b,c\n1,1,2\n");
  EXPECT_THROW(read_edge_list(dir.path() / "hdr.csv", 10.0), IoError);
  write_raw(dir.path() / "big.csv", "t,i,j\n1,1,5\n");
  EXPECT_THROW(read_edge_list(dir.path() / "big.csv", 10.0, 4), IoError);
  write_raw(dir.path() / "num.csv", "t,i,j\n1,x,2\n");
  EXPECT_THROW(read_edge_list(dir.path() / "num.csv", 10.0), IoError);
}

TEST(Memberships, RoundTripIsOneBased) {
  test::TempDir dir;
  const std::vector<Labels> labels = {{0, 1, 1}, {1, 1, 0}};
  write_memberships(dir.path() / "m.csv", labels);
  std::ifstream in(dir.path() / "m.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,node,label");
  EXPECT_EQ(first, "1,1,1");
  const auto m = read_memberships(dir.path() / "m.csv");
  EXPECT_EQ(m.K(), 2);
  EXPECT_EQ(m.all(), labels);
  EXPECT_THROW(read_memberships(dir.path() / "m.csv", 1), LabelOutOfRange);
}

TEST(Memberships, SparseTimesAllowedOnlyInLabelTable) {
  test::TempDir dir;
  write_raw(dir.path() / "s.csv", "t,node,label\n2,1,1\n2,2,2\n5,1,2\n5,2,1\n");
  const auto table = read_label_table(dir.path() / "s.csv");
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table.at(1), (Labels{0, 1}));
  EXPECT_EQ(table.at(4), (Labels{1, 0}));
  EXPECT_THROW(read_memberships(dir.path() / "s.csv"), IoError);
  write_raw(dir.path() / "hole.csv", "t,node,label\n1,1,1\n1,3,1\n");
  EXPECT_THROW(read_label_table(dir.path() / "hole.csv"), IoError);
}

TEST(Metrics, RoundTrip) {
  test::TempDir dir;
  const std::vector<MetricsRow> rows = {{0, 0.1, 0.2, 0.3, 2, 4}, {1, 1.0 / 3, 2.0 / 3, 0.5, 3, 0}};
  write_metrics(dir.path() / "x.csv", rows);
  const auto back = read_metrics(dir.path() / "x.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].t, 1);
  EXPECT_EQ(back[1].R, 1.0 / 3);
  EXPECT_EQ(back[1].R_literal, 2.0 / 3);
  EXPECT_EQ(back[0].K_hat, 2);
  EXPECT_EQ(back[0].r_hat, 4);
}

TEST(LepskiiTraceCsv, Layout) {
  test::TempDir dir;
  LepskiiTrace trace;
  trace.tests = {{1, 0, 0.5, 1.0, true}, {2, 1, 2.0, 1.0, false}};
  write_lepskii_trace(dir.path() / "tr.csv", trace);
  std::ifstream in(dir.path() / "tr.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r,rho,statistic,threshold,pass");
  std::getline(in, line);
  EXPECT_EQ(line, "1,0,0.5,1,1");
  std::getline(in, line);
  EXPECT_EQ(line, "2,1,2,1,0");
}

TEST(Json, SidecarsAndReadErrors) {
  EstimatedMatrix e;
  e.t = 4;
  e.r = 3;
  e.l = 1;
  e.window = WindowType::LeftBoundary;
  const auto j = estimate_sidecar(e, "empirical", 0.2);
  EXPECT_EQ(j.at("t"), 5);
  EXPECT_EQ(j.at("window"), std::string(to_string(WindowType::LeftBoundary)));

  ClusteringResult c;
  c.K_used = 3;
  c.flags = {"EmptyClusterReseeded"};
  const auto m = clustering_metadata(0, c, std::nullopt, {"extra"});
  EXPECT_TRUE(m.at("K_hat").is_null());
  EXPECT_EQ(m.at("flags").size(), 2u);

  test::TempDir dir;
  write_raw(dir.path() / "bad.json", "{ nope");
  EXPECT_THROW(read_json(dir.path() / "bad.json"), IoError);
  write_json(dir.path() / "ok.json", m);
  EXPECT_EQ(read_json(dir.path() / "ok.json"), m);
}

TEST(WriteText, AtomicReplaceLeavesNoTemporary) {
  test::TempDir dir;
  write_text(dir.path() / "f.txt", "one");
  write_text(dir.path() / "f.txt", "two");
  std::ifstream in(dir.path() / "f.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "two");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1);
  EXPECT_THROW(write_text(dir.path() / "f.txt" / "below" / "g.txt", "x"), IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3, 1e-300, 123456789.125, -2.5, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(0.5), "0.5");
}

}  // namespace
}  // namespace dsbm
