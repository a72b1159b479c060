#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "nomad/io.hpp"
#include "test_util.hpp"

namespace nomad {
namespace {

using test::TempDir;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

TEST(ReadCsv, DetectsHeaderAndSkipsBlankLines) {
  TempDir dir("io_header");
  write_text(dir.file("a.csv"), "x, \"y\" ,z\n1,2,3\n\n4,5e-1,+6\n");
  const CsvTable t = read_csv(dir.file("a.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y", "z"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1], (std::vector<double>{4.0, 0.5, 6.0}));

  write_text(dir.file("b.csv"), "1,2\n3,4\n");
  const CsvTable headerless = read_csv(dir.file("b.csv"));
  EXPECT_TRUE(headerless.header.empty());
  EXPECT_EQ(headerless.cols(), 2u);
}

TEST(ReadCsv, RejectsMalformedInput) {
  TempDir dir("io_bad");
  write_text(dir.file("ragged.csv"), "1,2,3\n4,5\n");
  EXPECT_THROW(read_csv(dir.file("ragged.csv")), DataError);
  write_text(dir.file("trailing.csv"), "1,2\n3,4,\n");
  EXPECT_THROW(read_csv(dir.file("trailing.csv")), DataError);
  write_text(dir.file("text.csv"), "a,b\n1,2\n3,oops\n");
  EXPECT_THROW(read_csv(dir.file("text.csv")), DataError);
  EXPECT_THROW(read_csv(dir.file("missing.csv")), DataError);
}

TEST(MatrixCsv, RoundTripsBitwise) {
  TempDir dir("io_matrix");
  Rng rng(3);
  const DenseMatrix m = test::random_matrix(6, 4, rng, -1e3, 1e3);
  write_matrix_csv(dir.file("m.csv"), m);
  EXPECT_EQ(read_matrix_csv(dir.file("m.csv")), m);
}

TEST(DatasetCsv, RoundTripsWithNames) {
  TempDir dir("io_dataset");
  DagSpec spec;
  spec.d = 5;
  Dataset ds = simulate(generate_dag(spec), 30, 1.0, 4);
  ds.names = {"a", "b", "c", "d", "e"};
  write_dataset_csv(dir.file("x.csv"), ds);
  const Dataset back = read_dataset_csv(dir.file("x.csv"));
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.names, ds.names);
  EXPECT_EQ(back.n(), 30u);
  EXPECT_EQ(back.d(), 5u);
}

TEST(DatasetCsv, RejectsEmptyAndNonFinite) {
  TempDir dir("io_dataset_bad");
  write_text(dir.file("empty.csv"), "a,b\n");
  EXPECT_THROW(read_dataset_csv(dir.file("empty.csv")), DataError);
  write_text(dir.file("inf.csv"), "1,inf\n2,3\n");
  EXPECT_THROW(read_dataset_csv(dir.file("inf.csv")), DataError);
}

TEST(Standardize, ModesMatchDirectComputation) {
  Rng rng(5);
  Dataset base{test::random_matrix(4, 200, rng, 2.0, 9.0), 1.0, FileSource{}, {}};
  Dataset none = base, center = base, z = base;
  standardize(none, Standardize::None);
  standardize(center, Standardize::Center);
  standardize(z, Standardize::ZScore);
  EXPECT_EQ(none.x, base.x);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t s = 0; s < 200; ++s) mean += base.x(j, s) / 200.0;
    for (std::size_t s = 0; s < 200; ++s) var += std::pow(base.x(j, s) - mean, 2) / 200.0;
    double cm = 0.0, zm = 0.0, zv = 0.0;
    for (std::size_t s = 0; s < 200; ++s) {
      EXPECT_NEAR(center.x(j, s), base.x(j, s) - mean, 1e-12);
      EXPECT_NEAR(z.x(j, s), (base.x(j, s) - mean) / std::sqrt(var), 1e-12);
      cm += center.x(j, s);
      zm += z.x(j, s);
      zv += z.x(j, s) * z.x(j, s);
    }
    EXPECT_NEAR(cm, 0.0, 1e-10);
    EXPECT_NEAR(zm, 0.0, 1e-10);
    EXPECT_NEAR(zv / 200.0, 1.0, 1e-12);
  }
}

TEST(Standardize, ConstantColumnAndNames) {
  Dataset ds{DenseMatrix{{1.0, 1.0, 1.0}}, 1.0, FileSource{}, {}};
  EXPECT_THROW(standardize(ds, Standardize::ZScore), DataError);
  for (auto mode : {Standardize::None, Standardize::Center, Standardize::ZScore})
    EXPECT_EQ(parse_standardize(to_string(mode)), mode);
  EXPECT_THROW(parse_standardize("minmax"), ConfigError);
}

TEST(EdgeList, ReadsNamesAndIndices) {
  TempDir dir("io_edges");
  write_text(dir.file("e.csv"), "src,dst\nraf,mek\n1,2\n");
  const WeightMatrix w = read_edge_list_csv(dir.file("e.csv"), {"raf", "mek", "erk"});
  EXPECT_EQ(w, (WeightMatrix{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
  write_text(dir.file("unknown.csv"), "src,dst\nraf,pka\n");
  EXPECT_THROW(read_edge_list_csv(dir.file("unknown.csv"), {"raf", "mek"}), DataError);
  write_text(dir.file("loop.csv"), "raf,raf\n");
  EXPECT_THROW(read_edge_list_csv(dir.file("loop.csv"), {"raf"}), DataError);
  write_text(dir.file("short.csv"), "raf\n");
  EXPECT_THROW(read_edge_list_csv(dir.file("short.csv"), {"raf"}), DataError);
}

TEST(EdgeList, RoundTripsThroughWriter) {
  TempDir dir("io_edges_rt");
  DagSpec spec;
  spec.d = 9;
  spec.seed = 2;
  const WeightMatrix w = generate_dag(spec);
  write_edge_list_csv(dir.file("e.csv"), w);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < 9; ++k) names.push_back(std::to_string(k));
  const WeightMatrix back = read_reference_dag(dir.file("e.csv"), names);
  // Weights are dropped; the support survives.
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(back(i, j) != 0.0, w(i, j) != 0.0);
}

TEST(ReferenceDag, AcceptsMatrixFormAndRejectsCycles) {
  TempDir dir("io_ref");
  write_text(dir.file("m.csv"), "0,2\n0,0\n");
  EXPECT_EQ(read_reference_dag(dir.file("m.csv"), {"a", "b"}), (WeightMatrix{{0, 2}, {0, 0}}));
  EXPECT_THROW(read_reference_dag(dir.file("m.csv"), {"a", "b", "c"}), DataError);
  write_text(dir.file("cyc.csv"), "src,dst\na,b\nb,a\n");
  EXPECT_THROW(read_reference_dag(dir.file("cyc.csv"), {"a", "b"}), CycleError);
}

}  // namespace
}  // namespace nomad
