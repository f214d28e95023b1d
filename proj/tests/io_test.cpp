#include "methsnp/error.hpp"
#include "methsnp/io.hpp"
#include "methsnp/simgen.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace methsnp {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("methsnp_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  // Small valid set of four files.
  void write_valid() {
    std::ostringstream meth;
    meth << "individual_id,position,level\n";
    for (const char* id : {"b", "a", "c"}) {
      for (int j = 0; j < 12; ++j) meth << id << ',' << 1000 + 100 * j << ',' << 0.05 * (j % 7) + 0.1 << '\n';
    }
    write("meth.csv", meth.str());
    write("geno.csv", "individual_id,rs1,rs2\nc,0,1\na,2,0\nb,1,1\n");
    write("pheno.csv", "individual_id,y,age\na,1.5,30\nb,0.5,22\nc,2.5,41\n");
    write("snps.csv", "snp_id,position_bp\nrs2,1900\nrs1,1200\n");
  }

  std::string error_of(const std::function<void()>& f) {
    try {
      f();
    } catch (const DataError& e) {
      return e.what();
    }
    return "no error";
  }

  fs::path dir_;
};

TEST_F(IoTest, LoadsAndOrdersByIndividualId) {
  write_valid();
  SmoothingConfig c;
  c.grid_size = 51;
  const LoadedData data = load_dataset(dir_ / "meth.csv", dir_ / "geno.csv", dir_ / "pheno.csv", dir_ / "snps.csv", c);
  const Dataset& ds = data.dataset;
  ASSERT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.curves.ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(ds.y, (Eigen::VectorXd(3) << 1.5, 0.5, 2.5).finished());
  EXPECT_EQ(ds.g(0, 0), 2.0);
  EXPECT_EQ(ds.g(2, 1), 1.0);
  EXPECT_EQ(ds.w(2, 0), 41.0);
  EXPECT_EQ(data.covariate_names, std::vector<std::string>{"age"});
  EXPECT_EQ(ds.snp_ids, (std::vector<std::string>{"rs1", "rs2"}));
  EXPECT_NEAR(ds.snp_positions[0], 200.0 / 1100.0, 1e-15);
  EXPECT_NEAR(ds.snp_positions[1], 900.0 / 1100.0, 1e-15);
}

TEST_F(IoTest, GenotypeOutsideRangeNamesRow) {
  write("geno.csv", "individual_id,rs1\na,0\nb,3\n");
  const std::string msg = error_of([&] { read_genotypes_csv(dir_ / "geno.csv"); });
  EXPECT_NE(msg.find("geno.csv:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'3'"), std::string::npos) << msg;
}

TEST_F(IoTest, MissingPhenotypeIdIsListed) {
  write_valid();
  write("pheno.csv", "individual_id,y,age\na,1.5,30\nc,2.5,41\n");
  const std::string msg = error_of(
      [&] { load_dataset(dir_ / "meth.csv", dir_ / "geno.csv", dir_ / "pheno.csv", dir_ / "snps.csv", {}); });
  EXPECT_NE(msg.find("only in methylation: b"), std::string::npos) << msg;
  EXPECT_NE(msg.find("only in phenotype: none"), std::string::npos) << msg;
}

TEST_F(IoTest, MalformedRowsReportLineNumbers) {
  write("m1.csv", "individual_id,position,level\na,10,0.5\n\na,20,1.5\n");
  EXPECT_NE(error_of([&] { read_methylation_csv(dir_ / "m1.csv"); }).find("m1.csv:4"), std::string::npos);
  write("m2.csv", "individual_id,position,level\na,10,0.5,9\n");
  EXPECT_NE(error_of([&] { read_methylation_csv(dir_ / "m2.csv"); }).find("m2.csv:2"), std::string::npos);
  write("m3.csv", "individual_id,position,level\na,ten,0.5\n");
  EXPECT_NE(error_of([&] { read_methylation_csv(dir_ / "m3.csv"); }).find("not a finite number"), std::string::npos);
  write("m4.csv", "individual_id,position,level\na,10,0.5\na,10,0.6\n");
  EXPECT_NE(error_of([&] { read_methylation_csv(dir_ / "m4.csv"); }).find("duplicate position"), std::string::npos);
  write("m5.csv", "id,position,level\na,10,0.5\n");
  EXPECT_NE(error_of([&] { read_methylation_csv(dir_ / "m5.csv"); }).find("header"), std::string::npos);
  write("p1.csv", "individual_id,y\na,1\na,2\n");
  EXPECT_NE(error_of([&] { read_phenotype_csv(dir_ / "p1.csv"); }).find("duplicate identifier"), std::string::npos);
  EXPECT_THROW(read_csv(dir_ / "absent.csv"), DataError);
}

TEST_F(IoTest, SnpOutsideRegionIsDataError) {
  write_valid();
  write("snps.csv", "snp_id,position_bp\nrs2,1900\nrs1,5000\n");
  const std::string msg = error_of(
      [&] { load_dataset(dir_ / "meth.csv", dir_ / "geno.csv", dir_ / "pheno.csv", dir_ / "snps.csv", {}); });
  EXPECT_NE(msg.find("rs1"), std::string::npos) << msg;
}

TEST_F(IoTest, SimulatedDatasetRoundTrips) {
  SimConfig config;
  config.n = 24;
  config.d = 4;
  config.profiles.sites = 80;
  config.smoothing.grid_size = 301;
  const SimulationContext context(config);
  const SimulatedData sim = simulate_dataset(context, 5);
  const Dataset& ds = sim.dataset;
  {
    std::ofstream f(dir_ / "meth.csv", std::ios::binary);
    write_methylation_csv(f, sim.methylation);
  }
  {
    std::ofstream f(dir_ / "geno.csv", std::ios::binary);
    write_genotypes_csv(f, ds.curves.ids, ds.snp_ids, ds.g);
  }
  {
    std::ofstream f(dir_ / "snps.csv", std::ios::binary);
    write_snp_positions_csv(f, ds.snp_ids, sim.snp_positions_bp);
  }
  {
    std::ofstream f(dir_ / "pheno.csv", std::ios::binary);
    write_phenotype_csv(f, ds.curves.ids, ds.y, ds.w, {"w_1"});
  }
  const LoadedData back =
      load_dataset(dir_ / "meth.csv", dir_ / "geno.csv", dir_ / "pheno.csv", dir_ / "snps.csv", config.smoothing);
  EXPECT_EQ(back.dataset.curves.ids, ds.curves.ids);
  EXPECT_EQ(back.dataset.y, ds.y);
  EXPECT_EQ(back.dataset.w, ds.w);
  EXPECT_EQ(back.dataset.g, ds.g);
  EXPECT_EQ(back.dataset.snp_ids, ds.snp_ids);
  EXPECT_LT((back.dataset.curves.values - ds.curves.values).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t d = 0; d < ds.snp_positions.size(); ++d) {
    EXPECT_NEAR(back.dataset.snp_positions[d], ds.snp_positions[d], 1e-12);
  }
  for (std::size_t i = 0; i < sim.methylation.size(); ++i) {
    EXPECT_EQ(back.methylation[i].levels(), sim.methylation[i].levels());
  }
}

}  // namespace
}  // namespace methsnp
