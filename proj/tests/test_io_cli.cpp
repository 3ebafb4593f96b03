#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "cli_app.hpp"
#include "gwp/gwp.hpp"
#include "gwp/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using gwp::cli::run_cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gwp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 2.0 / 3.0, 123456789.125}) {
    EXPECT_EQ(std::stod(gwp::io::format_double(v)), v);
  }
  EXPECT_EQ(gwp::io::format_double(0.5), "0.5");
  EXPECT_EQ(gwp::io::format_double(2.0), "2");
}

TEST(Csv, CountFieldLayout) {
  const gwp::QuadratGrid g(gwp::Window::unit(2), {2, 3});
  const gwp::CountField f{g, {0, 1, 2, 3, 4, 5}, {}};
  std::ostringstream os;
  gwp::io::write_count_field_csv(os, f);
  const auto l = lines(os.str());
  ASSERT_EQ(l.size(), 7u);
  EXPECT_EQ(l[0], "cell_index,axis0,axis1,count");
  EXPECT_EQ(l[4], "3,1,0,3");
  std::istringstream in(os.str());
  EXPECT_EQ(gwp::io::read_counts_csv(in), f.counts);
}

TEST(Csv, ReadCountsVariants) {
  std::istringstream plain("3\n0\n\n7\n");
  EXPECT_EQ(gwp::io::read_counts_csv(plain), (std::vector<std::int64_t>{3, 0, 7}));
  std::istringstream named("count,other\r\n4,9\r\n5,9\r\n");
  EXPECT_EQ(gwp::io::read_counts_csv(named), (std::vector<std::int64_t>{4, 5}));
  std::istringstream bad("count\nx\n");
  EXPECT_THROW(gwp::io::read_counts_csv(bad), gwp::Error);
}

TEST(Csv, MarkedAndPoints) {
  const gwp::MarkedGrid mg(gwp::QuadratGrid(gwp::Window::unit(1), {2}), 2);
  const gwp::MarkedCountField f{mg, {1, 2, 3, 4}, {}};
  std::ostringstream os;
  gwp::io::write_marked_field_csv(os, f);
  EXPECT_EQ(os.str(), "cell_index,axis0,mark,count\n0,0,1,1\n0,0,2,2\n1,1,1,3\n1,1,2,4\n");
  gwp::PointPattern pp{gwp::Window::unit(2), {{0.25, 0.5}}, std::vector<std::int64_t>{2}};
  std::ostringstream ps;
  gwp::io::write_points_csv(ps, pp);
  EXPECT_EQ(ps.str(), "x,y,mark\n0.25,0.5,2\n");
}

TEST(Cli, PmfTable) {
  const auto r = cli({"dist", "pmf", "--a", "1", "--k", "1", "--rho", "2", "--max-n", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 12u);
  EXPECT_EQ(l[0], "n,probability");
  EXPECT_NEAR(std::stod(l[1].substr(2)), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(std::stod(l[2].substr(2)), 1.0 / 6.0, 1e-15);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"dist", "pmf", "--a", "1", "--k", "1", "--rho", "-1"}).code, 3);
  EXPECT_EQ(cli({"dist", "pmf", "--a", "1", "--k", "1", "--rho", "2", "--bogus", "1"}).code, 2);
  EXPECT_EQ(cli({"nonsense"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"dist", "pmf", "--a", "x", "--k", "1", "--rho", "2"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"process", "simulate", "--a", "1", "--k", "1", "--rho", "2", "--window", "0,0,1", "--cells", "2"}).code,
            3);
  EXPECT_EQ(cli({"fit", "--input", "/nonexistent/counts.csv"}).code, 4);
  // Moments that do not exist are an operation error reported in-band.
  const auto r = cli({"dist", "moments", "--a", "1", "--k", "1", "--rho", "0.5"});
  EXPECT_EQ(r.code, 1);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["error"]["type"], "infinite_moment");
}

TEST(Cli, SimulateWritesCsvAndSidecar) {
  const fs::path dir = scratch("simulate");
  const auto r = cli({"process", "simulate", "--a", "1", "--k", "1", "--rho", "2", "--window", "0,0,1,1", "--cells",
                      "8,8", "--seed", "42", "--backend", "cox", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = lines(slurp(dir / "counts.csv"));
  EXPECT_EQ(csv.size(), 65u);
  EXPECT_EQ(csv[0], "cell_index,axis0,axis1,count");
  const auto meta = nlohmann::json::parse(slurp(dir / "counts.json"));
  EXPECT_EQ(meta["schema_version"], 1);
  EXPECT_EQ(meta["seed"], 42);
  EXPECT_EQ(meta["backend"], "cox");
  EXPECT_EQ(meta["params"]["rho"], 2.0);
  EXPECT_EQ(meta["grid"]["cells_per_axis"], (std::vector<int>{8, 8}));
  // The written counts are replicate 0 of the library's stream.
  const auto fields = gwp::simulate_replicates(gwp::GwdParams(1, 1, 2),
                                               gwp::QuadratGrid(gwp::Window::unit(2), {8, 8}), gwp::Backend::cox, 42, 1);
  std::istringstream in(slurp(dir / "counts.csv"));
  EXPECT_EQ(gwp::io::read_counts_csv(in), fields[0].counts);
}

TEST(Cli, ReplicatesAndMarks) {
  const fs::path dir = scratch("marks");
  ASSERT_EQ(cli({"marks", "simulate", "--a", "1", "--k", "2", "--rho", "3", "--window", "0,1", "--cells", "4",
                 "--marks", "3", "--replicates", "2", "--out", dir.string()})
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "marked_counts_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "marked_counts_1.json"));
  EXPECT_EQ(lines(slurp(dir / "marked_counts_1.csv")).size(), 13u);
}

TEST(Cli, PointsAndAvoidance) {
  const fs::path dir = scratch("points");
  ASSERT_EQ(cli({"process", "points", "--a", "2", "--k", "20", "--rho", "3", "--window", "0,0,1,1", "--resolution",
                 "4,4", "--seed", "3", "--out", dir.string()})
                .code,
            0);
  EXPECT_EQ(lines(slurp(dir / "points.csv"))[0], "x,y");
  const auto r = cli({"process", "avoidance", "--a", "1", "--k", "1", "--rho", "2", "--p0", "0.6666666666666666"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(lines(r.out)[1]), 1.0, 1e-9);
}

TEST(Cli, OrderlinessAndLimits) {
  auto r = cli({"diagnose", "orderliness", "--a", "1", "--rho", "2", "--k", "1", "--volumes", "1e-1..1e-8"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto l = lines(r.out);
  ASSERT_EQ(l.size(), 9u);
  EXPECT_EQ(l[0].substr(0, 12), "volume,ratio");
  EXPECT_EQ(l[8].substr(0, 5), "1e-08");

  r = cli({"limits", "nb", "--a", "2", "--c", "1", "--volume", "1", "--k", "1,10,100,1000"});
  ASSERT_EQ(r.code, 0) << r.err;
  l = lines(r.out);
  ASSERT_EQ(l.size(), 5u);
  double prev = 1.0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const double tv = std::stod(l[i].substr(l[i].find(',') + 1));
    EXPECT_LE(tv, prev + 1e-6);
    prev = tv;
  }
  EXPECT_LT(prev, 0.01);

  r = cli({"limits", "poisson", "--lambda", "1", "--volume", "1", "--c", "1,1000", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["data"].size(), 2u);
}

TEST(Cli, FitFromFileAndSynthetic) {
  const fs::path dir = scratch("fit");
  {
    std::ofstream f(dir / "counts.csv");
    f << "count\n";
    gwp::Rng rng = gwp::make_stream(1, 0);
    for (int i = 0; i < 5000; ++i) f << gwp::sample_ugwd(gwp::GwdParams(2, 3, 8), rng) << '\n';
  }
  auto r = cli({"fit", "--input", (dir / "counts.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["fit"]["sample_size"], 5000);
  r = cli({"fit", "--a", "2", "--k", "3", "--rho", "5", "--replicates", "100", "--seed", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(nlohmann::json::parse(r.out)["error"]["type"], "insufficient_sample");
  EXPECT_EQ(cli({"fit"}).code, 2);
}

TEST(Cli, ErgodicityTable) {
  auto r = cli({"diagnose", "ergodicity", "--a", "1", "--k", "1", "--rho", "3", "--volumes", "1,10", "--replicates",
                "200", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 3u);
  EXPECT_EQ(r.out, cli({"diagnose", "ergodicity", "--a", "1", "--k", "1", "--rho", "3", "--volumes", "1,10",
                        "--replicates", "200", "--seed", "5"})
                       .out);
  EXPECT_EQ(cli({"diagnose", "ergodicity", "--a", "1", "--k", "1", "--rho", "3", "--volumes", "1,10"}).code, 3);
}

TEST(Cli, RealLists) {
  EXPECT_EQ(gwp::cli::parse_real_list("1e-1..1e-3"), (std::vector<double>{0.1, 0.01, 0.001}));
  EXPECT_EQ(gwp::cli::parse_real_list("2e0..2e2"), (std::vector<double>{2, 20, 200}));
  EXPECT_EQ(gwp::cli::parse_real_list("1,2.5"), (std::vector<double>{1, 2.5}));
  EXPECT_THROW(gwp::cli::parse_real_list("1e-1..2e-3"), gwp::cli::UsageError);
  EXPECT_THROW(gwp::cli::parse_real_list("a,b"), gwp::cli::UsageError);
}

TEST(Binary, ByteIdenticalReruns) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const std::string base = std::string(GWP_CLI_PATH) +
                           " process simulate --a 1 --k 1 --rho 2 --window 0,0,1,1 --cells 8,8 --seed 42"
                           " --backend conditional --replicates 3 --out ";
  ASSERT_EQ(std::system((base + a.string()).c_str()), 0);
  ASSERT_EQ(std::system((base + b.string()).c_str()), 0);
  for (const char* name : {"counts_0.csv", "counts_1.csv", "counts_2.csv"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  // Sidecars differ only in the recorded --out path.
  auto ja = nlohmann::json::parse(slurp(a / "counts_2.json"));
  auto jb = nlohmann::json::parse(slurp(b / "counts_2.json"));
  ja["run"].erase("argv");
  jb["run"].erase("argv");
  EXPECT_EQ(ja, jb);
}

TEST(Binary, ExitStatus) {
  const std::string exe = GWP_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int rc = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  EXPECT_EQ(status("dist pmf --a 1 --k 1 --rho 2 --max-n 3"), 0);
  EXPECT_EQ(status("dist pmf --a 1 --k 1 --rho -1"), 3);
  EXPECT_EQ(status("dist pmf --unknown"), 2);
  EXPECT_EQ(status("process simulate --a 1 --k 1 --rho 2 --window 0,1 --cells 2 --out /proc/gwp_no_such_dir"), 4);
}
