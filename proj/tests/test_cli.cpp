#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cflin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(CFLIN_CLI_PATH) + " " + args + " > " + (dir_ / "stdout").string() + " 2> " +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

  void write(const std::string& name, const std::string& content) const { std::ofstream(path(name)) << content; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateCarlemanFourierRowCount) {
  ASSERT_EQ(run("simulate --kuramoto2 --omega1 1 --ktilde 1 --theta0 0.3 --method carleman-fourier -N 10 --t-end 0.5 "
                "--samples 257 -o " + path("cf.csv")),
            0);
  const std::string csv = slurp(path("cf.csv"));
  EXPECT_EQ(lines(csv), 258u);
  EXPECT_EQ(csv.rfind("t,comp0_re,comp0_im,comp1_re,comp1_im", 0), 0u);
  const json meta = json::parse(slurp(path("cf.csv.json")));
  EXPECT_EQ(meta["rows"], 257);
  EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 40u);
  EXPECT_EQ(meta["integration"]["lifted_dimension"], 65);
}

TEST_F(Cli, SimulateReferenceIsReal) {
  ASSERT_EQ(run("simulate --kuramoto2 --omega1 1 --theta0 0.3 --method reference --samples 11 -o " + path("r.csv")), 0);
  const std::string csv = slurp(path("r.csv"));
  EXPECT_EQ(csv.rfind("t,comp0\n", 0), 0u);
  EXPECT_EQ(lines(csv), 12u);
}

TEST_F(Cli, SimulateClassicalBlowsUp) {
  ASSERT_EQ(run("simulate --kuramoto2 --omega1 1 --theta0 1.5 --method classical -N 10 -o " + path("c.csv")), 0);
  const std::string csv = slurp(path("c.csv"));
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  EXPECT_GT(std::abs(std::stod(last.substr(last.find(',') + 1))), 10.0);
  const json meta = json::parse(slurp(path("c.csv.json")));
  EXPECT_EQ(meta["integration"]["method"], "classical-dopri5");
}

TEST_F(Cli, SimulateFieldFile) {
  write("field.json", R"({"d":1,"L":2,"taus":[1.0,1.4142135623730951],
    "coeffs":[{"p":1,"alphas":[[0],[0]],"re":0.5,"im":0},
              {"p":1,"alphas":[[1],[0]],"re":0,"im":-0.15},{"p":1,"alphas":[[-1],[0]],"re":0,"im":0.15},
              {"p":1,"alphas":[[0],[1]],"re":0,"im":-0.1},{"p":1,"alphas":[[0],[-1]],"re":0,"im":0.1}],
    "envelope":{"D":null,"r":0.5}})");
  ASSERT_EQ(run("simulate --field " + path("field.json") + " --x0 0.2 -N 3 --samples 5 --max-components 4 -o " +
                path("f.csv")),
            0);
  const std::string csv = slurp(path("f.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,comp0_re,comp0_im,comp1_re,comp1_im,comp2_re,comp2_im,comp3_re,comp3_im");
  EXPECT_EQ(run("simulate --field " + path("field.json") + " --x0 0.2,0.3 -o " + path("g.csv")), 2);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("simulate --kuramoto2 --no-such-flag"), 2);
  EXPECT_EQ(run("simulate -N 3"), 2);  // no model source
  EXPECT_EQ(run("simulate --kuramoto2 --ktilde 0.5"), 2);
  EXPECT_EQ(run("simulate --kuramoto2 --method bogus"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate --kuramoto2 --tol 1e-3"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, SweepSingleCellAndSidecar) {
  ASSERT_EQ(run("sweep --theta0-values 0.4 --t-values 0 -o " + path("one.csv")), 0);
  EXPECT_EQ(slurp(path("one.csv")), "theta0,t,value\n0.40000000000000002,0,-5\n");
  const json side = json::parse(slurp(path("one.csv.json")));
  EXPECT_EQ(side["config"]["command"], "sweep");
  EXPECT_TRUE(side["failures"].empty());
  EXPECT_EQ(side["metric"], "E_CF");
}

TEST_F(Cli, SweepClassicalSaturates) {
  ASSERT_EQ(run("sweep --method classical --omega1 1 --theta0-values 1.5 -o " + path("c.csv")), 0);
  const std::string csv = slurp(path("c.csv"));
  EXPECT_EQ(lines(csv), 66u);
  EXPECT_NE(csv.find(",1\n"), std::string::npos);
  const json side = json::parse(slurp(path("c.csv.json")));
  EXPECT_EQ(side["metric"], "E_C");
}

TEST_F(Cli, SweepIsDeterministicAndReplayable) {
  const std::string args = "sweep --omega1 1 --theta0-count 5 --t-count 9 -N 6 ";
  ASSERT_EQ(run(args + "--workers 1 -o " + path("a.csv")), 0);
  ASSERT_EQ(run(args + "--workers 4 -o " + path("b.csv")), 0);
  ASSERT_EQ(run(args + "--workers 1 -o " + path("c.csv")), 0);
  const std::string a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(a, slurp(path("c.csv")));
  EXPECT_EQ(lines(a), 46u);

  const json sa = json::parse(slurp(path("a.csv.json")));
  const json sb = json::parse(slurp(path("b.csv.json")));
  EXPECT_NE(sa["config_hash"], sb["config_hash"]);  // worker count is part of the config
  const json sc = json::parse(slurp(path("c.csv.json")));
  EXPECT_EQ(sa["config_hash"], sc["config_hash"]);  // output path is not

  ASSERT_EQ(run("sweep --replay " + path("a.csv.json") + " -o " + path("replay.csv")), 0);
  EXPECT_EQ(slurp(path("replay.csv")), a);
}

TEST_F(Cli, SimulateReplay) {
  ASSERT_EQ(run("simulate --kuramoto2 --omega1 0.5 --theta0 0.2 -N 5 --samples 9 -o " + path("s.csv")), 0);
  ASSERT_EQ(run("simulate --replay " + path("s.csv.json") + " -o " + path("s2.csv")), 0);
  EXPECT_EQ(slurp(path("s.csv")), slurp(path("s2.csv")));
}

TEST_F(Cli, ConfigFilePrecedence) {
  write("cfg.toml", "[simulate]\nkuramoto2 = true\nomega1 = 1.0\ntheta0 = 0.3\nmethod = \"reference\"\nsamples = 5\n");
  ASSERT_EQ(run("--config " + path("cfg.toml") + " simulate -o " + path("a.csv")), 0);
  EXPECT_EQ(lines(slurp(path("a.csv"))), 6u);
  ASSERT_EQ(run("--config " + path("cfg.toml") + " simulate --samples 7 -o " + path("b.csv")), 0);
  EXPECT_EQ(lines(slurp(path("b.csv"))), 8u);
  const json side = json::parse(slurp(path("b.csv.json")));
  EXPECT_EQ(side["config"]["method"], "reference");
  EXPECT_EQ(side["config"]["source"]["omega1"], 1.0);
}

TEST_F(Cli, Fig1WritesFourPanels) {
  ASSERT_EQ(run("sweep --theta0-count 3 --t-count 5 --workers 2 --fig1 " + path("fig1")), 0);
  for (const char* name : {"EC_omega0.csv", "EC_omega1.csv", "ECF_omega0.csv", "ECF_omega1.csv"}) {
    EXPECT_EQ(lines(slurp(path(std::string("fig1/") + name))), 16u) << name;
    EXPECT_TRUE(fs::exists(path(std::string("fig1/") + name + ".json")));
  }
}

TEST_F(Cli, BoundReport) {
  ASSERT_EQ(run("bound --kuramoto2 --omega1 1 --theta0 1.0 --horizon 0.04 --N-values 2,4 -o " + path("b.json")), 0);
  const json b = json::parse(slurp(path("b.json")));
  EXPECT_TRUE(b["satisfiable"].get<bool>());
  EXPECT_NEAR(b["T0"].get<double>(), 0.0428932, 1e-6);
  EXPECT_EQ(b["per_N"].size(), 2u);
  EXPECT_TRUE(b["all_pass"].get<bool>());

  ASSERT_EQ(run("bound --kuramoto2 --horizon 0.1 --N-values 2 -o " + path("u.json")), 0);
  const json u = json::parse(slurp(path("u.json")));
  EXPECT_FALSE(u["satisfiable"].get<bool>());
  EXPECT_TRUE(u["N0"].is_null());
}

TEST_F(Cli, N0) {
  ASSERT_EQ(run("n0 --D 2 --r 0.25 --horizon 0.1 -o " + path("n.json")), 0);
  EXPECT_EQ(json::parse(slurp(path("n.json")))["N0"], 2);
  EXPECT_EQ(run("n0 --D 2 --r 0.25 --horizon 0.3"), 1);
  EXPECT_NE(slurp(path("stderr")).find("horizon exceeds T_0; condition unsatisfiable"), std::string::npos);
  ASSERT_EQ(run("n0 --kuramoto2 --omega1 1 --horizon 0.03 -o " + path("k.json")), 0);
  EXPECT_EQ(json::parse(slurp(path("k.json")))["D"], 2.0);
}

TEST_F(Cli, DumpMatrix) {
  ASSERT_EQ(run("dump-matrix --kuramoto2 --method classical -N 2 -o " + path("a.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), "row,col,value\n1,1,2\n2,2,4\n");
  ASSERT_EQ(run("dump-matrix --kuramoto2 -N 3 -o " + path("b.csv") + " --layout " + path("l.csv")), 0);
  EXPECT_NE(slurp(path("b.csv")).find("1,3,0,0,0.5,0\n"), std::string::npos);
  EXPECT_EQ(lines(slurp(path("l.csv"))), 1u + 2u + 3u + 4u);
}

TEST_F(Cli, Normalize) {
  write("m.json", R"({"d":2,"omegas":[1.0,0.6],"K":2.0,"theta0":[0.8,-0.4]})");
  ASSERT_EQ(run("normalize --model " + path("m.json") + " -o " + path("n.json")), 0);
  const json n = json::parse(slurp(path("n.json")));
  EXPECT_NEAR(n["model"]["omegas"][0].get<double>(), 0.2, 1e-15);
  EXPECT_NEAR(n["reduced"]["theta0"].get<double>(), 0.6, 1e-15);
  EXPECT_EQ(n["ktilde"], -1.0);
  write("bad.json", R"({"d":2,"omegas":[1.0],"K":2.0,"theta0":[0.8,-0.4]})");
  EXPECT_EQ(run("normalize --model " + path("bad.json")), 2);

  ASSERT_EQ(run("simulate --model " + path("m.json") + " --method reference --samples 3 -o " + path("t.csv")), 0);
  const json side = json::parse(slurp(path("t.csv.json")));
  EXPECT_NEAR(side["source"]["reduced"]["omega1"].get<double>(), 0.2, 1e-15);
}
