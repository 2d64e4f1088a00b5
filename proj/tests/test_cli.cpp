#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pgap/density.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
};

fs::path work_dir() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / "pgap_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string cmd =
      std::string(PGAP_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream is(out);
  std::stringstream ss;
  ss << is.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trig subcommand", "[cli]") {
  auto pi3 = run_cli("trig --p 3 --eval pi");
  CHECK(pi3.exit_code == 0);
  CHECK(std::stod(pi3.out) == Catch::Approx(2.4183991523122905).epsilon(1e-14));
  auto s = run_cli("trig --p 2 --eval sin --t 0.5235987755982988");
  CHECK(std::stod(s.out) == Catch::Approx(0.5).epsilon(1e-12));
  auto self = run_cli("trig --selftest");
  CHECK(self.exit_code == 0);
  CHECK(self.out.find("identity violation") != std::string::npos);
  auto bad = run_cli("trig --p 3 --eval tan");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("gap subcommand emits schema-1 json", "[cli]") {
  auto r = run_cli("gap --p 2 --K 0 --N 2 --D 3.14159265 --json");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["lambda"].get<double>() > 0.0);
  CHECK(j["lambda"].get<double>() == Catch::Approx(1.0).epsilon(1e-5));
  CHECK(j["method"] == "shooting");

  auto csv = run_cli("gap --p 2 --K 0 --N 2 --D 1 --csv");
  REQUIRE(csv.exit_code == 0);
  CHECK(csv.out.rfind("p,K,N,D,lambda,method,minimizing_Dprime,iterations", 0) == 0);
}

TEST_CASE("density round trip via files", "[cli]") {
  const fs::path csv = work_dir() / "model.csv";
  {
    pgap::Params pr(pgap::PExponent(2.0), -1.0, 3.0, 1.0);
    pgap::write_density_csv(csv.string(), pgap::model_density(pr, 1024));
  }
  auto ok = run_cli("density validate --file " + csv.string() + " --K -1 --N 3 --D 1");
  CHECK(ok.exit_code == 0);
  auto j = json::parse(ok.out);
  CHECK(j["pass"] == true);

  // wrong class parameters: the same data must fail for much larger K
  auto bad = run_cli("density validate --file " + csv.string() + " --K 3.5 --N 2 --D 1");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("random density generation validates", "[cli]") {
  const fs::path csv = work_dir() / "rand.csv";
  auto gen = run_cli("density random --seed 12 --K -1 --N 3 --D 1 --degree 5 --out " +
                     csv.string());
  REQUIRE(gen.exit_code == 0);
  auto val = run_cli("density validate --file " + csv.string() + " --K -1 --N 3 --D 1");
  CHECK(val.exit_code == 0);
  // byte-identical regeneration
  const fs::path csv2 = work_dir() / "rand2.csv";
  run_cli("density random --seed 12 --K -1 --N 3 --D 1 --degree 5 --out " + csv2.string());
  CHECK(slurp(csv) == slurp(csv2));
  // and a density gap above the model value
  auto g = run_cli("gap --p 2 --K -1 --N 3 --D 1 --density " + csv.string());
  REQUIRE(g.exit_code == 0);
  auto jh = json::parse(run_cli("gap --p 2 --K -1 --N 3 --D 1").out);
  auto jd = json::parse(g.out);
  CHECK(jd["lambda"].get<double>() >=
        jh["lambda"].get<double>() * (1.0 - 1e-6));
}

TEST_CASE("malformed density csv reports the line", "[cli]") {
  const fs::path csv = work_dir() / "broken.csv";
  std::ofstream(csv) << "x,log_h,log_deriv\n0,0,0\n0.5,oops\n1,0,0\n";
  auto r = run_cli("density validate --file " + csv.string() + " --K 0 --N 2 --D 1");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("line 3") != std::string::npos);
}

TEST_CASE("sweep is sorted, monotone along D, and reproducible", "[cli]") {
  const fs::path t1 = work_dir() / "sweep1.csv";
  const fs::path t2 = work_dir() / "sweep2.csv";
  const std::string args =
      "sweep --p-list 1.5,2 --K-list -1,0 --N-list 2 --D-list 1,2 --out ";
  REQUIRE(run_cli(args + t1.string()).exit_code == 0);
  REQUIRE(run_cli(args + t2.string()).exit_code == 0);
  const std::string body = slurp(t1);
  CHECK(body == slurp(t2));

  std::istringstream is(body);
  std::string line;
  std::getline(is, line);
  CHECK(line == "p,K,N,D,lambda,method,minimizing_Dprime,iterations");
  struct Row {
    double p, K, N, D, lambda;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    Row r;
    std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &r.p, &r.K, &r.N, &r.D,
                &r.lambda);
    rows.push_back(r);
  }
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    // sorted by (p, K, N, D)
    auto key = [](const Row& r) { return std::tuple(r.p, r.K, r.N, r.D); };
    CHECK(key(rows[i]) < key(rows[i + 1]));
    CHECK(rows[i].lambda > 0.0);
    // nonincreasing lambda along D within a (p, K, N) block
    if (key(rows[i]) ==
        std::tuple(rows[i + 1].p, rows[i + 1].K, rows[i + 1].N, rows[i].D) &&
        rows[i + 1].D > rows[i].D)
      CHECK(rows[i + 1].lambda < rows[i].lambda);
  }
  // a sweep row is reproducible by a single gap invocation
  auto j = json::parse(run_cli("gap --p 1.5 --K -1 --N 2 --D 1 --json").out);
  bool found = false;
  for (const auto& r : rows)
    if (r.p == 1.5 && r.K == -1.0 && r.D == 1.0) {
      CHECK(j["lambda"].get<double>() == r.lambda);
      found = true;
    }
  CHECK(found);
}

TEST_CASE("eigenfunction emission", "[cli]") {
  const fs::path csv = work_dir() / "eig.csv";
  auto r = run_cli("eigenfunction --p 2 --K -1 --N 3 --D 1 --samples 257 --out " +
                   csv.string());
  REQUIRE(r.exit_code == 0);
  std::istringstream is(slurp(csv));
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,phi,u,uprime");
  std::size_t n = 0;
  double prev_x = -1.0;
  while (std::getline(is, line)) {
    double x, phi, u, up;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &phi, &u, &up) == 4);
    CHECK(x > prev_x);
    prev_x = x;
    ++n;
  }
  CHECK(n == 257);
}

TEST_CASE("oracle subcommand", "[cli]") {
  auto r = run_cli("oracle --p 2 --K 0 --N 2 --D 3.14159265358979 --M 2048 --restarts 2 --json");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["lambda"].get<double>() == Catch::Approx(1.0).margin(2e-4));
  CHECK(j["converged"] == true);
}

TEST_CASE("audit subcommand", "[cli]") {
  auto r = run_cli("audit --p 2 --K -1 --N 3 --D 1 --seeds 3 --seed 1");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["all_pass"] == true);
  REQUIRE(j["checks"].is_array());
  CHECK(j["checks"].size() >= 4);
}

TEST_CASE("unknown flags fail loudly", "[cli]") {
  auto r = run_cli("gap --p 2 --K 0 --N 2 --D 1 --frobnicate");
  CHECK(r.exit_code != 0);
}
