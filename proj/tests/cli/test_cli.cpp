// Drives the perclab executable the way a user would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "perclab_cli_test";

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + kDir.string() + "' && " + env + " '" PERCLAB_CLI "' " + args +
                          " > last.out 2> last.err";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& name) {
  std::ifstream in(kDir / name, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const std::string& name, const std::string& text) {
  std::ofstream(kDir / name, std::ios::binary) << text;
}

// estimate and stderr of the first row with this observable
std::pair<double, double> row(const std::string& csv, const std::string& observable, int n) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() >= 5 && f[4] == observable && f[0] == std::to_string(n)) return {std::stod(f[2]), std::stod(f[3])};
  }
  FAIL("row not found: " << observable);
  return {0, 0};
}

struct Setup {
  Setup() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};
const Setup setup;

}  // namespace

TEST_CASE("oracle then incipient lands on the golden values") {
  REQUIRE(run("oracle --golden golden.json --csv oracle.csv") == 0);
  const auto golden = nlohmann::json::parse(slurp("golden.json"));
  CHECK(golden["configurations"] == 4096);
  REQUIRE(run("incipient --n 1 --m 1 --samples 100000 --golden golden.json --json inc.json --csv inc.csv") == 0);
  const auto [mean, se] = row(slurp("inc.csv"), "T_mean", 1);
  CHECK(std::abs(mean - golden["E_T"].get<double>()) <= 3 * se);
  const auto j = nlohmann::json::parse(slurp("inc.json"));
  for (const auto& c : j["checks"]) CHECK(c["ok"] == true);
}

TEST_CASE("crossing at n = 8 is one half") {
  REQUIRE(run("crossing --n 8 --samples 100000") == 0);
  const auto [p, se] = row(slurp("last.out"), "crossing", 8);
  CHECK(std::abs(p - 0.5) <= 4 * se);
}

TEST_CASE("fit of a synthetic square law") {
  std::string csv = "# perclab schema=1 command=synthetic config_hash=0000000000000000\n"
                    "n,samples,estimate,stderr,observable,m,attempts,s1,s2,s3,s4\n";
  for (int n : {4, 8, 16, 32, 64}) {
    const long long v = 1LL * n * n;
    csv += std::to_string(n) + ",1," + std::to_string(v) + ",0,y_mean," + std::to_string(n) + ",1," +
           std::to_string(v) + "," + std::to_string(v * v) + "," + std::to_string(v * v * v) + "," +
           std::to_string(v * v * v * v) + "\n";
  }
  spit("square.csv", csv);
  REQUIRE(run("fit --input square.csv --observable y_mean --target 2 --format json") == 0);
  const auto j = nlohmann::json::parse(slurp("last.out"));
  CHECK(j["fits"][0]["slope"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("merge laws on files") {
  REQUIRE(run("crossing --n-grid 4,8 --samples 50000 --csv a.csv") == 0);
  REQUIRE(run("crossing --n-grid 4,8 --samples 50000 --replica-offset 50000 --csv b.csv") == 0);
  REQUIRE(run("crossing --n-grid 4,8 --samples 100000 --csv full.csv") == 0);
  REQUIRE(run("merge --input a.csv --input b.csv --csv ab.csv") == 0);
  REQUIRE(run("merge --input b.csv,a.csv --csv ba.csv") == 0);
  CHECK(slurp("ab.csv") == slurp("ba.csv"));
  CHECK(slurp("ab.csv") == slurp("full.csv"));
  // header only: the empty partial result of the same run
  const std::string a = slurp("a.csv");
  spit("empty.csv", a.substr(0, a.find('\n', a.find('\n') + 1) + 1));
  REQUIRE(run("merge --input a.csv --input empty.csv --csv a_empty.csv") == 0);
  CHECK(slurp("a_empty.csv") == a);
  // a single file round-trips unchanged
  REQUIRE(run("merge --input a.csv --csv a_again.csv") == 0);
  CHECK(slurp("a_again.csv") == a);
  REQUIRE(run("crossing --n-grid 4,8 --samples 500 --seed 9 --csv other.csv") == 0);
  CHECK(run("merge --input a.csv --input other.csv") == 1);
  CHECK(slurp("last.err").find("config_mismatch") != std::string::npos);
}

TEST_CASE("byte-identical reruns, any worker count gives the same sums") {
  REQUIRE(run("incipient --n-grid 4,8 --replicas 300 --csv r1.csv") == 0);
  REQUIRE(run("incipient --n-grid 4,8 --replicas 300 --csv r2.csv") == 0);
  REQUIRE(run("incipient --n-grid 4,8 --replicas 300 --workers 3 --csv r3.csv") == 0);
  CHECK(slurp("r1.csv") == slurp("r2.csv"));
  CHECK(slurp("r1.csv") == slurp("r3.csv"));
}

TEST_CASE("seed precedence: file < environment < flag") {
  spit("run.conf", "command = sn\nn_grid = 3\nreplicas = 50\nseed = 11\n");
  REQUIRE(run("sn --config run.conf --csv f.csv") == 0);
  REQUIRE(run("sn --config run.conf --csv e.csv", "PERCLAB_SEED=12") == 0);
  REQUIRE(run("sn --config run.conf --seed 11 --csv x.csv", "PERCLAB_SEED=12") == 0);
  REQUIRE(run("sn --n-grid 3 --replicas 50 --seed 12 --csv s12.csv") == 0);
  CHECK(slurp("f.csv") != slurp("e.csv"));
  CHECK(slurp("f.csv") == slurp("x.csv"));
  CHECK(slurp("e.csv") == slurp("s12.csv"));
}

TEST_CASE("exit codes") {
  CHECK(run("") == 1);
  CHECK(run("incipient --bogus 3") == 1);
  CHECK(run("incipient --replicas lots") == 1);
  CHECK(run("incipient --config /nonexistent.conf") == 1);
  CHECK(run("incipient --n 2 --p 0 --max-attempts 10 --replicas 5") == 3);
  const auto err = nlohmann::json::parse(slurp("last.err"));
  CHECK(err["error"]["code"] == "budget_exceeded");
  CHECK(run("oracle --p 0.3") == 1);
  CHECK(run("incipient --help") == 0);
}
