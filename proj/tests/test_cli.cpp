#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kCli = PEERREV_CLI_PATH;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

// Scratch directory removed at scope exit.
struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& name) : root(fs::temp_directory_path() / ("peerrev_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  fs::path operator/(const std::string& p) const { return root / p; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const Scratch& s, const std::string& args, const std::string& env = "") {
  const auto out = s / "stdout.txt", err = s / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Relative path -> contents for every regular file below `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// Rows of a simple CSV (no quoted commas) keyed by header names.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> v;
    std::stringstream ss(l);
    std::string f;
    while (std::getline(ss, f, ',')) v.push_back(f);
    if (!l.empty() && l.back() == ',') v.emplace_back();
    return v;
  };
  while (std::getline(in, line)) {
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto f = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < f.size(); ++i) row[header[i]] = f[i];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  Scratch s("usage");
  CHECK(run(s, "").code == 1);
  CHECK(run(s, "--help").code == 0);
  CHECK(run(s, "transmogrify").code == 1);
  CHECK(run(s, "simulate --years 0 --out '" + (s / "o").string() + "'").code == 1);
  CHECK(run(s, "simulate --format xml --out '" + (s / "o").string() + "'").code == 1);
  CHECK(run(s, "simulate --jobs 0 --out '" + (s / "o").string() + "'").code == 1);
  CHECK(run(s, "simulate --allocation lottery --out '" + (s / "o").string() + "'").code == 1);
  CHECK(run(s, "analyze --out '" + (s / "o").string() + "'").code == 1);
  CHECK_FALSE(fs::exists(s / "o"));
}

TEST_CASE("unknown figure ids exit nonzero, list the known ids and leave nothing behind") {
  Scratch s("unknown");
  const auto r = run(s, "reproduce fig99 --out '" + (s / "o").string() + "'");
  CHECK(r.code == 1);
  for (const char* id : {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "suppfig4"}) {
    CHECK_THAT(r.err, ContainsSubstring(id));
  }
  CHECK_FALSE(fs::exists(s / "o"));
}

TEST_CASE("a missing or malformed config leaves no artifacts") {
  Scratch s("config");
  auto r = run(s, "simulate --config '" + (s / "absent.json").string() + "' --out '" + (s / "o").string() + "'");
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("absent.json"));
  write_file(s / "bad.json", "{\"simulation\": {\"yeras\": 3}}");
  r = run(s, "simulate --config '" + (s / "bad.json").string() + "' --out '" + (s / "o").string() + "'");
  CHECK(r.code == 1);
  CHECK_THAT(r.err, ContainsSubstring("yeras"));
  write_file(s / "broken.json", "{");
  CHECK(run(s, "simulate --config '" + (s / "broken.json").string() + "' --out '" + (s / "o").string() + "'").code == 1);
  CHECK_FALSE(fs::exists(s / "o"));
}

TEST_CASE("reproduce is deterministic and reruns bit-exactly from its manifest") {
  Scratch s("reproduce");
  const auto a = run(s, "reproduce fig4 --seed 7 --replicates 2 --out '" + (s / "a").string() + "'");
  REQUIRE(a.code == 0);
  const auto b = run(s, "reproduce fig4 --seed 7 --replicates 2 --jobs 2 --out '" + (s / "b").string() + "'");
  REQUIRE(b.code == 0);
  const auto ta = tree(s / "a");
  CHECK(ta == tree(s / "b"));
  CHECK(ta.contains("fig4_metrics.csv"));
  CHECK(ta.contains("manifest.json"));

  const auto c = run(s, "reproduce --config '" + (s / "a" / "manifest.json").string() + "' --out '" +
                            (s / "c").string() + "'");
  REQUIRE(c.code == 0);
  CHECK(tree(s / "c") == ta);

  const auto m = nlohmann::json::parse(ta.at("manifest.json"));
  CHECK(m["command"] == "reproduce");
  CHECK(m["config"]["figure"] == "fig4");
  CHECK(m["seed"] == 7);

  const auto d = run(s, "simulate --config '" + (s / "a" / "manifest.json").string() + "' --out '" +
                            (s / "d").string() + "'");
  CHECK(d.code == 1);
  CHECK_FALSE(fs::exists(s / "d"));
}

TEST_CASE("simulate writes tables, event logs and a manifest that reruns exactly") {
  Scratch s("simulate");
  const auto a = run(s, "simulate --scenario fig4 --years 2 --replicates 2 --seed 3 --out '" + (s / "a").string() + "'");
  REQUIRE(a.code == 0);
  const auto ta = tree(s / "a");
  for (const char* f : {"year_metrics.csv", "year_summary.csv", "report.json", "manifest.json",
                        "events/rep0/reviews.csv", "events/rep1/agents.csv"}) {
    CHECK(ta.contains(f));
  }
  const auto b = run(s, "simulate --config '" + (s / "a" / "manifest.json").string() + "' --out '" +
                            (s / "b").string() + "'");
  REQUIRE(b.code == 0);
  CHECK(tree(s / "b") == ta);

  const auto j = run(s, "simulate --scenario fig4 --years 1 --replicates 1 --format json --out '" +
                            (s / "j").string() + "'");
  REQUIRE(j.code == 0);
  const auto yj = nlohmann::json::parse(slurp(s / "j" / "year_metrics.json"));
  CHECK(yj["name"] == "year_metrics");
  CHECK_FALSE(yj["rows"].empty());
  CHECK(fs::exists(s / "j" / "events" / "rep0" / "reviews.jsonl"));
}

TEST_CASE("analyze on simulator logs matches the simulator's final-year metrics") {
  Scratch s("equivalence");
  REQUIRE(run(s, "simulate --scenario fig4 --years 2 --replicates 1 --seed 11 --out '" + (s / "sim").string() + "'")
              .code == 0);
  const auto ev = s / "sim" / "events" / "rep0";
  const auto r = run(s, "analyze --reviews '" + (ev / "reviews.csv").string() + "' --ratings '" +
                            (ev / "ratings.csv").string() + "' --authorship '" + (ev / "authorship.csv").string() +
                            "' --papers '" + (ev / "papers.csv").string() + "' --agents '" +
                            (ev / "agents.csv").string() + "' --out '" + (s / "an").string() + "'");
  REQUIRE(r.code == 0);
  std::map<std::string, std::map<std::string, std::string>> analyzed;  // method -> metric -> value
  for (const auto& row : read_csv(s / "an" / "metrics.csv")) {
    if (row.at("metric") == "estimator_r" || row.at("metric") == "coverage") {
      analyzed[row.at("group")][row.at("metric")] = row.at("value");
    }
  }
  std::size_t compared = 0;
  for (const auto& row : read_csv(s / "sim" / "year_metrics.csv")) {
    if (row.at("year") != "2") continue;
    const auto& got = analyzed.at(row.at("method"));
    CHECK(got.at("coverage") == row.at("coverage"));
    if (!row.at("correlation").empty()) CHECK(got.at("estimator_r") == row.at("correlation"));
    ++compared;
  }
  CHECK(compared > 0);

  const auto again = run(s, "analyze --config '" + (s / "an" / "manifest.json").string() + "' --out '" +
                                (s / "an2").string() + "'");
  REQUIRE(again.code == 0);
  CHECK(tree(s / "an2") == tree(s / "an"));
}

TEST_CASE("data validation failures exit 2 and name the problem") {
  Scratch s("validation");
  write_file(s / "dup.csv", "reviewer_id,paper_id,score\n0,0,0.5\n1,0,0.6\n0,0,0.7\n");
  auto r = run(s, "analyze --reviews '" + (s / "dup.csv").string() + "' --out '" + (s / "o").string() + "'");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("duplicate review (reviewer 0, paper 0) on line 2, 4"));
  write_file(s / "range.csv", "reviewer_id,paper_id,score\n0,0,7\n1,0,0.6\n");
  r = run(s, "analyze --reviews '" + (s / "range.csv").string() + "' --out '" + (s / "o").string() + "'");
  CHECK(r.code == 2);
  write_file(s / "ok.csv", "reviewer_id,paper_id,score\n0,0,7\n1,0,3\n2,1,9\n0,1,1\n");
  r = run(s, "analyze --reviews '" + (s / "ok.csv").string() + "' --score-min 1 --score-max 10 --out '" +
                 (s / "o").string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(s / "o" / "metrics.csv"));
  CHECK(fs::exists(s / "o" / "skipped.csv"));
  CHECK_FALSE(fs::exists(s / "absent"));
}

TEST_CASE("runtime failures exit 3 and remove partial outputs") {
  Scratch s("runtime");
  fs::create_directories(s / "o" / "year_metrics.csv");  // a directory where a table must go
  const auto r = run(s, "simulate --scenario fig4 --years 1 --replicates 1 --out '" + (s / "o").string() + "'");
  CHECK(r.code == 3);
  CHECK_FALSE(fs::exists(s / "o" / "events"));
  CHECK_FALSE(fs::exists(s / "o" / "manifest.json"));
  CHECK(fs::is_directory(s / "o" / "year_metrics.csv"));
}

TEST_CASE("warm start and baseline share a pool hash") {
  Scratch s("warm");
  REQUIRE(run(s, "simulate --scenario fig6 --years 1 --no-events --seed 5 --out '" + (s / "base").string() + "'").code ==
          0);
  REQUIRE(run(s, "simulate --scenario fig6 --years 1 --no-events --seed 5 --warm-start --out '" +
                     (s / "warm").string() + "'")
              .code == 0);
  const auto a = nlohmann::json::parse(slurp(s / "base" / "manifest.json"));
  const auto b = nlohmann::json::parse(slurp(s / "warm" / "manifest.json"));
  CHECK(a["pool_hashes"] == b["pool_hashes"]);
  CHECK(a["config"]["simulation"]["warm_start"] == false);
  CHECK(b["config"]["simulation"]["warm_start"] == true);
  CHECK_FALSE(fs::exists(s / "base" / "events"));
}

TEST_CASE("PEERREV_OUT sets the default output directory") {
  Scratch s("env");
  const auto r = run(s, "reproduce fig2 --replicates 1", "PEERREV_OUT='" + (s / "envout").string() + "'");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(s / "envout" / "fig2_msd.csv"));
  const auto r2 = run(s, "reproduce fig2 --replicates 1 --out '" + (s / "flag").string() + "'",
                      "PEERREV_OUT='" + (s / "ignored").string() + "'");
  REQUIRE(r2.code == 0);
  CHECK(fs::exists(s / "flag" / "fig2_msd.csv"));
  CHECK_FALSE(fs::exists(s / "ignored"));
}
