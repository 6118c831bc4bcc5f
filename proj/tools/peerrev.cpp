// peerrev: simulate | analyze | calibrate | reproduce
//
// Every run writes manifest.json next to its outputs. The manifest holds the
// fully resolved configuration, so `--config manifest.json` reruns the same
// command and reproduces the outputs byte for byte.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "peerrev/peerrev.hpp"

namespace fs = std::filesystem;
using namespace peerrev;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

constexpr int kManifestVersion = 1;
constexpr const char* kOutEnv = "PEERREV_OUT";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Files and directories created by this run; all removed unless commit() is called.
class OutputSet {
 public:
  explicit OutputSet(fs::path root) : root_(std::move(root)) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
  }

  const fs::path& root() const { return root_; }

  void make_dir(const fs::path& dir) {
    std::vector<fs::path> missing;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    fs::create_directories(dir);
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) dirs_.push_back(*it);
  }

  // Path of a new output file under root, registered for cleanup.
  fs::path file(const fs::path& rel) {
    const fs::path p = root_ / rel;
    make_dir(p.parent_path());
    if (fs::exists(p) && !fs::is_regular_file(p)) throw std::runtime_error("'" + p.string() + "' exists and is not a file");
    files_.push_back(p);
    names_.push_back(rel.generic_string());
    return p;
  }

  std::ofstream open(const fs::path& rel) {
    const auto p = file(rel);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
  }

  const std::vector<std::string>& names() const { return names_; }
  void commit() { committed_ = true; }

 private:
  fs::path root_;
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  std::string format = "csv";
  bool format_given = false;
};

fs::path resolve_out(const CommonOptions& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
  return "peerrev-out";
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

// The command config from --config: either a plain config object, or a
// manifest written by an earlier run of the same command.
Json load_command_config(CommonOptions& c, const std::string& command) {
  if (c.config_path.empty()) return Json::object();
  Json j = read_json_file(c.config_path);
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  if (j.contains("manifest_version")) {
    if (j.value("command", "") != command) {
      throw UsageError("manifest was written by '" + j.value("command", "?") + "', not '" + command + "'");
    }
    if (!c.format_given && j.contains("format")) c.format = j["format"].get<std::string>();
    return j.at("config");
  }
  return j;
}

void write_manifest(OutputSet& out, const std::string& command, const Json& config, const CommonOptions& c,
                    Json extra = Json::object()) {
  Json m{{"manifest_version", kManifestVersion}, {"command", command}, {"format", c.format},
         {"config", config},                     {"outputs", out.names()}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  auto f = out.open("manifest.json");
  f << m.dump(2) << '\n';
}

void write_result(OutputSet& out, const ResultTable& t, OutputFormat f) {
  auto s = out.open(t.name + extension(f));
  write_table(s, t, f);
}

// ---- simulate ----

SimConfig scenario_config(const std::string& name) {
  if (name == "default") return SimConfig{};
  if (name == "fig4") return fig4_config(0.5);
  if (name == "fig5") return fig5_config(AllocationPolicy::reward_crp);
  if (name == "fig6") return fig6_config(false);
  if (name == "fig7") return fig7_config(RatingCondition::continuous);
  throw UsageError("unknown scenario '" + name + "' (known: default, fig4, fig5, fig6, fig7)");
}

struct SimulateFlags {
  std::string scenario;
  bool warm_start = false;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> years;
  std::optional<double> bot_fraction;
  std::optional<std::string> allocation;
  bool binary_ratings = false;
  bool no_events = false;
};

int cmd_simulate(CommonOptions& c, const SimulateFlags& flags) {
  Json file = load_command_config(c, "simulate");
  detail::reject_unknown_keys(file, "simulate config", {"scenario", "replicates", "events", "simulation"});
  std::string scenario = file.value("scenario", "default");
  if (!flags.scenario.empty()) scenario = flags.scenario;
  SimConfig cfg = scenario_config(scenario);
  if (file.contains("simulation")) cfg = sim_config_from_json(file["simulation"], cfg);
  std::size_t replicates = file.value("replicates", std::size_t{1});
  bool events = file.value("events", true);

  if (flags.warm_start) cfg.warm_start = true;
  if (flags.replicates) replicates = *flags.replicates;
  if (flags.years) cfg.years = *flags.years;
  if (flags.bot_fraction) cfg.world.bot_fraction = *flags.bot_fraction;
  if (flags.allocation) cfg.allocation = allocation_policy_from_string(*flags.allocation);
  if (flags.binary_ratings) cfg.binary_ratings = true;
  if (flags.no_events) events = false;
  if (c.seed) cfg.world.seed = *c.seed;
  cfg.validate();
  if (replicates == 0) throw UsageError("replicates must be positive");
  const auto fmt = output_format_from_string(c.format);

  const Json resolved{{"scenario", scenario}, {"replicates", replicates}, {"events", events}, {"simulation", to_json(cfg)}};

  OutputSet out(resolve_out(c));
  out.make_dir(out.root());
  const RecordFormat rf = fmt == OutputFormat::csv ? RecordFormat::csv : RecordFormat::jsonl;
  std::vector<fs::path> event_dirs;
  if (events) {
    for (std::size_t k = 0; k < replicates; ++k) {
      const fs::path dir = fs::path("events") / ("rep" + std::to_string(k));
      for (const char* t : {"reviews", "ratings", "authorship", "papers", "agents"}) {
        out.file(dir / (std::string(t) + (rf == RecordFormat::csv ? ".csv" : ".jsonl")));
      }
      event_dirs.push_back(dir);
    }
  }

  const auto reports = run_replicates(replicates, c.jobs, [&](std::size_t k) {
    Simulation sim(cfg, k);
    SimReport rep;
    rep.pool_hash = pool_hash(sim.state().pool);
    while (!sim.done()) rep.years.push_back(sim.step());
    rep.warnings = sim.warnings();
    if (events) {
      // Paths were registered above; each replicate writes only its own directory.
      const SimState& s = sim.state();
      const fs::path dir = out.root() / event_dirs[k];
      const std::string ext = rf == RecordFormat::csv ? ".csv" : ".jsonl";
      auto open = [&](const char* t) {
        std::ofstream f(dir / (std::string(t) + ext), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write event log in '" + dir.string() + "'");
        return f;
      };
      auto f1 = open("reviews");
      write_review_table(f1, s.reviews, rf);
      auto f2 = open("ratings");
      write_rating_table(f2, s.ratings, rf);
      auto f3 = open("authorship");
      write_authorship(f3, s.authorship, rf);
      auto f4 = open("papers");
      write_paper_truth(f4, s.papers, rf);
      auto f5 = open("agents");
      write_agent_truth(f5, s.pool, rf);
    }
    return rep;
  });

  write_result(out, year_metrics_table(reports), fmt);
  write_result(out, year_summary_table(reports), fmt);

  Json report = Json::array();
  Json hashes = Json::array();
  for (std::size_t k = 0; k < reports.size(); ++k) {
    Json final_methods = Json::object();
    for (const auto& m : reports[k].years.back().methods) {
      final_methods[to_string(m.method)] = {{"correlation", m.correlation ? Json(*m.correlation) : Json(nullptr)},
                                            {"coverage", m.coverage}};
    }
    report.push_back({{"replicate", k},
                      {"pool_hash", hex64(reports[k].pool_hash)},
                      {"final_year", reports[k].years.back().year},
                      {"final_methods", final_methods},
                      {"warnings", reports[k].warnings}});
    hashes.push_back(hex64(reports[k].pool_hash));
    for (const auto& w : reports[k].warnings) std::cerr << "warning: replicate " << k << ": " << w << '\n';
  }
  {
    auto f = out.open("report.json");
    f << report.dump(2) << '\n';
  }
  write_manifest(out, "simulate", resolved, c, {{"seed", cfg.world.seed}, {"pool_hashes", hashes}});
  out.commit();
  std::cout << "simulate: " << replicates << " replicate(s), " << cfg.years << " year(s) -> " << out.root().string()
            << '\n';
  return kExitOk;
}

// ---- analyze ----

struct AnalyzeFlags {
  std::string reviews, ratings, authorship, papers, agents;
  std::vector<std::string> analyses;
  std::optional<double> score_min, score_max, rating_min, rating_max, alpha;
};

ValueRange range_from_json(const Json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw UsageError(key + " must be [min, max]");
  }
  ValueRange r{j[0].get<double>(), j[1].get<double>()};
  r.validate();
  return r;
}

RecordSchema schema_for(TableKind kind, const Json& columns, const ValueRange& range) {
  auto s = RecordSchema::defaults(kind);
  s.value_range = range;
  const auto key = to_string(kind);
  if (columns.contains(key)) {
    const auto& m = columns[key];
    if (!m.is_object()) throw UsageError("columns." + key + " must map roles to column names");
    for (const auto& [role, header] : m.items()) {
      if (!header.is_string()) throw UsageError("columns." + key + "." + role + " must be a string");
      s.rename(role, header.get<std::string>());
    }
  }
  return s;
}

int cmd_analyze(CommonOptions& c, const AnalyzeFlags& flags) {
  Json file = load_command_config(c, "analyze");
  detail::reject_unknown_keys(file, "analyze config",
                              {"inputs", "analyses", "alpha", "score_range", "rating_range", "columns", "scoring"});
  Json inputs = file.value("inputs", Json::object());
  detail::reject_unknown_keys(inputs, "analyze inputs", {"reviews", "ratings", "authorship", "papers", "agents"});
  auto set_input = [&](const char* key, const std::string& v) {
    if (!v.empty()) inputs[key] = v;
  };
  set_input("reviews", flags.reviews);
  set_input("ratings", flags.ratings);
  set_input("authorship", flags.authorship);
  set_input("papers", flags.papers);
  set_input("agents", flags.agents);
  if (!inputs.contains("reviews")) throw UsageError("analyze needs --reviews (or inputs.reviews in the config)");
  // Paths are resolved now so a manifest stays valid from any working directory.
  for (auto& [k, v] : inputs.items()) v = fs::absolute(v.get<std::string>()).lexically_normal().string();

  AnalysisOptions opt;
  if (file.contains("analyses")) opt.analyses = file["analyses"].get<std::vector<std::string>>();
  if (!flags.analyses.empty()) opt.analyses = flags.analyses;
  if (file.contains("alpha")) opt.alpha = file["alpha"].get<double>();
  if (flags.alpha) opt.alpha = *flags.alpha;
  if (file.contains("scoring")) opt.scoring = scoring_config_from_json(file["scoring"]);
  ValueRange score_range, rating_range;
  if (file.contains("score_range")) score_range = range_from_json(file["score_range"], "score_range");
  if (file.contains("rating_range")) rating_range = range_from_json(file["rating_range"], "rating_range");
  if (flags.score_min) score_range.min = *flags.score_min;
  if (flags.score_max) score_range.max = *flags.score_max;
  if (flags.rating_min) rating_range.min = *flags.rating_min;
  if (flags.rating_max) rating_range.max = *flags.rating_max;
  score_range.validate();
  rating_range.validate();
  const Json columns = file.value("columns", Json::object());
  const auto fmt = output_format_from_string(c.format);

  // All tables share one pair of label spaces; reviews load first.
  IdMaps ids;
  AnalysisInputs in;
  auto load = [&](const char* key, TableKind kind, const ValueRange& range, auto&& loader) {
    return load_file<std::invoke_result_t<decltype(loader), std::istream&, const RecordSchema&, IdMaps&>>(
        inputs[key].get<std::string>(), schema_for(kind, columns, range), ids, loader);
  };
  in.reviews = load("reviews", TableKind::reviews, score_range,
                    [](std::istream& s, const RecordSchema& sc, IdMaps& m) { return load_review_table(s, sc, m); });
  if (inputs.contains("ratings")) {
    in.ratings = load("ratings", TableKind::ratings, rating_range,
                      [](std::istream& s, const RecordSchema& sc, IdMaps& m) { return load_rating_table(s, sc, m); });
  }
  if (inputs.contains("authorship")) {
    in.authorship = load("authorship", TableKind::authorship, {},
                         [](std::istream& s, const RecordSchema& sc, IdMaps& m) { return load_authorship(s, sc, m); });
  }
  if (inputs.contains("papers")) {
    in.papers = load("papers", TableKind::papers, {},
                     [](std::istream& s, const RecordSchema& sc, IdMaps& m) { return load_paper_truth(s, sc, m); });
  }
  if (inputs.contains("agents")) {
    in.agents = load("agents", TableKind::agents, {},
                     [](std::istream& s, const RecordSchema& sc, IdMaps& m) { return load_agent_truth(s, sc, m); });
  }

  const auto result = analyze(in, opt);

  Json resolved{{"inputs", inputs},
                {"analyses", opt.analyses.empty() ? known_analyses() : opt.analyses},
                {"alpha", opt.alpha},
                {"score_range", {score_range.min, score_range.max}},
                {"rating_range", {rating_range.min, rating_range.max}},
                {"columns", columns},
                {"scoring", to_json(opt.scoring)}};

  OutputSet out(resolve_out(c));
  out.make_dir(out.root());
  write_result(out, metrics_table(result.metrics), fmt);
  write_result(out, skipped_table(result.skipped), fmt);
  write_manifest(out, "analyze", resolved, c);
  out.commit();
  for (const auto& s : result.skipped) std::cerr << "skipped " << s.analysis << ": " << s.reason << '\n';
  std::cout << "analyze: " << result.metrics.size() << " metric(s), " << result.skipped.size() << " skipped -> "
            << out.root().string() << '\n';
  return kExitOk;
}

// ---- calibrate ----

struct CalibrateFlags {
  std::optional<double> target;
  std::optional<std::size_t> replicates;
};

int cmd_calibrate(CommonOptions& c, const CalibrateFlags& flags) {
  Json file = load_command_config(c, "calibrate");
  detail::reject_unknown_keys(file, "calibrate config", {"target", "world", "calibration"});
  double target = file.value("target", 0.161);
  if (flags.target) target = *flags.target;
  WorldConfig world;
  if (file.contains("world")) world = world_config_from_json(file["world"]);
  CalibrationOptions opt;
  if (file.contains("calibration")) opt = calibration_options_from_json(file["calibration"]);
  if (flags.replicates) opt.replicates = *flags.replicates;
  if (c.seed) world.seed = *c.seed;
  const auto fmt = output_format_from_string(c.format);

  const auto res = calibrate_alpha(target, world, opt);
  // Check on streams the search never saw.
  WorldConfig fresh = world;
  fresh.seed = world.seed + 1;
  const double fresh_r = simulated_pairwise_r(fresh, res.alpha, opt.shape, opt.replicates);

  const Json resolved{{"target", target}, {"world", to_json(world)}, {"calibration", to_json(opt)}};
  ResultTable t{"calibration", {"target_r", "alpha", "achieved_r", "iterations", "fresh_seed_r"}, {}};
  t.add({target, res.alpha, res.achieved_r, cell(static_cast<std::size_t>(res.iterations)), fresh_r});

  OutputSet out(resolve_out(c));
  out.make_dir(out.root());
  write_result(out, t, fmt);
  write_manifest(out, "calibrate", resolved, c, {{"seed", world.seed}});
  out.commit();
  std::cout << "calibrate: alpha=" << detail::format_double(res.alpha) << " r=" << detail::format_double(res.achieved_r)
            << " (fresh seed r=" << detail::format_double(fresh_r) << ")\n";
  return kExitOk;
}

// ---- reproduce ----

struct ReproduceFlags {
  std::string figure;
  std::optional<std::size_t> replicates;
};

int cmd_reproduce(CommonOptions& c, const ReproduceFlags& flags) {
  Json file = load_command_config(c, "reproduce");
  detail::reject_unknown_keys(file, "reproduce config", {"figure", "seed", "replicates"});
  std::string figure = file.value("figure", "");
  if (!flags.figure.empty()) figure = flags.figure;
  ExperimentOptions o;
  o.seed = file.value("seed", o.seed);
  o.replicates = file.value("replicates", o.replicates);
  if (c.seed) o.seed = *c.seed;
  if (flags.replicates) o.replicates = *flags.replicates;
  o.jobs = c.jobs;
  const auto& known = known_figures();
  if (std::find(known.begin(), known.end(), figure) == known.end()) {
    std::string list;
    for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
    throw UsageError((figure.empty() ? std::string("no figure id given") : "unknown figure id '" + figure + "'") +
                     " (known: " + list + ")");
  }
  if (o.replicates == 0) throw UsageError("replicates must be positive");
  const auto fmt = output_format_from_string(c.format);

  const auto result = reproduce(figure, o);
  const Json resolved{{"figure", figure}, {"seed", o.seed}, {"replicates", o.replicates}};

  OutputSet out(resolve_out(c));
  out.make_dir(out.root());
  for (const auto& t : result.tables) write_result(out, t, fmt);
  write_manifest(out, "reproduce", resolved, c, {{"seed", o.seed}});
  out.commit();
  std::cout << "reproduce " << figure << ": " << result.tables.size() << " table(s) -> " << out.root().string()
            << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, CommonOptions& c) {
  app->add_option("--config", c.config_path, "JSON config, or a manifest.json from an earlier run");
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--jobs", c.jobs, "Concurrent replicates")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, std::string("Output directory (default: $") + kOutEnv + " or ./peerrev-out)");
  app->add_option("--format", c.format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->each([&c](const std::string&) { c.format_given = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-review quality estimation and open-platform simulation"};
  app.require_subcommand(1);
  CommonOptions common;

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run the platform simulator");
  add_common(simulate, common);
  simulate->add_option("--scenario", sim.scenario, "Preset: default, fig4, fig5, fig6, fig7");
  simulate->add_flag("--warm-start", sim.warm_start, "Seed the first cohort with the best reviewers");
  simulate->add_option("--replicates", sim.replicates, "Independent replicates");
  simulate->add_option("--years", sim.years, "Simulated years");
  simulate->add_option("--bot-fraction", sim.bot_fraction, "Share of bots in the user pool");
  simulate->add_option("--allocation", sim.allocation, "uniform, crp or reward_crp");
  simulate->add_flag("--binary-ratings", sim.binary_ratings, "Binarize ratings at the threshold");
  simulate->add_flag("--no-events", sim.no_events, "Skip the per-replicate event logs");

  AnalyzeFlags an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyze review/rating tables");
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--reviews", an.reviews, "Review table (.csv or .jsonl)");
  analyze_cmd->add_option("--ratings", an.ratings, "Ratings of reviewers");
  analyze_cmd->add_option("--authorship", an.authorship, "Author to paper table");
  analyze_cmd->add_option("--papers", an.papers, "Hidden paper qualities (simulation logs)");
  analyze_cmd->add_option("--agents", an.agents, "Hidden agent qualities and bot flags (simulation logs)");
  analyze_cmd->add_option("--analyses", an.analyses, "Subset of analyses to run")->delimiter(',');
  analyze_cmd->add_option("--score-min", an.score_min, "Lowest possible score (rescaled to 0)");
  analyze_cmd->add_option("--score-max", an.score_max, "Highest possible score (rescaled to 1)");
  analyze_cmd->add_option("--rating-min", an.rating_min, "Lowest possible rating");
  analyze_cmd->add_option("--rating-max", an.rating_max, "Highest possible rating");
  analyze_cmd->add_option("--alpha", an.alpha, "Noise scale for oracle weights");

  CalibrateFlags cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit alpha to a target pairwise reviewer correlation");
  add_common(calibrate, common);
  calibrate->add_option("--target", cal.target, "Target pairwise r (default 0.161)");
  calibrate->add_option("--replicates", cal.replicates, "Conferences simulated per alpha");

  ReproduceFlags rep;
  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a figure preset");
  add_common(reproduce_cmd, common);
  reproduce_cmd->add_option("figure", rep.figure, "fig1, fig2, fig3, fig4, fig5, fig6, fig7 or suppfig4");
  reproduce_cmd->add_option("--replicates", rep.replicates, "Replicates (default 20)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, sim);
    if (analyze_cmd->parsed()) return cmd_analyze(common, an);
    if (calibrate->parsed()) return cmd_calibrate(common, cal);
    return cmd_reproduce(common, rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Json::exception& e) {
    std::cerr << "error: bad config value: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
