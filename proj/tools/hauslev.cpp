// hauslev: sample, estimate, compare and sweep density level-set estimates.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hauslev/error.hpp"
#include "hauslev/estimator.hpp"
#include "hauslev/format.hpp"
#include "hauslev/grid.hpp"
#include "hauslev/gridset_io.hpp"
#include "hauslev/harness.hpp"
#include "hauslev/sample_io.hpp"
#include "hauslev/synth.hpp"
#include "hauslev/text_config.hpp"

namespace fs = std::filesystem;
using namespace hauslev;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kResource = 3, kValidation = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kModelKeys = {"model", "d", "alpha", "gamma", "contrast", "cap_fraction",
                                             "geometry", "support"};

const std::map<std::string, std::string> kDefaults = {
    {"model", "interval"}, {"d", "1"}, {"alpha", "1"}, {"contrast", "0.9"}, {"cap_fraction", "0.5"},
    {"support", "false"}, {"seed", "0"}, {"base_seed", "0"}, {"out", "."}, {"method", "adaptive"},
    {"replications", "1"}, {"jump_mode", "false"}, {"losses", "hausdorff,symdiff"}, {"timing", "false"},
};

// Effective key/value settings: defaults, then the config file, then flags.
class Settings {
 public:
  Settings(std::string command, std::vector<std::string> keys) : command_(std::move(command)) {
    for (auto& k : keys) allowed_.insert(std::move(k));
  }

  void load(const std::string& path) {
    std::map<std::string, ConfigValue> entries;
    try {
      entries = read_text_config(path);
    } catch (const std::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
    for (const auto& [key, v] : entries) {
      if (!allowed_.count(key)) {
        throw UsageError(path + ":" + std::to_string(v.line) + ": unknown key '" + key + "' for " + command_);
      }
      values_[key] = v.text;
      explicit_.insert(key);
    }
  }
  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
    explicit_.insert(key);
  }

  bool given(const std::string& key) const { return explicit_.count(key) > 0; }
  bool has(const std::string& key) const { return values_.count(key) || kDefaults.count(key); }

  std::string str(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    if (auto it = kDefaults.find(key); it != kDefaults.end()) return it->second;
    throw UsageError(command_ + ": missing required setting '" + key + "'");
  }
  double real(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("setting '" + key + "' is not a number: '" + s + "'");
  }
  long long integer(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("setting '" + key + "' is not an integer: '" + s + "'");
  }
  std::uint64_t unsigned_integer(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      if (!s.empty() && s[0] != '-') {
        const unsigned long long v = std::stoull(s, &pos);
        if (pos == s.size()) return v;
      }
    } catch (const std::exception&) {
    }
    throw UsageError("setting '" + key + "' is not a non-negative integer: '" + s + "'");
  }
  bool boolean(const std::string& key) const {
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError("setting '" + key + "' is not a boolean: '" + s + "'");
  }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        if (item.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw UsageError("setting '" + key + "' has a bad list entry '" + item + "'");
      }
    }
    return out;
  }
  std::vector<std::string> words(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto a = item.find_first_not_of(" \t");
      const auto b = item.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
  }

  // Every allowed key that has a value, defaults included, plus derived lines.
  void write_resolved(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& derived) const {
    std::ofstream out(dir / "resolved_config", std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write " + (dir / "resolved_config").string());
    out << "# command: " << command_ << '\n';
    for (const auto& key : allowed_) {
      if (key == "config" || !has(key)) continue;
      out << key << " = " << str(key) << '\n';
    }
    for (const auto& [k, v] : derived) out << "# resolved " << k << " = " << v << '\n';
  }

  const std::string& command() const { return command_; }

 private:
  std::string command_;
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

ModelSpec model_spec(const Settings& s) {
  ModelSpec m;
  const std::string name = s.str("model");
  m.support = s.boolean("support");
  if (name == "support") {
    m.shape = Shape::interval;
    m.support = true;
  } else {
    try {
      m.shape = parse_shape(name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  m.d = static_cast<int>(s.integer("d"));
  m.alpha = s.real("alpha");
  if (s.has("gamma") && !m.support) m.gamma = s.real("gamma");
  m.contrast = s.real("contrast");
  m.cap_fraction = s.real("cap_fraction");
  if (s.has("geometry")) m.geometry = s.reals("geometry");
  return m;
}

std::vector<std::pair<std::string, std::string>> model_derived(const DensityModel& m) {
  return {{"gamma", fmt17(m.gamma())}, {"amplitude", fmt17(m.amplitude())}, {"r_cap", fmt17(m.r_cap())},
          {"f_max", fmt17(m.f_max())}};
}

fs::path output_dir(const Settings& s) {
  fs::path dir = s.str("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::ios_base::failure("cannot create output directory " + dir.string());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

int cmd_sample(const Settings& s) {
  const long long n = s.integer("n");
  if (n < 1) throw UsageError("sample: --n must be at least 1");
  const std::uint64_t seed = s.unsigned_integer("seed");
  const DensityModel model = make_model(model_spec(s));
  const SampleSet samples = sample(model, static_cast<std::size_t>(n), seed);
  const fs::path dir = output_dir(s);
  write_samples(dir / "samples.csv", samples);
  auto derived = model_derived(model);
  derived.push_back({"acceptance_rate", fmt17(samples.acceptance_rate)});
  s.write_resolved(dir, derived);
  std::cout << "n=" << samples.n() << " acceptance_rate=" << fmt17(samples.acceptance_rate) << " seed=" << seed
            << " -> " << (dir / "samples.csv").string() << '\n';
  return kOk;
}

int cmd_estimate(const Settings& s) {
  const SampleSet samples = read_samples(fs::path(s.str("samples")));
  if (samples.d != s.integer("d") && s.given("d")) throw UsageError("estimate: --d does not match the sample file");
  EstimatorConfig cfg;
  if (s.given("gamma")) {
    cfg.gamma = s.real("gamma");
  } else {
    Settings copy = s;
    copy.set("d", std::to_string(samples.d));
    cfg.gamma = make_model(model_spec(copy)).gamma();
  }
  if (cfg.gamma < 0.0) throw UsageError("estimate: gamma must be non-negative");
  if (s.has("delta")) cfg.delta = s.real("delta");
  if (s.has("s_n")) cfg.s_n = s.real("s_n");
  if (s.has("J")) cfg.max_resolution = static_cast<int>(s.integer("J"));
  if (s.has("j")) cfg.fixed_j = static_cast<int>(s.integer("j"));
  if (s.given("alpha")) cfg.alpha = s.real("alpha");
  cfg.jump_mode = s.boolean("jump_mode");
  const Estimate est = estimate(samples, cfg);
  const fs::path dir = output_dir(s);
  write_gridset(dir / "estimate.json", est.set);
  write_text(dir / "diagnostics.json", diagnostics_to_json(est.diagnostics) + "\n");
  s.write_resolved(dir, {{"gamma", fmt17(cfg.gamma)},
                         {"s_n", fmt17(est.diagnostics.s_n)},
                         {"delta", fmt17(est.diagnostics.delta)},
                         {"mode", est.diagnostics.mode},
                         {"chosen_j", std::to_string(est.diagnostics.chosen_j)}});
  std::cout << "mode=" << est.diagnostics.mode << " chosen_j=" << est.diagnostics.chosen_j
            << " cells=" << est.set.size() << '\n';
  return kOk;
}

int cmd_compare(const Settings& s, const std::string& a, const std::string& b, bool symdiff) {
  const GridSet A = read_gridset(a);
  const GridSet B = read_gridset(b);
  const double v = symdiff ? symmetric_difference_measure(A, B) : hausdorff(A, B);
  if (s.given("out")) s.write_resolved(output_dir(s), {{"set_a", a}, {"set_b", b}});
  std::cout << fmt17(v) << '\n';
  return kOk;
}

std::vector<std::size_t> parse_n_grid(const Settings& s) {
  std::vector<std::size_t> out;
  for (const auto& w : s.words("n_grid")) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(w, &pos);
      if (pos != w.size() || w[0] == '-') throw std::invalid_argument(w);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("n_grid entry '" + w + "' is not a positive integer");
    }
  }
  return out;
}

int cmd_sweep(const Settings& s) {
  SweepPlan plan;
  plan.model = model_spec(s);
  try {
    plan.method = parse_method(s.str("method"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  plan.n_grid = parse_n_grid(s);
  plan.replications = static_cast<int>(s.integer("replications"));
  plan.base_seed = s.given("base_seed") || !s.given("seed") ? s.unsigned_integer("base_seed") : s.unsigned_integer("seed");
  if (s.has("j_ref")) plan.j_ref = static_cast<int>(s.integer("j_ref"));
  if (s.has("j")) plan.fixed_j = static_cast<int>(s.integer("j"));
  if (s.has("delta")) plan.delta = s.real("delta");
  if (s.has("s_n")) plan.s_n = s.real("s_n");
  if (s.has("J")) plan.max_resolution = static_cast<int>(s.integer("J"));
  if (s.has("oracle_alpha")) plan.alpha = s.real("oracle_alpha");
  plan.jump_mode = s.boolean("jump_mode");
  plan.timing = s.boolean("timing");
  const auto losses = s.words("losses");
  plan.hausdorff_loss = plan.symdiff_loss = false;
  for (const auto& l : losses) {
    if (l == "hausdorff") plan.hausdorff_loss = true;
    else if (l == "symdiff") plan.symdiff_loss = true;
    else throw UsageError("unknown loss '" + l + "'");
  }
  try {
    validate(plan);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("sweep plan: ") + e.what());
  }

  const SweepResult result = run_sweep(plan);
  const fs::path dir = output_dir(s);
  {
    std::ofstream out(dir / "sweep.csv", std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot write sweep.csv");
    write_sweep_csv(out, result);
  }

  // Mean of the primary loss per n.
  std::map<std::size_t, std::pair<double, int>> acc;
  for (const auto& r : result.rows) {
    const double v = plan.hausdorff_loss ? *r.hausdorff : *r.symdiff;
    acc[r.n].first += v;
    ++acc[r.n].second;
  }
  std::vector<std::pair<std::size_t, double>> means;
  std::vector<std::pair<double, double>> points;
  for (const auto& [n, a] : acc) {
    means.push_back({n, a.first / a.second});
    if (a.first > 0.0) {
      const double x = static_cast<double>(n);
      points.push_back({std::log(x / std::log(x)), std::log(a.first / a.second)});
    }
  }
  std::optional<RateFit> fit;
  std::string note;
  try {
    fit = fit_rate(means, result.target_exponent);
  } catch (const std::runtime_error& e) {
    note = e.what();
  }
  write_text(dir / "rate.json", rate_to_json(fit, result.target_exponent, points, note) + "\n");
  {
    std::ofstream out(dir / "rate_points.tsv", std::ios::binary);
    write_tsv(out, points);
  }
  {
    std::vector<std::pair<double, double>> side;
    for (const auto& [n, v] : median_cell_side_by_n(result)) side.push_back({static_cast<double>(n), v});
    std::ofstream out(dir / "median_cell_side.tsv", std::ios::binary);
    write_tsv(out, side);
  }
  s.write_resolved(dir, {{"j_ref", std::to_string(result.j_ref)}, {"target", fmt17(result.target_exponent)}});
  std::cout << "rows=" << result.rows.size() << " j_ref=" << result.j_ref << " target=" << fmt17(result.target_exponent);
  if (fit) std::cout << " slope=" << fmt17(fit->slope) << " stderr=" << fmt17(fit->slope_stderr);
  else std::cout << " slope=n/a (" << note << ")";
  std::cout << '\n';
  return kOk;
}

int cmd_validate(const Settings& s) {
  const DensityModel model = make_model(model_spec(s));
  const AssumptionReport rep = check_assumptions(model);
  const auto& c = model.constants();
  const int d = model.d();
  bool ok = rep.ok();
  auto flag = [](bool pass) { return pass ? "ok" : "FAIL"; };

  std::cout << "model: " << to_string(model.spec().shape) << (model.is_support() ? " (support)" : "") << " d=" << d
            << " alpha=" << fmt17(model.alpha()) << " gamma=" << fmt17(model.gamma())
            << " amplitude=" << fmt17(model.amplitude()) << " r_cap=" << fmt17(model.r_cap())
            << " f_max=" << fmt17(model.f_max()) << '\n';
  std::cout << "integral residual: " << fmt17(rep.integral_residual) << " (tolerance " << fmt17(rep.integral_tolerance)
            << ") " << flag(rep.integral_residual <= rep.integral_tolerance) << '\n';
  std::cout << "constants: C1=" << fmt17(c.c1) << " C2=" << fmt17(c.c2) << " delta1=" << fmt17(c.delta1)
            << " delta2=" << fmt17(c.delta2) << " eps_o=" << fmt17(c.eps_o) << '\n';
  std::cout << "density range on check grid: [" << fmt17(rep.f_lo) << ", " << fmt17(rep.f_hi) << "] "
            << flag(rep.range_ok) << '\n';
  if (rep.vacuous) {
    std::cout << "warning: [A1]/[A2] vacuous, the level set has no boundary to test against\n";
  } else {
    std::cout << "[A1] lower bound: " << rep.lower_checked << " points checked, " << rep.lower_violations
              << " violations " << flag(rep.lower_violations == 0) << '\n';
    std::cout << "[A2] upper bound near x0: " << rep.upper_checked << " points checked, " << rep.upper_violations
              << " violations " << flag(rep.upper_violations == 0) << '\n';
  }

  const int jr = s.has("j_ref") ? static_cast<int>(s.integer("j_ref")) : (d == 1 ? 10 : (d == 2 ? 6 : 5));
  const GridSet g = true_level_set(model, jr);
  const double eps = 4.0 * g.grid().sidelength();
  double cover = std::numeric_limits<double>::infinity();
  if (g.empty()) {
    std::cout << "[B] inner cover at j=" << jr << ": level set rasterizes to no cells FAIL\n";
    ok = false;
  } else {
    cover = inner_cover_distance(g, eps);
    const bool pass = std::isfinite(cover);
    std::cout << "[B] inner cover at j=" << jr << ", eps=" << fmt17(eps) << ": distance "
              << (pass ? fmt17(cover) : std::string("+inf")) << (pass ? " (ratio " + fmt17(cover / eps) + ") " : " ")
              << flag(pass) << '\n';
    ok = ok && pass;
  }
  const fs::path dir = output_dir(s);
  auto derived = model_derived(model);
  derived.push_back({"inner_cover_distance", std::isfinite(cover) ? fmt17(cover) : "inf"});
  s.write_resolved(dir, derived);
  std::cout << "result: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kValidation;
}

// Flag storage for one subcommand; only flags actually given override settings.
struct Flags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool jump_mode = false;
  CLI::Option* jump_opt = nullptr;
  std::string config;
  CLI::Option* config_opt = nullptr;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }
  void apply(Settings& s) const {
    if (config_opt && config_opt->count()) s.load(config);
    for (const auto& [key, opt] : options) {
      if (opt->count()) s.set(key, values.at(key));
    }
    if (jump_opt && jump_opt->count()) s.set("jump_mode", jump_mode ? "true" : "false");
  }
};

void add_model_flags(CLI::App* app, Flags& f) {
  f.add(app, "--model", "model", "interval, ball, two-component, uniform, ribbon or support");
  f.add(app, "--d", "d", "dimension (1-3)");
  f.add(app, "--alpha", "alpha", "regularity exponent");
  f.add(app, "--gamma", "gamma", "target level");
  f.add(app, "--contrast", "contrast", "amplitude contrast when gamma is not given");
  f.add(app, "--cap-fraction", "cap_fraction", "cap radius as a fraction of the inradius");
  f.add(app, "--geometry", "geometry", "comma-separated shape parameters");
}

void add_common(CLI::App* app, Flags& f, const std::string& config_flag = "--config") {
  f.config_opt = app->add_option(config_flag, f.config, "key = value configuration file");
  f.add(app, "--out", "out", "output directory");
}

std::vector<std::string> with_model(std::vector<std::string> keys) {
  keys.insert(keys.end(), kModelKeys.begin(), kModelKeys.end());
  keys.push_back("config");
  return keys;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density level-set estimation on dyadic histograms"};
  app.require_subcommand(1);

  Flags sample_f, est_f, haus_f, sym_f, sweep_f, val_f;

  auto* sample_cmd = app.add_subcommand("sample", "draw samples from a synthetic model");
  add_common(sample_cmd, sample_f);
  add_model_flags(sample_cmd, sample_f);
  sample_f.add(sample_cmd, "--n", "n", "sample size");
  sample_f.add(sample_cmd, "--seed", "seed", "RNG seed");

  auto* est_cmd = app.add_subcommand("estimate", "estimate the level set from a sample file");
  add_common(est_cmd, est_f);
  add_model_flags(est_cmd, est_f);
  est_f.add(est_cmd, "--samples", "samples", "sample CSV file");
  est_f.add(est_cmd, "--delta", "delta", "confidence parameter in (0,1)");
  est_f.add(est_cmd, "--s-n", "s_n", "refinement sequence value (>= 2)");
  est_f.add(est_cmd, "--j", "j", "fixed resolution");
  est_f.add(est_cmd, "--max-j", "J", "largest resolution searched");
  est_f.jump_opt = est_cmd->add_flag("--jump-mode", est_f.jump_mode, "scale vernier and penalty by 2^(-j'/2)");

  std::string haus_a, haus_b, sym_a, sym_b;
  auto* haus_cmd = app.add_subcommand("hausdorff", "Hausdorff distance between two grid-set files");
  add_common(haus_cmd, haus_f);
  haus_cmd->add_option("set_a", haus_a)->required();
  haus_cmd->add_option("set_b", haus_b)->required();

  auto* sym_cmd = app.add_subcommand("symdiff", "symmetric-difference measure between two grid-set files");
  add_common(sym_cmd, sym_f);
  sym_cmd->add_option("set_a", sym_a)->required();
  sym_cmd->add_option("set_b", sym_b)->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over sample sizes and rate fit");
  add_common(sweep_cmd, sweep_f, "--plan,--config");
  add_model_flags(sweep_cmd, sweep_f);
  sweep_f.add(sweep_cmd, "--method", "method", "adaptive, oracle, fixed-j or support");
  sweep_f.add(sweep_cmd, "--n-grid", "n_grid", "comma-separated increasing sample sizes");
  sweep_f.add(sweep_cmd, "--reps", "replications", "replications per sample size");
  sweep_f.add(sweep_cmd, "--seed", "base_seed", "base seed");
  sweep_f.add(sweep_cmd, "--delta", "delta", "confidence parameter in (0,1)");
  sweep_f.add(sweep_cmd, "--s-n", "s_n", "refinement sequence value (>= 2)");
  sweep_f.add(sweep_cmd, "--j", "j", "resolution for the fixed-j method");
  sweep_f.add(sweep_cmd, "--j-ref", "j_ref", "resolution of the rasterized truth");
  sweep_f.jump_opt = sweep_cmd->add_flag("--jump-mode", sweep_f.jump_mode, "jump-mode selection");

  auto* val_cmd = app.add_subcommand("validate", "check a model against the regularity assumptions");
  add_common(val_cmd, val_f);
  add_model_flags(val_cmd, val_f);
  val_f.add(val_cmd, "--j-ref", "j_ref", "resolution for the inner-cover diagnostic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sample_cmd) {
      Settings s("sample", with_model({"n", "seed", "out"}));
      sample_f.apply(s);
      return cmd_sample(s);
    }
    if (*est_cmd) {
      Settings s("estimate", with_model({"samples", "delta", "s_n", "j", "J", "jump_mode", "out"}));
      est_f.apply(s);
      return cmd_estimate(s);
    }
    if (*haus_cmd) {
      Settings s("hausdorff", {"out", "config"});
      haus_f.apply(s);
      return cmd_compare(s, haus_a, haus_b, false);
    }
    if (*sym_cmd) {
      Settings s("symdiff", {"out", "config"});
      sym_f.apply(s);
      return cmd_compare(s, sym_a, sym_b, true);
    }
    if (*sweep_cmd) {
      Settings s("sweep", with_model({"method", "n_grid", "replications", "base_seed", "seed", "delta", "s_n", "j",
                                      "j_ref", "J", "oracle_alpha", "jump_mode", "losses", "timing", "out"}));
      sweep_f.apply(s);
      return cmd_sweep(s);
    }
    if (*val_cmd) {
      Settings s("validate", with_model({"j_ref", "out"}));
      val_f.apply(s);
      return cmd_validate(s);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConstructionError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kResource;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
