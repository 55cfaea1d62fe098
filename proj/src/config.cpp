#include "odts/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "odts/ergodicity.hpp"
#include "odts/likelihood.hpp"
#include "odts/mle.hpp"
#include "odts/simulate.hpp"
#include "odts/stats.hpp"

namespace odts {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class KeyValueFile {
 public:
  explicit KeyValueFile(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          " is not `key = value`");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key in config");
      if (!entries_.emplace(key, value).second) {
        throw ConfigError("duplicate config key: " + key);
      }
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    std::string v = it->second;
    entries_.erase(it);
    return v;
  }

  void reject_leftovers() const {
    if (!entries_.empty()) {
      throw ConfigError("unknown config key: " + entries_.begin()->first);
    }
  }

 private:
  std::map<std::string, std::string> entries_;
};

double parse_real(const std::string& v, const std::string& key) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " needs a real value, got `" + v + "`");
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " needs an integer, got `" + v + "`");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " needs a u64, got `" + v + "`");
  }
}

std::vector<double> parse_reals(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_real(tok, key));
  if (out.empty()) throw ConfigError("config key " + key + " is empty");
  return out;
}

std::vector<long long> parse_ints(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  std::vector<long long> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_int(tok, key));
  if (out.empty()) throw ConfigError("config key " + key + " is empty");
  return out;
}

ModelSpec parse_model(KeyValueFile& kv) {
  const auto fam_s = kv.take("model.family");
  if (!fam_s) throw ConfigError("missing required key model.family");
  const Family fam = family_from_name(*fam_s);
  auto real_key = [&](const char* key, std::optional<double> fallback =
                                           std::nullopt) {
    const auto v = kv.take(key);
    if (!v) {
      if (fallback) return *fallback;
      throw ConfigError(std::string("missing required key ") + key);
    }
    return parse_real(*v, key);
  };
  if (fam == Family::threshold) {
    ThresholdParams p;
    p.omega = real_key("model.omega");
    p.a = real_key("model.a");
    p.b = real_key("model.b");
    p.c = real_key("model.c", 0.0);
    p.d = real_key("model.d", 0.0);
    p.L = real_key("model.L");
    p.U = real_key("model.U");
    return make_threshold(p);
  }
  if (fam == Family::loglinear) {
    LogLinearParams p;
    p.d = real_key("model.d");
    p.a = real_key("model.a");
    p.b = real_key("model.b");
    return make_loglinear(p);
  }
  GarchParams p;
  p.d = real_key("model.d");
  p.a = real_key("model.a");
  p.b = real_key("model.b");
  return make_garch(p);
}

std::optional<ParameterSpace> parse_space(KeyValueFile& kv,
                                          const ModelSpec& model,
                                          bool required) {
  const auto fam_s = kv.take("space.family");
  const auto variant_s = kv.take("space.variant");
  const auto lower_s = kv.take("space.lower");
  const auto upper_s = kv.take("space.upper");
  const auto floor_s = kv.take("space.alpha_floor");
  const auto margin_s = kv.take("space.stability_margin");
  const auto l_s = kv.take("space.L");
  const auto u_s = kv.take("space.U");
  const bool any = fam_s || variant_s || lower_s || upper_s || floor_s ||
                   margin_s || l_s || u_s;
  if (!any && !required) return std::nullopt;

  const Family fam = fam_s ? family_from_name(*fam_s) : model.family();
  if (fam == Family::garch) {
    throw ConfigError("no fitting parameter space is defined for garch");
  }
  const SpaceVariant variant =
      variant_s ? variant_from_name(*variant_s, fam)
                : (fam == Family::threshold ? SpaceVariant::threshold_wellspecified
                                            : SpaceVariant::loglinear_stable);
  ParameterSpace space = default_space(fam, variant);
  space.variant = variant;
  if (lower_s) space.lower = parse_reals(*lower_s, "space.lower");
  if (upper_s) space.upper = parse_reals(*upper_s, "space.upper");
  if (floor_s) space.alpha_floor = parse_real(*floor_s, "space.alpha_floor");
  if (margin_s) {
    space.stability_margin = parse_real(*margin_s, "space.stability_margin");
  }
  if (fam == Family::threshold) {
    if (model.family() == Family::threshold) {
      space.threshold_L = model.threshold().L;
      space.threshold_U = model.threshold().U;
    }
    if (l_s) space.threshold_L = parse_real(*l_s, "space.L");
    if (u_s) space.threshold_U = parse_real(*u_s, "space.U");
  } else if (l_s || u_s) {
    throw ConfigError("space.L / space.U apply to threshold spaces only");
  }
  space.validate();
  return space;
}

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::verify: return "verify";
    case Command::fit: return "fit";
    case Command::consistency: return "consistency";
    case Command::misspec: return "misspec";
  }
  return "?";
}

Command command_from_name(std::string_view name) {
  if (name == "simulate") return Command::simulate;
  if (name == "verify") return Command::verify;
  if (name == "fit") return Command::fit;
  if (name == "consistency") return Command::consistency;
  if (name == "misspec") return Command::misspec;
  throw ConfigError("unknown command: " + std::string(name));
}

ExperimentConfig parse_config_text(const std::string& text, Command command) {
  KeyValueFile kv(text);
  ExperimentConfig cfg;
  cfg.command = command;
  if (const auto c = kv.take("command")) {
    if (command_from_name(*c) != command) {
      throw ConfigError("config `command` key does not match the CLI command");
    }
  }
  cfg.model = parse_model(kv);

  const bool space_required = command != Command::simulate;
  cfg.space = parse_space(kv, cfg.model, space_required);

  // verify leans on larger Monte Carlo defaults than the experiments do
  if (command == Command::verify) {
    cfg.run.n = 1000000;       // stationary-moment horizon
    cfg.run.replicates = 100000;  // coupling Monte Carlo replicates
    cfg.run.burn_in = 10000;
  }
  if (const auto v = kv.take("run.n")) cfg.run.n = parse_int(*v, "run.n");
  if (const auto v = kv.take("run.n_grid")) {
    cfg.run.n_grid = parse_ints(*v, "run.n_grid");
  }
  if (const auto v = kv.take("run.burn_in")) {
    cfg.run.burn_in = parse_int(*v, "run.burn_in");
  }
  if (const auto v = kv.take("run.replicates")) {
    cfg.run.replicates = static_cast<int>(parse_int(*v, "run.replicates"));
  }
  if (const auto v = kv.take("run.seed")) cfg.run.seed = parse_u64(*v, "run.seed");
  if (const auto v = kv.take("run.starts")) {
    cfg.run.starts = static_cast<int>(parse_int(*v, "run.starts"));
  }
  if (const auto v = kv.take("run.truncation_m")) {
    cfg.run.truncation_m =
        *v == "auto" ? -1 : static_cast<int>(parse_int(*v, "run.truncation_m"));
  }
  if (const auto v = kv.take("run.x0")) {
    cfg.run.x0 = *v == "auto" ? std::numeric_limits<double>::quiet_NaN()
                              : parse_real(*v, "run.x0");
  }
  if (const auto v = kv.take("io.out")) cfg.io.out = *v;
  if (const auto v = kv.take("io.formats")) {
    cfg.io.csv = cfg.io.json = false;
    std::istringstream in(*v);
    std::string tok;
    while (in >> tok) {
      if (tok == "csv") cfg.io.csv = true;
      else if (tok == "json") cfg.io.json = true;
      else throw ConfigError("io.formats entries must be csv or json");
    }
    if (!cfg.io.csv && !cfg.io.json) {
      throw ConfigError("io.formats must keep at least one format");
    }
  }
  kv.reject_leftovers();

  // Cross-field validation before any computation.
  if (cfg.run.n < 1) throw ConfigError("run.n must be >= 1");
  if (cfg.run.burn_in < 0) throw ConfigError("run.burn_in must be >= 0");
  if (cfg.run.replicates < 1) throw ConfigError("run.replicates must be >= 1");
  if (cfg.run.starts < 1) throw ConfigError("run.starts must be >= 1");
  if (command == Command::consistency || command == Command::misspec) {
    if (cfg.run.n_grid.empty()) cfg.run.n_grid = {1000, 10000};
    for (long long n : cfg.run.n_grid) {
      if (n < 10) throw ConfigError("run.n_grid entries must be >= 10");
    }
  } else if (!cfg.run.n_grid.empty()) {
    throw ConfigError("run.n_grid applies to experiment commands only");
  }
  switch (command) {
    case Command::verify:
      cfg.model.validate();
      if (!cfg.space->feasible(cfg.space->theta_from_model(cfg.model), 1e-12)) {
        throw ConfigError("model parameters lie outside the configured space");
      }
      break;
    case Command::consistency: {
      cfg.model.validate();
      if (cfg.model.family() != cfg.space->family) {
        throw ConfigError("consistency experiment needs matching families");
      }
      break;
    }
    case Command::misspec:
      cfg.model.validate();
      if (cfg.model.family() == cfg.space->family) {
        throw ConfigError("misspec experiment needs distinct families");
      }
      break;
    case Command::fit:
      cfg.model.validate();
      if (cfg.model.family() == Family::garch) {
        throw ConfigError("count families cannot fit garch observations");
      }
      break;
    case Command::simulate:
      // relaxed feasibility is checked inside simulate()
      break;
  }

  // Resolve auto defaults so the echoed config is fully explicit.
  if (std::isnan(cfg.run.x0)) cfg.run.x0 = default_initial_state(cfg.model);
  if (cfg.run.truncation_m < 0 && cfg.space) {
    cfg.run.truncation_m =
        default_truncation_depth(cfg.space->stability_margin);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, Command command,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::string> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  ExperimentConfig cfg = parse_config_text(text, command);
  if (seed_override) cfg.run.seed = *seed_override;
  if (out_override) cfg.io.out = *out_override;
  return cfg;
}

std::string render_resolved_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "command = " << command_name(cfg.command) << '\n';
  os << "model.family = " << family_name(cfg.model.family()) << '\n';
  if (cfg.model.family() == Family::threshold) {
    const auto& p = cfg.model.threshold();
    os << "model.omega = " << fmt_double(p.omega) << '\n';
    os << "model.a = " << fmt_double(p.a) << '\n';
    os << "model.b = " << fmt_double(p.b) << '\n';
    os << "model.c = " << fmt_double(p.c) << '\n';
    os << "model.d = " << fmt_double(p.d) << '\n';
    os << "model.L = " << fmt_double(p.L) << '\n';
    os << "model.U = " << (std::isinf(p.U) ? "inf" : fmt_double(p.U)) << '\n';
  } else if (cfg.model.family() == Family::loglinear) {
    const auto& p = cfg.model.loglinear();
    os << "model.d = " << fmt_double(p.d) << '\n';
    os << "model.a = " << fmt_double(p.a) << '\n';
    os << "model.b = " << fmt_double(p.b) << '\n';
  } else {
    const auto& p = cfg.model.garch();
    os << "model.d = " << fmt_double(p.d) << '\n';
    os << "model.a = " << fmt_double(p.a) << '\n';
    os << "model.b = " << fmt_double(p.b) << '\n';
  }
  if (cfg.space) {
    const auto& s = *cfg.space;
    os << "space.family = " << family_name(s.family) << '\n';
    os << "space.variant = " << variant_name(s.variant) << '\n';
    os << "space.lower =";
    for (double v : s.lower) os << ' ' << fmt_double(v);
    os << "\nspace.upper =";
    for (double v : s.upper) os << ' ' << fmt_double(v);
    os << '\n';
    if (s.family == Family::threshold) {
      os << "space.alpha_floor = " << fmt_double(s.alpha_floor) << '\n';
    }
    os << "space.stability_margin = " << fmt_double(s.stability_margin) << '\n';
    if (s.family == Family::threshold) {
      os << "space.L = " << fmt_double(s.threshold_L) << '\n';
      os << "space.U = "
         << (std::isinf(s.threshold_U) ? "inf" : fmt_double(s.threshold_U))
         << '\n';
    }
  }
  os << "run.n = " << cfg.run.n << '\n';
  if (!cfg.run.n_grid.empty()) {
    os << "run.n_grid =";
    for (long long n : cfg.run.n_grid) os << ' ' << n;
    os << '\n';
  }
  os << "run.burn_in = " << cfg.run.burn_in << '\n';
  os << "run.replicates = " << cfg.run.replicates << '\n';
  os << "run.seed = " << cfg.run.seed << '\n';
  os << "run.starts = " << cfg.run.starts << '\n';
  if (cfg.space) os << "run.truncation_m = " << cfg.run.truncation_m << '\n';
  os << "run.x0 = " << fmt_double(cfg.run.x0) << '\n';
  os << "io.out = " << cfg.io.out << '\n';
  os << "io.formats =" << (cfg.io.csv ? " csv" : "")
     << (cfg.io.json ? " json" : "") << '\n';
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write artifact: " + path.string());
  out << content;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.io.out, ec);
  if (ec) throw ConfigError("cannot create output directory: " + cfg.io.out);

  write_file(fs::path(cfg.io.out) / "resolved.config",
             render_resolved_config(cfg));

  switch (cfg.command) {
    case Command::simulate: {
      RngStream rng(cfg.run.seed, derive_stream_id(stream_purpose::trajectory));
      const auto traj =
          simulate(cfg.model, cfg.run.x0, cfg.run.n, rng, cfg.run.burn_in);
      std::ostringstream os;
      write_trajectory_csv(os, traj);
      write_file(fs::path(cfg.io.out) / "trajectory.csv", os.str());
      return 0;
    }
    case Command::verify: {
      VerifyOptions opt;
      opt.seed = cfg.run.seed;
      opt.qsharp_replicates = cfg.run.replicates;
      opt.identity_replicates = cfg.run.replicates;
      opt.moment_horizon = cfg.run.n;
      opt.burn_in = cfg.run.burn_in;
      const auto report = run_verification(cfg.model, opt);
      write_file(fs::path(cfg.io.out) / "verify.report", report.render());
      return report.all_pass() ? 0 : 3;
    }
    case Command::fit: {
      RngStream traj_rng(cfg.run.seed,
                         derive_stream_id(stream_purpose::trajectory));
      // Keep the pre-sample segment around: it feeds the stationary
      // approximation of the attained likelihood below.
      const auto full = simulate(cfg.model, cfg.run.x0,
                                 cfg.run.burn_in + cfg.run.n, traj_rng, 0);
      Trajectory traj;
      traj.model = full.model;
      traj.seeds = full.seeds;
      traj.burn_in = cfg.run.burn_in;
      traj.x.assign(full.x.begin() + cfg.run.burn_in, full.x.end());
      traj.y.assign(full.y.begin() + cfg.run.burn_in, full.y.end());
      std::ostringstream os;
      write_trajectory_csv(os, traj);
      write_file(fs::path(cfg.io.out) / "trajectory.csv", os.str());
      RngStream fit_rng(cfg.run.seed,
                        derive_stream_id(stream_purpose::fit_starts));
      const auto result = fit(*cfg.space, traj.y, default_fit_x0(*cfg.space),
                              cfg.run.starts, fit_rng);
      auto summary = fit_summary_json(*cfg.space, result);
      const int m = cfg.run.truncation_m;
      summary["truncation_m"] = m;
      if (cfg.run.burn_in >= m + 1) {
        const ModelSpec hat = cfg.space->model_from_theta(result.theta_hat);
        const double stat =
            stationary_loglik(hat, full.y, cfg.run.burn_in, m).value;
        summary["stationary_loglik"] = stat;
        summary["stationary_gap"] = std::fabs(result.loglik - stat);
      }
      write_file(fs::path(cfg.io.out) / "summary.json",
                 summary.dump(2) + "\n");
      return 0;
    }
    case Command::consistency:
    case Command::misspec: {
      const auto report =
          cfg.command == Command::consistency
              ? consistency_experiment(cfg.model, *cfg.space, cfg.run.n_grid,
                                       cfg.run.replicates, cfg.run.seed,
                                       cfg.run.starts, cfg.run.burn_in)
              : misspecification_experiment(cfg.model, *cfg.space,
                                            cfg.run.n_grid, cfg.run.replicates,
                                            cfg.run.seed, cfg.run.starts,
                                            cfg.run.burn_in);
      if (cfg.io.csv) {
        std::ostringstream os;
        write_consistency_csv(os, report);
        write_file(fs::path(cfg.io.out) / "consistency.csv", os.str());
      }
      if (cfg.io.json) {
        write_file(fs::path(cfg.io.out) / "summary.json",
                   consistency_summary_json(report).dump(2) + "\n");
      }
      return 0;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace odts
