#include "optstab/config.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "optstab/io.hpp"

namespace optstab {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                        message
                                  : message),
      line_(line) {}

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Gradcheck: return "gradcheck";
    case ExperimentKind::Stability: return "stability";
    case ExperimentKind::Bdc: return "bdc";
    case ExperimentKind::Bounds: return "bounds";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Genplot: return "genplot";
  }
  return "?";
}

namespace {

ExperimentKind kind_from_name(const std::string& name, int line) {
  if (name == "gradcheck") return ExperimentKind::Gradcheck;
  if (name == "stability") return ExperimentKind::Stability;
  if (name == "bdc") return ExperimentKind::Bdc;
  if (name == "bounds") return ExperimentKind::Bounds;
  if (name == "sweep") return ExperimentKind::Sweep;
  if (name == "genplot") return ExperimentKind::Genplot;
  throw ConfigError(line, "unknown experiment kind '" + name + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct RawValue {
  std::string value;
  int line = 0;
};

using RawSection = std::map<std::string, RawValue>;
using RawConfig = std::map<std::string, RawSection>;

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(lineno, "unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(lineno, "empty section name");
      }
      raw[section];  // register even if empty
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(lineno, "expected 'key = value'");
    }
    if (section.empty()) {
      throw ConfigError(lineno, "key before any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(lineno, "empty key");
    }
    const std::string value = trim(line.substr(eq + 1));
    if (raw[section].count(key)) {
      throw ConfigError(lineno, "duplicate key '" + section + "." + key + "'");
    }
    raw[section][key] = RawValue{value, lineno};
  }
  return raw;
}

/// Pulls typed values out of a raw section, tracking consumed keys so
/// leftovers can be reported as unknown.
class SectionReader {
 public:
  SectionReader(RawConfig& raw, const std::string& name) : name_(name) {
    auto it = raw.find(name);
    if (it != raw.end()) section_ = &it->second;
  }

  bool has(const std::string& key) const {
    return section_ && section_->count(key) > 0;
  }

  std::string get_string(const std::string& key, const std::string& dflt) {
    if (!has(key)) return dflt;
    consumed_.push_back(key);
    return (*section_)[key].value;
  }

  double get_double(const std::string& key, double dflt) {
    if (!has(key)) return dflt;
    consumed_.push_back(key);
    const RawValue& rv = (*section_)[key];
    try {
      return parse_double(rv.value);
    } catch (const std::exception&) {
      throw ConfigError(rv.line, "expected a number for " + name_ + "." + key +
                                     ", got '" + rv.value + "'");
    }
  }

  long get_long(const std::string& key, long dflt) {
    if (!has(key)) return dflt;
    const RawValue& rv = (*section_)[key];
    const double v = get_double(key, 0.0);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v) {
      throw ConfigError(rv.line, "expected an integer for " + name_ + "." +
                                     key + ", got '" + rv.value + "'");
    }
    return l;
  }

  int get_int(const std::string& key, int dflt) {
    return static_cast<int>(get_long(key, dflt));
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) {
    if (!has(key)) return dflt;
    consumed_.push_back(key);
    const RawValue& rv = (*section_)[key];
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(rv.value, &pos);
      if (pos != rv.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(rv.line, "expected an unsigned integer for " + name_ +
                                     "." + key);
    }
  }

  bool get_bool(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const RawValue& rv = (*section_)[key];
    const std::string v = get_string(key, "");
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(rv.line, "expected true/false for " + name_ + "." + key);
  }

  std::vector<double> get_double_list(const std::string& key) {
    if (!has(key)) return {};
    const RawValue& rv = (*section_)[key];
    const std::string v = get_string(key, "");
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        out.push_back(parse_double(tok));
      } catch (const std::exception&) {
        throw ConfigError(rv.line, "bad number '" + tok + "' in " + name_ +
                                       "." + key);
      }
    }
    return out;
  }

  int line_of(const std::string& key) const {
    return has(key) ? section_->at(key).line : 0;
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, rv] : *section_) {
      if (std::find(consumed_.begin(), consumed_.end(), key) ==
          consumed_.end()) {
        throw ConfigError(rv.line, "unknown key '" + name_ + "." + key + "'");
      }
    }
  }

 private:
  std::string name_;
  RawSection* section_ = nullptr;
  std::vector<std::string> consumed_;
};

Schedule read_schedule(SectionReader& sec) {
  Schedule s;
  const std::string kind = sec.get_string("schedule", "constant");
  if (kind == "constant") {
    s.kind = Schedule::Kind::Constant;
  } else if (kind == "cosine") {
    s.kind = Schedule::Kind::Cosine;
  } else {
    throw ConfigError(sec.line_of("schedule"),
                      "schedule must be constant or cosine");
  }
  s.value = sec.get_double("schedule_value", 1.0);
  s.min_value = sec.get_double("schedule_min", 0.0);
  s.horizon = sec.get_int("schedule_horizon", 1);
  return s;
}

void write_schedule(std::string& out, const Schedule& s) {
  out += "schedule = ";
  out += s.kind == Schedule::Kind::Constant ? "constant" : "cosine";
  out += "\nschedule_value = " + format_double(s.value);
  out += "\nschedule_min = " + format_double(s.min_value);
  out += "\nschedule_horizon = " + std::to_string(s.horizon);
  out += "\n";
}

}  // namespace

int ExperimentConfig::resolved_k() const {
  const long n = data.n;
  if (run.k > 0) {
    if (run.k <= 1 || run.k >= n) {
      throw ConfigError(0, "run.k must satisfy 1 < k < N");
    }
    if (run.b > 0) {
      const long padded = static_cast<long>(run.k) *
                          ((n + run.k - 1) / run.k);
      if (padded / run.k != run.b) {
        throw ConfigError(0, "run.b and run.k are inconsistent with data.n");
      }
    }
    return run.k;
  }
  if (run.b > 0) {
    if (run.b >= n) {
      throw ConfigError(0, "run.b must be smaller than data.n");
    }
    const long k = (n + run.b - 1) / run.b;
    if (k <= 1 || k >= n) {
      throw ConfigError(0, "run.b implies k outside (1, N)");
    }
    const long per_batch = (n + k - 1) / k;
    if (per_batch != run.b) {
      throw ConfigError(0,
                        "run.b does not tile data.n after padding; set run.k");
    }
    return static_cast<int>(k);
  }
  throw ConfigError(0, "one of run.b or run.k is required");
}

int ExperimentConfig::resolved_b() const {
  const int k = resolved_k();
  const long padded = static_cast<long>(k) * ((data.n + k - 1) / k);
  return static_cast<int>(padded / k);
}

long ExperimentConfig::resolved_val_n() const {
  return data.val_n > 0 ? data.val_n : std::max<long>(2, data.n / 2);
}

long ExperimentConfig::resolved_test_n() const {
  return data.test_n > 0 ? data.test_n : std::max<long>(2, data.n / 2);
}

void ExperimentConfig::validate() const {
  if (data.n < 2) throw ConfigError(0, "data.n must be >= 2");
  if (data.d < 1) throw ConfigError(0, "data.d must be >= 1");
  if (data.m < 2) throw ConfigError(0, "data.m must be >= 2");
  if (!(data.sigma > 0.0)) throw ConfigError(0, "data.sigma must be positive");
  if (data.label_noise < 0.0 || data.label_noise > 1.0) {
    throw ConfigError(0, "data.label_noise must lie in [0, 1]");
  }
  if (model.arch == ModelSpec::Arch::Mlp && model.hidden < 1) {
    throw ConfigError(0, "model.hidden must be >= 1 for mlp");
  }
  try {
    optimizer.cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(0, e.what());
  }
  if (optimizer.eta_gjm < 0.0) {
    throw ConfigError(0, "optimizer.eta_gjm must be nonnegative");
  }
  if (losses.empty()) throw ConfigError(0, "loss.kinds must name a loss");
  for (const LossSpec& l : losses) {
    try {
      l.validate();
    } catch (const std::exception& e) {
      throw ConfigError(0, e.what());
    }
  }
  if (!(run.delta > 0.0 && run.delta < 1.0)) {
    throw ConfigError(0, "run.delta must lie in (0, 1)");
  }
  if (run.n_seeds < 1) throw ConfigError(0, "run.n_seeds must be >= 1");
  if (run.probe_size < 1) throw ConfigError(0, "run.probe_size must be >= 1");
  if (run.cs_threshold < 1) {
    throw ConfigError(0, "run.cs_threshold must be >= 1");
  }

  switch (kind) {
    case ExperimentKind::Gradcheck:
      break;
    case ExperimentKind::Stability:
    case ExperimentKind::Bdc:
      if (run.T < (kind == ExperimentKind::Bdc ? 2 : 1)) {
        throw ConfigError(0, "run.T too small for this experiment");
      }
      if (losses.size() != 1) {
        throw ConfigError(0, "stability/bdc experiments take exactly one loss");
      }
      resolved_k();
      break;
    case ExperimentKind::Genplot:
      if (run.epochs < 1) throw ConfigError(0, "run.epochs must be >= 1");
      resolved_k();
      break;
    case ExperimentKind::Sweep:
      if (sweep.field.empty() || sweep.values.empty()) {
        throw ConfigError(0, "sweep experiments need sweep.field and sweep.values");
      }
      if (losses.size() != 1) {
        throw ConfigError(0, "sweep experiments take exactly one loss");
      }
      if (run.T < 1) throw ConfigError(0, "run.T must be >= 1");
      break;
    case ExperimentKind::Bounds: {
      if (bounds.bound != "adam_stability" && bounds.bound != "adam_gen" &&
          bounds.bound != "adamw_stability" && bounds.bound != "adamw_gen" &&
          bounds.bound != "combined" && bounds.bound != "all") {
        throw ConfigError(0,
                          "bounds.bound must be adam_stability|adam_gen|"
                          "adamw_stability|adamw_gen|combined|all");
      }
      break;
    }
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  RawConfig raw = tokenize(text);
  for (const auto& [section, kv] : raw) {
    if (section != "experiment" && section != "data" && section != "model" &&
        section != "optimizer" && section != "loss" && section != "run" &&
        section != "stability" && section != "sweep" && section != "bounds") {
      const int line = kv.empty() ? 0 : kv.begin()->second.line;
      throw ConfigError(line, "unknown section [" + section + "]");
    }
  }

  ExperimentConfig cfg;

  SectionReader exp(raw, "experiment");
  if (!exp.has("kind")) {
    throw ConfigError(0, "missing experiment.kind");
  }
  cfg.kind = kind_from_name(exp.get_string("kind", ""), exp.line_of("kind"));
  exp.finish();

  SectionReader data(raw, "data");
  cfg.data.n = data.get_long("n", cfg.data.n);
  cfg.data.d = data.get_int("d", cfg.data.d);
  cfg.data.m = data.get_int("m", cfg.data.m);
  cfg.data.sigma = data.get_double("sigma", cfg.data.sigma);
  cfg.data.label_noise = data.get_double("label_noise", cfg.data.label_noise);
  cfg.data.seed = data.get_u64("seed", cfg.data.seed);
  cfg.data.val_n = data.get_long("val_n", cfg.data.val_n);
  cfg.data.test_n = data.get_long("test_n", cfg.data.test_n);
  data.finish();

  SectionReader model(raw, "model");
  const std::string arch = model.get_string("arch", "linear");
  if (arch == "linear") {
    cfg.model.arch = ModelSpec::Arch::LinearSoftmax;
  } else if (arch == "mlp") {
    cfg.model.arch = ModelSpec::Arch::Mlp;
  } else {
    throw ConfigError(model.line_of("arch"), "model.arch must be linear or mlp");
  }
  cfg.model.hidden = model.get_int("hidden", cfg.model.hidden);
  model.finish();

  SectionReader opt(raw, "optimizer");
  const std::string rule = opt.get_string("rule", "adam");
  try {
    cfg.optimizer.rule = rule_from_name(rule);
  } catch (const std::exception& e) {
    throw ConfigError(opt.line_of("rule"), e.what());
  }
  cfg.optimizer.cfg.eta = opt.get_double("eta", cfg.optimizer.cfg.eta);
  cfg.optimizer.cfg.beta1 = opt.get_double("beta1", cfg.optimizer.cfg.beta1);
  cfg.optimizer.cfg.beta2 = opt.get_double("beta2", cfg.optimizer.cfg.beta2);
  cfg.optimizer.cfg.epsilon =
      opt.get_double("epsilon", cfg.optimizer.cfg.epsilon);
  cfg.optimizer.cfg.lambda =
      opt.get_double("lambda", cfg.optimizer.cfg.lambda);
  cfg.optimizer.eta_gjm = opt.get_double("eta_gjm", cfg.optimizer.eta_gjm);
  cfg.optimizer.cfg.schedule = read_schedule(opt);
  opt.finish();

  SectionReader loss(raw, "loss");
  const std::string kinds = loss.get_string("kinds", "kl");
  const double clamp_min = loss.get_double("clamp_min", 1e-10);
  const double alpha = loss.get_double("alpha", 0.5);
  cfg.losses.clear();
  {
    std::stringstream ss(kinds);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      if (tok == "kl") {
        cfg.losses.push_back(LossSpec::kl(clamp_min));
      } else if (tok == "gjm") {
        cfg.losses.push_back(LossSpec::gjm(alpha));
      } else {
        throw ConfigError(loss.line_of("kinds"),
                          "loss.kinds entries must be kl or gjm");
      }
    }
  }
  loss.finish();

  SectionReader runsec(raw, "run");
  cfg.run.T = runsec.get_long("T", cfg.run.T);
  cfg.run.b = runsec.get_int("b", cfg.run.b);
  cfg.run.k = runsec.get_int("k", cfg.run.k);
  cfg.run.epochs = runsec.get_int("epochs", cfg.run.epochs);
  cfg.run.n_seeds = runsec.get_int("n_seeds", cfg.run.n_seeds);
  cfg.run.probe_size = runsec.get_int("probe_size", cfg.run.probe_size);
  cfg.run.delta = runsec.get_double("delta", cfg.run.delta);
  cfg.run.cs_threshold = runsec.get_int("cs_threshold", cfg.run.cs_threshold);
  runsec.finish();

  SectionReader stab(raw, "stability");
  if (stab.has("neighbor_batch")) {
    const int line = stab.line_of("neighbor_batch");
    const std::string nb = stab.get_string("neighbor_batch", "random");
    if (nb == "random") {
      cfg.stability.neighbor_batch = 0;
    } else if (nb == "none") {
      cfg.stability.neighbor_batch = -1;
    } else {
      try {
        cfg.stability.neighbor_batch = static_cast<int>(parse_double(nb));
      } catch (const std::exception&) {
        throw ConfigError(line, "neighbor_batch must be random, none or an index");
      }
      if (cfg.stability.neighbor_batch < 1) {
        throw ConfigError(line, "neighbor_batch index must be >= 1");
      }
    }
  }
  stab.finish();

  SectionReader sw(raw, "sweep");
  cfg.sweep.field = sw.get_string("field", "");
  cfg.sweep.values = sw.get_double_list("values");
  sw.finish();

  SectionReader bnd(raw, "bounds");
  cfg.bounds.inputs.gamma = bnd.get_double("gamma", cfg.bounds.inputs.gamma);
  cfg.bounds.inputs.l_max = bnd.get_double("l_max", cfg.bounds.inputs.l_max);
  cfg.bounds.inputs.eta = bnd.get_double("eta", cfg.bounds.inputs.eta);
  cfg.bounds.inputs.b = bnd.get_long("b", cfg.bounds.inputs.b);
  cfg.bounds.inputs.T = bnd.get_long("T", cfg.bounds.inputs.T);
  cfg.bounds.inputs.N = bnd.get_long("n", cfg.bounds.inputs.N);
  cfg.bounds.inputs.delta = bnd.get_double("delta", cfg.bounds.inputs.delta);
  cfg.bounds.inputs.c = bnd.get_double("c", cfg.bounds.inputs.c);
  cfg.bounds.inputs.lambda =
      bnd.get_double("lambda", cfg.bounds.inputs.lambda);
  cfg.bounds.inputs.theta_sup =
      bnd.get_double("theta_sup", cfg.bounds.inputs.theta_sup);
  cfg.bounds.inputs.alpha_schedule = bnd.get_double_list("alpha_values");
  cfg.bounds.bound = bnd.get_string("bound", cfg.bounds.bound);
  cfg.bounds.schedule = read_schedule(bnd);
  cfg.bounds.rho_in = bnd.get_double("rho_in", cfg.bounds.rho_in);
  cfg.bounds.beta_in = bnd.get_double("beta_in", cfg.bounds.beta_in);
  cfg.bounds.compare = bnd.get_bool("compare", cfg.bounds.compare);
  cfg.bounds.gamma_gjm = bnd.get_double("gamma_gjm", cfg.bounds.gamma_gjm);
  cfg.bounds.l_gjm = bnd.get_double("l_gjm", cfg.bounds.l_gjm);
  bnd.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(
    const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  out += "[experiment]\nkind = ";
  out += kind_name(kind);
  out += "\n\n[data]\n";
  out += "n = " + std::to_string(data.n) + "\n";
  out += "d = " + std::to_string(data.d) + "\n";
  out += "m = " + std::to_string(data.m) + "\n";
  out += "sigma = " + format_double(data.sigma) + "\n";
  out += "label_noise = " + format_double(data.label_noise) + "\n";
  out += "seed = " + std::to_string(data.seed) + "\n";
  out += "val_n = " + std::to_string(resolved_val_n()) + "\n";
  out += "test_n = " + std::to_string(resolved_test_n()) + "\n";

  out += "\n[model]\n";
  out += std::string("arch = ") +
         (model.arch == ModelSpec::Arch::LinearSoftmax ? "linear" : "mlp") +
         "\n";
  out += "hidden = " + std::to_string(model.hidden) + "\n";

  out += "\n[optimizer]\n";
  out += std::string("rule = ") + rule_name(optimizer.rule) + "\n";
  out += "eta = " + format_double(optimizer.cfg.eta) + "\n";
  out += "beta1 = " + format_double(optimizer.cfg.beta1) + "\n";
  out += "beta2 = " + format_double(optimizer.cfg.beta2) + "\n";
  out += "epsilon = " + format_double(optimizer.cfg.epsilon) + "\n";
  out += "lambda = " + format_double(optimizer.cfg.lambda) + "\n";
  out += "eta_gjm = " + format_double(optimizer.eta_gjm) + "\n";
  write_schedule(out, optimizer.cfg.schedule);

  out += "\n[loss]\n";
  out += "kinds = ";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (i) out += ",";
    out += losses[i].name();
  }
  out += "\n";
  double clamp_min = 1e-10;
  double alpha = 0.5;
  for (const LossSpec& l : losses) {
    if (l.kind == LossSpec::Kind::Kl) clamp_min = l.clamp_min;
    if (l.kind == LossSpec::Kind::Gjm) alpha = l.alpha;
  }
  out += "clamp_min = " + format_double(clamp_min) + "\n";
  out += "alpha = " + format_double(alpha) + "\n";

  out += "\n[run]\n";
  out += "T = " + std::to_string(run.T) + "\n";
  bool shaped = true;
  try {
    resolved_k();
  } catch (const std::exception&) {
    shaped = false;  // bounds-only configs need no partition shape
  }
  out += "b = " + std::to_string(shaped ? resolved_b() : run.b) + "\n";
  out += "k = " + std::to_string(shaped ? resolved_k() : run.k) + "\n";
  out += "epochs = " + std::to_string(run.epochs) + "\n";
  out += "n_seeds = " + std::to_string(run.n_seeds) + "\n";
  out += "probe_size = " + std::to_string(run.probe_size) + "\n";
  out += "delta = " + format_double(run.delta) + "\n";
  out += "cs_threshold = " + std::to_string(run.cs_threshold) + "\n";

  out += "\n[stability]\n";
  out += "neighbor_batch = ";
  if (stability.neighbor_batch == 0) {
    out += "random";
  } else if (stability.neighbor_batch == -1) {
    out += "none";
  } else {
    out += std::to_string(stability.neighbor_batch);
  }
  out += "\n";

  if (!sweep.field.empty()) {
    out += "\n[sweep]\n";
    out += "field = " + sweep.field + "\n";
    out += "values = ";
    for (std::size_t i = 0; i < sweep.values.size(); ++i) {
      if (i) out += ",";
      out += format_double(sweep.values[i]);
    }
    out += "\n";
  }

  if (kind == ExperimentKind::Bounds) {
    out += "\n[bounds]\n";
    out += "gamma = " + format_double(bounds.inputs.gamma) + "\n";
    out += "l_max = " + format_double(bounds.inputs.l_max) + "\n";
    out += "eta = " + format_double(bounds.inputs.eta) + "\n";
    out += "b = " + std::to_string(bounds.inputs.b) + "\n";
    out += "T = " + std::to_string(bounds.inputs.T) + "\n";
    out += "n = " + std::to_string(bounds.inputs.N) + "\n";
    out += "delta = " + format_double(bounds.inputs.delta) + "\n";
    out += "c = " + format_double(bounds.inputs.c) + "\n";
    out += "lambda = " + format_double(bounds.inputs.lambda) + "\n";
    out += "theta_sup = " + format_double(bounds.inputs.theta_sup) + "\n";
    out += "bound = " + bounds.bound + "\n";
    if (!bounds.inputs.alpha_schedule.empty()) {
      out += "alpha_values = ";
      for (std::size_t i = 0; i < bounds.inputs.alpha_schedule.size(); ++i) {
        if (i) out += ",";
        out += format_double(bounds.inputs.alpha_schedule[i]);
      }
      out += "\n";
    }
    write_schedule(out, bounds.schedule);
    out += "rho_in = " + format_double(bounds.rho_in) + "\n";
    out += "beta_in = " + format_double(bounds.beta_in) + "\n";
    out += std::string("compare = ") + (bounds.compare ? "true" : "false") +
           "\n";
    out += "gamma_gjm = " + format_double(bounds.gamma_gjm) + "\n";
    out += "l_gjm = " + format_double(bounds.l_gjm) + "\n";
  }
  return out;
}

}  // namespace optstab
